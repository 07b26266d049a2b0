//! Scalar GARCH(1,1): volatility filter, Gaussian QMLE and simulation.
//!
//! X_t = sigma_t eta_t,  sigma_t^2 = omega + alpha X_{t-1}^2 + beta sigma_{t-1}^2.

use serde::{Deserialize, Serialize};

use crate::diagnostics::CausalModel;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::space::ObjectSeries;

/// Shortest series accepted by [`garch11_qmle`].
pub const MIN_QMLE_LEN: usize = 50;

/// Simulated states beyond this multiple of max(1, unconditional variance) abort.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garch11Params {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Garch11Params {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { omega, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Requires omega > 0, alpha >= 0, beta >= 0 and alpha + beta < 1.
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega.is_finite()
            && self.omega > 0.0
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "GARCH(1,1) parameters ({}, {}, {}) violate omega > 0, alpha, beta >= 0, alpha + beta < 1",
                self.omega, self.alpha, self.beta
            )))
        }
    }

    /// omega / (1 - alpha - beta).
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }
}

/// Conditional variances sigma_t^2, starting from `sigma2_init` at t = 1.
pub fn garch11_filter(x: &[f64], theta: &Garch11Params, sigma2_init: f64) -> Result<Vec<f64>> {
    theta.validate()?;
    if !(sigma2_init > 0.0 && sigma2_init.is_finite()) {
        return Err(Error::NonPositiveVariance(0));
    }
    let mut out = Vec::with_capacity(x.len());
    let mut s2 = sigma2_init;
    for t in 0..x.len() {
        if t > 0 {
            s2 = theta.omega + theta.alpha * x[t - 1] * x[t - 1] + theta.beta * s2;
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::NonPositiveVariance(t));
        }
        out.push(s2);
    }
    Ok(out)
}

/// Filter initialisation: the sample variance, or the unconditional
/// variance of `theta` when the sample variance is zero.
pub fn initial_variance(x: &[f64], theta: &Garch11Params) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 && var.is_finite() {
        var
    } else {
        theta.unconditional_variance()
    }
}

/// Residuals eta_t = X_t / sigma_t.
pub fn garch11_residuals(x: &[f64], theta: &Garch11Params) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let s2 = garch11_filter(x, theta, initial_variance(x, theta))?;
    Ok(x.iter().zip(&s2).map(|(v, s)| v / s.sqrt()).collect())
}

/// Average negative Gaussian quasi-log-likelihood.
fn neg_loglik(x: &[f64], theta: &Garch11Params, sigma2_init: f64) -> f64 {
    let mut s2 = sigma2_init;
    let mut acc = 0.0;
    for t in 0..x.len() {
        if t > 0 {
            s2 = theta.omega + theta.alpha * x[t - 1] * x[t - 1] + theta.beta * s2;
        }
        acc += s2.ln() + x[t] * x[t] / s2;
    }
    0.5 * acc / x.len() as f64
}

/// Unconstrained coordinates: omega = exp(u0), and (alpha, beta, 1 - alpha - beta)
/// proportional to (exp(u1), exp(u2), 1).
fn from_unconstrained(u: &[f64]) -> Garch11Params {
    let omega = u[0].exp();
    let (e1, e2) = (u[1].exp(), u[2].exp());
    let denom = 1.0 + e1 + e2;
    Garch11Params {
        omega,
        alpha: e1 / denom,
        beta: e2 / denom,
    }
}

fn to_unconstrained(p: &Garch11Params) -> [f64; 3] {
    let rest = 1.0 - p.alpha - p.beta;
    [p.omega.ln(), (p.alpha / rest).ln(), (p.beta / rest).ln()]
}

/// Gaussian QMLE of (omega, alpha, beta) by Nelder-Mead over several
/// starting points, followed by a restart from the best candidate.
pub fn garch11_qmle(x: &[f64]) -> Result<Garch11Params> {
    if x.len() < MIN_QMLE_LEN {
        return Err(Error::TooShort {
            needed: MIN_QMLE_LEN,
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::EstimationFailed("non-finite observation".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::EstimationFailed("series has zero variance".into()));
    }
    let objective = |u: &[f64]| {
        let p = from_unconstrained(u);
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        neg_loglik(x, &p, var)
    };
    let opts = NelderMeadOptions {
        x_tol: 1e-8,
        f_tol: 1e-10,
        max_evals: 5000,
        initial_step: 0.5,
    };

    let mut best: Option<crate::optim::Minimum> = None;
    for (a, b) in [(0.05, 0.90), (0.10, 0.50), (0.20, 0.20), (0.02, 0.02)] {
        let start = Garch11Params {
            omega: var * (1.0 - a - b),
            alpha: a,
            beta: b,
        };
        let m = nelder_mead(objective, &to_unconstrained(&start), &opts);
        if best.as_ref().is_none_or(|cur| m.value < cur.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let refined = nelder_mead(objective, &best.x, &opts);
    let result = if refined.value <= best.value { refined } else { best };
    if !result.converged || !result.value.is_finite() {
        return Err(Error::EstimationFailed(format!(
            "simplex search did not converge within {} evaluations",
            opts.max_evals
        )));
    }
    let p = from_unconstrained(&result.x);
    p.validate()
        .map_err(|e| Error::EstimationFailed(format!("estimate left the parameter space: {e}")))?;
    Ok(p)
}

/// Simulates X_t = sigma_t eta_t from the innovations, starting at the
/// unconditional variance and discarding the first `burn_in` values.
pub fn garch11_simulate(theta: &Garch11Params, innovations: &[f64], burn_in: usize) -> Result<Vec<f64>> {
    theta.validate()?;
    if innovations.len() < burn_in {
        return Err(Error::TooShort {
            needed: burn_in,
            found: innovations.len(),
        });
    }
    let mut s2 = theta.unconditional_variance();
    // relative to the model's own scale: a nearly integrated fit starts far above 1
    let limit = BLOWUP_LIMIT * s2.max(1.0);
    let mut prev = 0.0f64;
    let mut out = Vec::with_capacity(innovations.len() - burn_in);
    for (t, &eta) in innovations.iter().enumerate() {
        if t > 0 {
            s2 = theta.omega + theta.alpha * prev * prev + theta.beta * s2;
        }
        let xt = s2.sqrt() * eta;
        if !xt.is_finite() || xt.abs() > limit || s2 > limit {
            return Err(Error::NumericalBlowup {
                step: t,
                value: s2.max(xt.abs()),
                limit,
            });
        }
        prev = xt;
        if t >= burn_in {
            out.push(xt);
        }
    }
    Ok(out)
}

/// GARCH(1,1) as a [`CausalModel`] on scalar series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Garch11;

fn require_scalar(series: &ObjectSeries) -> Result<()> {
    if series.space().is_scalar() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "GARCH(1,1) requires a scalar series".into(),
        ))
    }
}

impl CausalModel for Garch11 {
    type Params = Garch11Params;

    fn name(&self) -> &'static str {
        "garch11"
    }

    fn estimate(&self, series: &ObjectSeries) -> Result<Garch11Params> {
        require_scalar(series)?;
        garch11_qmle(series.as_flat())
    }

    fn residuals(&self, series: &ObjectSeries, params: &Garch11Params) -> Result<ObjectSeries> {
        require_scalar(series)?;
        ObjectSeries::scalar(garch11_residuals(series.as_flat(), params)?)
    }

    fn simulate(
        &self,
        params: &Garch11Params,
        innovations: &ObjectSeries,
        burn_in: usize,
    ) -> Result<ObjectSeries> {
        require_scalar(innovations)?;
        ObjectSeries::scalar(garch11_simulate(params, innovations.as_flat(), burn_in)?)
    }
}

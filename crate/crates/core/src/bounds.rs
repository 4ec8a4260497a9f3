//! Closed-form lower bounds on error probability and query budget.
//!
//! Every bound comes in a raw form (the formula as written, possibly outside
//! `[0, 1]`) and a clamped form. The zero-query Fano bounds also have an
//! `Approx` mode that applies the usual asymptotic simplifications.

use serde::{Deserialize, Serialize};

use crate::divergence::{hellinger2, symmetric_kl, DivergenceError, Distribution};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("k = {0} must be at least 2")]
    TooFewClusters(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Approx,
}

/// Inputs to [`lb_error_prob`]: `k` clusters of `a` elements each, a budget of
/// `q` queries and `h = H(f₊‖f₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundInputs {
    pub k: usize,
    pub a: usize,
    pub q: f64,
    pub h: f64,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn check_h(h: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&h) {
        Ok(())
    } else {
        Err(BoundsError::Invalid(format!("h = {h} is outside [0, 1]")))
    }
}

/// `1 − (2/k)(1 + √(4Q/(ak)))² − 4Q/(ak(k−1)) − 2√a·h`, unclamped.
pub fn lb_error_prob_raw(x: &LowerBoundInputs) -> Result<f64, BoundsError> {
    if x.k < 2 {
        return Err(BoundsError::TooFewClusters(x.k));
    }
    if x.a == 0 {
        return Err(BoundsError::Invalid("a must be positive".into()));
    }
    if !(x.q >= 0.0) {
        return Err(BoundsError::Invalid(format!("Q = {} must be non-negative", x.q)));
    }
    check_h(x.h)?;
    let (k, a) = (x.k as f64, x.a as f64);
    let root = 1.0 + (4.0 * x.q / (a * k)).sqrt();
    Ok(1.0 - 2.0 / k * root * root - 4.0 * x.q / (a * k * (k - 1.0)) - 2.0 * a.sqrt() * x.h)
}

/// Lower bound on the error probability of any algorithm that asks at most
/// `Q` queries on `k` clusters of size `a`.
pub fn lb_error_prob(x: &LowerBoundInputs) -> Result<f64, BoundsError> {
    lb_error_prob_raw(x).map(clamp01)
}

/// `min(nk, k²/h²)`, the order of queries needed for exact recovery; `nk` at `h = 0`.
pub fn lb_query_budget(n: usize, k: usize, h: f64) -> f64 {
    let nk = n as f64 * k as f64;
    if h > 0.0 {
        nk.min((k * k) as f64 / (h * h))
    } else {
        nk
    }
}

fn check_nk(n: usize, k: usize) -> Result<(), BoundsError> {
    if k < 2 {
        return Err(BoundsError::TooFewClusters(k));
    }
    if n < 2 {
        return Err(BoundsError::Invalid(format!("n = {n} must be at least 2")));
    }
    Ok(())
}

/// Zero-query Fano bound through `Δ = D(f₊‖f₋) + D(f₋‖f₊)`, unclamped:
/// `1 − ((2n/k)Δ + ln 2) / ln K` with `K = (n²/2)(1 − 1/k)`, or
/// `1 − nΔ/(k ln n)` in `Approx` mode.
pub fn fano_zero_query_kl_raw(
    n: usize,
    k: usize,
    f_plus: &Distribution,
    f_minus: &Distribution,
    mode: Mode,
) -> Result<f64, BoundsError> {
    check_nk(n, k)?;
    let delta = symmetric_kl(f_plus, f_minus)?;
    let (nf, kf) = (n as f64, k as f64);
    Ok(match mode {
        Mode::Exact => {
            let big_k = nf * nf / 2.0 * (1.0 - 1.0 / kf);
            1.0 - (2.0 * nf / kf * delta + std::f64::consts::LN_2) / big_k.ln()
        }
        Mode::Approx => 1.0 - nf * delta / (kf * nf.ln()),
    })
}

pub fn fano_zero_query_kl(
    n: usize,
    k: usize,
    f_plus: &Distribution,
    f_minus: &Distribution,
    mode: Mode,
) -> Result<f64, BoundsError> {
    fano_zero_query_kl_raw(n, k, f_plus, f_minus, mode).map(clamp01)
}

/// Zero-query bound through the Hellinger divergence:
/// `max(0, (1 − H²)^(2n/k) − √(k/n))²`, with `e^(−(2n/k)H²)` for the power
/// in `Approx` mode.
pub fn fano_zero_query_hellinger(
    n: usize,
    k: usize,
    f_plus: &Distribution,
    f_minus: &Distribution,
    mode: Mode,
) -> Result<f64, BoundsError> {
    if n == 0 || k == 0 {
        return Err(BoundsError::Invalid("n and k must be positive".into()));
    }
    let h2 = hellinger2(f_plus, f_minus)?;
    let m = 2.0 * n as f64 / k as f64;
    let power = match mode {
        Mode::Exact => (m * (-h2).ln_1p()).exp(),
        Mode::Approx => (-m * h2).exp(),
    };
    let root = (power - (k as f64 / n as f64).sqrt()).max(0.0);
    Ok(clamp01(root * root))
}

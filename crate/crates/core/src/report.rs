//! Per-run results shared by the solvers, the harness and the CLI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimation::{Estimates, Threshold};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Mc,
    Lv,
    Baseline,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Mc, Algo::Lv, Algo::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Mc => "mc",
            Algo::Lv => "lv",
            Algo::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected mc, lv or baseline)"))
    }
}

/// Constants a Monte Carlo run actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants {
    pub c: f64,
    pub c_prime: f64,
    pub scale: f64,
    pub b: f64,
    pub band: String,
    pub phase1_target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesSummary {
    pub p_plus: Option<String>,
    pub p_minus: Option<String>,
    pub h: Option<f64>,
    /// `None` stands for the unbounded threshold.
    pub m_threshold: Option<usize>,
}

impl From<&Estimates> for EstimatesSummary {
    fn from(e: &Estimates) -> Self {
        Self {
            p_plus: e.p_plus.as_ref().map(ToString::to_string),
            p_minus: e.p_minus.as_ref().map(ToString::to_string),
            h: e.h,
            m_threshold: match e.m_threshold {
                Threshold::Finite(m) => Some(m),
                Threshold::Unbounded => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub fingerprint: String,
    pub seed: u64,
    pub queries: u64,
    /// Per-phase counts; zero for solvers without phases.
    pub q_phase1: u64,
    pub q_phase2: u64,
    pub q_phase3: u64,
    pub exact: bool,
    pub misassigned: usize,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<EffectiveConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimatesSummary>,
    /// Total size of all waiting lists (Monte Carlo only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waiting: Option<usize>,
}

impl RunReport {
    /// A report with the verdict filled in from `instance.truth`.
    pub(crate) fn new(
        algo: Algo,
        instance: &Instance,
        seed: u64,
        queries: u64,
        recovered: &[Vec<u32>],
        wall_ms: f64,
    ) -> Self {
        let misassigned = instance.truth.misassigned(recovered);
        Self {
            algo,
            n: instance.n(),
            k: instance.k(),
            fingerprint: instance.fingerprint(),
            seed,
            queries,
            q_phase1: 0,
            q_phase2: 0,
            q_phase3: 0,
            exact: misassigned == 0,
            misassigned,
            wall_ms,
            constants: None,
            estimates: None,
            waiting: None,
        }
    }
}

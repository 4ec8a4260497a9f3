//! Finite probability mass functions over a shared ordered support, and the
//! divergences between them (squared Hellinger, Hellinger, KL, symmetric KL).
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Tolerance on `Σ p = 1` accepted by [`Distribution::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DivergenceError {
    #[error("support mismatch")]
    SupportMismatch,
    #[error("support needs at least two points, got {0}")]
    SupportTooSmall(usize),
    #[error("support values must be finite and strictly increasing")]
    SupportNotIncreasing,
    #[error("expected {expected} probabilities, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability {value} at index {index} is outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("all counts are zero")]
    EmptyCounts,
    #[error("cannot parse distribution `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// The ordered similarity values `a_1 < a_2 < ... < a_q` a side-information
/// entry can take.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    values: Vec<f64>,
}

impl Support {
    pub fn new(values: Vec<f64>) -> Result<Arc<Self>, DivergenceError> {
        if values.len() < 2 {
            return Err(DivergenceError::SupportTooSmall(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DivergenceError::SupportNotIncreasing);
        }
        Ok(Arc::new(Self { values }))
    }

    /// `{0, 1}`, the support of every Bernoulli pmf.
    pub fn binary() -> Arc<Self> {
        Arc::new(Self {
            values: vec![0.0, 1.0],
        })
    }

    /// `{0, 1, ..., q-1}`.
    pub fn indices(q: usize) -> Result<Arc<Self>, DivergenceError> {
        Self::new((0..q).map(|i| i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn same_support(a: &Arc<Support>, b: &Arc<Support>) -> bool {
    Arc::ptr_eq(a, b) || a.values == b.values
}

/// A pmf over a [`Support`]. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Arc<Support>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(support: Arc<Support>, probs: Vec<f64>) -> Result<Self, DivergenceError> {
        if probs.len() != support.len() {
            return Err(DivergenceError::LengthMismatch {
                expected: support.len(),
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(DivergenceError::InvalidProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(DivergenceError::NotNormalized(sum));
        }
        Ok(Self { support, probs })
    }

    /// Bernoulli(p) on `{0, 1}`: mass `p` on the value 1.
    pub fn bernoulli(p: f64) -> Result<Self, DivergenceError> {
        Self::new(Support::binary(), vec![1.0 - p, p])
    }

    /// Plug-in empirical pmf from per-support-point counts.
    pub fn from_counts(support: Arc<Support>, counts: &[u64]) -> Result<Self, DivergenceError> {
        if counts.len() != support.len() {
            return Err(DivergenceError::LengthMismatch {
                expected: support.len(),
                got: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(DivergenceError::EmptyCounts);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { support, probs })
    }

    /// Point mass on the support point with the given index.
    pub fn point_mass(support: Arc<Support>, index: usize) -> Result<Self, DivergenceError> {
        let mut probs = vec![0.0; support.len()];
        match probs.get_mut(index) {
            Some(p) => *p = 1.0,
            None => {
                return Err(DivergenceError::LengthMismatch {
                    expected: support.len(),
                    got: index + 1,
                })
            }
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn q(&self) -> usize {
        self.probs.len()
    }

    pub fn shares_support(&self, other: &Distribution) -> bool {
        same_support(&self.support, &other.support)
    }

    fn check(&self, other: &Distribution) -> Result<(), DivergenceError> {
        if self.shares_support(other) {
            Ok(())
        } else {
            Err(DivergenceError::SupportMismatch)
        }
    }
}

/// `v1:p1,v2:p2,...` with every support value listed in increasing order.
impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.support.values.iter().zip(&self.probs).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}:{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Distribution {
    type Err = DivergenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: String| DivergenceError::Parse {
            input: s.to_string(),
            reason,
        };
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for item in s.trim().split(',') {
            let (v, p) = item
                .split_once(':')
                .ok_or_else(|| parse_err(format!("entry `{item}` is not `value:prob`")))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("value `{v}`: {e}")))?,
            );
            probs.push(
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("probability `{p}`: {e}")))?,
            );
        }
        let support = Support::new(values)?;
        Distribution::new(support, probs)
    }
}

/// Squared Hellinger divergence `½ Σ (√f(i) − √g(i))²`, in `[0, 1]`.
pub fn hellinger2(f: &Distribution, g: &Distribution) -> Result<f64, DivergenceError> {
    f.check(g)?;
    Ok(hellinger2_unchecked(&f.probs, &g.probs))
}

pub(crate) fn hellinger2_unchecked(f: &[f64], g: &[f64]) -> f64 {
    let s: f64 = f
        .iter()
        .zip(g)
        .map(|(&a, &b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    (0.5 * s).min(1.0)
}

/// Hellinger divergence, the square root of [`hellinger2`]. A metric.
pub fn hellinger(f: &Distribution, g: &Distribution) -> Result<f64, DivergenceError> {
    hellinger2(f, g).map(f64::sqrt)
}

/// `D(f‖g) = Σ f(i) ln(f(i)/g(i))`, with `0·ln(0/·) = 0` and `+∞` when `f`
/// puts mass where `g` has none.
pub fn kl(f: &Distribution, g: &Distribution) -> Result<f64, DivergenceError> {
    f.check(g)?;
    let mut sum = 0.0;
    for (&a, &b) in f.probs.iter().zip(&g.probs) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += a * (a / b).ln();
    }
    Ok(sum.max(0.0))
}

/// `D(f‖g) + D(g‖f)`.
pub fn symmetric_kl(f: &Distribution, g: &Distribution) -> Result<f64, DivergenceError> {
    Ok(kl(f, g)? + kl(g, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Distribution {
        Distribution::bernoulli(p).unwrap()
    }

    #[test]
    fn hellinger2_identity_and_disjoint() {
        assert_eq!(hellinger2(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert_eq!(hellinger2(&bern(1.0), &bern(0.0)).unwrap(), 1.0);
        assert_eq!(hellinger(&bern(1.0), &bern(0.0)).unwrap(), 1.0);
        assert_eq!(hellinger(&bern(0.42), &bern(0.42)).unwrap(), 0.0);
    }

    #[test]
    fn hellinger2_bernoulli_pair() {
        // Reference from a 50-digit evaluation of the defining sum.
        let expected = 0.105_572_809_000_084_121_436_330_532_507_489_505_823_752_656_155_39;
        let got = hellinger2(&bern(0.5), &bern(0.1)).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got}");
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let tri = Distribution::new(Support::indices(3).unwrap(), vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(
            hellinger2(&bern(0.5), &tri),
            Err(DivergenceError::SupportMismatch)
        );
        let shifted: Distribution = "1:0.5,2:0.5".parse().unwrap();
        assert_eq!(kl(&bern(0.5), &shifted), Err(DivergenceError::SupportMismatch));
        assert!(symmetric_kl(&shifted, &bern(0.5)).is_err());
    }

    #[test]
    fn kl_cases() {
        assert_eq!(kl(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert_eq!(kl(&bern(0.5), &bern(0.0)).unwrap(), f64::INFINITY);
        // 0.5 ln 2 + 0.5 ln(2/3)
        let expected = 0.143_841_036_225_890_463_719_609_502_996_913_715_751_754_855_448_88;
        assert!((kl(&bern(0.5), &bern(0.25)).unwrap() - expected).abs() < 1e-12);
        // f has no mass where g is zero: finite.
        assert!(kl(&bern(0.0), &bern(0.5)).unwrap().is_finite());
    }

    #[test]
    fn symmetric_kl_sparse_regime_matches_approximation() {
        let n = 1e6_f64;
        let (a, b) = (4.0, 1.0);
        let f = bern(a * n.ln() / n);
        let g = bern(b * n.ln() / n);
        let exact = symmetric_kl(&f, &g).unwrap();
        let approx = (a - b) * (n.ln() / n) * (a / b).ln();
        assert!(((exact - approx) / approx).abs() < 0.10, "{exact} vs {approx}");
        assert_eq!(exact, symmetric_kl(&g, &f).unwrap());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(Support::new(vec![1.0]), Err(DivergenceError::SupportTooSmall(1)));
        assert_eq!(
            Support::new(vec![0.0, 0.0]),
            Err(DivergenceError::SupportNotIncreasing)
        );
        assert!(matches!(
            Distribution::new(Support::binary(), vec![0.5, 0.6]),
            Err(DivergenceError::NotNormalized(_))
        ));
        assert!(matches!(
            Distribution::new(Support::binary(), vec![-0.1, 1.1]),
            Err(DivergenceError::InvalidProbability { index: 0, .. })
        ));
        assert!(matches!(
            Distribution::from_counts(Support::binary(), &[0, 0]),
            Err(DivergenceError::EmptyCounts)
        ));
        assert!("0:0.5;1:0.5".parse::<Distribution>().is_err());
        assert!("0:x,1:0.5".parse::<Distribution>().is_err());
    }

    #[test]
    fn text_format() {
        let d: Distribution = "0:0.3,1:0.7".parse().unwrap();
        assert_eq!(d.probs(), &[0.3, 0.7]);
        assert_eq!(d.to_string(), "0:0.3,1:0.7");
        let odd = Distribution::new(
            Support::new(vec![-1.5, 0.25, 3.0]).unwrap(),
            vec![0.1, 0.2, 0.7],
        )
        .unwrap();
        let back: Distribution = odd.to_string().parse().unwrap();
        assert_eq!(back, odd);
    }

    #[test]
    fn from_counts_normalizes() {
        let d = Distribution::from_counts(Support::binary(), &[2, 3]).unwrap();
        assert_eq!(d.probs(), &[0.4, 0.6]);
    }
}

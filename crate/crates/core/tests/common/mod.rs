//! Test-only helpers: a double-double scalar type used as an independent
//! high-precision reference, and small instance builders.

#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` carrying roughly 106 bits of precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // One Newton step from the f64 root doubles the precision.
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Dd { hi: p, lo: e }).to_f64() / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        Dd { hi, lo }
    }

    pub fn exp(self) -> Dd {
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from(k);
        // exp(r) = exp(r / 16)^16, Taylor series on the reduced argument.
        let s = r * Dd::from(1.0 / 16.0);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..=24 {
            term = term * s / Dd::from(i as f64);
            sum = sum + term;
        }
        for _ in 0..4 {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of non-positive value");
        // Newton on exp(y) = x.
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

/// `½ Σ (√f − √g)²` in double-double.
pub fn hellinger2_ref(f: &[f64], g: &[f64]) -> f64 {
    let mut s = Dd::ZERO;
    for (&a, &b) in f.iter().zip(g) {
        let d = Dd::from(a).sqrt() - Dd::from(b).sqrt();
        s = s + d * d;
    }
    (s * Dd::from(0.5)).to_f64()
}

/// `Σ f ln(f/g)` in double-double; `+∞` when `f > 0 = g`.
pub fn kl_ref(f: &[f64], g: &[f64]) -> f64 {
    let mut s = Dd::ZERO;
    for (&a, &b) in f.iter().zip(g) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        s = s + Dd::from(a) * (Dd::from(a) / Dd::from(b)).ln();
    }
    s.to_f64()
}

/// Known values of the reference arithmetic itself.
pub fn check_reference() {
    let two = Dd::from(2.0);
    let r = two.sqrt();
    let back = r * r - two;
    assert!(back.to_f64().abs() < 1e-30, "sqrt: {back:?}");
    let e = Dd::ONE.exp();
    // e = 2.718281828459045 + 1.4456468917292502e-16
    assert_eq!(e.hi, std::f64::consts::E);
    assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-30, "exp: {e:?}");
    let l = two.ln() - LN2;
    assert!(l.to_f64().abs() < 1e-30, "ln: {l:?}");
    let third = Dd::ONE / Dd::from(3.0);
    assert!((third * Dd::from(3.0) - Dd::ONE).to_f64().abs() < 1e-31);
}

pub fn bern(p: f64) -> ocl::divergence::Distribution {
    ocl::divergence::Distribution::bernoulli(p).unwrap()
}

/// `⌈32 ln n / H²⌉`, the planted size used by the concentration checks.
pub fn concentration_size(n: usize, h2: f64) -> usize {
    (32.0 * (n as f64).ln() / h2).ceil() as usize
}

/// One planted trial: clusters of sizes `m + 1`, `m` and the remainder. `v` is
/// the first element of the larger true cluster and `C` the rest of it, so
/// `|C| = |C'| = m`. Returns true when `C'` scores at least as high as `C`.
pub fn misordered(n: usize, m: usize, f_plus: &ocl::divergence::Distribution, f_minus: &ocl::divergence::Distribution, seed: u64) -> bool {
    use ocl::estimation::membership;
    use ocl::instance::{generate, ClusterSpec};
    assert!(2 * m + 1 < n);
    let sizes = vec![m + 1, m, n - 2 * m - 1];
    let inst = generate(n, &ClusterSpec::ExplicitSizes(sizes), f_plus, f_minus, seed).unwrap();
    let blocks = inst.truth.blocks();
    let own = blocks.iter().find(|b| b.len() == m + 1).unwrap();
    let other = blocks.iter().find(|b| b.len() == m).unwrap();
    let v = own[0] as usize;
    let w = &inst.side_info;
    let score_own = membership(v, &own[1..], w).unwrap();
    let score_other = membership(v, other, w).unwrap();
    score_other >= score_own
}

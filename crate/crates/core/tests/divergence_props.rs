mod common;

use common::{check_reference, hellinger2_ref, kl_ref};
use ocl::divergence::{hellinger, hellinger2, kl, symmetric_kl, Distribution, Support};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pmf(rng: &mut impl Rng, q: usize, zeros: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..q)
        .map(|_| {
            if zeros && rng.random_bool(0.2) {
                0.0
            } else {
                rng.random::<f64>() + 1e-3
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn dist(support: &std::sync::Arc<Support>, p: Vec<f64>) -> Distribution {
    Distribution::new(support.clone(), p).unwrap()
}

#[test]
fn reference_arithmetic_is_sound() {
    check_reference();
}

#[test]
fn agrees_with_double_double_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let q = rng.random_range(2..=8);
        let support = Support::indices(q).unwrap();
        let f = dist(&support, random_pmf(&mut rng, q, true));
        let g = dist(&support, random_pmf(&mut rng, q, false));
        let h2 = hellinger2(&f, &g).unwrap();
        assert!((h2 - hellinger2_ref(f.probs(), g.probs())).abs() < 1e-12);
        let d = kl(&f, &g).unwrap();
        assert!((d - kl_ref(f.probs(), g.probs())).abs() < 1e-12);
        let s = symmetric_kl(&f, &g).unwrap();
        let s_ref = kl_ref(f.probs(), g.probs()) + kl_ref(g.probs(), f.probs());
        if s_ref.is_infinite() {
            assert!(s.is_infinite());
        } else {
            assert!((s - s_ref).abs() < 1e-12);
        }
    }
}

#[test]
fn sparse_symmetric_kl_matches_approximation() {
    let n = 1e6_f64;
    let (a, b) = (4.0, 1.0);
    let f = Distribution::bernoulli(a * n.ln() / n).unwrap();
    let g = Distribution::bernoulli(b * n.ln() / n).unwrap();
    let exact = symmetric_kl(&f, &g).unwrap();
    let approx = (a - b) * n.ln() / n * (a / b).ln();
    assert!((exact - approx).abs() / approx < 0.10, "{exact} vs {approx}");
}

#[test]
fn triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let q = rng.random_range(2..=8);
        let support = Support::indices(q).unwrap();
        let [x, y, z] = [0, 1, 2].map(|_| dist(&support, random_pmf(&mut rng, q, true)));
        let xy = hellinger(&x, &y).unwrap();
        let yz = hellinger(&y, &z).unwrap();
        let xz = hellinger(&x, &z).unwrap();
        assert!(xz <= xy + yz + 1e-9);
    }
}

#[test]
fn kl_dominates_twice_squared_hellinger() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let q = rng.random_range(2..=8);
        let support = Support::indices(q).unwrap();
        let f = dist(&support, random_pmf(&mut rng, q, true));
        let g = dist(&support, random_pmf(&mut rng, q, true));
        assert!(kl(&f, &g).unwrap() >= 2.0 * hellinger2(&f, &g).unwrap() - 1e-12);
    }
}

fn product(a: &Distribution, b: &Distribution) -> Distribution {
    let q = a.q() * b.q();
    let probs = a
        .probs()
        .iter()
        .flat_map(|&x| b.probs().iter().map(move |&y| x * y))
        .collect();
    Distribution::new(Support::indices(q).unwrap(), probs).unwrap()
}

#[test]
fn tensorization_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let (q1, q2) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let s1 = Support::indices(q1).unwrap();
        let s2 = Support::indices(q2).unwrap();
        let p1 = dist(&s1, random_pmf(&mut rng, q1, true));
        let r1 = dist(&s1, random_pmf(&mut rng, q1, true));
        let p2 = dist(&s2, random_pmf(&mut rng, q2, true));
        let r2 = dist(&s2, random_pmf(&mut rng, q2, true));
        let joint = 1.0 - hellinger2(&product(&p1, &p2), &product(&r1, &r2)).unwrap();
        let split = (1.0 - hellinger2(&p1, &r1).unwrap()) * (1.0 - hellinger2(&p2, &r2).unwrap());
        assert!((joint - split).abs() < 1e-12, "{joint} vs {split}");
    }
}

fn pmf_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|q| {
        let w = prop::collection::vec(0.0f64..1.0, q);
        (w.clone(), w).prop_map(|(a, b)| {
            let norm = |v: Vec<f64>| {
                let v: Vec<f64> = v.into_iter().map(|x| x + 1e-9).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            (norm(a), norm(b))
        })
    })
}

proptest! {
    #[test]
    fn hellinger2_range_symmetry_identity((a, b) in pmf_strategy()) {
        let support = Support::indices(a.len()).unwrap();
        let f = dist(&support, a);
        let g = dist(&support, b);
        let fg = hellinger2(&f, &g).unwrap();
        prop_assert!((0.0..=1.0).contains(&fg));
        prop_assert_eq!(fg, hellinger2(&g, &f).unwrap());
        prop_assert_eq!(hellinger2(&f, &f).unwrap(), 0.0);
        prop_assert!((hellinger(&f, &g).unwrap().powi(2) - fg).abs() < 1e-12);
        let s = symmetric_kl(&f, &g).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert_eq!(s, symmetric_kl(&g, &f).unwrap());
    }
}

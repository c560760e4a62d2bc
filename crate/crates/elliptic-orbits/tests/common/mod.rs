#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of the companion matrix of `c[0] xⁿ + … + c[n]`.
pub fn companion_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)).collect()
}

/// Greedy multiset distance between two root lists.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm() / (1.0 + y.norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Random invariants with a discriminant bounded away from zero.
pub fn random_invariants(r: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let g2: f64 = r.gen_range(-3.0..3.0);
        let g3: f64 = r.gen_range(-3.0..3.0);
        let d = g2.powi(3) - 27.0 * g3 * g3;
        if d.abs() > 0.05 * (g2.abs().powi(3) + 27.0 * g3 * g3) {
            return (g2, g3);
        }
    }
}

/// Random KLMN parameters with `|B|` bounded away from zero.
pub fn random_klmn(r: &mut ChaCha8Rng) -> elliptic_orbits::quartic_lab::KlmnParams {
    let mu = r.gen_range(0.5..2.0);
    let b: f64 = r.gen_range(0.1..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    let c = r.gen_range(-3.0..3.0);
    let e = r.gen_range(-1.0..1.0);
    elliptic_orbits::quartic_lab::KlmnParams::new(mu, b, c, e).unwrap()
}

pub fn real_c(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

//! Quartic invariants, Weierstrass ℘/ζ/σ and Legendre elliptic integrals.

mod legendre;
mod weierstrass;

pub use legendre::{agm, carlson_rd, carlson_rf, complete_k, legendre_e, legendre_f};
pub use weierstrass::{cubic_roots, half_period, WeierstrassContext};

use serde::{Deserialize, Serialize};

/// Binomial-convention quartic `a0 x⁴ + 4 a1 x³ + 6 a2 x² + 4 a3 x + a4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

/// `g2`, `g3` and the discriminant `Δ = g2³ − 27 g3²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticInvariants {
    pub g2: f64,
    pub g3: f64,
    pub delta: f64,
}

impl QuarticInvariants {
    pub fn from_g(g2: f64, g3: f64) -> Self {
        Self { g2, g3, delta: g2 * g2 * g2 - 27.0 * g3 * g3 }
    }
}

impl QuarticCoeffs {
    pub const fn new(a0: f64, a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        Self { a0, a1, a2, a3, a4 }
    }

    /// From ordinary coefficients `c4 x⁴ + c3 x³ + c2 x² + c1 x + c0`.
    pub fn from_monomial(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Self::new(c4, c3 / 4.0, c2 / 6.0, c1 / 4.0, c0)
    }

    /// Ordinary coefficients, highest degree first.
    pub fn monomial(&self) -> [f64; 5] {
        [self.a0, 4.0 * self.a1, 6.0 * self.a2, 4.0 * self.a3, self.a4]
    }

    pub fn eval(&self, x: f64) -> f64 {
        (((self.a0 * x + 4.0 * self.a1) * x + 6.0 * self.a2) * x + 4.0 * self.a3) * x + self.a4
    }

    /// `[f, f′, f″, f‴, f⁗]` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        let Self { a0, a1, a2, a3, .. } = *self;
        [
            self.eval(x),
            ((4.0 * a0 * x + 12.0 * a1) * x + 12.0 * a2) * x + 4.0 * a3,
            (12.0 * a0 * x + 24.0 * a1) * x + 12.0 * a2,
            24.0 * a0 * x + 24.0 * a1,
            24.0 * a0,
        ]
    }

    /// The same quartic expanded about `x0`, i.e. coefficients of `f(x0 + y)` in `y`.
    pub fn shifted(&self, x0: f64) -> Self {
        let d = self.derivatives(x0);
        Self::new(d[4] / 24.0, d[3] / 24.0, d[2] / 12.0, d[1] / 4.0, d[0])
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(k * self.a0, k * self.a1, k * self.a2, k * self.a3, k * self.a4)
    }

    pub fn invariants(&self) -> QuarticInvariants {
        quartic_invariants(self)
    }

    /// Scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        [self.a0, self.a1, self.a2, self.a3, self.a4].iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// True when `Δ` is non-zero relative to `tol·(|g2|³ + 27 g3²)`.
    pub fn has_no_repeated_factors(&self, tol: f64) -> bool {
        let inv = self.invariants();
        let size = inv.g2.abs().powi(3) + 27.0 * inv.g3 * inv.g3;
        size > 0.0 && inv.delta.abs() > tol * size
    }

    pub fn weierstrass(&self) -> crate::Result<WeierstrassContext> {
        let inv = self.invariants();
        WeierstrassContext::new(inv.g2, inv.g3)
    }
}

pub fn quartic_invariants(q: &QuarticCoeffs) -> QuarticInvariants {
    let QuarticCoeffs { a0, a1, a2, a3, a4 } = *q;
    let g2 = a0 * a4 - 4.0 * a1 * a3 + 3.0 * a2 * a2;
    let g3 = a0 * a2 * a4 + 2.0 * a1 * a2 * a3 - a2 * a2 * a2 - a0 * a3 * a3 - a1 * a1 * a4;
    QuarticInvariants::from_g(g2, g3)
}

/// Invariants recomputed from the Taylor coefficients of `f` at `x0`.
pub fn taylor_invariants(q: &QuarticCoeffs, x0: f64) -> QuarticInvariants {
    let [f0, f1, f2, f3, f4] = q.derivatives(x0);
    let g2 = f0 * f4 / 24.0 - f1 * f3 / 24.0 + f2 * f2 / 48.0;
    let g3 = f4 * f2 * f0 / 288.0 + f3 * f2 * f1 / 576.0
        - f2 * f2 * f2 / 1728.0
        - f4 * f1 * f1 / 384.0
        - f3 * f3 * f0 / 576.0;
    QuarticInvariants::from_g(g2, g3)
}

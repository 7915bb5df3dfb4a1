//! Sigmoid force laws from the maximum principle applied to
//! `min ½∫u²` under `f' = γ(u(F_max − f) − f)` with an integral constraint
//! on `f²`.
//!
//! Stationarity gives `u = p_f γ (F_max − f)`, hence
//! `f' = γ (p_f γ (F_max − f)² − f) = p_f γ² (f − f1)(f − f2)`, where `f1 > f2`
//! are the roots of the bracket. With `p_f` frozen this integrates to
//!
//! ```text
//! f(t) = f2 + (f1 − f2) / (1 − K e^{μ (t − T)}),   K = (f̄ − f1)/(f̄ − f2),   μ = p_f γ² (f1 − f2)
//! ```
//!
//! through the anchor `f(T) = f̄`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmpSigmoid {
    /// Frozen co-state of `f`.
    pub p_f: f64,
    pub gamma: f64,
    pub f_max: f64,
    pub f1: f64,
    pub f2: f64,
    /// Rate `p_f γ² (f1 − f2)` [1/s].
    pub mu: f64,
    /// `(T, f̄)`: the sigmoid passes through `f(T) = f̄`.
    pub anchor: (f64, f64),
}

/// Builds the sigmoid for a frozen co-state. Fails when
/// `p_f γ (F_max − f)² = f` does not have two distinct real roots.
pub fn pmp_sigmoid(p_f: f64, gamma: f64, f_max: f64, anchor: (f64, f64)) -> Result<PmpSigmoid> {
    if !(gamma > 0.0 && f_max > 0.0) || !p_f.is_finite() {
        return Err(Error::InvalidParameter("gamma and F_max must be positive, p_f finite".into()));
    }
    let a = p_f * gamma;
    // a f² − (2 a F + 1) f + a F² = 0, discriminant 4 a F + 1.
    let disc = 4.0 * a * f_max + 1.0;
    if a == 0.0 || !(disc > 0.0) {
        return Err(Error::Domain {
            value: p_f,
            lo: -1.0 / (4.0 * gamma * f_max),
            hi: f64::INFINITY,
        });
    }
    let b = 2.0 * a * f_max + 1.0;
    let sq = disc.sqrt();
    // stable pair: q = (b + sq)/2, roots q/a and a F²/q
    let q = 0.5 * (b + sq);
    let (r1, r2) = (q / a, a * f_max * f_max / q);
    let (f1, f2) = if r1 > r2 { (r1, r2) } else { (r2, r1) };
    let s = PmpSigmoid {
        p_f,
        gamma,
        f_max,
        f1,
        f2,
        mu: p_f * gamma * gamma * (f1 - f2),
        anchor,
    };
    if s.anchor.1 == f2 {
        return Err(Error::InvalidParameter("anchor force sits on the root f2".into()));
    }
    Ok(s)
}

impl PmpSigmoid {
    /// The end-of-race logistic `F / (1 + (F/f̄ − 1) e^{−γλF t})`: the
    /// sigmoid family with roots `F` and `0`, rate `−γλF`, anchored at
    /// `f(0) = f̄`. The co-state is the one matching that rate.
    pub fn end_race(f_max: f64, f_bar: f64, gamma: f64, lambda: f64) -> Result<PmpSigmoid> {
        if !(f_max > f_bar && f_bar > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidParameter("need 0 < f̄ < F_max and γ > 0".into()));
        }
        let mu = -gamma * lambda * f_max;
        Ok(PmpSigmoid {
            p_f: mu / (gamma * gamma * f_max),
            gamma,
            f_max,
            f1: f_max,
            f2: 0.0,
            mu,
            anchor: (0.0, f_bar),
        })
    }

    fn k(&self) -> f64 {
        let fb = self.anchor.1;
        (fb - self.f1) / (fb - self.f2)
    }

    pub fn force(&self, t: f64) -> f64 {
        let ex = self.k() * (self.mu * (t - self.anchor.0)).exp();
        self.f2 + (self.f1 - self.f2) / (1.0 - ex)
    }

    /// Time derivative of [`Self::force`], differentiated in closed form.
    pub fn force_rate(&self, t: f64) -> f64 {
        let ex = self.k() * (self.mu * (t - self.anchor.0)).exp();
        (self.f1 - self.f2) * self.mu * ex / ((1.0 - ex) * (1.0 - ex))
    }

    /// `γ (p_f γ (F_max − f)² − f)`.
    pub fn rhs(&self, f: f64) -> f64 {
        let g = self.gamma;
        g * (self.p_f * g * (self.f_max - f).powi(2) - f)
    }

    /// Right-hand side in factored form, valid for either constructor.
    pub fn rhs_factored(&self, f: f64) -> f64 {
        self.mu / (self.f1 - self.f2) * (f - self.f1) * (f - self.f2)
    }

    /// `f' − rhs(f)` at time `t`.
    pub fn residual(&self, t: f64) -> f64 {
        self.force_rate(t) - self.rhs_factored(self.force(t))
    }

    /// Optimal drive `u = p_f γ (F_max − f)`.
    pub fn control(&self, t: f64) -> f64 {
        self.p_f * self.gamma * (self.f_max - self.force(t))
    }

    /// Slope of the tangent line at the anchor:
    /// `f(t) ≈ f̄ + slope · (t − T)`, `slope = μ (f̄ − f1)(f̄ − f2)/(f1 − f2)`.
    pub fn linearization_slope(&self) -> f64 {
        let fb = self.anchor.1;
        self.mu * (fb - self.f1) * (fb - self.f2) / (self.f1 - self.f2)
    }

    pub fn linearized(&self, t: f64) -> f64 {
        self.anchor.1 + self.linearization_slope() * (t - self.anchor.0)
    }
}

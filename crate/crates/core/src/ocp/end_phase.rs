//! Reduced end-of-race problem on `[0, Δ]` (time measured from `t2`):
//!
//! ```text
//! min ∫ u²,   f' = γ (u (F_max − f) − f),   f(0) = f̄,
//! τ ∫ f² e^{−A t} dt = σ_f (1 − e^{−A Δ}) / A + γ1 e⁰
//! ```
//!
//! The integral constraint is carried as a state `y' = f² e^{−A t}`,
//! `y(0) = 0`, `y(Δ) = Y`, and the problem is transcribed with
//! Hermite–Simpson on a fixed horizon.

use serde::{Deserialize, Serialize};

use super::banded::BorderedBand;
use super::solver::{solve_nlp, Derivatives, Nlp, SolverOptions};
use super::Trajectory;
use crate::ad::{Dual2, Real};
use crate::error::{Error, Result};
use crate::model::{RunnerParams, SigmaProfile, State};
use crate::turnpike::{sprint_force, EndDecayRate};

/// Data of the reduced problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndPhaseProblem {
    pub tau: f64,
    pub gamma: f64,
    pub f_max: f64,
    pub f_bar: f64,
    pub horizon: f64,
    /// Decay rate `A` [1/s].
    pub decay: f64,
    /// Required value of `∫ f² e^{−A t}`.
    pub target: f64,
    pub sigma_f: f64,
    /// Energy left at the start of the phase, `γ1 e⁰`.
    pub e_start: f64,
    pub n_nodes: usize,
}

/// `(1 − e^{−A t}) / A`, continuous at `A = 0`.
fn decay_integral(a: f64, t: f64) -> f64 {
    if a.abs() * t < 1e-12 {
        t
    } else {
        -(-a * t).exp_m1() / a
    }
}

impl EndPhaseProblem {
    pub fn new(p: &RunnerParams, s: &SigmaProfile, f_bar: f64, dt_end: f64) -> Self {
        let a = EndDecayRate::FinalBranch.rate(p, s);
        let e_start = s.gamma1 * p.e0;
        EndPhaseProblem {
            tau: p.tau,
            gamma: p.gamma_motor,
            f_max: p.f_max,
            f_bar,
            horizon: dt_end,
            decay: a,
            target: (s.sigma_f * decay_integral(a, dt_end) + e_start) / p.tau,
            sigma_f: s.sigma_f,
            e_start,
            n_nodes: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.tau, self.gamma, self.f_max, self.f_bar, self.horizon, self.target];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !(self.f_bar < self.f_max) {
            return Err(Error::InvalidParameter("end-phase data must be positive with f̄ < F_max".into()));
        }
        if !(self.decay >= 0.0) || self.n_nodes < 10 {
            return Err(Error::InvalidParameter("decay must be non-negative and n_nodes ≥ 10".into()));
        }
        Ok(())
    }

    fn h(&self) -> f64 {
        self.horizon / (self.n_nodes - 1) as f64
    }

    fn u_scale(&self) -> f64 {
        (self.f_bar / (self.f_max - self.f_bar)).max(1.0)
    }

    /// Unscaled `(f, y, u)` of node `k`.
    fn node<T: Real>(&self, z: &[T], k: usize) -> [T; 3] {
        let sc = [self.f_bar, self.target, self.u_scale()];
        [z[3 * k] * sc[0], z[3 * k + 1] * sc[1], z[3 * k + 2] * sc[2]]
    }

    fn rhs<T: Real>(&self, f: T, u: T, t: f64) -> [T; 2] {
        let fd = (u * (T::cst(self.f_max) - f) - f) * self.gamma;
        [fd, f * f * (-self.decay * t).exp()]
    }

    fn defects<T: Real>(&self, loc: &[T; 6], k: usize) -> [T; 2] {
        let h = self.h();
        let t0 = k as f64 * h;
        let [f0, y0, u0] = [loc[0], loc[1], loc[2]];
        let [f1, y1, u1] = [loc[3], loc[4], loc[5]];
        let r0 = self.rhs(f0, u0, t0);
        let r1 = self.rhs(f1, u1, t0 + h);
        let fm = (f0 + f1) * 0.5 + (r0[0] - r1[0]) * (h / 8.0);
        let rm = self.rhs(fm, (u0 + u1) * 0.5, t0 + 0.5 * h);
        [
            (f1 - f0 - (r0[0] + rm[0] * 4.0 + r1[0]) * (h / 6.0)) / self.f_bar,
            (y1 - y0 - (r0[1] + rm[1] * 4.0 + r1[1]) * (h / 6.0)) / self.target,
        ]
    }

    fn cost<T: Real>(&self, u0: T, u1: T) -> T {
        let s = self.u_scale();
        (u0 * u0 + u0 * u1 + u1 * u1) * (self.h() / (3.0 * s * s * self.horizon))
    }

    fn local<T: Real>(&self, z: &[f64], k: usize, make: impl Fn(f64, usize) -> T) -> [T; 6] {
        let sc = [self.f_bar, self.target, self.u_scale()];
        let mut loc = [T::cst(0.0); 6];
        for i in 0..6 {
            loc[i] = make(z[3 * k + i], i) * sc[i % 3];
        }
        loc
    }
}

impl Nlp for EndPhaseProblem {
    fn n_vars(&self) -> usize {
        3 * self.n_nodes
    }

    fn n_constraints(&self) -> usize {
        2 * (self.n_nodes - 1)
    }

    fn n_border(&self) -> usize {
        0
    }

    fn bandwidth(&self) -> usize {
        5
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_nodes;
        let mut lo = vec![f64::NEG_INFINITY; 3 * n];
        let mut hi = vec![f64::INFINITY; 3 * n];
        for k in 0..n {
            lo[3 * k] = 0.0;
        }
        lo[0] = 1.0;
        hi[0] = 1.0;
        lo[1] = 0.0;
        hi[1] = 0.0;
        lo[3 * (n - 1) + 1] = 1.0;
        hi[3 * (n - 1) + 1] = 1.0;
        (lo, hi)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        (0..self.n_nodes - 1)
            .map(|k| {
                let (a, b) = (self.node(z, k)[2], self.node(z, k + 1)[2]);
                self.cost(a, b)
            })
            .sum()
    }

    fn constraints(&self, z: &[f64], c: &mut [f64]) {
        for k in 0..self.n_nodes - 1 {
            let d = self.defects(&self.local(z, k, |v, _| v), k);
            c[2 * k] = d[0];
            c[2 * k + 1] = d[1];
        }
    }

    fn derivatives(&self, z: &[f64], weights: &[f64]) -> Derivatives {
        let n = self.n_nodes;
        let mut grad = vec![0.0; 3 * n];
        let mut hess = BorderedBand::zeros(3 * n, 0, 5);
        let mut jac = Vec::with_capacity(self.n_constraints());
        let su = self.u_scale();
        for k in 0..n - 1 {
            let (i0, i1) = (3 * k + 2, 3 * k + 5);
            let q: Dual2<2> = self.cost(Dual2::var(z[i0], 0) * su, Dual2::var(z[i1], 1) * su);
            grad[i0] += q.g[0];
            grad[i1] += q.g[1];
            hess.add(i0, i0, q.hess(0, 0));
            hess.add(i0, i1, q.hess(0, 1));
            hess.add(i1, i1, q.hess(1, 1));
            let d = self.defects(&self.local(z, k, Dual2::<6>::var), k);
            for j in 0..2 {
                jac.push((0..6).filter(|&i| d[j].g[i] != 0.0).map(|i| (3 * k + i, d[j].g[i])).collect());
                let w = weights[2 * k + j];
                if w != 0.0 {
                    for a in 0..6 {
                        for b in a..6 {
                            let v = w * d[j].hess(a, b);
                            if v != 0.0 {
                                hess.add(3 * k + a, 3 * k + b, v);
                            }
                        }
                    }
                }
            }
        }
        Derivatives { grad, jac, hess }
    }
}

/// [`solve_end_phase_with`] with the default mesh and tolerances.
pub fn solve_end_phase(p: &RunnerParams, s: &SigmaProfile, f_bar: f64, dt_end: f64) -> Result<Trajectory> {
    let prob = EndPhaseProblem::new(p, s, f_bar, dt_end);
    solve_end_phase_with(&prob, &SolverOptions::default())
}

/// Solves the reduced problem, starting from the logistic sprint with the
/// shape that meets the energy identity. In the returned trajectory `f` and
/// `u` are the solution, `v` integrates `v' = f − v/τ` from `v(0) = τ f̄`,
/// `x` integrates `v`, and `e` follows the reduced energy equation
/// `(e e^{−At})' = (σ_f − τ f²) e^{−At}` from `γ1 e⁰`. The objective is
/// `∫ u²`.
pub fn solve_end_phase_with(prob: &EndPhaseProblem, opts: &SolverOptions) -> Result<Trajectory> {
    prob.validate()?;
    let n = prob.n_nodes;
    let h = prob.h();
    let lam = start_lambda(prob);
    let rp = RunnerParams {
        tau: prob.tau,
        f_max: prob.f_max,
        gamma_motor: prob.gamma,
        e0: 1.0,
        v0: 0.0,
        alpha: 0.0,
        distance: 1.0,
    };
    let mut z = vec![0.0; 3 * n];
    let su = prob.u_scale();
    let mut y = 0.0;
    for k in 0..n {
        let t = k as f64 * h;
        let f = sprint_force(&rp, prob.f_bar, lam, t);
        let fdot = prob.gamma * lam * f * (prob.f_max - f);
        let u = (fdot / prob.gamma + f) / (prob.f_max - f);
        z[3 * k] = f / prob.f_bar;
        z[3 * k + 1] = y / prob.target;
        z[3 * k + 2] = u / su;
        if k + 1 < n {
            let g = |s: f64| sprint_force(&rp, prob.f_bar, lam, s).powi(2) * (-prob.decay * s).exp();
            y += h / 6.0 * (g(t) + 4.0 * g(t + 0.5 * h) + g(t + h));
        }
    }
    let report = solve_nlp(prob, &z, opts)?;
    let z = report.z;
    let mut traj = Trajectory::constant(n, prob.horizon, State::default(), 0.0);
    let mut st = State {
        x: 0.0,
        v: prob.tau * prob.f_bar,
        f: prob.f_bar,
        e: prob.e_start,
    };
    let mut weighted = prob.e_start;
    for k in 0..n {
        let [f, _, u] = prob.node(&z, k);
        st.f = f;
        st.e = weighted * (prob.decay * traj.times[k]).exp();
        traj.states[k] = st;
        traj.controls[k] = u;
        if k + 1 < n {
            // f is linear between nodes for these auxiliary integrals
            let f1 = prob.node(&z, k + 1)[0];
            let sub = 8;
            let dt = h / sub as f64;
            for j in 0..sub {
                let t = traj.times[k] + j as f64 * dt;
                let fa = f + (f1 - f) * j as f64 / sub as f64;
                let fb = f + (f1 - f) * (j + 1) as f64 / sub as f64;
                let fm = 0.5 * (fa + fb);
                let v_old = st.v;
                // exact step of v' = f − v/τ with f frozen at the midpoint
                let decay = (-dt / prob.tau).exp();
                st.v = prob.tau * fm + (v_old - prob.tau * fm) * decay;
                st.x += 0.5 * dt * (v_old + st.v);
                let w = |tt: f64, ff: f64| (prob.sigma_f - prob.tau * ff * ff) * (-prob.decay * tt).exp();
                weighted += dt / 6.0 * (w(t, fa) + 4.0 * w(t + 0.5 * dt, fm) + w(t + dt, fb));
            }
        }
    }
    traj.objective = report.objective * su * su * prob.horizon;
    traj.kkt_residual = report.kkt_residual;
    Ok(traj)
}

/// Logistic shape meeting the integral constraint, by bisection.
fn start_lambda(prob: &EndPhaseProblem) -> f64 {
    let rp = RunnerParams {
        tau: prob.tau,
        f_max: prob.f_max,
        gamma_motor: prob.gamma,
        e0: 1.0,
        v0: 0.0,
        alpha: 0.0,
        distance: 1.0,
    };
    let integral = |lam: f64| {
        let m = 400;
        let h = prob.horizon / m as f64;
        let g = |s: f64| sprint_force(&rp, prob.f_bar, lam, s).powi(2) * (-prob.decay * s).exp();
        (0..m)
            .map(|i| {
                let t = i as f64 * h;
                h / 6.0 * (g(t) + 4.0 * g(t + 0.5 * h) + g(t + h))
            })
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (-5.0, 5.0);
    let r = |l: f64| integral(l) - prob.target;
    if r(lo) > 0.0 {
        return lo;
    }
    if r(hi) < 0.0 {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if r(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

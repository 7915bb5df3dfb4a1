//! Direct transcription of the race problem.
//!
//! Time is normalized to `s ∈ [0, 1]` and the dynamics are multiplied by the
//! free final time `T`. The decision vector holds, for every node
//! `k = 0..n`, the scaled values of `(x, v, f, e, u)` followed by the scaled
//! `T`. The equality constraints are the `4(n − 1)` collocation defects; the
//! five boundary conditions `x(0) = 0`, `x(1) = d`, `v(0) = v⁰`, `e(0) = e⁰`,
//! `e(1) = 0` are imposed by pinning the corresponding bounds, so the
//! problem carries `4(n − 1) + 5` equalities in total.

use serde::{Deserialize, Serialize};

use super::banded::BorderedBand;
use super::solver::{Derivatives, Nlp};
use super::Trajectory;
use crate::ad::{Dual2, Real};
use crate::error::{Error, Result};
use crate::model::{dynamics_generic, RunnerParams, SigmaProfile, SlopeProfile, Smoothing, State};

/// Collocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Trapezoidal,
    /// Compressed Hermite–Simpson, control linear on each interval.
    #[default]
    HermiteSimpson,
}

/// Characteristic magnitudes: the solver works with `value / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub x: f64,
    pub v: f64,
    pub f: f64,
    pub e: f64,
    pub u: f64,
    pub t_f: f64,
    pub objective: f64,
}

impl Scaling {
    /// Magnitudes read off the turnpike of a constant-σ̄ race.
    pub fn heuristic(p: &RunnerParams, s: &SigmaProfile) -> Scaling {
        let v = crate::turnpike::mean_velocity_simple(p, s.sigma_bar).min(0.9 * p.tau * p.f_max);
        let f = v / p.tau;
        let u = f / (p.f_max - f);
        let t = p.distance / v;
        Scaling {
            x: p.distance,
            v,
            f,
            e: p.e0,
            u: u.abs().max(1.0),
            t_f: t,
            objective: t,
        }
    }

    fn state(&self) -> [f64; 5] {
        [self.x, self.v, self.f, self.e, self.u]
    }

    fn validate(&self) -> Result<()> {
        let all = [self.x, self.v, self.f, self.e, self.u, self.t_f, self.objective];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter("scales must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Mesh and discretization choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transcription {
    pub n_nodes: usize,
    pub scheme: Scheme,
    /// Overrides the automatic [`Scaling::heuristic`].
    pub scaling: Option<Scaling>,
    #[serde(skip, default)]
    pub smoothing: Smoothing,
}

impl Default for Transcription {
    fn default() -> Self {
        Transcription {
            n_nodes: 400,
            scheme: Scheme::HermiteSimpson,
            scaling: None,
            smoothing: Smoothing::default(),
        }
    }
}

impl Transcription {
    pub const MIN_NODES: usize = 50;

    pub fn with_nodes(n_nodes: usize) -> Self {
        Transcription {
            n_nodes,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < Self::MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "n_nodes must be at least {}, got {}",
                Self::MIN_NODES,
                self.n_nodes
            )));
        }
        if !(self.smoothing.sigma_eps >= 0.0 && self.smoothing.slope_width >= 0.0) {
            return Err(Error::InvalidParameter("smoothing widths must be non-negative".into()));
        }
        if let Some(s) = &self.scaling {
            s.validate()?;
        }
        Ok(())
    }

    /// Equality constraints, boundary pins included: `4(n − 1) + 5`.
    pub fn equality_count(&self) -> usize {
        4 * (self.n_nodes - 1) + 5
    }

    /// Decision variables: `5 n + 1`.
    pub fn variable_count(&self) -> usize {
        5 * self.n_nodes + 1
    }
}

/// The transcribed program.
#[derive(Debug, Clone)]
pub struct RaceNlp {
    pub params: RunnerParams,
    pub sigma: SigmaProfile,
    pub slope: SlopeProfile,
    pub spec: Transcription,
    pub scaling: Scaling,
}

const NV: usize = 5;
const NS: usize = 4;
/// Local variables of one interval: both nodes plus `T`.
const NL: usize = 2 * NV + 1;

/// Builds the nonlinear program.
pub fn transcribe(p: &RunnerParams, s: &SigmaProfile, slope: &SlopeProfile, spec: Transcription) -> Result<RaceNlp> {
    spec.validate()?;
    p.validate()?;
    s.validate(p.e0)?;
    slope.validate()?;
    Ok(RaceNlp {
        params: *p,
        sigma: *s,
        slope: slope.clone(),
        spec,
        scaling: spec.scaling.unwrap_or_else(|| Scaling::heuristic(p, s)),
    })
}

impl RaceNlp {
    pub fn n_nodes(&self) -> usize {
        self.spec.n_nodes
    }

    fn h(&self) -> f64 {
        1.0 / (self.n_nodes() - 1) as f64
    }

    fn t_index(&self) -> usize {
        NV * self.n_nodes()
    }

    fn global(&self, k: usize, local: usize) -> usize {
        if local == 2 * NV {
            self.t_index()
        } else {
            NV * k + local
        }
    }

    fn rhs<T: Real>(&self, y: [T; 4], u: T) -> [T; 4] {
        dynamics_generic(y, u, &self.params, &self.sigma, &self.slope, self.spec.smoothing)
    }

    /// Defects of interval `k` from unscaled local values, divided by the
    /// state scales.
    fn defects<T: Real>(&self, loc: &[T; NL]) -> [T; NS] {
        let sc = self.scaling.state();
        let y0 = [loc[0], loc[1], loc[2], loc[3]];
        let y1 = [loc[5], loc[6], loc[7], loc[8]];
        let (u0, u1, tf) = (loc[4], loc[9], loc[10]);
        let ht = tf * self.h();
        let f0 = self.rhs(y0, u0);
        let f1 = self.rhs(y1, u1);
        let mut out = [T::cst(0.0); NS];
        match self.spec.scheme {
            Scheme::Trapezoidal => {
                for j in 0..NS {
                    out[j] = (y1[j] - y0[j] - ht * 0.5 * (f0[j] + f1[j])) / sc[j];
                }
            }
            Scheme::HermiteSimpson => {
                let mut ym = [T::cst(0.0); NS];
                for j in 0..NS {
                    ym[j] = (y0[j] + y1[j]) * 0.5 + ht * 0.125 * (f0[j] - f1[j]);
                }
                let fm = self.rhs(ym, (u0 + u1) * 0.5);
                for j in 0..NS {
                    out[j] = (y1[j] - y0[j] - ht / 6.0 * (f0[j] + fm[j] * 4.0 + f1[j])) / sc[j];
                }
            }
        }
        out
    }

    /// Scaled objective contribution of interval `k` from `(u_k, u_{k+1}, T)`
    /// (unscaled), excluding the linear `T` term.
    fn control_cost<T: Real>(&self, u0: T, u1: T, tf: T) -> T {
        let h = self.h();
        let q = match self.spec.scheme {
            Scheme::Trapezoidal => (u0 * u0 + u1 * u1) * (0.5 * h),
            Scheme::HermiteSimpson => (u0 * u0 + u0 * u1 + u1 * u1) * (h / 3.0),
        };
        tf * q * (0.5 * self.params.alpha / self.scaling.objective)
    }

    fn local_f64(&self, z: &[f64], k: usize) -> [f64; NL] {
        let sc = self.scaling.state();
        let mut loc = [0.0; NL];
        for i in 0..2 * NV {
            loc[i] = z[self.global(k, i)] * sc[i % NV];
        }
        loc[10] = z[self.t_index()] * self.scaling.t_f;
        loc
    }

    fn local_dual(&self, z: &[f64], k: usize) -> [Dual2<NL>; NL] {
        let sc = self.scaling.state();
        let mut loc = [Dual2::constant(0.0); NL];
        for i in 0..2 * NV {
            loc[i] = Dual2::var(z[self.global(k, i)], i) * sc[i % NV];
        }
        loc[10] = Dual2::var(z[self.t_index()], 10) * self.scaling.t_f;
        loc
    }

    /// Packs unscaled node values into a decision vector.
    pub fn pack(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        let n = self.n_nodes();
        if traj.states.len() != n || traj.controls.len() != n {
            return Err(Error::InvalidParameter(format!(
                "trajectory has {} nodes, transcription expects {n}",
                traj.states.len()
            )));
        }
        let sc = self.scaling.state();
        let mut z = vec![0.0; self.n_vars()];
        for k in 0..n {
            let s = traj.states[k];
            let vals = [s.x, s.v, s.f, s.e, traj.controls[k]];
            for j in 0..NV {
                z[NV * k + j] = vals[j] / sc[j];
            }
        }
        z[self.t_index()] = traj.t_f / self.scaling.t_f;
        // Boundary values are pinned.
        let (lo, hi) = self.bounds();
        for i in 0..z.len() {
            z[i] = z[i].clamp(lo[i], hi[i]);
        }
        Ok(z)
    }

    /// Unscaled trajectory from a decision vector.
    pub fn unpack(&self, z: &[f64]) -> Trajectory {
        let n = self.n_nodes();
        let sc = self.scaling.state();
        let t_f = z[self.t_index()] * self.scaling.t_f;
        let mut states = Vec::with_capacity(n);
        let mut controls = Vec::with_capacity(n);
        let mut times = Vec::with_capacity(n);
        for k in 0..n {
            let v = |j: usize| z[NV * k + j] * sc[j];
            states.push(State {
                x: v(0),
                v: v(1),
                f: v(2),
                e: v(3),
            });
            controls.push(v(4));
            times.push(if k + 1 == n { t_f } else { t_f * k as f64 * self.h() });
        }
        Trajectory {
            times,
            states,
            controls,
            objective: self.physical_objective(z),
            t_f,
            kkt_residual: f64::NAN,
        }
    }

    /// `t_f + (α/2) t_f ∫₀¹ u²` in seconds.
    pub fn physical_objective(&self, z: &[f64]) -> f64 {
        self.objective(z) * self.scaling.objective
    }

    /// Unscaled defects `[x, v, f, e]` of every interval.
    pub fn raw_defects(&self, z: &[f64]) -> Vec<[f64; NS]> {
        let sc = self.scaling.state();
        (0..self.n_nodes() - 1)
            .map(|k| {
                let d = self.defects(&self.local_f64(z, k));
                [d[0] * sc[0], d[1] * sc[1], d[2] * sc[2], d[3] * sc[3]]
            })
            .collect()
    }
}

impl Nlp for RaceNlp {
    fn n_vars(&self) -> usize {
        NV * self.n_nodes() + 1
    }

    fn n_constraints(&self) -> usize {
        NS * (self.n_nodes() - 1)
    }

    fn n_border(&self) -> usize {
        1
    }

    fn bandwidth(&self) -> usize {
        2 * NV - 1
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_nodes();
        let p = &self.params;
        let sc = &self.scaling;
        let mut lo = vec![f64::NEG_INFINITY; self.n_vars()];
        let mut hi = vec![f64::INFINITY; self.n_vars()];
        for k in 0..n {
            lo[NV * k + 2] = 0.0;
            lo[NV * k + 3] = 0.0;
        }
        let pin = |lo: &mut Vec<f64>, hi: &mut Vec<f64>, i: usize, v: f64| {
            lo[i] = v;
            hi[i] = v;
        };
        pin(&mut lo, &mut hi, 0, 0.0);
        pin(&mut lo, &mut hi, 1, p.v0 / sc.v);
        pin(&mut lo, &mut hi, 3, 1.0);
        pin(&mut lo, &mut hi, NV * (n - 1), p.distance / sc.x);
        pin(&mut lo, &mut hi, NV * (n - 1) + 3, 0.0);
        lo[self.t_index()] = 1e-3 / sc.t_f;
        (lo, hi)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let tf = z[self.t_index()] * self.scaling.t_f;
        let su = self.scaling.u;
        let mut j = tf / self.scaling.objective;
        for k in 0..self.n_nodes() - 1 {
            j += self.control_cost(z[NV * k + 4] * su, z[NV * (k + 1) + 4] * su, tf);
        }
        j
    }

    fn constraints(&self, z: &[f64], c: &mut [f64]) {
        for k in 0..self.n_nodes() - 1 {
            let d = self.defects(&self.local_f64(z, k));
            c[NS * k..NS * (k + 1)].copy_from_slice(&d);
        }
    }

    fn derivatives(&self, z: &[f64], weights: &[f64]) -> Derivatives {
        let n = self.n_nodes();
        let nv = self.n_vars();
        let ti = self.t_index();
        let mut grad = vec![0.0; nv];
        let mut hess = BorderedBand::zeros(nv, 1, self.bandwidth());
        let mut jac = Vec::with_capacity(self.n_constraints());
        grad[ti] = self.scaling.t_f / self.scaling.objective;
        let su = self.scaling.u;
        let st = self.scaling.t_f;
        for k in 0..n - 1 {
            // objective
            let idx = [NV * k + 4, NV * (k + 1) + 4, ti];
            let q: Dual2<3> = self.control_cost(
                Dual2::var(z[idx[0]], 0) * su,
                Dual2::var(z[idx[1]], 1) * su,
                Dual2::var(z[ti], 2) * st,
            );
            for a in 0..3 {
                grad[idx[a]] += q.g[a];
                for b in a..3 {
                    hess.add(idx[a], idx[b], q.hess(a, b));
                }
            }
            // defects
            let d = self.defects(&self.local_dual(z, k));
            let mut hl = [[0.0; NL]; NL];
            for j in 0..NS {
                let w = weights[NS * k + j];
                let row: Vec<(usize, f64)> = (0..NL)
                    .filter(|&i| d[j].g[i] != 0.0)
                    .map(|i| (self.global(k, i), d[j].g[i]))
                    .collect();
                jac.push(row);
                if w != 0.0 {
                    for a in 0..NL {
                        for b in a..NL {
                            hl[a][b] += w * d[j].hess(a, b);
                        }
                    }
                }
            }
            for a in 0..NL {
                for b in a..NL {
                    if hl[a][b] != 0.0 {
                        hess.add(self.global(k, a), self.global(k, b), hl[a][b]);
                    }
                }
            }
        }
        Derivatives { grad, jac, hess }
    }
}

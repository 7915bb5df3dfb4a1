//! The full optimal control problem
//!
//! ```text
//! min  t_f + (α/2) ∫ u²
//! x' = v,  v' = −v/τ + f − g β(x),  f' = γ (u (F_max − f) − f),  e' = σ(e) − f v
//! x(0) = 0, x(t_f) = d, v(0) = v⁰, e(0) = e⁰, e(t_f) = 0, e ≥ 0, f ≥ 0
//! ```
//!
//! solved by direct collocation ([`transcription`]) and an
//! augmented-Lagrangian Newton method ([`solver`]), started from the
//! closed-form turnpike profile. Also hosts the reduced end-of-race problem
//! ([`end_phase`]) and the sigmoid force laws of its Pontryagin analysis
//! ([`pmp`]).

pub mod banded;
pub mod end_phase;
pub mod pmp;
pub mod solver;
pub mod transcription;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dynamics_rhs, ModelConfig, RunnerParams, SigmaProfile, SlopeProfile, State};
use crate::numerics::integrate_ode;
use crate::turnpike;

pub use end_phase::{solve_end_phase, solve_end_phase_with, EndPhaseProblem};
pub use pmp::{pmp_sigmoid, PmpSigmoid};
pub use solver::{solve_nlp, Nlp, SolveReport, SolverOptions};
pub use transcription::{transcribe, RaceNlp, Scaling, Scheme, Transcription};

/// A sampled optimal (or candidate) race.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Node times, from 0 to `t_f` [s].
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Neural drive at the nodes.
    pub controls: Vec<f64>,
    pub objective: f64,
    pub t_f: f64,
    /// `NaN` for trajectories that did not come out of a solver.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Max,
    Min,
}

/// A local extremum of the velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub t: f64,
    pub v: f64,
    pub kind: ExtremumKind,
}

/// Means over the middle half of the distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauStats {
    pub x_start: f64,
    pub x_end: f64,
    pub v_mean: f64,
    pub f_mean: f64,
    pub u_mean: f64,
    /// Largest `|v − v_mean|` in the window.
    pub v_spread: f64,
}

impl Trajectory {
    /// `n` uniform nodes on `[0, t_f]`, every state equal to `state`.
    pub fn constant(n: usize, t_f: f64, state: State, u: f64) -> Self {
        let times = (0..n).map(|k| t_f * k as f64 / (n - 1) as f64).collect();
        Trajectory {
            times,
            states: vec![state; n],
            controls: vec![u; n],
            objective: f64::NAN,
            t_f,
            kkt_residual: f64::NAN,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn distance(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.x)
    }

    /// Piecewise-linear resampling on `n` uniform nodes.
    pub fn resample(&self, n: usize) -> Trajectory {
        let mut out = Trajectory::constant(n, self.t_f, State::default(), 0.0);
        for k in 0..n {
            let t = out.times[k];
            let (s, u) = self.at_time(t);
            out.states[k] = s;
            out.controls[k] = u;
        }
        out.objective = self.objective;
        out
    }

    fn bracket(grid: &[f64], q: f64) -> (usize, f64) {
        let n = grid.len();
        if q <= grid[0] {
            return (0, 0.0);
        }
        if q >= grid[n - 1] {
            return (n - 2, 1.0);
        }
        let i = grid.partition_point(|g| *g <= q).clamp(1, n - 1) - 1;
        let w = (q - grid[i]) / (grid[i + 1] - grid[i]);
        (i, w)
    }

    fn lerp_state(&self, i: usize, w: f64) -> (State, f64) {
        let (a, b) = (self.states[i], self.states[i + 1]);
        let l = |p: f64, q: f64| p + w * (q - p);
        (
            State {
                x: l(a.x, b.x),
                v: l(a.v, b.v),
                f: l(a.f, b.f),
                e: l(a.e, b.e),
            },
            l(self.controls[i], self.controls[i + 1]),
        )
    }

    /// Linear interpolation in time.
    pub fn at_time(&self, t: f64) -> (State, f64) {
        let (i, w) = Self::bracket(&self.times, t);
        self.lerp_state(i, w)
    }

    /// Linear interpolation in distance (positions are increasing on any
    /// sensible race).
    pub fn at_distance(&self, x: f64) -> (State, f64) {
        let xs: Vec<f64> = self.states.iter().map(|s| s.x).collect();
        let (i, w) = Self::bracket(&xs, x);
        self.lerp_state(i, w)
    }

    /// Means of v, f, u on nodes with `x` in the middle half of the race.
    pub fn plateau(&self) -> PlateauStats {
        let d = self.distance();
        let (lo, hi) = (0.25 * d, 0.75 * d);
        let mut sum = [0.0; 3];
        let mut count = 0usize;
        for (s, u) in self.states.iter().zip(&self.controls) {
            if s.x >= lo && s.x <= hi {
                sum[0] += s.v;
                sum[1] += s.f;
                sum[2] += *u;
                count += 1;
            }
        }
        let c = count.max(1) as f64;
        let v_mean = sum[0] / c;
        let v_spread = self
            .states
            .iter()
            .filter(|s| s.x >= lo && s.x <= hi)
            .map(|s| (s.v - v_mean).abs())
            .fold(0.0, f64::max);
        PlateauStats {
            x_start: lo,
            x_end: hi,
            v_mean,
            f_mean: sum[1] / c,
            u_mean: sum[2] / c,
            v_spread,
        }
    }

    /// `(e(t_f), min e)`.
    pub fn energy_bounds(&self) -> (f64, f64) {
        let end = self.states.last().map_or(f64::NAN, |s| s.e);
        let min = self.states.iter().map(|s| s.e).fold(f64::INFINITY, f64::min);
        (end, min)
    }

    /// Turning points of `v` along the nodes, with hysteresis: a maximum
    /// is reported once `v` has fallen `prominence` below it (and
    /// conversely), so ripples smaller than `prominence` are ignored.
    /// The end points are never reported.
    pub fn velocity_extrema(&self, prominence: f64) -> Vec<Extremum> {
        let mut out = Vec::new();
        let n = self.states.len();
        if n < 3 {
            return out;
        }
        let at = |i: usize, kind| Extremum {
            x: self.states[i].x,
            t: self.times[i],
            v: self.states[i].v,
            kind,
        };
        let v = |i: usize| self.states[i].v;
        // direction unknown until the first move larger than `prominence`
        let (mut hi, mut lo) = (0, 0);
        let mut rising: Option<bool> = None;
        for i in 1..n {
            match rising {
                None => {
                    if v(i) > v(hi) {
                        hi = i;
                    }
                    if v(i) < v(lo) {
                        lo = i;
                    }
                    if v(hi) - v(lo) >= prominence {
                        rising = Some(hi > lo);
                        if hi > lo && lo > 0 {
                            out.push(at(lo, ExtremumKind::Min));
                        } else if lo > hi && hi > 0 {
                            out.push(at(hi, ExtremumKind::Max));
                        }
                    }
                }
                Some(true) => {
                    if v(i) > v(hi) {
                        hi = i;
                    } else if v(hi) - v(i) >= prominence {
                        out.push(at(hi, ExtremumKind::Max));
                        rising = Some(false);
                        lo = i;
                    }
                }
                Some(false) => {
                    if v(i) < v(lo) {
                        lo = i;
                    } else if v(i) - v(lo) >= prominence {
                        out.push(at(lo, ExtremumKind::Min));
                        rising = Some(true);
                        hi = i;
                    }
                }
            }
        }
        out
    }

    /// Checks the structural invariants: increasing times from 0 to `t_f`,
    /// matching lengths, finite values.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 || self.states.len() != n || self.controls.len() != n {
            return Err(Error::InvalidParameter("trajectory arrays have inconsistent lengths".into()));
        }
        if self.times[0] != 0.0 || (self.times[n - 1] - self.t_f).abs() > 1e-9 * self.t_f.abs().max(1.0) {
            return Err(Error::InvalidParameter("trajectory must span [0, t_f]".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("trajectory times must increase strictly".into()));
        }
        let finite = self
            .states
            .iter()
            .all(|s| s.x.is_finite() && s.v.is_finite() && s.f.is_finite() && s.e.is_finite())
            && self.controls.iter().all(|u| u.is_finite());
        if !finite {
            return Err(Error::NonFinite { step: 0, t: 0.0 });
        }
        Ok(())
    }
}

/// Starting point built from the closed-form turnpike profile.
///
/// Velocity and force follow the three-phase approximation (force capped
/// just below `F_max`), position is its integral, energy is simulated along
/// it and then tilted linearly so it ends at zero, and the drive is read off
/// the force equation.
pub fn initial_guess(p: &RunnerParams, s: &SigmaProfile, n: usize) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two nodes".into()));
    }
    let three = s.as_three_piece();
    let profile = match turnpike::assemble_profile(p, &three) {
        Ok((_, prof)) => Some(prof),
        Err(e) => {
            warn!("turnpike profile unavailable ({e}); starting from a constant pace");
            None
        }
    };
    let (t_f, vel, force): (f64, Curve, Curve) = match profile {
        Some(pr) => (pr.t_f, Box::new(move |t| pr.velocity(t)), Box::new(move |t| pr.force(t))),
        None => {
            let v = turnpike::mean_velocity_simple(p, s.sigma_bar).min(0.9 * p.tau * p.f_max);
            let tf = p.distance / v;
            let v0 = p.v0;
            let tau = p.tau;
            (
                tf,
                Box::new(move |t| v + (v0 - v) * (-t / tau).exp()),
                Box::new(move |_| v / tau),
            )
        }
    };
    let cap = 0.97 * p.f_max;
    let mut traj = Trajectory::constant(n, t_f, State::default(), 0.0);
    let h = t_f / (n - 1) as f64;
    let mut x = 0.0;
    let mut e = p.e0;
    let sub = 16;
    for k in 0..n {
        let t = traj.times[k];
        let f = force(t).min(cap);
        traj.states[k] = State { x, v: vel(t), f, e };
        if k + 1 < n {
            let dt = h / sub as f64;
            for j in 0..sub {
                let ta = t + j as f64 * dt;
                let tm = ta + 0.5 * dt;
                let tb = ta + dt;
                let (va, vm, vb) = (vel(ta), vel(tm), vel(tb));
                x += dt / 6.0 * (va + 4.0 * vm + vb);
                let sig = s.eval_smooth(e, p.e0, 0.0).0;
                e += dt * (sig - force(tm).min(cap) * vm);
            }
        }
    }
    let x_end = traj.states[n - 1].x;
    let e_end = traj.states[n - 1].e;
    for k in 0..n {
        let w = k as f64 / (n - 1) as f64;
        let st = &mut traj.states[k];
        st.x *= p.distance / x_end;
        st.e = (st.e - w * e_end).max(0.0);
    }
    traj.states[n - 1].e = 0.0;
    for k in 0..n {
        let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
        let fdot = (traj.states[b].f - traj.states[a].f) / (traj.times[b] - traj.times[a]);
        let f = traj.states[k].f;
        traj.controls[k] = ((fdot / p.gamma_motor + f) / (p.f_max - f)).clamp(-50.0, 50.0);
    }
    Ok(traj)
}

/// Solves the transcribed problem from `init`, which is resampled to the
/// transcription's mesh if needed.
pub fn solve(nlp: &RaceNlp, init: &Trajectory, opts: &SolverOptions) -> Result<Trajectory> {
    init.validate()?;
    let n = nlp.n_nodes();
    let start = if init.len() == n { init.clone() } else { init.resample(n) };
    let z0 = nlp.pack(&start)?;
    let report = solve_nlp(nlp, &z0, opts)?;
    debug!(
        "nodes {n}: {} outer / {} newton iterations, kkt {:.2e}",
        report.outer_iterations, report.newton_iterations, report.kkt_residual
    );
    let mut traj = nlp.unpack(&report.z);
    traj.kkt_residual = report.kkt_residual;
    Ok(traj)
}

/// Full pipeline: turnpike initialization, a coarse solve on large meshes,
/// then the requested mesh.
pub fn solve_config(cfg: &ModelConfig, spec: Transcription, opts: &SolverOptions) -> Result<Trajectory> {
    cfg.validate()?;
    let nlp = transcribe(&cfg.runner, &cfg.sigma, &cfg.slope, spec)?;
    let mut init = initial_guess(&cfg.runner, &cfg.sigma, spec.n_nodes.min(100))?;
    if spec.n_nodes > 150 {
        // Gradient steps narrower than two mesh intervals are not resolved on
        // the coarse mesh, so widen them there.
        let mut smoothing = spec.smoothing;
        smoothing.slope_width = smoothing.slope_width.max(2.0 * cfg.runner.distance / 99.0);
        let coarse_spec = Transcription {
            n_nodes: 100,
            smoothing,
            ..spec
        };
        let coarse = transcribe(&cfg.runner, &cfg.sigma, &cfg.slope, coarse_spec)?;
        let coarse_opts = SolverOptions { tol: opts.tol.max(1e-6), ..*opts };
        match solve(&coarse, &init, &coarse_opts) {
            Ok(t) => init = t,
            Err(e) => warn!("coarse solve failed ({e}); using the turnpike start directly"),
        }
    }
    let traj = solve(&nlp, &init, opts)?;
    info!("t_f = {:.4} s, objective {:.6}, kkt {:.2e}", traj.t_f, traj.objective, traj.kkt_residual);
    Ok(traj)
}

type Curve = Box<dyn Fn(f64) -> f64>;

/// Differences between a trajectory and an RK4 re-simulation of the
/// unsmoothed dynamics driven by its (piecewise-linear) control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub x_end: f64,
    pub v_end: f64,
    pub e_end: f64,
    /// Largest velocity gap over the race [m/s].
    pub max_v_gap: f64,
}

pub fn audit_unsmoothed(traj: &Trajectory, p: &RunnerParams, s: &SigmaProfile, slope: &SlopeProfile) -> Result<DriftReport> {
    traj.validate()?;
    let y0 = traj.states[0].to_array();
    let dt = (traj.t_f / (traj.len() - 1) as f64 / 8.0).min(0.05);
    let path = integrate_ode(
        |t, y, dy| {
            let (_, u) = traj.at_time(t);
            let r = dynamics_rhs(&State::from_slice(y), u, p, s, slope);
            dy.copy_from_slice(&r.to_array());
        },
        &y0,
        (0.0, traj.t_f),
        dt,
    )?;
    let mut max_v_gap = 0.0f64;
    for (t, y) in path.t.iter().zip(&path.y) {
        max_v_gap = max_v_gap.max((traj.at_time(*t).0.v - y[1]).abs());
    }
    let last = path.last();
    Ok(DriftReport {
        x_end: last[0],
        v_end: last[1],
        e_end: last[3],
        max_v_gap,
    })
}

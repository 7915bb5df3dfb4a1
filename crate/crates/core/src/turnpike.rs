//! Closed-form approximation of the optimal velocity profile.
//!
//! The race splits into three phases driven by the three pieces of σ:
//!
//! 1. `0 ≤ t ≤ t1`: the force decreases linearly from `f0` to the turnpike
//!    force `f̄`, the velocity follows the relaxed closed form
//!    `v0 e^{-t/τ} + τ f(t) (1 - e^{-t/τ})`.
//! 2. `t1 ≤ t ≤ t2`: the turnpike, `v = v̄`, `f = f̄ = v̄/τ`.
//! 3. `t2 ≤ t ≤ t_f`: a logistic sprint `v = τ F_max / (1 + (F_max/f̄ - 1) e^{-γ λ F_max (t - t2)})`.
//!
//! [`assemble_profile`] chains the steps: turnpike velocity, phase
//! durations, start force, end-phase duration, sprint shape, and finally
//! the turnpike length that closes the distance exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RunnerParams, SigmaProfile, SigmaVariant};
use crate::numerics::{find_root, find_root_in, integrate, Bracket, QuadratureSpec, DEFAULT_ROOT_TOL};

/// Which decay rate to use in the end-phase energy identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndDecayRate {
    /// `A = (σ̄ - σ_f) / (γ1 e0)`: the slope of the final σ branch.
    #[default]
    FinalBranch,
    /// `A = (σ̄ - σ_r) / (γ1 e0)`.
    RestBased,
}

impl EndDecayRate {
    pub fn rate(self, p: &RunnerParams, s: &SigmaProfile) -> f64 {
        let top = match self {
            EndDecayRate::FinalBranch => s.sigma_bar - s.sigma_f,
            EndDecayRate::RestBased => s.sigma_bar - s.sigma_r,
        };
        top / (s.gamma1 * p.e0)
    }
}

/// Every quantity derived along the approximation chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnpikeSolution {
    /// Turnpike velocity with constant σ = σ̄ over the whole race [m/s].
    pub v_bar_simple: f64,
    /// Turnpike velocity accounting for the three σ phases [m/s].
    pub v_bar: f64,
    pub f_bar: f64,
    pub u_bar: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_f: f64,
    /// Final time of the pure turnpike trajectory (log form) [s].
    pub t_bar: f64,
    pub f0: f64,
    pub v_max: f64,
    pub d1: f64,
    /// Turnpike distance before the distance-closing correction [m].
    pub d_bar: f64,
    /// Final-phase duration [s].
    pub dt_end: f64,
    pub lambda: f64,
    pub v_f: f64,
    /// Central duration from the energy balance, before correction [s].
    pub central_duration: f64,
    /// `t2 - t1` after closing the distance [s].
    pub corrected_central_duration: f64,
    /// Linearized estimate of the final-phase duration [s].
    pub final_phase_estimate: f64,
    /// Distance covered by the sprint [m].
    pub d_end: f64,
    /// Decay rate used in the end-phase energy identity [1/s].
    pub end_decay_rate: f64,
}

/// Phase durations obtained from the turnpike velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    /// Linearized duration of the ramp-up phase [s].
    pub t1: f64,
    /// Duration of the σ = σ̄ phase [s].
    pub central: f64,
    /// Linearized duration of the final phase [s].
    pub final_phase: f64,
    /// Exact (log-form) final time of the turnpike trajectory [s].
    pub t_bar: f64,
}

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-12,
        max_depth: 40,
    }
}

fn require_three_piece(s: &SigmaProfile) -> Result<()> {
    if s.variant != SigmaVariant::ThreePiece {
        return Err(Error::InvalidParameter(
            "the closed-form chain needs a three-piece sigma profile".into(),
        ));
    }
    Ok(())
}

/// Turnpike velocity with σ ≡ σ̄: the positive root of
/// `v²/τ - σ̄ = e0 v / d`.
pub fn mean_velocity_simple(p: &RunnerParams, sigma_bar: f64) -> f64 {
    velocity_with_energy(p.e0, p.tau, p.distance, sigma_bar)
}

fn velocity_with_energy(e0: f64, tau: f64, d: f64, sigma_bar: f64) -> f64 {
    let c = e0 * tau / (2.0 * d);
    c + (sigma_bar * tau + c * c).sqrt()
}

/// Turnpike velocity on a constant gradient `delta` (positive uphill): the
/// climb costs `d g δ` of the anaerobic budget.
pub fn turnpike_with_slope(p: &RunnerParams, s: &SigmaProfile, delta: f64) -> f64 {
    turnpike_with_slope_g(p, s, delta, 9.81)
}

pub fn turnpike_with_slope_g(p: &RunnerParams, s: &SigmaProfile, delta: f64, g: f64) -> f64 {
    velocity_with_energy(p.e0 - p.distance * g * delta, p.tau, p.distance, s.sigma_bar)
}

/// Distance covered by the three constant-velocity phases minus `d`.
///
/// Strictly decreasing in `v` above `√(σ̄ τ)`.
pub fn dv_residual(p: &RunnerParams, s: &SigmaProfile, v: f64) -> f64 {
    let w = v * v / p.tau;
    v * s.gamma2 / (w - s.sigma_r)
        + v * (p.e0 * (1.0 - s.gamma1) - s.gamma2) / (w - s.sigma_bar)
        + v * p.e0 * s.gamma1 / (w - s.sigma_f)
        - p.distance
}

/// Turnpike velocity accounting for the ramp-up and final σ phases.
pub fn turnpike_velocity(p: &RunnerParams, s: &SigmaProfile) -> Result<f64> {
    require_three_piece(s)?;
    let lo = (s.sigma_bar * p.tau).sqrt() * (1.0 + 1e-9) + 1e-9;
    let hi = p.f_max * p.tau;
    if !(hi > lo) {
        return Err(Error::Infeasible(format!(
            "f_max * tau = {hi} does not exceed sqrt(sigma_bar * tau) = {lo}"
        )));
    }
    let f = |v| dv_residual(p, s, v);
    let bracket = Bracket::new(f, lo, hi).map_err(|_| {
        Error::Infeasible(format!(
            "distance {} not reachable with a turnpike velocity in ({lo}, {hi})",
            p.distance
        ))
    })?;
    find_root(f, bracket, DEFAULT_ROOT_TOL)
}

/// Phase durations at turnpike velocity `v_bar`.
pub fn phase_times(p: &RunnerParams, s: &SigmaProfile, v_bar: f64) -> Result<PhaseTimes> {
    let w = v_bar * v_bar / p.tau;
    if !(w > s.sigma_bar) {
        return Err(Error::Infeasible(format!(
            "power at turnpike v^2/tau = {w} must exceed sigma_bar = {}",
            s.sigma_bar
        )));
    }
    let t1 = s.gamma2 / (w - s.sigma_r);
    let central = (p.e0 * (1.0 - s.gamma1) - s.gamma2) / (w - s.sigma_bar);
    let final_phase = p.e0 * s.gamma1 / (w - s.sigma_f);
    let arg_start = 1.0 - (s.sigma_bar - s.sigma_r) / (w - s.sigma_r);
    let arg_end = 1.0 - (s.sigma_bar - s.sigma_f) / (w - s.sigma_f);
    if !(arg_start > 0.0 && arg_end > 0.0) {
        return Err(Error::Infeasible("non-positive logarithm argument in turnpike time".into()));
    }
    let start = -s.gamma2 / (s.sigma_bar - s.sigma_r) * arg_start.ln();
    // σ̄ = σ_f collapses the final exponential to its linear limit.
    let end = if s.sigma_bar > s.sigma_f {
        -p.e0 * s.gamma1 / (s.sigma_bar - s.sigma_f) * arg_end.ln()
    } else {
        final_phase
    };
    Ok(PhaseTimes {
        t1,
        central,
        final_phase,
        t_bar: central + start + end,
    })
}

/// Velocity of the start phase for a force falling linearly from `f0` at
/// `t = 0` to `v_bar / τ` at `t1`.
pub fn start_velocity(p: &RunnerParams, v_bar: f64, t1: f64, f0: f64, t: f64) -> f64 {
    let f = f0 + t * (v_bar / p.tau - f0) / t1;
    let decay = (-t / p.tau).exp();
    p.v0 * decay + p.tau * f * (1.0 - decay)
}

/// Energy balance of the start phase as a function of the initial force:
/// weighted work of `f v` minus the energy released while σ ramps up.
pub fn initial_force_residual(p: &RunnerParams, s: &SigmaProfile, v_bar: f64, t1: f64, f0: f64) -> Result<f64> {
    let a = (s.sigma_bar - s.sigma_r) / s.gamma2;
    let work = integrate(
        |t| {
            let f = f0 + t * (v_bar / p.tau - f0) / t1;
            f * start_velocity(p, v_bar, t1, f0, t) * (a * (t - t1)).exp()
        },
        0.0,
        t1,
        quad_spec(),
    )?;
    let released = s.gamma2 + s.sigma_r * s.gamma2 / (s.sigma_bar - s.sigma_r) * (1.0 - (-a * t1).exp());
    Ok(work - released)
}

/// Initial force `f0` matching the start-phase energy balance.
pub fn initial_force(p: &RunnerParams, s: &SigmaProfile, v_bar: f64, t1: f64) -> Result<f64> {
    if !(t1 > 0.0) {
        return Err(Error::InvalidParameter(format!("t1 must be positive, got {t1}")));
    }
    let lo = v_bar / p.tau;
    let g = |f0: f64| initial_force_residual(p, s, v_bar, t1, f0).unwrap_or(f64::NAN);
    for headroom in [1.5, 4.0] {
        if let Ok(b) = Bracket::new(g, lo, p.f_max * headroom) {
            return find_root(g, b, DEFAULT_ROOT_TOL);
        }
    }
    Err(Error::Infeasible(format!(
        "no initial force in ({lo}, {}] balances the start-phase energy",
        p.f_max * 4.0
    )))
}

/// Logistic end-phase force starting from `f_bar`.
pub fn sprint_force(p: &RunnerParams, f_bar: f64, lambda: f64, t: f64) -> f64 {
    p.f_max / (1.0 + (p.f_max / f_bar - 1.0) * (-p.gamma_motor * lambda * p.f_max * t).exp())
}

/// Residual of the end-phase energy identity at shape `lambda`.
pub fn sprint_residual(
    p: &RunnerParams,
    s: &SigmaProfile,
    f_bar: f64,
    dt_end: f64,
    lambda: f64,
    decay: EndDecayRate,
) -> Result<f64> {
    let a = decay.rate(p, s);
    let lhs = integrate(
        |t| {
            let v = p.tau * sprint_force(p, f_bar, lambda, t);
            v * v * (-a * t).exp()
        },
        0.0,
        dt_end,
        quad_spec(),
    )?;
    let rhs = p.tau * s.sigma_f / a * (1.0 - (-a * dt_end).exp()) + p.tau * s.gamma1 * p.e0;
    Ok(lhs - rhs)
}

/// Sprint shape `λ > 0` such that the logistic force spends exactly the
/// residual anaerobic energy over `dt_end`.
pub fn sprint_lambda(
    p: &RunnerParams,
    s: &SigmaProfile,
    f_bar: f64,
    dt_end: f64,
    decay: EndDecayRate,
) -> Result<f64> {
    if !(dt_end > 0.0) {
        return Err(Error::Infeasible(format!("final phase duration must be positive, got {dt_end}")));
    }
    let g = |l: f64| sprint_residual(p, s, f_bar, dt_end, l, decay).unwrap_or(f64::NAN);
    let at_zero = g(0.0);
    if at_zero >= 0.0 {
        return Err(Error::Infeasible(
            "constant turnpike force already exhausts the final-phase energy; no sprint".into(),
        ));
    }
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible("sprint cannot spend the residual energy before F_max".into()));
        }
    }
    find_root_in(g, 0.0, hi, 1e-12)
}

/// Piecewise velocity profile of the approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub params: RunnerParams,
    pub v_bar: f64,
    pub f0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t_f: f64,
    pub lambda: f64,
}

impl VelocityProfile {
    pub fn f_bar(&self) -> f64 {
        self.v_bar / self.params.tau
    }

    /// Phase index 1, 2 or 3.
    pub fn phase(&self, t: f64) -> u8 {
        if t < self.t1 {
            1
        } else if t < self.t2 {
            2
        } else {
            3
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.phase(t) {
            1 => start_velocity(p, self.v_bar, self.t1, self.f0, t.max(0.0)),
            2 => self.v_bar,
            _ => p.tau * sprint_force(p, self.f_bar(), self.lambda, t - self.t2),
        }
    }

    pub fn force(&self, t: f64) -> f64 {
        match self.phase(t) {
            1 => self.f0 + t.max(0.0) * (self.f_bar() - self.f0) / self.t1,
            2 => self.f_bar(),
            _ => sprint_force(&self.params, self.f_bar(), self.lambda, t - self.t2),
        }
    }

    /// Distance covered by time `t`.
    pub fn distance(&self, t: f64) -> Result<f64> {
        let t = t.clamp(0.0, self.t_f);
        let spec = quad_spec();
        let p = &self.params;
        let d1 = integrate(
            |s| start_velocity(p, self.v_bar, self.t1, self.f0, s),
            0.0,
            t.min(self.t1),
            spec,
        )?;
        if t <= self.t1 {
            return Ok(d1);
        }
        let d2 = self.v_bar * (t.min(self.t2) - self.t1);
        if t <= self.t2 {
            return Ok(d1 + d2);
        }
        let f_bar = self.f_bar();
        let d3 = integrate(|s| p.tau * sprint_force(p, f_bar, self.lambda, s), 0.0, t - self.t2, spec)?;
        Ok(d1 + d2 + d3)
    }

    /// `n + 1` uniform samples `(t, v, phase)` over `[0, t_f]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64, u8)> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let t = self.t_f * i as f64 / n as f64;
                (t, self.velocity(t), self.phase(t))
            })
            .collect()
    }
}

/// Runs the full approximation chain.
pub fn assemble_profile(p: &RunnerParams, s: &SigmaProfile) -> Result<(TurnpikeSolution, VelocityProfile)> {
    assemble_profile_with(p, s, EndDecayRate::default())
}

pub fn assemble_profile_with(
    p: &RunnerParams,
    s: &SigmaProfile,
    decay: EndDecayRate,
) -> Result<(TurnpikeSolution, VelocityProfile)> {
    p.validate()?;
    s.validate(p.e0)?;
    let v_bar = turnpike_velocity(p, s)?;
    let f_bar = v_bar / p.tau;
    let times = phase_times(p, s, v_bar)?;
    let t1 = times.t1;
    let f0 = initial_force(p, s, v_bar, t1)?;
    let d1 = integrate(|t| start_velocity(p, v_bar, t1, f0, t), 0.0, t1, quad_spec())?;
    let d_bar = v_bar * times.central;
    let dt_end = (p.distance - d1 - d_bar) / v_bar;
    let lambda = sprint_lambda(p, s, f_bar, dt_end, decay)?;
    let d_end = integrate(|t| p.tau * sprint_force(p, f_bar, lambda, t), 0.0, dt_end, quad_spec())?;
    let corrected = (p.distance - d1 - d_end) / v_bar;
    if !(corrected > 0.0) {
        return Err(Error::Infeasible("start and sprint phases already exceed the distance".into()));
    }
    let t2 = t1 + corrected;
    let t_f = t2 + dt_end;
    let solution = TurnpikeSolution {
        v_bar_simple: mean_velocity_simple(p, s.sigma_bar),
        v_bar,
        f_bar,
        u_bar: f_bar / (p.f_max - f_bar),
        t1,
        t2,
        t_f,
        t_bar: times.t_bar,
        f0,
        v_max: p.tau * f0,
        d1,
        d_bar,
        dt_end,
        lambda,
        v_f: p.tau * sprint_force(p, f_bar, lambda, dt_end),
        central_duration: times.central,
        corrected_central_duration: corrected,
        final_phase_estimate: times.final_phase,
        d_end,
        end_decay_rate: decay.rate(p, s),
    };
    let profile = VelocityProfile {
        params: *p,
        v_bar,
        f0,
        t1,
        t2,
        t_f,
        lambda,
    };
    Ok((solution, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn fixture() -> (RunnerParams, SigmaProfile) {
        let c = fixtures::regional();
        (c.runner, c.sigma)
    }

    #[test]
    fn simple_velocity_limits() {
        let (mut p, s) = fixture();
        assert!((mean_velocity_simple(&p, 22.0) - 6.2).abs() < 0.05);
        p.e0 = 0.0;
        assert!((mean_velocity_simple(&p, 22.0) - (22.0f64 * 0.932).sqrt()).abs() < 1e-14);
        let (mut p, _) = fixture();
        let floor = (22.0f64 * 0.932).sqrt();
        let mut prev = f64::INFINITY;
        for d in [1500.0, 5000.0, 1e5, 1e8] {
            p.distance = d;
            let v = mean_velocity_simple(&p, s.sigma_bar);
            assert!(v > floor && v < prev);
            prev = v;
        }
        assert!(prev - floor < 1e-4);
    }

    #[test]
    fn simple_velocity_monotone_and_force_free() {
        let (p, s) = fixture();
        let base = mean_velocity_simple(&p, s.sigma_bar);
        let bump = |f: fn(&mut RunnerParams)| {
            let mut q = p;
            f(&mut q);
            mean_velocity_simple(&q, s.sigma_bar)
        };
        assert!(bump(|q| q.e0 *= 1.01) > base);
        assert!(bump(|q| q.tau *= 1.01) > base);
        assert!(mean_velocity_simple(&p, 22.5) > base);
        assert_eq!(bump(|q| q.f_max *= 2.0), base);
    }

    #[test]
    fn turnpike_velocity_matches_reference_value() {
        let (p, s) = fixture();
        let v = turnpike_velocity(&p, &s).unwrap();
        assert!((v - 6.06).abs() < 0.01, "{v}");
        let f_bar = v / p.tau;
        assert!((f_bar - 6.5).abs() < 0.02);
        assert!((f_bar / (p.f_max - f_bar) - 4.34).abs() < 0.05);
    }

    #[test]
    fn turnpike_velocity_collapses_without_phases() {
        let (p, mut s) = fixture();
        // gamma1 = gamma2 = 0 is outside the profile invariants, so the
        // residual is checked directly.
        s.gamma1 = 0.0;
        s.gamma2 = 0.0;
        let vc = mean_velocity_simple(&p, s.sigma_bar);
        assert!(dv_residual(&p, &s, vc).abs() < 1e-9);
        assert!((vc - 6.2).abs() < 0.05);
    }

    #[test]
    fn turnpike_velocity_increases_with_energy() {
        let (mut p, s) = fixture();
        // lift the force ceiling so the faster turnpike stays reachable
        p.f_max = 12.0;
        let v1 = turnpike_velocity(&p, &s).unwrap();
        p.e0 *= 2.0;
        assert!(turnpike_velocity(&p, &s).unwrap() > v1);
    }

    #[test]
    fn residual_strictly_decreasing() {
        let (p, s) = fixture();
        let lo = (s.sigma_bar * p.tau).sqrt();
        let mut prev = f64::INFINITY;
        for i in 1..2000 {
            let v = lo + i as f64 * 1e-3;
            let r = dv_residual(&p, &s, v);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn infeasible_when_force_ceiling_too_low() {
        let (mut p, s) = fixture();
        p.f_max = 5.0;
        p.v0 = 1.0;
        assert!(matches!(turnpike_velocity(&p, &s), Err(Error::Infeasible(_))));
    }

    #[test]
    fn four_piece_rejected_by_chain() {
        let c = fixtures::four_piece();
        assert!(turnpike_velocity(&c.runner, &c.sigma).is_err());
    }

    #[test]
    fn phase_times_reference_values() {
        let (p, s) = fixture();
        let v = turnpike_velocity(&p, &s).unwrap();
        let pt = phase_times(&p, &s, v).unwrap();
        assert!((pt.t1 - 16.95).abs() < 0.05);
        assert!((pt.central - 194.64).abs() < 0.5);
        assert!((pt.final_phase - 35.96).abs() < 0.5);
        assert!(pt.t_bar > pt.t1 + pt.central);
        assert!(phase_times(&p, &s, 4.0).is_err());
    }

    #[test]
    fn initial_force_and_start_distance() {
        let (p, s) = fixture();
        let v = turnpike_velocity(&p, &s).unwrap();
        let t1 = phase_times(&p, &s, v).unwrap().t1;
        let f0 = initial_force(&p, &s, v, t1).unwrap();
        assert!((f0 - 8.2).abs() < 0.1, "{f0}");
        let d1 = integrate(|t| start_velocity(&p, v, t1, f0, t), 0.0, t1, QuadratureSpec::default()).unwrap();
        assert!((d1 - 111.84).abs() < 1.0, "{d1}");
    }

    #[test]
    fn steady_start_balances_to_first_order() {
        // With v0 = v̄ and f0 = f̄ the start phase is already steady; the
        // balance then holds up to the (1 - e^{-x})/x ≈ 1 - x/2 term in
        // x = A t1 = (σ̄ - σ_r)/(v̄²/τ - σ_r), so the relative residual over x
        // tends to 1/2 as σ̄ approaches σ_r.
        let (mut p, mut s) = fixture();
        let v = 6.06;
        p.v0 = v;
        let w = v * v / p.tau;
        let t1 = 16.95;
        let mut ratios = Vec::new();
        for k in [16.0, 4.0, 1.0] {
            s.sigma_bar = s.sigma_r + k;
            s.gamma2 = t1 * (w - s.sigma_r);
            let a = (s.sigma_bar - s.sigma_r) / s.gamma2;
            let r = initial_force_residual(&p, &s, v, t1, v / p.tau).unwrap();
            ratios.push((r.abs() / s.gamma2) / (a * t1));
        }
        assert!((ratios[2] - 0.5).abs() < 0.01, "{ratios:?}");
        assert!((ratios[2] - 0.5).abs() < (ratios[0] - 0.5).abs());
    }

    #[test]
    fn sprint_lambda_reference_value() {
        let (p, s) = fixture();
        let f_bar = turnpike_velocity(&p, &s).unwrap() / p.tau;
        let l = sprint_lambda(&p, &s, f_bar, 34.42, EndDecayRate::FinalBranch).unwrap();
        assert!((l - 0.39).abs() < 0.01, "{l}");
        let a = EndDecayRate::FinalBranch.rate(&p, &s);
        assert!((a - 0.0028).abs() < 1e-4);
    }

    #[test]
    fn sprint_lambda_monotone_in_residual_energy() {
        let (p, s) = fixture();
        let f_bar = turnpike_velocity(&p, &s).unwrap() / p.tau;
        let mut prev = 0.0;
        for g1 in [0.14, 0.15, 0.16, 0.18, 0.2] {
            let s = SigmaProfile { gamma1: g1, ..s };
            let l = sprint_lambda(&p, &s, f_bar, 34.42, EndDecayRate::FinalBranch).unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn sprint_degenerates_without_residual_energy() {
        // σ_f = τ f̄² balances a constant force. Holding the decay rate fixed
        // while γ1 shrinks leaves only γ1 e0 to spend, and the sprint
        // flattens toward the constant turnpike force.
        let (p, s) = fixture();
        let f_bar = 6.5;
        let sigma_f = p.tau * f_bar * f_bar;
        let rate = 0.0028;
        let mut prev = f64::INFINITY;
        for g1 in [0.05, 0.005, 5e-4, 5e-5] {
            let s = SigmaProfile {
                gamma1: g1,
                sigma_f,
                sigma_bar: sigma_f + rate * p.e0 * g1,
                ..s
            };
            let l = sprint_lambda(&p, &s, f_bar, 34.42, EndDecayRate::FinalBranch).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(prev < 0.01, "{prev}");
        let s = SigmaProfile {
            sigma_f: 100.0,
            sigma_bar: 120.0,
            ..s
        };
        assert!(sprint_lambda(&p, &s, f_bar, 34.42, EndDecayRate::FinalBranch).is_err());
    }

    #[test]
    fn assembled_profile_reference_values() {
        let (p, s) = fixture();
        let (sol, prof) = assemble_profile(&p, &s).unwrap();
        assert!((sol.dt_end - 34.42).abs() < 0.5);
        assert!((sol.lambda - 0.39).abs() < 0.01);
        assert!((sol.t2 - 210.76).abs() < 0.5);
        assert!((sol.t_f - 245.19).abs() < 0.5);
        assert!((sol.v_f - 6.33).abs() < 0.05);
        assert!((sol.corrected_central_duration - 193.81).abs() < 0.5);
        assert!(0.0 < sol.t1 && sol.t1 < sol.t2 && sol.t2 < sol.t_f);
        let closure = sol.d1 + sol.v_bar * (sol.t2 - sol.t1) + sol.d_end;
        assert!((closure - p.distance).abs() < 1e-6 * p.distance);
        let total = prof.distance(prof.t_f).unwrap();
        assert!((total - p.distance).abs() < 1e-6 * p.distance, "{total}");
    }

    #[test]
    fn profile_is_continuous_at_phase_switches() {
        let (p, s) = fixture();
        let (_, prof) = assemble_profile(&p, &s).unwrap();
        for t in [prof.t1, prof.t2] {
            let jump = prof.velocity(t - 1e-9) - prof.velocity(t + 1e-9);
            assert!(jump.abs() < 1e-6, "jump {jump} at {t}");
        }
        assert_eq!(prof.velocity(0.0), p.v0);
        let samples = prof.sample(100);
        assert_eq!(samples.len(), 101);
        assert_eq!(samples[0].2, 1);
        assert_eq!(samples[100].2, 3);
    }

    #[test]
    fn rest_based_decay_is_selectable() {
        let (p, s) = fixture();
        let (sol, _) = assemble_profile_with(&p, &s, EndDecayRate::RestBased).unwrap();
        assert!(sol.lambda > 1.0);
        assert!((sol.end_decay_rate - 16.0 / (0.15 * 4651.0)).abs() < 1e-12);
    }

    #[test]
    fn slope_adjusted_turnpike() {
        let (p, s) = fixture();
        let flat = mean_velocity_simple(&p, s.sigma_bar);
        assert_eq!(turnpike_with_slope(&p, &s, 0.0), flat);
        assert!(turnpike_with_slope(&p, &s, 0.01) < flat);
        assert!(turnpike_with_slope(&p, &s, -0.01) > flat);
    }

    #[test]
    fn slope_first_order_change_matches_difference_quotient() {
        // Analytic derivative of the slope-adjusted velocity in δ versus a
        // central difference; the first-order prediction error scales as δ².
        let (p, s) = fixture();
        let g = 9.81;
        let c = p.e0 * p.tau / (2.0 * p.distance);
        let root = (s.sigma_bar * p.tau + c * c).sqrt();
        let dv_ddelta = -g * p.tau / 2.0 * (1.0 + c / root);
        let h = 1e-6;
        let fd = (turnpike_with_slope(&p, &s, h) - turnpike_with_slope(&p, &s, -h)) / (2.0 * h);
        assert!((fd - dv_ddelta).abs() < 1e-6 * dv_ddelta.abs());
        let flat = turnpike_with_slope(&p, &s, 0.0);
        let err = |d: f64| (turnpike_with_slope(&p, &s, d) - flat - dv_ddelta * d).abs();
        let (e1, e2) = (err(0.02), err(0.01));
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{}", e1 / e2);
    }
}

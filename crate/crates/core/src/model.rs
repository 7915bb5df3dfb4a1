//! Runner constants, the aerobic power curve σ(e), track gradient, and the
//! controlled dynamics
//!
//! ```text
//! x' = v
//! v' = -v/τ + f - g β(x)
//! f' = γ (u (F_max - f) - f)
//! e' = σ(e) - f v
//! ```
//!
//! Everything is per unit mass and SI: energy in m²/s² (J/kg), power in
//! m²/s³ (W/kg), force in m/s².

use serde::{Deserialize, Serialize};

use crate::ad::Real;
use crate::error::{Error, Result};

/// Physiological and race constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunnerParams {
    /// Velocity decay time constant (running economy) [s].
    pub tau: f64,
    /// Maximal propulsive force per unit mass [m/s²].
    pub f_max: f64,
    /// Motor activation rate [1/s].
    pub gamma_motor: f64,
    /// Initial anaerobic energy [m²/s²].
    pub e0: f64,
    /// Initial velocity [m/s].
    pub v0: f64,
    /// Weight of the motor-control cost [s³].
    pub alpha: f64,
    /// Race distance [m].
    pub distance: f64,
}

impl RunnerParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tau", self.tau),
            ("f_max", self.f_max),
            ("gamma_motor", self.gamma_motor),
            ("e0", self.e0),
            ("v0", self.v0),
            ("alpha", self.alpha),
            ("distance", self.distance),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.v0 >= self.f_max * self.tau {
            return Err(Error::InvalidParameter(format!(
                "v0 = {} must stay below f_max * tau = {}",
                self.v0,
                self.f_max * self.tau
            )));
        }
        Ok(())
    }
}

/// Shape family of σ(e).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaVariant {
    /// Ramp up, plateau at σ̄, decrease to σ_f.
    #[default]
    ThreePiece,
    /// As three-piece, with a local maximum σ̄ + bump before the plateau.
    FourPiece,
}

fn default_bump() -> f64 {
    0.8
}

/// Aerobic power as a piecewise-linear function of the remaining anaerobic
/// energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaProfile {
    #[serde(default)]
    pub variant: SigmaVariant,
    /// Maximal aerobic power [W/kg].
    pub sigma_bar: f64,
    /// Value at exhaustion (e = 0) [W/kg].
    pub sigma_f: f64,
    /// Rest value (e = e0) [W/kg].
    pub sigma_r: f64,
    /// Fraction of e0 below which σ decreases.
    pub gamma1: f64,
    /// Energy spent while σ ramps up [m²/s²].
    pub gamma2: f64,
    /// Four-piece only: fraction of e0 where the bump starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    /// Four-piece only: height of the local maximum above σ̄ [W/kg].
    #[serde(default = "default_bump")]
    pub bump: f64,
}

impl SigmaProfile {
    pub fn three_piece(sigma_bar: f64, sigma_f: f64, sigma_r: f64, gamma1: f64, gamma2: f64) -> Self {
        SigmaProfile {
            variant: SigmaVariant::ThreePiece,
            sigma_bar,
            sigma_f,
            sigma_r,
            gamma1,
            gamma2,
            gamma_plus: None,
            bump: default_bump(),
        }
    }

    /// Drops the bump, keeping every shared field.
    pub fn as_three_piece(&self) -> Self {
        SigmaProfile {
            variant: SigmaVariant::ThreePiece,
            gamma_plus: None,
            ..*self
        }
    }

    pub fn validate(&self, e0: f64) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.sigma_r <= self.sigma_f && self.sigma_f <= self.sigma_bar) || self.sigma_r < 0.0 {
            return bad(format!(
                "need 0 <= sigma_r <= sigma_f <= sigma_bar, got {} {} {}",
                self.sigma_r, self.sigma_f, self.sigma_bar
            ));
        }
        if !(self.gamma1 > 0.0 && self.gamma1 < 1.0) {
            return bad(format!("gamma1 must lie in (0, 1), got {}", self.gamma1));
        }
        if !(self.gamma2 > 0.0 && self.gamma2 < e0 * (1.0 - self.gamma1)) {
            return bad(format!(
                "gamma2 must lie in (0, e0 (1 - gamma1)) = (0, {}), got {}",
                e0 * (1.0 - self.gamma1),
                self.gamma2
            ));
        }
        if self.variant == SigmaVariant::FourPiece {
            let gp = match self.gamma_plus {
                Some(g) => g,
                None => return bad("four-piece profile needs gamma_plus".into()),
            };
            if !(self.gamma1 < gp && gp < 1.0 - self.gamma2 / e0) {
                return bad(format!(
                    "gamma_plus must lie in (gamma1, 1 - gamma2/e0) = ({}, {}), got {gp}",
                    self.gamma1,
                    1.0 - self.gamma2 / e0
                ));
            }
            if !(self.bump >= 0.0) {
                return bad(format!("bump must be non-negative, got {}", self.bump));
            }
        }
        Ok(())
    }

    /// σ(e) by direct branch selection. Errors outside `[0, e0]`.
    pub fn eval(&self, e: f64, e0: f64) -> Result<f64> {
        if !(0.0..=e0).contains(&e) {
            return Err(Error::Domain { value: e, lo: 0.0, hi: e0 });
        }
        Ok(self.eval_branches(e, e0))
    }

    fn eval_branches(&self, e: f64, e0: f64) -> f64 {
        let (sb, sf, sr, g1, g2) = (self.sigma_bar, self.sigma_f, self.sigma_r, self.gamma1, self.gamma2);
        let low = |e: f64| sb * e / (e0 * g1) + sf * (1.0 - e / (e0 * g1));
        match self.variant {
            SigmaVariant::ThreePiece => {
                if e / e0 < g1 {
                    low(e)
                } else if e0 - e >= g2 {
                    sb
                } else {
                    (sb - sr) * (e0 - e) / g2 + sr
                }
            }
            SigmaVariant::FourPiece => {
                let gp = self.gamma_plus.unwrap_or(g1);
                let bump = self.bump;
                if e / e0 < g1 {
                    low(e)
                } else if e / e0 <= gp {
                    sb
                } else if e0 - e > g2 {
                    sb + bump * (e - gp * e0) / (e0 - g2 - gp * e0)
                } else {
                    (sb + bump - sr) * (e0 - e) / g2 + sr
                }
            }
        }
    }

    /// Breakpoints `(e, σ)` in increasing `e`, including both ends.
    pub fn knots(&self, e0: f64) -> Vec<(f64, f64)> {
        let (sb, g1, g2) = (self.sigma_bar, self.gamma1, self.gamma2);
        match self.variant {
            SigmaVariant::ThreePiece => vec![
                (0.0, self.sigma_f),
                (g1 * e0, sb),
                (e0 - g2, sb),
                (e0, self.sigma_r),
            ],
            SigmaVariant::FourPiece => {
                let gp = self.gamma_plus.unwrap_or(g1);
                vec![
                    (0.0, self.sigma_f),
                    (g1 * e0, sb),
                    (gp * e0, sb),
                    (e0 - g2, sb + self.bump),
                    (e0, self.sigma_r),
                ]
            }
        }
    }

    /// Interior breakpoints where σ has a kink.
    pub fn branch_points(&self, e0: f64) -> Vec<f64> {
        let k = self.knots(e0);
        k[1..k.len() - 1].iter().map(|p| p.0).collect()
    }

    /// Largest value σ can take.
    pub fn upper_bound(&self) -> f64 {
        match self.variant {
            SigmaVariant::ThreePiece => self.sigma_bar,
            SigmaVariant::FourPiece => self.sigma_bar + self.bump.max(0.0),
        }
    }

    /// Continuously differentiable version of σ with its first two
    /// derivatives, for use inside gradient-based solvers.
    ///
    /// Each kink is replaced by a quadratic blend on `[k - eps, k + eps]`;
    /// away from those windows the value is exactly σ(e). `eps = 0` gives the
    /// unsmoothed curve. Outside `[0, e0]` the end pieces are extended
    /// linearly.
    pub fn eval_smooth(&self, e: f64, e0: f64, eps: f64) -> (f64, f64, f64) {
        let knots = self.knots(e0);
        let slope = |i: usize| (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0);
        let mut s0 = slope(0);
        let mut val = knots[0].1 + s0 * (e - knots[0].0);
        let mut d1 = s0;
        let mut d2 = 0.0;
        for i in 1..knots.len() - 1 {
            let s1 = slope(i);
            let jump = s1 - s0;
            let (p, dp, d2p) = smooth_ramp(e - knots[i].0, eps);
            val += jump * p;
            d1 += jump * dp;
            d2 += jump * d2p;
            s0 = s1;
        }
        (val, d1, d2)
    }
}

/// C¹ approximation of `max(z, 0)` that is exact for `|z| >= eps`.
fn smooth_ramp(z: f64, eps: f64) -> (f64, f64, f64) {
    if eps <= 0.0 {
        return if z > 0.0 { (z, 1.0, 0.0) } else { (0.0, 0.0, 0.0) };
    }
    if z >= eps {
        (z, 1.0, 0.0)
    } else if z <= -eps {
        (0.0, 0.0, 0.0)
    } else {
        let w = z + eps;
        (w * w / (4.0 * eps), w / (2.0 * eps), 1.0 / (2.0 * eps))
    }
}

/// σ(e) with range checks.
pub fn sigma_eval(profile: &SigmaProfile, e: f64, e0: f64) -> Result<f64> {
    profile.eval(e, e0)
}

fn default_gravity() -> f64 {
    9.81
}

/// Constant-gradient stretch of track over `[x_start, x_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeSegment {
    pub x_start: f64,
    pub x_end: f64,
    /// Gradient, positive uphill.
    pub delta: f64,
}

/// Piecewise-constant track gradient β(x); zero outside every segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProfile {
    #[serde(default)]
    pub segments: Vec<SlopeSegment>,
    #[serde(default = "default_gravity")]
    pub g: f64,
}

impl Default for SlopeProfile {
    fn default() -> Self {
        SlopeProfile::flat()
    }
}

impl SlopeProfile {
    pub fn flat() -> Self {
        SlopeProfile {
            segments: Vec::new(),
            g: default_gravity(),
        }
    }

    pub fn new(segments: Vec<SlopeSegment>) -> Result<Self> {
        let s = SlopeProfile {
            segments,
            g: default_gravity(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Constant gradient over the whole real line.
    pub fn constant(delta: f64) -> Self {
        SlopeProfile {
            segments: vec![SlopeSegment {
                x_start: f64::NEG_INFINITY,
                x_end: f64::INFINITY,
                delta,
            }],
            g: default_gravity(),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.segments.iter().all(|s| s.delta == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev_end = f64::NEG_INFINITY;
        for s in &self.segments {
            if !(s.x_start < s.x_end) || !s.delta.is_finite() {
                return Err(Error::InvalidParameter(format!("bad slope segment {s:?}")));
            }
            if s.x_start < prev_end {
                return Err(Error::InvalidParameter("slope segments overlap or are unordered".into()));
            }
            prev_end = s.x_end;
        }
        if !(self.g > 0.0) {
            return Err(Error::InvalidParameter(format!("gravity must be positive, got {}", self.g)));
        }
        Ok(())
    }

    /// β(x) with half-open segments.
    pub fn beta(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.x_start <= x && x < s.x_end)
            .map_or(0.0, |s| s.delta)
    }

    /// β(x) with each jump replaced by a C¹ cubic step of half-width `w`,
    /// plus first and second derivatives.
    pub fn beta_smooth(&self, x: f64, w: f64) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for s in &self.segments {
            for (edge, sign) in [(s.x_start, 1.0), (s.x_end, -1.0)] {
                if edge.is_infinite() {
                    if edge < 0.0 {
                        out.0 += sign * s.delta;
                    }
                    continue;
                }
                let (h, dh, d2h) = smooth_step(x - edge, w);
                out.0 += sign * s.delta * h;
                out.1 += sign * s.delta * dh;
                out.2 += sign * s.delta * d2h;
            }
        }
        out
    }
}

fn smooth_step(z: f64, w: f64) -> (f64, f64, f64) {
    if w <= 0.0 {
        return (if z >= 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0);
    }
    if z <= -w {
        (0.0, 0.0, 0.0)
    } else if z >= w {
        (1.0, 0.0, 0.0)
    } else {
        let s = (z + w) / (2.0 * w);
        let k = 1.0 / (2.0 * w);
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s) * k, (6.0 - 12.0 * s) * k * k)
    }
}

/// Runner state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub v: f64,
    pub f: f64,
    pub e: f64,
}

impl State {
    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.v, self.f, self.e]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        State {
            x: y[0],
            v: y[1],
            f: y[2],
            e: y[3],
        }
    }
}

/// Time derivative of the state under drive `u`, with the exact
/// (unsmoothed) σ and β. σ is extended linearly outside `[0, e0]`.
pub fn dynamics_rhs(s: &State, u: f64, p: &RunnerParams, sp: &SigmaProfile, slope: &SlopeProfile) -> State {
    let sigma = sp.eval_smooth(s.e, p.e0, 0.0).0;
    State {
        x: s.v,
        v: -s.v / p.tau + s.f - slope.g * slope.beta(s.x),
        f: p.gamma_motor * (u * (p.f_max - s.f) - s.f),
        e: sigma - s.f * s.v,
    }
}

/// Smoothing widths used when the dynamics feed a gradient-based solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    /// Half-width of the σ kinks [m²/s²].
    pub sigma_eps: f64,
    /// Half-width of the gradient steps [m].
    pub slope_width: f64,
}

impl Smoothing {
    pub const NONE: Smoothing = Smoothing {
        sigma_eps: 0.0,
        slope_width: 0.0,
    };
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            sigma_eps: 1.0,
            slope_width: 5.0,
        }
    }
}

/// [`dynamics_rhs`] written over any [`Real`], with smoothed σ and β.
/// Returns `[x', v', f', e']`.
pub fn dynamics_generic<T: Real>(
    y: [T; 4],
    u: T,
    p: &RunnerParams,
    sp: &SigmaProfile,
    slope: &SlopeProfile,
    smoothing: Smoothing,
) -> [T; 4] {
    let [x, v, f, e] = y;
    let (s, ds, d2s) = sp.eval_smooth(e.value(), p.e0, smoothing.sigma_eps);
    let sigma = e.chain(s, ds, d2s);
    let mut vdot = f - v / p.tau;
    if !slope.is_flat() {
        let (b, db, d2b) = slope.beta_smooth(x.value(), smoothing.slope_width);
        vdot = vdot - x.chain(b, db, d2b) * slope.g;
    }
    let fdot = (u * (T::cst(p.f_max) - f) - f) * p.gamma_motor;
    [v, vdot, fdot, sigma - f * v]
}

/// Runner, σ and track bundled as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub runner: RunnerParams,
    pub sigma: SigmaProfile,
    #[serde(default)]
    pub slope: SlopeProfile,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.runner.validate()?;
        self.sigma.validate(self.runner.e0)?;
        self.slope.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ModelConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Overrides one scalar field by name, looking in `runner`, then
    /// `sigma`, then `slope` (only `g`). `variant` takes `three_piece` or
    /// `four_piece`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self)?;
        let parsed: serde_json::Value = match value.parse::<f64>() {
            Ok(v) => serde_json::json!(v),
            Err(_) => serde_json::Value::String(value.to_string()),
        };
        let mut found = false;
        for section in ["runner", "sigma", "slope"] {
            if let Some(obj) = doc.get_mut(section).and_then(|s| s.as_object_mut()) {
                let known = obj.contains_key(key) || (section == "sigma" && key == "gamma_plus");
                if known && key != "segments" {
                    obj.insert(key.to_string(), parsed.clone());
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Err(Error::InvalidParameter(format!("unknown parameter `{key}`")));
        }
        let updated: ModelConfig = serde_json::from_value(doc)
            .map_err(|e| Error::InvalidParameter(format!("bad value for `{key}`: {e}")))?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn fig1() -> (SigmaProfile, f64) {
        (SigmaProfile::three_piece(22.0, 20.0, 6.0, 0.15, 566.0), 4651.0)
    }

    #[test]
    fn sigma_boundary_values() {
        let (s, e0) = fig1();
        assert_eq!(s.eval(4651.0, e0).unwrap(), 6.0);
        assert_eq!(s.eval(0.0, e0).unwrap(), 20.0);
        assert_eq!(s.eval(2000.0, e0).unwrap(), 22.0);
    }

    #[test]
    fn sigma_rejects_out_of_domain() {
        let (s, e0) = fig1();
        assert!(matches!(s.eval(-1.0, e0), Err(Error::Domain { .. })));
        assert!(matches!(s.eval(e0 + 1.0, e0), Err(Error::Domain { .. })));
    }

    #[test]
    fn four_piece_plateau_and_peak() {
        let c = fixtures::four_piece();
        let (s, e0) = (c.sigma, c.runner.e0);
        let gp = s.gamma_plus.unwrap();
        let mid = 0.5 * (s.gamma1 + gp) * e0;
        assert_eq!(s.eval(mid, e0).unwrap(), 22.0);
        let peak = s.eval(e0 - s.gamma2, e0).unwrap();
        assert!((peak - 22.8).abs() < 1e-12);
    }

    #[test]
    fn knot_form_matches_branch_form() {
        for c in [fixtures::regional(), fixtures::four_piece()] {
            let e0 = c.runner.e0;
            for i in 0..=1000 {
                let e = e0 * i as f64 / 1000.0;
                let a = c.sigma.eval(e, e0).unwrap();
                let b = c.sigma.eval_smooth(e, e0, 0.0).0;
                assert!((a - b).abs() < 1e-9, "e = {e}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn smoothing_is_exact_away_from_kinks_and_c1() {
        let (s, e0) = fig1();
        let eps = 1.0;
        for e in [10.0, 500.0, 2000.0, 4000.0, 4600.0] {
            assert!((s.eval_smooth(e, e0, eps).0 - s.eval(e, e0).unwrap()).abs() < 1e-12);
        }
        for k in s.branch_points(e0) {
            for z in [-eps, eps] {
                let lo = s.eval_smooth(k + z - 1e-9, e0, eps);
                let hi = s.eval_smooth(k + z + 1e-9, e0, eps);
                assert!((lo.0 - hi.0).abs() < 1e-8);
                assert!((lo.1 - hi.1).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn equilibrium_has_zero_velocity_and_force_rates() {
        let c = fixtures::regional();
        let p = c.runner;
        let f = 6.5;
        let s = State {
            x: 100.0,
            v: p.tau * f,
            f,
            e: 3000.0,
        };
        let u = f / (p.f_max - f);
        let d = dynamics_rhs(&s, u, &p, &c.sigma, &SlopeProfile::flat());
        assert!(d.v.abs() < 1e-12);
        assert!(d.f.abs() < 1e-12);
    }

    #[test]
    fn substitution_at_start_state() {
        let c = fixtures::regional();
        let s = State {
            x: 0.0,
            v: 3.0,
            f: 0.0,
            e: 4651.0,
        };
        let d = dynamics_rhs(&s, 0.0, &c.runner, &c.sigma, &SlopeProfile::flat());
        assert!((d.v + 3.0 / 0.932).abs() < 1e-12);
        assert_eq!(d.f, 0.0);
        assert!((d.e - 6.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_adds_gravity_term() {
        let c = fixtures::regional();
        let slope = SlopeProfile::new(vec![SlopeSegment {
            x_start: 700.0,
            x_end: 1000.0,
            delta: 0.03,
        }])
        .unwrap();
        let s = State {
            x: 800.0,
            v: 6.0,
            f: 6.5,
            e: 2000.0,
        };
        let flat = dynamics_rhs(&s, 4.0, &c.runner, &c.sigma, &SlopeProfile::flat());
        let up = dynamics_rhs(&s, 4.0, &c.runner, &c.sigma, &slope);
        assert!((up.v - flat.v + 9.81 * 0.03).abs() < 1e-12);
        // half-open
        assert_eq!(slope.beta(700.0), 0.03);
        assert_eq!(slope.beta(1000.0), 0.0);
    }

    #[test]
    fn smoothed_slope_matches_step_outside_window() {
        let slope = SlopeProfile::new(vec![SlopeSegment {
            x_start: 700.0,
            x_end: 1000.0,
            delta: 0.03,
        }])
        .unwrap();
        for x in [0.0, 694.0, 706.0, 850.0, 994.0, 1006.0] {
            assert!((slope.beta_smooth(x, 5.0).0 - slope.beta(x)).abs() < 1e-15);
        }
        assert!((SlopeProfile::constant(0.02).beta_smooth(3.0, 5.0).0 - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rhs_is_linear_in_drive() {
        let c = fixtures::regional();
        let s = State {
            x: 10.0,
            v: 6.0,
            f: 7.0,
            e: 4000.0,
        };
        let r = |u| dynamics_rhs(&s, u, &c.runner, &c.sigma, &c.slope);
        let (a, b, m) = (r(-3.0), r(5.0), r(1.0));
        assert!(((a.f + b.f) / 2.0 - m.f).abs() < 1e-14);
        assert_eq!(a.v, b.v);
        assert_eq!(a.e, b.e);
    }

    #[test]
    fn validation_errors() {
        let mut c = fixtures::regional();
        c.runner.v0 = 100.0;
        assert!(c.validate().is_err());
        let mut c = fixtures::regional();
        c.sigma.gamma1 = 1.2;
        assert!(c.validate().is_err());
        let mut c = fixtures::four_piece();
        c.sigma.gamma_plus = Some(0.99);
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_roundtrip_and_overrides() {
        let mut c = fixtures::regional();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"sigma_bar\""));
        assert_eq!(ModelConfig::from_json(&text).unwrap(), c);
        c.set("tau", "1.0").unwrap();
        assert_eq!(c.runner.tau, 1.0);
        c.set("gamma2", "600").unwrap();
        assert_eq!(c.sigma.gamma2, 600.0);
        assert!(c.set("nonsense", "1").is_err());
        assert!(c.set("tau", "-1").is_err());
    }
}

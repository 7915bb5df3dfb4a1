//! Invariants of solved races on the flat fixture.

use std::sync::OnceLock;

use pacing::model::dynamics_rhs;
use pacing::ocp::{self, audit_unsmoothed, Scheme, SolverOptions, Trajectory, Transcription};
use pacing::{fixtures, turnpike, ModelConfig};

fn config() -> ModelConfig {
    fixtures::regional()
}

fn solved(n: usize) -> &'static Trajectory {
    static FINE: OnceLock<Trajectory> = OnceLock::new();
    static COARSE: OnceLock<Trajectory> = OnceLock::new();
    let cell = if n == 400 { &FINE } else { &COARSE };
    cell.get_or_init(|| ocp::solve_config(&config(), Transcription::with_nodes(n), &SolverOptions::default()).unwrap())
}

/// Largest gap between the central difference of `e` and `σ(e) − f v` over
/// interior nodes.
fn energy_balance_gap(t: &Trajectory, c: &ModelConfig) -> f64 {
    (1..t.len() - 1)
        .map(|k| {
            let de = (t.states[k + 1].e - t.states[k - 1].e) / (t.times[k + 1] - t.times[k - 1]);
            let rhs = dynamics_rhs(&t.states[k], t.controls[k], &c.runner, &c.sigma, &c.slope).to_array()[3];
            (de - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn energy_is_spent_exactly_and_never_overdrawn() {
    let (c, t) = (config(), solved(400));
    let (end, min) = t.energy_bounds();
    assert!(end.abs() <= 1e-6, "e(t_f) = {end}");
    assert!(min >= -1e-8 * c.runner.e0, "min e = {min}");
}

#[test]
fn energy_never_increases_on_the_flat() {
    let t = solved(400);
    assert!(t.states.windows(2).all(|w| w[1].e <= w[0].e));
}

#[test]
fn force_stays_below_its_ceiling() {
    let (c, t) = (config(), solved(400));
    assert!(t.states.iter().all(|s| s.f < c.runner.f_max));
}

#[test]
fn energy_balance_converges_with_the_mesh() {
    let c = config();
    let (coarse, fine) = (energy_balance_gap(solved(200), &c), energy_balance_gap(solved(400), &c));
    assert!(fine < 2.0, "{fine}");
    assert!(coarse / fine > 1.8, "{coarse} -> {fine}");
}

#[test]
fn mesh_doubling_moves_the_time_by_less_than_a_fifth_of_a_second() {
    assert!((solved(200).t_f - solved(400).t_f).abs() <= 0.2);
}

#[test]
fn middle_of_the_race_follows_the_turnpike() {
    let (c, t) = (config(), solved(400));
    let v_bar = turnpike::turnpike_velocity(&c.runner, &c.sigma).unwrap();
    for (time, s) in t.times.iter().zip(&t.states) {
        if *time >= 0.25 * t.t_f && *time <= 0.75 * t.t_f {
            assert!((s.v - v_bar).abs() <= 0.02 * v_bar, "t {time}: v {}", s.v);
        }
    }
}

#[test]
fn resimulated_race_lands_on_the_finish() {
    let (c, t) = (config(), solved(400));
    let d = audit_unsmoothed(t, &c.runner, &c.sigma, &c.slope).unwrap();
    assert!((d.x_end - c.runner.distance).abs() <= 1e-3 * c.runner.distance, "{d:?}");
    assert!(d.e_end.abs() <= 1e-3 * c.runner.e0, "{d:?}");
}

#[test]
fn trapezoidal_scheme_agrees_with_the_default() {
    let spec = Transcription { scheme: Scheme::Trapezoidal, ..Transcription::with_nodes(200) };
    let trap = ocp::solve_config(&config(), spec, &SolverOptions::default()).unwrap();
    assert!((trap.t_f - solved(400).t_f).abs() <= 0.5, "{}", trap.t_f);
}

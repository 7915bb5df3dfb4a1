//! Derivative-free polishing of fitted parameters against a forward model.

use log::debug;
use serde::{Deserialize, Serialize};

use super::{rms_mismatch, FittedParams, VelocitySeries};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::ocp::{self, SolverOptions, Transcription};
use crate::turnpike::assemble_profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Maximal number of forward-model evaluations, the initial one
    /// included.
    pub budget: usize,
    /// First relative step on every coordinate.
    pub initial_step: f64,
    pub shrink: f64,
    /// Stop once the relative step falls below this.
    pub min_step: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            budget: 60,
            initial_step: 0.05,
            shrink: 0.5,
            min_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub params: FittedParams,
    /// Residual of the initial point followed by every accepted step.
    pub history: Vec<f64>,
    pub evaluations: usize,
    /// Trial points at which the forward model failed.
    pub failures: usize,
    pub budget_exhausted: bool,
}

impl RefineReport {
    pub fn accepted_steps(&self) -> usize {
        self.history.len() - 1
    }
}

const COORDS: [&str; 4] = ["tau", "e0", "gamma1", "gamma2"];

fn coord<'a>(p: &'a mut FittedParams, name: &str) -> &'a mut f64 {
    match name {
        "tau" => &mut p.tau,
        "e0" => &mut p.e0,
        "gamma1" => &mut p.gamma1,
        _ => &mut p.gamma2,
    }
}

/// Coordinate descent with shrinking relative steps on τ, e0, γ1 and γ2
/// (fields flagged unidentified are left alone). `simulate` maps a
/// configuration and the sample times to predicted velocities; an `Err`
/// rejects the trial point. Accepted steps strictly decrease the RMS
/// mismatch.
pub fn refine_with<S>(
    initial: &FittedParams,
    series: &VelocitySeries,
    base: &ModelConfig,
    mut simulate: S,
    opts: RefineOptions,
) -> Result<RefineReport>
where
    S: FnMut(&ModelConfig, &[f64]) -> Result<Vec<f64>>,
{
    if !(opts.budget >= 1 && opts.initial_step > 0.0 && opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(Error::InvalidParameter("refine needs budget >= 1, step > 0, shrink in (0, 1)".into()));
    }
    let times = series.times();
    let mut evaluations = 0;
    let mut failures = 0;
    let mut residual_of = |p: &FittedParams, evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let cfg = p.to_config(base);
        cfg.validate()?;
        let v = simulate(&cfg, &times)?;
        if v.len() != times.len() {
            return Err(Error::InvalidParameter("simulator returned the wrong number of samples".into()));
        }
        let r = rms_mismatch(series, |t| {
            let i = times.partition_point(|&s| s < t).min(times.len() - 1);
            v[i]
        });
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NonFinite { step: 0, t: 0.0 })
        }
    };
    let mut best = initial.clone();
    best.residual = residual_of(&best, &mut evaluations)?;
    let mut history = vec![best.residual];
    let coords: Vec<&str> = COORDS.into_iter().filter(|c| initial.is_identified(c)).collect();
    let mut step = opts.initial_step;
    let mut budget_exhausted = false;
    'search: while step >= opts.min_step {
        let mut moved = false;
        for name in &coords {
            for sign in [1.0, -1.0] {
                if evaluations >= opts.budget {
                    budget_exhausted = true;
                    break 'search;
                }
                let mut trial = best.clone();
                *coord(&mut trial, name) *= 1.0 + sign * step;
                if *name == "gamma1" && trial.gamma1 >= 1.0 {
                    continue;
                }
                match residual_of(&trial, &mut evaluations) {
                    Ok(r) if r < best.residual => {
                        debug!("refine: {name} -> {:.6} (rms {r:.5})", *coord(&mut trial, name));
                        trial.residual = r;
                        best = trial;
                        history.push(r);
                        moved = true;
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        debug!("refine: trial rejected ({e})");
                        failures += 1;
                    }
                }
            }
        }
        if !moved {
            step *= opts.shrink;
        }
    }
    Ok(RefineReport {
        params: best,
        history,
        evaluations,
        failures,
        budget_exhausted,
    })
}

fn at_times(times: &[f64], mut f: impl FnMut(f64) -> f64) -> Vec<f64> {
    times.iter().map(|&t| f(t)).collect()
}

/// Forward model through the closed-form approximation.
pub fn turnpike_simulator() -> impl FnMut(&ModelConfig, &[f64]) -> Result<Vec<f64>> {
    |cfg: &ModelConfig, times: &[f64]| {
        let (_, profile) = assemble_profile(&cfg.runner, &cfg.sigma)?;
        Ok(at_times(times, |t| profile.velocity(t.min(profile.t_f))))
    }
}

/// Forward model through the full optimal control problem.
pub fn ocp_simulator(spec: Transcription, opts: SolverOptions) -> impl FnMut(&ModelConfig, &[f64]) -> Result<Vec<f64>> {
    move |cfg: &ModelConfig, times: &[f64]| {
        let traj = ocp::solve_config(cfg, spec, &opts)?;
        Ok(at_times(times, |t| traj.at_time(t.min(traj.t_f)).0.v))
    }
}

/// [`refine_with`] against the optimal control problem on a 100-node mesh.
pub fn refine(initial: &FittedParams, series: &VelocitySeries, base: &ModelConfig, opts: RefineOptions) -> Result<RefineReport> {
    let solver = SolverOptions {
        tol: 1e-6,
        ..SolverOptions::default()
    };
    refine_with(initial, series, base, ocp_simulator(Transcription::with_nodes(100), solver), opts)
}

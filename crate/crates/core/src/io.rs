//! Text serialization of solver outputs.
//!
//! | file | columns |
//! |------|---------|
//! | trajectory CSV | `t` [s], `x` [m], `v` [m/s], `f` [m/s²], `e` [m²/s²], `u` [-] |
//! | profile CSV | `t` [s], `v` [m/s], `phase` (1 start, 2 turnpike, 3 sprint) |
//!
//! Both CSV layouts carry `t` and `v` columns and load back through
//! [`crate::fit::VelocitySeries::from_csv`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocp::{PlateauStats, Trajectory};
use crate::turnpike::VelocityProfile;

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["t", "x", "v", "f", "e", "u"];
pub const PROFILE_COLUMNS: [&str; 3] = ["t", "v", "phase"];

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_COLUMNS)?;
    for ((t, s), u) in traj.times.iter().zip(&traj.states).zip(&traj.controls) {
        w.write_record([t, &s.x, &s.v, &s.f, &s.e, u].map(|v| v.to_string()))?;
    }
    finish(w)
}

/// Reads back the output of [`trajectory_csv`]. The objective and KKT
/// residual are not stored and come back as `NaN`.
pub fn read_trajectory_csv<R: std::io::Read>(reader: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers != TRAJECTORY_COLUMNS {
        return Err(Error::InvalidParameter(format!("expected columns {TRAJECTORY_COLUMNS:?}, got {headers:?}")));
    }
    let (mut times, mut states, mut controls) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.deserialize() {
        let (t, x, v, f, e, u): (f64, f64, f64, f64, f64, f64) = rec?;
        times.push(t);
        states.push(crate::State { x, v, f, e });
        controls.push(u);
    }
    let t_f = times.last().copied().unwrap_or(0.0);
    let traj = Trajectory {
        times,
        states,
        controls,
        objective: f64::NAN,
        t_f,
        kkt_residual: f64::NAN,
    };
    traj.validate()?;
    Ok(traj)
}

pub fn profile_csv(profile: &VelocityProfile, samples: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROFILE_COLUMNS)?;
    for (t, v, phase) in profile.sample(samples) {
        w.write_record([t.to_string(), v.to_string(), phase.to_string()])?;
    }
    finish(w)
}

/// Headline numbers of a solved race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub t_f: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub n_nodes: usize,
    pub e_end: f64,
    pub e_min: f64,
    pub plateau: PlateauStats,
}

impl TrajectorySummary {
    pub fn of(traj: &Trajectory) -> Self {
        let (e_end, e_min) = traj.energy_bounds();
        TrajectorySummary {
            t_f: traj.t_f,
            objective: traj.objective,
            kkt_residual: traj.kkt_residual,
            n_nodes: traj.len(),
            e_end,
            e_min,
            plateau: traj.plateau(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

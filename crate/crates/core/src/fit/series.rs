//! Measured velocity curves and plateau detection.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Velocity samples over a full race.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySeries {
    /// `(t [s], v [m/s])`, strictly increasing in `t`.
    pub samples: Vec<(f64, f64)>,
    /// Race distance [m].
    pub distance: f64,
}

/// Relative mismatch allowed between `∫v dt` and the stated distance.
pub const DISTANCE_TOLERANCE: f64 = 0.02;

impl VelocitySeries {
    pub fn new(samples: Vec<(f64, f64)>, distance: f64) -> Result<Self> {
        let s = VelocitySeries { samples, distance };
        s.validate()?;
        Ok(s)
    }

    /// Series whose distance is its own trapezoidal integral.
    pub fn from_velocity(samples: Vec<(f64, f64)>) -> Result<Self> {
        let distance = trapezoid(&samples);
        Self::new(samples, distance)
    }

    /// Builds a series from cumulative `(distance [m], time [s])` splits.
    /// Each split contributes its mean speed at the interval midpoint; the
    /// first and last speeds are repeated at the race start and finish.
    pub fn from_splits(splits: &[(f64, f64)]) -> Result<Self> {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend(splits.iter().copied().filter(|&(d, t)| !(d == 0.0 && t == 0.0)));
        if pts.len() < 3 {
            return Err(Error::InvalidParameter("need at least two splits".into()));
        }
        let mut samples = Vec::with_capacity(pts.len() + 1);
        for w in pts.windows(2) {
            let (dd, dt) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if !(dt > 0.0 && dd > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "splits must increase in distance and time, got {:?} then {:?}",
                    w[0], w[1]
                )));
            }
            samples.push((0.5 * (w[0].1 + w[1].1), dd / dt));
        }
        let first = samples[0].1;
        let (t_end, d_end) = (pts[pts.len() - 1].1, pts[pts.len() - 1].0);
        let last = samples[samples.len() - 1].1;
        samples.insert(0, (0.0, first));
        samples.push((t_end, last));
        Self::new(samples, d_end)
    }

    /// Reads CSV with a header. A `t` and `v` column pair (any other
    /// columns are ignored, so trajectory files load directly) gives a
    /// velocity series; otherwise `distance` and `time` columns are read
    /// as cumulative splits. `distance` overrides the integrated length of
    /// a velocity series.
    pub fn from_csv<R: Read>(reader: R, distance: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
        let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));
        let (a, b, splits) = match (col(&["t", "time"]), col(&["v", "velocity"]), col(&["distance", "d", "x"])) {
            (Some(t), Some(v), _) => (t, v, false),
            (Some(t), None, Some(d)) => (d, t, true),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "CSV header {headers:?} has neither (t, v) nor (distance, time) columns"
                )))
            }
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("bad number in CSV row {rec:?}")))
            };
            rows.push((parse(a)?, parse(b)?));
        }
        if splits {
            return Self::from_splits(&rows);
        }
        match distance {
            Some(d) => Self::new(rows, d),
            None => Self::from_velocity(rows),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 3 {
            return Err(Error::InvalidParameter("a velocity series needs at least 3 samples".into()));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::InvalidParameter(format!("distance must be positive, got {}", self.distance)));
        }
        for w in self.samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidParameter(format!("sample times must increase: {} then {}", w[0].0, w[1].0)));
            }
        }
        if let Some(&(t, v)) = self.samples.iter().find(|&&(t, v)| !(v > 0.0 && v.is_finite() && t.is_finite())) {
            return Err(Error::InvalidParameter(format!("velocity must be positive, got {v} at t = {t}")));
        }
        let covered = trapezoid(&self.samples);
        if (covered - self.distance).abs() > DISTANCE_TOLERANCE * self.distance {
            return Err(Error::InvalidParameter(format!(
                "integrated velocity {covered:.1} m differs from the distance {} m by more than 2%",
                self.distance
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "v"])?;
        for &(t, v) in &self.samples {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
    }
}

pub(crate) fn trapezoid(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// The longest run of consecutive samples within a band around the median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    /// First and last sample indices, inclusive.
    pub first: usize,
    pub last: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub median: f64,
    /// Fraction of the race duration inside the run.
    pub coverage: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Finds the longest run within `±band` (relative) of the median velocity.
/// Fails when the run covers less than `min_coverage` of the race time.
pub fn detect_plateau(series: &VelocitySeries, band: f64, min_coverage: f64) -> Result<Plateau> {
    let s = &series.samples;
    let med = median(&mut s.iter().map(|x| x.1).collect::<Vec<_>>());
    let inside = |v: f64| (v - med).abs() <= band * med;
    let (mut best, mut start) = (None::<(usize, usize)>, None::<usize>);
    for i in 0..=s.len() {
        let ok = i < s.len() && inside(s[i].1);
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                let span = |r: (usize, usize)| s[r.1].0 - s[r.0].0;
                if best.is_none_or(|b| span((a, i - 1)) > span(b)) {
                    best = Some((a, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    let coverage = best.map_or(0.0, |(a, b)| (s[b].0 - s[a].0) / series.duration());
    match best {
        Some((first, last)) if coverage >= min_coverage => Ok(Plateau {
            first,
            last,
            t_start: s[first].0,
            t_end: s[last].0,
            median: med,
            coverage,
        }),
        _ => Err(Error::Unidentifiable(format!(
            "no plateau: the longest run within {:.0}% of the median {med:.3} m/s covers {:.0}% of the race (need {:.0}%)",
            band * 100.0,
            coverage * 100.0,
            min_coverage * 100.0
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, n: usize, dt: f64) -> Vec<(f64, f64)> {
        (0..n).map(|i| (i as f64 * dt, v)).collect()
    }

    #[test]
    fn validation_rejects_bad_series() {
        assert!(VelocitySeries::new(vec![(0.0, 5.0), (0.0, 5.0), (1.0, 5.0)], 5.0).is_err());
        assert!(VelocitySeries::new(vec![(0.0, 5.0), (1.0, -1.0), (2.0, 5.0)], 5.0).is_err());
        // 100 s at 5 m/s is 495 m with these samples; 600 m is too far off
        assert!(VelocitySeries::new(constant(5.0, 100, 1.0), 600.0).is_err());
        assert!(VelocitySeries::new(constant(5.0, 100, 1.0), 500.0).is_ok());
    }

    #[test]
    fn splits_convert_to_mean_speeds() {
        let s = VelocitySeries::from_splits(&[(400.0, 64.0), (800.0, 130.0), (1200.0, 194.0), (1500.0, 240.0)]).unwrap();
        assert_eq!(s.samples.len(), 6);
        assert!((s.samples[1].1 - 6.25).abs() < 1e-12);
        assert_eq!(s.samples[0], (0.0, 6.25));
        assert_eq!(s.samples[5].0, 240.0);
        assert_eq!(s.distance, 1500.0);
    }

    #[test]
    fn csv_ingestion_reads_either_layout() {
        let vel = "t,x,v,f\n0,0,5,1\n1,5,5,1\n2,10,5,1\n";
        let s = VelocitySeries::from_csv(vel.as_bytes(), None).unwrap();
        assert_eq!(s.samples, vec![(0.0, 5.0), (1.0, 5.0), (2.0, 5.0)]);
        assert_eq!(s.distance, 10.0);
        let splits = "distance,time\n400,64\n800,130\n";
        let s = VelocitySeries::from_csv(splits.as_bytes(), None).unwrap();
        assert_eq!(s.distance, 800.0);
        assert!(VelocitySeries::from_csv("a,b\n1,2\n".as_bytes(), None).is_err());
        let round = VelocitySeries::from_csv(s.to_csv().unwrap().as_bytes(), Some(800.0)).unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn plateau_is_the_longest_band_run() {
        let mut samples = constant(6.0, 200, 1.0);
        for (i, s) in samples.iter_mut().enumerate().take(20) {
            s.1 = 3.0 + 0.2 * i as f64;
        }
        samples[100].1 = 7.0;
        let series = VelocitySeries::from_velocity(samples).unwrap();
        let p = detect_plateau(&series, 0.03, 0.3).unwrap();
        assert_eq!((p.first, p.last), (101, 199));
        assert_eq!(p.median, 6.0);
        assert!(detect_plateau(&series, 0.03, 0.6).is_err());
    }

    #[test]
    fn sawtooth_has_no_plateau() {
        let samples: Vec<(f64, f64)> = (0..200).map(|i| (i as f64, 5.0 + (i % 10) as f64 * 0.2)).collect();
        let series = VelocitySeries::from_velocity(samples).unwrap();
        assert!(matches!(detect_plateau(&series, 0.03, 0.3), Err(Error::Unidentifiable(_))));
    }
}

//! Bundled scenario configurations.

use crate::model::{ModelConfig, RunnerParams, SigmaProfile, SigmaVariant, SlopeProfile, SlopeSegment};

/// Regional-level 1500 m runner with the three-piece σ.
pub fn regional() -> ModelConfig {
    ModelConfig {
        runner: RunnerParams {
            tau: 0.932,
            f_max: 8.0,
            gamma_motor: 0.0025,
            e0: 4651.0,
            v0: 3.0,
            alpha: 1e-5,
            distance: 1500.0,
        },
        sigma: SigmaProfile::three_piece(22.0, 20.0, 6.0, 0.15, 566.0),
        slope: SlopeProfile::flat(),
    }
}

/// 1500 m with a four-piece σ: a local maximum σ̄ + 0.8 before the plateau.
pub fn four_piece() -> ModelConfig {
    let e0 = 4651.0;
    let gamma2 = 2000.0;
    let mut c = regional();
    c.runner.tau = 1.032;
    c.runner.v0 = 1.0;
    c.sigma = SigmaProfile {
        variant: SigmaVariant::FourPiece,
        gamma2,
        gamma_plus: Some(1.0 - gamma2 / e0 - 400.0 / e0),
        bump: 0.8,
        ..c.sigma
    };
    c
}

fn segment(x_start: f64, x_end: f64, delta: f64) -> SlopeSegment {
    SlopeSegment { x_start, x_end, delta }
}

/// Uphill (`delta > 0`) or downhill (`delta < 0`) stretch on `[700, 1000)` m.
pub fn single_gradient(delta: f64) -> SlopeProfile {
    SlopeProfile {
        segments: vec![segment(700.0, 1000.0, delta)],
        ..SlopeProfile::flat()
    }
}

/// Alternating 2 % uphill and downhill stretches of 200 m between 400 m and
/// 1200 m, starting uphill.
pub fn periodic_gradient() -> SlopeProfile {
    SlopeProfile {
        segments: vec![
            segment(400.0, 600.0, 0.02),
            segment(600.0, 800.0, -0.02),
            segment(800.0, 1000.0, 0.02),
            segment(1000.0, 1200.0, -0.02),
        ],
        ..SlopeProfile::flat()
    }
}

/// Named gradient scenarios on the regional runner.
pub fn slope_scenarios() -> Vec<(&'static str, ModelConfig)> {
    let with = |slope: SlopeProfile| ModelConfig { slope, ..regional() };
    vec![
        ("flat", regional()),
        ("uphill_3pct", with(single_gradient(0.03))),
        ("downhill_3pct", with(single_gradient(-0.03))),
        ("periodic_2pct", with(periodic_gradient())),
    ]
}

/// Every bundled configuration by name.
pub fn all() -> Vec<(&'static str, ModelConfig)> {
    let mut v = vec![("regional", regional()), ("four_piece", four_piece())];
    v.extend(slope_scenarios().into_iter().filter(|(n, _)| *n != "flat"));
    v
}

pub fn by_name(name: &str) -> Option<ModelConfig> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_validate() {
        for (name, c) in all() {
            c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn regional_sigma_matches_reference_curve() {
        let s = regional().sigma;
        assert_eq!(
            (s.sigma_bar, s.sigma_f, s.sigma_r, s.gamma1, s.gamma2),
            (22.0, 20.0, 6.0, 0.15, 566.0)
        );
        assert_eq!(regional().runner.e0, 4651.0);
    }

    #[test]
    fn periodic_layout() {
        let p = periodic_gradient();
        assert_eq!(p.beta(500.0), 0.02);
        assert_eq!(p.beta(700.0), -0.02);
        assert_eq!(p.beta(900.0), 0.02);
        assert_eq!(p.beta(1100.0), -0.02);
        assert_eq!(p.beta(1300.0), 0.0);
        assert_eq!(p.beta(350.0), 0.0);
    }

    #[test]
    fn four_piece_values() {
        let c = four_piece();
        assert_eq!(c.runner.tau, 1.032);
        assert_eq!(c.runner.v0, 1.0);
        assert_eq!(c.sigma.gamma2, 2000.0);
        assert!((c.sigma.gamma_plus.unwrap() - (1.0 - 2400.0 / 4651.0)).abs() < 1e-15);
    }
}

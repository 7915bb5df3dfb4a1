use std::fs::File;
use std::path::Path;

use log::info;
use pacing::fit::{self, InferOptions, RefineOptions, VelocitySeries};
use pacing::io::{self, TrajectorySummary};
use pacing::model::sigma_eval;
use pacing::ocp::{self, Extremum, Scheme, SolverOptions, Trajectory, Transcription};
use pacing::{fixtures, turnpike, Error, ModelConfig, Result};
use serde::Serialize;

use crate::svg::{self, Panel, Series};
use crate::{Cli, Command, SchemeArg};

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Vo2 { vo2max } => vo2(*vo2max),
        Command::Fixtures => write_fixtures(&cli.out),
        Command::Solve { scheme } => solve(cli, *scheme),
        Command::Approx { no_overlay, samples } => approx(cli, *no_overlay, *samples),
        Command::Fit {
            input,
            distance,
            sigma_bar,
            sigma_f,
            sigma_r,
            refine,
            budget,
        } => fit_cmd(cli, input, *distance, [*sigma_bar, *sigma_f, *sigma_r], *refine, *budget),
        Command::SlopeSweep => slope_sweep(cli),
    }
}

fn load_config(cli: &Cli) -> Result<ModelConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ModelConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => fixtures::by_name(&cli.fixture)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture `{}`", cli.fixture)))?,
    };
    apply_overrides(&mut cfg, &cli.overrides)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ModelConfig, overrides: &[String]) -> Result<()> {
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("override `{kv}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(())
}

fn solver_options(cli: &Cli) -> Result<SolverOptions> {
    let o = SolverOptions {
        tol: cli.tol,
        max_outer: cli.max_outer,
        ..SolverOptions::default()
    };
    o.validate()?;
    Ok(o)
}

fn transcription(cli: &Cli, scheme: SchemeArg) -> Result<Transcription> {
    let t = Transcription {
        scheme: match scheme {
            SchemeArg::HermiteSimpson => Scheme::HermiteSimpson,
            SchemeArg::Trapezoidal => Scheme::Trapezoidal,
        },
        ..Transcription::with_nodes(cli.nodes)
    };
    t.validate()?;
    Ok(t)
}

fn vo2(vo2max: f64) -> Result<String> {
    if !(vo2max >= 0.0 && vo2max.is_finite()) {
        return Err(Error::Domain {
            value: vo2max,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    io::to_json(&serde_json::json!({ "vo2max": vo2max, "sigma": fit::vo2_to_sigma(vo2max) }))
}

fn write_fixtures(out: &Path) -> Result<String> {
    let mut names = Vec::new();
    for (name, cfg) in fixtures::all() {
        io::write_file(out, &format!("{name}.json"), &cfg.to_json()?)?;
        names.push(name);
    }
    io::to_json(&serde_json::json!({ "fixtures": names }))
}

fn solve(cli: &Cli, scheme: SchemeArg) -> Result<String> {
    let cfg = load_config(cli)?;
    let traj = ocp::solve_config(&cfg, transcription(cli, scheme)?, &solver_options(cli)?)?;
    let summary = TrajectorySummary::of(&traj);
    io::write_file(&cli.out, "trajectory.csv", &io::trajectory_csv(&traj)?)?;
    io::write_file(&cli.out, "summary.json", &io::to_json(&summary)?)?;
    io::write_file(&cli.out, "solve.svg", &race_plot(&traj, &cfg))?;
    info!("wrote {}", cli.out.display());
    io::to_json(&summary)
}

fn by_distance(traj: &Trajectory, f: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    (0..traj.len()).map(|i| (traj.states[i].x, f(i))).collect()
}

fn race_plot(traj: &Trajectory, cfg: &ModelConfig) -> String {
    let e0 = cfg.runner.e0;
    let s = &traj.states;
    let panels = [
        Panel::new("velocity [m/s]", vec![Series::new("v", by_distance(traj, |i| s[i].v))]),
        Panel::new("force [m/s²]", vec![Series::new("f", by_distance(traj, |i| s[i].f))]),
        Panel::new(
            "aerobic power σ(e) [W/kg]",
            vec![Series::new(
                "σ",
                by_distance(traj, |i| sigma_eval(&cfg.sigma, s[i].e.clamp(0.0, e0), e0).unwrap_or(f64::NAN)),
            )],
        ),
        Panel::new("neural drive u", vec![Series::new("u", by_distance(traj, |i| traj.controls[i]))]),
        Panel::new("anaerobic energy e [J/kg]", vec![Series::new("e", by_distance(traj, |i| s[i].e))]),
    ];
    svg::render(&panels, "distance [m]")
}

fn approx(cli: &Cli, no_overlay: bool, samples: usize) -> Result<String> {
    let cfg = load_config(cli)?;
    let (sol, profile) = turnpike::assemble_profile(&cfg.runner, &cfg.sigma)?;
    io::write_file(&cli.out, "turnpike.json", &io::to_json(&sol)?)?;
    io::write_file(&cli.out, "profile.csv", &io::profile_csv(&profile, samples)?)?;
    let mut series = vec![Series::new(
        "closed form",
        profile
            .sample(samples.clamp(10, 2000))
            .into_iter()
            .map(|(t, v, _)| profile.distance(t).map(|x| (x, v)))
            .collect::<Result<Vec<_>>>()?,
    )];
    if !no_overlay {
        let traj = ocp::solve_config(&cfg, transcription(cli, SchemeArg::HermiteSimpson)?, &solver_options(cli)?)?;
        series.push(Series::new("optimal control", by_distance(&traj, |i| traj.states[i].v)));
    }
    io::write_file(
        &cli.out,
        "approx.svg",
        &svg::render(&[Panel::new("velocity [m/s]", series)], "distance [m]"),
    )?;
    io::to_json(&sol)
}

#[derive(Serialize)]
struct FitReport {
    inferred: fit::FittedParams,
    refined: Option<fit::RefineReport>,
}

fn fit_cmd(
    cli: &Cli,
    input: &Path,
    distance: Option<f64>,
    sigmas: [Option<f64>; 3],
    refine: bool,
    budget: usize,
) -> Result<String> {
    let base = load_config(cli)?;
    let series = VelocitySeries::from_csv(File::open(input)?, distance)?;
    let sigma_bar = sigmas[0].unwrap_or(base.sigma.sigma_bar);
    // without an explicit σ̄ the base σ_f applies; with one, 10% below it
    let sigma_f = sigmas[1].unwrap_or(if sigmas[0].is_some() { 0.9 * sigma_bar } else { base.sigma.sigma_f });
    let sigma_r = sigmas[2].unwrap_or(base.sigma.sigma_r);
    let mut base = base;
    base.sigma.sigma_bar = sigma_bar;
    base.sigma.sigma_f = sigma_f;
    base.sigma.sigma_r = sigma_r;
    let opts = InferOptions {
        base: base.clone(),
        ..InferOptions::new(sigma_bar, sigma_f, sigma_r)
    };
    let inferred = fit::infer_with(&series, &opts)?;
    let refined = if refine {
        let spec = Transcription::with_nodes(cli.nodes.min(150));
        let solver = SolverOptions {
            tol: cli.tol.max(1e-6),
            ..SolverOptions::default()
        };
        let ro = RefineOptions {
            budget,
            ..RefineOptions::default()
        };
        Some(fit::refine_with(&inferred, &series, &base, fit::ocp_simulator(spec, solver), ro)?)
    } else {
        None
    };
    let best = refined.as_ref().map_or(&inferred, |r| &r.params);
    io::write_file(&cli.out, "fitted.json", &best.to_config(&base).to_json()?)?;
    let profile = inferred.profile(&base);
    let panel = Panel::new(
        "velocity [m/s]",
        vec![
            Series::new("data", series.samples.clone()),
            Series::new("fit", series.samples.iter().map(|&(t, _)| (t, profile.velocity(t))).collect()),
        ],
    );
    io::write_file(&cli.out, "fit.svg", &svg::render(&[panel], "time [s]"))?;
    let report = FitReport { inferred, refined };
    let json = io::to_json(&report)?;
    io::write_file(&cli.out, "fit_report.json", &json)?;
    Ok(json)
}

#[derive(Serialize)]
struct ScenarioResult {
    scenario: String,
    t_f: f64,
    mean_v: f64,
    plateau_v: f64,
    kkt_residual: f64,
    extrema: Vec<Extremum>,
}

fn slope_sweep(cli: &Cli) -> Result<String> {
    let base = load_config(cli)?;
    let spec = transcription(cli, SchemeArg::HermiteSimpson)?;
    let opts = solver_options(cli)?;
    let scenarios: Vec<(&str, ModelConfig)> = fixtures::slope_scenarios()
        .into_iter()
        .map(|(n, c)| {
            (
                n,
                ModelConfig {
                    slope: c.slope,
                    ..base.clone()
                },
            )
        })
        .collect();
    let solved: Vec<Result<Trajectory>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|(_, cfg)| scope.spawn(move || ocp::solve_config(cfg, spec, &opts)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "x", "v", "beta"])?;
    for ((name, cfg), traj) in scenarios.iter().zip(solved) {
        let traj = traj?;
        for s in &traj.states {
            w.write_record([name.to_string(), s.x.to_string(), s.v.to_string(), cfg.slope.beta(s.x).to_string()])?;
        }
        rows.push(ScenarioResult {
            scenario: name.to_string(),
            t_f: traj.t_f,
            mean_v: cfg.runner.distance / traj.t_f,
            plateau_v: traj.plateau().v_mean,
            kkt_residual: traj.kkt_residual,
            extrema: traj.velocity_extrema(1e-3),
        });
        curves.push(Series::new(*name, by_distance(&traj, |i| traj.states[i].v)));
    }
    let velocity = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8");
    io::write_file(&cli.out, "velocity.csv", &velocity)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "t_f", "mean_v", "plateau_v"])?;
    for r in &rows {
        w.write_record([r.scenario.clone(), r.t_f.to_string(), r.mean_v.to_string(), r.plateau_v.to_string()])?;
    }
    let sweep = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8");
    io::write_file(&cli.out, "sweep.csv", &sweep)?;
    let json = io::to_json(&rows)?;
    io::write_file(&cli.out, "sweep.json", &json)?;
    io::write_file(
        &cli.out,
        "sweep.svg",
        &svg::render(&[Panel::new("velocity [m/s]", curves)], "distance [m]"),
    )?;
    Ok(json)
}

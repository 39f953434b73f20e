//! `qsteer`: constants, steering runs, moment problems and the x² worked example.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use qsteer_core::bounds::{BoundReport, Constants};
use qsteer_core::moments::{build_biorthogonal, build_frequencies, frame_certificate, norm_sandwich, solve_moments};
use qsteer_core::report::{section4, PhysicalUnitReport};
use qsteer_core::steering::{approximate_steer, full_transfer};
use qsteer_core::{ConstantsMode, Error, SteeringMode};
use serde::Serialize;

use config::{Needs, RunConfig};
use output::{resolve_dir, Output};

#[derive(Parser)]
#[command(name = "qsteer", version, about = "Explicit steering of the bilinear Schrödinger equation on (0,1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides QSTEER_OUT and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["scanned", "paper-literal"])]
    constants_mode: Option<String>,
    #[arg(long, global = true, value_parser = ["practical", "paper-threshold"])]
    mode: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write every bound constant for the transfer (j, k) at n.
    Constants,
    /// Run the steering pipeline and write the result and trajectory.
    Steer,
    /// Solve a moment problem for the configured targets.
    Moments,
    /// Compare computed constants of the x² example with the printed ones.
    ReproduceSection4,
    /// Quick consistency checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Steer => "steer",
            Command::Moments => "moments",
            Command::ReproduceSection4 => "reproduce-section4",
            Command::Selftest => "selftest",
        }
    }

    fn needs(self) -> Needs {
        match self {
            Command::Constants | Command::Steer => Needs::Pair,
            Command::Moments => Needs::Moments,
            Command::ReproduceSection4 | Command::Selftest => Needs::Nothing,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &cli.constants_mode {
        cfg.constants_mode = m.parse::<ConstantsMode>()?;
    }
    if let Some(m) = &cli.mode {
        cfg.mode = m.parse::<SteeringMode>()?;
    }
    cfg.validate(cli.command.needs()).context("invalid configuration")?;
    let out = Output::create(resolve_dir(cli.out.as_deref(), &cfg))?;
    let name = cli.command.name();
    match cli.command {
        Command::Constants => cmd_constants(&cfg, &out, name),
        Command::Steer => cmd_steer(&cfg, &out, name),
        Command::Moments => cmd_moments(&cfg, &out, name),
        Command::ReproduceSection4 => cmd_section4(&cfg, &out, name),
        Command::Selftest => cmd_selftest(&cfg, &out, name),
    }
}

fn cmd_constants(cfg: &RunConfig, out: &Output, name: &str) -> Result<ExitCode> {
    let b = cfg.operator()?;
    let constants = Constants::new(&b, cfg.j, cfg.k, cfg.constants_mode)?;
    let report = BoundReport::new(cfg.n as f64, &constants)?;
    if !report.resonance_free_k {
        eprintln!("warning: level {} fails the non-resonance condition; thresholds omitted", cfg.k);
    }
    let path = out.write_json("constants.json", name, "ok", cfg, &report)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Failure {
    error: String,
    partial_trajectory: Option<PathBuf>,
}

fn cmd_steer(cfg: &RunConfig, out: &Output, name: &str) -> Result<ExitCode> {
    let b = cfg.operator()?;
    let plan = cfg.plan();
    let result = if cfg.approximate_only { approximate_steer(&plan, &b) } else { full_transfer(&plan, &b) };
    match result {
        Ok(r) => {
            if let Some(t) = &r.trajectory {
                out.write_trajectory("trajectory.csv", t, None)?;
            }
            let units = PhysicalUnitReport::new(&[("averaging phase", r.T_n), ("total", r.total_time)]);
            let path = out.write_json("steer.json", name, "ok", cfg, SteerOutput { steering: &r, units })?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            let partial = match &e {
                Error::Drift { partial, .. } => Some(out.write_trajectory("trajectory.partial.csv", partial, Some(&e.to_string()))?),
                _ => None,
            };
            out.write_json("steer.json", name, "failed", cfg, Failure { error: e.to_string(), partial_trajectory: partial })?;
            eprintln!("error: {e}");
            Ok(ExitCode::from(1))
        }
    }
}

#[derive(Serialize)]
struct SteerOutput<'a> {
    steering: &'a qsteer_core::SteeringResult,
    units: PhysicalUnitReport,
}

#[derive(Serialize)]
struct MomentOutput {
    l: usize,
    cutoff: usize,
    gap: f64,
    gram_min: f64,
    gram_max: f64,
    control: qsteer_core::ControlSignal,
    control_l2: f64,
    sandwich: (f64, f64),
    achieved: Vec<[f64; 2]>,
    max_moment_error: f64,
}

fn cmd_moments(cfg: &RunConfig, out: &Output, name: &str) -> Result<ExitCode> {
    let freq = build_frequencies(cfg.l, cfg.cutoff)?;
    let fam = build_biorthogonal(&freq, cfg.horizon())?;
    let targets = cfg.moment_targets();
    let u = solve_moments(&fam, &targets)?;
    let achieved: Vec<Complex64> = freq.mu.iter().map(|&m| u.fourier_moment(m)).collect();
    let max_err = achieved.iter().zip(&targets).map(|(a, t)| (a - t).norm()).fold(0.0, f64::max);
    let (gram_min, gram_max) = frame_certificate(&fam);
    let res = MomentOutput {
        l: cfg.l,
        cutoff: cfg.cutoff,
        gap: freq.gap,
        gram_min,
        gram_max,
        control_l2: u.l2_norm(),
        control: u,
        sandwich: norm_sandwich(&targets),
        achieved: achieved.iter().map(|z| [z.re, z.im]).collect(),
        max_moment_error: max_err,
    };
    let path = out.write_json("moments.json", name, "ok", cfg, res)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_section4(cfg: &RunConfig, out: &Output, name: &str) -> Result<ExitCode> {
    let s = section4()?;
    println!("{:<26} {:>14} {:>14}  status", "quantity", "computed", "printed");
    for r in &s.rows {
        println!(
            "{:<26} {:>14.6e} {:>14.6e}  {}",
            r.name,
            r.computed,
            r.printed,
            if r.matched { "match" } else { "mismatch" }
        );
    }
    let path = out.write_json("section4.json", name, "ok", cfg, &s)?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cmd_selftest(cfg: &RunConfig, out: &Output, name: &str) -> Result<ExitCode> {
    use qsteer_core::propagator::{IntegrationOptions, Propagator};
    use qsteer_core::spectral::{coupling_x2, operator_norm, x_squared_entry, ModalState, NormKind};
    use std::f64::consts::PI;

    let mut checks = Vec::new();
    let b12 = x_squared_entry(1, 2);
    checks.push(Check {
        name: "x2_entry",
        pass: (b12 + 16.0 / (9.0 * PI * PI)).abs() < 1e-14,
        detail: format!("B_12 = {b12}"),
    });
    let b = coupling_x2(40);
    let h3 = operator_norm(&b, NormKind::H3Op)?.value;
    checks.push(Check { name: "h3_norm", pass: h3 <= 5.2, detail: format!("‖B‖₃ = {h3}") });
    let fam = build_biorthogonal(&build_frequencies(1, 8)?, 4.0 / PI)?;
    let (lo, hi) = frame_certificate(&fam);
    checks.push(Check {
        name: "ingham_frame",
        pass: lo >= 3.0 * PI / 16.0 - 1e-8 && hi <= 8.0 / PI + 1e-8,
        detail: format!("[{lo}, {hi}]"),
    });
    let b8 = coupling_x2(8);
    let prop = Propagator::new(&b8, IntegrationOptions::default())?;
    let u = qsteer_core::ControlSignal::periodic(2, 1, 10.0, 50.0);
    let (fin, drift) = prop.run(&ModalState::eigenstate(8, 2)?, &u, 50.0, |_, _| {})?;
    checks.push(Check {
        name: "unitarity",
        pass: drift <= 1e-9 && (fin.norm() - 1.0).abs() <= 1e-9,
        detail: format!("drift {drift:.2e}"),
    });
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    out.write_json("selftest.json", name, if failed == 0 { "ok" } else { "failed" }, cfg, &checks)?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

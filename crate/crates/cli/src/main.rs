//! Command-line harness for the CRN receiver toolkit.
//!
//! Subcommands read a JSON experiment configuration (see `configs/` in the
//! repository and the README for the schema), run the requested experiment,
//! and write CSV (plus optional SVG) into the configured output directory.
//! Exit codes: 0 success, 1 runtime failure, 2 configuration problems.

use clap::{Args, Parser, Subcommand};
use crndet_core::experiments::figures::{self, CurveRow};
use crndet_core::experiments::report::{self, Series};
use crndet_core::experiments::{self, validate, ExperimentConfig};
use crndet_core::reference::LikelihoodModel;
use crndet_core::rng::{self, streams};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "crndet",
    about = "Stochastic-CRN detectors for molecular communication receivers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replicate count from the config.
    #[arg(long)]
    replicates: Option<usize>,
    /// Also emit SVG line charts next to the CSV files.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the optimal threshold and its analytic BER per scenario.
    MapReference(Common),
    /// Train Boltzmann machines and emit the BER-vs-step curves.
    TrainBm(Common),
    /// Monte-Carlo BER of the configured detector per scenario.
    RunBer(Common),
    /// Pilot-symbol online learning: BER-vs-pilot curves.
    OnlineLearn(Common),
    /// Weight tracking under the time-variant noise schedule.
    TimeVariant(Common),
    /// Run the built-in invariant suite.
    Validate {
        /// Seed for the suite's stochastic checks.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

type CommandFn = fn(&ExperimentConfig, &Resolved) -> Result<(), String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, CommandFn) = match &cli.command {
        Command::Validate { seed } => return run_validate(*seed),
        Command::MapReference(c) => (c, map_reference),
        Command::TrainBm(c) => (c, train_bm),
        Command::RunBer(c) => (c, run_ber),
        Command::OnlineLearn(c) => (c, online_learn),
        Command::TimeVariant(c) => (c, time_variant),
    };

    let mut config = match ExperimentConfig::load(&common.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(replicates) = common.replicates {
        config.n_replicates = replicates;
    }
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
    let resolved = Resolved { out_dir, plot: common.plot };
    match run(&config, &resolved) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            if msg.starts_with("config") {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

struct Resolved {
    out_dir: PathBuf,
    plot: bool,
}

impl Resolved {
    fn ensure_out_dir(&self) -> Result<(), String> {
        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| format!("cannot create output directory {:?}: {e}", self.out_dir))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, String> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| format!("cannot write {path:?}: {e}"))?;
        Ok(path)
    }
}

fn run_validate(seed: u64) -> ExitCode {
    let results = validate::run_all(seed);
    for r in &results {
        println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if validate::all_passed(&results) {
        println!("all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn map_reference(config: &ExperimentConfig, _resolved: &Resolved) -> Result<(), String> {
    println!("scenario,n_receptors,p0,p1,nu,map_ber");
    for scenario in &config.scenarios {
        let model = LikelihoodModel::from_channel(&scenario.channel).map_err(err)?;
        let detector = model.optimal_threshold();
        println!(
            "{},{},{},{},{},{}",
            scenario.name,
            scenario.channel.n_receptors,
            model.p(crndet_core::Symbol::Zero),
            model.p(crndet_core::Symbol::One),
            detector.nu(),
            model.analytic_ber(&detector),
        );
    }
    Ok(())
}

fn train_bm(config: &ExperimentConfig, resolved: &Resolved) -> Result<(), String> {
    let training = config
        .training
        .as_ref()
        .ok_or("config error: the train-bm command needs a training section")?;
    resolved.ensure_out_dir()?;
    let out =
        figures::fig2_experiment(&config.scenarios, training, config.n_replicates, config.seed)
            .map_err(err)?;
    let mut csv = Vec::new();
    report::write_curve_csv(&out.rows, "step", &mut csv).map_err(err)?;
    let path = resolved.write("fig2.csv", &csv)?;
    println!("wrote {}", path.display());

    let bm_dir = resolved.out_dir.join("bms");
    std::fs::create_dir_all(&bm_dir).map_err(|e| format!("cannot create {bm_dir:?}: {e}"))?;
    for (scenario, rep, bm) in &out.trained {
        let mut text = Vec::new();
        bm.write_text(&mut text).map_err(err)?;
        let path = bm_dir.join(format!("{scenario}_rep{rep}.bm"));
        std::fs::write(&path, text).map_err(|e| format!("cannot write {path:?}: {e}"))?;
    }
    println!("wrote {} trained models under {}", out.trained.len(), bm_dir.display());

    if resolved.plot {
        let svg = curve_svg("mean BER vs training step", "training step", &out.rows);
        let path = resolved.write("fig2.svg", svg.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_ber(config: &ExperimentConfig, _resolved: &Resolved) -> Result<(), String> {
    let ber = config
        .ber
        .as_ref()
        .ok_or("config error: the run-ber command needs a ber section")?;
    println!("scenario,ber,errors,symbols,capped,analytic_map_ber");
    for (s_idx, scenario) in config.scenarios.iter().enumerate() {
        let detector =
            experiments::build_detector(&ber.detector, &scenario.channel).map_err(err)?;
        let model = LikelihoodModel::from_channel(&scenario.channel).map_err(err)?;
        let map_ber = model.analytic_ber(&model.optimal_threshold());
        let mut rng = rng::stream(config.seed, streams::replicate(streams::BER, s_idx, 0));
        let est = experiments::run_ber(
            detector.as_ref(),
            &scenario.channel,
            ber.max_errors,
            ber.symbol_cap,
            &mut rng,
        );
        println!(
            "{},{},{},{},{},{}",
            scenario.name, est.ber, est.errors, est.symbols, est.capped, map_ber
        );
    }
    Ok(())
}

fn online_learn(config: &ExperimentConfig, resolved: &Resolved) -> Result<(), String> {
    let online = config
        .online
        .as_ref()
        .ok_or("config error: the online-learn command needs an online section")?;
    resolved.ensure_out_dir()?;
    let (ber_rows, nw_rows) = figures::fig3_experiment(
        &config.scenarios,
        &online.lc,
        online.n_pilots,
        &online.detection,
        config.n_replicates,
        config.seed,
    )
    .map_err(err)?;
    let mut csv = Vec::new();
    report::write_curve_csv(&ber_rows, "pilot", &mut csv).map_err(err)?;
    let path = resolved.write("fig3.csv", &csv)?;
    println!("wrote {}", path.display());
    let mut nw_csv = Vec::new();
    report::write_nw_csv(&nw_rows, &mut nw_csv).map_err(err)?;
    let path = resolved.write("fig3_nw.csv", &nw_csv)?;
    println!("wrote {}", path.display());
    if resolved.plot {
        let svg = curve_svg("mean BER vs pilot count", "pilot symbols", &ber_rows);
        let path = resolved.write("fig3.svg", svg.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn time_variant(config: &ExperimentConfig, resolved: &Resolved) -> Result<(), String> {
    let tv = config
        .time_variant
        .as_ref()
        .ok_or("config error: the time-variant command needs a time_variant section")?;
    resolved.ensure_out_dir()?;
    let rows = figures::fig4_experiment(tv, config.n_replicates, config.seed).map_err(err)?;
    let mut csv = Vec::new();
    report::write_fig4_csv(&rows, &mut csv).map_err(err)?;
    let path = resolved.write("fig4.csv", &csv)?;
    println!("wrote {}", path.display());
    if resolved.plot {
        let series = vec![
            Series {
                name: "mean W_ON",
                points: rows.iter().map(|r| (r.pilot as f64, r.mean_nw)).collect(),
                dashed: false,
            },
            Series {
                name: "min W_ON",
                points: rows.iter().map(|r| (r.pilot as f64, r.min_nw as f64)).collect(),
                dashed: false,
            },
            Series {
                name: "max W_ON",
                points: rows.iter().map(|r| (r.pilot as f64, r.max_nw as f64)).collect(),
                dashed: false,
            },
            Series {
                name: "optimal",
                points: rows.iter().map(|r| (r.pilot as f64, r.opt_nu as f64)).collect(),
                dashed: true,
            },
        ];
        let svg = report::line_chart_svg(
            "active weight molecules vs pilot count",
            "pilot symbols",
            "W_ON count",
            &series,
            false,
        );
        let path = resolved.write("fig4.svg", svg.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn curve_svg(title: &str, x_label: &str, rows: &[CurveRow]) -> String {
    let grouped = report::curve_series(rows);
    let mut series = Vec::new();
    for (name, mean, reference) in &grouped {
        series.push(Series { name, points: mean.clone(), dashed: false });
        series.push(Series { name, points: reference.clone(), dashed: true });
    }
    report::line_chart_svg(title, x_label, "BER", &series, true)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

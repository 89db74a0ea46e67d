//! The `perctri` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arms::{default_pattern, parse_pattern};
use crate::boxgraph::{choose_c, BoxFamily, ChainGraph, VertexTuple};
use crate::config::Configuration;
use crate::error::{invalid, Error, Result};
use crate::estimator::{
    exact_enumeration, fit_exponent, gnuplot_script, restricted_ratio_report, run_arms, run_moments, ArmTemplate,
    EstimateTable, ExponentFit, Weighting,
};
use crate::io::{load_config, save_config, sha256_hex, unix_now, OutputDigest, RunManifest};
use crate::svg::{render_svg, Overlays};

#[derive(Parser, Debug)]
#[command(name = "perctri", version, about = "Critical site percolation on the triangular lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Annulus,
    Halfplane,
    Horseshoe,
    Restricted,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one configuration and write it in binary form.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo moments of |L|, |F|, |Q| as CSV.
    Features {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        tau: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arm-event probabilities along a ladder of radii as CSV.
    Arms {
        #[arg(long, value_enum, default_value = "annulus")]
        variant: VariantArg,
        #[arg(long, default_value_t = 4)]
        kappa: u8,
        /// Arm states such as `ococ` or `open,closed`; defaults by kappa.
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long, default_value_t = 0)]
        inner: u32,
        /// Inner box exponent for the horseshoe variant.
        #[arg(long, default_value_t = 1)]
        rho: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        ladder: Vec<u32>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-log fit of one quantity from an estimates CSV.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        tau: Option<u32>,
        #[arg(long)]
        weighted: bool,
        /// JSON fit report; a gnuplot script is written next to it with suffix `.gp`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact moments and arm probabilities by enumeration at n = 1 or 2.
    Oracle {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        tau: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the chain graph and box family of a vertex tuple.
    Graph {
        #[arg(long)]
        tuple_file: PathBuf,
        #[arg(long)]
        tau: Option<u32>,
        /// Overrides the radius stored in the tuple file.
        #[arg(long)]
        n: Option<u32>,
        /// Exit 3 if any index, proximity or disjointness check fails.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a configuration file as SVG.
    Render {
        #[arg(long)]
        config: PathBuf,
        /// Letters from LFQG.
        #[arg(long, default_value = "")]
        overlays: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unrestricted over restricted arm-event ratios on a 5x5 grid as JSON.
    Ratio {
        #[arg(long)]
        kappa: u8,
        #[arg(long)]
        n: u32,
        /// Trials for the annulus events.
        #[arg(long)]
        trials: u64,
        /// Trials for the restricted events; defaults to `--trials`.
        #[arg(long)]
        t_trials: Option<u64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun the command recorded in a manifest and compare output digests.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::Features { .. } => "features",
            Command::Arms { .. } => "arms",
            Command::Fit { .. } => "fit",
            Command::Oracle { .. } => "oracle",
            Command::Graph { .. } => "graph",
            Command::Render { .. } => "render",
            Command::Ratio { .. } => "ratio",
            Command::Replay { .. } => "replay",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Sample { seed, .. }
            | Command::Features { seed, .. }
            | Command::Arms { seed, .. }
            | Command::Ratio { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quantity: String,
    pub tau: Option<u32>,
    pub fit: ExponentFit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphReport {
    pub c: u32,
    pub graph: ChainGraph,
    pub family: BoxFamily,
    pub violations: Vec<String>,
}

/// Sends `text` to `out`, or stdout when absent; returns the files written.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<Vec<PathBuf>> {
    match out {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(vec![p.clone()])
        }
        None => {
            print!("{text}");
            Ok(vec![])
        }
    }
}

fn json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn graph_report(tuple_file: &Path, tau: Option<u32>, n: Option<u32>) -> Result<GraphReport> {
    let text = std::fs::read_to_string(tuple_file)?;
    let mut tuple: VertexTuple =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad tuple file {}: {e}", tuple_file.display())))?;
    if let Some(n) = n {
        tuple.n = n;
    }
    let tau = tau.unwrap_or(tuple.vertices.len() as u32);
    if tau as usize != tuple.vertices.len() {
        return invalid(format!("--tau {tau} but the tuple has {} vertices", tuple.vertices.len()));
    }
    let c = choose_c(tau);
    let graph = ChainGraph::build(&tuple, c)?;
    let family = graph.disjoint_box_family()?;
    let mut violations = graph.index_violations();
    violations.extend(graph.chain_proximity_violations());
    Ok(GraphReport { c, graph, family, violations })
}

/// Runs one command; returns the files it wrote.
fn execute(cmd: &Command) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Sample { n, seed, trial, out } => {
            if *n == 0 {
                return invalid("n must be positive");
            }
            save_config(out, &Configuration::sample(*n, *seed, *trial))?;
            Ok(vec![out.clone()])
        }
        Command::Features { n, trials, seed, tau, out } => {
            let table = run_moments(n, tau, *trials, *seed)?;
            emit(out, &table.to_csv())
        }
        Command::Arms { variant, kappa, pattern, inner, rho, ladder, trials, seed, out } => {
            let template = match variant {
                VariantArg::Annulus => {
                    let pattern = match pattern {
                        Some(p) => parse_pattern(p)?,
                        None => default_pattern(*kappa),
                    };
                    ArmTemplate::Annulus { kappa: *kappa, pattern, inner: *inner }
                }
                VariantArg::Halfplane => ArmTemplate::HalfPlane,
                VariantArg::Horseshoe => ArmTemplate::Horseshoe { rho: *rho },
                VariantArg::Restricted => ArmTemplate::Restricted { kappa: *kappa },
            };
            let table = run_arms(&template, ladder, *trials, *seed)?;
            emit(out, &table.to_csv())
        }
        Command::Fit { input, quantity, tau, weighted, out } => {
            let table = EstimateTable::from_csv(&std::fs::read_to_string(input)?)?;
            let rows: Vec<_> = table.select(quantity, *tau).into_iter().cloned().collect();
            if rows.is_empty() {
                return invalid(format!("no rows for quantity {quantity:?} in {}", input.display()));
            }
            let weighting = if *weighted { Weighting::InverseRelativeVariance } else { Weighting::None };
            let fit = fit_exponent(&rows, weighting)?;
            let script = gnuplot_script(&fit, quantity);
            let report = FitReport { quantity: quantity.clone(), tau: *tau, fit };
            let mut written = emit(out, &json(&report)?)?;
            if let Some(p) = out {
                let mut gp = p.as_os_str().to_owned();
                gp.push(".gp");
                let gp = PathBuf::from(gp);
                std::fs::write(&gp, script)?;
                written.push(gp);
            }
            Ok(written)
        }
        Command::Oracle { n, tau, out } => emit(out, &json(&exact_enumeration(*n, *tau)?)?),
        Command::Graph { tuple_file, tau, n, check, out } => {
            let report = graph_report(tuple_file, *tau, *n)?;
            let written = emit(out, &json(&report)?)?;
            if *check && !report.violations.is_empty() {
                for v in &report.violations {
                    log::error!("{v}");
                }
                return Err(Error::Invariant(format!("{} box-graph violations", report.violations.len())));
            }
            Ok(written)
        }
        Command::Render { config, overlays, out } => {
            let cfg = load_config(config)?;
            std::fs::write(out, render_svg(&cfg, Overlays::parse(overlays)?)?)?;
            Ok(vec![out.clone()])
        }
        Command::Ratio { kappa, n, trials, t_trials, seed, out } => {
            let report = restricted_ratio_report(*kappa, *n, *trials, t_trials.unwrap_or(*trials), *seed)?;
            emit(out, &json(&report)?)
        }
        Command::Replay { manifest } => replay(manifest).map(|_| vec![]),
    }
}

fn digests(paths: &[PathBuf]) -> Result<Vec<OutputDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(OutputDigest { path: p.to_string_lossy().into_owned(), sha256: sha256_hex(&std::fs::read(p)?) })
        })
        .collect()
}

fn replay(path: &Path) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    let cli = parse(std::iter::once("perctri".to_string()).chain(manifest.argv.iter().cloned()))
        .map_err(|e| Error::Format(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return invalid("a manifest may not record a replay");
    }
    let written = execute(&cli.command)?;
    let now = digests(&written)?;
    if now != manifest.outputs {
        for (a, b) in manifest.outputs.iter().zip(&now) {
            if a != b {
                log::error!("{}: recorded {} but replay produced {}", a.path, a.sha256, b.sha256);
            }
        }
        return Err(Error::Invariant(format!("replay of {} produced different outputs", path.display())));
    }
    log::info!("replay of {} matched {} outputs", path.display(), now.len());
    Ok(())
}

fn parse<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args)
}

fn run_parsed(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let started = unix_now();
    let written = execute(&cli.command)?;
    if let Some(primary) = written.first() {
        let manifest = RunManifest {
            command: cli.command.name().into(),
            argv,
            master_seed: cli.command.seed(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: started,
            finished_unix: unix_now(),
            outputs: digests(&written)?,
        };
        manifest.save(&RunManifest::path_for(primary))?;
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args.clone()) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match run_parsed(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

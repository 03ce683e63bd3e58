//! `ep-spectra sweep|ep-find|trap|encircle`.
//!
//! Every command computes its full result before touching the file
//! system, so a failing run leaves no output behind. Exit codes: 0
//! success, 2 input error, 3 numerical failure, 4 search failure.

pub mod instance;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effective::{coupling_sweep, find_bics, Bic, EffectiveError, TrappingReport};
use crate::spectral::phase_rigidity;
use crate::trajectory::{
    detect_avoided_crossings, encircle_ep, find_ep, scalar_grid, sweep, EpOptions, Monodromy, TrajectoryError,
};
use instance::{Instance, Model, Output};
use output::{num, to_json, Metadata, Plot, ResultTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Search(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Search(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ep-spectra", version, about = "Spectra, exceptional points and resonance trapping of non-Hermitian Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance file (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for random instances, recorded in the output metadata.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leave the timestamp out of the metadata.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Labeled eigenvalue trajectories along a one-variable sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// SVG of the trajectories in the complex plane.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Damped Newton search for an exceptional point of a two-variable family.
    EpFind {
        #[command(flatten)]
        common: Common,
        /// Starting point `X,Y`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        start: Vec<f64>,
    },
    /// Coupling-strength sweep of an n_level instance.
    Trap {
        #[command(flatten)]
        common: Common,
        /// Per-coupling width table; defaults to the output path with a
        /// `.widths.csv` extension.
        #[arg(long)]
        widths: Option<PathBuf>,
        /// SVG of log10 widths against log10 coupling.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Transport eigenpairs around a circle in a two-variable family.
    Encircle {
        #[command(flatten)]
        common: Common,
        /// Circle center `X,Y`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 1)]
        loops: usize,
        #[arg(long, default_value_t = 128)]
        steps: usize,
    },
}

/// Files to write and text for stdout, produced before any I/O.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(PathBuf, String)>,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpRecord {
    pub metadata: Metadata,
    pub location: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Step from the located point along the first variable.
    pub offset: f64,
    pub rigidity_at_offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapRecord {
    pub metadata: Metadata,
    pub report: TrappingReport,
    pub bics: Vec<Bic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncircleRecord {
    pub metadata: Metadata,
    pub monodromy: Monodromy,
}

fn load(common: &Common) -> Result<(Vec<u8>, Instance), CliError> {
    let bytes = std::fs::read(&common.instance)
        .map_err(|e| CliError::Input(format!("{}: {e}", common.instance.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Input(format!("{}: not UTF-8: {e}", common.instance.display())))?;
    let inst = Instance::parse(text, common.seed)
        .map_err(|e| CliError::Input(format!("{}: {e}", common.instance.display())))?;
    Ok((bytes, inst))
}

fn metadata(command: &str, bytes: &[u8], inst: &Instance, common: &Common) -> Metadata {
    Metadata::new(command, bytes, inst.seed, !common.no_timestamp)
}

fn trajectory_error(e: TrajectoryError) -> CliError {
    match e {
        TrajectoryError::Spectral { .. } => CliError::Numerical(e.to_string()),
        TrajectoryError::NoConvergence { .. }
        | TrajectoryError::NotAnEp { .. }
        | TrajectoryError::RadiusTooSmall { .. }
        | TrajectoryError::AmbiguousMatching { .. } => CliError::Search(e.to_string()),
        TrajectoryError::InvalidArgument(_) | TrajectoryError::ParameterCount { .. } | TrajectoryError::TooFewPoints { .. } => {
            CliError::Input(e.to_string())
        }
        TrajectoryError::DimensionChanged { .. } => CliError::Numerical(e.to_string()),
    }
}

fn effective_error(e: EffectiveError) -> CliError {
    match e {
        EffectiveError::Spectral(_) | EffectiveError::Trajectory(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn two_values(v: &[f64], flag: &str) -> Result<[f64; 2], CliError> {
    match v {
        [x, y] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
        _ => Err(CliError::Input(format!("--{flag} expects two finite numbers `X,Y`"))),
    }
}

fn grid_of(inst: &Instance) -> Result<Vec<f64>, CliError> {
    inst.grid()
        .ok_or_else(|| CliError::Input("instance has no sweep grid".into()))
}

pub fn cmd_sweep(common: &Common, format: Format, plot: Option<&Path>) -> Result<Outcome, CliError> {
    let (bytes, inst) = load(common)?;
    if inst.vars != 1 {
        return Err(CliError::Input(format!(
            "sweep needs a path over one variable, the instance uses {}",
            inst.vars
        )));
    }
    let xs = grid_of(&inst)?;
    if let Model::PtDimer { .. } = inst.model {
        for &x in &xs {
            if let Model::PtDimer { gamma, .. } = inst.model_at(&[x]) {
                if !(gamma >= 0.0) {
                    return Err(CliError::Input(format!("gain/loss rate {gamma} at x = {x} is negative")));
                }
            }
        }
    }
    let family = inst.family(1);
    let tb = sweep(&family, &scalar_grid(&xs)).map_err(|e| match &e {
        TrajectoryError::Spectral { point, .. } => {
            let k = xs.iter().position(|x| *x == point[0]).unwrap_or(0);
            let lo = xs[k.saturating_sub(1)];
            let hi = xs[(k + 1).min(xs.len() - 1)];
            CliError::Numerical(format!("{e}; failing grid interval [{lo}, {hi}]"))
        }
        _ => trajectory_error(e),
    })?;
    let meta = metadata("sweep", &bytes, &inst, common);
    let mut table = ResultTable::from_bundle(meta, family.description().to_string(), &xs, &tb);
    let crossings = detect_avoided_crossings(&tb, f64::INFINITY);
    if inst.wants(Output::AvoidedCrossings) {
        table.avoided_crossings = Some(crossings.clone());
    }
    let mut out = Outcome::default();
    for &k in &tb.flagged {
        out.stderr.push_str(&format!(
            "warning: labels between x = {} and x = {} are ambiguous (branch point)\n",
            xs[k],
            xs[k + 1]
        ));
    }
    let body = match format {
        Format::Csv => table.to_csv(),
        Format::Json => to_json(&table),
    };
    out.files.push((common.out.clone(), body));
    if let Some(path) = plot {
        let series = tb
            .branches
            .iter()
            .map(|b| b.iter().map(|z| (z.re, z.im)).collect())
            .collect();
        let markers = crossings
            .iter()
            .flat_map(|ac| {
                let (l, m) = ac.pair;
                [tb.branches[l][ac.index], tb.branches[m][ac.index]]
            })
            .map(|z| (z.re, z.im))
            .collect();
        let p = Plot {
            title: family.description().to_string(),
            x_label: "Re z".into(),
            y_label: "Im z".into(),
            series,
            markers,
        };
        out.files.push((path.to_path_buf(), p.to_svg()));
    }
    Ok(out)
}

pub fn cmd_ep_find(common: &Common, start: &[f64]) -> Result<Outcome, CliError> {
    let (bytes, inst) = load(common)?;
    let start = two_values(start, "start")?;
    if inst.vars != 2 {
        return Err(CliError::Input(format!(
            "ep-find needs a path over two variables, the instance uses {}",
            inst.vars
        )));
    }
    let family = inst.family(2);
    let ep = find_ep(&family, &start, &EpOptions::default()).map_err(trajectory_error)?;
    let offset = 1e-6;
    let probe = [ep.location[0] + offset, ep.location[1]];
    let es = family.eigensystem(&probe).map_err(trajectory_error)?;
    let record = EpRecord {
        metadata: metadata("ep-find", &bytes, &inst, common),
        location: ep.location.clone(),
        residual: ep.residual,
        iterations: ep.iterations,
        offset,
        rigidity_at_offset: phase_rigidity(&es),
    };
    Ok(Outcome {
        files: vec![(common.out.clone(), to_json(&record))],
        stdout: format!(
            "location=({}, {}) residual={:.3e} iterations={}\n",
            ep.location[0], ep.location[1], ep.residual, ep.iterations
        ),
        stderr: String::new(),
    })
}

fn widths_path(out: &Path) -> PathBuf {
    out.with_extension("widths.csv")
}

pub fn cmd_trap(common: &Common, widths: Option<&Path>, plot: Option<&Path>) -> Result<Outcome, CliError> {
    let (bytes, inst) = load(common)?;
    let Some((eh, symmetry)) = inst.model.effective() else {
        return Err(CliError::Input("trap needs an n_level instance".into()));
    };
    let xs = grid_of(&inst)?;
    let alphas: Vec<f64> = xs
        .iter()
        .map(|&x| match inst.model_at(&[x, 0.0]) {
            Model::NLevel { eh, .. } => eh.alpha(),
            _ => unreachable!("kind checked above"),
        })
        .collect();
    let report = coupling_sweep(eh, &alphas).map_err(effective_error)?;
    let bics = find_bics(eh, &alphas, symmetry).map_err(effective_error)?;
    let mut csv = String::from("alpha");
    for l in 0..eh.levels() {
        csv.push_str(&format!(",gamma_{l}"));
    }
    csv.push('\n');
    for (a, w) in report.alphas.iter().zip(&report.widths) {
        csv.push_str(&num(*a));
        for l in 0..eh.levels() {
            csv.push(',');
            csv.push_str(&w.get(l).map_or_else(|| "nan".to_string(), |x| num(*x)));
        }
        csv.push('\n');
    }
    let summary = format!(
        "broad_count={} trapped_widths_slope={} bics={} flagged={}\n",
        report.broad_count,
        report
            .trapped_widths_slope
            .map_or_else(|| "none".to_string(), |s| format!("{s:.4}")),
        bics.len(),
        report.flagged.len()
    );
    let mut out = Outcome {
        stdout: summary,
        ..Outcome::default()
    };
    if let Some(path) = plot {
        let series = (0..eh.levels())
            .map(|l| {
                report
                    .points
                    .iter()
                    .filter(|p| p.alpha > 0.0 && p.widths[l] > 0.0)
                    .map(|p| (p.alpha.log10(), p.widths[l].log10()))
                    .collect()
            })
            .collect();
        let p = Plot {
            title: "decay widths against coupling strength".into(),
            x_label: "log10 alpha".into(),
            y_label: "log10 width".into(),
            series,
            markers: Vec::new(),
        };
        out.files.push((path.to_path_buf(), p.to_svg()));
    }
    let record = TrapRecord {
        metadata: metadata("trap", &bytes, &inst, common),
        report,
        bics,
    };
    out.files.insert(0, (common.out.clone(), to_json(&record)));
    out.files
        .insert(1, (widths.map_or_else(|| widths_path(&common.out), Path::to_path_buf), csv));
    Ok(out)
}

pub fn cmd_encircle(common: &Common, center: &[f64], radius: f64, loops: usize, steps: usize) -> Result<Outcome, CliError> {
    let (bytes, inst) = load(common)?;
    let center = two_values(center, "center")?;
    if inst.vars != 2 {
        return Err(CliError::Input(format!(
            "encircle needs a path over two variables, the instance uses {}",
            inst.vars
        )));
    }
    let family = inst.family(2);
    let m = encircle_ep(&family, &center, radius, steps, loops).map_err(trajectory_error)?;
    let stdout = format!("permutation={:?} after {loops} loop(s)\n", m.permutation);
    let record = EncircleRecord {
        metadata: metadata("encircle", &bytes, &inst, common),
        monodromy: m,
    };
    Ok(Outcome {
        files: vec![(common.out.clone(), to_json(&record))],
        stdout,
        stderr: String::new(),
    })
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Sweep { common, format, plot } => cmd_sweep(common, *format, plot.as_deref()),
        Command::EpFind { common, start } => cmd_ep_find(common, start),
        Command::Trap { common, widths, plot } => cmd_trap(common, widths.as_deref(), plot.as_deref()),
        Command::Encircle {
            common,
            center,
            radius,
            loops,
            steps,
        } => cmd_encircle(common, center, *radius, *loops, *steps),
    }
}

/// Parses `args`, runs the command and writes its files; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for (path, body) in &out.files {
                if let Err(e) = std::fs::write(path, body) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            }
            eprint!("{}", out.stderr);
            print!("{}", out.stdout);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fshadow::channel::resolve_cache_dir;
use fshadow::fock::{DimensionGuard, ModeOccupation};
use fshadow::observables::GammaVariant;
use fshadow::pipeline::{
    estimate, experiment, mitigate_demo, mitigation_csv, obtain_channel, prepare_state, simulate,
    write_estimate_outputs, ChannelReport, DetectorSpec, EstimateOptions, RunConfig,
};
use fshadow::shadow::{ClassicalShadow, Mitigation};
use fshadow::{Error, Result};

#[derive(Parser)]
#[command(name = "fshadow", version, about = "Classical shadows for linear-optical states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or validate the cached measurement channel of a sector.
    Channel {
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        photons: usize,
        #[arg(long, env = "FSHADOW_CACHE")]
        cache_dir: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate data collection and write a shadow file.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Shadow file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate correlators, invariants and binned distributions from a shadow.
    Estimate {
        /// Shadow file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "FSHADOW_CACHE")]
        cache_dir: Option<PathBuf>,
        /// Input occupation of the true state, for exact-value columns.
        #[arg(long)]
        true_state: Option<ModeOccupation>,
        /// Preparation seed of the true state.
        #[arg(long)]
        prep_seed: Option<u64>,
        #[command(flatten)]
        estimation: EstimationArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// TVD of raw and mitigated pseudo-PNR distributions against shot count.
    MitigateDemo {
        #[command(flatten)]
        run: RunArgs,
        /// Shot counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        shot_counts: Vec<u64>,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full replication run: simulate, store the shadow, estimate against the truth.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        estimation: EstimationArgs,
        #[arg(long, env = "FSHADOW_CACHE")]
        cache_dir: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checked against the input occupation.
    #[arg(long)]
    modes: Option<usize>,
    /// Checked against the input occupation.
    #[arg(long)]
    photons: Option<usize>,
    /// Input occupation such as "1,1,1,0".
    #[arg(long)]
    input: Option<ModeOccupation>,
    #[arg(long)]
    prep_seed: Option<u64>,
    #[arg(long)]
    unitaries: Option<usize>,
    /// Raw shots per unitary.
    #[arg(long)]
    shots: Option<u64>,
    /// "ideal", inline JSON {"p": .., "resolutions": [..]} or a JSON file.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long, value_enum)]
    mitigation: Option<MitigationArg>,
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EstimationArgs {
    /// Median-of-means groups.
    #[arg(long)]
    groups: Option<usize>,
    /// Failure probability used to pick the number of groups.
    #[arg(long)]
    delta: Option<f64>,
    /// Use disjoint record halves for products of expectations.
    #[arg(long)]
    split_half: bool,
    #[arg(long, value_enum, default_value = "commutator")]
    gamma: GammaArg,
    /// Workloads to compute, comma separated.
    #[arg(long, value_delimiter = ',', value_enum)]
    observables: Vec<Workload>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MitigationArg {
    None,
    Resample,
    Reject,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaArg {
    Commutator,
    Anticommutator,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Workload {
    Correlators,
    Invariants,
    Binned,
}

impl RunArgs {
    fn resolve(&self, experiment: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None if experiment => RunConfig::experiment(),
            None => {
                let input = self
                    .input
                    .clone()
                    .ok_or_else(|| Error::InvalidInput("--input or --config is required".into()))?;
                RunConfig::new(input, 1, 1, 0)
            }
        };
        if let Some(v) = &self.input {
            cfg.input = v.clone();
        }
        if let Some(v) = self.prep_seed {
            cfg.prep_seed = Some(v);
        }
        if let Some(v) = self.unitaries {
            cfg.num_unitaries = v;
        }
        if let Some(v) = self.shots {
            cfg.shots_per_unitary = v;
        }
        if let Some(v) = &self.detector {
            cfg.detector = DetectorSpec::parse(v)?;
        }
        if let Some(v) = self.mitigation {
            cfg.mitigation = match v {
                MitigationArg::None => Mitigation::None,
                MitigationArg::Resample => Mitigation::Resample,
                MitigationArg::Reject => Mitigation::Reject,
            };
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(m) = self.modes {
            if m != cfg.m() {
                return Err(Error::ModeMismatch { expected: m, found: cfg.m() });
            }
        }
        if let Some(n) = self.photons {
            if n != cfg.n() {
                return Err(Error::PhotonMismatch { expected: n, found: cfg.n() });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl EstimationArgs {
    fn apply(&self, opts: &mut EstimateOptions) {
        if self.groups.is_some() {
            opts.groups = self.groups;
        }
        if let Some(d) = self.delta {
            opts.delta = d;
        }
        opts.split_half |= self.split_half;
        opts.gamma_variant = match self.gamma {
            GammaArg::Commutator => GammaVariant::Commutator,
            GammaArg::Anticommutator => GammaVariant::Anticommutator,
        };
        if !self.observables.is_empty() {
            opts.correlators = self.observables.contains(&Workload::Correlators);
            opts.invariants = self.observables.contains(&Workload::Invariants);
            opts.binned = self.observables.contains(&Workload::Binned);
        }
    }
}

/// Timings go next to the results, never inside them.
struct TimingLog {
    path: PathBuf,
    lines: Vec<String>,
    start: Instant,
}

impl TimingLog {
    fn new(path: PathBuf) -> Self {
        Self { path, lines: Vec::new(), start: Instant::now() }
    }

    fn mark(&mut self, stage: &str) {
        let line = format!("{stage}: {:.3} s", self.start.elapsed().as_secs_f64());
        eprintln!("{line}");
        self.lines.push(line);
    }

    fn finish(self) -> Result<()> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(&self.path, self.lines.join("\n") + "\n")?;
        Ok(())
    }
}

fn sibling_log(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".timing.log");
    file.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let guard = DimensionGuard::default();
    match cli.command {
        Command::Channel { modes, photons, cache_dir, out } => {
            let start = Instant::now();
            let cache = resolve_cache_dir(cache_dir.as_deref());
            let (ch, origin) = obtain_channel(modes, photons, cache.as_deref(), &guard)?;
            let report = ChannelReport::new(&ch, origin);
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            eprintln!("channel m={modes} n={photons}: {origin:?} in {:.3} s", start.elapsed().as_secs_f64());
            if let Some(path) = out {
                write_file(&path, &(json + "\n"))?;
            }
        }
        Command::Simulate { run, out } => {
            let mut log = TimingLog::new(sibling_log(&out));
            let cfg = run.resolve(false)?;
            let shadow = simulate(&cfg)?;
            log.mark("simulate");
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            shadow.save(&out)?;
            let empty = shadow.empty_records();
            if empty > 0 {
                eprintln!("warning: {empty} records have no resolved outcomes");
            }
            println!(
                "wrote {} records, {} outcomes to {}",
                shadow.records.len(),
                shadow.total_shots(),
                out.display()
            );
            log.finish()?;
        }
        Command::Estimate { input, cache_dir, true_state, prep_seed, estimation, out } => {
            let mut log = TimingLog::new(out.join("timing.log"));
            let shadow = ClassicalShadow::load(&input)?;
            let cache = resolve_cache_dir(cache_dir.as_deref());
            let (ch, _) = obtain_channel(shadow.m, shadow.n, cache.as_deref(), &guard)?;
            log.mark("channel");
            let truth = true_state.map(|s| prepare_state(&s, prep_seed)).transpose()?;
            let mut opts = EstimateOptions::default();
            estimation.apply(&mut opts);
            let report = estimate(&shadow, &ch, truth.as_ref(), &opts)?;
            log.mark("estimate");
            write_estimate_outputs(&out, &report)?;
            println!("{}", serde_json::to_string_pretty(&report.summary)?);
            log.finish()?;
        }
        Command::MitigateDemo { run, shot_counts, out } => {
            let mut log = TimingLog::new(sibling_log(&out));
            let mut cfg = run.resolve(false)?;
            if !shot_counts.is_empty() {
                cfg.mitigate_shots = shot_counts;
            }
            let rows = mitigate_demo(&cfg)?;
            log.mark("mitigate-demo");
            let csv = mitigation_csv(&rows);
            write_file(&out, &csv)?;
            print!("{csv}");
            log.finish()?;
        }
        Command::Experiment { run, estimation, cache_dir, out } => {
            let mut log = TimingLog::new(out.join("timing.log"));
            let mut cfg = run.resolve(true)?;
            cfg.out_dir = Some(out.clone());
            cfg.cache_dir = resolve_cache_dir(cache_dir.as_deref());
            let mut opts = EstimateOptions::from(&cfg);
            estimation.apply(&mut opts);
            cfg.groups = opts.groups;
            cfg.delta = opts.delta;
            cfg.split_half = opts.split_half;
            cfg.gamma_variant = opts.gamma_variant;
            cfg.correlators = opts.correlators;
            cfg.invariants = opts.invariants;
            cfg.binned = opts.binned;
            let result = experiment(&cfg, &guard)?;
            log.mark("experiment");
            fs::write(out.join("config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;
            println!("{}", serde_json::to_string_pretty(&result.report.summary)?);
            log.finish()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

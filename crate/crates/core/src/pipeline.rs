//! End-to-end runs driven by a [`RunConfig`]: channel caching, simulated
//! collection, estimation of the experiment workloads and the pseudo-PNR
//! mitigation study.
//!
//! Every stochastic choice is drawn from named streams of the root seed
//! (`prep`, `haar`, `shots`), so a run is a pure function of its config.
//! Result files never contain timings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::channel::{irrep_dimension, load_channel, save_channel, sector_dir, MeasurementChannel};
use crate::detector::{
    mitigated_distribution, pseudo_pnr_from, sample_from, total_variation_distance, DetectorConfig,
};
use crate::error::{Error, Result};
use crate::fock::{
    output_distribution, sample_haar_unitary, BlockDiagonalState, DimensionGuard, ModeOccupation, UnitaryMatrix,
};
use crate::linalg::CMatrix;
use crate::observables::{
    all_bipartitions, binned_distribution, correlator_matrix, correlators_csv, invariant_report,
    lie_hamiltonian_basis, BinnedDistribution, CorrelationMatrix, ExactSource, ExpectationSource, GammaVariant,
    InvariantReport, ShadowSource,
};
use crate::seed::{derive_seed, stream_rng};
use crate::shadow::{collect_shadow, ClassicalShadow, Detection, EstimationPlan, Mitigation, PreparedShadow, StateSampler};

/// Detector setting: `"ideal"` or a fan-out configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DetectorSpec {
    Named(String),
    Config(DetectorConfig),
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec::Named("ideal".into())
    }
}

impl DetectorSpec {
    /// `"ideal"`, inline JSON, or a path to a JSON file.
    pub fn parse(arg: &str) -> Result<Self> {
        let trimmed = arg.trim();
        if trimmed == "ideal" {
            return Ok(Self::default());
        }
        let text = if trimmed.starts_with('{') { trimmed.to_string() } else { fs::read_to_string(trimmed)? };
        let cfg: DetectorConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(DetectorSpec::Config(cfg))
    }

    pub fn config(&self) -> Result<Option<&DetectorConfig>> {
        match self {
            DetectorSpec::Named(s) if s == "ideal" => Ok(None),
            DetectorSpec::Named(s) => Err(Error::InvalidInput(format!("unknown detector {s:?}"))),
            DetectorSpec::Config(c) => Ok(Some(c)),
        }
    }
}

fn occupation_from_json<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ModeOccupation, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        List(Vec<u32>),
    }
    match Raw::deserialize(d)? {
        Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        Raw::List(v) => ModeOccupation::new(v).map_err(serde::de::Error::custom),
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

/// Full description of a run. Field names double as the JSON config keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Input Fock state, e.g. `"1,1,1,0"`; fixes `m` and `n`.
    #[serde(deserialize_with = "occupation_from_json")]
    pub input: ModeOccupation,
    /// Seed of the preparation unitary; the input is used as is when absent.
    #[serde(default)]
    pub prep_seed: Option<u64>,
    pub num_unitaries: usize,
    /// Raw shots per unitary, before any pseudo-PNR discarding.
    pub shots_per_unitary: u64,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default)]
    pub mitigation: Mitigation,
    pub seed: u64,
    /// Number of median-of-means groups; derived from `delta` when absent.
    #[serde(default)]
    pub groups: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub gamma_variant: GammaVariant,
    #[serde(default)]
    pub split_half: bool,
    #[serde(default = "default_true")]
    pub correlators: bool,
    #[serde(default = "default_true")]
    pub invariants: bool,
    #[serde(default = "default_true")]
    pub binned: bool,
    /// Shot counts of the mitigation study.
    #[serde(default)]
    pub mitigate_shots: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: ModeOccupation, num_unitaries: usize, shots_per_unitary: u64, seed: u64) -> Self {
        Self {
            input,
            prep_seed: None,
            num_unitaries,
            shots_per_unitary,
            detector: DetectorSpec::default(),
            mitigation: Mitigation::default(),
            seed,
            groups: None,
            delta: default_delta(),
            gamma_variant: GammaVariant::default(),
            split_half: false,
            correlators: true,
            invariants: true,
            binned: true,
            mitigate_shots: Vec::new(),
            out_dir: None,
            cache_dir: None,
        }
    }

    /// The experiment of the reference demonstration: `|1110>` through a
    /// seeded preparation unitary, 1100 Haar unitaries, 12 threshold and 12
    /// two-photon detectors shared by the four modes. Snapshots are averaged
    /// over all records (a single median-of-means group).
    pub fn experiment() -> Self {
        let mut cfg = Self::new(ModeOccupation::new(vec![1, 1, 1, 0]).unwrap(), 1100, 21, 20_250_101);
        cfg.prep_seed = Some(7);
        cfg.groups = Some(1);
        cfg.detector = DetectorSpec::Config(DetectorConfig::new(6, [1, 1, 1, 2, 2, 2].repeat(4)).unwrap());
        cfg
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_unitaries == 0 {
            return Err(Error::InvalidInput("num_unitaries must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(cfg) = self.detector.config()? {
            if cfg.modes() != self.m() {
                return Err(Error::ModeMismatch { expected: self.m(), found: cfg.modes() });
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.input.modes()
    }

    pub fn n(&self) -> usize {
        self.input.photons()
    }

    pub fn detection(&self) -> Result<Detection> {
        Ok(match self.detector.config()? {
            None => Detection::Ideal,
            Some(c) => Detection::PseudoPnr { config: c.clone(), mitigation: self.mitigation },
        })
    }
}

/// The preparation unitary, drawn from the `prep` stream of `prep_seed`.
pub fn prep_unitary(m: usize, prep_seed: u64) -> UnitaryMatrix {
    sample_haar_unitary(m, derive_seed(prep_seed, "prep", 0))
}

/// `U_prep |input>`, or the bare input without a prep seed.
pub fn prepare_state(input: &ModeOccupation, prep_seed: Option<u64>) -> Result<BlockDiagonalState> {
    let state = BlockDiagonalState::basis_state(input)?;
    match prep_seed {
        Some(seed) => state.evolve(&prep_unitary(input.modes(), seed)),
        None => Ok(state),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelOrigin {
    Built,
    Validated,
}

/// Loads the channel from `cache_dir` when present, otherwise builds it and,
/// with a cache directory, stores it.
pub fn obtain_channel(
    m: usize,
    n: usize,
    cache_dir: Option<&Path>,
    guard: &DimensionGuard,
) -> Result<(MeasurementChannel, ChannelOrigin)> {
    guard.check_superoperator(m, n)?;
    match cache_dir {
        Some(dir) if sector_dir(dir, m, n).join("manifest.json").exists() => {
            Ok((load_channel(dir, m, n)?, ChannelOrigin::Validated))
        }
        Some(dir) => {
            let ch = MeasurementChannel::build_with_guard(m, n, guard)?;
            save_channel(dir, &ch)?;
            Ok((ch, ChannelOrigin::Built))
        }
        None => Ok((MeasurementChannel::build_with_guard(m, n, guard)?, ChannelOrigin::Built)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelReport {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub origin: ChannelOrigin,
    pub eigenvalues: Vec<f64>,
    pub dims: Vec<usize>,
    pub nnz: Vec<usize>,
}

impl ChannelReport {
    pub fn new(ch: &MeasurementChannel, origin: ChannelOrigin) -> Self {
        Self {
            m: ch.modes(),
            n: ch.photons(),
            d: ch.dim(),
            origin,
            eigenvalues: ch.eigenvalues().to_vec(),
            dims: (0..ch.projectors().len()).map(|k| irrep_dimension(ch.modes(), k)).collect(),
            nnz: ch.projectors().iter().map(|p| p.matrix.nnz()).collect(),
        }
    }
}

/// Collects the shadow described by `config`.
pub fn simulate(config: &RunConfig) -> Result<ClassicalShadow> {
    config.validate()?;
    DimensionGuard::default().check_sector(config.m(), config.n())?;
    let state = prepare_state(&config.input, config.prep_seed)?;
    let source = StateSampler::new(state, config.n(), config.detection()?)?;
    collect_shadow(&source, config.num_unitaries, config.shots_per_unitary, config.seed)
}

/// Which workloads to compute and how.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    pub groups: Option<usize>,
    pub delta: f64,
    pub gamma_variant: GammaVariant,
    pub split_half: bool,
    pub correlators: bool,
    pub invariants: bool,
    pub binned: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            groups: None,
            delta: default_delta(),
            gamma_variant: GammaVariant::default(),
            split_half: false,
            correlators: true,
            invariants: true,
            binned: true,
        }
    }
}

impl From<&RunConfig> for EstimateOptions {
    fn from(c: &RunConfig) -> Self {
        Self {
            groups: c.groups,
            delta: c.delta,
            gamma_variant: c.gamma_variant,
            split_half: c.split_half,
            correlators: c.correlators,
            invariants: c.invariants,
            binned: c.binned,
        }
    }
}

impl EstimateOptions {
    /// Number of scalar expectations the workloads ask for.
    fn estimate_count(&self, m: usize, n: usize) -> usize {
        let mut t = 1;
        if self.correlators {
            t += m + m * (m + 1) / 2;
        }
        if self.invariants {
            t += m * m + m.pow(4);
        }
        if self.binned {
            t += all_bipartitions(m).len() * (n + 1);
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinnedComparison {
    pub bins: Vec<Vec<usize>>,
    pub estimate: BinnedDistribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<BinnedDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tvd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub m: usize,
    pub n: usize,
    pub records: usize,
    pub empty_records: usize,
    pub total_shots: u64,
    pub groups: usize,
    pub group_size: usize,
    pub identity_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlator_mean_abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant_i_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_binned_tvd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub summary: EstimateSummary,
    pub correlators: Option<CorrelationMatrix>,
    pub correlators_exact: Option<CorrelationMatrix>,
    pub invariants: Option<InvariantReport>,
    pub invariants_exact: Option<InvariantReport>,
    pub binned: Vec<BinnedComparison>,
}

/// Computes every requested workload from one shadow, with exact values
/// when the true state is known.
pub fn estimate(
    shadow: &ClassicalShadow,
    channel: &MeasurementChannel,
    truth: Option<&BlockDiagonalState>,
    options: &EstimateOptions,
) -> Result<EstimateReport> {
    let (m, n) = (shadow.m, shadow.n);
    let prepared = PreparedShadow::new(shadow, channel)?;
    if prepared.records() == 0 {
        return Err(Error::EmptyShadow);
    }
    let groups = options
        .groups
        .unwrap_or_else(|| EstimationPlan::groups_for(options.estimate_count(m, n), options.delta))
        .clamp(1, prepared.records());
    let records = prepared.records();
    let total_shots = prepared.total_shots();
    let source = ShadowSource::new(prepared, channel, groups, options.split_half)?;
    let exact = truth.map(|t| ExactSource::new(t, n)).transpose()?;

    let identity_estimate = source.expect(&CMatrix::identity(channel.dim(), channel.dim()))?.re;

    let (correlators, correlators_exact) = if options.correlators {
        let est = correlator_matrix(&source)?;
        let ex = exact.as_ref().map(|e| correlator_matrix(e)).transpose()?;
        (Some(est), ex)
    } else {
        (None, None)
    };

    let (invariants, invariants_exact) = if options.invariants {
        let lie = lie_hamiltonian_basis(channel.basis())?;
        let est = invariant_report(&source, &lie, options.gamma_variant)?;
        let ex = exact.as_ref().map(|e| invariant_report(e, &lie, options.gamma_variant)).transpose()?;
        (Some(est), ex)
    } else {
        (None, None)
    };

    let mut binned = Vec::new();
    if options.binned {
        for partition in all_bipartitions(m) {
            let est = binned_distribution(&source, &partition)?;
            let ex = exact.as_ref().map(|e| binned_distribution(e, &partition)).transpose()?;
            let tvd = ex.as_ref().map(|x| est.tvd(x)).transpose()?;
            binned.push(BinnedComparison { bins: partition.bins(), estimate: est, exact: ex, tvd });
        }
    }

    let correlator_mean_abs_error = match (&correlators, &correlators_exact) {
        (Some(a), Some(b)) => Some(a.mean_abs_error(b)),
        _ => None,
    };
    let tvds: Vec<f64> = binned.iter().filter_map(|b| b.tvd).collect();
    let summary = EstimateSummary {
        m,
        n,
        records,
        empty_records: shadow.empty_records(),
        total_shots,
        groups,
        group_size: records / groups,
        identity_estimate,
        correlator_mean_abs_error,
        invariant_i: invariants.as_ref().map(|r| r.i),
        invariant_i_exact: invariants_exact.as_ref().map(|r| r.i),
        mean_binned_tvd: (!tvds.is_empty()).then(|| tvds.iter().sum::<f64>() / tvds.len() as f64),
    };
    Ok(EstimateReport { summary, correlators, correlators_exact, invariants, invariants_exact, binned })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `summary.json`, `correlators.csv`, `invariants.json` and
/// `binned.json` into `dir`. Returns the paths written.
pub fn write_estimate_outputs(dir: &Path, report: &EstimateReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summary = dir.join("summary.json");
    write_json(&summary, &report.summary)?;
    written.push(summary);
    if let Some(c) = &report.correlators {
        let path = dir.join("correlators.csv");
        fs::write(&path, correlators_csv(c, report.correlators_exact.as_ref()))?;
        written.push(path);
    }
    if let Some(inv) = &report.invariants {
        #[derive(Serialize)]
        struct Invariants<'a> {
            estimate: &'a InvariantReport,
            #[serde(skip_serializing_if = "Option::is_none")]
            exact: Option<&'a InvariantReport>,
        }
        let path = dir.join("invariants.json");
        write_json(&path, &Invariants { estimate: inv, exact: report.invariants_exact.as_ref() })?;
        written.push(path);
    }
    if !report.binned.is_empty() {
        let path = dir.join("binned.json");
        write_json(&path, &report.binned)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MitigationRow {
    pub shots: u64,
    pub kept: u64,
    pub tvd_raw: f64,
    pub tvd_mitigated: f64,
}

/// Shot counts of the mitigation study when none are configured.
pub const DEFAULT_MITIGATION_SHOTS: [u64; 9] = [100, 300, 1_000, 3_000, 10_000, 30_000, 100_000, 300_000, 1_000_000];

/// TVD to the true output distribution of the prepared state, before and
/// after mitigation, as the number of raw shots grows. With ideal detectors
/// the two columns coincide.
pub fn mitigate_demo(config: &RunConfig) -> Result<Vec<MitigationRow>> {
    config.validate()?;
    let n = config.n();
    let state = prepare_state(&config.input, config.prep_seed)?;
    let basis = state.block(n)?.basis().clone();
    let truth = output_distribution(&UnitaryMatrix::identity(config.m()), &state, n)?;
    let shots: &[u64] = if config.mitigate_shots.is_empty() { &DEFAULT_MITIGATION_SHOTS } else { &config.mitigate_shots };
    let detector = config.detector.config()?;
    shots
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = stream_rng(config.seed, "shots", i as u64);
            let (hist, raw, mitigated) = match detector {
                None => {
                    let h = sample_from(&basis, &truth, t, &mut rng);
                    let d = h.to_distribution(&basis)?;
                    (h, d.clone(), d)
                }
                Some(cfg) => {
                    let h = pseudo_pnr_from(&basis, &truth, t, cfg, &mut rng);
                    let raw = h.to_distribution(&basis)?;
                    let mit = mitigated_distribution(&h, cfg, &basis)?;
                    (h, raw, mit)
                }
            };
            Ok(MitigationRow {
                shots: t,
                kept: hist.kept(),
                tvd_raw: total_variation_distance(&raw, &truth)?,
                tvd_mitigated: total_variation_distance(&mitigated, &truth)?,
            })
        })
        .collect()
}

pub fn mitigation_csv(rows: &[MitigationRow]) -> String {
    let mut out = String::from("shots,kept,tvd_raw,tvd_mitigated\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.shots, r.kept, r.tvd_raw, r.tvd_mitigated).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub shadow_path: PathBuf,
    pub report: EstimateReport,
}

/// Simulates, stores and analyses the shadow of `config`, comparing with the
/// exact prepared state.
pub fn experiment(config: &RunConfig, guard: &DimensionGuard) -> Result<ExperimentResult> {
    let out = config
        .out_dir
        .clone()
        .ok_or_else(|| Error::InvalidInput("experiment needs an output directory".into()))?;
    fs::create_dir_all(&out)?;
    let shadow = simulate(config)?;
    let shadow_path = out.join("shadow.jsonl");
    shadow.save(&shadow_path)?;
    let (channel, _) = obtain_channel(config.m(), config.n(), config.cache_dir.as_deref(), guard)?;
    let truth = prepare_state(&config.input, config.prep_seed)?;
    let report = estimate(&shadow, &channel, Some(&truth), &EstimateOptions::from(config))?;
    write_estimate_outputs(&out, &report)?;
    Ok(ExperimentResult { shadow_path, report })
}

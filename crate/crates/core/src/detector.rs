//! Data collection: ideal photon-number-resolving (PNR) detection and its
//! emulation by Fourier fan-out onto limited-resolution detectors.
//!
//! In the pseudo-PNR scheme each logical output mode feeds the top input of
//! a `p`-mode Fourier interferometer whose outputs are read by detectors of
//! resolution `r` (`r = 1` is a threshold detector). A Fourier output
//! pattern `b` of `s` photons has probability `s! / (p^s prod_j b_j!)`, which
//! is the multinomial law of `s` photons landing independently and uniformly
//! on the `p` outputs. That is how shots are simulated here; the explicit
//! `mp`-mode interferometer is only built in tests as an oracle.
//!
//! An event is resolved when no detector receives more photons than it can
//! count. Resolved events of outcome `s` occur with probability
//! `P(s) * prod_i h(p, s_i, r)`, so dividing empirical frequencies by the
//! product of factors and renormalizing recovers `P`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{factorial, output_distribution, BlockDiagonalState, ModeOccupation, SectorBasis, UnitaryMatrix};
use crate::seed::rng_from_seed;

/// Fan-out `p` per logical mode and the resolution of every physical
/// detector. Logical mode `i` owns detectors `i * p .. (i + 1) * p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub p: usize,
    pub resolutions: Vec<u32>,
}

impl DetectorConfig {
    pub fn new(p: usize, resolutions: Vec<u32>) -> Result<Self> {
        let cfg = Self { p, resolutions };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `m * p` detectors of equal resolution.
    pub fn uniform(m: usize, p: usize, r: u32) -> Result<Self> {
        Self::new(p, vec![r; m * p])
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidInput("fan-out p must be at least 1".into()));
        }
        if self.resolutions.iter().any(|&r| r == 0) {
            return Err(Error::InvalidInput("detector resolution must be at least 1".into()));
        }
        if self.resolutions.is_empty() || self.resolutions.len() % self.p != 0 {
            return Err(Error::InvalidInput(format!(
                "{} detectors cannot be split into blocks of {}",
                self.resolutions.len(),
                self.p
            )));
        }
        Ok(())
    }

    /// Number of logical modes covered.
    pub fn modes(&self) -> usize {
        self.resolutions.len() / self.p
    }

    pub fn block(&self, mode: usize) -> &[u32] {
        &self.resolutions[mode * self.p..(mode + 1) * self.p]
    }

    fn check_modes(&self, m: usize) -> Result<()> {
        self.validate()?;
        if self.modes() != m {
            return Err(Error::ModeMismatch { expected: m, found: self.modes() });
        }
        Ok(())
    }

    /// Probability that an outcome `s` is recorded unsaturated,
    /// `prod_i h(p, s_i, r_block(i))`.
    pub fn outcome_factor(&self, s: &ModeOccupation) -> Result<f64> {
        self.check_modes(s.modes())?;
        Ok(s.as_slice()
            .iter()
            .enumerate()
            .map(|(i, &si)| block_resolution_factor(si as usize, self.block(i)))
            .product())
    }
}

/// `h(p, n, r)`: probability that `n` photons entering one port of the
/// `p`-mode Fourier interferometer leave it with no output port carrying
/// more than `r` photons.
///
/// Evaluated as a sum over partitions `lambda` of `n` into at most `p` parts
/// with largest part `<= r`, weighting each by the number of its distinct
/// arrangements `multinomial(p; alpha(lambda))` times `n! / (p^n prod lambda_i!)`.
/// For `r = 1` this is `binomial(p, n) n! / p^n`.
pub fn resolution_factor(p: usize, n: usize, r: usize) -> f64 {
    assert!(p >= 1 && r >= 1);
    let mut total = 0.0;
    let mut parts = Vec::with_capacity(p);
    partitions(n, n.min(r), p, &mut parts, &mut |lambda| {
        // multiplicities of each part size, zeros included
        let mut mult = vec![0usize; n + 1];
        mult[0] = p - lambda.len();
        for &x in lambda {
            mult[x] += 1;
        }
        let arrangements = factorial(p) / mult.iter().map(|&a| factorial(a)).product::<f64>();
        let weight = factorial(n)
            / (p as f64).powi(n as i32)
            / lambda.iter().map(|&x| factorial(x)).product::<f64>();
        total += arrangements * weight;
    });
    total
}

/// Visits partitions of `n` with parts `<= max_part` and at most `slots` parts.
fn partitions(n: usize, max_part: usize, slots: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if n == 0 {
        f(cur);
        return;
    }
    if cur.len() == slots {
        return;
    }
    for part in (1..=max_part.min(n)).rev() {
        cur.push(part);
        partitions(n - part, part, slots, cur, f);
        cur.pop();
    }
}

/// Resolution probability for `s` photons spread over a block of detectors
/// with individual resolutions. Equals [`resolution_factor`] when all
/// resolutions agree.
///
/// `sum_{loads} s! / (p^s prod_j l_j!)` over load vectors with `l_j <= r_j`,
/// computed as `s! / p^s` times the `x^s` coefficient of
/// `prod_j sum_{l <= r_j} x^l / l!`.
pub fn block_resolution_factor(s: usize, block: &[u32]) -> f64 {
    let p = block.len();
    let mut coeffs = vec![0.0; s + 1];
    coeffs[0] = 1.0;
    for &r in block {
        let mut next = vec![0.0; s + 1];
        for (deg, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for l in 0..=(r as usize).min(s - deg) {
                next[deg + l] += c / factorial(l);
            }
        }
        coeffs = next;
    }
    coeffs[s] * factorial(s) / (p as f64).powi(s as i32)
}

/// What the detectors report for one shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickPattern {
    /// Reported count per physical detector, `min(load, resolution)`.
    pub clicks: Vec<u32>,
    /// No detector received more photons than it could count.
    pub resolved: bool,
    /// Per-mode occupation, present when the event is resolved.
    pub occupation: Option<ModeOccupation>,
}

impl ClickPattern {
    pub fn total_clicks(&self) -> usize {
        self.clicks.iter().map(|&c| c as usize).sum()
    }

    /// Occupation read off the clicks, whether or not the event saturated.
    pub fn implied_occupation(&self, p: usize) -> ModeOccupation {
        let occ = self.clicks.chunks(p).map(|b| b.iter().sum()).collect();
        ModeOccupation::new(occ).expect("at least one mode")
    }
}

/// One pseudo-PNR shot for the logical outcome `s`.
pub fn simulate_pseudo_pnr_shot(s: &ModeOccupation, config: &DetectorConfig, seed: u64) -> Result<ClickPattern> {
    config.check_modes(s.modes())?;
    Ok(pseudo_pnr_shot(s, config, &mut rng_from_seed(seed)))
}

pub(crate) fn pseudo_pnr_shot(s: &ModeOccupation, config: &DetectorConfig, rng: &mut impl Rng) -> ClickPattern {
    let p = config.p;
    let mut loads = vec![0u32; config.resolutions.len()];
    for (mode, &photons) in s.as_slice().iter().enumerate() {
        for _ in 0..photons {
            loads[mode * p + rng.random_range(0..p)] += 1;
        }
    }
    let resolved = loads.iter().zip(&config.resolutions).all(|(l, r)| l <= r);
    let clicks: Vec<u32> = loads.iter().zip(&config.resolutions).map(|(&l, &r)| l.min(r)).collect();
    let occupation = resolved.then(|| s.clone());
    ClickPattern { clicks, resolved, occupation }
}

/// Outcome counts of a run, with the number of events thrown away.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OutcomeHistogram {
    pub counts: BTreeMap<ModeOccupation, u64>,
    /// Shots taken, kept or not.
    pub total: u64,
    pub discarded: u64,
}

impl OutcomeHistogram {
    pub fn record(&mut self, s: ModeOccupation) {
        *self.counts.entry(s).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn record_discarded(&mut self) {
        self.total += 1;
        self.discarded += 1;
    }

    pub fn kept(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &OutcomeHistogram) {
        for (s, &c) in &other.counts {
            *self.counts.entry(s.clone()).or_insert(0) += c;
        }
        self.total += other.total;
        self.discarded += other.discarded;
    }

    /// Empirical distribution of kept events over `basis`.
    pub fn to_distribution(&self, basis: &SectorBasis) -> Result<Vec<f64>> {
        let kept = self.kept();
        let mut out = vec![0.0; basis.dim()];
        if kept == 0 {
            return Ok(out);
        }
        for (s, &c) in &self.counts {
            out[basis.locate(s)?] = c as f64 / kept as f64;
        }
        Ok(out)
    }

    /// CSV with columns `occupation,count,weight`; occupations are
    /// dash-separated and `weight` is the (mitigated, if `config` is given)
    /// probability estimate.
    pub fn to_csv(&self, config: Option<&DetectorConfig>) -> Result<String> {
        let weights: BTreeMap<ModeOccupation, f64> = match config {
            Some(cfg) => mitigate_histogram(self, cfg)?.into_iter().collect(),
            None => {
                let kept = self.kept().max(1) as f64;
                self.counts.iter().map(|(s, &c)| (s.clone(), c as f64 / kept)).collect()
            }
        };
        let mut out = String::from("occupation,count,weight\n");
        for (s, &c) in self.counts.iter().rev() {
            let label: Vec<String> = s.as_slice().iter().map(u32::to_string).collect();
            writeln!(out, "{},{},{}", label.join("-"), c, weights[s]).unwrap();
        }
        Ok(out)
    }
}

fn draw_index(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cdf.last().unwrap();
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p.max(0.0);
            Some(*acc)
        })
        .collect()
}

/// Draws `shots` outcomes from `phi(U) rho phi(U)^dagger` restricted to the
/// `n`-photon block, with ideal PNR detectors.
pub fn sample_pnr_outcomes(
    u: &UnitaryMatrix,
    state: &BlockDiagonalState,
    n: usize,
    shots: u64,
    seed: u64,
) -> Result<OutcomeHistogram> {
    let mut rng = rng_from_seed(seed);
    let basis = state.block(n)?.basis().clone();
    let probs = output_distribution(u, state, n)?;
    Ok(sample_from(&basis, &probs, shots, &mut rng))
}

pub(crate) fn sample_from(basis: &SectorBasis, probs: &[f64], shots: u64, rng: &mut impl Rng) -> OutcomeHistogram {
    let mut hist = OutcomeHistogram::default();
    if shots == 0 {
        return hist;
    }
    let cdf = cumulative(probs);
    for _ in 0..shots {
        hist.record(basis.state(draw_index(&cdf, rng)).clone());
    }
    hist
}

/// Pseudo-PNR collection of `shots` events. Only events whose total click
/// count equals `n` are kept; anything lower is indistinguishable from a
/// lower photon-number sector and is counted as discarded.
pub fn sample_pseudo_pnr_outcomes(
    u: &UnitaryMatrix,
    state: &BlockDiagonalState,
    n: usize,
    shots: u64,
    config: &DetectorConfig,
    seed: u64,
) -> Result<OutcomeHistogram> {
    config.check_modes(u.modes())?;
    let mut rng = rng_from_seed(seed);
    let basis = state.block(n)?.basis().clone();
    let probs = output_distribution(u, state, n)?;
    Ok(pseudo_pnr_from(&basis, &probs, shots, config, &mut rng))
}

pub(crate) fn pseudo_pnr_from(
    basis: &SectorBasis,
    probs: &[f64],
    shots: u64,
    config: &DetectorConfig,
    rng: &mut impl Rng,
) -> OutcomeHistogram {
    let mut hist = OutcomeHistogram::default();
    if shots == 0 {
        return hist;
    }
    let cdf = cumulative(probs);
    let n = basis.photons();
    for _ in 0..shots {
        let s = basis.state(draw_index(&cdf, rng));
        let pattern = pseudo_pnr_shot(s, config, rng);
        if pattern.total_clicks() == n {
            hist.record(pattern.implied_occupation(config.p));
        } else {
            hist.record_discarded();
        }
    }
    hist
}

/// Reweights every kept outcome by `1 / prod_i h(p, s_i, r_i)` and
/// renormalizes. Output is sorted by occupation.
pub fn mitigate_histogram(hist: &OutcomeHistogram, config: &DetectorConfig) -> Result<Vec<(ModeOccupation, f64)>> {
    let mut weighted = Vec::with_capacity(hist.counts.len());
    let mut total = 0.0;
    for (s, &c) in &hist.counts {
        let factor = config.outcome_factor(s)?;
        if factor <= 0.0 {
            return Err(Error::ZeroResolutionFactor(s.as_slice().to_vec()));
        }
        let w = c as f64 / factor;
        total += w;
        weighted.push((s.clone(), w));
    }
    if total > 0.0 {
        for (_, w) in &mut weighted {
            *w /= total;
        }
    }
    Ok(weighted)
}

/// `T` i.i.d. draws from the mitigated distribution.
pub fn resample_mitigated(
    hist: &OutcomeHistogram,
    config: &DetectorConfig,
    draws: usize,
    seed: u64,
) -> Result<Vec<ModeOccupation>> {
    resample_with(hist, config, draws, &mut rng_from_seed(seed))
}

pub(crate) fn resample_with(
    hist: &OutcomeHistogram,
    config: &DetectorConfig,
    draws: usize,
    rng: &mut impl Rng,
) -> Result<Vec<ModeOccupation>> {
    let dist = mitigate_histogram(hist, config)?;
    if dist.is_empty() || draws == 0 {
        return Ok(Vec::new());
    }
    let probs: Vec<f64> = dist.iter().map(|(_, w)| *w).collect();
    let cdf = cumulative(&probs);
    Ok((0..draws).map(|_| dist[draw_index(&cdf, rng)].0.clone()).collect())
}

/// Mitigated distribution laid out over `basis`.
pub fn mitigated_distribution(hist: &OutcomeHistogram, config: &DetectorConfig, basis: &SectorBasis) -> Result<Vec<f64>> {
    let mut out = vec![0.0; basis.dim()];
    for (s, w) in mitigate_histogram(hist, config)? {
        out[basis.locate(&s)?] = w;
    }
    Ok(out)
}

/// `(1/2) sum_i |p_i - q_i|`.
pub fn total_variation_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sample_haar_unitary;
    use proptest::prelude::*;

    fn occ(v: &[u32]) -> ModeOccupation {
        ModeOccupation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn threshold_factors() {
        assert!((resolution_factor(3, 1, 1) - 1.0).abs() < 1e-15);
        assert!((resolution_factor(3, 2, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((resolution_factor(3, 3, 1) - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(resolution_factor(2, 3, 1), 0.0);
        assert!((resolution_factor(3, 3, 3) - 1.0).abs() < 1e-14);
        assert!((resolution_factor(2, 2, 1) - 0.5).abs() < 1e-15);
        assert_eq!(resolution_factor(4, 0, 1), 1.0);
    }

    #[test]
    fn threshold_matches_binomial_formula() {
        for p in 1..7 {
            for n in 0..7 {
                let g = if n <= p {
                    crate::fock::binomial(p as u64, n as u64) as f64 * factorial(n) / (p as f64).powi(n as i32)
                } else {
                    0.0
                };
                assert!((resolution_factor(p, n, 1) - g).abs() < 1e-14, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn block_factor_matches_partition_sum() {
        for p in 1..6 {
            for n in 0..6 {
                for r in 1..5 {
                    let a = resolution_factor(p, n, r);
                    let b = block_resolution_factor(n, &vec![r as u32; p]);
                    assert!((a - b).abs() < 1e-13, "p={p} n={n} r={r}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn factor_monotonicity(p in 1usize..6, n in 0usize..7, r in 1usize..6) {
            prop_assert!(resolution_factor(p, n + 1, r) <= resolution_factor(p, n, r) + 1e-12);
            prop_assert!(resolution_factor(p, n, r + 1) >= resolution_factor(p, n, r) - 1e-12);
            if r >= n {
                prop_assert!((resolution_factor(p, n, r) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn mitigation_ignores_overall_scale(c1 in 1u64..50, c2 in 1u64..50, c3 in 1u64..50, k in 1u64..20) {
            let cfg = DetectorConfig::uniform(2, 3, 1).unwrap();
            let mut a = OutcomeHistogram::default();
            let mut b = OutcomeHistogram::default();
            for (s, c) in [(occ(&[2, 0]), c1), (occ(&[1, 1]), c2), (occ(&[0, 2]), c3)] {
                a.counts.insert(s.clone(), c);
                b.counts.insert(s, c * k);
            }
            let da = mitigate_histogram(&a, &cfg).unwrap();
            let db = mitigate_histogram(&b, &cfg).unwrap();
            let total: f64 = da.iter().map(|x| x.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (x, y) in da.iter().zip(&db) {
                prop_assert!((x.1 - y.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_shot_is_resolved() {
        let cfg = DetectorConfig::uniform(3, 2, 1).unwrap();
        let shot = simulate_pseudo_pnr_shot(&occ(&[0, 0, 0]), &cfg, 1).unwrap();
        assert!(shot.resolved);
        assert_eq!(shot.total_clicks(), 0);
    }

    #[test]
    fn resolved_rate_matches_factor() {
        let cfg = DetectorConfig::uniform(1, 3, 1).unwrap();
        let s = occ(&[2]);
        let mut rng = rng_from_seed(5);
        let trials = 100_000;
        let hits = (0..trials).filter(|_| pseudo_pnr_shot(&s, &cfg, &mut rng).resolved).count();
        let rate = hits as f64 / trials as f64;
        let sigma = (2.0 / 3.0 * (1.0 / 3.0) / trials as f64).sqrt();
        assert!((rate - 2.0 / 3.0).abs() < 3.0 * sigma, "rate {rate}");
    }

    #[test]
    fn resolved_events_keep_photon_count() {
        let cfg = DetectorConfig::new(2, vec![1, 2, 1, 1, 3, 1]).unwrap();
        let s = occ(&[2, 1, 3]);
        let mut rng = rng_from_seed(9);
        for _ in 0..1000 {
            let shot = pseudo_pnr_shot(&s, &cfg, &mut rng);
            if shot.resolved {
                assert_eq!(shot.implied_occupation(2), s);
                assert_eq!(shot.occupation.as_ref(), Some(&s));
            } else {
                assert!(shot.total_clicks() < 6);
            }
        }
    }

    #[test]
    fn point_mass_sampling() {
        let st = BlockDiagonalState::basis_state(&occ(&[1, 0, 1])).unwrap();
        let h = sample_pnr_outcomes(&UnitaryMatrix::identity(3), &st, 2, 50, 3).unwrap();
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.counts[&occ(&[1, 0, 1])], 50);
        let empty = sample_pnr_outcomes(&UnitaryMatrix::identity(3), &st, 2, 0, 3).unwrap();
        assert_eq!(empty.total, 0);
        assert!(empty.counts.is_empty());
    }

    #[test]
    fn sampling_is_reproducible() {
        let st = BlockDiagonalState::basis_state(&occ(&[1, 1, 0])).unwrap();
        let u = sample_haar_unitary(3, 4);
        let a = sample_pnr_outcomes(&u, &st, 2, 200, 77).unwrap();
        let b = sample_pnr_outcomes(&u, &st, 2, 200, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn high_resolution_leaves_histogram_unchanged() {
        let cfg = DetectorConfig::uniform(2, 4, 5).unwrap();
        let mut h = OutcomeHistogram::default();
        h.counts.insert(occ(&[2, 0]), 3);
        h.counts.insert(occ(&[1, 1]), 1);
        let d = mitigate_histogram(&h, &cfg).unwrap();
        assert!((d[1].1 - 0.75).abs() < 1e-15);
        assert!((d[0].1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_factor_is_an_error() {
        let cfg = DetectorConfig::uniform(2, 1, 1).unwrap();
        let mut h = OutcomeHistogram::default();
        h.counts.insert(occ(&[2, 0]), 1);
        assert!(matches!(mitigate_histogram(&h, &cfg), Err(Error::ZeroResolutionFactor(_))));
    }

    #[test]
    fn tvd_basics() {
        assert_eq!(total_variation_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(total_variation_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(total_variation_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert!(total_variation_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::new(0, vec![1]).is_err());
        assert!(DetectorConfig::new(2, vec![1, 0]).is_err());
        assert!(DetectorConfig::new(2, vec![1, 1, 1]).is_err());
        let cfg: DetectorConfig = serde_json::from_str(r#"{"p": 3, "resolutions": [1,1,2]}"#).unwrap();
        assert_eq!(cfg.modes(), 1);
    }

    #[test]
    fn csv_export() {
        let mut h = OutcomeHistogram::default();
        h.record(occ(&[1, 1, 0]));
        h.record(occ(&[1, 1, 0]));
        h.record(occ(&[2, 0, 0]));
        let csv = h.to_csv(None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "occupation,count,weight");
        assert!(lines.contains(&"1-1-0,2,0.6666666666666666"));
    }
}

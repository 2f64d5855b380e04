use std::sync::OnceLock;

use num_complex::Complex64;

use super::ClassicalShadow;
use crate::channel::{irrep_dimension, Direction, MeasurementChannel};
use crate::error::{Error, Result};
use crate::fock::lift_to_sector;
use crate::linalg::{frobenius, hermitian_defect, hermitian_part, operator_norm, project_to_density, trace, CMatrix};

/// Relative Frobenius norm under which an isotypic component counts as zero.
pub const DEGREE_TOLERANCE: f64 = 1e-8;
/// `N = 34 * bound / epsilon^2`.
pub const MEDIAN_OF_MEANS_CONSTANT: f64 = 34.0;

const HERMITIAN_TOL: f64 = 1e-10;

/// A Hermitian operator on one sector.
#[derive(Clone, Debug)]
pub struct ObservableSpec {
    matrix: CMatrix,
    label: Option<String>,
    degree: OnceLock<usize>,
}

impl ObservableSpec {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidInput(format!("observable is not Hermitian (defect {defect:e})")));
        }
        Ok(Self { matrix, label: None, degree: OnceLock::new() })
    }

    pub fn labeled(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        Ok(Self::new(matrix)?.with_label(label))
    }

    /// Diagonal observable in the Fock basis.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let matrix = CMatrix::from_fn(d, d, |r, c| if r == c { values[r].into() } else { Complex64::ZERO });
        Self { matrix, label: None, degree: OnceLock::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `O - tr(O)/dim * I`.
    pub fn traceless_part(&self) -> CMatrix {
        let d = self.dim();
        let shift = trace(&self.matrix) / d as f64;
        let mut out = self.matrix.clone();
        for i in 0..d {
            out[(i, i)] -= shift;
        }
        out
    }

    /// Degree with the default tolerance, computed once.
    pub fn degree(&self, channel: &MeasurementChannel) -> Result<usize> {
        if let Some(&d) = self.degree.get() {
            return Ok(d);
        }
        let d = observable_degree(&self.matrix, channel, DEGREE_TOLERANCE)?;
        Ok(*self.degree.get_or_init(|| d))
    }
}

/// Highest isotypic component `k >= 1` that `o` touches, 0 when `o` is a
/// multiple of the identity.
pub fn observable_degree(o: &CMatrix, channel: &MeasurementChannel, tol: f64) -> Result<usize> {
    let norm = frobenius(o);
    if norm == 0.0 {
        return Ok(0);
    }
    for k in (1..channel.projectors().len()).rev() {
        if frobenius(&channel.project(k, o)?) > tol * norm {
            return Ok(k);
        }
    }
    Ok(0)
}

/// `||O_0||_inf^2 dim(lambda_d)^2 / s_d` with `d` the degree of `O`.
pub fn shadow_norm_bound(o: &ObservableSpec, channel: &MeasurementChannel) -> Result<f64> {
    let d = o.degree(channel)?;
    if d == 0 {
        return Ok(0.0);
    }
    let norm = operator_norm(&o.traceless_part());
    let dim = irrep_dimension(channel.modes(), d) as f64;
    Ok(norm * norm * dim * dim / channel.eigenvalues()[d])
}

/// `K` means of `N` values each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationPlan {
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub t: usize,
}

impl EstimationPlan {
    pub fn fixed(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidInput("plan needs N >= 1 and K >= 1".into()));
        }
        Ok(Self { n, k, epsilon: f64::NAN, delta: f64::NAN, t: 1 })
    }

    /// Splits `records` into `k` equal groups, dropping the remainder.
    pub fn split(records: usize, k: usize) -> Result<Self> {
        if k == 0 || records < k {
            return Err(Error::InsufficientValues { needed: k.max(1), available: records });
        }
        Self::fixed(records / k, k)
    }

    /// `K = ceil(2 ln(2T / delta))`.
    pub fn groups_for(t: usize, delta: f64) -> usize {
        ((2.0 * (2.0 * t.max(1) as f64 / delta).ln()).ceil() as usize).max(1)
    }

    pub fn shadow_size(&self) -> usize {
        self.n * self.k
    }
}

/// `N = ceil(34 max_t bound_t / epsilon^2)` and `K = ceil(2 ln(2T/delta))`.
pub fn plan_shadow_size(
    observables: &[ObservableSpec],
    epsilon: f64,
    delta: f64,
    channel: &MeasurementChannel,
) -> Result<EstimationPlan> {
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("need epsilon > 0 and 0 < delta < 1, got {epsilon}, {delta}")));
    }
    let mut worst: f64 = 0.0;
    for o in observables {
        worst = worst.max(shadow_norm_bound(o, channel)?);
    }
    let t = observables.len().max(1);
    let n = ((MEDIAN_OF_MEANS_CONSTANT * worst / (epsilon * epsilon)).ceil() as usize).max(1);
    Ok(EstimationPlan { n, k: EstimationPlan::groups_for(t, delta), epsilon, delta, t })
}

/// Lower median of the means of `k` consecutive blocks of `n` values.
pub fn median_of_means(values: &[f64], n: usize, k: usize) -> Result<f64> {
    Ok(lower_median(block_means(values, n, k)?))
}

fn block_means(values: &[f64], n: usize, k: usize) -> Result<Vec<f64>> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("median-of-means needs N >= 1 and K >= 1".into()));
    }
    if values.len() < n * k {
        return Err(Error::InsufficientValues { needed: n * k, available: values.len() });
    }
    Ok(values[..n * k].chunks(n).map(|c| c.iter().sum::<f64>() / n as f64).collect())
}

fn lower_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

/// A real estimate with its spread.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    /// Median-of-means value.
    pub value: f64,
    /// Standard deviation of the `K` group means (0 for `K = 1`).
    pub spread: f64,
    /// Plain mean over all records used.
    pub mean: f64,
    /// Standard error of `mean`.
    pub standard_error: f64,
    pub records: usize,
}

impl Estimate {
    fn from_values(values: &[f64], plan: &EstimationPlan) -> Result<Self> {
        let means = block_means(values, plan.n, plan.k)?;
        let used = &values[..plan.n * plan.k];
        let r = used.len() as f64;
        let mean = used.iter().sum::<f64>() / r;
        let var = if used.len() > 1 {
            used.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        let kf = means.len() as f64;
        let mean_of_means = means.iter().sum::<f64>() / kf;
        let spread = if means.len() > 1 {
            (means.iter().map(|v| (v - mean_of_means).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self { value: lower_median(means), spread, mean, standard_error: (var / r).sqrt(), records: used.len() })
    }
}

/// Estimate of a non-Hermitian operator, real and imaginary parts taken
/// separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value, self.im.value)
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }
}

/// A shadow with the shots of every record folded into one matrix
/// `A_r = mean_shots phi(U)^dagger |s><s| phi(U)`.
///
/// The shot-averaged estimator of `O` on record `r` is then
/// `tr(M^{-1}(O) A_r)`, and the record's snapshot is `M^{-1}(A_r)`.
/// Records without outcomes are dropped.
#[derive(Clone, Debug)]
pub struct PreparedShadow {
    m: usize,
    n: usize,
    averaged: Vec<CMatrix>,
    shots: Vec<u64>,
}

impl PreparedShadow {
    pub fn new(shadow: &ClassicalShadow, channel: &MeasurementChannel) -> Result<Self> {
        check_sector(shadow, channel)?;
        let basis = channel.basis();
        let d = channel.dim();
        let mut averaged = Vec::with_capacity(shadow.records.len());
        let mut shots = Vec::with_capacity(shadow.records.len());
        for record in &shadow.records {
            let total = record.shots();
            if total == 0 {
                continue;
            }
            let phi = lift_to_sector(&record.unitary(shadow.m)?, basis)?;
            let mut acc = CMatrix::zeros(d, d);
            for (s, mult) in &record.outcomes {
                let v = phi.matrix().row(basis.locate(s)?).adjoint();
                acc += (&v * v.adjoint()).scale(*mult as f64);
            }
            averaged.push(acc.unscale(total as f64));
            shots.push(total);
        }
        Ok(Self { m: shadow.m, n: shadow.n, averaged, shots })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn records(&self) -> usize {
        self.averaged.len()
    }

    pub fn total_shots(&self) -> u64 {
        self.shots.iter().sum()
    }

    /// First and second half of the records.
    pub fn split_half(&self) -> (Self, Self) {
        let h = self.averaged.len() / 2;
        let part = |r: std::ops::Range<usize>| Self {
            m: self.m,
            n: self.n,
            averaged: self.averaged[r.clone()].to_vec(),
            shots: self.shots[r].to_vec(),
        };
        (part(0..h), part(h..self.averaged.len()))
    }

    /// Per-record values `tr(x A_r)` for an operator already passed through
    /// the inverse channel.
    pub fn record_values(&self, inverse_image: &CMatrix) -> Vec<Complex64> {
        self.averaged
            .iter()
            .map(|a| {
                // tr(X A) without forming the product
                let mut acc = Complex64::ZERO;
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        acc += inverse_image[(j, i)] * a[(i, j)];
                    }
                }
                acc
            })
            .collect()
    }

    /// Median-of-means estimate of `tr(X rho)` for any operator `X`.
    pub fn estimate_operator(
        &self,
        x: &CMatrix,
        plan: &EstimationPlan,
        channel: &MeasurementChannel,
    ) -> Result<ComplexEstimate> {
        if self.averaged.is_empty() {
            return Err(Error::EmptyShadow);
        }
        let inv = channel.apply(x, Direction::Inverse)?;
        let values = self.record_values(&inv);
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        Ok(ComplexEstimate { re: Estimate::from_values(&re, plan)?, im: Estimate::from_values(&im, plan)? })
    }

    /// Shot-weighted average of all snapshots, optionally projected onto
    /// density matrices.
    pub fn reconstruct(&self, channel: &MeasurementChannel, project_psd: bool) -> Result<CMatrix> {
        if self.averaged.is_empty() {
            return Err(Error::EmptyShadow);
        }
        let d = channel.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (a, &s) in self.averaged.iter().zip(&self.shots) {
            acc += a.scale(s as f64);
        }
        acc.unscale_mut(self.total_shots() as f64);
        let rho = hermitian_part(&channel.apply(&acc, Direction::Inverse)?);
        Ok(if project_psd { project_to_density(&rho) } else { rho })
    }
}

fn check_sector(shadow: &ClassicalShadow, channel: &MeasurementChannel) -> Result<()> {
    if shadow.m != channel.modes() {
        return Err(Error::ModeMismatch { expected: channel.modes(), found: shadow.m });
    }
    if shadow.n != channel.photons() {
        return Err(Error::PhotonMismatch { expected: channel.photons(), found: shadow.n });
    }
    Ok(())
}

/// Median-of-means estimate of `tr(O rho)` from a prepared shadow.
pub fn estimate_observable(
    shadow: &PreparedShadow,
    o: &ObservableSpec,
    plan: &EstimationPlan,
    channel: &MeasurementChannel,
) -> Result<Estimate> {
    if shadow.photons() != channel.photons() {
        return Err(Error::PhotonMismatch { expected: channel.photons(), found: shadow.photons() });
    }
    Ok(shadow.estimate_operator(o.matrix(), plan, channel)?.re)
}

/// Average snapshot over every shot of the shadow.
pub fn reconstruct_sector_state(
    shadow: &ClassicalShadow,
    channel: &MeasurementChannel,
    project_psd: bool,
) -> Result<CMatrix> {
    PreparedShadow::new(shadow, channel)?.reconstruct(channel, project_psd)
}

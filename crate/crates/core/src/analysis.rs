//! Arrangement, coverage and distortion metrics, plus a few dataset diagnostics.

use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ordering::{path_length, validate_permutation, PathOrder};
use crate::quantizer::{quantize_nearest, quantize_segment, Codebook};
use crate::vectors::{dist, dot, norm, sq_dist, VectorSet};

/// Thresholds shared by the arrangement metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    /// A consecutive distance above `tau` times the median is a jump.
    pub tau: f64,
    /// Coverage radius is `factor` times the `percentile`-th nearest-neighbor distance in the data.
    pub factor: f64,
    pub percentile: f64,
    pub samples_per_segment: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            tau: 3.0,
            factor: 2.0,
            percentile: 95.0,
            samples_per_segment: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrangementReport {
    pub adjacency_ratio: f64,
    pub jump_count: usize,
    pub outlier_count: usize,
    pub inside_fraction: f64,
    pub total_path_length: f64,
}

impl ArrangementReport {
    /// One `key=value` line per field.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "adjacency_ratio={}", self.adjacency_ratio);
        let _ = writeln!(s, "jump_count={}", self.jump_count);
        let _ = writeln!(s, "outlier_count={}", self.outlier_count);
        let _ = writeln!(s, "inside_fraction={}", self.inside_fraction);
        let _ = writeln!(s, "total_path_length={}", self.total_path_length);
        s
    }
}

pub fn arrangement_report(
    codebook: &Codebook,
    order: &PathOrder,
    data: &VectorSet,
    params: &MetricParams,
) -> Result<ArrangementReport> {
    let ordered = codebook.reordered(order.permutation())?;
    let theta = coverage_radius(data, params.factor, params.percentile)?;
    Ok(ArrangementReport {
        adjacency_ratio: adjacency_ratio(codebook, order)?,
        jump_count: jump_count(codebook, order, params.tau)?,
        outlier_count: count_outliers(codebook, data, theta)?,
        inside_fraction: fraction_inside(&ordered, data, params.samples_per_segment, theta)?,
        total_path_length: path_length(codebook, order)?,
    })
}

fn consecutive_distances(codebook: &Codebook, order: &PathOrder) -> Result<Vec<f64>> {
    validate_permutation(order.permutation(), codebook.len())?;
    Ok(order
        .permutation()
        .windows(2)
        .map(|w| dist(codebook.codeword(w[0]), codebook.codeword(w[1])))
        .collect())
}

fn ensure_three(codebook: &Codebook) -> Result<()> {
    if codebook.len() < 3 {
        return Err(Error::TooSmall {
            needed: 3,
            got: codebook.len(),
        });
    }
    Ok(())
}

/// Mean consecutive distance over mean all-pairs distance; 0 when every codeword coincides.
pub fn adjacency_ratio(codebook: &Codebook, order: &PathOrder) -> Result<f64> {
    ensure_three(codebook)?;
    let consecutive = consecutive_distances(codebook, order)?;
    let n = codebook.len();
    let mut all = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            all += dist(codebook.codeword(i), codebook.codeword(j));
        }
    }
    let all_mean = all / (n * (n - 1) / 2) as f64;
    if all_mean == 0.0 {
        return Ok(0.0);
    }
    let cons_mean = consecutive.iter().sum::<f64>() / consecutive.len() as f64;
    Ok(cons_mean / all_mean)
}

pub fn jump_count(codebook: &Codebook, order: &PathOrder, tau: f64) -> Result<usize> {
    ensure_three(codebook)?;
    count_jumps(&consecutive_distances(codebook, order)?, tau)
}

/// Number of distances above `tau` times their median.
pub fn count_jumps(distances: &[f64], tau: f64) -> Result<usize> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau {tau} must be positive")));
    }
    if distances.is_empty() {
        return Ok(0);
    }
    let threshold = tau * median(distances);
    Ok(distances.iter().filter(|&&d| d > threshold).count())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Linear-interpolation percentile (`p` in [0, 100]) of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn nearest_data_distance(x: &[f64], data: &VectorSet) -> f64 {
    data.rows()
        .map(|r| sq_dist(x, r))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// `factor` × the `percentile`-th percentile of each sample's distance to its nearest other sample.
pub fn coverage_radius(data: &VectorSet, factor: f64, pct: f64) -> Result<f64> {
    if data.count() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: data.count(),
        });
    }
    if !(factor.is_finite() && factor > 0.0) || !(0.0..=100.0).contains(&pct) {
        return Err(Error::InvalidConfig(format!(
            "factor {factor} / percentile {pct} out of range"
        )));
    }
    let nn: Vec<f64> = (0..data.count())
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            data.rows()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, r)| sq_dist(x, r))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    Ok(factor * percentile(&nn, pct))
}

pub fn outlier_count(
    codebook: &Codebook,
    data: &VectorSet,
    factor: f64,
    pct: f64,
) -> Result<usize> {
    data.ensure_dim(codebook.dim())?;
    let theta = coverage_radius(data, factor, pct)?;
    count_outliers(codebook, data, theta)
}

fn count_outliers(codebook: &Codebook, data: &VectorSet, theta: f64) -> Result<usize> {
    data.ensure_dim(codebook.dim())?;
    let rows: Vec<&[f64]> = codebook.codewords().collect();
    Ok(rows
        .par_iter()
        .filter(|c| nearest_data_distance(c, data) > theta)
        .count())
}

/// Fraction of evenly spaced points along the curve that lie within the coverage radius.
pub fn inside_fraction(
    codebook: &Codebook,
    data: &VectorSet,
    samples_per_segment: usize,
    factor: f64,
    pct: f64,
) -> Result<f64> {
    data.ensure_dim(codebook.dim())?;
    let theta = coverage_radius(data, factor, pct)?;
    fraction_inside(codebook, data, samples_per_segment, theta)
}

fn fraction_inside(
    codebook: &Codebook,
    data: &VectorSet,
    samples_per_segment: usize,
    theta: f64,
) -> Result<f64> {
    data.ensure_dim(codebook.dim())?;
    if samples_per_segment == 0 {
        return Err(Error::InvalidConfig(
            "samples per segment must be positive".into(),
        ));
    }
    let ts: Vec<f64> = if samples_per_segment == 1 {
        vec![0.5]
    } else {
        (0..samples_per_segment)
            .map(|m| m as f64 / (samples_per_segment - 1) as f64)
            .collect()
    };
    let inside: usize = (0..codebook.segments())
        .into_par_iter()
        .map(|j| {
            ts.iter()
                .filter(|&&t| {
                    let x = codebook.interpolate(j, t);
                    data.rows().any(|r| sq_dist(&x, r).sqrt() <= theta)
                })
                .count()
        })
        .sum();
    Ok(inside as f64 / (codebook.segments() * ts.len()) as f64)
}

/// Mean squared error of nearest-codeword quantization over `data`.
pub fn codeword_distortion(codebook: &Codebook, data: &VectorSet) -> Result<f64> {
    mean_error(data, |x| Ok(quantize_nearest(x, codebook)?.squared_error))
}

/// Mean squared error of projecting `data` onto the curve.
pub fn segment_distortion(codebook: &Codebook, data: &VectorSet) -> Result<f64> {
    mean_error(data, |x| Ok(quantize_segment(x, codebook)?.squared_error))
}

fn mean_error(data: &VectorSet, f: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let errors: Vec<f64> = data
        .rows()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|x| f(x))
        .collect::<Result<_>>()?;
    // sequential sum keeps the result independent of the thread count
    Ok(errors.iter().sum::<f64>() / data.count() as f64)
}

/// Euclidean distances between all pairs of points.
pub fn heatmap_matrix(points: &VectorSet) -> Vec<Vec<f64>> {
    let n = points.count();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(points.row(i), points.row(j));
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseStats {
    pub mean_dist: f64,
    /// Population variance of the pairwise distances.
    pub var_dist: f64,
    /// Trace of the sample covariance, i.e. the sum of its eigenvalues.
    pub eigen_sum: f64,
}

/// Distance statistics over a seeded subsample of at most `subsample` rows; the covariance
/// trace uses every row.
pub fn pairwise_stats(data: &VectorSet, subsample: usize, seed: u64) -> Result<PairwiseStats> {
    if data.count() < 2 || subsample < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: data.count().min(subsample),
        });
    }
    let rows: Vec<usize> = if data.count() <= subsample {
        (0..data.count()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, data.count(), subsample).into_vec();
        picked.sort_unstable();
        picked
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            dists.push(dist(data.row(i), data.row(j)));
        }
    }
    let mean_dist = dists.iter().sum::<f64>() / dists.len() as f64;
    let var_dist = dists.iter().map(|d| (d - mean_dist).powi(2)).sum::<f64>() / dists.len() as f64;

    let mean = column_mean(data);
    let eigen_sum = data.rows().map(|r| sq_dist(r, &mean)).sum::<f64>() / (data.count() - 1) as f64;
    Ok(PairwiseStats {
        mean_dist,
        var_dist,
        eigen_sum,
    })
}

fn column_mean(data: &VectorSet) -> Vec<f64> {
    let mut mean = vec![0.0; data.dim()];
    for r in data.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = data.count() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Leading principal axes of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-norm, mutually orthogonal components, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Rayleigh quotient of each component under the sample covariance.
    pub variances: Vec<f64>,
}

impl Pca {
    /// Coordinates of `x` along each component, after centering.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        self.components.iter().map(|c| dot(c, &centered)).collect()
    }
}

const PCA_TOL: f64 = 1e-7;
const PCA_MAX_ITERS: usize = 1000;

/// Top-`k` principal components by power iteration with deflation.
pub fn pca_directions(data: &VectorSet, k: usize, seed: u64) -> Result<Pca> {
    let d = data.dim();
    if k == 0 || k > d {
        return Err(Error::Rank { k, dim: d });
    }
    if data.count() <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: data.count(),
        });
    }
    let mean = column_mean(data);
    let mut cov = vec![0.0; d * d];
    for r in data.rows() {
        let c: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += c[i] * c[j];
            }
        }
    }
    let denom = (data.count() - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let original = cov.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for _ in 0..k {
        let start: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut v =
            orthonormalize(start, &components).unwrap_or_else(|| fallback_axis(&components));
        for _ in 0..PCA_MAX_ITERS {
            let w = mat_vec(&cov, &v);
            let Some(next) = orthonormalize(w, &components) else {
                // remaining spectrum is zero: any orthogonal unit vector is an eigenvector
                v = fallback_axis(&components);
                break;
            };
            let delta = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            v = next;
            if delta < PCA_TOL {
                break;
            }
        }
        let lambda = dot(&v, &mat_vec(&original, &v));
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        variances.push(lambda);
        components.push(v);
    }
    Ok(Pca {
        mean,
        components,
        variances,
    })
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    m.chunks_exact(v.len()).map(|row| dot(row, v)).collect()
}

/// Gram-Schmidt against `basis` (twice, for stability) and normalize; `None` if nothing is left.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let scale = norm(&v);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let n = norm(&v);
    if n <= 1e-12 * scale {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

fn fallback_axis(basis: &[Vec<f64>]) -> Vec<f64> {
    let d = basis.first().map_or(1, Vec::len);
    (0..d)
        .find_map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            orthonormalize(e, basis)
        })
        .expect("fewer components than dimensions")
}

/// Absolute Pearson correlations of several attribute score series with the step index,
/// L1-normalized across attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
}

impl CorrelationProfile {
    /// Index of the most correlated attribute, `None` when every weight is zero.
    pub fn dominant(&self) -> Option<usize> {
        let (i, w) =
            self.weights.iter().enumerate().fold(
                (0, 0.0),
                |best, (i, &w)| if w > best.1 { (i, w) } else { best },
            );
        (w > 0.0).then_some(i)
    }

    /// True when the strongest correlation is with an attribute other than `intended`.
    pub fn misattributed(&self, intended: &str) -> bool {
        self.dominant().is_some_and(|i| self.names[i] != intended)
    }
}

pub fn correlation_profile(
    step_indices: &[i64],
    scores: &[(String, Vec<f64>)],
) -> Result<CorrelationProfile> {
    if step_indices.len() < 3 {
        return Err(Error::Shape(format!(
            "need at least 3 steps, got {}",
            step_indices.len()
        )));
    }
    let x: Vec<f64> = step_indices.iter().map(|&i| i as f64).collect();
    let mut weights = Vec::with_capacity(scores.len());
    for (name, s) in scores {
        if s.len() != x.len() {
            return Err(Error::Shape(format!(
                "attribute {name} has {} scores for {} steps",
                s.len(),
                x.len()
            )));
        }
        weights.push(pearson(&x, s).abs());
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(CorrelationProfile {
        names: scores.iter().map(|(n, _)| n.clone()).collect(),
        weights,
    })
}

/// Pearson correlation; 0 if either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

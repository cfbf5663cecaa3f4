//! Curve-ordered codebooks and the quantizers built on them.
//!
//! Indices are zero-based throughout: segment `j` joins codewords `j` and `j + 1`.

mod dither;
mod train;

pub use dither::{
    assign_dithered, sfvq_loss_grad, sfvq_loss_grad_per_sample, vq_loss_grad, DitheredCodebook,
    LossGrad,
};
pub use train::{
    train, train_with_log, Growth, InitMode, LambdaSampling, QuantizerMode, StageRecord,
    TrainConfig, TrainOutcome,
};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::vectors::{dot, ensure_len, norm, sq_dist, VectorSet};

/// Ordered codewords `c_0 .. c_{N-1}`; consecutive codewords span the curve's segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    points: VectorSet,
}

impl Codebook {
    pub fn new(points: VectorSet) -> Result<Self> {
        if points.count() < 2 {
            return Err(Error::TooSmall {
                needed: 2,
                got: points.count(),
            });
        }
        Ok(Self { points })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(VectorSet::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.points.count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn segments(&self) -> usize {
        self.len() - 1
    }

    /// `log2(N)` when `N` is a power of two.
    pub fn bits(&self) -> Option<u32> {
        let n = self.len();
        n.is_power_of_two().then(|| n.trailing_zeros())
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn codewords(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.rows()
    }

    pub fn points(&self) -> &VectorSet {
        &self.points
    }

    pub fn into_points(self) -> VectorSet {
        self.points
    }

    /// The same codewords visited in `order`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        crate::ordering::validate_permutation(order, self.len())?;
        Self::new(self.points.select(order))
    }

    pub fn reversed(&self) -> Self {
        let order: Vec<usize> = (0..self.len()).rev().collect();
        Self {
            points: self.points.select(&order),
        }
    }

    /// Point at parameter `lambda` on segment `j`: `(1 - λ) c_j + λ c_{j+1}`.
    pub fn interpolate(&self, j: usize, lambda: f64) -> Vec<f64> {
        lerp(self.codeword(j), self.codeword(j + 1), lambda)
    }
}

pub(crate) fn lerp(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| (1.0 - lambda) * p + lambda * q)
        .collect()
}

/// Nearest-codeword result.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestAssignment {
    pub index: usize,
    pub reconstruction: Vec<f64>,
    pub squared_error: f64,
}

/// Placement of a sample on the curve: segment `j`, interpolation factor and reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAssignment {
    pub sample: usize,
    pub segment: usize,
    pub lambda: f64,
    pub reconstruction: Vec<f64>,
    pub squared_error: f64,
}

/// Index of the nearest row of `rows` (row-major, width `dim`); lowest index wins ties.
pub(crate) fn nearest_row(x: &[f64], rows: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, row) in rows.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn quantize_nearest(x: &[f64], codebook: &Codebook) -> Result<NearestAssignment> {
    ensure_len(x, codebook.dim())?;
    let (index, squared_error) = nearest_row(x, codebook.points().as_slice(), codebook.dim());
    Ok(NearestAssignment {
        index,
        reconstruction: codebook.codeword(index).to_vec(),
        squared_error,
    })
}

/// Closest point on segment `j`. Returns `(λ, reconstruction, squared error)`.
///
/// The clamped orthogonal projection is compared against both endpoints so that the result
/// never exceeds the endpoint errors, even after rounding.
pub fn project_onto_segment(
    x: &[f64],
    codebook: &Codebook,
    j: usize,
) -> Result<(f64, Vec<f64>, f64)> {
    ensure_len(x, codebook.dim())?;
    if j >= codebook.segments() {
        return Err(Error::IndexOutOfRange {
            index: j,
            limit: codebook.segments(),
        });
    }
    Ok(project(x, codebook.codeword(j), codebook.codeword(j + 1)))
}

fn project(x: &[f64], a: &[f64], b: &[f64]) -> (f64, Vec<f64>, f64) {
    let dir: Vec<f64> = b.iter().zip(a).map(|(q, p)| q - p).collect();
    let len2 = dot(&dir, &dir);
    let lambda = if len2 > 0.0 {
        let rel: Vec<f64> = x.iter().zip(a).map(|(v, p)| v - p).collect();
        (dot(&rel, &dir) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut best = (lambda, lerp(a, b, lambda));
    let mut best_err = sq_dist(x, &best.1);
    for end in [0.0, 1.0] {
        if end == lambda {
            continue;
        }
        let p = lerp(a, b, end);
        let e = sq_dist(x, &p);
        if e < best_err {
            best = (end, p);
            best_err = e;
        }
    }
    (best.0, best.1, best_err)
}

/// Closest point on the whole polyline; lowest segment index wins ties.
pub fn quantize_segment(x: &[f64], codebook: &Codebook) -> Result<SegmentAssignment> {
    ensure_len(x, codebook.dim())?;
    let mut best: Option<SegmentAssignment> = None;
    for j in 0..codebook.segments() {
        let (lambda, reconstruction, squared_error) =
            project(x, codebook.codeword(j), codebook.codeword(j + 1));
        if best
            .as_ref()
            .is_none_or(|b| squared_error < b.squared_error)
        {
            best = Some(SegmentAssignment {
                sample: 0,
                segment: j,
                lambda,
                reconstruction,
                squared_error,
            });
        }
    }
    Ok(best.expect("codebook has at least one segment"))
}

/// Doubles the codebook, placing every new codeword on an existing segment.
///
/// After each `c_i` (i < N-1) the point `0.99 c_i + 0.01 c_{i+1}` is inserted, and
/// `0.01 c_{N-2} + 0.99 c_{N-1}` goes right before the last codeword so the size is exactly 2N.
pub fn expand(codebook: &Codebook) -> Result<Codebook> {
    let n = codebook.len();
    if n < 2 {
        return Err(Error::TooSmall { needed: 2, got: n });
    }
    let dim = codebook.dim();
    let mut out = Vec::with_capacity(2 * n * dim);
    for i in 0..n - 1 {
        out.extend_from_slice(codebook.codeword(i));
        out.extend(mix(
            codebook.codeword(i),
            codebook.codeword(i + 1),
            0.99,
            0.01,
        ));
    }
    out.extend(mix(
        codebook.codeword(n - 2),
        codebook.codeword(n - 1),
        0.01,
        0.99,
    ));
    out.extend_from_slice(codebook.codeword(n - 1));
    Codebook::new(VectorSet::new(dim, out)?)
}

fn mix<'a>(a: &'a [f64], b: &'a [f64], wa: f64, wb: f64) -> impl Iterator<Item = f64> + 'a {
    a.iter().zip(b).map(move |(p, q)| wa * p + wb * q)
}

/// Norm-sorted initialization: the means of `n` contiguous groups of vectors sorted by norm.
///
/// Up to `sample_count` rows are drawn without replacement (all rows, in order, when the data
/// is no larger). Group sizes differ by at most one, with the extra rows in the lowest-norm
/// groups.
pub fn init_norm_sorted(
    data: &VectorSet,
    n: usize,
    sample_count: usize,
    seed: u64,
) -> Result<Codebook> {
    if n < 2 {
        return Err(Error::TooSmall { needed: 2, got: n });
    }
    let take = sample_count.min(data.count());
    if take < n {
        return Err(Error::InsufficientData {
            needed: n,
            got: take,
        });
    }
    let mut rows: Vec<usize> = if take == data.count() {
        (0..take).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, data.count(), take).into_vec()
    };
    let norms: Vec<f64> = (0..data.count()).map(|i| norm(data.row(i))).collect();
    rows.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));

    let dim = data.dim();
    let (base, extra) = (take / n, take % n);
    let mut out = Vec::with_capacity(n * dim);
    let mut start = 0;
    for g in 0..n {
        let size = base + usize::from(g < extra);
        let mut mean = vec![0.0; dim];
        for &r in &rows[start..start + size] {
            for (m, v) in mean.iter_mut().zip(data.row(r)) {
                *m += v;
            }
        }
        out.extend(mean.into_iter().map(|m| m / size as f64));
        start += size;
    }
    Codebook::new(VectorSet::new(dim, out)?)
}

/// i.i.d. standard-normal codewords.
pub fn init_random(n: usize, dim: usize, seed: u64) -> Result<Codebook> {
    if n < 2 {
        return Err(Error::TooSmall { needed: 2, got: n });
    }
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Codebook::new(VectorSet::new(dim, data)?)
}

//! Dithered assignment and the reconstruction loss with its analytic gradient.

use super::{lerp, nearest_row, Codebook, SegmentAssignment};
use crate::error::{Error, Result};
use crate::vectors::{sq_dist, VectorSet};

/// One random point per segment: entry `k` is `(1 - λ_k) c_k + λ_k c_{k+1}`.
#[derive(Debug, Clone)]
pub struct DitheredCodebook<'a> {
    base: &'a Codebook,
    lambdas: Vec<f64>,
    entries: Vec<f64>,
}

impl<'a> DitheredCodebook<'a> {
    pub fn new(base: &'a Codebook, lambdas: Vec<f64>) -> Result<Self> {
        check_lambdas(&lambdas, base.segments())?;
        let entries = lambdas
            .iter()
            .enumerate()
            .flat_map(|(k, &l)| lerp(base.codeword(k), base.codeword(k + 1), l))
            .collect();
        Ok(Self {
            base,
            lambdas,
            entries,
        })
    }

    pub fn base(&self) -> &Codebook {
        self.base
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn entry(&self, k: usize) -> &[f64] {
        let dim = self.base.dim();
        &self.entries[k * dim..(k + 1) * dim]
    }

    fn assign_one(&self, sample: usize, x: &[f64]) -> SegmentAssignment {
        let (segment, squared_error) = nearest_row(x, &self.entries, self.base.dim());
        SegmentAssignment {
            sample,
            segment,
            lambda: self.lambdas[segment],
            reconstruction: self.entry(segment).to_vec(),
            squared_error,
        }
    }
}

fn check_lambdas(lambdas: &[f64], segments: usize) -> Result<()> {
    if lambdas.len() != segments {
        return Err(Error::Shape(format!(
            "{} interpolation factors for {segments} segments",
            lambdas.len()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Numeric(format!(
            "interpolation factor {l} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Maps every row of `batch` to its closest dithered entry; lowest segment wins ties.
pub fn assign_dithered(
    batch: &VectorSet,
    dithered: &DitheredCodebook<'_>,
) -> Result<Vec<SegmentAssignment>> {
    batch.ensure_dim(dithered.base.dim())?;
    Ok(batch
        .rows()
        .enumerate()
        .map(|(i, x)| dithered.assign_one(i, x))
        .collect())
}

/// Batch-mean squared reconstruction error and its gradient with respect to each codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    dim: usize,
    grads: Vec<f64>,
}

impl LossGrad {
    fn zeros(n: usize, dim: usize) -> Self {
        Self {
            loss: 0.0,
            dim,
            grads: vec![0.0; n * dim],
        }
    }

    pub fn grad(&self, i: usize) -> &[f64] {
        &self.grads[i * self.dim..(i + 1) * self.dim]
    }

    /// All gradients, row-major in codeword order.
    pub fn as_slice(&self) -> &[f64] {
        &self.grads
    }

    fn accumulate(&mut self, i: usize, weight: f64, residual: &[f64]) {
        let g = &mut self.grads[i * self.dim..(i + 1) * self.dim];
        for (gi, r) in g.iter_mut().zip(residual) {
            *gi += weight * r;
        }
    }
}

/// Loss and gradients for one shared λ per segment.
///
/// The assignment is held fixed during differentiation, so only the two endpoints of each
/// sample's segment receive gradient: `-2(1-λ)(x - x̂)/B` and `-2λ(x - x̂)/B`.
pub fn sfvq_loss_grad(batch: &VectorSet, codebook: &Codebook, lambdas: &[f64]) -> Result<LossGrad> {
    let dithered = DitheredCodebook::new(codebook, lambdas.to_vec())?;
    let assignments = assign_dithered(batch, &dithered)?;
    Ok(accumulate_segments(batch, codebook, &assignments))
}

/// As [`sfvq_loss_grad`], with a separate λ vector for each sample (row-major, `B × (N-1)`).
pub fn sfvq_loss_grad_per_sample(
    batch: &VectorSet,
    codebook: &Codebook,
    lambdas: &[f64],
) -> Result<LossGrad> {
    batch.ensure_dim(codebook.dim())?;
    let segs = codebook.segments();
    if lambdas.len() != batch.count() * segs {
        return Err(Error::Shape(format!(
            "{} interpolation factors for {} samples of {segs} segments",
            lambdas.len(),
            batch.count()
        )));
    }
    let mut assignments = Vec::with_capacity(batch.count());
    for (i, x) in batch.rows().enumerate() {
        let dithered = DitheredCodebook::new(codebook, lambdas[i * segs..(i + 1) * segs].to_vec())?;
        assignments.push(dithered.assign_one(i, x));
    }
    Ok(accumulate_segments(batch, codebook, &assignments))
}

fn accumulate_segments(
    batch: &VectorSet,
    codebook: &Codebook,
    assignments: &[SegmentAssignment],
) -> LossGrad {
    let mut out = LossGrad::zeros(codebook.len(), codebook.dim());
    if batch.is_empty() {
        return out;
    }
    let b = batch.count() as f64;
    for a in assignments {
        let x = batch.row(a.sample);
        let residual: Vec<f64> = x
            .iter()
            .zip(&a.reconstruction)
            .map(|(v, r)| v - r)
            .collect();
        out.loss += sq_dist(x, &a.reconstruction);
        out.accumulate(a.segment, -2.0 * (1.0 - a.lambda) / b, &residual);
        out.accumulate(a.segment + 1, -2.0 * a.lambda / b, &residual);
    }
    out.loss /= b;
    out
}

/// Plain VQ: nearest codeword, gradient `-2(x - c)/B` on the selected codeword only.
pub fn vq_loss_grad(batch: &VectorSet, codebook: &Codebook) -> Result<LossGrad> {
    batch.ensure_dim(codebook.dim())?;
    let mut out = LossGrad::zeros(codebook.len(), codebook.dim());
    if batch.is_empty() {
        return Ok(out);
    }
    let b = batch.count() as f64;
    for x in batch.rows() {
        let (i, err) = nearest_row(x, codebook.points().as_slice(), codebook.dim());
        let residual: Vec<f64> = x
            .iter()
            .zip(codebook.codeword(i))
            .map(|(v, c)| v - c)
            .collect();
        out.loss += err;
        out.accumulate(i, -2.0 / b, &residual);
    }
    out.loss /= b;
    Ok(out)
}

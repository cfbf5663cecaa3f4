//! Edit directions from adjacent codewords, shifts along them, and codebook pullback.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::quantizer::{nearest_row, Codebook};
use crate::vectors::{dot, ensure_len, norm, VectorSet};

/// Unit direction from codeword `i` to codeword `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionVec {
    pub vector: Vec<f64>,
    pub source_pair: (usize, usize),
    pub label: String,
    /// Opaque annotation, e.g. which generator layers the direction is meant for.
    pub layer_mask: String,
    /// Length of `c_{i+1} - c_i` before normalization.
    pub raw_norm: f64,
}

impl DirectionVec {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_layer_mask(mut self, mask: impl Into<String>) -> Self {
        self.layer_mask = mask.into();
        self
    }
}

fn check_segment(codebook: &Codebook, i: usize) -> Result<()> {
    if i >= codebook.segments() {
        return Err(Error::IndexOutOfRange {
            index: i,
            limit: codebook.segments(),
        });
    }
    Ok(())
}

pub fn extract_direction(codebook: &Codebook, i: usize) -> Result<DirectionVec> {
    check_segment(codebook, i)?;
    let diff: Vec<f64> = codebook
        .codeword(i + 1)
        .iter()
        .zip(codebook.codeword(i))
        .map(|(b, a)| b - a)
        .collect();
    let raw_norm = norm(&diff);
    if raw_norm == 0.0 {
        return Err(Error::ZeroDirection(i, i + 1));
    }
    Ok(DirectionVec {
        vector: diff.into_iter().map(|v| v / raw_norm).collect(),
        source_pair: (i, i + 1),
        label: String::new(),
        layer_mask: String::new(),
        raw_norm,
    })
}

/// Angle between two directions in degrees, in [0, 180].
pub fn angle_deg(a: &DirectionVec, b: &DirectionVec) -> Result<f64> {
    ensure_len(&b.vector, a.dim())?;
    let cos = dot(&a.vector, &b.vector) / (norm(&a.vector) * norm(&b.vector));
    Ok(cos.clamp(-1.0, 1.0).acos().to_degrees())
}

/// `w + sigma * d`. Negative `sigma` walks the other way.
pub fn apply_shift(w: &[f64], d: &DirectionVec, sigma: f64) -> Result<Vec<f64>> {
    ensure_len(w, d.dim())?;
    if !sigma.is_finite() {
        return Err(Error::Numeric(format!("shift magnitude {sigma}")));
    }
    Ok(w.iter()
        .zip(&d.vector)
        .map(|(x, v)| x + sigma * v)
        .collect())
}

/// Applies several shifts at once: `w + Σ sigma_k d_k`.
///
/// Per coordinate the terms are summed in sorted order, so the result does not depend on the
/// order of `shifts` down to the last bit.
pub fn apply_shifts(w: &[f64], shifts: &[(&DirectionVec, f64)]) -> Result<Vec<f64>> {
    for (d, sigma) in shifts {
        ensure_len(&d.vector, w.len())?;
        if !sigma.is_finite() {
            return Err(Error::Numeric(format!("shift magnitude {sigma}")));
        }
    }
    let mut terms = Vec::with_capacity(shifts.len() + 1);
    Ok(w.iter()
        .enumerate()
        .map(|(i, &x)| {
            terms.clear();
            terms.push(x);
            terms.extend(shifts.iter().map(|(d, sigma)| sigma * d.vector[i]));
            terms.sort_by(f64::total_cmp);
            terms.iter().sum()
        })
        .collect())
}

/// `k` evenly spaced points from `c_i` to `c_{i+1}` inclusive, each with Gaussian jitter.
pub fn sample_line(
    codebook: &Codebook,
    i: usize,
    k: usize,
    noise_std: f64,
    seed: u64,
) -> Result<VectorSet> {
    check_segment(codebook, i)?;
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 points, got {k}"
        )));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise std {noise_std} must be non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).expect("validated above");
    let mut data = Vec::with_capacity(k * codebook.dim());
    for m in 0..k {
        let t = m as f64 / (k - 1) as f64;
        for v in codebook.interpolate(i, t) {
            let jitter = if noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            data.push(v + jitter);
        }
    }
    VectorSet::new(codebook.dim(), data)
}

/// Source-space samples paired row by row with their images in the quantized space.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    source: VectorSet,
    image: VectorSet,
}

impl PairedSamples {
    pub fn new(source: VectorSet, image: VectorSet) -> Result<Self> {
        if source.count() != image.count() {
            return Err(Error::Shape(format!(
                "{} source rows vs {} image rows",
                source.count(),
                image.count()
            )));
        }
        Ok(Self { source, image })
    }

    pub fn source(&self) -> &VectorSet {
        &self.source
    }

    pub fn image(&self) -> &VectorSet {
        &self.image
    }

    pub fn count(&self) -> usize {
        self.source.count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pullback {
    pub codebook: Codebook,
    /// Number of pairs whose image quantized to each codeword.
    pub counts: Vec<usize>,
    /// True where a codeword had no pairs and was copied from its nearest populated neighbor.
    pub filled: Vec<bool>,
}

/// Carries an image-space codebook back to the source space by averaging, for every codeword,
/// the source rows whose images quantize to it.
///
/// Empty cells copy the nearest populated cell along the curve, the earlier one on ties.
pub fn pullback_codebook(pairs: &PairedSamples, codebook: &Codebook) -> Result<Pullback> {
    pairs.image.ensure_dim(codebook.dim())?;
    if pairs.count() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = codebook.len();
    let dim = pairs.source.dim();
    let mut sums = vec![0.0; n * dim];
    let mut counts = vec![0usize; n];
    for (src, img) in pairs.source.rows().zip(pairs.image.rows()) {
        let (c, _) = nearest_row(img, codebook.points().as_slice(), codebook.dim());
        counts[c] += 1;
        for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(src) {
            *s += v;
        }
    }
    let populated: Vec<usize> = (0..n).filter(|&c| counts[c] > 0).collect();
    let mut out = Vec::with_capacity(n * dim);
    let mut filled = vec![false; n];
    for c in 0..n {
        let from = if counts[c] > 0 {
            c
        } else {
            filled[c] = true;
            *populated
                .iter()
                .min_by_key(|&&p| (p.abs_diff(c), p))
                .expect("at least one pair was assigned")
        };
        let count = counts[from] as f64;
        out.extend(sums[from * dim..(from + 1) * dim].iter().map(|s| s / count));
    }
    Ok(Pullback {
        codebook: Codebook::new(VectorSet::new(dim, out)?)?,
        counts,
        filled,
    })
}

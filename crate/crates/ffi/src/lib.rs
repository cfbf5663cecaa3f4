//! C ABI over `sfvq`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns an
//! [`SfvqStatus`]; on failure a message is kept per thread and can be read with
//! [`sfvq_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sfvq::datasets::{generate, Distribution};
use sfvq::directions::extract_direction;
use sfvq::io::{read_codebook, read_vectors, write_codebook, write_vectors};
use sfvq::quantizer::{
    expand, quantize_nearest, quantize_segment, train, Growth, InitMode, LambdaSampling,
    QuantizerMode,
};
use sfvq::{Codebook, Error, TrainConfig, VectorSet};

/// Owned set of equal-length f64 vectors.
pub struct SfvqVectorSet(VectorSet);

/// Owned codebook (ordered codewords, at least two).
pub struct SfvqCodebook(Codebook);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    DimensionMismatch = 4,
    Numeric = 5,
    Io = 6,
    Format = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqDistribution {
    Pentagon2d = 0,
    Moons3d = 1,
    Circles3d = 2,
    Spiral3d = 3,
    Gaussian = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqInitMode {
    NormSorted = 0,
    RandomNormal = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqMode {
    Sfvq = 0,
    Vq = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqLambdaSampling {
    PerSegment = 0,
    PerSample = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfvqGrowth {
    Recursive = 0,
    Direct = 1,
}

/// Training parameters. Start from `sfvq_train_config_default()`.
/// The learning rate always halves at 60% and 80% of each stage.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SfvqTrainConfig {
    pub target_bits: u32,
    pub batch_size: usize,
    pub batches_per_stage: usize,
    pub base_lr: f64,
    pub seed: u64,
    pub init_mode: SfvqInitMode,
    pub mode: SfvqMode,
    pub init_sample_count: usize,
    pub lambda_sampling: SfvqLambdaSampling,
    pub growth: SfvqGrowth,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SfvqStatus {
    match err {
        Error::Dimension { .. } | Error::Shape(_) => SfvqStatus::DimensionMismatch,
        Error::InsufficientData { .. } | Error::TooSmall { .. } | Error::EmptyRequest => {
            SfvqStatus::InsufficientData
        }
        Error::Numeric(_) | Error::ZeroDirection(..) => SfvqStatus::Numeric,
        Error::Io(_) => SfvqStatus::Io,
        Error::Format { .. } | Error::Length { .. } => SfvqStatus::Format,
        _ => SfvqStatus::InvalidArgument,
    }
}

struct Fail(SfvqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SfvqStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SfvqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfvqStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SfvqStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            SfvqStatus::InvalidArgument,
            "path is not valid UTF-8".into(),
        )
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn flat(p: *const f64, dim: usize, count: usize) -> Result<VectorSet, Fail> {
    let len = dim
        .checked_mul(count)
        .ok_or_else(|| Fail(SfvqStatus::InvalidArgument, "dim * count overflows".into()))?;
    let data = slice(p, len, "data")?;
    Ok(VectorSet::new(dim, data.to_vec())?)
}

/// Message for the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn sfvq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `count` rows of `dim` values from `data` (row-major).
#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_new(
    dim: usize,
    data: *const f64,
    count: usize,
    out: *mut *mut SfvqVectorSet,
) -> SfvqStatus {
    guard(|| put(out, SfvqVectorSet(flat(data, dim, count)?)))
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_free(vs: *mut SfvqVectorSet) {
    if !vs.is_null() {
        drop(Box::from_raw(vs));
    }
}

/// 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_count(vs: *const SfvqVectorSet) -> usize {
    vs.as_ref().map_or(0, |v| v.0.count())
}

/// 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_dim(vs: *const SfvqVectorSet) -> usize {
    vs.as_ref().map_or(0, |v| v.0.dim())
}

/// Copies all values row-major into `out`, which must hold `len >= count * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_copy(
    vs: *const SfvqVectorSet,
    out: *mut f64,
    len: usize,
) -> SfvqStatus {
    guard(|| {
        let v = vs.as_ref().ok_or_else(|| null("vector set"))?;
        copy_into(v.0.as_slice(), out, len)
    })
}

unsafe fn copy_into(src: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            SfvqStatus::InvalidArgument,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    slice_mut(out, src.len(), "output buffer")?.copy_from_slice(src);
    Ok(())
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_read(
    path_: *const c_char,
    out: *mut *mut SfvqVectorSet,
) -> SfvqStatus {
    guard(|| put(out, SfvqVectorSet(read_vectors(path(path_)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_vectors_write(
    vs: *const SfvqVectorSet,
    path_: *const c_char,
) -> SfvqStatus {
    guard(|| {
        let v = vs.as_ref().ok_or_else(|| null("vector set"))?;
        Ok(write_vectors(path(path_)?, &v.0)?)
    })
}

/// `noise` applies to the 3D shapes, `dim` to the Gaussian; both are ignored otherwise.
#[no_mangle]
pub unsafe extern "C" fn sfvq_generate(
    kind: SfvqDistribution,
    n: usize,
    noise: f64,
    dim: usize,
    seed: u64,
    out: *mut *mut SfvqVectorSet,
) -> SfvqStatus {
    guard(|| {
        let kind = match kind {
            SfvqDistribution::Pentagon2d => Distribution::Pentagon2d,
            SfvqDistribution::Moons3d => Distribution::moons3d().with_noise(noise),
            SfvqDistribution::Circles3d => Distribution::circles3d().with_noise(noise),
            SfvqDistribution::Spiral3d => Distribution::spiral3d().with_noise(noise),
            SfvqDistribution::Gaussian => Distribution::Gaussian { dim },
        };
        put(out, SfvqVectorSet(generate(kind, n, seed)?))
    })
}

#[no_mangle]
pub extern "C" fn sfvq_train_config_default() -> SfvqTrainConfig {
    let d = TrainConfig::default();
    SfvqTrainConfig {
        target_bits: d.target_bits,
        batch_size: d.batch_size,
        batches_per_stage: d.batches_per_stage,
        base_lr: d.base_lr,
        seed: d.seed,
        init_mode: SfvqInitMode::NormSorted,
        mode: SfvqMode::Sfvq,
        init_sample_count: d.init_sample_count,
        lambda_sampling: SfvqLambdaSampling::PerSegment,
        growth: SfvqGrowth::Recursive,
    }
}

fn to_config(c: &SfvqTrainConfig) -> TrainConfig {
    TrainConfig {
        target_bits: c.target_bits,
        batch_size: c.batch_size,
        batches_per_stage: c.batches_per_stage,
        base_lr: c.base_lr,
        seed: c.seed,
        init_mode: match c.init_mode {
            SfvqInitMode::NormSorted => InitMode::NormSorted,
            SfvqInitMode::RandomNormal => InitMode::RandomNormal,
        },
        mode: match c.mode {
            SfvqMode::Sfvq => QuantizerMode::Sfvq,
            SfvqMode::Vq => QuantizerMode::Vq,
        },
        init_sample_count: c.init_sample_count,
        lambda_sampling: match c.lambda_sampling {
            SfvqLambdaSampling::PerSegment => LambdaSampling::PerSegment,
            SfvqLambdaSampling::PerSample => LambdaSampling::PerSample,
        },
        growth: match c.growth {
            SfvqGrowth::Recursive => Growth::Recursive,
            SfvqGrowth::Direct => Growth::Direct,
        },
        ..TrainConfig::default()
    }
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_train(
    config: *const SfvqTrainConfig,
    data: *const SfvqVectorSet,
    out: *mut *mut SfvqCodebook,
) -> SfvqStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        let outcome = train(&to_config(c), &d.0)?;
        put(out, SfvqCodebook(outcome.codebook))
    })
}

/// Copies `count` codewords of `dim` values from `data` (row-major).
#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_new(
    dim: usize,
    data: *const f64,
    count: usize,
    out: *mut *mut SfvqCodebook,
) -> SfvqStatus {
    guard(|| put(out, SfvqCodebook(Codebook::new(flat(data, dim, count)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_free(cb: *mut SfvqCodebook) {
    if !cb.is_null() {
        drop(Box::from_raw(cb));
    }
}

/// Number of codewords; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_len(cb: *const SfvqCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.0.len())
}

/// 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_dim(cb: *const SfvqCodebook) -> usize {
    cb.as_ref().map_or(0, |c| c.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_copy(
    cb: *const SfvqCodebook,
    out: *mut f64,
    len: usize,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        copy_into(c.0.points().as_slice(), out, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_read(
    path_: *const c_char,
    out: *mut *mut SfvqCodebook,
) -> SfvqStatus {
    guard(|| put(out, SfvqCodebook(read_codebook(path(path_)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn sfvq_codebook_write(
    cb: *const SfvqCodebook,
    path_: *const c_char,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        Ok(write_codebook(path(path_)?, &c.0)?)
    })
}

/// Doubles the codebook size (N -> 2N) without changing its distortion.
#[no_mangle]
pub unsafe extern "C" fn sfvq_expand(
    cb: *const SfvqCodebook,
    out: *mut *mut SfvqCodebook,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        put(out, SfvqCodebook(expand(&c.0)?))
    })
}

/// Nearest codeword. `reconstruction` may be NULL, otherwise it receives `dim` values.
#[no_mangle]
pub unsafe extern "C" fn sfvq_quantize_nearest(
    cb: *const SfvqCodebook,
    x: *const f64,
    dim: usize,
    index: *mut usize,
    reconstruction: *mut f64,
    squared_error: *mut f64,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        let q = quantize_nearest(slice(x, dim, "x")?, &c.0)?;
        if let Some(i) = index.as_mut() {
            *i = q.index;
        }
        if !reconstruction.is_null() {
            slice_mut(reconstruction, dim, "reconstruction")?.copy_from_slice(&q.reconstruction);
        }
        if let Some(e) = squared_error.as_mut() {
            *e = q.squared_error;
        }
        Ok(())
    })
}

/// Closest point on the piecewise-linear curve. Any output pointer may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sfvq_quantize_segment(
    cb: *const SfvqCodebook,
    x: *const f64,
    dim: usize,
    segment: *mut usize,
    lambda: *mut f64,
    reconstruction: *mut f64,
    squared_error: *mut f64,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        let q = quantize_segment(slice(x, dim, "x")?, &c.0)?;
        if let Some(s) = segment.as_mut() {
            *s = q.segment;
        }
        if let Some(l) = lambda.as_mut() {
            *l = q.lambda;
        }
        if !reconstruction.is_null() {
            slice_mut(reconstruction, dim, "reconstruction")?.copy_from_slice(&q.reconstruction);
        }
        if let Some(e) = squared_error.as_mut() {
            *e = q.squared_error;
        }
        Ok(())
    })
}

/// Unit vector from codeword `i` to `i + 1` written to `out` (`len >= dim`).
#[no_mangle]
pub unsafe extern "C" fn sfvq_extract_direction(
    cb: *const SfvqCodebook,
    i: usize,
    out: *mut f64,
    len: usize,
    raw_norm: *mut f64,
) -> SfvqStatus {
    guard(|| {
        let c = cb.as_ref().ok_or_else(|| null("codebook"))?;
        let d = extract_direction(&c.0, i)?;
        copy_into(&d.vector, out, len)?;
        if let Some(r) = raw_norm.as_mut() {
            *r = d.raw_norm;
        }
        Ok(())
    })
}

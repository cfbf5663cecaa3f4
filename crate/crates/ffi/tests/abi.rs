use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use sfvq_ffi::*;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("sfvq.h")
}

fn last_error() -> String {
    let p = sfvq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn codebook(rows: &[f64], dim: usize) -> *mut SfvqCodebook {
    let mut cb = ptr::null_mut();
    let st = unsafe { sfvq_codebook_new(dim, rows.as_ptr(), rows.len() / dim, &mut cb) };
    assert_eq!(st, SfvqStatus::Ok);
    cb
}

#[test]
fn vectors_round_trip_through_handles_and_files() {
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut vs = ptr::null_mut();
    unsafe {
        assert_eq!(
            sfvq_vectors_new(2, data.as_ptr(), 3, &mut vs),
            SfvqStatus::Ok
        );
        assert_eq!(sfvq_vectors_count(vs), 3);
        assert_eq!(sfvq_vectors_dim(vs), 2);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("v.vec").to_str().unwrap()).unwrap();
        assert_eq!(sfvq_vectors_write(vs, path.as_ptr()), SfvqStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(sfvq_vectors_read(path.as_ptr(), &mut back), SfvqStatus::Ok);
        let mut buf = [0.0; 6];
        assert_eq!(sfvq_vectors_copy(back, buf.as_mut_ptr(), 6), SfvqStatus::Ok);
        assert_eq!(buf, data);

        let mut small = [0.0; 5];
        assert_eq!(
            sfvq_vectors_copy(back, small.as_mut_ptr(), 5),
            SfvqStatus::InvalidArgument
        );
        sfvq_vectors_free(back);
        sfvq_vectors_free(vs);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut vs = ptr::null_mut();
    let data = [1.0, 2.0, 3.0];
    unsafe {
        assert_eq!(
            sfvq_vectors_new(0, data.as_ptr(), 3, &mut vs),
            SfvqStatus::DimensionMismatch
        );
        assert!(vs.is_null());
        assert!(!last_error().is_empty());

        let nan = [f64::NAN, 0.0];
        assert_eq!(
            sfvq_vectors_new(2, nan.as_ptr(), 1, &mut vs),
            SfvqStatus::Numeric
        );

        assert_eq!(
            sfvq_vectors_new(1, data.as_ptr(), 3, ptr::null_mut()),
            SfvqStatus::NullPointer
        );
        assert_eq!(
            sfvq_vectors_copy(ptr::null(), ptr::null_mut(), 0),
            SfvqStatus::NullPointer
        );
        assert_eq!(last_error(), "vector set is null");

        let missing = CString::new("/nonexistent/dir/x.vec").unwrap();
        assert_eq!(sfvq_vectors_read(missing.as_ptr(), &mut vs), SfvqStatus::Io);

        let cb = codebook(&[0.0, 0.0, 1.0, 0.0], 2);
        let x = [0.5, 0.5, 0.5];
        let st = sfvq_quantize_nearest(
            cb,
            x.as_ptr(),
            3,
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, SfvqStatus::DimensionMismatch);
        sfvq_codebook_free(cb);

        sfvq_vectors_free(ptr::null_mut());
        sfvq_codebook_free(ptr::null_mut());
        assert_eq!(sfvq_vectors_count(ptr::null()), 0);
    }
}

#[test]
fn quantize_and_expand() {
    let cb = codebook(&[0.0, 0.0, 2.0, 0.0, 2.0, 2.0], 2);
    unsafe {
        let x = [1.0, 0.5];
        let (mut idx, mut err) = (99usize, 0.0);
        let mut rec = [0.0; 2];
        assert_eq!(
            sfvq_quantize_nearest(cb, x.as_ptr(), 2, &mut idx, rec.as_mut_ptr(), &mut err),
            SfvqStatus::Ok
        );
        assert_eq!(idx, 0);
        assert!((err - 1.25).abs() < 1e-12);

        let (mut seg, mut lam) = (99usize, -1.0);
        assert_eq!(
            sfvq_quantize_segment(
                cb,
                x.as_ptr(),
                2,
                &mut seg,
                &mut lam,
                rec.as_mut_ptr(),
                &mut err
            ),
            SfvqStatus::Ok
        );
        assert_eq!(seg, 0);
        assert!((lam - 0.5).abs() < 1e-12);
        assert_eq!(rec, [1.0, 0.0]);
        assert!((err - 0.25).abs() < 1e-12);

        let mut big = ptr::null_mut();
        assert_eq!(sfvq_expand(cb, &mut big), SfvqStatus::Ok);
        assert_eq!(sfvq_codebook_len(big), 6);
        assert_eq!(sfvq_codebook_dim(big), 2);

        let mut dir = [0.0; 2];
        let mut raw = 0.0;
        assert_eq!(
            sfvq_extract_direction(cb, 1, dir.as_mut_ptr(), 2, &mut raw),
            SfvqStatus::Ok
        );
        assert_eq!(dir, [0.0, 1.0]);
        assert_eq!(raw, 2.0);
        assert_eq!(
            sfvq_extract_direction(cb, 2, dir.as_mut_ptr(), 2, &mut raw),
            SfvqStatus::InvalidArgument
        );
        sfvq_codebook_free(big);
        sfvq_codebook_free(cb);
    }
}

#[test]
fn generate_and_train_small() {
    let mut data = ptr::null_mut();
    unsafe {
        assert_eq!(
            sfvq_generate(SfvqDistribution::Pentagon2d, 500, 0.0, 0, 7, &mut data),
            SfvqStatus::Ok
        );
        assert_eq!(sfvq_vectors_dim(data), 2);
        let mut cfg = sfvq_train_config_default();
        assert_eq!(cfg.target_bits, 6);
        assert_eq!(cfg.batch_size, 64);
        assert_eq!(cfg.batches_per_stage, 100_000);
        cfg.target_bits = 3;
        cfg.batches_per_stage = 50;
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(sfvq_train(&cfg, data, &mut a), SfvqStatus::Ok);
        assert_eq!(sfvq_train(&cfg, data, &mut b), SfvqStatus::Ok);
        assert_eq!(sfvq_codebook_len(a), 8);
        let mut ba = [0.0; 16];
        let mut bb = [0.0; 16];
        sfvq_codebook_copy(a, ba.as_mut_ptr(), 16);
        sfvq_codebook_copy(b, bb.as_mut_ptr(), 16);
        assert_eq!(ba, bb);

        cfg.target_bits = 1;
        let mut c = ptr::null_mut();
        assert_eq!(sfvq_train(&cfg, data, &mut c), SfvqStatus::InvalidArgument);
        sfvq_codebook_free(a);
        sfvq_codebook_free(b);
        sfvq_vectors_free(data);
    }
}

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let cc = cc().expect("no C compiler found");
    let out = Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-std=c99", "-x", "c"])
        .arg(header())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c++"])
        .arg(header())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "sfvq.h"

int main(void) {
    double rows[] = {0.0, 0.0, 2.0, 0.0};
    SfvqCodebook *cb = NULL;
    if (sfvq_codebook_new(2, rows, 2, &cb) != SFVQ_STATUS_OK) return 1;
    double x[] = {1.5, 1.0};
    size_t seg = 9;
    double lambda = -1.0, err = -1.0;
    if (sfvq_quantize_segment(cb, x, 2, &seg, &lambda, NULL, &err) != SFVQ_STATUS_OK) return 2;
    if (sfvq_codebook_new(0, rows, 2, &cb) != SFVQ_STATUS_DIMENSION_MISMATCH) return 3;
    if (sfvq_last_error_message() == NULL) return 4;
    printf("segment=%zu lambda=%.3f err=%.3f\n", seg, lambda, err);
    sfvq_codebook_free(cb);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let cc = cc().expect("no C compiler found");
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libsfvq_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(
        String::from_utf8_lossy(&run.stdout),
        "segment=0 lambda=0.750 err=1.000\n"
    );
}

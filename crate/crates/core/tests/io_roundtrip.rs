use proptest::prelude::*;

use sfvq::io::{decode_vectors, encode_vectors, read_vectors, write_vectors};
use sfvq::{Error, VectorSet};

fn f32_sets() -> impl Strategy<Value = VectorSet> {
    (1usize..6, 0usize..30).prop_flat_map(|(dim, count)| {
        prop::collection::vec(-1e6f32..1e6f32, dim * count)
            .prop_map(move |v| VectorSet::new(dim, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn binary_round_trip_is_bit_exact(vs in f32_sets()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.vec");
        write_vectors(&path, &vs).unwrap();
        let back = read_vectors(&path).unwrap();
        prop_assert_eq!(back.dim(), vs.dim());
        let a: Vec<u64> = back.as_slice().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = vs.as_slice().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 16 + 4 * vs.as_slice().len());
    }

    #[test]
    fn csv_round_trip_within_tolerance(vs in f32_sets()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        if vs.is_empty() {
            prop_assert!(write_vectors(&path, &vs).is_err());
            prop_assert!(!path.exists());
            return Ok(());
        }
        write_vectors(&path, &vs).unwrap();
        let back = read_vectors(&path).unwrap();
        prop_assert_eq!(back.count(), vs.count());
        for (a, b) in back.as_slice().iter().zip(vs.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn truncation_is_a_length_error(vs in f32_sets(), cut in 1usize..8) {
        prop_assume!(!vs.is_empty());
        let bytes = encode_vectors(&vs).unwrap();
        let cut = cut.min(bytes.len() - 16);
        let err = decode_vectors(&bytes[..bytes.len() - cut], std::path::Path::new("t.vec")).unwrap_err();
        prop_assert!(matches!(err, Error::Length { .. }), "{err}");
    }
}

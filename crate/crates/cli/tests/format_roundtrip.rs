use proptest::prelude::*;

use ssmm::format::{from_text, from_text_any, to_text, AnyMatrix};
use ssmm_core::generate::gen_random;
use ssmm_core::{Boolean, CooMatrix, IntRing, Layout, Tropical};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn int_matrices_round_trip(dim in 1u32..50, fill in 0.0f64..1.0, seed: u64, column_major: bool) {
        let mut m = gen_random::<IntRing>(dim, (fill * (dim * dim) as f64) as usize, seed).unwrap();
        if column_major {
            m.sort(Layout::ColumnMajor);
        }
        let text = to_text(&m);
        prop_assert_eq!(from_text::<IntRing>(&text).unwrap(), m.clone());
        prop_assert!(matches!(from_text_any(&text).unwrap(), AnyMatrix::Int64(back) if back == m));
    }

    #[test]
    fn bool_and_tropical_round_trip(dim in 1u32..30, fill in 0.0f64..1.0, seed: u64) {
        let nnz = (fill * (dim * dim) as f64) as usize;
        let b: CooMatrix<Boolean> = gen_random(dim, nnz, seed).unwrap();
        prop_assert_eq!(from_text::<Boolean>(&to_text(&b)).unwrap(), b);
        let t: CooMatrix<Tropical> = gen_random(dim, nnz, seed).unwrap();
        prop_assert_eq!(from_text::<Tropical>(&to_text(&t)).unwrap(), t);
    }

    #[test]
    fn truncated_text_is_rejected(dim in 2u32..20, seed: u64, cut in 1usize..40) {
        let m = gen_random::<IntRing>(dim, (dim * dim / 2) as usize, seed).unwrap();
        let text = to_text(&m);
        let cut = cut.min(text.len() - 1);
        prop_assert!(from_text::<IntRing>(&text[..text.len() - cut]).is_err());
    }
}

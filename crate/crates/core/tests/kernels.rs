//! Sparse kernels against dense loops over the raw triplets.

#![allow(clippy::needless_range_loop)]

use nql::sparse::{
    add, bilinear_rows, entry_gradients, hadamard, row_sum, scale, spmm_right, spmm_right_transpose,
    weighted_sum_matvec, DenseBatch, SparseMatrix,
};
use proptest::prelude::*;

type Triplets = Vec<(usize, usize, f64)>;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn dense_of(n: usize, m: usize, t: &Triplets) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m]; n];
    for &(i, j, w) in t {
        d[i][j] += w;
    }
    d
}

fn matrix() -> impl Strategy<Value = (usize, usize, Triplets)> {
    (0usize..10, 0usize..10).prop_flat_map(|(n, m)| {
        let cells = if n == 0 || m == 0 {
            Just(Vec::new()).boxed()
        } else {
            prop::collection::vec((0..n, 0..m, 0.0f64..3.0), 0..40).boxed()
        };
        (Just(n), Just(m), cells)
    })
}

fn batch(rows: usize, cols: usize, lo: f64) -> impl Strategy<Value = DenseBatch> {
    prop::collection::vec(prop_oneof![3 => Just(0.0), 7 => lo..2.0f64], rows * cols)
        .prop_map(move |v| DenseBatch::from_vec(rows, cols, v).unwrap())
}

fn matrix_and_batch(lo: f64) -> impl Strategy<Value = (usize, usize, Triplets, DenseBatch, DenseBatch)> {
    (matrix(), 1usize..5)
        .prop_flat_map(move |((n, m, t), b)| (Just(n), Just(m), Just(t), batch(b, n, lo), batch(b, m, lo)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spmm_matches_dense((n, m, t, s, _) in matrix_and_batch(0.0)) {
        let sp = SparseMatrix::from_triplets(n, m, t.clone()).unwrap();
        let d = dense_of(n, m, &t);
        let out = spmm_right(&s, &sp).unwrap();
        prop_assert_eq!(out.shape(), (s.rows(), m));
        for b in 0..s.rows() {
            for j in 0..m {
                let want: f64 = (0..n).map(|i| s.get(b, i) * d[i][j]).sum();
                prop_assert!(close(out.get(b, j), want), "{} vs {}", out.get(b, j), want);
            }
        }
    }

    #[test]
    fn transpose_product_matches_dense((n, m, t, _, g) in matrix_and_batch(-1.0)) {
        let sp = SparseMatrix::from_triplets(n, m, t.clone()).unwrap();
        let d = dense_of(n, m, &t);
        let out = spmm_right_transpose(&g, &sp).unwrap();
        let via_t = spmm_right(&g, &sp.transpose()).unwrap();
        for b in 0..g.rows() {
            for i in 0..n {
                let want: f64 = (0..m).map(|j| g.get(b, j) * d[i][j]).sum();
                prop_assert!(close(out.get(b, i), want));
                prop_assert!(close(via_t.get(b, i), want));
            }
        }
    }

    #[test]
    fn transpose_is_an_involution((n, m, t) in matrix()) {
        let sp = SparseMatrix::from_triplets(n, m, t).unwrap();
        prop_assert_eq!(sp.transpose().transpose(), sp.clone());
        let tr = sp.transpose();
        for (i, j, w) in sp.iter() {
            prop_assert_eq!(tr.get(j, i), w);
        }
    }

    #[test]
    fn triplet_order_does_not_matter((n, m, t) in matrix(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = t.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(
            SparseMatrix::from_triplets(n, m, t).unwrap(),
            SparseMatrix::from_triplets(n, m, shuffled).unwrap()
        );
    }

    #[test]
    fn weighted_sum_matches_dense(
        (n, m, t1, s, _) in matrix_and_batch(0.0),
        extra in prop::collection::vec((0usize..10, 0usize..10, 0.0f64..3.0), 0..30),
        mix in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 10),
    ) {
        let t2: Triplets = if n == 0 || m == 0 {
            Vec::new()
        } else {
            extra.into_iter().map(|(i, j, w)| (i % n, j % m, w)).collect()
        };
        let a = SparseMatrix::from_triplets(n, m, t1.clone()).unwrap();
        let b = SparseMatrix::from_triplets(n, m, t2.clone()).unwrap();
        let rows = s.rows();
        let r = DenseBatch::from_vec(rows, 2, mix[..rows * 2].to_vec()).unwrap();
        let out = weighted_sum_matvec(&s, &r, &[&a, &b]).unwrap();
        let (da, db) = (dense_of(n, m, &t1), dense_of(n, m, &t2));
        for bi in 0..rows {
            for j in 0..m {
                let want: f64 = (0..n)
                    .map(|i| s.get(bi, i) * (r.get(bi, 0) * da[i][j] + r.get(bi, 1) * db[i][j]))
                    .sum();
                prop_assert!(close(out.get(bi, j), want));
            }
        }
    }

    #[test]
    fn adjoints_match_dense((n, m, t, s, g) in matrix_and_batch(-1.0)) {
        let sp = SparseMatrix::from_triplets(n, m, t.clone()).unwrap();
        let d = dense_of(n, m, &t);
        let bil = bilinear_rows(&s, &sp, &g).unwrap();
        for b in 0..s.rows() {
            let mut want = 0.0;
            for i in 0..n {
                for j in 0..m {
                    want += s.get(b, i) * d[i][j] * g.get(b, j);
                }
            }
            prop_assert!(close(bil[b], want));
        }
        let eg = entry_gradients(&s, &sp, &g).unwrap();
        prop_assert_eq!(eg.len(), sp.nnz());
        for (k, (i, j, _)) in sp.iter().enumerate() {
            let want: f64 = (0..s.rows()).map(|b| s.get(b, i) * g.get(b, j)).sum();
            prop_assert!(close(eg[k], want));
        }
    }

    #[test]
    fn elementwise_ops(s in batch(3, 4, -2.0), t in batch(3, 4, -2.0), a in -3.0f64..3.0) {
        let (h, p, sc, rs) = (hadamard(&s, &t).unwrap(), add(&s, &t).unwrap(), scale(&s, a), row_sum(&s));
        for b in 0..3 {
            let mut sum = 0.0;
            for j in 0..4 {
                prop_assert_eq!(h.get(b, j), s.get(b, j) * t.get(b, j));
                prop_assert_eq!(p.get(b, j), s.get(b, j) + t.get(b, j));
                prop_assert_eq!(sc.get(b, j), s.get(b, j) * a);
                sum += s.get(b, j);
            }
            prop_assert!(close(rs.get(b, 0), sum));
        }
    }
}

#[test]
fn shape_mismatches_are_errors() {
    let m = SparseMatrix::zeros(3, 2);
    let s = DenseBatch::zeros(1, 2);
    assert!(spmm_right(&s, &m).is_err());
    assert!(spmm_right_transpose(&DenseBatch::zeros(1, 3), &m).is_err());
    assert!(hadamard(&s, &DenseBatch::zeros(2, 2)).is_err());
    assert!(weighted_sum_matvec(&DenseBatch::zeros(1, 3), &DenseBatch::zeros(1, 2), &[&m]).is_err());
    assert!(weighted_sum_matvec(&DenseBatch::zeros(1, 3), &DenseBatch::zeros(1, 0), &[]).is_err());
}

#[test]
fn invalid_triplets_are_rejected() {
    assert!(SparseMatrix::from_triplets(2, 2, [(2, 0, 1.0)]).is_err());
    assert!(SparseMatrix::from_triplets(2, 2, [(0, 0, -1.0)]).is_err());
    assert!(SparseMatrix::from_triplets(2, 2, [(0, 0, f64::NAN)]).is_err());
}

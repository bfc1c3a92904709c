//! Greedy sparse approximation of the mean row by Frank-Wolfe.

use std::collections::BTreeMap;

use super::{finish, mean_row, Backend};
use crate::data::{Coreset, RowMatrix};
use crate::linalg::{dot, sq_dist};

/// Frank-Wolfe on `min ||x - mu||^2` over the convex hull of the rows,
/// using at most `tau` distinct rows.
///
/// Starts at the row nearest the mean `mu`; step `k` moves toward the row
/// minimizing `<u, x - mu>` with step size `2 / (k + 2)`. The walk stops
/// when a new row would exceed the budget, and the best iterate seen is
/// returned with its convex weights scaled by `n`. Because a larger budget
/// only extends the same walk, the error is non-increasing in `tau`.
pub fn frank_wolfe(matrix: &RowMatrix, tau: usize) -> Coreset {
    let n = matrix.n_rows();
    let z = matrix.n_cols();
    let mu = mean_row(matrix);
    let start = (0..n)
        .map(|i| (i, sq_dist(matrix.row(i), &mu)))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
        .0;

    let mut x = matrix.row(start).to_vec();
    let mut support: BTreeMap<usize, f64> = BTreeMap::from([(start, 1.0)]);
    let mut best_err = sq_dist(&x, &mu);
    let mut best = support.clone();
    let max_steps = 8 * tau.max(1) + 16;
    let mut dir = vec![0.0; z];

    for k in 1..=max_steps {
        if best_err == 0.0 {
            break;
        }
        for (d, (a, b)) in dir.iter_mut().zip(x.iter().zip(&mu)) {
            *d = a - b;
        }
        // Linear minimization oracle; ties to the lowest row index.
        let mut s = 0;
        let mut s_val = f64::INFINITY;
        for i in 0..n {
            let v = dot(matrix.row(i), &dir);
            if v < s_val {
                s_val = v;
                s = i;
            }
        }
        // Duality gap <x - s, x - mu>; zero means x is optimal.
        if dot(&x, &dir) - s_val <= 0.0 {
            break;
        }
        if !support.contains_key(&s) && support.len() >= tau {
            break;
        }
        let gamma = 2.0 / (k as f64 + 2.0);
        for (xi, si) in x.iter_mut().zip(matrix.row(s)) {
            *xi = (1.0 - gamma) * *xi + gamma * si;
        }
        support.values_mut().for_each(|w| *w *= 1.0 - gamma);
        *support.entry(s).or_insert(0.0) += gamma;
        let err = sq_dist(&x, &mu);
        if err < best_err {
            best_err = err;
            best = support.clone();
        }
    }
    let scale = n as f64;
    let out = Coreset::from_pairs(best.into_iter().map(|(i, w)| (i, w * scale)), Backend::FrankWolfe);
    finish(matrix, out)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn identical_rows_stop_immediately() {
        let c = frank_wolfe(&identical(6, &[1.0, 2.0, 3.0]), 4);
        assert_eq!(c.len(), 1);
        assert_eq!(c.vsum_error, 0.0);
        assert_eq!(c.weights[0], 6.0);
    }

    #[test]
    fn full_budget_is_no_worse_than_one() {
        let m = random_matrix(40, 3, 5);
        let one = frank_wolfe(&m, 1);
        let all = frank_wolfe(&m, 40);
        assert!(all.vsum_error <= one.vsum_error);
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn seeded_200_by_4_bound() {
        let m = random_matrix(200, 4, 200);
        let n = 200.0f64;
        let mut diam2 = 0.0f64;
        for i in 0..200 {
            for j in i + 1..200 {
                diam2 = diam2.max(sq_dist(m.row(i), m.row(j)));
            }
        }
        let e1 = frank_wolfe(&m, 1).vsum_error;
        let e8 = frank_wolfe(&m, 8).vsum_error;
        let e64 = frank_wolfe(&m, 64).vsum_error;
        assert!(e64 <= e8 && e8 <= e1);
        for (tau, e) in [(1, e1), (8, e8), (64, e64)] {
            assert!(e <= 4.0 * n * n * diam2 / (tau as f64 + 2.0));
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_in_budget(n in 2usize..60, z in 1usize..5, seed in 0u64..500, tau in 1usize..30) {
            let m = random_matrix(n, z, seed);
            let a = frank_wolfe(&m, tau).vsum_error;
            let b = frank_wolfe(&m, tau + 1).vsum_error;
            proptest::prop_assert!(b <= a + 1e-12);
            proptest::prop_assert!(frank_wolfe(&m, tau).len() <= tau);
        }
    }
}

//! Median-of-means tournament: return the bucket whose mean sits closest to
//! the geometric median of all bucket means.

use rand::seq::SliceRandom;

use super::{finish, Backend};
use crate::data::{Coreset, RowMatrix};
use crate::linalg::{sq_dist, sq_norm};
use crate::rng::rng_from_seed;

/// Geometric median by Weiszfeld iteration started from the centroid.
/// If an iterate lands on one of the points, that point is returned.
pub fn geometric_median(points: &[Vec<f64>]) -> Vec<f64> {
    let z = points[0].len();
    let k = points.len() as f64;
    let mut y = vec![0.0; z];
    for p in points {
        for (a, v) in y.iter_mut().zip(p) {
            *a += v / k;
        }
    }
    let scale = points.iter().map(|p| sq_norm(p)).fold(0.0, f64::max).sqrt().max(1.0);
    for _ in 0..1000 {
        let mut num = vec![0.0; z];
        let mut den = 0.0;
        for p in points {
            let dist = sq_dist(p, &y).sqrt();
            if dist <= 1e-15 * scale {
                return p.clone();
            }
            for (a, v) in num.iter_mut().zip(p) {
                *a += v / dist;
            }
            den += 1.0 / dist;
        }
        let next: Vec<f64> = num.into_iter().map(|v| v / den).collect();
        let moved = sq_dist(&next, &y).sqrt();
        y = next;
        if moved <= 1e-12 * scale {
            break;
        }
    }
    y
}

/// Shuffle rows with `seed`, split them into `b = ceil(n / tau)` buckets of
/// near-equal size, and return the bucket whose mean is nearest the
/// geometric median of the bucket means, each member weighted `n / |bucket|`.
///
/// `delta` is accepted for interface symmetry; one tournament is run.
pub fn median_of_means(matrix: &RowMatrix, tau: usize, _delta: f64, seed: u64) -> Coreset {
    let n = matrix.n_rows();
    let z = matrix.n_cols();
    let buckets = n.div_ceil(tau.max(1));
    if buckets <= 1 {
        return finish(matrix, Coreset::identity(n, Backend::MedianOfMeans));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let groups: Vec<&[usize]> = (0..buckets).map(|b| &perm[b * n / buckets..(b + 1) * n / buckets]).collect();
    let means: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let mut m = vec![0.0; z];
            for &i in g.iter() {
                for (a, v) in m.iter_mut().zip(matrix.row(i)) {
                    *a += v;
                }
            }
            m.iter_mut().for_each(|a| *a /= g.len() as f64);
            m
        })
        .collect();
    let median = geometric_median(&means);
    let chosen = (0..buckets)
        .map(|b| (b, sq_dist(&means[b], &median)))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
        .0;
    let g = groups[chosen];
    let w = n as f64 / g.len() as f64;
    let out = Coreset::from_pairs(g.iter().map(|&i| (i, w)), Backend::MedianOfMeans);
    finish(matrix, out)
}

//! Exact summarization: at most `z + 1` rows whose weighted sum equals the
//! full row sum (up to roundoff).

use rand::seq::SliceRandom;

use super::{finish, Backend};
use crate::data::{Coreset, RowMatrix};
use crate::linalg::null_vector;
use crate::rng::{derive_seed, rng_from_seed};

const PIVOT_TOL: f64 = 1e-12;

/// Caratheodory reduction of the rows of `matrix`.
///
/// Starting from unit weights, the rows are grouped into `2(z + 2)` chunks
/// whose weighted means are reduced with the classic elimination; members of
/// the surviving chunks are rescaled and the step repeats until at most
/// `z + 1` rows remain. Each elimination finds an affine dependence among
/// `z + 2` active points and shifts weight along it until one weight hits
/// zero, so the weighted sum never changes.
pub fn caratheodory(matrix: &RowMatrix, seed: u64) -> Coreset {
    let n = matrix.n_rows();
    let z = matrix.n_cols();
    let mut active: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0; n];
    let chunks = 2 * (z + 2);
    let mut flagged = false;
    let mut round = 0u64;

    while active.len() > z + 1 {
        round += 1;
        if active.len() <= chunks {
            let pts: Vec<&[f64]> = active.iter().map(|&i| matrix.row(i)).collect();
            let mut w: Vec<f64> = active.iter().map(|&i| weights[i]).collect();
            let ok = reduce(&pts, &mut w, z, derive_seed(seed, &[round]));
            flagged |= !ok;
            for (&i, wi) in active.iter().zip(&w) {
                weights[i] = *wi;
            }
            active.retain(|&i| weights[i] > 0.0);
            break;
        }
        // Contiguous chunks of near-equal size.
        let len = active.len();
        let groups: Vec<&[usize]> = (0..chunks).map(|c| &active[c * len / chunks..(c + 1) * len / chunks]).collect();
        let mut means = Vec::with_capacity(chunks);
        let mut mass = Vec::with_capacity(chunks);
        for g in &groups {
            let total: f64 = g.iter().map(|&i| weights[i]).sum();
            let mut mean = vec![0.0; z];
            for &i in g.iter() {
                for (m, v) in mean.iter_mut().zip(matrix.row(i)) {
                    *m += weights[i] * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= total);
            means.push(mean);
            mass.push(total);
        }
        let pts: Vec<&[f64]> = means.iter().map(Vec::as_slice).collect();
        let mut new_mass = mass.clone();
        let ok = reduce(&pts, &mut new_mass, z, derive_seed(seed, &[round]));
        flagged |= !ok;
        let mut next = Vec::new();
        for (c, g) in groups.iter().enumerate() {
            if new_mass[c] > 0.0 {
                let scale = new_mass[c] / mass[c];
                for &i in g.iter() {
                    weights[i] *= scale;
                    if weights[i] > 0.0 {
                        next.push(i);
                    }
                }
            } else {
                for &i in g.iter() {
                    weights[i] = 0.0;
                }
            }
        }
        if !ok && next.len() == active.len() {
            // Nothing was eliminated; keep the current active set.
            break;
        }
        active = next;
    }
    if active.len() > 1 {
        // Drop rows that are affinely dependent on the survivors.
        let pts: Vec<&[f64]> = active.iter().map(|&i| matrix.row(i)).collect();
        let mut w: Vec<f64> = active.iter().map(|&i| weights[i]).collect();
        reduce(&pts, &mut w, z, derive_seed(seed, &[round + 1]));
        for (&i, wi) in active.iter().zip(&w) {
            weights[i] = *wi;
        }
        active.retain(|&i| weights[i] > 0.0);
    }
    let pairs: Vec<(usize, f64)> = active.iter().map(|&i| (i, weights[i])).collect();
    let mut out = Coreset::from_pairs(pairs, Backend::Caratheodory);
    out.flagged = flagged;
    finish(matrix, out)
}

/// Classic Caratheodory elimination on `points` (in `R^z`) with positive
/// `weights`, in place, until at most `z + 1` weights are nonzero and the
/// survivors are affinely independent.
///
/// Returns `false` when no dependence direction could be found even after a
/// seeded reshuffle; the remaining weights are then left as they are.
pub(crate) fn reduce(points: &[&[f64]], weights: &mut [f64], z: usize, seed: u64) -> bool {
    let mut active: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut reshuffled = false;
    let mut a = vec![0.0; z * (z + 1)];
    while active.len() > 1 {
        let k = active.len().min(z + 2);
        let s = &active[..k];
        let base = points[s[0]];
        for r in 0..z {
            for c in 0..k - 1 {
                a[r * (k - 1) + c] = points[s[c + 1]][r] - base[r];
            }
        }
        let Some(tail) = null_vector(&a[..z * (k - 1)], z, k - 1, PIVOT_TOL) else {
            if k <= z + 1 {
                break;
            }
            if reshuffled {
                return false;
            }
            reshuffled = true;
            active.shuffle(&mut rng_from_seed(seed));
            continue;
        };
        let mut alpha = Vec::with_capacity(k);
        alpha.push(-tail.iter().sum::<f64>());
        alpha.extend_from_slice(&tail);
        if !alpha.iter().any(|&x| x > 0.0) {
            alpha.iter_mut().for_each(|x| *x = -*x);
        }
        // Largest step keeping all weights nonnegative; ties to the lowest slot.
        let mut theta = f64::INFINITY;
        let mut out = usize::MAX;
        for (k, &al) in alpha.iter().enumerate() {
            if al > 0.0 {
                let r = weights[s[k]] / al;
                if r < theta {
                    theta = r;
                    out = k;
                }
            }
        }
        if out == usize::MAX {
            if reshuffled {
                return false;
            }
            reshuffled = true;
            active.shuffle(&mut rng_from_seed(seed));
            continue;
        }
        for (k, &al) in alpha.iter().enumerate() {
            let w = &mut weights[s[k]];
            *w = (*w - theta * al).max(0.0);
        }
        weights[s[out]] = 0.0;
        active.retain(|&i| weights[i] > 0.0);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::linalg::sq_norm;

    fn bound(m: &RowMatrix) -> f64 {
        1e-9 * (1.0 + sq_norm(&m.row_sum()))
    }

    #[test]
    fn identical_rows_collapse_to_one() {
        let m = identical(5, &[0.3, 1.7]);
        let c = caratheodory(&m, 1);
        assert_eq!(c.len(), 1);
        assert!((c.weights[0] - 5.0).abs() < 1e-12);
        assert!(c.vsum_error < 1e-20);
    }

    #[test]
    fn no_elimination_needed() {
        let m = RowMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.5, 0.1], vec![3.0, 0.0]]).unwrap();
        let c = caratheodory(&m, 1);
        assert!(c.len() <= 3);
        assert_eq!(c.vsum_error, 0.0);
    }

    #[test]
    fn seeded_64_by_8() {
        let m = random_matrix(64, 8, 64);
        let c = caratheodory(&m, 2);
        assert!(c.len() <= 9);
        // exact-sum oracle
        let full = m.row_sum();
        let mut err = 0.0;
        for j in 0..8 {
            let part: f64 = c.iter().map(|(i, w)| w * m.get(i, j)).sum();
            err += (full[j] - part).powi(2);
        }
        assert!(err <= bound(&m), "{err}");
        assert!(!c.flagged);
    }

    #[test]
    fn large_and_rank_deficient() {
        // rows lie on a 2-dimensional affine subspace of R^6
        let base = random_matrix(3000, 2, 8);
        let rows: Vec<Vec<f64>> = base
            .rows()
            .iter()
            .map(|r| vec![r[0], r[1], r[0] + r[1], 2.0 * r[0], 0.5, r[1] - r[0]])
            .collect();
        let m = RowMatrix::from_rows(rows).unwrap();
        let c = caratheodory(&m, 3);
        assert!(c.len() <= 7);
        assert!(c.vsum_error <= bound(&m), "{}", c.vsum_error);
    }

    #[test]
    fn one_column() {
        let m = random_matrix(500, 1, 4);
        let c = caratheodory(&m, 0);
        assert!(c.len() <= 2);
        assert!(c.vsum_error <= bound(&m));
    }
}

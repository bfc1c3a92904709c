//! Small dense kernels. Matrices are row-major `&[f64]` slices.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Solve `a x = b` for square `a` (n×n) by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `rel_tol` times the
/// largest absolute entry of `a`.
pub(crate) fn solve(a: &[f64], b: &[f64], n: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tol = rel_tol * scale;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in r + 1..n {
            s -= m[r * n + c] * x[c];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// A nonzero vector `x` with `a x ≈ 0` for a `rows × cols` matrix with
/// `cols > rows`, or `None` if elimination breaks down.
///
/// Reduces `a` to row echelon form with partial pivoting, scanning columns
/// left to right; the first column without a usable pivot becomes the free
/// variable (set to 1), all later free variables are 0.
pub(crate) fn null_vector(a: &[f64], rows: usize, cols: usize, rel_tol: f64) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        let mut x = vec![0.0; cols];
        x[0] = 1.0;
        return Some(x);
    }
    let tol = rel_tol * scale;
    let mut pivot_cols = Vec::with_capacity(rows);
    let mut free = None;
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            if free.is_none() {
                free = Some(col);
            }
            break;
        }
        let mut piv = r;
        for i in r + 1..rows {
            if m[i * cols + col].abs() > m[piv * cols + col].abs() {
                piv = i;
            }
        }
        if m[piv * cols + col].abs() <= tol {
            if free.is_none() {
                free = Some(col);
            }
            continue;
        }
        if piv != r {
            for c in 0..cols {
                m.swap(r * cols + c, piv * cols + c);
            }
        }
        let p = m[r * cols + col];
        for i in r + 1..rows {
            let f = m[i * cols + col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..cols {
                m[i * cols + c] -= f * m[r * cols + c];
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free = free?;
    let mut x = vec![0.0; cols];
    x[free] = 1.0;
    // Back substitution over the pivot rows; free columns other than `free` stay 0.
    for (row, &pc) in pivot_cols.iter().enumerate().rev() {
        let mut s = 0.0;
        for c in pc + 1..cols {
            s -= m[row * cols + c] * x[c];
        }
        x[pc] = s / m[row * cols + pc];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

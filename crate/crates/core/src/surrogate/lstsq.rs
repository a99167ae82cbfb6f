//! Least squares by Householder QR with column-norm pivoting.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Columns whose pivot falls below this fraction of the leading pivot make
/// the system rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Minimises `‖D c - y‖² + ridge ‖c‖²`.
///
/// Columns are equilibrated to unit norm before factorisation. With
/// `ridge == 0` an underdetermined or numerically rank-deficient system is
/// an error; with `ridge > 0` the augmented system always has full rank.
pub fn solve(design: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if rows == 0 {
        return Err(Error::NoSamples);
    }
    if ridge == 0.0 && rows < cols {
        return Err(Error::RankDeficient);
    }
    let scales: Vec<f64> = design
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();

    let aug_rows = if ridge > 0.0 { rows + cols } else { rows };
    let mut a = DMatrix::<f64>::zeros(aug_rows, cols);
    let mut b = DVector::<f64>::zeros(aug_rows);
    for j in 0..cols {
        for i in 0..rows {
            a[(i, j)] = design[(i, j)] / scales[j];
        }
        if ridge > 0.0 {
            a[(rows + j, j)] = ridge.sqrt() / scales[j];
        }
    }
    b.rows_mut(0, rows).copy_from(y);

    let (z, perm, diag) = householder_pivoted(a, b);
    if ridge == 0.0 {
        let lead = diag[0].abs();
        let last = diag[cols - 1].abs();
        if last.is_nan() || last <= RANK_TOLERANCE * lead {
            return Err(Error::RankDeficient);
        }
    }
    let mut coeffs = DVector::<f64>::zeros(cols);
    for (k, &j) in perm.iter().enumerate() {
        coeffs[j] = z[k] / scales[j];
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::RankDeficient);
    }
    Ok(coeffs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

// Returns (solution in pivoted order, column permutation, R diagonal).
fn householder_pivoted(a: DMatrix<f64>, b: DVector<f64>) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    // Column-major storage; column j is data[j * rows..(j + 1) * rows].
    let mut data = a.as_slice().to_vec();
    let mut b = b.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut diag = vec![0.0; cols];
    // Trailing squared column norms, downdated each step and recomputed
    // when cancellation would make them inaccurate.
    let mut norms: Vec<f64> = (0..cols)
        .map(|j| {
            dot(
                &data[j * rows..(j + 1) * rows],
                &data[j * rows..(j + 1) * rows],
            )
        })
        .collect();
    let mut exact = norms.clone();

    for i in 0..k {
        let mut piv = i;
        for j in (i + 1)..cols {
            if norms[j] > norms[piv] {
                piv = j;
            }
        }
        if piv != i {
            for r in 0..rows {
                data.swap(i * rows + r, piv * rows + r);
            }
            perm.swap(i, piv);
            norms.swap(i, piv);
            exact.swap(i, piv);
        }

        let col = &data[i * rows + i..(i + 1) * rows];
        let norm = dot(col, col).sqrt();
        if norm == 0.0 {
            // Everything left is zero.
            break;
        }
        let x0 = data[i * rows + i];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place; H = I - 2 v vᵀ / vᵀv.
        data[i * rows + i] = x0 - alpha;
        let (left, right) = data.split_at_mut((i + 1) * rows);
        let v = &left[i * rows + i..];
        let vtv = dot(v, v);
        if vtv > 0.0 {
            for j in (i + 1)..cols {
                let c = &mut right[(j - i - 1) * rows + i..(j - i) * rows];
                let s = 2.0 * dot(v, c) / vtv;
                for (cr, vr) in c.iter_mut().zip(v) {
                    *cr -= s * vr;
                }
                let lead = c[0];
                norms[j] -= lead * lead;
                if norms[j] <= 1e-8 * exact[j] {
                    norms[j] = dot(&c[1..], &c[1..]);
                    exact[j] = norms[j];
                }
            }
            let bv = &mut b[i..];
            let s = 2.0 * dot(v, bv) / vtv;
            for (br, vr) in bv.iter_mut().zip(v) {
                *br -= s * vr;
            }
        }
        diag[i] = alpha;
    }

    // k == cols: short systems are rejected unless ridge rows make them tall.
    let mut z = vec![0.0; cols];
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in (i + 1)..k {
            s -= data[j * rows + i] * z[j];
        }
        z[i] = s / diag[i];
    }
    (z, perm, diag)
}

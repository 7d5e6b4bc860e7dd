//! Dense least squares by Householder QR, enough for the IRLS inner solve.

/// Relative size below which a diagonal entry of R marks a column as a
/// linear combination of the columns before it.
pub(crate) const RANK_TOL: f64 = 1e-7;

/// Solves `min ||A x - b||` for a column-major `n x p` matrix `A`.
///
/// Returns `Err(j)` for the first column whose residual norm after
/// projecting out columns `0..j` is below `RANK_TOL` times its own norm.
pub(crate) fn least_squares(
    a: &[f64],
    n: usize,
    p: usize,
    b: &[f64],
) -> Result<Vec<f64>, usize> {
    debug_assert_eq!(a.len(), n * p);
    debug_assert_eq!(b.len(), n);
    if n < p {
        return Err(n);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let mut rdiag = vec![0.0; p];

    for j in 0..p {
        let col_norm = norm(&a[j * n..(j + 1) * n]);
        let (done, rest) = a.split_at_mut((j + 1) * n);
        let col = &mut done[j * n..];
        let sub_norm = norm(&col[j..]);
        if col_norm == 0.0 || sub_norm <= RANK_TOL * col_norm {
            return Err(j);
        }
        let alpha = if col[j] > 0.0 { -sub_norm } else { sub_norm };
        // v = x - alpha e_1, stored in place of the column
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        rdiag[j] = alpha;

        for k in (j + 1)..p {
            let other = &mut rest[(k - j - 1) * n..(k - j) * n];
            let dot: f64 = col[j..].iter().zip(&other[j..]).map(|(v, o)| v * o).sum();
            let f = 2.0 * dot / vnorm2;
            for (o, v) in other[j..].iter_mut().zip(&col[j..]) {
                *o -= f * v;
            }
        }
        let dot: f64 = col[j..].iter().zip(&b[j..]).map(|(v, o)| v * o).sum();
        let f = 2.0 * dot / vnorm2;
        for (o, v) in b[j..].iter_mut().zip(&col[j..]) {
            *o -= f * v;
        }
    }

    // back substitution on the upper triangle; R[i][k] = a[k*n + i] for k > i
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in (i + 1)..p {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / rdiag[i];
    }
    Ok(x)
}

fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [[2, 1], [1, 3]] x = [3, 5] -> x = [0.8, 1.4]
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = least_squares(&a, 2, 2, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn overdetermined_fit_of_a_line() {
        // y = 1 + 2 t exactly
        let t = [0.0, 1.0, 2.0, 3.0];
        let mut a = vec![1.0; 4];
        a.extend_from_slice(&t);
        let y: Vec<f64> = t.iter().map(|v| 1.0 + 2.0 * v).collect();
        let x = least_squares(&a, 4, 2, &y).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_collinear_column() {
        let a = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
        assert_eq!(least_squares(&a, 3, 3, &[1.0, 2.0, 3.0]), Err(2));
        let zero = [1.0, 1.0, 0.0, 0.0];
        assert_eq!(least_squares(&zero, 2, 2, &[1.0, 2.0]), Err(1));
    }
}

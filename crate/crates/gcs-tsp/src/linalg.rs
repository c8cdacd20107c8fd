//! Small dense linear-algebra helpers shared by the model and the conic layer.
//!
//! Everything here operates on row-major `Vec<Vec<f64>>` matrices of the sizes
//! that occur in instances (dimensions up to a few dozen), so no external
//! matrix library is warranted.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, x)).collect()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Orthonormal basis of the null space of `c` (rows of length `dim`), via
/// row-reduction with partial pivoting followed by Gram-Schmidt. Returns the
/// basis as columns (each `Vec<f64>` has length `dim`).
pub fn null_space(c: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    if c.is_empty() {
        return (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    let mut rows: Vec<Vec<f64>> = c.to_vec();
    let m = rows.len();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..dim {
        if r == m {
            break;
        }
        let (best, best_val) = (r..m)
            .map(|i| (i, rows[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best_val < 1e-12 {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][col];
        for k in col..dim {
            rows[r][k] /= p;
        }
        for i in 0..m {
            if i != r {
                let f = rows[i][col];
                if f != 0.0 {
                    for k in col..dim {
                        rows[i][k] -= f * rows[r][k];
                    }
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free_cols: Vec<usize> = (0..dim).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::with_capacity(free_cols.len());
    for &f in &free_cols {
        let mut v = vec![0.0; dim];
        v[f] = 1.0;
        for (pi, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -rows[pi][f];
        }
        basis.push(v);
    }
    // Gram-Schmidt so radii measured in the reduced coordinates are isometric.
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for mut v in basis {
        for u in &ortho {
            let p = dot(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= p * ui;
            }
        }
        let n = norm2(&v);
        if n > 1e-10 {
            for vi in &mut v {
                *vi /= n;
            }
            ortho.push(v);
        }
    }
    ortho
}

/// Minimum-norm solution of `c x = d` by normal equations on the row space,
/// suitable for the small, well-scaled systems instances contain. Returns
/// `None` if the system is inconsistent beyond `tol`.
pub fn least_squares_solution(c: &[Vec<f64>], d: &[f64], dim: usize, tol: f64) -> Option<Vec<f64>> {
    if c.is_empty() {
        return Some(vec![0.0; dim]);
    }
    // Solve via row-reduction of the augmented system.
    let m = c.len();
    let mut aug: Vec<Vec<f64>> = c
        .iter()
        .zip(d)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut r = 0;
    let mut pivot_cols = Vec::new();
    for col in 0..dim {
        if r == m {
            break;
        }
        let (best, best_val) = (r..m)
            .map(|i| (i, aug[i][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best_val < 1e-12 {
            continue;
        }
        aug.swap(r, best);
        let p = aug[r][col];
        for k in col..=dim {
            aug[r][k] /= p;
        }
        for i in 0..m {
            if i != r {
                let f = aug[i][col];
                if f != 0.0 {
                    for k in col..=dim {
                        aug[i][k] -= f * aug[r][k];
                    }
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    // Inconsistent row: all-zero coefficients with nonzero rhs.
    for row in aug.iter().skip(r) {
        if row[dim].abs() > tol {
            return None;
        }
    }
    let mut x = vec![0.0; dim];
    for (pi, &pc) in pivot_cols.iter().enumerate() {
        x[pc] = aug[pi][dim];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_identity_is_empty() {
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(null_space(&c, 2).is_empty());
    }

    #[test]
    fn null_space_of_single_row_is_orthonormal() {
        let c = vec![vec![1.0, 1.0, 0.0]];
        let basis = null_space(&c, 3);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!((norm2(v) - 1.0).abs() < 1e-9);
            assert!(dot(v, &c[0]).abs() < 1e-9);
        }
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-9);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let c = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let d = vec![3.0, 4.0];
        let x = least_squares_solution(&c, &d, 2, 1e-9).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-9 && (x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn least_squares_rejects_inconsistent_rows() {
        let c = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let d = vec![0.0, 1.0];
        assert!(least_squares_solution(&c, &d, 2, 1e-9).is_none());
    }
}

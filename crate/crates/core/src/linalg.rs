//! Small dense helpers on top of nalgebra: determinants, adjugates and
//! sorted singular values.

use nalgebra::DMatrix;

/// Largest size for which the adjugate is formed from cofactors.
pub const COFACTOR_LIMIT: usize = 7;

pub fn det(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().determinant()
}

fn minor(m: &DMatrix<f64>, row: usize, col: usize) -> DMatrix<f64> {
    m.clone().remove_row(row).remove_column(col)
}

/// Classical adjoint, `adj(M) M = M adj(M) = det(M) I`, defined for singular `M` too.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(m.is_square(), "adjugate of a non-square matrix");
    let n = m.nrows();
    match n {
        0 => DMatrix::zeros(0, 0),
        1 => DMatrix::from_element(1, 1, 1.0),
        _ if n <= COFACTOR_LIMIT => DMatrix::from_fn(n, n, |i, j| {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // transpose of the cofactor matrix
            sign * det(&minor(m, j, i))
        }),
        _ => adjugate_svd(m),
    }
}

/// adj(U Σ Vᵀ) = det(U) det(V) · V adj(Σ) Uᵀ, with adj(Σ)ᵢᵢ = Πⱼ≠ᵢ σⱼ.
fn adjugate_svd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let s = &svd.singular_values;
    let sign = det(&u) * det(&v_t);
    let diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (0..n).filter(|&k| k != i).map(|k| s[k]).product()
        } else {
            0.0
        }
    });
    v_t.transpose() * diag * u.transpose() * sign
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// σ_max / σ_min, or +∞ when the matrix is numerically rank deficient.
pub fn condition_number(sigma: &[f64]) -> f64 {
    match (sigma.first(), sigma.last()) {
        (Some(&hi), Some(&lo)) => {
            if hi == 0.0 || lo <= hi * f64::EPSILON {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        _ => f64::INFINITY,
    }
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(n: usize, seed: u64) -> DMatrix<f64> {
        // cheap deterministic fill, good enough for algebraic identities
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        DMatrix::from_fn(n, n, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn adjugate_identity_holds() {
        for n in 1..=9 {
            let m = sample(n, n as u64);
            let d = det(&m);
            let prod = adjugate(&m) * &m;
            let expect = DMatrix::<f64>::identity(n, n) * d;
            assert!((prod - expect).amax() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn adjugate_of_singular_matrix_is_finite() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 5.0]);
        let adj = adjugate(&m);
        assert!(adj.iter().all(|v| v.is_finite()));
        assert!((&adj * &m).amax() < 1e-12);
        assert!(adj.amax() > 0.0);
    }

    #[test]
    fn diagonal_adjugate() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let adj = adjugate(&m);
        assert_relative_eq!(adj, DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn svd_route_matches_cofactors() {
        let m = sample(6, 42);
        assert!((adjugate_svd(&m) - adjugate(&m)).amax() < 1e-10);
    }

    #[test]
    fn singular_values_sorted() {
        let m = DMatrix::from_row_slice(3, 2, &[0.0, 5.0, 1.0, 0.0, 0.0, 0.0]);
        let s = singular_values(&m);
        assert_relative_eq!(s[0], 5.0, epsilon = 1e-14);
        assert_relative_eq!(s[1], 1.0, epsilon = 1e-14);
        assert_eq!(condition_number(&[5.0, 1.0]), 5.0);
        assert_eq!(condition_number(&[5.0, 0.0]), f64::INFINITY);
    }
}

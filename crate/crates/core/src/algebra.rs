//! Coordinates on su(N) ≃ ℝ^{N²−1}.
//!
//! The basis is the generalized Gell-Mann set `{λ_a}` of Hermitian traceless
//! matrices with `tr(λ_a λ_b) = 2δ_ab`, ordered as: symmetric off-diagonal
//! `E_jk + E_kj`, antisymmetric off-diagonal `−iE_jk + iE_kj` (pairs `j < k`
//! in lexicographic order for both), then diagonal
//! `√(2/(l(l+1))) (Σ_{j<l} E_jj − l E_ll)` for `l = 1 … N−1`.
//! For N = 2 this is the Pauli triple `(σ_x, σ_y, σ_z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::CMat;

/// A basis element with its human-readable label.
#[derive(Debug, Clone)]
pub struct BasisElement {
    pub label: String,
    pub matrix: CMat,
}

pub fn gell_mann_basis(n: usize) -> Vec<BasisElement> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let mut out = Vec::with_capacity(n * n - 1);
    for &(j, k) in &pairs {
        let mut m = CMat::zeros(n, n);
        m[(j, k)] = one;
        m[(k, j)] = one;
        out.push(BasisElement {
            label: format!("sym({j},{k})"),
            matrix: m,
        });
    }
    for &(j, k) in &pairs {
        let mut m = CMat::zeros(n, n);
        m[(j, k)] = -i;
        m[(k, j)] = i;
        out.push(BasisElement {
            label: format!("asym({j},{k})"),
            matrix: m,
        });
    }
    for l in 1..n {
        let s = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(n, n);
        for j in 0..l {
            m[(j, j)] = Complex64::new(s, 0.0);
        }
        m[(l, l)] = Complex64::new(-s * l as f64, 0.0);
        out.push(BasisElement {
            label: format!("diag({l})"),
            matrix: m,
        });
    }
    out
}

/// `(‖X† + X‖, |tr X|)`.
pub fn algebra_defects(x: &CMat) -> (f64, f64) {
    ((x.adjoint() + x).norm(), x.trace().norm())
}

/// Coordinates `x_a = ½ tr(−iX λ_a)` of an anti-Hermitian traceless matrix.
pub fn sun_coordinates(x: &CMat, tol: f64) -> Result<Vec<f64>> {
    let (anti_hermitian, trace) = algebra_defects(x);
    if anti_hermitian > tol || trace > tol {
        return Err(Error::NotInAlgebra { anti_hermitian, trace });
    }
    let h = x * -Complex64::i();
    Ok(gell_mann_basis(x.nrows())
        .iter()
        .map(|b| 0.5 * (&h * &b.matrix).trace().re)
        .collect())
}

/// Inverse of [`sun_coordinates`]: `X = i Σ x_a λ_a`.
pub fn from_sun_coordinates(coords: &[f64], n: usize) -> Result<CMat> {
    if coords.len() != n * n - 1 {
        return Err(Error::DimensionMismatch(coords.len(), n * n - 1));
    }
    let h = gell_mann_basis(n)
        .iter()
        .zip(coords)
        .fold(CMat::zeros(n, n), |acc, (b, &x)| {
            acc + &b.matrix * Complex64::new(x, 0.0)
        });
    Ok(h * Complex64::i())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn basis_is_trace_orthonormal() {
        for n in 2..=5 {
            let b = gell_mann_basis(n);
            assert_eq!(b.len(), n * n - 1);
            for (a, ea) in b.iter().enumerate() {
                assert!((ea.matrix.adjoint() - &ea.matrix).norm() < 1e-15);
                assert!(ea.matrix.trace().norm() < 1e-15);
                for (c, ec) in b.iter().enumerate() {
                    let t = (&ea.matrix * &ec.matrix).trace();
                    let expect = if a == c { 2.0 } else { 0.0 };
                    assert_abs_diff_eq!(t.re, expect, epsilon = 1e-14);
                    assert_abs_diff_eq!(t.im, 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn pauli_case() {
        let i = Complex64::i();
        let x = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![-i * 0.5, i * 0.5]));
        let coords = sun_coordinates(&x, 1e-12).unwrap();
        assert_eq!(coords.len(), 3);
        assert_abs_diff_eq!(coords[0], 0.0);
        assert_abs_diff_eq!(coords[1], 0.0);
        assert_abs_diff_eq!(coords[2], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_maps_to_zero() {
        let coords = sun_coordinates(&CMat::zeros(3, 3), 1e-12).unwrap();
        assert!(coords.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_non_algebra_elements() {
        let h = CMat::identity(2, 2);
        assert!(matches!(sun_coordinates(&h, 1e-9), Err(Error::NotInAlgebra { .. })));
    }

    proptest! {
        #[test]
        fn coordinate_round_trip(raw in prop::collection::vec(-2.0f64..2.0, 15)) {
            let x = from_sun_coordinates(&raw, 4).unwrap();
            let back = sun_coordinates(&x, 1e-12).unwrap();
            let rebuilt = from_sun_coordinates(&back, 4).unwrap();
            prop_assert!((rebuilt - x).norm() < 1e-14);
            for (a, b) in raw.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }
}

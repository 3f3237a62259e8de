//! Dense complex linear algebra for two-qubit operators and for the
//! spin⊗phonon operators of the ion-trap model, plus Pauli-string algebra.
//!
//! Two-qubit operators use the stack-allocated [`Mat4`]; operators whose
//! dimension is only known at run time use [`CMatrix`]. Qubit 1 is the most
//! significant tensor factor, so `kron2(a, b)` acts with `a` on qubit 1.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{validation, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance used for exact algebraic identities (Hermiticity, unitarity).
pub const ALGEBRA_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// `σ_φ = σ_x cos φ + σ_y sin φ`.
pub fn sigma_phi(phi: f64) -> Mat2 {
    Mat2::new(
        ZERO,
        C64::from_polar(1.0, -phi),
        C64::from_polar(1.0, phi),
        ZERO,
    )
}

/// Reduce an angle to its representative in `[0, 2π)`.
pub fn canonical_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = canonical_angle(a - b);
    d.min(TAU - d)
}

/// Axis of a transverse Pauli operator in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliAxis {
    phi: f64,
}

impl PauliAxis {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return validation(format!("Pauli axis angle must be finite, got {phi}"));
        }
        Ok(Self {
            phi: canonical_angle(phi),
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn matrix(&self) -> Mat2 {
        sigma_phi(self.phi)
    }
}

/// Kronecker product of two single-qubit operators.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Kronecker product of dynamically sized operators.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

pub fn to_dynamic(m: &Mat4) -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

/// Convert a 4×4 dynamic matrix back to the fixed-size type.
pub fn to_mat4(m: &CMatrix) -> Result<Mat4> {
    if m.shape() != (4, 4) {
        return validation(format!("expected a 4x4 operator, got {:?}", m.shape()));
    }
    Ok(Mat4::from_fn(|r, c| m[(r, c)]))
}

/// Norm and structure checks shared by fixed and dynamic operators.
pub trait OperatorExt {
    /// `√Σ|m_ij|²`.
    fn frobenius(&self) -> f64;
    /// `‖U†U − I‖_F`.
    fn unitarity_defect(&self) -> f64;
    /// `‖H − H†‖_F`.
    fn hermiticity_defect(&self) -> f64;
    fn all_finite(&self) -> bool;
}

impl OperatorExt for Mat4 {
    fn frobenius(&self) -> f64 {
        self.norm()
    }

    fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * self - Mat4::identity()).norm()
    }

    fn hermiticity_defect(&self) -> f64 {
        (self - self.adjoint()).norm()
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl OperatorExt for CMatrix {
    fn frobenius(&self) -> f64 {
        self.norm()
    }

    fn unitarity_defect(&self) -> f64 {
        let n = self.ncols();
        (self.adjoint() * self - CMatrix::identity(n, n)).norm()
    }

    fn hermiticity_defect(&self) -> f64 {
        (self - self.adjoint()).norm()
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Frobenius norm of a two-qubit operator.
pub fn frobenius_norm(m: &Mat4) -> f64 {
    m.frobenius()
}

/// `exp(i·scale·H)` for a Hermitian generator `H`.
///
/// Involutory generators (`H² = I`, e.g. every Pauli string) use the exact
/// identity `cos(s)·I + i·sin(s)·H`; everything else goes through the
/// Hermitian eigendecomposition `V·diag(e^{i·s·λ})·V†`, whose error is set
/// by the eigensolver (a few ulps times `‖H‖`) rather than by a truncation.
pub fn mat_exp_hermitian_generator(h: &CMatrix, scale: f64) -> Result<CMatrix> {
    let (rows, cols) = h.shape();
    if rows != cols || rows == 0 {
        return validation(format!(
            "generator must be square and non-empty, got {rows}x{cols}"
        ));
    }
    if !h.all_finite() || !scale.is_finite() {
        return validation("generator and scale must be finite");
    }
    let size = h.frobenius().max(1.0);
    if h.hermiticity_defect() > ALGEBRA_TOL * size {
        return validation(format!(
            "generator is not Hermitian (defect {:.3e})",
            h.hermiticity_defect()
        ));
    }
    let id = CMatrix::identity(rows, rows);
    if (h * h - &id).norm() <= ALGEBRA_TOL * size {
        let (s, c) = scale.sin_cos();
        return Ok(id * C64::from(c) + h * C64::new(0.0, s));
    }
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let herm = (h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(herm);
    let phases = eig
        .eigenvalues
        .map(|lambda| C64::from_polar(1.0, scale * lambda));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(scaled * v.adjoint())
}

/// Fixed-size convenience wrapper around [`mat_exp_hermitian_generator`].
pub fn expi_hermitian4(h: &Mat4, scale: f64) -> Result<Mat4> {
    to_mat4(&mat_exp_hermitian_generator(&to_dynamic(h), scale)?)
}

/// Closed form of a product `σ(φ_1)·σ(φ_2)···σ(φ_m)` of transverse Paulis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PauliProduct {
    /// `exp(i·arg·σ_z)`.
    ZExponential(f64),
    /// `σ(arg)`.
    Sigma(f64),
}

impl PauliProduct {
    pub fn matrix(&self) -> Mat2 {
        match *self {
            PauliProduct::ZExponential(a) => Mat2::new(
                C64::from_polar(1.0, a),
                ZERO,
                ZERO,
                C64::from_polar(1.0, -a),
            ),
            PauliProduct::Sigma(a) => sigma_phi(a),
        }
    }
}

/// Reduce `σ(φ_1)···σ(φ_m)` (leftmost factor first in the list).
///
/// With `S = Σ_k (−1)^k φ_k` (k counted from 1) an even-length product is
/// `exp(i·S·σ_z)` and an odd-length one is `σ(−S)`.
pub fn pauli_string_product(phis: &[f64]) -> Result<PauliProduct> {
    if phis.is_empty() {
        return validation("Pauli string must contain at least one factor");
    }
    let alternating: f64 = phis
        .iter()
        .enumerate()
        .map(|(k, &p)| if k % 2 == 0 { -p } else { p })
        .sum();
    Ok(if phis.len().is_multiple_of(2) {
        PauliProduct::ZExponential(alternating)
    } else {
        PauliProduct::Sigma(-alternating)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn xx() -> Mat4 {
        kron2(&sigma_x(), &sigma_x())
    }

    #[test]
    fn exp_zero_scale_is_identity() {
        let u = expi_hermitian4(&xx(), 0.0).unwrap();
        assert!((u - Mat4::identity()).norm() < 1e-15);
    }

    #[test]
    fn exp_pi_is_minus_identity() {
        let u = expi_hermitian4(&xx(), PI).unwrap();
        assert!((u + Mat4::identity()).norm() < 1e-12);
    }

    #[test]
    fn exp_half_pi_is_i_xx() {
        let u = expi_hermitian4(&xx(), FRAC_PI_2).unwrap();
        assert!((u - xx() * I).norm() < 1e-12);
    }

    #[test]
    fn eigen_route_matches_series() {
        // non-involutory generator: a weighted sum of commuting and
        // non-commuting terms
        let h = xx() * C64::from(0.7)
            + kron2(&sigma_z(), &Mat2::identity()) * C64::from(0.3)
            + kron2(&Mat2::identity(), &sigma_y()) * C64::from(-1.1);
        let u = expi_hermitian4(&h, 0.37).unwrap();
        // Taylor series with enough terms for ‖0.37·H‖ < 1
        let a = h * C64::new(0.0, 0.37);
        let mut term = Mat4::identity();
        let mut sum = Mat4::identity();
        for k in 1..40 {
            term = term * a / C64::from(k as f64);
            sum += term;
        }
        assert!((u - sum).norm() < 1e-13);
        assert!(u.unitarity_defect() < 1e-13);
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let mut h = to_dynamic(&xx());
        h[(0, 1)] = C64::new(0.0, 1.0);
        assert!(mat_exp_hermitian_generator(&h, 1.0).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&Mat4::zeros()), 0.0);
        assert!((frobenius_norm(&Mat4::identity()) - 2.0).abs() < 1e-15);
        assert!((frobenius_norm(&(xx() * I)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pauli_string_examples() {
        let (a, b, c) = (0.4, 1.3, -2.2);
        match pauli_string_product(&[a, b]).unwrap() {
            PauliProduct::ZExponential(e) => assert!((e - (-(a - b))).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        match pauli_string_product(&[a, b, c]).unwrap() {
            PauliProduct::Sigma(s) => assert!((s - (a - b + c)).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            pauli_string_product(&[0.3]).unwrap(),
            PauliProduct::Sigma(0.3)
        );
        assert!(pauli_string_product(&[]).is_err());
    }

    #[test]
    fn pauli_axis_is_canonical() {
        let ax = PauliAxis::new(-0.5).unwrap();
        assert!((ax.phi() - (TAU - 0.5)).abs() < 1e-15);
        assert!(PauliAxis::new(f64::NAN).is_err());
        assert!((ax.matrix() - sigma_phi(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn sigma_phi_is_cos_sin_combination() {
        let phi: f64 = 0.77;
        let expect = sigma_x() * C64::from(phi.cos()) + sigma_y() * C64::from(phi.sin());
        assert!((sigma_phi(phi) - expect).norm() < 1e-15);
    }
}

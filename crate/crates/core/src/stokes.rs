//! Classical polarization states.
//!
//! Stokes parameters use the halved convention S_μ = ½ A†σ_μA, so a single
//! right-circular photon has S = (½, 0, 0, ½). The Jones basis is circular
//! with a = R, b = L and σ₃ = diag(1, −1).

use nalgebra::{Matrix2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PolarAngles;
use crate::linalg::{pauli, C64, ZERO};

/// Default algebraic tolerance for validity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    pub fn from_array(s: [f64; 4]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    pub fn as_vector4(&self) -> Vector4<f64> {
        Vector4::new(self.s0, self.s1, self.s2, self.s3)
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// The polarization vector 𝐒 = (s1, s2, s3).
    pub fn polarization(&self) -> Vector3<f64> {
        Vector3::new(self.s1, self.s2, self.s3)
    }

    pub fn get(&self, mu: usize) -> f64 {
        self.to_array()[mu]
    }
}

/// Hermitian 2×2 coherency matrix Ψ = ⟨AA†⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencyMatrix(pub Matrix2<C64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub a: C64,
    pub b: C64,
}

impl JonesVector {
    pub fn new(a: C64, b: C64) -> Self {
        Self { a, b }
    }

    /// Relative phase δ = arg(a/b).
    pub fn relative_phase(&self) -> f64 {
        (self.a / self.b).arg()
    }

    pub fn coherency(&self) -> CoherencyMatrix {
        let a = self.a;
        let b = self.b;
        CoherencyMatrix(Matrix2::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationDecomposition {
    pub p: f64,
    /// `None` when p = 0 and the direction is undefined.
    pub direction: Option<PolarAngles>,
    pub intensity: f64,
}

impl PolarizationDecomposition {
    pub fn polarized_part(&self) -> StokesVector {
        match self.direction {
            Some(dir) => {
                let n = dir.unit_vector() * self.intensity;
                StokesVector::new(self.intensity, n.x, n.y, n.z)
            }
            None => StokesVector::new(self.intensity, 0.0, 0.0, 0.0),
        }
    }

    pub fn unpolarized_part(&self) -> StokesVector {
        StokesVector::new(self.intensity, 0.0, 0.0, 0.0)
    }

    /// p·S_pol + (1 − p)·S_unpol.
    pub fn recompose(&self) -> StokesVector {
        let pol = self.polarized_part();
        let q = 1.0 - self.p;
        StokesVector::new(
            self.p * pol.s0 + q * self.intensity,
            self.p * pol.s1,
            self.p * pol.s2,
            self.p * pol.s3,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesValidity {
    pub valid: bool,
    pub s0_nonnegative: bool,
    /// |𝐒|² − s0²; positive means the vector lies outside the cone.
    pub excess: f64,
    /// True when |𝐒| = s0 within tolerance.
    pub boundary: bool,
    pub min_coherency_eigenvalue: f64,
}

pub fn stokes_from_jones_vector(v: &JonesVector) -> StokesVector {
    let a = v.a;
    let b = v.b;
    let cross = a.conj() * b;
    StokesVector::new(
        0.5 * (a.norm_sqr() + b.norm_sqr()),
        cross.re,
        cross.im,
        0.5 * (a.norm_sqr() - b.norm_sqr()),
    )
}

pub fn stokes_from_coherency(psi: &CoherencyMatrix) -> Result<StokesVector> {
    stokes_from_coherency_tol(psi, DEFAULT_TOL)
}

pub fn stokes_from_coherency_tol(psi: &CoherencyMatrix, tol: f64) -> Result<StokesVector> {
    let m = psi.0;
    let defect = (m[(0, 1)] - m[(1, 0)].conj())
        .norm()
        .max(m[(0, 0)].im.abs())
        .max(m[(1, 1)].im.abs());
    if defect > tol {
        return Err(Error::NotHermitian(defect));
    }
    let s: Vec<f64> = (0..4)
        .map(|mu| 0.5 * (m * pauli(mu)).trace().re)
        .collect();
    Ok(StokesVector::new(s[0], s[1], s[2], s[3]))
}

pub fn coherency_from_stokes(s: &StokesVector) -> Result<CoherencyMatrix> {
    coherency_from_stokes_tol(s, DEFAULT_TOL)
}

pub fn coherency_from_stokes_tol(s: &StokesVector, tol: f64) -> Result<CoherencyMatrix> {
    let report = validate_stokes_tol(s, tol);
    if !report.valid {
        return Err(Error::InvalidStokes(format!(
            "s0 = {}, |S|^2 - s0^2 = {:e}",
            s.s0, report.excess
        )));
    }
    Ok(coherency_unchecked(s))
}

fn coherency_unchecked(s: &StokesVector) -> CoherencyMatrix {
    let mut m = Matrix2::from_element(ZERO);
    for mu in 0..4 {
        m += pauli(mu) * C64::new(s.get(mu), 0.0);
    }
    CoherencyMatrix(m)
}

pub fn degree_of_polarization(s: &StokesVector) -> Result<f64> {
    if s.s0 <= 0.0 {
        return Err(Error::ZeroIntensity);
    }
    Ok(s.polarization().norm() / s.s0)
}

pub fn decompose_polarized_unpolarized(s: &StokesVector) -> Result<PolarizationDecomposition> {
    let p = degree_of_polarization(s)?;
    let direction = if p > 0.0 {
        Some(PolarAngles::from_vector(&s.polarization()))
    } else {
        None
    };
    Ok(PolarizationDecomposition {
        p,
        direction,
        intensity: s.s0,
    })
}

pub fn incoherent_superpose(a: &StokesVector, b: &StokesVector) -> StokesVector {
    StokesVector::new(a.s0 + b.s0, a.s1 + b.s1, a.s2 + b.s2, a.s3 + b.s3)
}

pub fn validate_stokes(s: &StokesVector) -> StokesValidity {
    validate_stokes_tol(s, DEFAULT_TOL)
}

pub fn validate_stokes_tol(s: &StokesVector, tol: f64) -> StokesValidity {
    let len2 = s.polarization().norm_squared();
    let s0sq = s.s0 * s.s0;
    let excess = len2 - s0sq;
    let finite = s.to_array().iter().all(|x| x.is_finite());
    let s0_nonnegative = s.s0 >= -tol;
    // Eigenvalues of Ψ = Σ s_μ σ_μ are s0 ± |𝐒|.
    let min_eig = s.s0 - len2.sqrt();
    let inside = len2 <= s0sq * (1.0 + tol) || min_eig >= -tol;
    let boundary = (len2.sqrt() - s.s0).abs() <= tol * s.s0.abs().max(1.0);
    StokesValidity {
        valid: finite && s0_nonnegative && inside,
        s0_nonnegative,
        excess,
        boundary,
        min_coherency_eigenvalue: min_eig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &StokesVector, b: [f64; 4]) -> bool {
        a.to_array()
            .iter()
            .zip(b.iter())
            .all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn jones_vector_examples() {
        let h = 1.0 / 2f64.sqrt();
        let r = JonesVector::new(C64::new(1.0, 0.0), ZERO);
        assert!(close(&stokes_from_jones_vector(&r), [0.5, 0.0, 0.0, 0.5]));
        let lin = JonesVector::new(C64::new(h, 0.0), C64::new(h, 0.0));
        assert!(close(&stokes_from_jones_vector(&lin), [0.5, 0.5, 0.0, 0.0]));
        let d = JonesVector::new(C64::new(h, 0.0), C64::new(0.0, h));
        assert!(close(&stokes_from_jones_vector(&d), [0.5, 0.0, 0.5, 0.0]));
    }

    #[test]
    fn coherency_route_agrees_with_jones_route() {
        let v = JonesVector::new(C64::new(0.3, -0.2), C64::new(-0.7, 0.4));
        let a = stokes_from_jones_vector(&v);
        let b = stokes_from_coherency(&v.coherency()).unwrap();
        assert!(close(&a, b.to_array()));
    }

    #[test]
    fn coherency_examples() {
        let id = CoherencyMatrix(Matrix2::identity());
        assert!(close(&stokes_from_coherency(&id).unwrap(), [1.0, 0.0, 0.0, 0.0]));
        let ones = CoherencyMatrix(Matrix2::from_element(C64::new(1.0, 0.0)));
        assert!(close(&stokes_from_coherency(&ones).unwrap(), [1.0, 1.0, 0.0, 0.0]));
        let back = coherency_from_stokes(&StokesVector::new(0.5, 0.0, 0.0, 0.5)).unwrap();
        assert!((back.0 - Matrix2::new(C64::new(1.0, 0.0), ZERO, ZERO, ZERO)).norm() < 1e-15);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CoherencyMatrix(Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            ZERO,
            C64::new(1.0, 0.0),
        ));
        assert!(matches!(stokes_from_coherency(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree_of_polarization(&StokesVector::new(1.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(degree_of_polarization(&StokesVector::new(1.0, 1.0, 0.0, 0.0)).unwrap(), 1.0);
        let p = degree_of_polarization(&StokesVector::new(1.0, 0.3, 0.0, 0.4)).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(
            degree_of_polarization(&StokesVector::new(0.0, 0.0, 0.0, 0.0)),
            Err(Error::ZeroIntensity)
        );
    }

    #[test]
    fn decomposition_examples() {
        let d = decompose_polarized_unpolarized(&StokesVector::new(1.0, 0.5, 0.0, 0.0)).unwrap();
        assert!((d.p - 0.5).abs() < 1e-15);
        let dir = d.direction.unwrap();
        assert!((dir.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15 && dir.phi.abs() < 1e-15);
        let u = decompose_polarized_unpolarized(&StokesVector::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(u.direction.is_none());
        let n = decompose_polarized_unpolarized(&StokesVector::new(2.0, 0.0, 0.0, 2.0)).unwrap();
        assert_eq!(n.p, 1.0);
        assert_eq!(n.direction.unwrap().theta, 0.0);
    }

    #[test]
    fn superposition_examples() {
        let s = incoherent_superpose(
            &StokesVector::new(1.0, 1.0, 0.0, 0.0),
            &StokesVector::new(1.0, -1.0, 0.0, 0.0),
        );
        assert!(close(&s, [2.0, 0.0, 0.0, 0.0]));
        let t = incoherent_superpose(
            &StokesVector::new(1.0, 1.0, 0.0, 0.0),
            &StokesVector::new(1.0, 0.0, 1.0, 0.0),
        );
        assert!((degree_of_polarization(&t).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validity_examples() {
        assert!(validate_stokes(&StokesVector::new(1.0, 0.0, 0.0, 0.0)).valid);
        assert!(!validate_stokes(&StokesVector::new(1.0, 1.0, 1.0, 1.0)).valid);
        let b = validate_stokes(&StokesVector::new(1.0, 1.0, 0.0, 0.0));
        assert!(b.valid && b.boundary);
        assert!(coherency_from_stokes(&StokesVector::new(1.0, 1.0, 1.0, 1.0)).is_err());
    }
}

//! Poincaré-sphere geometry: angular coordinates, Rodrigues rotations and direction grids.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::levi_civita;

/// Tolerance on |n| - 1 for rotation and diattenuation axes.
pub const AXIS_TOL: f64 = 1e-9;

/// Point on the unit sphere, Θ polar from e₃ and Φ azimuthal from e₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarAngles {
    pub theta: f64,
    pub phi: f64,
}

impl PolarAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Angles of a nonzero vector, Φ wrapped into [0, 2π).
    pub fn from_vector(v: &Vector3<f64>) -> Self {
        let r = v.norm();
        let theta = (v.z / r).clamp(-1.0, 1.0).acos();
        let mut phi = v.y.atan2(v.x);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        if phi >= std::f64::consts::TAU {
            phi = 0.0;
        }
        Self { theta, phi }
    }

    /// The diametrically opposite point (π - Θ, Φ + π).
    pub fn antipode(&self) -> Self {
        Self::from_vector(&(-self.unit_vector()))
    }
}

pub fn e1() -> Vector3<f64> {
    Vector3::new(1.0, 0.0, 0.0)
}

pub fn e2() -> Vector3<f64> {
    Vector3::new(0.0, 1.0, 0.0)
}

pub fn e3() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, 1.0)
}

pub fn check_unit(n: &Vector3<f64>) -> Result<()> {
    let len = n.norm();
    if (len - 1.0).abs() > AXIS_TOL || !len.is_finite() {
        return Err(Error::NonUnitAxis(len));
    }
    Ok(())
}

/// R_ij = δ_ij cosΘ − Σ_k ε_ijk n_k sinΘ + n_i n_j (1 − cosΘ).
pub fn rodrigues(theta: f64, n: &Vector3<f64>) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        let cross: f64 = (0..3).map(|k| levi_civita(i, j, k) * n[k]).sum();
        delta * c - cross * s + n[i] * n[j] * (1.0 - c)
    })
}

/// Axis-angle pair (Θ, n) whose Rodrigues matrix maps `from` onto `to`.
pub fn rotation_between(from: &Vector3<f64>, to: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let a = from.normalize();
    let b = to.normalize();
    let cos = a.dot(&b).clamp(-1.0, 1.0);
    let axis = a.cross(&b);
    let sin = axis.norm();
    if sin < 1e-12 {
        if cos > 0.0 {
            return (0.0, e3());
        }
        // Antiparallel: any axis perpendicular to `a` works.
        let trial = if a.x.abs() < 0.9 { e1() } else { e2() };
        let perp = a.cross(&trial).normalize();
        return (std::f64::consts::PI, perp);
    }
    // Rodrigues as written turns counterclockwise about n, taking a to b for n ∝ a × b.
    (sin.atan2(cos), axis / sin)
}

/// Great-circle distance between two unit vectors.
pub fn angular_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Deterministic near-uniform covering of the sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

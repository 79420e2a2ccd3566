//! Jones and Mueller calculus: constructors, decompositions and physicality checks.

use std::ops::Mul;

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_unit, e3, rodrigues, rotation_between};
use crate::linalg::{hermitian_eigen, pauli, CMatrix, C64, I, ONE, ZERO};
use crate::stokes::{CoherencyMatrix, StokesVector};

/// Tolerance used by the transmittance checks.
pub const TRANSMITTANCE_TOL: f64 = 1e-9;
/// Cloude eigenvalues above −CLOUDE_TOL count as nonnegative.
pub const CLOUDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix(pub Matrix2<C64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuellerMatrix(pub Matrix4<f64>);

impl JonesMatrix {
    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn det(&self) -> C64 {
        self.0.determinant()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;
    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix(self.0 * rhs.0)
    }
}

impl MuellerMatrix {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        Self(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[(i, j)];
            }
        }
        out
    }

    /// Lower-right 3×3 block.
    pub fn m_block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(1, 1).into_owned()
    }

    pub fn max_abs_diff(&self, other: &MuellerMatrix) -> f64 {
        (self.0 - other.0).amax()
    }
}

impl Mul for MuellerMatrix {
    type Output = MuellerMatrix;
    fn mul(self, rhs: MuellerMatrix) -> MuellerMatrix {
        MuellerMatrix(self.0 * rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boost {
    pub eta: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diattenuation {
    pub q: f64,
    pub r: f64,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Depolarizer {
    pub p_vec: [f64; 3],
    pub m_mat: [[f64; 3]; 3],
}

/// Canonical factors of a polarization transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformDecomposition {
    pub t: f64,
    pub rotation: Rotation,
    pub boost: Boost,
    pub diattenuation: Diattenuation,
    pub depolarizer: Depolarizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuellerValidityReport {
    /// Tr(MMᵀ) − 4M₀₀²; zero for deterministic matrices.
    pub trace_bound_value: f64,
    pub trace_bound_ok: bool,
    pub deterministic: bool,
    pub transmittance: f64,
    pub transmittance_ok: bool,
    pub transmittance_boundary: bool,
    pub reverse_transmittance: f64,
    pub reverse_transmittance_ok: bool,
    pub reverse_transmittance_boundary: bool,
    pub cloude_eigenvalues: [f64; 4],
    pub cloude_positive: bool,
    pub lorentz_invariant_residual: f64,
    /// All of the trace, transmittance and Cloude checks pass.
    pub physical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDecomposition {
    pub rotation: JonesMatrix,
    /// J = rotation · boost_right.
    pub boost_right: JonesMatrix,
    /// J = boost_left · rotation.
    pub boost_left: JonesMatrix,
    pub rotation_params: Rotation,
    pub boost_right_params: Boost,
    pub boost_left_params: Boost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuChipmanDecomposition {
    pub rotation: Rotation,
    pub diattenuation: Diattenuation,
    /// Depolarizer with zero polarizance and lower block m′.
    pub depolarizer: Depolarizer,
    /// First-row tail of the depolarizing factor. The rotation·diattenuation·depolarizer
    /// product has 13 free parameters, so a generic Mueller matrix leaves this nonzero.
    pub residual_diattenuation: [f64; 3],
    /// q or r vanishes and the diattenuation factor cannot be inverted.
    pub degenerate: bool,
    /// m′ is singular, so the rotation factor is not unique.
    pub non_unique: bool,
    pub reconstruction_error: f64,
}

impl LuChipmanDecomposition {
    pub fn rotation_matrix(&self) -> MuellerMatrix {
        mueller_rotation_unchecked(self.rotation.theta, &Vector3::from(self.rotation.axis))
    }

    pub fn diattenuation_matrix(&self) -> MuellerMatrix {
        let d = self.diattenuation;
        mueller_diattenuation_unchecked(d.q, d.r, &Vector3::from(d.axis))
    }

    /// Depolarizing factor including the residual diattenuation row.
    pub fn depolarizer_matrix(&self) -> MuellerMatrix {
        let mut m = depolarizer_unchecked(&self.depolarizer);
        for k in 0..3 {
            m.0[(0, k + 1)] = self.residual_diattenuation[k];
        }
        m
    }

    pub fn reconstruct(&self) -> MuellerMatrix {
        self.rotation_matrix() * self.diattenuation_matrix() * self.depolarizer_matrix()
    }
}

fn pauli_dot(n: &Vector3<f64>) -> Matrix2<C64> {
    pauli(1) * C64::from(n.x) + pauli(2) * C64::from(n.y) + pauli(3) * C64::from(n.z)
}

/// M_μν = ½ Tr(σ_μ J σ_ν J†).
pub fn mueller_from_jones(j: &JonesMatrix) -> MuellerMatrix {
    let jd = j.0.adjoint();
    MuellerMatrix(Matrix4::from_fn(|mu, nu| {
        0.5 * (pauli(mu) * j.0 * pauli(nu) * jd).trace().re
    }))
}

pub fn mueller_from_jones_mixture(weights: &[f64], js: &[JonesMatrix]) -> Result<MuellerMatrix> {
    if weights.is_empty() || js.is_empty() {
        return Err(Error::Empty("Jones mixture"));
    }
    if weights.len() != js.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: js.len(),
        });
    }
    let mut m = Matrix4::zeros();
    for (w, j) in weights.iter().zip(js) {
        m += mueller_from_jones(j).0 * *w;
    }
    Ok(MuellerMatrix(m))
}

/// exp(−iΘ n·σ/2).
pub fn jones_rotation(theta: f64, n: &Vector3<f64>) -> Result<JonesMatrix> {
    check_unit(n)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(JonesMatrix(
        Matrix2::identity() * C64::from(c) - pauli_dot(n) * (I * s),
    ))
}

/// exp(η n·σ/2).
pub fn jones_boost(eta: f64, n: &Vector3<f64>) -> Result<JonesMatrix> {
    check_unit(n)?;
    let c = (eta / 2.0).cosh();
    let s = (eta / 2.0).sinh();
    Ok(JonesMatrix(
        Matrix2::identity() * C64::from(c) + pauli_dot(n) * C64::from(s),
    ))
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            name,
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Jones matrix diag(√q, √r) expressed along axis n.
pub fn jones_diattenuation(q: f64, r: f64, n: &Vector3<f64>) -> Result<JonesMatrix> {
    check_unit_interval("q", q)?;
    check_unit_interval("r", r)?;
    check_unit(n)?;
    let d = JonesMatrix(Matrix2::new(
        C64::from(q.sqrt()),
        ZERO,
        ZERO,
        C64::from(r.sqrt()),
    ));
    let (theta, axis) = rotation_between(&e3(), n);
    if theta == 0.0 {
        return Ok(d);
    }
    let u = jones_rotation(theta, &axis)?;
    Ok(u * d * u.adjoint())
}

pub fn mueller_rotation(theta: f64, n: &Vector3<f64>) -> Result<MuellerMatrix> {
    check_unit(n)?;
    Ok(mueller_rotation_unchecked(theta, n))
}

fn mueller_rotation_unchecked(theta: f64, n: &Vector3<f64>) -> MuellerMatrix {
    embed_block(&rodrigues(theta, n))
}

fn embed_block(r: &Matrix3<f64>) -> MuellerMatrix {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(r);
    MuellerMatrix(m)
}

pub fn mueller_boost(eta: f64, n: &Vector3<f64>) -> Result<MuellerMatrix> {
    check_unit(n)?;
    let (ch, sh) = (eta.cosh(), eta.sinh());
    let mut m = Matrix4::zeros();
    m[(0, 0)] = ch;
    for i in 0..3 {
        m[(0, i + 1)] = sh * n[i];
        m[(i + 1, 0)] = sh * n[i];
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[(i + 1, j + 1)] = delta + (ch - 1.0) * n[i] * n[j];
        }
    }
    Ok(MuellerMatrix(m))
}

pub fn mueller_diattenuation(q: f64, r: f64, n: &Vector3<f64>) -> Result<MuellerMatrix> {
    check_unit_interval("q", q)?;
    check_unit_interval("r", r)?;
    check_unit(n)?;
    Ok(mueller_diattenuation_unchecked(q, r, n))
}

fn mueller_diattenuation_unchecked(q: f64, r: f64, n: &Vector3<f64>) -> MuellerMatrix {
    let plus = (q + r) / 2.0;
    let minus = (q - r) / 2.0;
    let g = (q * r).sqrt();
    let base = MuellerMatrix::from_rows([
        [plus, 0.0, 0.0, minus],
        [0.0, g, 0.0, 0.0],
        [0.0, 0.0, g, 0.0],
        [minus, 0.0, 0.0, plus],
    ]);
    let (theta, axis) = rotation_between(&e3(), n);
    if theta == 0.0 {
        return base;
    }
    let rot = mueller_rotation_unchecked(theta, &axis);
    MuellerMatrix(rot.0 * base.0 * rot.0.transpose())
}

pub fn depolarizer(p_vec: &Vector3<f64>, m_mat: &Matrix3<f64>) -> Result<MuellerMatrix> {
    if p_vec.norm() > 1.0 + 1e-12 {
        return Err(Error::OutOfRange {
            name: "|p|",
            value: p_vec.norm(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 1.0;
    for i in 0..3 {
        m[(i + 1, 0)] = p_vec[i];
    }
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(m_mat);
    Ok(MuellerMatrix(m))
}

fn depolarizer_unchecked(d: &Depolarizer) -> MuellerMatrix {
    let m = Matrix3::from_fn(|i, j| d.m_mat[i][j]);
    let mut out = Matrix4::zeros();
    out[(0, 0)] = 1.0;
    for i in 0..3 {
        out[(i + 1, 0)] = d.p_vec[i];
    }
    out.fixed_view_mut::<3, 3>(1, 1).copy_from(&m);
    MuellerMatrix(out)
}

pub fn apply_mueller(m: &MuellerMatrix, s: &StokesVector) -> StokesVector {
    StokesVector::from_vector4(&(m.0 * s.as_vector4()))
}

pub fn apply_jones(j: &JonesMatrix, psi: &CoherencyMatrix) -> CoherencyMatrix {
    CoherencyMatrix(j.0 * psi.0 * j.0.adjoint())
}

/// Cloude matrix C = ¼ Σ M_μν σ_μ ⊗ σ_ν*. Its trace is M₀₀ and it is rank one
/// exactly when M comes from a single Jones matrix.
pub fn cloude_matrix(m: &MuellerMatrix) -> CMatrix {
    let mut c = CMatrix::zeros(4, 4);
    for mu in 0..4 {
        let sm = pauli(mu);
        for nu in 0..4 {
            let w = m.0[(mu, nu)] * 0.25;
            if w == 0.0 {
                continue;
            }
            let sn = pauli(nu).map(|z| z.conj());
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            c[(2 * i + k, 2 * j + l)] += sm[(i, j)] * sn[(k, l)] * w;
                        }
                    }
                }
            }
        }
    }
    c
}

pub fn validate_mueller(m: &MuellerMatrix) -> MuellerValidityReport {
    let a = m.0;
    let m00 = a[(0, 0)];
    let scale = m00.abs().max(1.0);

    let trace_value = (a * a.transpose()).trace() - 4.0 * m00 * m00;
    let trace_tol = 1e-10 * scale * scale;

    let row_tail = (a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(0, 3)].powi(2)).sqrt();
    let col_tail = (a[(1, 0)].powi(2) + a[(2, 0)].powi(2) + a[(3, 0)].powi(2)).sqrt();
    let transmittance = m00 + row_tail;
    let reverse = m00 + col_tail;

    let (vals, _) = hermitian_eigen(&cloude_matrix(m));
    let cloude = [vals[3], vals[2], vals[1], vals[0]];

    let g = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
    let kappa = a.determinant().abs().sqrt();
    let lorentz = (a.transpose() * g * a - g * kappa).amax();

    let transmittance_ok = transmittance <= 1.0 + TRANSMITTANCE_TOL;
    let reverse_ok = reverse <= 1.0 + TRANSMITTANCE_TOL;
    let trace_ok = trace_value <= trace_tol;
    let cloude_positive = cloude[3] >= -CLOUDE_TOL;
    MuellerValidityReport {
        trace_bound_value: trace_value,
        trace_bound_ok: trace_ok,
        deterministic: trace_value.abs() <= trace_tol,
        transmittance,
        transmittance_ok,
        transmittance_boundary: transmittance_ok && transmittance > 1.0,
        reverse_transmittance: reverse,
        reverse_transmittance_ok: reverse_ok,
        reverse_transmittance_boundary: reverse_ok && reverse > 1.0,
        cloude_eigenvalues: cloude,
        cloude_positive,
        lorentz_invariant_residual: lorentz,
        physical: trace_ok && transmittance_ok && reverse_ok && cloude_positive,
    }
}

/// J = t · J_sl with det J_sl = 1 and t = |det J|^{1/2}.
pub fn scale_factor_decompose(j: &JonesMatrix) -> Result<(f64, JonesMatrix)> {
    let det = j.det();
    let scale = j.0.iter().fold(0.0_f64, |acc, z| acc.max(z.norm_sqr()));
    if det.norm() <= 1e-14 * scale.max(1e-300) || det.norm() == 0.0 {
        return Err(Error::SingularJones);
    }
    let t = det.norm().sqrt();
    let root = det.sqrt();
    Ok((t, JonesMatrix(j.0 / root)))
}

/// Rotation parameters of a unimodular unitary U = cos(Θ/2) I − i sin(Θ/2) n·σ.
pub fn rotation_params_from_jones(u: &JonesMatrix) -> Rotation {
    let c = 0.5 * u.0.trace().re;
    let v = Vector3::from_fn(|k, _| -0.5 * (u.0 * pauli(k + 1)).trace().im);
    let s = v.norm();
    if s < 1e-15 {
        let theta = if c >= 0.0 { 0.0 } else { 2.0 * std::f64::consts::PI };
        return Rotation {
            theta,
            axis: [0.0, 0.0, 1.0],
        };
    }
    let n = v / s;
    Rotation {
        theta: 2.0 * s.atan2(c),
        axis: [n.x, n.y, n.z],
    }
}

/// Boost parameters of a Hermitian positive P = cosh(η/2) I + sinh(η/2) n·σ.
pub fn boost_params_from_jones(p: &JonesMatrix) -> Boost {
    let v = Vector3::from_fn(|k, _| 0.5 * (p.0 * pauli(k + 1)).trace().re);
    let s = v.norm();
    if s < 1e-15 {
        return Boost {
            eta: 0.0,
            axis: [0.0, 0.0, 1.0],
        };
    }
    let n = v / s;
    Boost {
        eta: 2.0 * s.asinh(),
        axis: [n.x, n.y, n.z],
    }
}

/// Rotation angle and axis of a 3×3 rotation matrix, Θ ∈ [0, π].
pub fn rotation_params_from_matrix(r: &Matrix3<f64>) -> Rotation {
    let c = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let v = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let s = v.norm();
    if s > 1e-8 {
        let n = v / s;
        return Rotation {
            theta: s.atan2(c),
            axis: [n.x, n.y, n.z],
        };
    }
    if c > 0.0 {
        return Rotation {
            theta: 0.0,
            axis: [0.0, 0.0, 1.0],
        };
    }
    // Θ ≈ π: n nᵀ = (R + I)/2.
    let outer = (r + Matrix3::identity()) * 0.5;
    let k = (0..3)
        .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
        .unwrap_or(2);
    let mut n = outer.column(k).into_owned();
    n /= n.norm();
    Rotation {
        theta: std::f64::consts::PI,
        axis: [n.x, n.y, n.z],
    }
}

/// J_sl = U·P = P′·U with U a rotation and P, P′ boosts.
pub fn polar_decompose(j: &JonesMatrix) -> Result<PolarDecomposition> {
    let det = j.det();
    let defect = (det - ONE).norm();
    if defect > 1e-9 {
        return Err(Error::NotUnimodular(defect));
    }
    let a = j.0.adjoint() * j.0;
    // For a positive 2×2 matrix with unit determinant, √A = (A + I)/√(Tr A + 2).
    let denom = (a.trace().re + 2.0).sqrt();
    let p = (a + Matrix2::identity()) / C64::from(denom);
    let p_inv = Matrix2::new(p[(1, 1)], -p[(0, 1)], -p[(1, 0)], p[(0, 0)]) / p.determinant();
    let u = j.0 * p_inv;
    let p_left = u * p * u.adjoint();
    let rotation = JonesMatrix(u);
    let boost_right = JonesMatrix(p);
    let boost_left = JonesMatrix(p_left);
    Ok(PolarDecomposition {
        rotation,
        boost_right,
        boost_left,
        rotation_params: rotation_params_from_jones(&rotation),
        boost_right_params: boost_params_from_jones(&boost_right),
        boost_left_params: boost_params_from_jones(&boost_left),
    })
}

/// Full canonical factorization of a nonsingular Jones matrix.
pub fn decompose_jones(j: &JonesMatrix) -> Result<TransformDecomposition> {
    let (t, sl) = scale_factor_decompose(j)?;
    let polar = polar_decompose(&sl)?;
    let b = polar.boost_right_params;
    // A boost of rapidity η along n with scale t is diattenuation q = t²e^η, r = t²e^{−η}.
    let q = t * t * b.eta.exp();
    let r = t * t * (-b.eta).exp();
    Ok(TransformDecomposition {
        t,
        rotation: polar.rotation_params,
        boost: b,
        diattenuation: Diattenuation { q, r, axis: b.axis },
        depolarizer: Depolarizer {
            p_vec: [0.0; 3],
            m_mat: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        },
    })
}

/// Factor M = M_rot · M_diatten · depolarizer(0, m′).
///
/// The diattenuation is read off the first column (polarizance), the rotation
/// comes from the polar part of the remaining 3×3 block.
pub fn lu_chipman_decompose(m: &MuellerMatrix) -> Result<LuChipmanDecomposition> {
    let report = validate_mueller(m);
    if !report.cloude_positive {
        return Err(Error::NonPhysical(format!(
            "minimum Cloude eigenvalue {:e}",
            report.cloude_eigenvalues[3]
        )));
    }
    let a = m.0;
    let m00 = a[(0, 0)];
    if m00 <= 0.0 {
        return Err(Error::NonPhysical("M00 must be positive".into()));
    }
    let pol = Vector3::new(a[(1, 0)], a[(2, 0)], a[(3, 0)]);
    let plen = pol.norm();
    let q = m00 + plen;
    let r = (m00 - plen).max(0.0);
    if q > 1.0 + TRANSMITTANCE_TOL {
        return Err(Error::NonPhysical(format!(
            "diattenuation factor {q} exceeds 1"
        )));
    }
    let q = q.min(1.0);
    let p_hat = if plen > 1e-14 { pol / plen } else { e3() };
    let degenerate = r <= 1e-12 || q <= 1e-12;

    let d_frame = mueller_diattenuation_unchecked(q, r, &p_hat);
    let d_inv = if degenerate {
        d_frame
            .0
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::NonPhysical(e.to_string()))?
    } else {
        d_frame
            .0
            .try_inverse()
            .ok_or_else(|| Error::NonPhysical("diattenuation not invertible".into()))?
    };
    let n_mat = d_inv * a;
    let block: Matrix3<f64> = n_mat.fixed_view::<3, 3>(1, 1).into_owned();
    let residual = [n_mat[(0, 1)], n_mat[(0, 2)], n_mat[(0, 3)]];

    let svd = block.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sv = svd.singular_values;
    let smax = sv.max();
    let non_unique = sv.min() <= 1e-10 * smax.max(1e-300) || smax == 0.0;
    let mut rot = if smax == 0.0 {
        Matrix3::identity()
    } else {
        u * vt
    };
    if rot.determinant() < 0.0 {
        // Flip the least significant singular direction to stay in SO(3).
        let k = (0..3)
            .min_by(|&x, &y| sv[x].total_cmp(&sv[y]))
            .unwrap_or(2);
        let mut u2 = u;
        u2.column_mut(k).neg_mut();
        rot = u2 * vt;
    }
    let m_prime = rot.transpose() * block;
    let n_axis = rot.transpose() * p_hat;

    let out = LuChipmanDecomposition {
        rotation: rotation_params_from_matrix(&rot),
        diattenuation: Diattenuation {
            q,
            r,
            axis: [n_axis.x, n_axis.y, n_axis.z],
        },
        depolarizer: Depolarizer {
            p_vec: [0.0; 3],
            m_mat: [
                [m_prime[(0, 0)], m_prime[(0, 1)], m_prime[(0, 2)]],
                [m_prime[(1, 0)], m_prime[(1, 1)], m_prime[(1, 2)]],
                [m_prime[(2, 0)], m_prime[(2, 1)], m_prime[(2, 2)]],
            ],
        },
        residual_diattenuation: residual,
        degenerate,
        non_unique,
        reconstruction_error: 0.0,
    };
    let err = out.reconstruct().max_abs_diff(m);
    Ok(LuChipmanDecomposition {
        reconstruction_error: err,
        ..out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{e1, e2};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rotation_examples() {
        let u = jones_rotation(std::f64::consts::PI, &e3()).unwrap();
        assert!((u.0 - Matrix2::new(-I, ZERO, ZERO, I)).norm() < 1e-15);
        let h = 0.5f64.sqrt();
        let v = jones_rotation(std::f64::consts::FRAC_PI_2, &e1()).unwrap();
        let expected = Matrix2::new(c(h), -I * h, -I * h, c(h));
        assert!((v.0 - expected).norm() < 1e-15);
        assert!(jones_rotation(1.0, &Vector3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn rotation_consistency() {
        let n = Vector3::new(0.2, -0.5, 0.8).normalize();
        let a = mueller_from_jones(&jones_rotation(1.3, &n).unwrap());
        let b = mueller_rotation(1.3, &n).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn boost_examples() {
        let b = jones_boost(0.8, &e3()).unwrap();
        assert!((b.0[(0, 0)] - c(0.4f64.exp())).norm() < 1e-15);
        assert!((b.0[(1, 1)] - c((-0.4f64).exp())).norm() < 1e-15);
        let n = Vector3::new(1.0, 2.0, 2.0) / 3.0;
        let m = mueller_from_jones(&jones_boost(0.7, &n).unwrap());
        assert!(m.max_abs_diff(&mueller_boost(0.7, &n).unwrap()) < 1e-14);
    }

    #[test]
    fn diattenuation_examples() {
        let m = mueller_diattenuation(0.64, 0.25, &e3()).unwrap();
        assert!((m.0[(0, 0)] - 0.445).abs() < 1e-15);
        assert!((m.0[(0, 3)] - 0.195).abs() < 1e-15);
        assert!((m.0[(1, 1)] - 0.4).abs() < 1e-15 && (m.0[(2, 2)] - 0.4).abs() < 1e-15);
        let j = jones_diattenuation(0.64, 0.25, &e3()).unwrap();
        assert!(mueller_from_jones(&j).max_abs_diff(&m) < 1e-15);
        let n = Vector3::new(0.6, 0.0, 0.8);
        let jn = jones_diattenuation(0.3, 0.9, &n).unwrap();
        let mn = mueller_diattenuation(0.3, 0.9, &n).unwrap();
        assert!(mueller_from_jones(&jn).max_abs_diff(&mn) < 1e-14);
        assert!(mueller_diattenuation(1.2, 0.5, &e3()).is_err());
    }

    #[test]
    fn polarizer_blocks_left_circular() {
        let m = mueller_diattenuation(1.0, 0.0, &e3()).unwrap();
        let out = apply_mueller(&m, &StokesVector::new(1.0, 0.0, 0.0, -1.0));
        assert!(out.to_array().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn reflection_mixture_cloude() {
        let js: Vec<JonesMatrix> = (0..4).map(|k| JonesMatrix(pauli(k))).collect();
        let m = mueller_from_jones_mixture(&[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0], &js)
            .unwrap();
        let expected = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0 / 3.0));
        assert!((m.0 - expected).amax() < 1e-15);
        let rep = validate_mueller(&m);
        assert!((rep.cloude_eigenvalues[3] + 1.0 / 3.0).abs() < 1e-12);
        assert!(!rep.cloude_positive && !rep.physical);
    }

    #[test]
    fn lossless_polarizer_report() {
        let j1 = JonesMatrix(Matrix2::new(ONE, ZERO, ZERO, ZERO));
        let j2 = JonesMatrix(Matrix2::new(ZERO, ONE, ZERO, ZERO));
        let m = mueller_from_jones_mixture(&[1.0, 1.0], &[j1, j2]).unwrap();
        let expected = MuellerMatrix::from_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(m, expected);
        let rep = validate_mueller(&m);
        assert!(rep.cloude_positive);
        assert!((rep.reverse_transmittance - 2.0).abs() < 1e-15);
        assert!(!rep.reverse_transmittance_ok && !rep.physical);
    }

    #[test]
    fn deterministic_cloude_rank_one() {
        let j = JonesMatrix(Matrix2::new(
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.4),
            C64::new(0.1, -0.3),
            C64::new(0.5, 0.2),
        ));
        let rep = validate_mueller(&mueller_from_jones(&j));
        let fro2: f64 = j.0.iter().map(|z| z.norm_sqr()).sum();
        assert!((rep.cloude_eigenvalues[0] - fro2 / 2.0).abs() < 1e-14);
        assert!(rep.cloude_eigenvalues[1..].iter().all(|x| x.abs() < 1e-14));
        assert!(rep.deterministic);
    }

    #[test]
    fn scale_factor_examples() {
        let j = JonesMatrix(Matrix2::new(c(0.9f64.sqrt()), ZERO, ZERO, c(0.4f64.sqrt())));
        let (t, sl) = scale_factor_decompose(&j).unwrap();
        assert!((t - 0.36f64.powf(0.25)).abs() < 1e-15);
        assert!((sl.det() - ONE).norm() < 1e-14);
        let (t, sl) = scale_factor_decompose(&JonesMatrix(Matrix2::identity() * c(0.5))).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (sl.0 - Matrix2::identity()).norm() < 1e-15);
        let sing = JonesMatrix(Matrix2::new(ONE, ZERO, ZERO, ZERO));
        assert_eq!(scale_factor_decompose(&sing), Err(Error::SingularJones));
    }

    #[test]
    fn polar_examples() {
        let n = Vector3::new(0.0, 0.6, 0.8);
        let rot = jones_rotation(0.9, &n).unwrap();
        let p = polar_decompose(&rot).unwrap();
        assert!((p.boost_right.0 - Matrix2::identity()).norm() < 1e-14);
        assert!((p.rotation_params.theta - 0.9).abs() < 1e-14);
        let boost = jones_boost(1.1, &n).unwrap();
        let p = polar_decompose(&boost).unwrap();
        assert!((p.rotation.0 - Matrix2::identity()).norm() < 1e-14);
        assert!((p.boost_right_params.eta - 1.1).abs() < 1e-13);

        let two = jones_boost(1.0, &e1()).unwrap() * jones_boost(1.0, &e2()).unwrap();
        let p = polar_decompose(&two).unwrap();
        assert!(p.rotation_params.theta > 1e-3);
        assert!(((p.rotation * p.boost_right).0 - two.0).norm() < 1e-12);
        assert!(((p.boost_left * p.rotation).0 - two.0).norm() < 1e-12);
        assert!(polar_decompose(&JonesMatrix(Matrix2::identity() * c(2.0))).is_err());
    }

    #[test]
    fn depolarizer_examples() {
        let ideal = depolarizer(&Vector3::zeros(), &Matrix3::zeros()).unwrap();
        let out = apply_mueller(&ideal, &StokesVector::new(1.0, 1.0, 0.0, 0.0));
        assert_eq!(out.to_array(), [1.0, 0.0, 0.0, 0.0]);
        assert!(depolarizer(&Vector3::new(1.0, 1.0, 0.0), &Matrix3::zeros()).is_err());
    }

    #[test]
    fn lu_chipman_round_trip() {
        let m = mueller_rotation(std::f64::consts::PI / 3.0, &e2()).unwrap()
            * mueller_diattenuation(0.8, 0.5, &e3()).unwrap();
        let d = lu_chipman_decompose(&m).unwrap();
        assert!(d.reconstruction_error < 1e-12);
        assert!((d.rotation.theta - std::f64::consts::PI / 3.0).abs() < 1e-10);
        assert!((Vector3::from(d.rotation.axis) - e2()).norm() < 1e-10);
        assert!((d.diattenuation.q - 0.8).abs() < 1e-12 && (d.diattenuation.r - 0.5).abs() < 1e-12);
        assert!((Vector3::from(d.diattenuation.axis) - e3()).norm() < 1e-10);
        assert!(d.residual_diattenuation.iter().all(|x| x.abs() < 1e-12));

        let ideal = depolarizer(&Vector3::zeros(), &Matrix3::zeros()).unwrap();
        let d = lu_chipman_decompose(&ideal).unwrap();
        assert!(d.rotation.theta.abs() < 1e-12 && d.non_unique);
        assert!(d.reconstruction_error < 1e-12);

        let reflect = MuellerMatrix(Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0 / 3.0)));
        assert!(matches!(lu_chipman_decompose(&reflect), Err(Error::NonPhysical(_))));
    }
}

//! Quantum Fisher information, symmetric logarithmic derivatives and the
//! estimation scenarios built on them.
//!
//! Parameters enter a state as ρ(θ). The quantum Cramér-Rao bound for ν
//! repetitions and weight matrix W reads Tr(W Cov(θ̂)) ≥ Tr(W Q⁻¹)/ν, and it is
//! attainable for several parameters at once only when Tr(ρ[L_i, L_j]) = 0.

use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::channels::{apply, attenuation_channel, diattenuation_channel};
use crate::error::{Error, Result};
use crate::fock::moments::moments;
use crate::fock::operators::{stokes_operators, Mode, OperatorMatrix};
use crate::fock::rotation::rotate;
use crate::fock::{FockState, StateKind};
use crate::geometry::e3;
use crate::linalg::{hermitian_eigen, hermiticity_defect, pauli, CMatrix, C64, I, ZERO};
use crate::mueller::{rotation_params_from_jones, JonesMatrix};
use crate::experiments::Table;
use crate::parallel::{map, map_range, Execution};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;
/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct QFIMResult {
    pub qfim: DMatrix<f64>,
    pub slds: Vec<OperatorMatrix>,
    /// Im Tr(ρ[L_i, L_j]); Tr(ρ[L_i, L_j]) is purely imaginary.
    pub commutativity_residuals: DMatrix<f64>,
    /// Tr(Q⁻¹), the qCRB with unit weights and one repetition.
    pub scalar_bound: Option<f64>,
}

impl QFIMResult {
    /// Tr(W Q⁻¹)/ν, or `None` when Q is singular.
    pub fn weighted_bound(&self, w: &DMatrix<f64>, repetitions: usize) -> Option<f64> {
        let inv = self.qfim.clone().try_inverse()?;
        Some((w * inv).trace() / repetitions.max(1) as f64)
    }

    pub fn max_commutativity_residual(&self) -> f64 {
        self.commutativity_residuals.amax()
    }

    pub fn qfim_rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.qfim)
    }

    pub fn residual_rows(&self) -> Vec<Vec<f64>> {
        rows_of(&self.commutativity_residuals)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn scalar_bound(q: &DMatrix<f64>) -> Option<f64> {
    let eig = SymmetricEigen::new(q.clone());
    let max = eig.eigenvalues.amax();
    if max == 0.0 || eig.eigenvalues.min() <= 1e-12 * max {
        return None;
    }
    Some(eig.eigenvalues.iter().map(|v| 1.0 / v).sum())
}

/// Indices that carry either ρ or any dρ. Outside them the SLD vanishes.
fn support(rho: &CMatrix, drhos: &[CMatrix]) -> Vec<usize> {
    let d = rho.nrows();
    (0..d)
        .filter(|&i| {
            rho[(i, i)].re > 0.0
                || drhos
                    .iter()
                    .any(|dr| (0..d).any(|j| dr[(i, j)] != ZERO))
        })
        .collect()
}

fn compress(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// SLDs in the eigenbasis of ρ restricted to `idx`, plus that eigenbasis.
fn sld_eigenbasis(rho: &CMatrix, drhos: &[CMatrix], idx: &[usize]) -> (Vec<f64>, CMatrix, Vec<CMatrix>) {
    let r = compress(rho, idx);
    let (vals, vecs) = hermitian_eigen(&r);
    let max = vals.iter().fold(0.0_f64, |a, v| a.max(*v));
    let tol = RANK_TOL * max;
    let vd = vecs.adjoint();
    let slds = drhos
        .iter()
        .map(|dr| {
            let d = &vd * compress(dr, idx) * &vecs;
            CMatrix::from_fn(idx.len(), idx.len(), |j, k| {
                let s = vals[j] + vals[k];
                if s > tol {
                    d[(j, k)] * (2.0 / s)
                } else {
                    ZERO
                }
            })
        })
        .collect();
    (vals, vecs, slds)
}

fn expand(m: &CMatrix, vecs: &CMatrix, idx: &[usize], dim: usize) -> CMatrix {
    let local = vecs * m * vecs.adjoint();
    let mut out = CMatrix::zeros(dim, dim);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            out[(i, j)] = local[(a, b)];
        }
    }
    out
}

/// L with dρ = {L, ρ}/2 on the support of ρ and L = 0 on its kernel.
pub fn sld(rho: &CMatrix, drho: &CMatrix) -> Result<CMatrix> {
    let defect = hermiticity_defect(drho);
    if defect > 1e-9 * (1.0 + crate::linalg::max_abs(drho)) {
        return Err(Error::NotHermitian(defect));
    }
    let idx = support(rho, std::slice::from_ref(drho));
    let (_, vecs, slds) = sld_eigenbasis(rho, std::slice::from_ref(drho), &idx);
    Ok(expand(&slds[0], &vecs, &idx, rho.nrows()))
}

/// Q_ij = Re Tr(ρ L_i L_j) from the SLDs of each derivative.
pub fn qfim(state: &FockState, drhos: &[CMatrix]) -> Result<QFIMResult> {
    let rho = state.density_matrix();
    let d = rho.nrows();
    for dr in drhos {
        if dr.nrows() != d || dr.ncols() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: dr.nrows(),
            });
        }
        let defect = hermiticity_defect(dr);
        if defect > 1e-9 * (1.0 + crate::linalg::max_abs(dr)) {
            return Err(Error::NotHermitian(defect));
        }
    }
    let idx = support(&rho, drhos);
    let (vals, vecs, local) = sld_eigenbasis(&rho, drhos, &idx);
    let p = drhos.len();
    let mut q = DMatrix::zeros(p, p);
    let mut comm = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            // Tr(ρ L_i L_j) with ρ diagonal in this basis.
            let t: C64 = (0..idx.len())
                .map(|a| {
                    let row: C64 = (0..idx.len()).map(|b| local[i][(a, b)] * local[j][(b, a)]).sum();
                    row * vals[a].max(0.0)
                })
                .sum();
            q[(i, j)] = t.re;
            q[(j, i)] = t.re;
            comm[(i, j)] = 2.0 * t.im;
            comm[(j, i)] = -2.0 * t.im;
        }
    }
    let slds = local
        .iter()
        .map(|l| OperatorMatrix {
            basis: state.basis,
            matrix: expand(l, &vecs, &idx, d),
            hermitian: true,
        })
        .collect();
    Ok(QFIMResult {
        scalar_bound: scalar_bound(&q),
        qfim: q,
        slds,
        commutativity_residuals: comm,
    })
}

/// Pure state under dρ/dθ_i = −i[G_i, ρ]: Q = 4 Cov(G_i, G_j).
pub fn qfim_pure(state: &FockState, generators: &[CMatrix]) -> Result<QFIMResult> {
    let psi = state
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("qfim_pure needs a pure state".into()))?;
    let norm = psi.norm_squared();
    let applied: Vec<_> = generators.iter().map(|g| g * psi).collect();
    let means: Vec<C64> = applied.iter().map(|gp| psi.dotc(gp)).collect();
    let p = generators.len();
    let mut q = DMatrix::zeros(p, p);
    let mut comm = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let second = applied[i].dotc(&applied[j]);
            let c = second - means[i].conj() * means[j] / norm;
            q[(i, j)] = 4.0 * c.re;
            q[(j, i)] = 4.0 * c.re;
            // For pure states L_i = 2 dρ_i, which gives Tr(ρ[L_i,L_j]) = 8i Im Cov.
            comm[(i, j)] = 8.0 * c.im;
            comm[(j, i)] = -8.0 * c.im;
        }
    }
    let slds = generators
        .iter()
        .map(|g| {
            let rho = psi * psi.adjoint();
            let drho = (g * &rho - &rho * g) * (-I);
            OperatorMatrix {
                basis: state.basis,
                matrix: drho * C64::from(2.0 / norm),
                hermitian: true,
            }
        })
        .collect();
    Ok(QFIMResult {
        scalar_bound: scalar_bound(&q),
        qfim: q,
        slds,
        commutativity_residuals: comm,
    })
}

/// A state that depends smoothly on a parameter vector.
pub trait ParamFamily: Sync {
    fn n_params(&self) -> usize;

    fn state(&self, theta: &[f64]) -> Result<FockState>;

    fn step(&self, _param: usize) -> f64 {
        DEFAULT_STEP
    }

    /// ∂ρ/∂θ_i by central differences at h and h/2, combined by Richardson
    /// extrapolation.
    fn derivative(&self, theta: &[f64], param: usize) -> Result<CMatrix> {
        let h = self.step(param);
        let central = |h: f64| -> Result<CMatrix> {
            let mut up = theta.to_vec();
            let mut down = theta.to_vec();
            up[param] += h;
            down[param] -= h;
            let diff = self.state(&up)?.density_matrix() - self.state(&down)?.density_matrix();
            Ok(diff / C64::from(2.0 * h))
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        Ok((fine * C64::from(4.0) - coarse) / C64::from(3.0))
    }
}

/// Family defined by a closure.
pub struct FnFamily<F> {
    pub n_params: usize,
    pub f: F,
    pub step: f64,
}

impl<F> FnFamily<F>
where
    F: Fn(&[f64]) -> Result<FockState> + Sync,
{
    pub fn new(n_params: usize, f: F) -> Self {
        Self {
            n_params,
            f,
            step: DEFAULT_STEP,
        }
    }
}

impl<F> ParamFamily for FnFamily<F>
where
    F: Fn(&[f64]) -> Result<FockState> + Sync,
{
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn state(&self, theta: &[f64]) -> Result<FockState> {
        (self.f)(theta)
    }

    fn step(&self, _param: usize) -> f64 {
        self.step
    }
}

pub fn qfim_family(family: &dyn ParamFamily, theta: &[f64]) -> Result<QFIMResult> {
    if theta.len() != family.n_params() {
        return Err(Error::LengthMismatch {
            expected: family.n_params(),
            got: theta.len(),
        });
    }
    let state = family.state(theta)?;
    let drhos = map_range(Execution::default(), theta.len(), |i| family.derivative(theta, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    qfim(&state, &drhos)
}

/// QFI for a phase imprinted by exp(−iθŜ₃).
pub fn scenario_phase_qfi(state: &FockState) -> Result<f64> {
    let s3 = &stokes_operators(state.basis).s[3];
    let rho = state.density_matrix();
    let drho = (s3 * &rho - &rho * s3) * (-I);
    Ok(qfim(state, &[drho])?.qfim[(0, 0)])
}

/// QFI for the survival probability q of loss on one mode.
pub fn scenario_loss_qfi(state: &FockState, mode: Mode, q: f64) -> Result<f64> {
    let family = FnFamily::new(1, |t: &[f64]| apply(&attenuation_channel(t[0], mode, state.basis)?, state));
    Ok(qfim_family(&family, &[q])?.qfim[(0, 0)])
}

/// 2×2 QFIM for (q, r) of a diattenuation along e₃.
pub fn scenario_diattenuation_qfim(state: &FockState, q: f64, r: f64) -> Result<QFIMResult> {
    let axis = e3();
    let family = FnFamily::new(2, |t: &[f64]| apply(&diattenuation_channel(t[0], t[1], &axis, state.basis)?, state));
    qfim_family(&family, &[q, r])
}

/// QFIM for (θ, q): rotate by θ about e₃, then lose photons from mode a.
pub fn scenario_phase_loss_qfim(state: &FockState, theta: f64, q: f64) -> Result<QFIMResult> {
    let axis = e3();
    let family = FnFamily::new(2, |t: &[f64]| {
        let rotated = rotate(state, t[0], &axis)?;
        apply(&attenuation_channel(t[1], Mode::A, state.basis)?, &rotated)
    });
    qfim_family(&family, &[theta, q])
}

/// Evaluate `f` at every grid point and tabulate the upper triangle of Q and
/// Tr(Q⁻¹), one row per point. A singular Q leaves the bound cell empty.
pub fn qfim_sweep<F>(names: &[&str], grid: &[Vec<f64>], exec: Execution, f: F) -> Result<Table>
where
    F: Fn(&[f64]) -> Result<QFIMResult> + Sync + Send,
{
    let results = map(exec, grid, |point| f(point)).into_iter().collect::<Result<Vec<_>>>()?;
    let k = results.first().map_or(0, |r| r.qfim.nrows());
    let mut columns: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    for i in 0..k {
        for j in i..k {
            columns.push(format!("q{i}{j}"));
        }
    }
    columns.push("bound".into());
    let rows = grid
        .iter()
        .zip(&results)
        .map(|(point, r)| {
            let mut row = point.clone();
            for i in 0..k {
                for j in i..k {
                    row.push(r.qfim[(i, j)]);
                }
            }
            row.push(r.scalar_bound.unwrap_or(f64::NAN));
            row
        })
        .collect();
    Ok(Table {
        name: "qfim_sweep".into(),
        columns,
        rows,
    })
}

/// Coordinates on SU(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationParametrization {
    /// exp(−iθ·σ/2) with θ the rotation vector.
    AxisAngle,
    /// exp(−iθ₁σ₃/2) exp(−iθ₂σ₂/2) exp(−iθ₃σ₃/2).
    Euler,
}

impl RotationParametrization {
    pub fn su2(&self, t: &[f64; 3]) -> Matrix2<C64> {
        let exp = |v: Vector3<f64>| {
            let angle = v.norm();
            if angle == 0.0 {
                return Matrix2::identity();
            }
            let n = v / angle;
            let ns = pauli(1) * C64::from(n.x) + pauli(2) * C64::from(n.y) + pauli(3) * C64::from(n.z);
            let (s, c) = (angle / 2.0).sin_cos();
            Matrix2::identity() * C64::from(c) - ns * (I * s)
        };
        match self {
            Self::AxisAngle => exp(Vector3::new(t[0], t[1], t[2])),
            Self::Euler => exp(Vector3::new(0.0, 0.0, t[0])) * exp(Vector3::new(0.0, t[1], 0.0)) * exp(Vector3::new(0.0, 0.0, t[2])),
        }
    }

    /// Columns g_i with G_i = i (∂_i U) U† = g_i · σ/2.
    pub fn generators(&self, t: &[f64; 3]) -> Matrix3<f64> {
        let u = self.su2(t);
        let mut g = Matrix3::zeros();
        for i in 0..3 {
            let central = |h: f64| {
                let mut up = *t;
                let mut down = *t;
                up[i] += h;
                down[i] -= h;
                (self.su2(&up) - self.su2(&down)) / C64::from(2.0 * h)
            };
            let h = 1e-4;
            let du = (central(h / 2.0) * C64::from(4.0) - central(h)) / C64::from(3.0);
            let gen = du * u.adjoint() * I;
            for k in 0..3 {
                g[(k, i)] = (gen * pauli(k + 1)).trace().re;
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationFrame {
    /// Column i holds g_i.
    pub generator: [[f64; 3]; 3],
    /// Cov(Ŝ_i, Ŝ_j) of the rotated probe.
    pub covariance: [[f64; 3]; 3],
    /// 4 Gᵀ C G.
    pub qfim: [[f64; 3]; 3],
    /// Tr(C⁻¹), the weighted bound for the SU(2) metric weight.
    pub wmse_bound: f64,
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Rotation-sensing frame for a probe rotated by U(θ).
pub fn rotation_frame(state: &FockState, param: RotationParametrization, theta: [f64; 3]) -> Result<RotationFrame> {
    let u = param.su2(&theta);
    let rot = rotation_params_from_jones(&JonesMatrix(u));
    let rotated = rotate(state, rot.theta, &Vector3::from(rot.axis))?;
    let c = moments(&rotated).covariance_matrix();
    let g = param.generators(&theta);
    let eig = SymmetricEigen::new(c);
    let max = eig.eigenvalues.amax();
    let null: Vec<[f64; 3]> = (0..3)
        .filter(|&k| eig.eigenvalues[k] <= 1e-10 * max.max(1.0))
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            [v[0], v[1], v[2]]
        })
        .collect();
    if !null.is_empty() {
        return Err(Error::SingularCovariance { null_directions: null });
    }
    let wmse = eig.eigenvalues.iter().map(|v| 1.0 / v).sum();
    let q = g.transpose() * c * g * 4.0;
    Ok(RotationFrame {
        generator: to_rows(&g),
        covariance: to_rows(&c),
        qfim: to_rows(&q),
        wmse_bound: wmse,
    })
}

/// Density-matrix derivative of a pure or mixed state under −i[G, ρ].
pub fn unitary_derivative(state: &FockState, g: &CMatrix) -> CMatrix {
    let rho = match &state.kind {
        StateKind::Pure(v) => v * v.adjoint(),
        StateKind::Density(r) => r.clone(),
    };
    (g * &rho - &rho * g) * (-I)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::constructors::{isotropic_state, noon_state, su2_coherent};
    use crate::fock::FockBasis;
    use crate::geometry::PolarAngles;

    #[test]
    fn diagonal_sld_is_classical() {
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(0.2),
            C64::from(0.3),
            C64::from(0.5),
        ]));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(0.1),
            C64::from(-0.3),
            C64::from(0.2),
        ]));
        let l = sld(&rho, &d).unwrap();
        assert!((l[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((l[(1, 1)].re + 1.0).abs() < 1e-12);
        assert!((l[(2, 2)].re - 0.4).abs() < 1e-12);
    }

    #[test]
    fn noon_phase() {
        let b = FockBasis::new(4);
        let s = noon_state(4, b).unwrap();
        assert!((scenario_phase_qfi(&s).unwrap() - 16.0).abs() < 1e-9);
        let pure = qfim_pure(&s, &[stokes_operators(b).s[3].clone()]).unwrap();
        assert!((pure.qfim[(0, 0)] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_layer_is_invariant() {
        let b = FockBasis::new(3);
        let s = isotropic_state(&[0.0, 0.0, 0.0, 1.0], b, 1e-12).unwrap();
        assert!(scenario_phase_qfi(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn coherent_frame_is_singular() {
        let b = FockBasis::new(3);
        let s = su2_coherent(3, PolarAngles::new(0.4, 0.2), b).unwrap();
        let err = rotation_frame(&s, RotationParametrization::AxisAngle, [0.0, 0.0, 0.0]).unwrap_err();
        match err {
            Error::SingularCovariance { null_directions } => {
                let n = PolarAngles::new(0.4, 0.2).unit_vector();
                let v = Vector3::from(null_directions[0]);
                assert!(v.dot(&n).abs() > 1.0 - 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }
}

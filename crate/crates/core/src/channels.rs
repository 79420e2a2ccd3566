//! Completely positive trace-preserving maps on two-mode Fock states.

use nalgebra::{DMatrix, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::constructors::{su2_coherent, su2_layer_amplitudes};
use crate::fock::operators::{Mode, OperatorMatrix};
use crate::fock::rotation::{layer_rotation, rotation_operator};
use crate::fock::{stokes_vector, FockBasis, FockState, StateKind};
use crate::geometry::{check_unit, e3, fibonacci_sphere, rotation_between, PolarAngles};
use crate::linalg::{binomial, max_abs, CMatrix, CVector, C64, ONE, ZERO};
use crate::mueller::{JonesMatrix, MuellerMatrix};
use crate::parallel::{fold_reduce, Execution};

/// Kraus operators with Frobenius norm below this are dropped.
pub const PRUNE_TOL: f64 = 1e-14;
/// Tolerance on Σ K†K = 𝟙.
pub const COMPLETENESS_TOL: f64 = 1e-12;

/// Square sparse matrix stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn from_dense(m: &CMatrix, tol: f64) -> Self {
        let dim = m.nrows();
        let rows = (0..dim)
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let v = m[(i, j)];
                        (v.norm() > tol).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { dim, rows }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        self.rows[row].push((col, value));
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.norm_sqr()).sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        CVector::from_fn(self.dim, |i, _| {
            self.rows[i].iter().map(|&(j, a)| a * v[j]).sum()
        })
    }

    /// self · other
    pub fn mul(&self, other: &SparseOp) -> SparseOp {
        let mut out = SparseOp::zeros(self.dim);
        let mut acc = vec![ZERO; self.dim];
        let mut touched = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    if acc[j] == ZERO {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &j in &touched {
                if acc[j].norm() > 0.0 {
                    out.rows[i].push((j, acc[j]));
                }
                acc[j] = ZERO;
            }
            touched.clear();
        }
        out
    }

    /// Accumulate K ρ K† into `out`.
    pub fn sandwich_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d); // t = K ρ
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                for j in 0..d {
                    t[(i, j)] += v * rho[(c, j)];
                }
            }
        }
        for (j, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let vc = v.conj();
                for i in 0..d {
                    out[(i, j)] += t[(i, c)] * vc;
                }
            }
        }
    }

    /// Accumulate K† O K into `out`.
    pub fn adjoint_sandwich_into(&self, op: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d); // t = O K
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                for r in 0..d {
                    t[(r, c)] += op[(r, i)] * v;
                }
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let vc = v.conj();
                for j in 0..d {
                    out[(c, j)] += vc * t[(i, j)];
                }
            }
        }
    }

    /// Accumulate (Kψ)(Kψ)† into `out`, touching only the support of Kψ.
    pub fn pure_sandwich_into(&self, psi: &CVector, out: &mut CMatrix) {
        let support: Vec<(usize, C64)> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let v: C64 = row.iter().map(|&(j, a)| a * psi[j]).sum();
                (v != ZERO).then_some((i, v))
            })
            .collect();
        for &(i, a) in &support {
            for &(j, b) in &support {
                out[(i, j)] += a * b.conj();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub basis: FockBasis,
    pub ops: Vec<SparseOp>,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedMuellerResult {
    pub mueller: [[f64; 4]; 4],
    /// Root-mean-square misfit of the best linear Stokes map over the probes.
    pub residual: f64,
    pub probe_count: usize,
}

impl InducedMuellerResult {
    pub fn matrix(&self) -> MuellerMatrix {
        MuellerMatrix::from_rows(self.mueller)
    }
}

impl KrausChannel {
    /// Build from sparse operators, dropping negligible ones.
    pub fn new(basis: FockBasis, ops: Vec<SparseOp>, label: impl Into<String>) -> Self {
        let ops = ops
            .into_iter()
            .filter(|k| k.frobenius_sq().sqrt() >= PRUNE_TOL)
            .collect();
        Self {
            basis,
            ops,
            label: label.into(),
        }
    }

    pub fn from_dense(basis: FockBasis, ops: &[CMatrix], label: impl Into<String>) -> Result<Self> {
        let d = basis.dim();
        for k in ops {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: k.nrows().max(k.ncols()),
                });
            }
        }
        Ok(Self::new(
            basis,
            ops.iter().map(|k| SparseOp::from_dense(k, 0.0)).collect(),
            label,
        ))
    }

    pub fn kraus_matrices(&self) -> Vec<OperatorMatrix> {
        self.ops
            .iter()
            .map(|k| OperatorMatrix {
                basis: self.basis,
                matrix: k.to_dense(),
                hermitian: false,
            })
            .collect()
    }

    /// max |Σ K†K − 𝟙|.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.basis.dim();
        let mut sum = CMatrix::zeros(d, d);
        let id = CMatrix::identity(d, d);
        for k in &self.ops {
            k.adjoint_sandwich_into(&id, &mut sum);
        }
        max_abs(&(sum - id))
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &KrausChannel) -> Result<KrausChannel> {
        self.basis.check_same(&first.basis)?;
        let mut ops = Vec::with_capacity(self.ops.len() * first.ops.len());
        for a in &self.ops {
            for b in &first.ops {
                ops.push(a.mul(b));
            }
        }
        Ok(KrausChannel::new(
            self.basis,
            ops,
            format!("{} . {}", self.label, first.label),
        ))
    }
}

fn check_probability(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::OutOfRange {
            name,
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

pub fn identity_channel(basis: FockBasis) -> KrausChannel {
    let d = basis.dim();
    let mut k = SparseOp::zeros(d);
    for i in 0..d {
        k.push(i, i, ONE);
    }
    KrausChannel::new(basis, vec![k], "identity")
}

pub fn unitary_channel(u: &OperatorMatrix, label: impl Into<String>) -> KrausChannel {
    KrausChannel::new(u.basis, vec![SparseOp::from_dense(&u.matrix, 1e-300)], label)
}

/// Single-mode loss with survival probability q:
/// K_l = Σ_m √(C(m+l, l) qᵐ (1−q)ˡ) |m⟩⟨m+l| on the chosen mode.
pub fn attenuation_channel(q: f64, mode: Mode, basis: FockBasis) -> Result<KrausChannel> {
    check_probability("q", q)?;
    let ops = attenuation_ops(q, mode, basis)?;
    let name = match mode {
        Mode::A => "a",
        Mode::B => "b",
    };
    Ok(KrausChannel::new(basis, ops, format!("attenuation(q={q}, mode={name})")))
}

fn attenuation_ops(q: f64, mode: Mode, basis: FockBasis) -> Result<Vec<SparseOp>> {
    let d = basis.dim();
    let mut ops = Vec::with_capacity(basis.n_max + 1);
    for l in 0..=basis.n_max {
        let mut k = SparseOp::zeros(d);
        for col in 0..d {
            let (na, nb) = basis.pair(col);
            let occupied = match mode {
                Mode::A => na,
                Mode::B => nb,
            };
            if occupied < l {
                continue;
            }
            let kept = occupied - l;
            let amp = (binomial(occupied as u64, l as u64) * q.powi(kept as i32) * (1.0 - q).powi(l as i32)).sqrt();
            if amp == 0.0 {
                continue;
            }
            let row = match mode {
                Mode::A => basis.index(kept, nb)?,
                Mode::B => basis.index(na, kept)?,
            };
            k.push(row, col, C64::new(amp, 0.0));
        }
        ops.push(k);
    }
    Ok(ops)
}

/// Diattenuation along n: rotate n to the pole, attenuate a by q and b by r, rotate back.
pub fn diattenuation_channel(q: f64, r: f64, axis: &Vector3<f64>, basis: FockBasis) -> Result<KrausChannel> {
    check_probability("q", q)?;
    check_probability("r", r)?;
    check_unit(axis)?;
    let a_ops = attenuation_ops(q, Mode::A, basis)?;
    let b_ops = attenuation_ops(r, Mode::B, basis)?;
    let mut ops = Vec::new();
    for ka in &a_ops {
        if ka.frobenius_sq() == 0.0 {
            continue;
        }
        for kb in &b_ops {
            if kb.frobenius_sq() == 0.0 {
                continue;
            }
            ops.push(ka.mul(kb));
        }
    }
    let (theta, rot_axis) = rotation_between(axis, &e3());
    if theta != 0.0 {
        let u = rotation_operator(theta, &rot_axis, basis)?.matrix;
        let ud = u.adjoint();
        ops = ops
            .iter()
            .map(|k| SparseOp::from_dense(&(&ud * k.to_dense() * &u), 1e-15))
            .collect();
    }
    Ok(KrausChannel::new(
        basis,
        ops,
        format!("diattenuation(q={q}, r={r}, n=[{}, {}, {}])", axis.x, axis.y, axis.z),
    ))
}

pub fn rotation_channel(theta: f64, axis: &Vector3<f64>, basis: FockBasis) -> Result<KrausChannel> {
    let u = rotation_operator(theta, axis, basis)?;
    Ok(unitary_channel(&u, format!("rotation(theta={theta})")))
}

/// Σ λᵢ R̂ᵢ ρ R̂ᵢ† with positive weights summing to one.
pub fn rotation_mixture_channel(weights: &[f64], rotations: &[(f64, Vector3<f64>)], basis: FockBasis) -> Result<KrausChannel> {
    if weights.is_empty() {
        return Err(Error::Empty("rotation mixture"));
    }
    if weights.len() != rotations.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            got: rotations.len(),
        });
    }
    if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::InvalidWeights("rotation weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let ops = weights
        .iter()
        .zip(rotations)
        .map(|(w, (theta, axis))| {
            let u = rotation_operator(*theta, axis, basis)?.matrix * C64::from(w.sqrt());
            Ok(SparseOp::from_dense(&u, 1e-300))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausChannel::new(basis, ops, "rotation mixture"))
}

/// Exact twirl over all rotations: each layer block becomes Tr(ρ_N) 𝟙_N/(N+1).
pub fn complete_depolarizer(basis: FockBasis) -> KrausChannel {
    let d = basis.dim();
    let mut ops = Vec::new();
    for n in basis.layers() {
        let range = basis.layer_range(n);
        let w = C64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
        for i in range.clone() {
            for j in range.clone() {
                let mut k = SparseOp::zeros(d);
                k.push(i, j, w);
                ops.push(k);
            }
        }
    }
    KrausChannel::new(basis, ops, "complete depolarizer")
}

/// K_{m,n} = |Ω^{(m+n)}⟩⟨m,n|: every photon ends up polarized along Ω.
pub fn lossless_polarizer_channel(dir: PolarAngles, basis: FockBasis) -> KrausChannel {
    let d = basis.dim();
    let mut ops = Vec::with_capacity(d);
    for n in basis.layers() {
        let amps = su2_layer_amplitudes(n, dir);
        let start = basis.layer_range(n).start;
        for col in basis.layer_range(n) {
            let mut k = SparseOp::zeros(d);
            for (m, a) in amps.iter().enumerate() {
                if a.norm() > 0.0 {
                    k.push(start + m, col, *a);
                }
            }
            ops.push(k);
        }
    }
    KrausChannel::new(basis, ops, "lossless polarizer")
}

/// K_j = |target⟩⟨j| over the whole basis: every input is replaced by `target`.
pub fn fixed_output_channel(target: &FockState) -> Result<KrausChannel> {
    let v = target
        .amplitudes()
        .ok_or_else(|| Error::InvalidState("fixed-output target must be pure".into()))?;
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::InvalidState("fixed-output target is zero".into()));
    }
    let basis = target.basis;
    let d = basis.dim();
    let support: Vec<(usize, C64)> = v
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(i, a)| (i, a / norm))
        .collect();
    let ops = (0..d)
        .map(|col| {
            let mut k = SparseOp::zeros(d);
            for &(row, a) in &support {
                k.push(row, col, a);
            }
            k
        })
        .collect();
    Ok(KrausChannel::new(basis, ops, "fixed output"))
}

/// exp(−iχŜ₃²), a nonlinear polarization dynamics.
pub fn kerr_unitary(chi: f64, basis: FockBasis) -> KrausChannel {
    let d = basis.dim();
    let mut k = SparseOp::zeros(d);
    for i in 0..d {
        let (na, nb) = basis.pair(i);
        let s3 = (na as f64 - nb as f64) / 2.0;
        k.push(i, i, C64::from_polar(1.0, -chi * s3 * s3));
    }
    KrausChannel::new(basis, vec![k], format!("kerr(chi={chi})"))
}

/// Channel on the n_max = 1 basis acting as the Jones matrices J_i on one
/// photon and as the identity on the vacuum. Requires Σ J_i†J_i = 𝟙.
pub fn jones_kraus_channel(js: &[JonesMatrix]) -> Result<KrausChannel> {
    if js.is_empty() {
        return Err(Error::Empty("Jones Kraus set"));
    }
    let mut sum = nalgebra::Matrix2::<C64>::zeros();
    for j in js {
        sum += j.0.adjoint() * j.0;
    }
    let defect = (sum - nalgebra::Matrix2::identity()).camax();
    if defect > COMPLETENESS_TOL {
        return Err(Error::NonPhysical(format!("sum of J^dag J differs from identity by {defect:e}")));
    }
    let basis = FockBasis::new(1);
    let d = basis.dim();
    let vac = basis.index(0, 0)?;
    // Jones index 0 is R = |1,0⟩, index 1 is L = |0,1⟩.
    let slot = [basis.index(1, 0)?, basis.index(0, 1)?];
    let mut ops = Vec::new();
    let mut p0 = SparseOp::zeros(d);
    p0.push(vac, vac, ONE);
    ops.push(p0);
    for j in js {
        let mut k = SparseOp::zeros(d);
        for r in 0..2 {
            for c in 0..2 {
                if j.0[(r, c)] != ZERO {
                    k.push(slot[r], slot[c], j.0[(r, c)]);
                }
            }
        }
        ops.push(k);
    }
    Ok(KrausChannel::new(basis, ops, "jones kraus"))
}

/// Σ K ρ K†.
pub fn apply(channel: &KrausChannel, state: &FockState) -> Result<FockState> {
    apply_with(channel, state, Execution::default())
}

pub fn apply_with(channel: &KrausChannel, state: &FockState, exec: Execution) -> Result<FockState> {
    channel.basis.check_same(&state.basis)?;
    let d = state.basis.dim();
    let zero = || CMatrix::zeros(d, d);
    let add = |a: CMatrix, b: CMatrix| a + b;
    let rho = match &state.kind {
        StateKind::Pure(psi) => fold_reduce(
            exec,
            &channel.ops,
            zero,
            |mut acc, k| {
                k.pure_sandwich_into(psi, &mut acc);
                acc
            },
            add,
        ),
        StateKind::Density(rho) => fold_reduce(
            exec,
            &channel.ops,
            zero,
            |mut acc, k| {
                k.sandwich_into(rho, &mut acc);
                acc
            },
            add,
        ),
    };
    FockState::density(state.basis, rho, state.leakage)
}

/// Σ K† O K.
pub fn heisenberg_apply(channel: &KrausChannel, op: &OperatorMatrix) -> Result<OperatorMatrix> {
    channel.basis.check_same(&op.basis)?;
    let d = op.basis.dim();
    let out = fold_reduce(
        Execution::default(),
        &channel.ops,
        || CMatrix::zeros(d, d),
        |mut acc, k| {
            k.adjoint_sandwich_into(&op.matrix, &mut acc);
            acc
        },
        |a, b| a + b,
    );
    Ok(OperatorMatrix {
        basis: op.basis,
        matrix: out,
        hermitian: op.hermitian,
    })
}

/// |R⟩, |L⟩, |H⟩, |D⟩ single-photon probes.
pub fn single_photon_probes(basis: FockBasis) -> Result<Vec<FockState>> {
    basis.check_layer(1)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = basis.index(1, 0)?;
    let l = basis.index(0, 1)?;
    let make = |a: C64, b: C64| {
        let mut v = CVector::zeros(basis.dim());
        v[r] = a;
        v[l] = b;
        FockState::pure(basis, v, 0.0)
    };
    Ok(vec![
        make(ONE, ZERO)?,
        make(ZERO, ONE)?,
        make(C64::new(h, 0.0), C64::new(h, 0.0))?,
        make(C64::new(h, 0.0), C64::new(0.0, h))?,
    ])
}

/// SU(2)-coherent N-photon probes along `count` directions spread over the sphere.
pub fn coherent_probes(n: usize, count: usize, basis: FockBasis) -> Result<Vec<FockState>> {
    fibonacci_sphere(count)
        .iter()
        .map(|v| su2_coherent(n, PolarAngles::from_vector(v), basis))
        .collect()
}

/// Least-squares Mueller matrix of the map S_in ↦ S_out over a probe set.
pub fn induced_mueller(channel: &KrausChannel, probes: &[FockState]) -> Result<InducedMuellerResult> {
    if probes.is_empty() {
        return Err(Error::Empty("probe set"));
    }
    let p = probes.len();
    let mut x = DMatrix::<f64>::zeros(4, p);
    let mut y = DMatrix::<f64>::zeros(4, p);
    for (k, probe) in probes.iter().enumerate() {
        let s_in = stokes_vector(probe).to_array();
        let s_out = stokes_vector(&apply(channel, probe)?).to_array();
        for mu in 0..4 {
            x[(mu, k)] = s_in[mu];
            y[(mu, k)] = s_out[mu];
        }
    }
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = if sv.len() < 4 { 0.0 } else { sv.min() };
    if smin <= 1e-10 * smax.max(1e-300) {
        return Err(Error::RankDeficient(smin));
    }
    let gram = &x * x.transpose();
    let inv = gram
        .try_inverse()
        .ok_or(Error::RankDeficient(smin))?;
    let m = &y * x.transpose() * inv;
    let misfit = &y - &m * &x;
    let residual = (misfit.norm_squared() / (4 * p) as f64).sqrt();
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    Ok(InducedMuellerResult {
        mueller: rows,
        residual,
        probe_count: p,
    })
}

/// Mueller matrix acting on one-photon states.
pub fn single_photon_mueller(channel: &KrausChannel) -> Result<MuellerMatrix> {
    let probes = single_photon_probes(channel.basis)?;
    Ok(induced_mueller(channel, &probes)?.matrix())
}

/// Mueller matrix of a rotation channel, read straight from its layer-1 block.
pub fn rotation_layer_check(theta: f64, axis: &Vector3<f64>) -> MuellerMatrix {
    let u = layer_rotation(1, theta, axis);
    // Layer-1 index 0 is L and index 1 is R; reorder to the (R, L) Jones basis.
    let j = nalgebra::Matrix2::new(u[(1, 1)], u[(1, 0)], u[(0, 1)], u[(0, 0)]);
    crate::mueller::mueller_from_jones(&JonesMatrix(j))
}

#[allow(dead_code)]
fn embed_mueller(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

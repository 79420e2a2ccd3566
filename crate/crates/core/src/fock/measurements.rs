//! Measurement operators on a photon-number layer.

use nalgebra::Vector3;

use crate::error::Result;
use crate::fock::operators::OperatorMatrix;
use crate::fock::rotation::layer_rotation;
use crate::fock::FockBasis;
use crate::linalg::{falling_factorial, CMatrix, C64, ONE};

#[derive(Debug, Clone)]
pub struct MeasurementOperators {
    pub n: usize,
    /// projectors[k][m] = R_k |m, N−m⟩⟨m, N−m| R_k† for each requested rotation.
    pub projectors: Vec<Vec<OperatorMatrix>>,
    /// Ŵ_m = â†ᵐ b̂†^{N−m} âᵐ b̂^{N−m}.
    pub intensity_correlations: Vec<OperatorMatrix>,
    /// T̂_l = Ŝ₃ˡ for l = 0..=l_max.
    pub stokes_powers: Vec<OperatorMatrix>,
    /// Cyclic relative-phase operator Ê⁽ᴺ⁾.
    pub phase: OperatorMatrix,
}

pub fn rotated_projectors(basis: FockBasis, n: usize, theta: f64, axis: &Vector3<f64>) -> Result<Vec<OperatorMatrix>> {
    basis.check_layer(n)?;
    crate::geometry::check_unit(axis)?;
    let u = layer_rotation(n, theta, axis);
    let start = basis.layer_range(n).start;
    let d = basis.dim();
    (0..=n)
        .map(|m| {
            let col = u.column(m);
            let mut p = CMatrix::zeros(d, d);
            p.view_mut((start, start), (n + 1, n + 1))
                .copy_from(&(col * col.adjoint()));
            OperatorMatrix::hermitian(basis, p, 1e-12)
        })
        .collect()
}

/// Normally ordered â†ᵐ b̂†^{N−m} âᵐ b̂^{N−m}; diagonal over the whole basis.
pub fn intensity_correlation(basis: FockBasis, n: usize, m: usize) -> Result<OperatorMatrix> {
    basis.check_layer(n)?;
    if m > n {
        return Err(crate::error::Error::InvalidParameter(format!("W_m needs m <= N, got m = {m}")));
    }
    let d = basis.dim();
    let mut w = CMatrix::zeros(d, d);
    for idx in 0..d {
        let (na, nb) = basis.pair(idx);
        let value = falling_factorial(na as u64, m as u64) * falling_factorial(nb as u64, (n - m) as u64);
        w[(idx, idx)] = C64::new(value, 0.0);
    }
    OperatorMatrix::hermitian(basis, w, 0.0)
}

pub fn stokes_power(basis: FockBasis, l: u32) -> OperatorMatrix {
    let d = basis.dim();
    let mut t = CMatrix::zeros(d, d);
    for idx in 0..d {
        let (na, nb) = basis.pair(idx);
        t[(idx, idx)] = C64::new(((na as f64 - nb as f64) / 2.0).powi(l as i32), 0.0);
    }
    OperatorMatrix {
        basis,
        matrix: t,
        hermitian: true,
    }
}

/// Ê⁽ᴺ⁾ = |N,0⟩⟨0,N| + Σ_{m<N} |m, N−m⟩⟨m+1, N−m−1|, zero off layer N.
pub fn relative_phase_operator(basis: FockBasis, n: usize) -> Result<OperatorMatrix> {
    basis.check_layer(n)?;
    let d = basis.dim();
    let mut e = CMatrix::zeros(d, d);
    for m in 0..n {
        e[(basis.index(m, n - m)?, basis.index(m + 1, n - m - 1)?)] = ONE;
    }
    e[(basis.index(n, 0)?, basis.index(0, n)?)] = ONE;
    OperatorMatrix::new(basis, e)
}

pub fn measurement_operators(
    basis: FockBasis,
    n: usize,
    rotations: &[(f64, Vector3<f64>)],
    l_max: u32,
) -> Result<MeasurementOperators> {
    let projectors = rotations
        .iter()
        .map(|(theta, axis)| rotated_projectors(basis, n, *theta, axis))
        .collect::<Result<Vec<_>>>()?;
    let intensity_correlations = (0..=n)
        .map(|m| intensity_correlation(basis, n, m))
        .collect::<Result<Vec<_>>>()?;
    let stokes_powers = (0..=l_max).map(|l| stokes_power(basis, l)).collect();
    Ok(MeasurementOperators {
        n,
        projectors,
        intensity_correlations,
        stokes_powers,
        phase: relative_phase_operator(basis, n)?,
    })
}

//! Diagnostics on quantum polarization states.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::constructors::su2_layer_amplitudes;
use crate::fock::moments::{directional_moments, dop, moments};
use crate::fock::rotation::rotate;
use crate::fock::{FockState, StateKind};
use crate::geometry::{e3, fibonacci_sphere, rotation_between, PolarAngles};

/// Directions used by the anticoherence check.
pub fn default_direction_grid() -> Vec<Vector3<f64>> {
    fibonacci_sphere(64)
}

/// Largest k ≤ k_max with ⟨(Ŝ·n)^j⟩ direction independent over the grid for all j ≤ k.
pub fn anticoherence_order(state: &FockState, k_max: usize, grid: &[Vector3<f64>]) -> Result<usize> {
    let (n, _) = state.layer_amplitudes(1e-12)?;
    if k_max == 0 || grid.is_empty() {
        return Ok(0);
    }
    let table: Vec<Vec<f64>> = grid
        .iter()
        .map(|dir| directional_moments(state, dir, k_max))
        .collect();
    let half = (n as f64 / 2.0).max(1.0);
    let mut order = 0;
    for j in 0..k_max {
        let mean = table.iter().map(|row| row[j]).sum::<f64>() / grid.len() as f64;
        let dev = table.iter().fold(0.0_f64, |acc, row| acc.max((row[j] - mean).abs()));
        if dev >= 1e-9 * half.powi(j as i32 + 1) {
            break;
        }
        order = j + 1;
    }
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub variances: [f64; 3],
    pub s0_mean: f64,
    /// 4 Var Ŝ₁ Var Ŝ₂ − |⟨Ŝ₃⟩|², nonnegative for every state.
    pub product_margin: f64,
    /// Σ Var Ŝᵢ − ⟨Ŝ₀⟩, nonnegative for every state and zero for SU(2)-coherent states.
    pub sum_margin: f64,
    /// Σ Var Ŝᵢ − 5/2⟨Ŝ₀⟩, the classical threshold when S₀ is unknown.
    pub classical_unknown_s0_margin: f64,
    /// Σ Var Ŝᵢ − 2⟨Ŝ₀⟩, the classical threshold when S₀ is known.
    pub classical_known_s0_margin: f64,
}

pub fn uncertainty_report(state: &FockState) -> UncertaintyReport {
    let m = moments(state);
    let v = m.variances();
    let sum: f64 = v.iter().sum();
    UncertaintyReport {
        variances: v,
        s0_mean: m.s0_mean,
        product_margin: 4.0 * v[0] * v[1] - m.mean[2] * m.mean[2],
        sum_margin: sum - m.s0_mean,
        classical_unknown_s0_margin: sum - 2.5 * m.s0_mean,
        classical_known_s0_margin: sum - 2.0 * m.s0_mean,
    }
}

/// Husimi function ⟨Ω⁽ᴺ⁾|ρ|Ω⁽ᴺ⁾⟩ on layer N.
pub fn husimi_q(state: &FockState, dir: PolarAngles, n: usize) -> Result<f64> {
    state.basis.check_layer(n)?;
    let amps = su2_layer_amplitudes(n, dir);
    let start = state.basis.layer_range(n).start;
    let q = match &state.kind {
        StateKind::Pure(v) => {
            let seg = v.rows(start, n + 1);
            amps.dotc(&seg).norm_sqr()
        }
        StateKind::Density(_) => {
            let block = state.layer_block(n);
            (amps.adjoint() * block * &amps)[(0, 0)].re
        }
    };
    Ok(q)
}

/// Residuals of ⟨Ŝ₃⟩ = 0 and ⟨Ŝ₁ ± iŜ₂⟩ = 0 written as sums over layer amplitudes.
pub fn unpolarized_constraints(state: &FockState) -> Result<[f64; 3]> {
    let (n, psi) = state.layer_amplitudes(1e-12)?;
    let nf = n as f64;
    let s3: f64 = (0..=n).map(|m| (m as f64 - nf / 2.0) * psi[m].norm_sqr()).sum();
    let raising: num_complex::Complex64 = (0..n)
        .map(|m| psi[m + 1].conj() * psi[m] * (((m + 1) * (n - m)) as f64).sqrt())
        .sum();
    Ok([s3.abs(), raising.re.abs(), raising.im.abs()])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectPolarizationReport {
    /// `None` for the vacuum.
    pub dop: Option<f64>,
    pub direction: Option<PolarAngles>,
    /// ⟨b̂†_Ω b̂_Ω⟩ after rotating the mean direction to the pole; only computed when dop ≈ 1.
    pub orthogonal_mode_occupation: Option<f64>,
    pub perfectly_polarized: bool,
}

/// A state is perfectly polarized along Ω exactly when the mode orthogonal to Ω is empty.
pub fn perfect_polarization_test(state: &FockState, tol: f64) -> Result<PerfectPolarizationReport> {
    let p = match dop(state) {
        Ok(p) => p,
        Err(_) => {
            return Ok(PerfectPolarizationReport {
                dop: None,
                direction: None,
                orthogonal_mode_occupation: None,
                perfectly_polarized: false,
            })
        }
    };
    let m = moments(state);
    let mean = m.mean_vector();
    let direction = (mean.norm() > 0.0).then(|| PolarAngles::from_vector(&mean));
    if (1.0 - p) > tol {
        return Ok(PerfectPolarizationReport {
            dop: Some(p),
            direction,
            orthogonal_mode_occupation: None,
            perfectly_polarized: false,
        });
    }
    let (theta, axis) = rotation_between(&mean, &e3());
    let aligned = rotate(state, theta, &axis)?;
    let basis = state.basis;
    let occupation: f64 = (0..basis.dim())
        .map(|idx| {
            let (_, nb) = basis.pair(idx);
            let pop = match &aligned.kind {
                StateKind::Pure(v) => v[idx].norm_sqr(),
                StateKind::Density(r) => r[(idx, idx)].re,
            };
            nb as f64 * pop
        })
        .sum();
    let scale = (2.0 * m.s0_mean).max(1.0);
    Ok(PerfectPolarizationReport {
        dop: Some(p),
        direction,
        orthogonal_mode_occupation: Some(occupation),
        perfectly_polarized: occupation <= 1e-10 * scale,
    })
}

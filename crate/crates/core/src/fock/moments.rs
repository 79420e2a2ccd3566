use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::operators::layer_spin;
use crate::fock::FockState;
use crate::linalg::{trace_product, CMatrix, C64};
use crate::stokes::StokesVector;

/// First and second moments of the Stokes operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesMoments {
    pub s0_mean: f64,
    pub mean: [f64; 3],
    /// Symmetrized covariance ½⟨{Ŝᵢ, Ŝⱼ}⟩ − ⟨Ŝᵢ⟩⟨Ŝⱼ⟩.
    pub covariance: [[f64; 3]; 3],
}

impl StokesMoments {
    pub fn mean_vector(&self) -> Vector3<f64> {
        Vector3::from(self.mean)
    }

    pub fn covariance_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.covariance[i][j])
    }

    pub fn variances(&self) -> [f64; 3] {
        [self.covariance[0][0], self.covariance[1][1], self.covariance[2][2]]
    }
}

/// Stokes operators are block diagonal, so every moment is a sum over layer blocks.
pub fn moments(state: &FockState) -> StokesMoments {
    let mut s0 = 0.0;
    let mut mean = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for n in state.basis.layers() {
        let block = state.layer_block(n);
        let weight: f64 = (0..=n).map(|k| block[(k, k)].re).sum();
        if weight == 0.0 && block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        s0 += weight * n as f64 / 2.0;
        let spin = layer_spin(n);
        let applied: Vec<CMatrix> = spin.j.iter().map(|j| &block * j).collect();
        for i in 0..3 {
            mean[i] += crate::linalg::trace(&applied[i]).re;
            for j in i..3 {
                let v = trace_product(&applied[i], &spin.j[j]).re;
                second[i][j] += v;
            }
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let c = second[i][j] - mean[i] * mean[j];
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    StokesMoments {
        s0_mean: s0,
        mean,
        covariance: cov,
    }
}

pub fn stokes_vector(state: &FockState) -> StokesVector {
    let m = moments_first(state);
    StokesVector::new(m.0, m.1[0], m.1[1], m.1[2])
}

fn moments_first(state: &FockState) -> (f64, [f64; 3]) {
    let mut s0 = 0.0;
    let mut mean = [0.0; 3];
    for n in state.basis.layers() {
        let block = state.layer_block(n);
        let spin = layer_spin(n);
        s0 += (0..=n).map(|k| block[(k, k)].re).sum::<f64>() * n as f64 / 2.0;
        for (i, m) in mean.iter_mut().enumerate() {
            *m += trace_product(&block, &spin.j[i]).re;
        }
    }
    (s0, mean)
}

/// |⟨𝐒̂⟩| / ⟨Ŝ₀⟩.
pub fn dop(state: &FockState) -> Result<f64> {
    let s = stokes_vector(state);
    if s.s0 <= 1e-300 {
        return Err(Error::ZeroIntensity);
    }
    Ok(s.polarization().norm() / s.s0)
}

/// ⟨(Ŝ·n)^k⟩ for k = 1..=k_max.
pub fn directional_moments(state: &FockState, dir: &Vector3<f64>, k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max];
    for n in state.basis.layers() {
        let block = state.layer_block(n);
        if block.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let proj = layer_spin(n).along(dir);
        let mut power = block.clone();
        for slot in out.iter_mut() {
            power = &power * &proj;
            *slot += crate::linalg::trace(&power).re;
        }
    }
    out
}

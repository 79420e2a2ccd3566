use nalgebra::Vector3;

use crate::error::Result;
use crate::fock::operators::{layer_spin, OperatorMatrix};
use crate::fock::{FockBasis, FockState, StateKind};
use crate::geometry::check_unit;
use crate::linalg::{expm_hermitian, CMatrix, C64};

/// exp(−iΘ n·J) on the photon-number-N layer.
pub fn layer_rotation(n: usize, theta: f64, axis: &Vector3<f64>) -> CMatrix {
    let h = layer_spin(n).along(axis);
    expm_hermitian(&h, C64::new(0.0, -theta))
}

/// Block-diagonal rotation operator exp(−iΘ n·Ŝ).
pub fn rotation_operator(theta: f64, axis: &Vector3<f64>, basis: FockBasis) -> Result<OperatorMatrix> {
    check_unit(axis)?;
    let d = basis.dim();
    let mut u = CMatrix::zeros(d, d);
    for n in basis.layers() {
        let r = basis.layer_range(n);
        u.view_mut((r.start, r.start), (n + 1, n + 1))
            .copy_from(&layer_rotation(n, theta, axis));
    }
    OperatorMatrix::new(basis, u)
}

/// Apply a block-diagonal unitary given by its layer blocks.
pub fn apply_layer_unitaries(state: &FockState, blocks: &[CMatrix]) -> FockState {
    let basis = state.basis;
    let kind = match &state.kind {
        StateKind::Pure(v) => {
            let mut out = v.clone();
            for n in basis.layers() {
                let r = basis.layer_range(n);
                let seg = v.rows(r.start, r.len());
                out.rows_mut(r.start, r.len()).copy_from(&(&blocks[n] * seg));
            }
            StateKind::Pure(out)
        }
        StateKind::Density(rho) => {
            let mut out = rho.clone();
            for n in basis.layers() {
                let rn = basis.layer_range(n);
                for m in basis.layers() {
                    let rm = basis.layer_range(m);
                    let block = rho.view((rn.start, rm.start), (rn.len(), rm.len()));
                    if block.iter().all(|z| z.norm_sqr() == 0.0) {
                        continue;
                    }
                    let rotated = &blocks[n] * block * blocks[m].adjoint();
                    out.view_mut((rn.start, rm.start), (rn.len(), rm.len()))
                        .copy_from(&rotated);
                }
            }
            StateKind::Density(out)
        }
    };
    FockState {
        basis,
        kind,
        leakage: state.leakage,
    }
}

/// R̂ ρ R̂† with R̂ = exp(−iΘ n·Ŝ).
pub fn rotate(state: &FockState, theta: f64, axis: &Vector3<f64>) -> Result<FockState> {
    check_unit(axis)?;
    let blocks: Vec<CMatrix> = state
        .basis
        .layers()
        .map(|n| layer_rotation(n, theta, axis))
        .collect();
    Ok(apply_layer_unitaries(state, &blocks))
}

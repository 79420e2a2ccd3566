//! Tracing out photons from a beam.

use crate::error::{Error, Result};
use crate::fock::{FockState, StateKind};
use crate::linalg::{CMatrix, C64};

/// Trace one photon out of a layer-N block (indexed by the number of R photons).
pub fn trace_one_photon_block(block: &CMatrix) -> Result<CMatrix> {
    let n = block.nrows().checked_sub(1).ok_or(Error::Empty("layer block"))?;
    if n == 0 {
        return Err(Error::VacuumLayer);
    }
    let nf = n as f64;
    Ok(CMatrix::from_fn(n, n, |m, k| {
        let lose_l = (((n - m) * (n - k)) as f64).sqrt() / nf;
        let lose_r = (((m + 1) * (k + 1)) as f64).sqrt() / nf;
        block[(m, k)] * lose_l + block[(m + 1, k + 1)] * lose_r
    }))
}

/// Trace one photon out of every layer. Coherences between different photon
/// numbers are not defined after losing an unidentified photon and are dropped.
pub fn partial_trace_one_photon(state: &FockState) -> Result<FockState> {
    let weights = state.layer_weights();
    let total: f64 = weights.iter().sum();
    if weights[0] > 1e-12 * total.max(1e-300) {
        return Err(Error::VacuumLayer);
    }
    let basis = state.basis;
    let d = basis.dim();
    let mut rho = CMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for n in 1..=basis.n_max {
        if weights[n] == 0.0 {
            continue;
        }
        let reduced = trace_one_photon_block(&state.layer_block(n))?;
        let r = basis.layer_range(n - 1);
        rho.view_mut((r.start, r.start), (n, n)).copy_from(&reduced);
    }
    FockState::density(basis, rho, state.leakage)
}

/// Reduce a single-layer state on N photons to its M-photon marginal.
pub fn reduce_to(state: &FockState, m: usize) -> Result<FockState> {
    let n = state.single_layer(1e-12).ok_or(Error::NotSingleLayer)?;
    if m > n {
        return Err(Error::InvalidParameter(format!(
            "cannot reduce an {n}-photon state to {m} photons"
        )));
    }
    let mut current = match state.kind {
        StateKind::Pure(_) => state.to_density(),
        StateKind::Density(_) => state.clone(),
    };
    for _ in m..n {
        current = partial_trace_one_photon(&current)?;
    }
    Ok(current)
}

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::linalg::{hermitian_eigen, hermiticity_defect, trace, CMatrix, CVector, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Pure(CVector),
    Density(CMatrix),
}

/// Two-mode polarization state on a truncated Fock basis.
///
/// `leakage` is the probability mass that a constructor could not place inside
/// the truncation. It is never renormalized away: a pure state has norm²
/// 1 − leakage and a density matrix has trace 1 − leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub basis: FockBasis,
    pub kind: StateKind,
    pub leakage: f64,
}

impl FockState {
    pub fn pure(basis: FockBasis, amplitudes: CVector, leakage: f64) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            basis,
            kind: StateKind::Pure(amplitudes),
            leakage,
        })
    }

    pub fn density(basis: FockBasis, rho: CMatrix, leakage: f64) -> Result<Self> {
        let d = basis.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: rho.nrows().max(rho.ncols()),
            });
        }
        Ok(Self {
            basis,
            kind: StateKind::Density(rho),
            leakage,
        })
    }

    /// The Fock state |m, n⟩.
    pub fn fock(basis: FockBasis, m: usize, n: usize) -> Result<Self> {
        let mut v = CVector::zeros(basis.dim());
        v[basis.index(m, n)?] = C64::new(1.0, 0.0);
        Self::pure(basis, v, 0.0)
    }

    pub fn vacuum(basis: FockBasis) -> Self {
        Self::fock(basis, 0, 0).expect("vacuum always fits")
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.kind, StateKind::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.kind {
            StateKind::Pure(v) => Some(v),
            StateKind::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.kind {
            StateKind::Pure(v) => v * v.adjoint(),
            StateKind::Density(rho) => rho.clone(),
        }
    }

    pub fn to_density(&self) -> FockState {
        FockState {
            basis: self.basis,
            kind: StateKind::Density(self.density_matrix()),
            leakage: self.leakage,
        }
    }

    /// ⟨ψ|ψ⟩ or Tr ρ.
    pub fn trace(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.norm_squared(),
            StateKind::Density(rho) => trace(rho).re,
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.kind {
            StateKind::Pure(v) => v.norm_squared().powi(2),
            StateKind::Density(rho) => rho.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Tr(ρ O).
    pub fn expect(&self, op: &CMatrix) -> C64 {
        match &self.kind {
            StateKind::Pure(v) => (v.adjoint() * (op * v))[(0, 0)],
            StateKind::Density(rho) => crate::linalg::trace_product(rho, op),
        }
    }

    /// Diagonal block ρ_NN of the photon-number-N layer.
    pub fn layer_block(&self, n: usize) -> CMatrix {
        let r = self.basis.layer_range(n);
        match &self.kind {
            StateKind::Pure(v) => {
                let seg = v.rows(r.start, r.len()).into_owned();
                &seg * seg.adjoint()
            }
            StateKind::Density(rho) => rho.view((r.start, r.start), (r.len(), r.len())).into_owned(),
        }
    }

    /// Probability of each photon-number layer.
    pub fn layer_weights(&self) -> Vec<f64> {
        self.basis
            .layers()
            .map(|n| {
                let r = self.basis.layer_range(n);
                match &self.kind {
                    StateKind::Pure(v) => r.map(|i| v[i].norm_sqr()).sum(),
                    StateKind::Density(rho) => r.map(|i| rho[(i, i)].re).sum(),
                }
            })
            .collect()
    }

    /// The unique layer carrying all of the weight, if any.
    pub fn single_layer(&self, tol: f64) -> Option<usize> {
        let w = self.layer_weights();
        let total: f64 = w.iter().sum();
        let mut found = None;
        for (n, &x) in w.iter().enumerate() {
            if x > tol * total.max(1e-300) {
                if found.is_some() {
                    return None;
                }
                found = Some(n);
            }
        }
        found
    }

    /// Amplitudes of a pure single-layer state, indexed by m.
    pub fn layer_amplitudes(&self, tol: f64) -> Result<(usize, CVector)> {
        let v = self.amplitudes().ok_or(Error::NotSingleLayer)?;
        let n = self.single_layer(tol).ok_or(Error::NotSingleLayer)?;
        let r = self.basis.layer_range(n);
        Ok((n, v.rows(r.start, r.len()).into_owned()))
    }

    /// Hermiticity, positivity and trace diagnostics.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let expected = 1.0 - self.leakage;
        let tr = self.trace();
        if (tr - expected).abs() > tol.max(1e-9) {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 - leakage = {expected}"
            )));
        }
        if let StateKind::Density(rho) = &self.kind {
            let defect = hermiticity_defect(rho);
            if defect > tol {
                return Err(Error::NotHermitian(defect));
            }
            let (vals, _) = hermitian_eigen(rho);
            if let Some(&min) = vals.first() {
                if min < -tol.max(1e-9) {
                    return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
                }
            }
        }
        Ok(())
    }

    /// Convex mixture Σ w_k ρ_k.
    pub fn mixture(weights: &[f64], states: &[FockState]) -> Result<FockState> {
        let first = states.first().ok_or(Error::Empty("state mixture"))?;
        if weights.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                got: states.len(),
            });
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidWeights("mixture weights must be nonnegative".into()));
        }
        let d = first.basis.dim();
        let mut rho = CMatrix::from_element(d, d, ZERO);
        let mut leakage = 0.0;
        for (w, s) in weights.iter().zip(states) {
            first.basis.check_same(&s.basis)?;
            rho += s.density_matrix() * C64::from(*w);
            leakage += w * s.leakage;
        }
        FockState::density(first.basis, rho, leakage)
    }
}

/// |⟨ψ|φ⟩|² for pure states, ⟨ψ|ρ|ψ⟩ for one pure argument, and the Uhlmann
/// fidelity (Tr√(√ρ σ √ρ))² otherwise.
pub fn fidelity(a: &FockState, b: &FockState) -> Result<f64> {
    a.basis.check_same(&b.basis)?;
    match (&a.kind, &b.kind) {
        (StateKind::Pure(x), StateKind::Pure(y)) => Ok(x.dotc(y).norm_sqr()),
        (StateKind::Pure(x), StateKind::Density(r)) | (StateKind::Density(r), StateKind::Pure(x)) => {
            Ok((x.adjoint() * (r * x))[(0, 0)].re)
        }
        (StateKind::Density(r), StateKind::Density(s)) => {
            let sr = psd_sqrt(r);
            let inner = &sr * s * &sr;
            let (vals, _) = hermitian_eigen(&inner);
            let t: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
            Ok(t * t)
        }
    }
}

pub(crate) fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let mut scaled = vecs.clone();
    for (k, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for i in 0..scaled.nrows() {
            scaled[(i, k)] *= s;
        }
    }
    scaled * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_state_layers() {
        let b = FockBasis::new(3);
        let s = FockState::fock(b, 1, 2).unwrap();
        assert_eq!(s.single_layer(1e-12), Some(3));
        let (n, amps) = s.layer_amplitudes(1e-12).unwrap();
        assert_eq!(n, 3);
        assert_eq!(amps[1], C64::new(1.0, 0.0));
        assert!(FockState::fock(b, 3, 1).is_err());
    }

    #[test]
    fn mixture_fidelity() {
        let b = FockBasis::new(2);
        let x = FockState::fock(b, 1, 0).unwrap();
        let y = FockState::fock(b, 0, 1).unwrap();
        let mix = FockState::mixture(&[0.5, 0.5], &[x.clone(), y]).unwrap();
        mix.validate(1e-12).unwrap();
        assert!((fidelity(&x, &mix).unwrap() - 0.5).abs() < 1e-15);
        assert!((fidelity(&mix, &mix).unwrap() - 1.0).abs() < 1e-12);
        assert!((mix.purity() - 0.5).abs() < 1e-15);
    }
}

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::linalg::{hermiticity_defect, CMatrix, C64, ZERO};

/// Operator on a truncated two-mode Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: FockBasis,
    pub matrix: CMatrix,
    pub hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(basis: FockBasis, matrix: CMatrix) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self {
            basis,
            matrix,
            hermitian: false,
        })
    }

    /// Wrap a matrix that must be Hermitian within `tol`.
    pub fn hermitian(basis: FockBasis, matrix: CMatrix, tol: f64) -> Result<Self> {
        let mut op = Self::new(basis, matrix)?;
        let defect = hermiticity_defect(&op.matrix);
        if defect > tol {
            return Err(Error::NotHermitian(defect));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn identity(basis: FockBasis) -> Self {
        let d = basis.dim();
        Self {
            basis,
            matrix: CMatrix::identity(d, d),
            hermitian: true,
        }
    }
}

/// Spin matrices (J₁, J₂, J₃) of the photon-number-N layer in the |m, N−m⟩ basis.
#[derive(Debug, Clone)]
pub struct LayerSpin {
    pub n: usize,
    pub j: [CMatrix; 3],
}

impl LayerSpin {
    fn build(n: usize) -> Self {
        let d = n + 1;
        let mut j1 = CMatrix::zeros(d, d);
        let mut j2 = CMatrix::zeros(d, d);
        let mut j3 = CMatrix::zeros(d, d);
        for m in 0..d {
            j3[(m, m)] = C64::new(m as f64 - n as f64 / 2.0, 0.0);
            if m < n {
                // â†b̂ |m, N−m⟩ = √((m+1)(N−m)) |m+1, N−m−1⟩
                let amp = (((m + 1) * (n - m)) as f64).sqrt() / 2.0;
                j1[(m + 1, m)] = C64::new(amp, 0.0);
                j1[(m, m + 1)] = C64::new(amp, 0.0);
                j2[(m + 1, m)] = C64::new(0.0, -amp);
                j2[(m, m + 1)] = C64::new(0.0, amp);
            }
        }
        Self {
            n,
            j: [j1, j2, j3],
        }
    }

    /// n·J for a direction vector.
    pub fn along(&self, dir: &Vector3<f64>) -> CMatrix {
        &self.j[0] * C64::from(dir.x) + &self.j[1] * C64::from(dir.y) + &self.j[2] * C64::from(dir.z)
    }
}

/// Full-basis Stokes operators Ŝ₀..Ŝ₃.
#[derive(Debug, Clone)]
pub struct StokesOperators {
    pub basis: FockBasis,
    pub s: [CMatrix; 4],
}

impl StokesOperators {
    fn build(basis: FockBasis) -> Self {
        let d = basis.dim();
        let mut s: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(d, d));
        for n in basis.layers() {
            let spin = layer_spin(n);
            let range = basis.layer_range(n);
            for (k, block) in spin.j.iter().enumerate() {
                s[k + 1]
                    .view_mut((range.start, range.start), (n + 1, n + 1))
                    .copy_from(block);
            }
            for idx in range {
                s[0][(idx, idx)] = C64::new(n as f64 / 2.0, 0.0);
            }
        }
        Self { basis, s }
    }

    pub fn operator(&self, mu: usize) -> OperatorMatrix {
        OperatorMatrix {
            basis: self.basis,
            matrix: self.s[mu].clone(),
            hermitian: true,
        }
    }
}

// Read-mostly caches. A key is built once, under the write lock, and then
// shared through an Arc.
fn cached<K, V, F>(cache: &RwLock<HashMap<K, Arc<V>>>, key: K, build: F) -> Arc<V>
where
    K: std::hash::Hash + Eq + Copy,
    F: FnOnce() -> V,
{
    if let Some(v) = cache.read().expect("operator cache poisoned").get(&key) {
        return Arc::clone(v);
    }
    let mut guard = cache.write().expect("operator cache poisoned");
    Arc::clone(guard.entry(key).or_insert_with(|| Arc::new(build())))
}

pub fn layer_spin(n: usize) -> Arc<LayerSpin> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<LayerSpin>>>> = OnceLock::new();
    cached(CACHE.get_or_init(Default::default), n, || LayerSpin::build(n))
}

pub fn stokes_operators(basis: FockBasis) -> Arc<StokesOperators> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<StokesOperators>>>> = OnceLock::new();
    cached(CACHE.get_or_init(Default::default), basis.n_max, || {
        StokesOperators::build(basis)
    })
}

/// The four Stokes operators as standalone matrices.
pub fn build_stokes_operators(basis: FockBasis) -> [OperatorMatrix; 4] {
    let ops = stokes_operators(basis);
    std::array::from_fn(|mu| ops.operator(mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Annihilation operator of one mode, truncated to the basis.
pub fn annihilation(basis: FockBasis, mode: Mode) -> OperatorMatrix {
    let d = basis.dim();
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        let (na, nb) = basis.pair(idx);
        let (target, amp) = match mode {
            Mode::A if na > 0 => (basis.index(na - 1, nb), na),
            Mode::B if nb > 0 => (basis.index(na, nb - 1), nb),
            _ => continue,
        };
        if let Ok(t) = target {
            m[(t, idx)] = C64::new((amp as f64).sqrt(), 0.0);
        }
    }
    OperatorMatrix {
        basis,
        matrix: m,
        hermitian: false,
    }
}

/// Total photon number N̂ = 2Ŝ₀.
pub fn number_operator(basis: FockBasis) -> OperatorMatrix {
    let d = basis.dim();
    let mut m = CMatrix::from_element(d, d, ZERO);
    for idx in 0..d {
        let (a, b) = basis.pair(idx);
        m[(idx, idx)] = C64::new((a + b) as f64, 0.0);
    }
    OperatorMatrix {
        basis,
        matrix: m,
        hermitian: true,
    }
}

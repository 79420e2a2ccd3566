//! Random states for property checks and experiments.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fock::majorana::MajoranaConstellation;
use crate::fock::{FockBasis, FockState};
use crate::geometry::PolarAngles;
use crate::linalg::{CMatrix, CVector, C64};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state on layer N.
pub fn random_pure_layer<R: Rng + ?Sized>(n: usize, basis: FockBasis, rng: &mut R) -> Result<FockState> {
    basis.check_layer(n)?;
    let mut layer: Vec<C64> = (0..=n).map(|_| gaussian_complex(rng)).collect();
    let norm = layer.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    layer.iter_mut().for_each(|z| *z /= norm);
    let mut v = CVector::zeros(basis.dim());
    let start = basis.layer_range(n).start;
    for (m, z) in layer.into_iter().enumerate() {
        v[start + m] = z;
    }
    FockState::pure(basis, v, 0.0)
}

/// Random full-rank density matrix on layer N (Ginibre construction).
pub fn random_density_layer<R: Rng + ?Sized>(n: usize, basis: FockBasis, rng: &mut R) -> Result<FockState> {
    basis.check_layer(n)?;
    let g = CMatrix::from_fn(n + 1, n + 1, |_, _| gaussian_complex(rng));
    let mut block = &g * g.adjoint();
    let tr: f64 = (0..=n).map(|k| block[(k, k)].re).sum();
    block /= C64::from(tr);
    let d = basis.dim();
    let mut rho = CMatrix::zeros(d, d);
    let start = basis.layer_range(n).start;
    rho.view_mut((start, start), (n + 1, n + 1)).copy_from(&block);
    FockState::density(basis, rho, 0.0)
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> PolarAngles {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    PolarAngles::new(z.acos(), phi)
}

pub fn random_constellation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MajoranaConstellation {
    MajoranaConstellation {
        stars: (0..n).map(|_| random_direction(rng)).collect(),
    }
}

//! Majorana stellar representation of pure single-layer states.
//!
//! A state ψ on layer N maps to the polynomial P(z) = Σ_m ψ_m √C(N,m) zᵐ. A root
//! z corresponds to the star with tan(Θ/2) = |z| and Φ = arg(−z), which makes the
//! SU(2)-coherent state |Ω⁽ᴺ⁾⟩ an N-fold star sitting at Ω itself.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState};
use crate::geometry::PolarAngles;
use crate::linalg::{binomial, falling_factorial, ln_factorial, CVector, C64, ONE, ZERO};

/// Roots closer than this (relative) are merged into one multiple root.
pub const CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajoranaConstellation {
    pub stars: Vec<PolarAngles>,
}

impl MajoranaConstellation {
    pub fn len(&self) -> usize {
        self.stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stars.is_empty()
    }
}

/// P^{(j)}(z) and the magnitude bound Σ|c_m| m!/(m−j)! |z|^{m−j} used to judge it.
fn derivative(coeffs: &[C64], z: C64, j: usize) -> (C64, f64) {
    let mut value = ZERO;
    let mut bound = 0.0;
    let az = z.norm();
    for (m, c) in coeffs.iter().enumerate().skip(j).rev() {
        let f = falling_factorial(m as u64, j as u64);
        value = value * z + c * f;
        bound = bound * az + c.norm() * f;
    }
    (value, bound)
}

fn newton(coeffs: &[C64], mut z: C64, order: usize, iters: usize) -> C64 {
    for _ in 0..iters {
        let (f, _) = derivative(coeffs, z, order);
        let (df, _) = derivative(coeffs, z, order + 1);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn is_root_of_multiplicity(coeffs: &[C64], z: C64, k: usize) -> bool {
    (0..k).all(|j| {
        let (v, bound) = derivative(coeffs, z, j);
        v.norm() <= CLUSTER_TOL * bound.max(1e-300)
    })
}

fn companion_roots(coeffs: &[C64]) -> Vec<C64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let lead = coeffs[deg];
    let mut m = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = ONE;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    match Schur::try_new(m, 1e-15, 2_000) {
        Some(s) => {
            let (_, t) = s.unpack();
            (0..deg).map(|i| t[(i, i)]).collect()
        }
        None => durand_kerner(coeffs),
    }
}

/// Simultaneous Weierstrass iteration, used when the QR iteration stalls
/// (as it can on highly symmetric companion matrices).
fn durand_kerner(coeffs: &[C64]) -> Vec<C64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..deg].iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..deg).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5_000 {
        let mut change = 0.0_f64;
        for i in 0..deg {
            let p = monic.iter().rev().fold(ZERO, |acc, c| acc * z[i] + c);
            let denom: C64 = (0..deg).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            if denom.norm() == 0.0 {
                continue;
            }
            let step = p / denom;
            z[i] -= step;
            change = change.max(step.norm());
        }
        if change <= 1e-15 * radius {
            break;
        }
    }
    z
}

/// Roots of Σ c_m zᵐ with multiplicity, plus the number of roots at infinity.
fn polynomial_roots(coeffs: &[C64]) -> (Vec<C64>, usize) {
    let scale = coeffs.iter().fold(0.0_f64, |a, c| a.max(c.norm()));
    let negligible = |c: &C64| c.norm() <= 1e-14 * scale;
    let top = coeffs.iter().rposition(|c| !negligible(c)).unwrap_or(0);
    let at_infinity = coeffs.len() - 1 - top;
    let zeros = coeffs.iter().position(|c| !negligible(c)).unwrap_or(0);
    let reduced: Vec<C64> = coeffs[zeros..=top].to_vec();

    let raw = companion_roots(&reduced);
    let mut used = vec![false; raw.len()];
    let mut roots = vec![ZERO; zeros];
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        let radius = 0.1 * (1.0 + raw[i].norm());
        let mut cand: Vec<(f64, usize)> = (0..raw.len())
            .filter(|&j| !used[j])
            .map(|j| ((raw[j] - raw[i]).norm(), j))
            .filter(|(d, _)| *d <= radius)
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut accepted = false;
        for k in (2..=cand.len()).rev() {
            let group = &cand[..k];
            let centroid = group.iter().map(|&(_, j)| raw[j]).sum::<C64>() / k as f64;
            let z = newton(&reduced, centroid, k - 1, 30);
            if is_root_of_multiplicity(&reduced, z, k) {
                for &(_, j) in group {
                    used[j] = true;
                }
                roots.extend(std::iter::repeat_n(z, k));
                accepted = true;
                break;
            }
        }
        if !accepted {
            used[i] = true;
            let polished = newton(&reduced, raw[i], 0, 3);
            let before = derivative(&reduced, raw[i], 0).0.norm();
            let after = derivative(&reduced, polished, 0).0.norm();
            roots.push(if after <= before { polished } else { raw[i] });
        }
    }
    (roots, at_infinity)
}

fn star_from_root(z: C64) -> PolarAngles {
    let theta = 2.0 * z.norm().atan();
    let phi = if z.norm() == 0.0 { 0.0 } else { (-z).arg() };
    normalize(theta, phi)
}

/// Star for a root w of the reversed polynomial, i.e. z = 1/w.
fn star_from_reversed_root(w: C64) -> PolarAngles {
    let theta = 2.0 * 1.0_f64.atan2(w.norm());
    let phi = if w.norm() == 0.0 { 0.0 } else { (-w.conj()).arg() };
    normalize(theta, phi)
}

fn normalize(theta: f64, phi: f64) -> PolarAngles {
    let phi = phi.rem_euclid(std::f64::consts::TAU);
    PolarAngles::new(theta, if phi >= std::f64::consts::TAU { 0.0 } else { phi })
}

/// Stars of a pure state supported on a single photon-number layer.
pub fn majorana_stars(state: &FockState) -> Result<MajoranaConstellation> {
    let (n, amps) = state.layer_amplitudes(1e-12)?;
    if amps.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidState("zero state has no constellation".into()));
    }
    let coeffs: Vec<C64> = (0..=n)
        .map(|m| amps[m] * binomial(n as u64, m as u64).sqrt())
        .collect();
    // Roots are best conditioned inside the unit disk, so take the southern
    // hemisphere from the reversed polynomial.
    let (forward, infinite) = polynomial_roots(&coeffs);
    let reversed_coeffs: Vec<C64> = coeffs.iter().rev().copied().collect();
    let (reversed, _) = polynomial_roots(&reversed_coeffs);

    let mut stars: Vec<PolarAngles> = forward
        .iter()
        .filter(|z| z.norm() <= 1.0)
        .map(|&z| star_from_root(z))
        .collect();
    stars.extend(
        reversed
            .iter()
            .filter(|w| w.norm() < 1.0)
            .map(|&w| star_from_reversed_root(w)),
    );
    if stars.len() != n {
        stars = forward.iter().map(|&z| star_from_root(z)).collect();
        stars.extend(std::iter::repeat_n(PolarAngles::new(std::f64::consts::PI, 0.0), infinite));
    }
    Ok(MajoranaConstellation { stars })
}

/// Normalized ∏_k â†_{Ω_k} |vac⟩, defined up to a global phase.
pub fn state_from_stars(constellation: &MajoranaConstellation, basis: FockBasis) -> Result<FockState> {
    let n = constellation.len();
    basis.check_layer(n)?;
    // e[m] multiplies â†ᵐ b̂†^{n−m}.
    let mut e = vec![ONE];
    for star in &constellation.stars {
        let (s, c) = (star.theta / 2.0).sin_cos();
        let alpha = C64::new(c, 0.0);
        let beta = C64::from_polar(s, star.phi);
        let mut next = vec![ZERO; e.len() + 1];
        for (m, coef) in e.iter().enumerate() {
            next[m + 1] += alpha * coef;
            next[m] += beta * coef;
        }
        e = next;
    }
    let layer: Vec<C64> = e
        .iter()
        .enumerate()
        .map(|(m, coef)| coef * (0.5 * (ln_factorial(m as u64) + ln_factorial((n - m) as u64))).exp())
        .collect();
    let norm = layer.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut v = CVector::zeros(basis.dim());
    let start = basis.layer_range(n).start;
    for (m, z) in layer.iter().enumerate() {
        v[start + m] = z / norm;
    }
    FockState::pure(basis, v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::constructors::{noon_state, su2_coherent, tetrahedron_state};
    use crate::fock::state::fidelity;
    use crate::geometry::angular_distance;

    #[test]
    fn coherent_state_is_one_degenerate_star() {
        let b = FockBasis::new(8);
        for &(theta, phi) in &[(0.0, 0.0), (0.7, 2.0), (std::f64::consts::PI, 0.0), (2.5, 5.0)] {
            let dir = PolarAngles::new(theta, phi);
            for n in [1, 4, 8] {
                let c = majorana_stars(&su2_coherent(n, dir, b).unwrap()).unwrap();
                assert_eq!(c.len(), n);
                for s in &c.stars {
                    assert!(angular_distance(&s.unit_vector(), &dir.unit_vector()) < 1e-9);
                }
                let back = state_from_stars(&c, b).unwrap();
                let f = fidelity(&back, &su2_coherent(n, dir, b).unwrap()).unwrap();
                assert!(f > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn noon_stars_on_equator() {
        let b = FockBasis::new(4);
        let c = majorana_stars(&noon_state(4, b).unwrap()).unwrap();
        let mut phis: Vec<f64> = c.stars.iter().map(|s| s.phi).collect();
        phis.sort_by(f64::total_cmp);
        for s in &c.stars {
            assert!((s.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
        for k in 1..4 {
            assert!((phis[k] - phis[k - 1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn tetrahedron_stars() {
        let b = FockBasis::new(4);
        let c = majorana_stars(&tetrahedron_state(b).unwrap()).unwrap();
        let target = (-1.0f64 / 3.0).acos();
        for i in 0..4 {
            for j in i + 1..4 {
                let d = angular_distance(&c.stars[i].unit_vector(), &c.stars[j].unit_vector());
                assert!((d - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mixed_and_multilayer_rejected() {
        let b = FockBasis::new(3);
        let s = su2_coherent(2, PolarAngles::new(0.3, 0.1), b).unwrap().to_density();
        assert_eq!(majorana_stars(&s), Err(Error::NotSingleLayer));
    }
}

//! Named polarization states.

use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState};
use crate::geometry::PolarAngles;
use crate::linalg::{binomial, ln_factorial, CMatrix, CVector, C64, ZERO};

/// Default bound on truncation leakage for indefinite-photon-number states.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-12;

/// Layer amplitudes ψ_m = √C(N,m) cosᵐ(Θ/2) sin^{N−m}(Θ/2) e^{iΦ(N−m)}.
pub fn su2_layer_amplitudes(n: usize, dir: PolarAngles) -> CVector {
    let (s, c) = (dir.theta / 2.0).sin_cos();
    CVector::from_fn(n + 1, |m, _| {
        let mag = binomial(n as u64, m as u64).sqrt() * c.powi(m as i32) * s.powi((n - m) as i32);
        C64::from_polar(mag, dir.phi * (n - m) as f64)
    })
}

fn embed_layer(basis: FockBasis, n: usize, layer: &CVector, target: &mut CVector) {
    let start = basis.layer_range(n).start;
    for (m, z) in layer.iter().enumerate() {
        target[start + m] += *z;
    }
}

/// N photons all in the mode pointing along Ω.
pub fn su2_coherent(n: usize, dir: PolarAngles, basis: FockBasis) -> Result<FockState> {
    basis.check_layer(n)?;
    let mut v = CVector::zeros(basis.dim());
    embed_layer(basis, n, &su2_layer_amplitudes(n, dir), &mut v);
    FockState::pure(basis, v, 0.0)
}

/// (|N,0⟩ + |0,N⟩)/√2.
pub fn noon_state(n: usize, basis: FockBasis) -> Result<FockState> {
    basis.check_layer(n)?;
    if n == 0 {
        return Err(Error::InvalidParameter("NOON state needs N >= 1".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::zeros(basis.dim());
    v[basis.index(n, 0)?] += C64::new(h, 0.0);
    v[basis.index(0, n)?] += C64::new(h, 0.0);
    FockState::pure(basis, v, 0.0)
}

/// (|4,0⟩ + √2|1,3⟩)/√3, whose Majorana stars form a regular tetrahedron.
pub fn tetrahedron_state(basis: FockBasis) -> Result<FockState> {
    basis.check_layer(4)?;
    let mut v = CVector::zeros(basis.dim());
    let k = 1.0 / 3f64.sqrt();
    v[basis.index(4, 0)?] = C64::new(k, 0.0);
    v[basis.index(1, 3)?] = C64::new(2f64.sqrt() * k, 0.0);
    FockState::pure(basis, v, 0.0)
}

/// Poisson(mean) probability of more than `n_max` photons, summed directly.
fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for k in n_max + 1..n_max + 10_000 {
        let p = (-mean + k as f64 * mean.ln() - ln_factorial(k as u64)).exp();
        tail += p;
        if k as f64 > mean && p <= 1e-20 * tail {
            break;
        }
    }
    tail
}

fn required_poisson_cutoff(mean: f64, threshold: f64) -> usize {
    let mut n = mean.ceil() as usize;
    while poisson_tail(mean, n) > threshold {
        n += 1;
    }
    n
}

fn check_leakage(leakage: f64, threshold: f64, required: impl FnOnce() -> usize) -> Result<()> {
    if leakage > threshold {
        return Err(Error::LeakageExceeded {
            leakage,
            threshold,
            required: required(),
        });
    }
    Ok(())
}

/// Product coherent state |α⟩_a |β⟩_b.
pub fn two_mode_coherent(alpha: C64, beta: C64, basis: FockBasis, threshold: f64) -> Result<FockState> {
    let mean = alpha.norm_sqr() + beta.norm_sqr();
    let leakage = poisson_tail(mean, basis.n_max);
    check_leakage(leakage, threshold, || required_poisson_cutoff(mean, threshold))?;
    let mut v = CVector::zeros(basis.dim());
    for idx in 0..basis.dim() {
        let (m, n) = basis.pair(idx);
        let ln_norm = -mean / 2.0 - 0.5 * (ln_factorial(m as u64) + ln_factorial(n as u64));
        v[idx] = alpha.powu(m as u32) * beta.powu(n as u32) * ln_norm.exp();
    }
    FockState::pure(basis, v, leakage)
}

/// Coherent state of amplitude α in the mode pointing along Ω.
pub fn coherent_polarized(alpha: C64, dir: PolarAngles, basis: FockBasis, threshold: f64) -> Result<FockState> {
    let (s, c) = (dir.theta / 2.0).sin_cos();
    two_mode_coherent(alpha * c, alpha * C64::from_polar(s, dir.phi), basis, threshold)
}

/// Two-mode squeezed vacuum (1/cosh ζ) Σ (−e^{iφ} tanh ζ)ᴺ |N, N⟩.
pub fn tmsv_state(zeta: f64, phi: f64, basis: FockBasis, threshold: f64) -> Result<FockState> {
    let t = zeta.tanh();
    let pairs = basis.n_max / 2;
    let leakage = t.powi(2 * (pairs as i32 + 1));
    check_leakage(leakage, threshold, || {
        let mut k = pairs;
        while t.powi(2 * (k as i32 + 1)) > threshold {
            k += 1;
        }
        2 * k
    })?;
    let mut v = CVector::zeros(basis.dim());
    let ratio = -C64::from_polar(t, phi);
    let mut amp = C64::new(1.0 / zeta.cosh(), 0.0);
    for k in 0..=pairs {
        v[basis.index(k, k)?] = amp;
        amp *= ratio;
    }
    FockState::pure(basis, v, leakage)
}

/// Σ_N β_N 𝟙_N/(N+1). Weights past n_max count as leakage.
pub fn isotropic_state(beta: &[f64], basis: FockBasis, threshold: f64) -> Result<FockState> {
    if beta.is_empty() {
        return Err(Error::Empty("isotropic weights"));
    }
    if beta.iter().any(|&b| b < 0.0 || !b.is_finite()) {
        return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    let total: f64 = beta.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let leakage: f64 = beta.iter().skip(basis.n_max + 1).sum();
    check_leakage(leakage, threshold, || {
        beta.iter()
            .rposition(|&b| b > 0.0)
            .unwrap_or(0)
    })?;
    let d = basis.dim();
    let mut rho = CMatrix::from_element(d, d, ZERO);
    for (n, &b) in beta.iter().enumerate().take(basis.n_max + 1) {
        for idx in basis.layer_range(n) {
            rho[(idx, idx)] = C64::new(b / (n + 1) as f64, 0.0);
        }
    }
    FockState::density(basis, rho, leakage)
}

/// Isotropic state whose layer weights are Poisson with the given mean,
/// the complete depolarization of a coherent beam.
pub fn isotropic_poisson(mean: f64, basis: FockBasis, threshold: f64) -> Result<FockState> {
    let leakage = poisson_tail(mean, basis.n_max);
    check_leakage(leakage, threshold, || required_poisson_cutoff(mean, threshold))?;
    let mut beta: Vec<f64> = (0..=basis.n_max)
        .map(|n| {
            if mean == 0.0 {
                return if n == 0 { 1.0 } else { 0.0 };
            }
            (-mean + n as f64 * mean.ln() - ln_factorial(n as u64)).exp()
        })
        .collect();
    // Carry the tail explicitly so the weights sum to one.
    beta.push(leakage);
    isotropic_state(&beta, basis, threshold)
}

/// (√N|Ω⁽ᴹ⁾⟩ + √M|Ω⊥⁽ᴺ⁾⟩)/√(M+N) with Ω⊥ the antipode of Ω.
pub fn noon_inspired(m: usize, n: usize, dir: PolarAngles, basis: FockBasis) -> Result<FockState> {
    basis.check_layer(m.max(n))?;
    if m + n == 0 {
        return Err(Error::InvalidParameter("M + N must be positive".into()));
    }
    let norm = ((m + n) as f64).sqrt();
    let mut v = CVector::zeros(basis.dim());
    let first = su2_layer_amplitudes(m, dir) * C64::from((n as f64).sqrt() / norm);
    let second = su2_layer_amplitudes(n, dir.antipode()) * C64::from((m as f64).sqrt() / norm);
    embed_layer(basis, m, &first, &mut v);
    embed_layer(basis, n, &second, &mut v);
    FockState::pure(basis, v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operators::number_operator;

    #[test]
    fn su2_coherent_examples() {
        let b = FockBasis::new(4);
        let s = su2_coherent(2, PolarAngles::new(0.0, 0.0), b).unwrap();
        assert_eq!(s.amplitudes().unwrap()[b.index(2, 0).unwrap()], C64::new(1.0, 0.0));
        let t = su2_coherent(1, PolarAngles::new(std::f64::consts::PI, 0.0), b).unwrap();
        assert!((t.amplitudes().unwrap()[b.index(0, 1).unwrap()].norm() - 1.0).abs() < 1e-15);
        assert!(su2_coherent(5, PolarAngles::new(0.0, 0.0), b).is_err());
    }

    #[test]
    fn coherent_mean_photon_number() {
        let b = FockBasis::new(30);
        let s = coherent_polarized(C64::new(2.0, 0.0), PolarAngles::new(0.0, 0.0), b, 1e-12).unwrap();
        let n = s.expect(&number_operator(b).matrix).re;
        assert!((n - 4.0).abs() < 1e-10);
        assert!(s.leakage < 1e-12);
        let err = coherent_polarized(C64::new(2.0, 0.0), PolarAngles::new(0.0, 0.0), FockBasis::new(10), 1e-12);
        match err {
            Err(Error::LeakageExceeded { required, .. }) => {
                assert!(required > 10);
                let ok = coherent_polarized(
                    C64::new(2.0, 0.0),
                    PolarAngles::new(0.0, 0.0),
                    FockBasis::new(required),
                    1e-12,
                );
                assert!(ok.is_ok());
            }
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn tmsv_energy() {
        let zeta = 1f64.asinh();
        let b = FockBasis::new(90);
        let s = tmsv_state(zeta, 0.0, b, 1e-12).unwrap();
        let n = s.expect(&number_operator(b).matrix).re;
        assert!((n - 2.0).abs() < 1e-9);
    }

    #[test]
    fn isotropic_is_diagonal_and_normalized() {
        let b = FockBasis::new(3);
        let s = isotropic_state(&[0.1, 0.2, 0.3, 0.4], b, 1e-12).unwrap();
        s.validate(1e-12).unwrap();
        assert!(isotropic_state(&[0.5, 0.2], b, 1e-12).is_err());
    }

    #[test]
    fn noon_inspired_normalized() {
        let b = FockBasis::new(5);
        let s = noon_inspired(2, 3, PolarAngles::new(0.4, 1.0), b).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-14);
    }
}

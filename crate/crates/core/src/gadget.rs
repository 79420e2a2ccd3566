//! Monte-Carlo model of the SU(2) gadget: a polarization rotation followed by
//! a polarizing beam splitter and two ideal photon counters.
//!
//! Counts are drawn by inverse-CDF sampling from the exact joint distribution
//! P(n₁, n₂) = ⟨n₁, n₂|R ρ R†|n₁, n₂⟩. Shots are split into fixed-size chunks
//! and chunk k draws from ChaCha20 stream k of the seed, so results do not
//! depend on the number of threads.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::rotation::rotate;
use crate::fock::FockState;
use crate::geometry::{e1, e2, e3, rodrigues, rotation_between};
use crate::parallel::{map_range, Execution};
use crate::stokes::StokesVector;

/// Shots per independent RNG stream.
pub const CHUNK: usize = 1 << 16;
/// Largest tolerated probability missing from the sampled distribution.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StokesComponent {
    S1,
    S2,
    S3,
}

impl std::str::FromStr for StokesComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Self::S1),
            "S2" => Ok(Self::S2),
            "S3" => Ok(Self::S3),
            other => Err(Error::InvalidParameter(format!("unknown Stokes component {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetSetting {
    Rotation { theta: f64, axis: [f64; 3] },
    Component(StokesComponent),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GadgetConfig {
    pub setting: GadgetSetting,
    pub shots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub counts: Vec<(u32, u32)>,
    pub totals: (u64, u64),
    pub mean: (f64, f64),
    pub variance: (f64, f64),
}

impl CountRecord {
    fn from_counts(counts: Vec<(u32, u32)>) -> Self {
        let n = counts.len() as f64;
        let t1: u64 = counts.iter().map(|c| c.0 as u64).sum();
        let t2: u64 = counts.iter().map(|c| c.1 as u64).sum();
        let m1 = t1 as f64 / n;
        let m2 = t2 as f64 / n;
        let denom = (n - 1.0).max(1.0);
        let v1 = counts.iter().map(|c| (c.0 as f64 - m1).powi(2)).sum::<f64>() / denom;
        let v2 = counts.iter().map(|c| (c.1 as f64 - m2).powi(2)).sum::<f64>() / denom;
        Self {
            counts,
            totals: (t1, t2),
            mean: (m1, m2),
            variance: (v1, v2),
        }
    }

    /// Per-shot values of (n₁ − n₂)/2.
    pub fn differences(&self) -> impl Iterator<Item = f64> + '_ {
        self.counts.iter().map(|c| (c.0 as f64 - c.1 as f64) / 2.0)
    }

    /// Per-shot values of (n₁ + n₂)/2.
    pub fn sums(&self) -> impl Iterator<Item = f64> + '_ {
        self.counts.iter().map(|c| (c.0 as f64 + c.1 as f64) / 2.0)
    }
}

/// Rotation that carries the requested component onto Ŝ₃.
pub fn gadget_rotation_for(component: StokesComponent) -> (f64, Vector3<f64>) {
    match component {
        StokesComponent::S3 => (0.0, e3()),
        StokesComponent::S1 => rotation_between(&e1(), &e3()),
        StokesComponent::S2 => rotation_between(&e2(), &e3()),
    }
}

fn setting_rotation(setting: &GadgetSetting) -> (f64, Vector3<f64>) {
    match setting {
        GadgetSetting::Rotation { theta, axis } => (*theta, Vector3::from(*axis)),
        GadgetSetting::Component(c) => gadget_rotation_for(*c),
    }
}

/// Fast-axis angles of a quarter-, half- and quarter-wave plate, in the order
/// the light meets them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateAngles {
    pub qwp1: f64,
    pub hwp: f64,
    pub qwp2: f64,
    /// Frobenius distance between the plate sequence and the target rotation.
    pub residual: f64,
}

/// A retarder with retardance δ and fast axis at angle φ rotates the Stokes
/// vector by δ about the equatorial axis (cos 2φ, sin 2φ, 0).
pub fn retarder(delta: f64, phi: f64) -> Matrix3<f64> {
    rodrigues(delta, &Vector3::new((2.0 * phi).cos(), (2.0 * phi).sin(), 0.0))
}

fn plates(a: &[f64; 3]) -> Matrix3<f64> {
    let q = std::f64::consts::FRAC_PI_2;
    retarder(q, a[2]) * retarder(std::f64::consts::PI, a[1]) * retarder(q, a[0])
}

/// QWP–HWP–QWP angles reproducing a rotation, by grid search and local refinement.
pub fn waveplate_angles(theta: f64, axis: &Vector3<f64>) -> WaveplateAngles {
    let target = rodrigues(theta, axis);
    let cost = |a: &[f64; 3]| (plates(a) - target).norm();
    let steps = 24;
    let span = std::f64::consts::PI;
    let mut best = [0.0; 3];
    let mut best_cost = f64::INFINITY;
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                let a = [
                    span * i as f64 / steps as f64,
                    span * j as f64 / steps as f64,
                    span * k as f64 / steps as f64,
                ];
                let c = cost(&a);
                if c < best_cost {
                    best_cost = c;
                    best = a;
                }
            }
        }
    }
    let mut h = span / steps as f64;
    while h > 1e-13 {
        let mut improved = false;
        for d in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut a = best;
                a[d] += sign * h;
                let c = cost(&a);
                if c < best_cost {
                    best_cost = c;
                    best = a;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    let wrap = |x: f64| x.rem_euclid(span);
    WaveplateAngles {
        qwp1: wrap(best[0]),
        hwp: wrap(best[1]),
        qwp2: wrap(best[2]),
        residual: best_cost,
    }
}

/// Cumulative outcome distribution of the two counters after the rotation.
fn outcome_distribution(state: &FockState, setting: &GadgetSetting) -> Result<(Vec<(u32, u32)>, Vec<f64>)> {
    let (theta, axis) = setting_rotation(setting);
    let rotated = if theta == 0.0 {
        state.clone()
    } else {
        rotate(state, theta, &axis)?
    };
    let rho = rotated.density_matrix();
    let basis = state.basis;
    let mut outcomes = Vec::with_capacity(basis.dim());
    let mut cdf = Vec::with_capacity(basis.dim());
    let mut acc = 0.0;
    for idx in 0..basis.dim() {
        let p = rho[(idx, idx)].re.max(0.0);
        if p == 0.0 {
            continue;
        }
        let (na, nb) = basis.pair(idx);
        acc += p;
        outcomes.push((na as u32, nb as u32));
        cdf.push(acc);
    }
    let deficit = 1.0 - acc;
    if deficit > MASS_TOL {
        return Err(Error::MassDeficit(deficit));
    }
    Ok((outcomes, cdf))
}

fn sample_chunk(outcomes: &[(u32, u32)], cdf: &[f64], seed: u64, stream: u64, shots: usize) -> Vec<(u32, u32)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let total = *cdf.last().expect("nonempty distribution");
    (0..shots)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            outcomes[k]
        })
        .collect()
}

fn simulate_streams(state: &FockState, config: &GadgetConfig, stream_base: u64, exec: Execution) -> Result<CountRecord> {
    if config.shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let (outcomes, cdf) = outcome_distribution(state, &config.setting)?;
    if outcomes.is_empty() {
        return Err(Error::MassDeficit(1.0));
    }
    let chunks = config.shots.div_ceil(CHUNK);
    let parts = map_range(exec, chunks, |k| {
        let len = CHUNK.min(config.shots - k * CHUNK);
        sample_chunk(&outcomes, &cdf, config.seed, stream_base + k as u64, len)
    });
    Ok(CountRecord::from_counts(parts.concat()))
}

pub fn simulate_gadget(state: &FockState, config: &GadgetConfig) -> Result<CountRecord> {
    simulate_gadget_with(state, config, Execution::default())
}

pub fn simulate_gadget_with(state: &FockState, config: &GadgetConfig, exec: Execution) -> Result<CountRecord> {
    simulate_streams(state, config, 0, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesEstimate {
    pub stokes: StokesVector,
    pub standard_errors: [f64; 4],
    pub shots: usize,
}

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Run the S1, S2 and S3 settings with `shots` each. Ŝ₀ is estimated from the
/// total counts of all three runs.
pub fn estimate_stokes(state: &FockState, shots: usize, seed: u64) -> Result<StokesEstimate> {
    estimate_stokes_with(state, shots, seed, Execution::default())
}

pub fn estimate_stokes_with(state: &FockState, shots: usize, seed: u64, exec: Execution) -> Result<StokesEstimate> {
    if shots < 2 {
        return Err(Error::InvalidParameter("need at least 2 shots".into()));
    }
    let mut est = [0.0; 4];
    let mut err = [0.0; 4];
    let mut sums = Vec::with_capacity(3 * shots);
    for (k, comp) in [StokesComponent::S1, StokesComponent::S2, StokesComponent::S3].into_iter().enumerate() {
        let config = GadgetConfig {
            setting: GadgetSetting::Component(comp),
            shots,
            seed,
        };
        // Each setting gets its own block of streams.
        let record = simulate_streams(state, &config, (k as u64 + 1) << 32, exec)?;
        let (m, e) = mean_and_error(&record.differences().collect::<Vec<_>>());
        est[k + 1] = m;
        err[k + 1] = e;
        sums.extend(record.sums());
    }
    let (m0, e0) = mean_and_error(&sums);
    est[0] = m0;
    err[0] = e0;
    Ok(StokesEstimate {
        stokes: StokesVector::from_array(est),
        standard_errors: err,
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::constructors::su2_coherent;
    use crate::fock::FockBasis;
    use crate::geometry::PolarAngles;

    #[test]
    fn eigenstate_counts_are_fixed() {
        let b = FockBasis::new(4);
        let s = su2_coherent(4, PolarAngles::new(0.0, 0.0), b).unwrap();
        let cfg = GadgetConfig {
            setting: GadgetSetting::Component(StokesComponent::S3),
            shots: 100,
            seed: 7,
        };
        let r = simulate_gadget(&s, &cfg).unwrap();
        assert!(r.counts.iter().all(|&c| c == (4, 0)));
    }

    #[test]
    fn waveplates_reproduce_rotation() {
        let axis = Vector3::new(1.0, 2.0, -0.5).normalize();
        let w = waveplate_angles(1.1, &axis);
        assert!(w.residual < 1e-9, "{w:?}");
    }
}

//! Numerical experiments comparing classical polarization intuition with the
//! quantum description. Each produces tables and pass/fail checks.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{
    apply, attenuation_channel, complete_depolarizer, diattenuation_channel, heisenberg_apply,
    rotation_mixture_channel,
};
use crate::error::{Error, Result};
use crate::fock::constructors::{coherent_polarized, isotropic_state, su2_coherent, su2_layer_amplitudes};
use crate::fock::operators::{layer_spin, stokes_operators, Mode, OperatorMatrix};
use crate::fock::partial_trace::{partial_trace_one_photon, reduce_to};
use crate::fock::random::{random_density_layer, random_direction};
use crate::fock::rotation::rotate;
use crate::fock::{dop, fidelity, moments, stokes_vector, FockBasis, FockState};
use crate::geometry::{e1, e3, PolarAngles};
use crate::linalg::{binomial, hermitian_eigen, max_abs, trace, CMatrix, C64};
use crate::parallel::{map_range, Execution};

pub const EXPERIMENTS: [&str; 5] = [
    "subset-trace",
    "anisotropy",
    "decompositions",
    "higher-order",
    "attenuated-isotropic",
];

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// NaN marks a cell with no value and is written as JSON null.
    #[serde(with = "nan_as_null")]
    pub rows: Vec<Vec<f64>>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().map(|x| (!x.is_nan()).then_some(*x)).collect())
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let cells = Vec::<Vec<Option<f64>>>::deserialize(d)?;
        Ok(cells
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
            .collect())
    }
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    /// The property the check exercises.
    pub relation: String,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64, relation: &str) -> Self {
        Self {
            name: name.into(),
            passed: value < threshold,
            value,
            threshold,
            relation: relation.into(),
        }
    }

    fn above(name: &str, value: f64, threshold: f64, relation: &str) -> Self {
        Self {
            name: name.into(),
            passed: value > threshold,
            value,
            threshold,
            relation: relation.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs: Params,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Inputs {
    given: Params,
    used: Params,
}

impl Inputs {
    fn new(given: &Params) -> Self {
        Self {
            given: given.clone(),
            used: Params::new(),
        }
    }

    fn get(&mut self, key: &str, default: f64) -> f64 {
        let v = self.given.get(key).copied().unwrap_or(default);
        self.used.insert(key.into(), v);
        v
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{key} must be a nonnegative integer, got {v}")));
        }
        Ok(v as usize)
    }

    fn probability(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name: "probability",
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(v)
    }

    fn finish(self) -> Result<Params> {
        if let Some(k) = self.given.keys().find(|k| !self.used.contains_key(*k)) {
            let known: Vec<&String> = self.used.keys().collect();
            return Err(Error::InvalidParameter(format!("unknown parameter {k}; expected one of {known:?}")));
        }
        Ok(self.used)
    }
}

pub fn run_experiment(name: &str, params: &Params) -> Result<ExperimentReport> {
    match name {
        "subset-trace" => subset_trace(params),
        "anisotropy" => anisotropy(params),
        "decompositions" => decompositions(params),
        "higher-order" => higher_order(params),
        "attenuated-isotropic" => attenuated_isotropic(params),
        other => Err(Error::UnknownExperiment(other.into())),
    }
}

/// [S₀, S₁, S₂, S₃] of the layer-N block alone.
pub fn layer_stokes(state: &FockState, n: usize) -> [f64; 4] {
    let block = state.layer_block(n);
    let spin = layer_spin(n);
    let w = trace(&block).re;
    let mut out = [w * n as f64 / 2.0, 0.0, 0.0, 0.0];
    for k in 0..3 {
        out[k + 1] = crate::linalg::trace_product(&block, &spin.j[k]).re;
    }
    out
}

/// Largest distance of any layer block from a multiple of the identity,
/// counting coherences between layers as well.
pub fn isotropy_deviation(state: &FockState) -> f64 {
    let basis = state.basis;
    let rho = state.density_matrix();
    let mut worst = 0.0_f64;
    for i in 0..basis.dim() {
        let (a, b) = basis.pair(i);
        let n = a + b;
        let diag = layer_weight(state, n) / (n + 1) as f64;
        for j in 0..basis.dim() {
            let expected = if i == j { diag } else { 0.0 };
            worst = worst.max((rho[(i, j)] - C64::from(expected)).norm());
        }
    }
    worst
}

fn layer_weight(state: &FockState, n: usize) -> f64 {
    trace(&state.layer_block(n)).re
}

/// Deviation from isotropy of each layer block.
pub fn layer_isotropy_deviations(state: &FockState) -> Vec<f64> {
    state
        .basis
        .layers()
        .map(|n| {
            let block = state.layer_block(n);
            let w = trace(&block).re / (n + 1) as f64;
            max_abs(&(block - CMatrix::identity(n + 1, n + 1) * C64::from(w)))
        })
        .collect()
}

/// ρ = P + U with P a mixture of SU(2)-coherent layers along the mean Stokes
/// direction (perfectly polarized) and U carrying no Stokes vector. The parts
/// are unnormalized; P has trace `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedSplit {
    pub weight: f64,
    pub polarized: CMatrix,
    pub unpolarized: CMatrix,
    /// Smallest eigenvalue of U; a valid split needs it to be nonnegative.
    pub min_eigenvalue: f64,
    /// |⟨Ŝ⟩| carried by U.
    pub residual_stokes: f64,
}

/// Split a state into a perfectly polarized and an unpolarized part, taking
/// as much polarized weight per layer as positivity allows.
pub fn split_polarized_unpolarized(state: &FockState) -> Result<PolarizedSplit> {
    let basis = state.basis;
    let rho = state.density_matrix();
    let s = stokes_vector(state);
    let vec = Vector3::new(s.s1, s.s2, s.s3);
    let len = vec.norm();
    let d = basis.dim();
    let mut polarized = CMatrix::zeros(d, d);
    if len > 1e-14 {
        let dir = PolarAngles::from_vector(&(vec / len));
        let mut caps = Vec::new();
        for n in 1..=basis.n_max {
            let block = state.layer_block(n);
            let v = su2_layer_amplitudes(n, dir);
            let (vals, vecs) = hermitian_eigen(&block);
            let max = vals.iter().fold(0.0_f64, |a, x| a.max(*x));
            if max <= 0.0 {
                caps.push((n, 0.0, v));
                continue;
            }
            let tol = 1e-12 * max;
            let mut kernel = 0.0;
            let mut inv = 0.0;
            for (k, &l) in vals.iter().enumerate() {
                let overlap = vecs.column(k).dotc(&v).norm_sqr();
                if l > tol {
                    inv += overlap / l;
                } else {
                    kernel += overlap;
                }
            }
            let cap = if kernel > 1e-10 || inv == 0.0 { 0.0 } else { 1.0 / inv };
            caps.push((n, cap, v));
        }
        let reach: f64 = caps.iter().map(|(n, t, _)| t * *n as f64 / 2.0).sum();
        if reach < len * (1.0 - 1e-12) {
            return Err(Error::NonPhysical(format!(
                "polarized weight can carry |S| = {reach}, state has {len}"
            )));
        }
        let scale = (len / reach).min(1.0);
        for (n, cap, v) in caps {
            let t = cap * scale;
            if t == 0.0 {
                continue;
            }
            let r = basis.layer_range(n);
            let outer = &v * v.adjoint() * C64::from(t);
            let mut view = polarized.view_mut((r.start, r.start), (n + 1, n + 1));
            view += outer;
        }
    }
    let unpolarized = &rho - &polarized;
    let (vals, _) = hermitian_eigen(&unpolarized);
    let residual = {
        let u = FockState::density(basis, unpolarized.clone(), 0.0)?;
        let su = stokes_vector(&u);
        Vector3::new(su.s1, su.s2, su.s3).norm()
    };
    Ok(PolarizedSplit {
        weight: trace(&polarized).re,
        polarized,
        unpolarized,
        min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        residual_stokes: residual,
    })
}

fn ratios(s: &crate::stokes::StokesVector) -> [f64; 3] {
    [s.s1 / s.s0, s.s2 / s.s0, s.s3 / s.s0]
}

fn subset_trace(params: &Params) -> Result<ExperimentReport> {
    let mut inp = Inputs::new(params);
    let n = inp.count("n", 6)?;
    let samples = inp.count("samples", 50)?;
    let seed = inp.count("seed", 2024)? as u64;
    let inputs = inp.finish()?;
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    let basis = FockBasis::new(n);

    let runs = map_range(Execution::default(), samples, |k| -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let state = random_density_layer(n, basis, &mut rng)?;
        let s = stokes_vector(&state);
        let base = ratios(&s);
        let base_dop = dop(&state)?;
        let mut rows = Vec::new();
        let mut current = state;
        for m in (1..n).rev() {
            current = partial_trace_one_photon(&current)?;
            let r = ratios(&stokes_vector(&current));
            let dev = (0..3).map(|i| (r[i] - base[i]).abs()).fold(0.0, f64::max);
            let p = dop(&current)?;
            rows.push(vec![k as f64, m as f64, p, dev.max((p - base_dop).abs())]);
        }
        Ok(rows)
    });
    let mut reductions = Table::new("reductions", &["sample", "m", "dop", "deviation"]);
    for r in runs {
        reductions.rows.extend(r?);
    }
    let max_dev = reductions.rows.iter().map(|r| r[3]).fold(0.0, f64::max);

    // Mixed photon numbers: each layer shrinks by (N−1)/N on its own.
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let layers: Vec<usize> = (1..=n).collect();
    let weights: Vec<f64> = {
        let raw: Vec<f64> = layers.iter().map(|_| rand::Rng::random_range(&mut rng, 0.1..1.0)).collect();
        let t: f64 = raw.iter().sum();
        raw.iter().map(|w| w / t).collect()
    };
    let parts = layers
        .iter()
        .map(|&l| random_density_layer(l, basis, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mixed = FockState::mixture(&weights, &parts)?;
    let traced = partial_trace_one_photon(&mixed)?;
    let mut factors = Table::new("mixed-layers", &["n", "weight", "observed_factor", "expected_factor"]);
    let mut factor_dev = 0.0_f64;
    for (&l, &w) in layers.iter().zip(&weights) {
        let before = layer_stokes(&mixed, l);
        let after = layer_stokes(&traced, l - 1);
        let nb = (before[1].powi(2) + before[2].powi(2) + before[3].powi(2)).sqrt();
        let na = (after[1].powi(2) + after[2].powi(2) + after[3].powi(2)).sqrt();
        let expected = (l as f64 - 1.0) / l as f64;
        let observed = if nb > 0.0 { na / nb } else { expected };
        for i in 0..4 {
            factor_dev = factor_dev.max((after[i] - expected * before[i]).abs());
        }
        factors.rows.push(vec![l as f64, w, observed, expected]);
    }

    // Closure of SU(2)-coherent and isotropic states.
    let dir = random_direction(&mut rng);
    let coherent = su2_coherent(n, dir, basis)?;
    let mut one_photon_iso = vec![0.0; n + 1];
    one_photon_iso[n] = 1.0;
    let iso = isotropic_state(&one_photon_iso, basis, 0.0)?;
    let mut closure = Table::new("closure", &["m", "coherent_infidelity", "isotropy_deviation"]);
    let mut worst_coh = 0.0_f64;
    let mut worst_iso = 0.0_f64;
    for m in 1..n {
        let rc = reduce_to(&coherent, m)?;
        let infid = 1.0 - fidelity(&rc, &su2_coherent(m, dir, basis)?)?;
        let ri = reduce_to(&iso, m)?;
        let dev = isotropy_deviation(&ri);
        worst_coh = worst_coh.max(infid.abs());
        worst_iso = worst_iso.max(dev);
        closure.rows.push(vec![m as f64, infid, dev]);
    }

    Ok(ExperimentReport {
        name: "subset-trace".into(),
        inputs,
        tables: vec![reductions, factors, closure],
        checks: vec![
            Check::below("ratio_invariance", max_dev, 1e-10, "Stokes ratios and dop unchanged by photon subset tracing"),
            Check::below("mixed_layer_factor", factor_dev, 1e-10, "each layer's Stokes vector scales by (N-1)/N"),
            Check::below("coherent_closure", worst_coh, 1e-12, "SU(2)-coherent states reduce to SU(2)-coherent states"),
            Check::below("isotropic_closure", worst_iso, 1e-12, "isotropic layers reduce to isotropic layers"),
        ],
    })
}

/// Coherent state with a truncation just large enough for the default leakage bound.
fn coherent_auto(alpha: f64, dir: PolarAngles) -> Result<FockState> {
    let threshold = crate::fock::constructors::DEFAULT_LEAKAGE_THRESHOLD;
    let first = FockBasis::new((alpha * alpha).ceil() as usize + 1);
    match coherent_polarized(C64::from(alpha), dir, first, threshold) {
        Err(Error::LeakageExceeded { required, .. }) => {
            coherent_polarized(C64::from(alpha), dir, FockBasis::new(required), threshold)
        }
        other => other,
    }
}

fn anisotropy(params: &Params) -> Result<ExperimentReport> {
    let mut inp = Inputs::new(params);
    let alpha = inp.get("alpha", 2.0);
    let n = inp.count("n", 4)?;
    let inputs = inp.finish()?;
    let north = PolarAngles::new(0.0, 0.0);
    let south = PolarAngles::new(std::f64::consts::PI, 0.0);

    let fb = FockBasis::new(n);
    let fock_mix = FockState::mixture(
        &[0.5, 0.5],
        &[su2_coherent(n, north, fb)?, su2_coherent(n, south, fb)?],
    )?;
    let coh_mix = FockState::mixture(&[0.5, 0.5], &[coherent_auto(alpha, north)?, coherent_auto(alpha, south)?])?;
    let rotated = rotate(&fock_mix, std::f64::consts::FRAC_PI_2, &e1())?;

    let nf = n as f64;
    let h = alpha * alpha;
    let mut table = Table::new(
        "variances",
        &["state", "var_s1", "var_s2", "var_s3", "expected_s1", "expected_s2", "expected_s3"],
    );
    let cases = [
        (0.0, &fock_mix, [nf / 4.0, nf / 4.0, nf * nf / 4.0]),
        (1.0, &coh_mix, [h / 4.0, h / 4.0, h * (1.0 + h) / 4.0]),
        (2.0, &rotated, [nf / 4.0, nf * nf / 4.0, nf / 4.0]),
    ];
    let mut fock_dev = 0.0_f64;
    let mut coh_dev = 0.0_f64;
    for (id, state, expected) in cases {
        let v = moments(state).variances();
        let dev = (0..3).map(|i| (v[i] - expected[i]).abs()).fold(0.0, f64::max);
        if id == 1.0 {
            coh_dev = dev;
        } else {
            fock_dev = fock_dev.max(dev);
        }
        table.rows.push(vec![id, v[0], v[1], v[2], expected[0], expected[1], expected[2]]);
    }
    let change = (moments(&rotated).variances()[2] - moments(&fock_mix).variances()[2]).abs();
    let mean_zero = {
        let s = stokes_vector(&fock_mix);
        Vector3::new(s.s1, s.s2, s.s3).norm()
    };
    Ok(ExperimentReport {
        name: "anisotropy".into(),
        inputs,
        tables: vec![table],
        checks: vec![
            Check::below("unpolarized_mixture", mean_zero, 1e-12, "equal mixture of opposite polarizations has zero Stokes vector"),
            Check::below("fock_variances", fock_dev, 1e-10, "Var S = (N/4, N/4, N^2/4) for the Fock mixture"),
            Check::below("coherent_variances", coh_dev, 1e-8, "Var S = (|a|^2/4, |a|^2/4, |a|^2(1+|a|^2)/4) for the coherent mixture"),
            Check::above("rotation_changes_variance", change, 1e-6, "rotating an anisotropic unpolarized state changes Var S3"),
        ],
    })
}

fn decompositions(params: &Params) -> Result<ExperimentReport> {
    let mut inp = Inputs::new(params);
    let p = inp.probability("p", 0.6)?;
    let r = inp.probability("r", 0.5)?;
    let inputs = inp.finish()?;
    if p <= 0.0 || p >= 1.0 || r <= 0.0 || r >= 1.0 {
        return Err(Error::InvalidParameter("p and r must lie strictly between 0 and 1".into()));
    }
    let basis = FockBasis::new(4);
    let pol = FockState::fock(basis, 4, 0)?;
    let unpol = FockState::fock(basis, 2, 2)?;
    let iso = isotropic_state(&[0.0, 0.0, 0.0, 0.0, 1.0], basis, 0.0)?;

    let mut psi = pol.amplitudes().expect("pure") * C64::from(p.sqrt());
    psi += unpol.amplitudes().expect("pure") * C64::from((1.0 - p).sqrt());
    let dec1 = FockState::pure(basis, psi, 0.0)?;
    // II takes the unpolarized part as an equal mixture of opposite SU(2)-coherent
    // states. Row 4 repeats II with |2,2⟩ instead, whose attenuated image has no
    // positive split.
    let opposite = FockState::mixture(&[0.5, 0.5], &[pol.clone(), FockState::fock(basis, 0, 4)?])?;
    let dec2 = FockState::mixture(&[p, 1.0 - p], &[pol.clone(), opposite])?;
    let dec3 = FockState::mixture(&[p, 1.0 - p], &[pol.clone(), iso.clone()])?;
    let dec4 = FockState::mixture(&[p, 1.0 - p], &[pol.clone(), unpol.clone()])?;

    let attenuate = attenuation_channel(r, Mode::B, basis)?;
    let two_rotation = rotation_mixture_channel(&[0.5, 0.5], &[(0.0, e3()), (std::f64::consts::PI, e1())], basis)?;
    let twirl = complete_depolarizer(basis);
    let channels = [(1.0, &attenuate), (2.0, &two_rotation), (3.0, &twirl)];

    let mut table = Table::new(
        "decompositions",
        &["decomposition", "channel", "purity", "dop", "isotropy_deviation", "split_min_eigenvalue", "split_residual_stokes"],
    );
    // A pure state with partial polarization has no positive split; its row gets NaN.
    let mut row = |d: f64, c: f64, s: &FockState| -> Result<Option<PolarizedSplit>> {
        let split = split_polarized_unpolarized(s).ok();
        let (eig, res) = split.as_ref().map_or((f64::NAN, f64::NAN), |x| (x.min_eigenvalue, x.residual_stokes));
        table.rows.push(vec![d, c, s.purity(), dop(s)?, isotropy_deviation(s), eig, res]);
        Ok(split)
    };
    let input_dop = dop(&dec1)?;
    for (d, s) in [(1.0, &dec1), (2.0, &dec2), (3.0, &dec3), (4.0, &dec4)] {
        row(d, 0.0, s)?;
    }
    let mut purity_loss = f64::INFINITY;
    let mut ii_worst_eig = f64::INFINITY;
    let mut ii_worst_residual = 0.0_f64;
    for (c, ch) in channels {
        let out1 = apply(ch, &dec1)?;
        row(1.0, c, &out1)?;
        if c < 3.0 {
            purity_loss = purity_loss.min(1.0 - out1.purity());
        }
        let out2 = apply(ch, &dec2)?;
        match row(2.0, c, &out2)? {
            Some(split) => {
                ii_worst_eig = ii_worst_eig.min(split.min_eigenvalue);
                ii_worst_residual = ii_worst_residual.max(split.residual_stokes);
            }
            None => ii_worst_eig = f64::NEG_INFINITY,
        }
        row(3.0, c, &apply(ch, &dec3)?)?;
        row(4.0, c, &apply(ch, &dec4)?)?;
    }
    let iii_after_attenuation = isotropy_deviation(&apply(&attenuate, &iso)?);
    // With the polarized part depolarized, III needs the whole output to be isotropic.
    let iii_after_two_rotation = isotropy_deviation(&apply(&two_rotation, &dec3)?);
    let iii_after_twirl = isotropy_deviation(&apply(&twirl, &pol)?);

    Ok(ExperimentReport {
        name: "decompositions".into(),
        inputs,
        tables: vec![table],
        checks: vec![
            Check::below("input_dop", (input_dop - p).abs(), 1e-12, "the superposition has degree of polarization p"),
            Check::above("I_loses_purity", purity_loss, 1e-6, "attenuation and depolarization make the pure decomposition mixed"),
            Check::above("II_split_positive", ii_worst_eig, -1e-10, "polarized plus unpolarized split stays positive after each channel"),
            Check::below("II_split_unpolarized", ii_worst_residual, 1e-10, "unpolarized part carries no Stokes vector"),
            Check::above("III_fails_after_attenuation", iii_after_attenuation, 1e-3, "partially attenuated isotropic state is not isotropic"),
            Check::above("III_fails_after_two_rotation", iii_after_two_rotation, 1e-3, "two-rotation depolarizer output is unpolarized but not isotropic"),
            Check::below("III_survives_twirl", iii_after_twirl, 1e-12, "complete depolarization yields an isotropic state"),
        ],
    })
}

/// Σ K†Ŝ₃²K under diattenuation and the quadratic-plus-linear prediction.
pub fn s3_squared_correction(q: f64, r: f64, basis: FockBasis) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let ch = diattenuation_channel(q, r, &e3(), basis)?;
    let s = &stokes_operators(basis).s;
    let s3sq = &s[3] * &s[3];
    let image = heisenberg_apply(&ch, &OperatorMatrix::hermitian(basis, s3sq, 1e-12)?)?.matrix;
    let lin = &s[0] * C64::from((q - r) / 2.0) + &s[3] * C64::from((q + r) / 2.0);
    let classical = &lin * &lin;
    let predicted = &classical
        + (&s[0] + &s[3]) * C64::from(q * (1.0 - q) / 4.0)
        + (&s[0] - &s[3]) * C64::from(r * (1.0 - r) / 4.0);
    Ok((image, predicted, classical))
}

fn higher_order(params: &Params) -> Result<ExperimentReport> {
    let mut inp = Inputs::new(params);
    let q = inp.probability("q", 0.9)?;
    let r = inp.probability("r", 0.5)?;
    let n_max = inp.count("n_max", 5)?;
    let inputs = inp.finish()?;
    let basis = FockBasis::new(n_max);
    let (image, predicted, classical) = s3_squared_correction(q, r, basis)?;
    let deviation = max_abs(&(&image - &predicted));
    let correction = max_abs(&(&image - &classical));
    let expected_correction = {
        let s = &stokes_operators(basis).s;
        max_abs(
            &((&s[0] + &s[3]) * C64::from(q * (1.0 - q) / 4.0) + (&s[0] - &s[3]) * C64::from(r * (1.0 - r) / 4.0)),
        )
    };
    let ch = diattenuation_channel(q, r, &e3(), basis)?;
    let s = &stokes_operators(basis).s;
    let linear_image = heisenberg_apply(&ch, &OperatorMatrix::hermitian(basis, s[3].clone(), 1e-12)?)?.matrix;
    let linear_dev = max_abs(&(linear_image - (&s[0] * C64::from((q - r) / 2.0) + &s[3] * C64::from((q + r) / 2.0))));
    let mut table = Table::new("s3-squared", &["q", "r", "deviation", "correction", "expected_correction", "linear_deviation"]);
    table.rows.push(vec![q, r, deviation, correction, expected_correction, linear_dev]);
    Ok(ExperimentReport {
        name: "higher-order".into(),
        inputs,
        tables: vec![table],
        checks: vec![
            Check::below("linear_map", linear_dev, 1e-10, "S3 maps to (q-r)/2 S0 + (q+r)/2 S3"),
            Check::below("quadratic_map", deviation, 1e-10, "S3^2 picks up q(1-q)/4 (S0+S3) + r(1-r)/4 (S0-S3)"),
            Check::below("correction_size", (correction - expected_correction).abs(), 1e-10, "the departure from the classical square is exactly the vacuum term"),
        ],
    })
}

fn attenuated_isotropic(params: &Params) -> Result<ExperimentReport> {
    let mut inp = Inputs::new(params);
    let n = inp.count("n", 4)?;
    let r = inp.probability("r", 0.6)?;
    let inputs = inp.finish()?;
    let basis = FockBasis::new(n);
    let mut beta = vec![0.0; n + 1];
    beta[n] = 1.0;
    let iso = isotropic_state(&beta, basis, 0.0)?;
    let out = apply(&attenuation_channel(r, Mode::B, basis)?, &iso)?.density_matrix();

    let mut coeffs = Table::new("coefficients", &["m", "big_m", "expected", "computed"]);
    let mut expected = CMatrix::zeros(basis.dim(), basis.dim());
    for m in 0..=n {
        for big_m in m..=n {
            let c = binomial((n - m) as u64, (big_m - m) as u64)
                * r.powi((big_m - m) as i32)
                * (1.0 - r).powi((n - big_m) as i32)
                / (n + 1) as f64;
            let idx = basis.index(m, big_m - m)?;
            expected[(idx, idx)] = C64::from(c);
            coeffs.rows.push(vec![m as f64, big_m as f64, c, out[(idx, idx)].re]);
        }
    }
    let deviation = max_abs(&(&out - &expected));
    let out_state = FockState::density(basis, out, 0.0)?;
    let mut layers = Table::new("layer-isotropy", &["big_m", "weight", "isotropy_deviation"]);
    for (m, dev) in layer_isotropy_deviations(&out_state).into_iter().enumerate() {
        layers.rows.push(vec![m as f64, layer_weight(&out_state, m), dev]);
    }
    Ok(ExperimentReport {
        name: "attenuated-isotropic".into(),
        inputs,
        tables: vec![coeffs, layers],
        checks: vec![Check::below(
            "coefficients",
            deviation,
            1e-12,
            "output populations are C(N-m, M-m) r^(M-m) (1-r)^(N-M)/(N+1)",
        )],
    })
}

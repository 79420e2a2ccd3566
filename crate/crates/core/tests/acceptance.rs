//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{Matrix2, Matrix4, Vector3};
use polab::channels::{
    apply, attenuation_channel, complete_depolarizer, diattenuation_channel, fixed_output_channel,
    identity_channel, jones_kraus_channel, kerr_unitary, lossless_polarizer_channel, rotation_channel,
    rotation_mixture_channel, single_photon_mueller, KrausChannel,
};
use polab::estimation::{
    rotation_frame, scenario_diattenuation_qfim, scenario_loss_qfi, scenario_phase_qfi, RotationParametrization,
};
use polab::experiments::{run_experiment, s3_squared_correction, Params};
use polab::fock::analysis::uncertainty_report;
use polab::fock::constructors::{coherent_polarized, noon_state, su2_coherent, tetrahedron_state, tmsv_state};
use polab::fock::majorana::{majorana_stars, state_from_stars};
use polab::fock::operators::Mode;
use polab::fock::random::{random_constellation, random_density_layer, random_direction};
use polab::fock::rotation::rotate;
use polab::fock::{fidelity, stokes_vector, FockBasis, FockState};
use polab::gadget::estimate_stokes;
use polab::geometry::{angular_distance, e3, rodrigues, PolarAngles};
use polab::linalg::{levi_civita, max_abs, C64, CMatrix};
use polab::mueller::{
    jones_boost, jones_rotation, mueller_diattenuation, mueller_from_jones, mueller_from_jones_mixture,
    validate_mueller, JonesMatrix, MuellerMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel_err(x: f64, want: f64) -> f64 {
    (x - want).abs() / want.abs()
}

fn random_axis(rng: &mut ChaCha20Rng) -> Vector3<f64> {
    random_direction(rng).unit_vector()
}

fn c1() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let theta = rng.random_range(-PI..PI);
        let n = random_axis(&mut rng);
        let m = mueller_from_jones(&jones_rotation(theta, &n).map_err(|e| e.to_string())?);
        let r = rodrigues(theta, &n);
        let mut want = Matrix4::identity();
        want.fixed_view_mut::<3, 3>(1, 1).copy_from(&r);
        worst = worst.max((m.0 - want).amax());
    }
    ensure(worst < 1e-12, format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:.2e} over 100 rotations"))
}

fn c2() -> Outcome {
    let mut worst = 0.0_f64;
    for eta in [0.1, 1.0, 3.0_f64] {
        let m = mueller_from_jones(&jones_boost(eta, &e3()).map_err(|e| e.to_string())?);
        let (c, s) = (eta.cosh(), eta.sinh());
        let want = Matrix4::new(c, 0.0, 0.0, s, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, s, 0.0, 0.0, c);
        // Relative to the largest entry, cosh 3 ≈ 10.
        worst = worst.max((m.0 - want).amax() / c);
    }
    ensure(worst < 1e-12, format!("max error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn c3() -> Outcome {
    let mut worst = 0.0_f64;
    for &(q, r) in &[(0.9, 0.5), (0.3, 0.7), (1.0, 1.0), (0.25, 0.04), (0.0, 0.6)] {
        let m = mueller_diattenuation(q, r, &e3()).map_err(|e| e.to_string())?;
        let (p, d, g) = ((q + r) / 2.0, (q - r) / 2.0, (q * r as f64).sqrt());
        let want = Matrix4::new(p, 0.0, 0.0, d, 0.0, g, 0.0, 0.0, 0.0, 0.0, g, 0.0, d, 0.0, 0.0, p);
        worst = worst.max((m.0 - want).amax());
    }
    ensure(worst < 1e-12, format!("general case error {worst:e}"))?;
    let r_pol = mueller_diattenuation(1.0, 0.0, &e3()).map_err(|e| e.to_string())?;
    let l_pol = mueller_diattenuation(0.0, 1.0, &e3()).map_err(|e| e.to_string())?;
    let h = 0.5;
    let want_r = Matrix4::new(h, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, h);
    let want_l = Matrix4::new(h, 0.0, 0.0, -h, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -h, 0.0, 0.0, h);
    ensure(r_pol.0 == want_r, format!("R polarizer {:?}", r_pol.rows()))?;
    ensure(l_pol.0 == want_l, format!("L polarizer {:?}", l_pol.rows()))?;
    Ok(format!("general error {worst:.2e}; polarizers exact"))
}

fn random_contraction(rng: &mut ChaCha20Rng) -> JonesMatrix {
    let mut m = Matrix2::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let smax = m.singular_values().max();
    m /= C64::from(smax * rng.random_range(1.0..2.0));
    JonesMatrix(m)
}

fn c4() -> Outcome {
    let depol = MuellerMatrix(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0 / 3.0)));
    let rep = validate_mueller(&depol);
    let min_eig = rep.cloude_eigenvalues[3];
    ensure((min_eig + 1.0 / 3.0).abs() < 1e-9, format!("min Cloude eigenvalue {min_eig}"))?;

    let lossless = MuellerMatrix::from_rows([[1.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4], [1.0, 0.0, 0.0, 0.0]]);
    let rep = validate_mueller(&lossless);
    ensure(
        (rep.reverse_transmittance - 2.0).abs() < 1e-12,
        format!("reverse transmittance {}", rep.reverse_transmittance),
    )?;
    ensure(!rep.reverse_transmittance_ok, "reverse transmittance violation not flagged")?;

    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for trial in 0..200 {
        let k = rng.random_range(1..=4);
        let js: Vec<_> = (0..k).map(|_| random_contraction(&mut rng)).collect();
        let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let m = mueller_from_jones_mixture(&w, &js).map_err(|e| e.to_string())?;
        let rep = validate_mueller(&m);
        ensure(rep.physical, format!("mixture {trial} rejected: {rep:?}"))?;
    }
    Ok(format!("min Cloude eigenvalue {min_eig:.12}; reverse transmittance 2; 200 mixtures physical"))
}

fn c5() -> Outcome {
    let basis = FockBasis::new(6);
    let ops = polab::fock::operators::stokes_operators(basis);
    let s = &ops.s;
    let i = C64::new(0.0, 1.0);
    let mut worst = 0.0_f64;
    for a in 0..3 {
        for b in 0..3 {
            let mut lhs: CMatrix = &s[a + 1] * &s[b + 1] - &s[b + 1] * &s[a + 1];
            for c in 0..3 {
                let eps = levi_civita(a, b, c);
                if eps != 0.0 {
                    lhs -= &s[c + 1] * (i * eps);
                }
            }
            worst = worst.max(max_abs(&lhs));
        }
    }
    let sq: CMatrix = &s[1] * &s[1] + &s[2] * &s[2] + &s[3] * &s[3];
    let casimir = &s[0] * (&s[0] + CMatrix::identity(basis.dim(), basis.dim()));
    let cas = max_abs(&(sq - casimir));
    ensure(worst < 1e-12, format!("commutator residual {worst:e}"))?;
    ensure(cas < 1e-12, format!("Casimir residual {cas:e}"))?;
    Ok(format!("commutator {worst:.1e}, Casimir {cas:.1e}"))
}

fn c6() -> Outcome {
    let basis = FockBasis::new(8);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    for n in 0..=8 {
        for _ in 0..5 {
            let st = su2_coherent(n, random_direction(&mut rng), basis).map_err(|e| e.to_string())?;
            worst = worst.max(uncertainty_report(&st).sum_margin.abs());
        }
    }
    ensure(worst < 1e-12, format!("sum margin {worst:e}"))?;
    Ok(format!("max |sum Var - <S0>| {worst:.1e}"))
}

fn c7() -> Outcome {
    let equator = PolarAngles::new(FRAC_PI_2, 0.0);
    let coh = coherent_polarized(C64::new(2.0, 0.0), equator, FockBasis::new(28), 1e-12).map_err(|e| e.to_string())?;
    let q_coh = scenario_phase_qfi(&coh).map_err(|e| e.to_string())?;
    let noon = noon_state(4, FockBasis::new(4)).map_err(|e| e.to_string())?;
    let q_noon = scenario_phase_qfi(&noon).map_err(|e| e.to_string())?;
    let (e1, e2) = (rel_err(q_coh, 4.0), rel_err(q_noon, 16.0));
    ensure(e1 < 1e-6, format!("coherent Q = {q_coh}"))?;
    ensure(e2 < 1e-6, format!("NOON Q = {q_noon}"))?;
    Ok(format!("coherent {q_coh:.9}, NOON {q_noon:.9}"))
}

fn c8() -> Outcome {
    let fock = FockState::fock(FockBasis::new(10), 10, 0).map_err(|e| e.to_string())?;
    let q_fock = scenario_loss_qfi(&fock, Mode::A, 0.9).map_err(|e| e.to_string())?;
    let want_fock = 10.0 / (0.9 * 0.1);
    ensure(rel_err(q_fock, want_fock) < 1e-6, format!("Fock Q = {q_fock}, want {want_fock}"))?;

    let r_dir = PolarAngles::new(0.0, 0.0);
    let coh = coherent_polarized(C64::new(2.0, 0.0), r_dir, FockBasis::new(24), 1e-11).map_err(|e| e.to_string())?;
    let q_coh = scenario_loss_qfi(&coh, Mode::A, 0.5).map_err(|e| e.to_string())?;
    ensure(rel_err(q_coh, 8.0) < 1e-6, format!("coherent Q = {q_coh}"))?;

    let pair = FockState::fock(FockBasis::new(10), 5, 5).map_err(|e| e.to_string())?;
    let res = scenario_diattenuation_qfim(&pair, 0.9, 0.8).map_err(|e| e.to_string())?;
    let want = [5.0 / (0.9 * 0.1), 5.0 / (0.8 * 0.2)];
    for k in 0..2 {
        ensure(
            rel_err(res.qfim[(k, k)], want[k]) < 1e-6,
            format!("pair diagonal {k}: {} vs {}", res.qfim[(k, k)], want[k]),
        )?;
    }
    let off = res.qfim[(0, 1)].abs();
    ensure(off < 1e-6 * want[0], format!("pair off-diagonal {off:e}"))?;
    Ok(format!(
        "Fock {q_fock:.6}, coherent {q_coh:.9}, pair diag({:.6}, {:.6})",
        res.qfim[(0, 0)],
        res.qfim[(1, 1)]
    ))
}

fn c9() -> Outcome {
    let noon = noon_state(4, FockBasis::new(4)).map_err(|e| e.to_string())?;
    let f_noon = rotation_frame(&noon, RotationParametrization::AxisAngle, [0.0; 3]).map_err(|e| e.to_string())?;
    let h = 4.0_f64;
    let formula = 4.0 * (2.0 * h + 1.0) / (h * h);
    ensure(
        (f_noon.wmse_bound - 2.25).abs() < 1e-10 && (formula - 2.25).abs() < 1e-15,
        format!("NOON wmse {}", f_noon.wmse_bound),
    )?;

    let tet = tetrahedron_state(FockBasis::new(4)).map_err(|e| e.to_string())?;
    let f_tet = rotation_frame(&tet, RotationParametrization::AxisAngle, [0.0; 3]).map_err(|e| e.to_string())?;
    let mut cov_dev = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 2.0 } else { 0.0 };
            cov_dev = cov_dev.max((f_tet.covariance[i][j] - want).abs());
        }
    }
    ensure(cov_dev < 1e-10, format!("tetrahedron covariance deviation {cov_dev:e}"))?;
    ensure((f_tet.wmse_bound - 1.5).abs() < 1e-10, format!("tetrahedron wmse {}", f_tet.wmse_bound))?;
    // The printed closed form 36/(H(H+1)) gives 1.8 at H = 4, while Tr C⁻¹ with
    // C = S(S+1)/3 𝟙 is 36/(H(H+2)) = 1.5.
    let quoted = 36.0 / (h * (h + 1.0));
    Ok(format!(
        "NOON {:.12}, tetrahedron {:.12}; quoted anticoherent formula gives {quoted} (discrepancy {:.3})",
        f_noon.wmse_bound,
        f_tet.wmse_bound,
        quoted - f_tet.wmse_bound
    ))
}

fn c10() -> Outcome {
    let zeta = 1f64.asinh();
    let h = 2.0 * zeta.sinh().powi(2);
    let tmsv = tmsv_state(zeta, 0.0, FockBasis::new(42), 1e-6).map_err(|e| e.to_string())?;
    let mut scaled = Vec::new();
    for loss in [0.01, 0.005] {
        let q = scenario_loss_qfi(&tmsv, Mode::A, 1.0 - loss).map_err(|e| e.to_string())?;
        scaled.push((q, q * loss));
    }
    for &(_, s) in &scaled {
        ensure(rel_err(s, h / 2.0) < 0.2, format!("Q(1-q) = {s}, H/2 = {}", h / 2.0))?;
    }
    let ratio = scaled[1].0 / scaled[0].0;
    ensure((ratio - 2.0).abs() < 0.2, format!("doubling ratio {ratio}"))?;
    Ok(format!(
        "Q(1-q) = {:.4}, {:.4} vs H/2 = {:.4}; ratio {ratio:.4}",
        scaled[0].1,
        scaled[1].1,
        h / 2.0
    ))
}

fn experiment_checks(name: &str, required: &[&str]) -> Outcome {
    let report = run_experiment(name, &Params::new()).map_err(|e| e.to_string())?;
    for want in required {
        ensure(report.check(want).is_some(), format!("missing check {want}"))?;
    }
    let failed: Vec<String> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:e} (threshold {:e})", c.name, c.value, c.threshold))
        .collect();
    ensure(failed.is_empty(), failed.join("; "))?;
    let summary: Vec<String> = report.checks.iter().map(|c| format!("{} {:.1e}", c.name, c.value)).collect();
    Ok(summary.join(", "))
}

fn c11() -> Outcome {
    experiment_checks(
        "subset-trace",
        &["ratio_invariance", "mixed_layer_factor", "coherent_closure", "isotropic_closure"],
    )
}

fn c12() -> Outcome {
    let (image, predicted, _) = s3_squared_correction(0.9, 0.5, FockBasis::new(5)).map_err(|e| e.to_string())?;
    let dev = max_abs(&(image - predicted));
    ensure(dev < 1e-10, format!("deviation {dev:e}"))?;
    Ok(format!("max deviation {dev:.1e}"))
}

fn match_stars(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, angular_distance(x, y)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap_or((0, f64::INFINITY));
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn c13() -> Outcome {
    let basis = FockBasis::new(8);
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let mut worst_overlap = 0.0_f64;
    for t in 0..100 {
        let n = 1 + t % 8;
        let cons = random_constellation(n, &mut rng);
        let st = state_from_stars(&cons, basis).map_err(|e| e.to_string())?;
        let back = state_from_stars(&majorana_stars(&st).map_err(|e| e.to_string())?, basis).map_err(|e| e.to_string())?;
        worst_overlap = worst_overlap.max(1.0 - fidelity(&st, &back).map_err(|e| e.to_string())?);
    }
    ensure(worst_overlap < 1e-8, format!("round-trip infidelity {worst_overlap:e}"))?;

    let tet = majorana_stars(&tetrahedron_state(FockBasis::new(4)).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let target = (-1.0_f64 / 3.0).acos();
    let mut angle_dev = 0.0_f64;
    for i in 0..tet.len() {
        for j in i + 1..tet.len() {
            let d = angular_distance(&tet.stars[i].unit_vector(), &tet.stars[j].unit_vector());
            angle_dev = angle_dev.max((d - target).abs());
        }
    }
    ensure(tet.len() == 4, format!("{} tetrahedron stars", tet.len()))?;
    ensure(angle_dev < 1e-6, format!("tetrahedron angle deviation {angle_dev:e}"))?;

    let mut rigid = 0.0_f64;
    for t in 0..20 {
        let n = 2 + t % 7;
        let cons = random_constellation(n, &mut rng);
        let st = state_from_stars(&cons, basis).map_err(|e| e.to_string())?;
        let theta = rng.random_range(0.0..PI);
        let axis = random_axis(&mut rng);
        let rotated = rotate(&st, theta, &axis).map_err(|e| e.to_string())?;
        let r = rodrigues(theta, &axis);
        let expected: Vec<_> = majorana_stars(&st)
            .map_err(|e| e.to_string())?
            .stars
            .iter()
            .map(|s| r * s.unit_vector())
            .collect();
        let got: Vec<_> = majorana_stars(&rotated).map_err(|e| e.to_string())?.stars.iter().map(|s| s.unit_vector()).collect();
        ensure(got.len() == expected.len(), "star count changed under rotation")?;
        rigid = rigid.max(match_stars(&expected, &got));
    }
    ensure(rigid < 1e-6, format!("rigid rotation deviation {rigid:e}"))?;
    Ok(format!(
        "round trip {worst_overlap:.1e}, tetrahedron angle {angle_dev:.1e}, rigid rotation {rigid:.1e}"
    ))
}

fn c14() -> Outcome {
    let basis = FockBasis::new(2);
    let one_one = FockState::fock(basis, 1, 1).map_err(|e| e.to_string())?;
    let rotated = rotate(&one_one, FRAC_PI_2, &Vector3::x()).map_err(|e| e.to_string())?;
    let mut target = polab::linalg::CVector::zeros(basis.dim());
    target[basis.index(2, 0).map_err(|e| e.to_string())?] = C64::new(FRAC_1_SQRT_2, 0.0);
    target[basis.index(0, 2).map_err(|e| e.to_string())?] = C64::new(FRAC_1_SQRT_2, 0.0);
    let amps = rotated.amplitudes().ok_or("rotated state is not pure")?;
    let overlap = target.dotc(amps).norm();
    ensure((overlap - 1.0).abs() < 1e-10, format!("|overlap| = {overlap}"))?;
    Ok(format!("|overlap| = {overlap:.15}"))
}

fn c15() -> Outcome {
    let basis = FockBasis::new(4);
    let tilted = Vector3::new(1.0, 2.0, 2.0) / 3.0;
    let polarizer_jones = [
        JonesMatrix(Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))),
        JonesMatrix(Matrix2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))),
    ];
    let target = su2_coherent(3, PolarAngles::new(1.0, 0.5), basis).map_err(|e| e.to_string())?;
    let built: Vec<KrausChannel> = vec![
        identity_channel(basis),
        rotation_channel(0.7, &tilted, basis).map_err(|e| e.to_string())?,
        attenuation_channel(0.3, Mode::A, basis).map_err(|e| e.to_string())?,
        attenuation_channel(0.8, Mode::B, basis).map_err(|e| e.to_string())?,
        diattenuation_channel(0.9, 0.4, &e3(), basis).map_err(|e| e.to_string())?,
        diattenuation_channel(0.6, 0.2, &tilted, basis).map_err(|e| e.to_string())?,
        rotation_mixture_channel(&[0.5, 0.5], &[(0.0, e3()), (PI, Vector3::x())], basis).map_err(|e| e.to_string())?,
        complete_depolarizer(basis),
        lossless_polarizer_channel(PolarAngles::new(0.4, 1.1), basis),
        fixed_output_channel(&target).map_err(|e| e.to_string())?,
        kerr_unitary(0.3, basis),
        jones_kraus_channel(&polarizer_jones).map_err(|e| e.to_string())?,
    ];
    let mut worst = 0.0_f64;
    for ch in &built {
        let d = ch.completeness_defect();
        ensure(d < 1e-12, format!("{} completeness defect {d:e}", ch.label))?;
        worst = worst.max(d);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(15);
    let input = random_mixed_state(basis, &mut rng)?;
    let mut comp = 0.0_f64;
    for &(q1, q2) in &[(0.9, 0.8), (0.5, 0.3), (0.99, 0.1)] {
        let a1 = attenuation_channel(q1, Mode::A, basis).map_err(|e| e.to_string())?;
        let a2 = attenuation_channel(q2, Mode::A, basis).map_err(|e| e.to_string())?;
        let both = attenuation_channel(q1 * q2, Mode::A, basis).map_err(|e| e.to_string())?;
        let seq = apply(&a2.compose(&a1).map_err(|e| e.to_string())?, &input).map_err(|e| e.to_string())?;
        let direct = apply(&both, &input).map_err(|e| e.to_string())?;
        comp = comp.max(max_abs(&(seq.density_matrix() - direct.density_matrix())));
    }
    ensure(comp < 1e-10, format!("composition deviation {comp:e}"))?;
    Ok(format!("{} channels, worst defect {worst:.1e}; composition {comp:.1e}", built.len()))
}

fn random_mixed_state(basis: FockBasis, rng: &mut ChaCha20Rng) -> Result<FockState, String> {
    let layers: Vec<FockState> = basis
        .layers()
        .map(|n| random_density_layer(n, basis, rng))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut w: Vec<f64> = layers.iter().map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    FockState::mixture(&w, &layers).map_err(|e| e.to_string())
}

fn c16() -> Outcome {
    let basis = FockBasis::new(4);
    let channel = lossless_polarizer_channel(PolarAngles::new(0.0, 0.0), basis);
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let input = random_mixed_state(basis, &mut rng)?;
        let out = apply(&channel, &input).map_err(|e| e.to_string())?;
        worst = worst.max((stokes_vector(&out).s0 - stokes_vector(&input).s0).abs());
    }
    ensure(worst < 1e-10, format!("S0 change {worst:e}"))?;

    let single = lossless_polarizer_channel(PolarAngles::new(0.0, 0.0), FockBasis::new(1));
    let m = single_photon_mueller(&single).map_err(|e| e.to_string())?;
    let want = MuellerMatrix::from_rows([[1.0, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4], [1.0, 0.0, 0.0, 0.0]]);
    let dev = m.max_abs_diff(&want);
    ensure(dev < 1e-12, format!("induced Mueller deviation {dev:e}: {:?}", m.rows()))?;
    let rep = validate_mueller(&m);
    ensure(!rep.reverse_transmittance_ok, "transmittance violation not flagged")?;
    Ok(format!(
        "S0 drift {worst:.1e}; induced Mueller deviation {dev:.1e}; reverse transmittance {:.3} flagged",
        rep.reverse_transmittance
    ))
}

fn c17() -> Outcome {
    let dir = PolarAngles::new(FRAC_PI_2, 0.0);
    let state = coherent_polarized(C64::new(2.0, 0.0), dir, FockBasis::new(24), 1e-11).map_err(|e| e.to_string())?;
    let seed = 17;
    let est = estimate_stokes(&state, 1_000_000, seed).map_err(|e| e.to_string())?;
    let want = [2.0, 2.0, 0.0, 0.0];
    let s = est.stokes.to_array();
    for mu in 0..4 {
        let z = (s[mu] - want[mu]).abs() / est.standard_errors[mu];
        ensure(z < 5.0, format!("S{mu} = {} is {z:.2} standard errors from {}", s[mu], want[mu]))?;
    }

    let shots = [10_000usize, 100_000, 1_000_000];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &shots {
        let e = if n == 1_000_000 {
            est
        } else {
            estimate_stokes(&state, n, seed).map_err(|e| e.to_string())?
        };
        let mean_se: f64 = e.standard_errors.iter().sum::<f64>() / 4.0;
        xs.push((n as f64).ln());
        ys.push(mean_se.ln());
    }
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    ensure((slope + 0.5).abs() < 0.1, format!("standard error slope {slope}"))?;

    let again = estimate_stokes(&state, 1_000_000, seed).map_err(|e| e.to_string())?;
    let bits = |e: &polab::gadget::StokesEstimate| {
        e.stokes
            .to_array()
            .iter()
            .chain(e.standard_errors.iter())
            .map(|x| x.to_bits())
            .collect::<Vec<_>>()
    };
    ensure(bits(&est) == bits(&again), "reruns differ")?;
    Ok(format!(
        "S = ({:.4}, {:.4}, {:.4}, {:.4}); slope {slope:.4}; reruns identical",
        s[0], s[1], s[2], s[3]
    ))
}

fn c18() -> Outcome {
    experiment_checks(
        "decompositions",
        &[
            "II_split_positive",
            "II_split_unpolarized",
            "III_fails_after_attenuation",
            "III_fails_after_two_rotation",
        ],
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 18] = [
        ("Mueller-Jones rotation consistency", c1),
        ("boost Mueller matrix", c2),
        ("diattenuation Mueller matrix", c3),
        ("Mueller physicality checks", c4),
        ("Stokes operator algebra", c5),
        ("coherent-state sum uncertainty saturation", c6),
        ("phase QFI", c7),
        ("loss QFI", c8),
        ("rotation sensing bound", c9),
        ("TMSV loss scaling", c10),
        ("photon subset tracing", c11),
        ("higher-order moments under diattenuation", c12),
        ("Majorana constellations", c13),
        ("Klyshko interconversion", c14),
        ("channel soundness", c15),
        ("lossless polarizer channel", c16),
        ("gadget Monte Carlo", c17),
        ("decomposition experiments", c18),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

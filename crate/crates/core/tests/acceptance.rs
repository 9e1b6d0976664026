//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p mixed-ising --test acceptance -- --nocapture` to
//! see the lines; the full-size extrapolation is `#[ignore]`d and runs with
//! `--ignored`.

use std::time::Instant;

use mixed_ising::dmrg::{find_ground_state, prepare_initial_choi_state, DmrgConfig, PrepRoute};
use mixed_ising::ed::{apply_channel_dense, chain_ground_state, ground_state_dense, tfim_exact_energy, DenseState};
use mixed_ising::filter::{apply_x_layer, apply_zz_layer, filter, FilteredState};
use mixed_ising::model::{build_chain_tfim_mpo, build_doubled_tfim_mpo, map_px, tau_of_p, ModelParams};
use mixed_ising::mps::{inner, MpsState, TruncationPolicy};
use mixed_ising::observables::*;
use mixed_ising::pauli::{X, Z};
use mixed_ising::sweep::{fit_results, run_sweep, SweepConfig};
use mixed_ising::validation::run_validation;
use mixed_ising::analysis::{classify_regime, Regime, Thresholds};
use mixed_ising::filter::FilterMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every threshold used below, in one place.
mod tol {
    pub const SMALL_LADDER_RENYI2: f64 = 1e-4;
    pub const SMALL_LADDER_ENTROPY: f64 = 1e-4;
    pub const DOUBLED_DMRG_ENERGY: f64 = 1e-6;
    pub const CHAIN_DMRG_RELATIVE: f64 = 1e-3;
    pub const PC_FULL: f64 = 0.02;
    pub const PC_REDUCED: f64 = 0.04;
    pub const CEFF_CRITICAL: f64 = 0.15;
    pub const CEFF_FLAT: f64 = 0.15;
    pub const TRACE: f64 = 1e-6;
    pub const PURITY_RELATIVE: f64 = 1e-6;
    pub const COMMUTE: f64 = 1e-8;
    pub const PARITY: f64 = 1e-8;
    pub const LEG_SWAP: f64 = 1e-8;
    pub const STRANGE_VS_CANONICAL: f64 = 1e-5;
    pub const PURE_STATE: f64 = 1e-8;
    pub const VARIATIONAL_SLACK: f64 = 1e-9;
}

/// Expected transition points and their `J/h`.
const PC_TARGETS: [(f64, f64); 3] = [(0.8, 0.372), (1.0, 0.308), (1.2, 0.393)];

fn report(id: &str, name: &str, pass: bool, detail: String, start: Instant) -> bool {
    println!(
        "{} criterion {id} ({name}): {detail} [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn pzz_grid(step: f64) -> Vec<f64> {
    let n = (0.5 / step).round() as usize;
    (0..=n).map(|k| ((k as f64 * step) * 1e12).round() / 1e12).collect()
}

#[test]
fn criterion_1_small_ladder_renyi2_parity() {
    let start = Instant::now();
    let cfg = SweepConfig {
        j_over_h: 0.1,
        sizes: vec![8],
        pzz_grid: pzz_grid(0.05),
        mode: FilterMode::ZzOnly,
        ..SweepConfig::default()
    };
    let v = run_validation(&cfg, tol::SMALL_LADDER_RENYI2).unwrap();
    let worst = v.report.max_abs_diff_of("renyi2_nn_mean");
    let pass = worst <= tol::SMALL_LADDER_RENYI2;
    assert!(report(
        "1",
        "L=8 J=0.1 ZZ-only nearest-neighbour Rényi-2 vs ED",
        pass,
        format!("max |Δ| = {worst:.2e}, tolerance {:.0e}", tol::SMALL_LADDER_RENYI2),
        start
    ));
}

#[test]
fn criterion_2_small_ladder_plaquette_entropy() {
    let start = Instant::now();
    let cfg = SweepConfig {
        j_over_h: 0.01,
        sizes: vec![8],
        pzz_grid: pzz_grid(0.05),
        mode: FilterMode::ZzOnly,
        ..SweepConfig::default()
    };
    let v = run_validation(&cfg, tol::SMALL_LADDER_ENTROPY).unwrap();
    let worst = v.report.max_abs_diff_of("entropy_plaquette");
    let pass = worst <= tol::SMALL_LADDER_ENTROPY;
    assert!(report(
        "2",
        "L=8 J=0.01 two-rung block entropy vs ED",
        pass,
        format!("max |Δ| = {worst:.2e}, tolerance {:.0e}", tol::SMALL_LADDER_ENTROPY),
        start
    ));
}

#[test]
fn criterion_3_dmrg_energies() {
    let start = Instant::now();
    let cfg = DmrgConfig { energy_tol: 1e-10, eigen_tol: 1e-11, ..DmrgConfig::default() };

    let ladder = ModelParams::new(1.0, 1.0, 8).unwrap();
    let init = MpsState::random(16, 4, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (_, doubled) = find_ground_state(&build_doubled_tfim_mpo(&ladder).unwrap(), &init, &cfg).unwrap();
    let exact_doubled = ground_state_dense(&ladder).unwrap().energy;
    let d1 = (doubled.energy - exact_doubled).abs();

    let chain = ModelParams::new(1.0, 1.0, 16).unwrap();
    let init = MpsState::random(16, 4, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (_, single) = find_ground_state(&build_chain_tfim_mpo(&chain).unwrap(), &init, &cfg).unwrap();
    let ff = tfim_exact_energy(1.0, 1.0, 16, 1).unwrap().min(tfim_exact_energy(1.0, 1.0, 16, -1).unwrap());
    let d2 = ((single.energy - ff) / ff).abs();

    let pass = d1 <= tol::DOUBLED_DMRG_ENERGY && d2 <= tol::CHAIN_DMRG_RELATIVE;
    assert!(report(
        "3",
        "DMRG vs exact energies",
        pass,
        format!(
            "doubled L=8 |ΔE| = {d1:.2e} (tol {:.0e}); chain L=16 relative {d2:.2e} (tol {:.0e})",
            tol::DOUBLED_DMRG_ENERGY,
            tol::CHAIN_DMRG_RELATIVE
        ),
        start
    ));
}

fn extrapolated_pc(j_over_h: f64, sizes: Vec<usize>) -> Option<f64> {
    let cfg = SweepConfig { j_over_h, sizes, ..SweepConfig::default() };
    let res = run_sweep(&cfg).unwrap();
    let fits = fit_results(j_over_h, &res.rows, &res.profiles, &Thresholds::default());
    for p in &fits.peaks {
        println!("  J/h={j_over_h} L={} peak at p_zz={:.4}", p.l, p.fit.p_peak);
    }
    fits.extrapolation.map(|e| e.p_c)
}

fn pc_check(id: &str, sizes: impl Fn(f64) -> Vec<usize>, tolerance: f64) -> bool {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (ratio, target) in PC_TARGETS {
        let pc = extrapolated_pc(ratio, sizes(ratio));
        let ok = pc.is_some_and(|p| (p - target).abs() <= tolerance);
        pass &= ok;
        parts.push(match pc {
            Some(p) => format!("J/h={ratio}: {p:.4} vs {target} ({})", if ok { "ok" } else { "off" }),
            None => format!("J/h={ratio}: no fit"),
        });
    }
    report(id, &format!("transition point within ±{tolerance}"), pass, parts.join("; "), start)
}

#[test]
fn criterion_4_reduced_extrapolation() {
    assert!(pc_check("4 (reduced, L ∈ {12,16,20})", |_| vec![12, 16, 20], tol::PC_REDUCED));
}

#[test]
#[ignore = "full-size sweep, tens of minutes on one core"]
fn criterion_4_full_extrapolation() {
    let sizes = |r: f64| {
        let mut s = vec![12, 16, 20, 24, 28];
        if r == 1.0 {
            s.push(32);
        }
        s
    };
    assert!(pc_check("4 (full)", sizes, tol::PC_FULL));
}

#[test]
fn criterion_5_regimes_at_l28() {
    let start = Instant::now();
    let cases = [(0.8, 0.05, Regime::I), (0.8, 0.45, Regime::II), (1.2, 0.05, Regime::III), (1.2, 0.45, Regime::II)];
    let mut pass = true;
    let mut parts = Vec::new();
    for ratio in [0.8, 1.2] {
        let m = ModelParams::new(ratio, 1.0, 28).unwrap();
        let (s, _) = prepare_initial_choi_state(&m, &DmrgConfig::default(), PrepRoute::ChainProduct, true).unwrap();
        for &(r, p, want) in cases.iter().filter(|c| c.0 == ratio) {
            let f = filter(&s, p, r, &TruncationPolicy::default()).unwrap();
            let chi: Vec<f64> = CorrelatorKind::ALL.iter().map(|k| susceptibility(&f, *k).unwrap()).collect();
            let got = classify_regime(chi[0], chi[1], chi[2], &Thresholds::default());
            pass &= got == want;
            parts.push(format!(
                "J/h={r} p={p}: χ=({:.3},{:.3},{:.3}) → {got} (want {want})",
                chi[0], chi[1], chi[2]
            ));
        }
    }
    assert!(report("5", "regimes at L=28", pass, parts.join("; "), start));
}

#[test]
fn criterion_6_central_charge() {
    let start = Instant::now();
    let m = ModelParams::new(1.0, 1.0, 20).unwrap();
    let (s, _) = prepare_initial_choi_state(&m, &DmrgConfig::default(), PrepRoute::ChainProduct, true).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.0, 0.3, 0.5] {
        let f = filter(&s, p, 1.0, &TruncationPolicy::default()).unwrap();
        let c = fit_ceff(&entropy_profile(&f).unwrap()).unwrap().c_eff;
        let ok = if p < 0.5 { (c - 1.0).abs() <= tol::CEFF_CRITICAL } else { c < tol::CEFF_FLAT };
        pass &= ok;
        parts.push(format!("p={p}: c_eff={c:.3}"));
    }
    assert!(report(
        "6",
        &format!("c_eff = 1 ± {} critical, < {} saturated, L=20", tol::CEFF_CRITICAL, tol::CEFF_FLAT),
        pass,
        parts.join("; "),
        start
    ));
}

/// The identities below hold for the represented state only when nothing
/// is truncated, so the L=8 checks keep every singular value (the exact
/// bond dimension, 256, exceeds the default cap).
fn prepared_l8(j: f64) -> (ModelParams, MpsState) {
    let m = ModelParams::new(j, 1.0, 8).unwrap();
    let cfg = DmrgConfig { trunc: TruncationPolicy::exact(), energy_tol: 1e-10, eigen_tol: 1e-11, ..DmrgConfig::default() };
    let (s, _) = prepare_initial_choi_state(&m, &cfg, PrepRoute::ChainProduct, true).unwrap();
    (m, s)
}

#[test]
fn criterion_7_property_suite() {
    let start = Instant::now();
    let trunc = TruncationPolicy::exact();
    let mut fails: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            fails.push(format!("{name}: {detail}"));
        }
    };

    let (m, s) = prepared_l8(1.2);
    let t0 = trace_overlap(&FilteredState::unfiltered(s.clone()));
    let input = DenseState::Doubled { rungs: 8, amplitudes: s.to_dense() };
    let string: Vec<_> = (0..8).map(|j| (2 * j, X)).collect();
    for p in [0.1, 0.3, 0.5] {
        let f = filter(&s, p, 1.2, &trunc).unwrap();
        // trace preservation
        let ratio = trace_overlap(&f).ratio(&t0);
        check("trace", (ratio - 1.0).abs() <= tol::TRACE, format!("p={p} ratio {ratio}"));
        // purity equals the squared norm of the same input under the dense channel
        let dense = apply_channel_dense(&input, p, map_px(p, 1.2).unwrap()).unwrap().vectorized();
        let purity: f64 = dense.iter().map(|x| x * x).sum();
        let rel = (purity_log(&f).exp() / purity - 1.0).abs();
        check("purity", rel <= tol::PURITY_RELATIVE, format!("p={p} relative {rel:.2e}"));
        // strong symmetry
        let par = f.state.expectation(&string);
        check("parity", (par - 1.0).abs() <= tol::PARITY, format!("p={p} ⟨∏X_u⟩ {par}"));
        // leg swap
        for (i, j) in [(0, 3), (2, 6)] {
            let u = correlator(&f, CorrelatorKind::UpperZz, i, j).unwrap();
            let l = f.state.expectation(&[(2 * i + 1, Z), (2 * j + 1, Z)]);
            check("leg swap", (u - l).abs() <= tol::LEG_SWAP, format!("p={p} ({i},{j}) {u} vs {l}"));
        }
    }

    // strange correlator against the canonical one from ED
    let ground = ground_state_dense(&m).unwrap();
    let f = filter(&s, 0.3, 1.2, &trunc).unwrap();
    let rho = apply_channel_dense(&ground.state, 0.3, map_px(0.3, 1.2).unwrap()).unwrap().matrix();
    for r in 1..8 {
        let a = correlator(&f, CorrelatorKind::StrangeZ, 0, r).unwrap();
        let b = mixed_ising::ed::canonical_zz(&rho, 8, 0, r);
        check("strange", (a - b).abs() <= tol::STRANGE_VS_CANONICAL, format!("r={r} {a} vs {b}"));
    }

    // pure-state identities
    let pure = FilteredState::unfiltered(s.clone());
    for (i, j) in [(0, 1), (0, 4), (3, 6)] {
        let u = correlator(&pure, CorrelatorKind::UpperZz, i, j).unwrap();
        let ii = correlator(&pure, CorrelatorKind::Renyi2Zz, i, j).unwrap();
        let st = correlator(&pure, CorrelatorKind::StrangeZ, i, j).unwrap();
        check("pure", (ii - u * u).abs() <= tol::PURE_STATE && (st - u).abs() <= tol::PURE_STATE, format!("({i},{j})"));
    }

    // channel layers commute, dense comparison at L=3
    let r3 = MpsState::random(6, 8, &mut ChaCha8Rng::seed_from_u64(5));
    let ex = TruncationPolicy::exact();
    let (tx, tz) = (tau_of_p(0.15).unwrap(), tau_of_p(0.4).unwrap());
    let a = apply_zz_layer(&apply_x_layer(&r3, tx, &ex).unwrap().0, tz, &ex).unwrap().0.to_dense();
    let b = apply_x_layer(&apply_zz_layer(&r3, tz, &ex).unwrap().0, tx, &ex).unwrap().0.to_dense();
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    check("commute", diff <= tol::COMMUTE, format!("max diff {diff:.2e}"));

    // Cauchy-Schwarz
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x = MpsState::random(8, 6, &mut rng);
        let y = MpsState::random(8, 6, &mut rng);
        let lhs = 2.0 * inner(&x, &y).log_magnitude;
        let rhs = inner(&x, &x).log_magnitude + inner(&y, &y).log_magnitude;
        check("cauchy-schwarz", lhs <= rhs + 1e-12, format!("{lhs} > {rhs}"));
    }

    // variational bound
    for l in [4usize, 6, 8] {
        for j in [0.5, 1.0, 1.5] {
            let p = ModelParams::new(j, 1.0, l).unwrap();
            let init = MpsState::random(l, 4, &mut rng);
            let (_, rep) = find_ground_state(&build_chain_tfim_mpo(&p).unwrap(), &init, &DmrgConfig::default()).unwrap();
            let exact = chain_ground_state(&p).unwrap().0;
            check("variational", rep.energy >= exact - tol::VARIATIONAL_SLACK, format!("L={l} J={j}"));
        }
    }

    let pass = fails.is_empty();
    let detail = if pass { "all properties hold".to_string() } else { fails.join("; ") };
    assert!(report("7", "property suite", pass, detail, start));
}

//! End-to-end acceptance suite. Each test prints one `PASS`/`FAIL` line.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nelson_ibc::fock::RadialGrid;
use nelson_ibc::ibc::{
    check_a_independence, check_adjointness, check_h_symmetry, check_l_g_identity, check_one_minus_g_identity,
    check_t_difference_identity,
};
use nelson_ibc::params::{
    breakpoint_left, breakpoint_right, classify_pair, emit_region_curves, large_branch, max_f, max_f_by_search,
    middle_branch, old_bound, small_branch, Condition1Branch,
};
use nelson_ibc::spectral::{
    g_norm_sweep, ibc_vs_cutoff, threshold_experiment, EigenOptions, Renormalization, ThresholdConfig, ThresholdTarget,
};
use nelson_ibc::{
    build_grid, build_h_lambda, lowest_eigenvalues, FockSpace, GridScheme, IbcConfig, Model, QuadratureSpec, TailMap,
};
use nelson_ibc_cli::{run, Command, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, title: &str, passed: bool, detail: &str) {
    println!(
        "{} criterion {n} ({title}): {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {n} failed: {detail}");
}

fn desk_space() -> Arc<FockSpace> {
    let grid = build_grid(32, 32.0, GridScheme::default()).unwrap();
    Arc::new(FockSpace::s_wave(&Model::nelson_massless(), &grid, 16, 2).unwrap())
}

#[test]
fn criterion_1_region_engine() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let beta = rng.random_range(0.01..1.99);
        worst = worst.max((max_f(beta).unwrap().value - max_f_by_search(beta, 4000).unwrap().value).abs());
    }
    let (bl, br) = (breakpoint_left(), breakpoint_right());
    let jump = (small_branch(bl) - middle_branch(bl))
        .abs()
        .max((middle_branch(br) - large_branch(br)).abs());
    let elapsed = start.elapsed();
    verdict(
        1,
        "region engine",
        worst <= 1e-9 && jump <= 1e-9 && elapsed < Duration::from_secs(5),
        &format!("max_F deviation {worst:.2e}, breakpoint jump {jump:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_2_region_figure() {
    let rows = emit_region_curves(400).unwrap();
    let (bl, br) = (breakpoint_left(), breakpoint_right());
    let mut worst = 0.0f64;
    let mut selection_ok = true;
    for r in &rows {
        let b = r.beta;
        let expected_branch = if b < bl {
            Condition1Branch::Small
        } else if b < br {
            Condition1Branch::Middle
        } else if b < 2.0 {
            Condition1Branch::Large
        } else {
            Condition1Branch::Endpoint
        };
        selection_ok &= r.branch == expected_branch;
        let cond1 = match expected_branch {
            Condition1Branch::Small => b * b / 2.0,
            Condition1Branch::Middle => 2.0 * b / (b + 4.0),
            Condition1Branch::Large => (b * b - 2.0 * b + 2.0) / (b + 1.0),
            Condition1Branch::Endpoint => 2.0 / 3.0,
        };
        for (got, want) in [
            (r.condition1, cond1),
            (r.old, 2.0 * b * b / (b * b + 8.0)),
            (r.half_beta, b / 2.0),
            (r.small, b * b / 2.0),
            (r.middle, 2.0 * b / (b + 4.0)),
            (r.large, (b * b - 2.0 * b + 2.0) / (b + 1.0)),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    let corner = classify_pair(2.0, 0.0);
    let corner_ok = !corner.condition1 && !corner.general && corner.old_condition;
    let endpoint_ok = classify_pair(2.0, 0.5).condition1 && old_bound(2.0) == 2.0 / 3.0;

    let dir = tempfile::tempdir().unwrap();
    let summary = run(Command::Region, &RunConfig::default(), dir.path(), 1).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("region.svg")).unwrap();
    let svg_ok = summary.passed()
        && svg.matches("<polyline").count() == 5
        && svg.contains(r#"id="excluded-point""#)
        && svg.contains(r#"fill="none""#);
    verdict(
        2,
        "region figure",
        worst <= 1e-12 && selection_ok && corner_ok && endpoint_ok && svg_ok,
        &format!("max curve deviation {worst:.2e}, selection {selection_ok}, (2,0) excluded {corner_ok}, svg {svg_ok}"),
    );
}

#[test]
fn criterion_3_e_lambda_oracle() {
    let start = Instant::now();
    let model = Model::nelson_massless();
    let spec = QuadratureSpec::default();
    let worst = [1.0f64, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&l| {
            let exact = 4.0 * std::f64::consts::PI * (1.0 + l).ln();
            (model.e_lambda(l, &spec).unwrap() - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        3,
        "E_Lambda oracle",
        worst <= 1e-8 && elapsed < Duration::from_secs(1),
        &format!("max relative error {worst:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_4_i_mu_checks() {
    let spec = QuadratureSpec::default();
    let exp = spec.with_tail_map(TailMap::ExpMap);
    let nelson = Model::nelson_massless();
    let origin = nelson.i_mu_scalar(0.0, 0.0, 0.0, &spec).unwrap().abs();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut monotone) = (0.0f64, true);
    for i in 0..100 {
        let model = if i % 2 == 0 {
            nelson
        } else {
            Model::nelson(rng.random_range(0.1..3.0))
        };
        let p = rng.random_range(0.0..20.0);
        let om = rng.random_range(0.0..20.0);
        let mu = rng.random_range(0.0..20.0);
        let a = model.i_mu_scalar(p, om, mu, &spec).unwrap();
        let b = model.i_mu_scalar(p, om, mu, &exp).unwrap();
        worst = worst.max((a - b).abs() / a.abs());
        let c = model
            .i_mu_scalar(p, om, mu + rng.random_range(0.01..10.0), &spec)
            .unwrap();
        monotone &= c < a;
    }
    verdict(
        4,
        "I_mu checks",
        origin <= 1e-12 && worst <= 1e-6 && monotone,
        &format!("|I_0(0)| = {origin:.1e}, backend gap {worst:.2e}, monotone {monotone}"),
    );
}

#[test]
fn criterion_5_operator_identities() {
    let start = Instant::now();
    let s = desk_space();
    let (cm, cl) = (IbcConfig::new(1.0).unwrap(), IbcConfig::new(2.0).unwrap());
    let t = check_t_difference_identity(&s, cm, cl, 5, 51).unwrap();
    let g = check_one_minus_g_identity(&s, cm, cl, 5, 52).unwrap();
    let a = check_a_independence(&s, cm, cl, 5, 53).unwrap();
    let lg = check_l_g_identity(&s, cm, 5, 54).unwrap();
    let h = check_h_symmetry(&s, cm, 100, 55).unwrap();
    let adj = check_adjointness(&s, cm, 100, 56).unwrap();
    let elapsed = start.elapsed();
    verdict(
        5,
        "operator identities",
        t <= 1e-6
            && g <= 1e-10
            && a <= 1e-8
            && lg <= 1e-13
            && h <= 1e-10
            && adj <= 1e-12
            && elapsed < Duration::from_secs(120),
        &format!("T {t:.1e}, 1-G {g:.1e}, A {a:.1e}, LG {lg:.1e}, H sym {h:.1e}, adjoint {adj:.1e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_6_g_norm_sweep() {
    let s = desk_space();
    let est = g_norm_sweep(&s, IbcConfig::new(1.0).unwrap(), &[1.0, 10.0, 100.0, 1000.0], 1e-10).unwrap();
    let norms: Vec<f64> = est.iter().map(|e| e.norm).collect();
    let nonincreasing = norms.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        6,
        "G-norm sweep",
        nonincreasing && norms[3] < 1.0,
        &format!("norms {norms:.4?}"),
    );
}

#[test]
fn criterion_7_threshold_exponents() {
    let start = Instant::now();
    let model = Model::nelson_massless();
    let fit = |t| {
        threshold_experiment(&model, &ThresholdConfig::new(t))
            .unwrap()
            .fitted_threshold
    };
    let (l, o) = (fit(ThresholdTarget::LPower), fit(ThresholdTarget::OmegaPower));
    let elapsed = start.elapsed();
    let ok = l.is_some_and(|x| (0.45..=0.55).contains(&x))
        && o.is_some_and(|x| (0.9..=1.1).contains(&x))
        && elapsed < Duration::from_secs(30);
    verdict(
        7,
        "threshold exponents",
        ok,
        &format!("L {l:?}, Omega {o:?}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_8_renormalized_convergence() {
    let start = Instant::now();
    let s = desk_space();
    let cmp = ibc_vs_cutoff(
        &s,
        &[4.0, 8.0, 16.0, 32.0],
        IbcConfig::new(1.0).unwrap(),
        Renormalization::Continuum,
        &EigenOptions::default(),
        &QuadratureSpec::default(),
    )
    .unwrap();
    let rep = &cmp.convergence;
    let decreasing = rep.differences_strictly_decreasing();
    let raw = rep.raw_ground_energies[3];
    let diverges = raw < -rep.e_lambda_values[3] / 2.0;
    let shrinks = cmp.gaps[3] < cmp.gaps[0];
    let elapsed = start.elapsed();
    verdict(
        8,
        "renormalized convergence",
        decreasing && diverges && shrinks && elapsed < Duration::from_secs(300),
        &format!(
            "differences {:.4?}, E0(H_32) = {raw:.4} vs -E_32/2 = {:.4}, gaps {:.3e} -> {:.3e}, {elapsed:.2?}",
            rep.successive_differences,
            -rep.e_lambda_values[3] / 2.0,
            cmp.gaps[0],
            cmp.gaps[3]
        ),
    );
}

#[test]
fn criterion_9_two_level_check() {
    let (r0, w0) = (1.3, 0.25);
    let grid = RadialGrid::from_nodes(vec![r0], vec![w0], 2.0).unwrap();
    let model = Model::nelson_massless();
    let s = Arc::new(FockSpace::s_wave(&model, &grid, 1, 1).unwrap());
    let res = lowest_eigenvalues(&build_h_lambda(&s, 2.0).unwrap(), 2, 1e-13).unwrap();
    let l1 = r0 * r0 + r0;
    let c2 = w0 / r0;
    let disc = (l1 * l1 + 4.0 * c2).sqrt();
    let err = (res.eigenvalues[0] - (l1 - disc) / 2.0)
        .abs()
        .max((res.eigenvalues[1] - (l1 + disc) / 2.0).abs());
    verdict(
        9,
        "two-level check",
        err <= 1e-12,
        &format!("max eigenvalue error {err:.1e}"),
    );
}

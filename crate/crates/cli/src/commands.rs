use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Result;
use nelson_ibc::ibc::IbcConfig;
use nelson_ibc::params::{
    breakpoint_left, breakpoint_right, classify_pair, condition1_bound, emit_region_curves, max_f, max_f_by_search,
};
use nelson_ibc::spectral::{
    g_norm_sweep, ibc_vs_cutoff, lowest_eigenpairs, threshold_experiment, ConvergenceReport, ThresholdConfig,
    ThresholdTarget,
};
use nelson_ibc::{build_h_lambda, IbcOperators, Model, TailMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{write_csv, Cell, Check, RunSummary, SCHEMA_VERSION};
use crate::svg::region_svg;

/// Where and how a subcommand runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn summary(&self, command: &str, checks: Vec<Check>, files: Vec<PathBuf>, report: serde_json::Value) -> RunSummary {
        RunSummary {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed: self.seed,
            checks,
            files,
            report,
        }
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn region(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let rows = emit_region_curves(cfg.region.beta_samples)?;
    let csv_path = ctx.path("region_curves.csv");
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.beta.into(),
                r.condition1.into(),
                r.old.into(),
                r.half_beta.into(),
                r.general.into(),
                format!("{:?}", r.branch).to_lowercase().into(),
            ]
        })
        .collect();
    write_csv(
        &csv_path,
        &["beta", "cond1", "old", "half_beta", "general", "branch"],
        &table,
    )?;
    let svg_path = ctx.path("region.svg");
    std::fs::write(&svg_path, region_svg(&rows))?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.region.check_samples {
        let beta = rng.random_range(0.01..1.99);
        let closed = max_f(beta)?.value;
        let searched = max_f_by_search(beta, 2000)?.value;
        worst = worst.max((closed - searched).abs());
    }
    let mut jump = 0.0f64;
    for b in [breakpoint_left(), breakpoint_right()] {
        let h = 1e-12;
        jump = jump.max((condition1_bound(b - h)? - condition1_bound(b)?).abs());
    }
    let limit = condition1_bound(2.0 - 1e-12)?;
    let corner = classify_pair(2.0, 0.0);
    let checks = vec![
        Check::new(
            "max_f_matches_search",
            worst <= 1e-9,
            format!("max deviation {worst:e}"),
        ),
        Check::new("condition1_continuous", jump <= 1e-9, format!("max jump {jump:e}")),
        Check::new(
            "endpoint_limit",
            close(limit, 2.0 / 3.0, 1e-9),
            format!("limit {limit}"),
        ),
        Check::new(
            "corner_excluded",
            !corner.condition1 && !corner.general && !corner.half_beta_region,
            format!("{corner:?}"),
        ),
    ];
    let report = json!({ "rows": rows.len(), "max_f_deviation": worst, "breakpoint_jump": jump });
    Ok(ctx.summary("region", checks, vec![csv_path, svg_path], report))
}

fn analytic_e_lambda(model: &Model, lambda: f64) -> Option<f64> {
    let nelson = Model::nelson_massless().with_coupling(model.coupling);
    (*model == nelson && model.coupling == 1.0).then(|| Model::e_lambda_nelson_massless(lambda))
}

pub fn integral(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let model = cfg.model.build()?;
    let quad = cfg.quadrature.build()?;
    let other = quad.with_tail_map(match quad.tail_map {
        TailMap::RationalMap => TailMap::ExpMap,
        TailMap::ExpMap => TailMap::RationalMap,
    });
    let ic = &cfg.integral;
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut worst_backend = 0.0f64;
    let mut monotone = true;
    for &p in &ic.p {
        for &om in &ic.omega {
            let mut previous: Option<f64> = None;
            let mut mus = ic.mu.clone();
            mus.sort_by(f64::total_cmp);
            for mu in mus {
                let a = model.i_mu_scalar(p, om, mu, &quad);
                let b = model.i_mu_scalar(p, om, mu, &other);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
                        if a != b {
                            worst_backend = worst_backend.max(rel);
                        }
                        if let Some(prev) = previous {
                            monotone &= a < prev;
                        }
                        previous = Some(a);
                        rows.push(vec![p.into(), om.into(), mu.into(), a.into(), b.into(), "ok".into()]);
                    }
                    (a, b) => {
                        failures += 1;
                        let err = a.err().or(b.err()).map(|e| e.to_string()).unwrap_or_default();
                        rows.push(vec![
                            p.into(),
                            om.into(),
                            mu.into(),
                            f64::NAN.into(),
                            f64::NAN.into(),
                            err.into(),
                        ]);
                    }
                }
            }
        }
    }
    let i_path = ctx.path("integral_i_mu.csv");
    write_csv(
        &i_path,
        &["p", "omega", "mu", "i_mu", "i_mu_second_backend", "status"],
        &rows,
    )?;

    let mut e_rows = Vec::new();
    let mut worst_analytic = 0.0f64;
    for &l in &ic.lambda {
        let analytic = analytic_e_lambda(&model, l);
        match model.e_lambda(l, &quad) {
            Ok(e) => {
                if let Some(x) = analytic {
                    worst_analytic = worst_analytic.max((e - x).abs() / x.abs().max(1e-300));
                }
                e_rows.push(vec![
                    l.into(),
                    e.into(),
                    analytic.unwrap_or(f64::NAN).into(),
                    "ok".into(),
                ]);
            }
            Err(err) => {
                failures += 1;
                e_rows.push(vec![
                    l.into(),
                    f64::NAN.into(),
                    analytic.unwrap_or(f64::NAN).into(),
                    err.to_string().into(),
                ]);
            }
        }
    }
    let e_path = ctx.path("integral_e_lambda.csv");
    write_csv(&e_path, &["lambda", "e_lambda", "e_lambda_analytic", "status"], &e_rows)?;

    let checks = vec![
        Check::new("all_rows_converged", failures == 0, format!("{failures} failed rows")),
        Check::new(
            "backends_agree",
            worst_backend <= 1e-6,
            format!("max relative gap {worst_backend:e}"),
        ),
        Check::new("decreasing_in_mu", monotone, ""),
        Check::new(
            "e_lambda_analytic",
            worst_analytic <= 1e-8,
            format!("max relative error {worst_analytic:e}"),
        ),
    ];
    let report = json!({ "i_mu_rows": rows.len(), "e_lambda_rows": e_rows.len(), "failed_rows": failures });
    Ok(ctx.summary("integral", checks, vec![i_path, e_path], report))
}

pub fn spectrum(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let model = cfg.model.build()?;
    let space = cfg.grid.build(&model)?;
    let quad = cfg.quadrature.build()?;
    let sc = &cfg.spectrum;
    let opts = cfg.solver.options(sc.k, ctx.seed);
    let (res, operator, shift) = match sc.lambda {
        Some(l) => (
            lowest_eigenpairs(&build_h_lambda(&space, l)?, &opts)?,
            format!("h_lambda({l})"),
            None,
        ),
        None => {
            let ibc_cfg = IbcConfig::new(sc.mu)?.with_diagonal(sc.diagonal.rule(quad));
            let ops = Arc::new(IbcOperators::new(&space, ibc_cfg)?);
            let e_grid = ops.e_grid();
            (
                lowest_eigenpairs(&ops.h_handle(), &opts)?,
                "ibc".to_string(),
                Some(e_grid),
            )
        }
    };
    let rows: Vec<Vec<Cell>> = res
        .eigenvalues
        .iter()
        .zip(&res.residual_norms)
        .enumerate()
        .map(|(i, (e, r))| vec![i.into(), (*e).into(), (*r).into()])
        .collect();
    let path = ctx.path("spectrum.csv");
    write_csv(&path, &["index", "eigenvalue", "residual"], &rows)?;
    let contract = res
        .eigenvalues
        .iter()
        .zip(&res.residual_norms)
        .all(|(e, r)| *r <= opts.tol * e.abs().max(1.0));
    let checks = vec![
        Check::new(
            "converged",
            res.converged,
            format!("{} operator applications", res.iterations),
        ),
        Check::new("residual_contract", contract, format!("{:?}", res.residual_norms)),
    ];
    let report = json!({
        "operator": operator,
        "dim": space.dim(),
        "e_grid": shift,
        "result": res,
    });
    Ok(ctx.summary("spectrum", checks, vec![path], report))
}

/// Checks on a convergence column.
pub fn convergence_checks(report: &ConvergenceReport, coupled: bool) -> Vec<Check> {
    let d = &report.successive_differences;
    if !coupled {
        let spread = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        return vec![Check::new(
            "renormalized_constant",
            spread <= 1e-10,
            format!("max step {spread:e}"),
        )];
    }
    let last = report.lambda_values.len() - 1;
    let raw = report.raw_ground_energies[last];
    let half = -report.e_lambda_values[last] / 2.0;
    vec![
        Check::new(
            "differences_decreasing",
            report.differences_strictly_decreasing(),
            format!("{d:?}"),
        ),
        Check::new(
            "raw_energy_diverges",
            raw < half,
            format!("E0 = {raw}, -E_Lambda/2 = {half}"),
        ),
    ]
}

pub fn convergence(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let model = cfg.model.build()?;
    let space = cfg.grid.build(&model)?;
    let quad = cfg.quadrature.build()?;
    let cc = &cfg.convergence;
    let opts = cfg.solver.options(1, ctx.seed);
    let ibc_cfg = IbcConfig::new(cc.mu)?.with_diagonal(cc.diagonal.rule(quad));
    let cmp = ibc_vs_cutoff(&space, &cc.lambdas, ibc_cfg, cc.renormalization, &opts, &quad)?;
    let rows: Vec<Vec<Cell>> = cmp
        .convergence
        .rows()
        .iter()
        .zip(&cmp.gaps)
        .map(|(r, g)| r.iter().map(|x| Cell::from(*x)).chain([Cell::from(*g)]).collect())
        .collect();
    let mut header = ConvergenceReport::HEADER.to_vec();
    header.push("ibc_gap");
    let path = ctx.path("convergence.csv");
    write_csv(&path, &header, &rows)?;
    let coupled = model.coupling != 0.0;
    let mut checks = convergence_checks(&cmp.convergence, coupled);
    let (first, last) = (cmp.gaps[0], cmp.gaps[cmp.gaps.len() - 1]);
    checks.push(Check::new(
        "ibc_gap_shrinks",
        if coupled { last < first } else { last <= 1e-10 },
        format!("first {first:e}, last {last:e}"),
    ));
    Ok(ctx.summary("convergence", checks, vec![path], serde_json::to_value(&cmp)?))
}

pub fn gnorm(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let model = cfg.model.build()?;
    let space = cfg.grid.build(&model)?;
    let gc = &cfg.gnorm;
    let mut mus = gc.mus.clone();
    mus.sort_by(f64::total_cmp);
    let base = IbcConfig::new(mus.first().copied().unwrap_or(1.0))?;
    let est = g_norm_sweep(&space, base, &mus, gc.tol)?;
    let rows: Vec<Vec<Cell>> = est
        .iter()
        .map(|e| vec![e.mu.into(), e.norm.into(), e.iterations.into()])
        .collect();
    let path = ctx.path("gnorm.csv");
    write_csv(&path, &nelson_ibc::spectral::G_NORM_HEADER, &rows)?;
    let norms: Vec<f64> = est.iter().map(|e| e.norm).collect();
    let last = norms.last().copied().unwrap_or(f64::NAN);
    let checks = vec![
        Check::new(
            "nonincreasing",
            norms.windows(2).all(|w| w[1] <= w[0]),
            format!("{norms:?}"),
        ),
        Check::new("final_below_one", last < 1.0, format!("{last}")),
    ];
    Ok(ctx.summary("gnorm", checks, vec![path], serde_json::to_value(&est)?))
}

pub fn threshold(cfg: &RunConfig, ctx: &Context) -> Result<RunSummary> {
    let model = cfg.model.build()?;
    let tc = &cfg.threshold;
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for target in tc.target.targets() {
        let mut exp = ThresholdConfig::new(target);
        if let Some(x) = &tc.exponents {
            exp.exponents = x.clone();
        }
        if let Some(c) = &tc.cutoffs {
            exp.cutoffs = c.clone();
        }
        exp.probe.width = tc.probe_width;
        exp.mu = tc.mu;
        let rep = threshold_experiment(&model, &exp)?;
        let name = match target {
            ThresholdTarget::LPower => "l_power",
            ThresholdTarget::OmegaPower => "omega_power",
        };
        let mut rows = Vec::new();
        for (i, x) in rep.exponent_grid.iter().enumerate() {
            for (j, r) in rep.cutoff_grid.iter().enumerate() {
                rows.push(vec![
                    (*x).into(),
                    (*r).into(),
                    rep.norm_table[i][j].into(),
                    rep.slopes[i].into(),
                ]);
            }
        }
        let path = ctx.path(&format!("threshold_{name}.csv"));
        write_csv(&path, &["exponent", "cutoff", "shell_norm_sq", "slope"], &rows)?;
        files.push(path);
        let tol = match target {
            ThresholdTarget::LPower => tc.l_power_tolerance,
            ThresholdTarget::OmegaPower => tc.omega_power_tolerance,
        };
        let fitted = rep.fitted_threshold;
        checks.push(Check::new(
            &format!("{name}_slopes_nondecreasing"),
            rep.slopes.windows(2).all(|s| s[1] >= s[0]),
            format!("{:?}", rep.slopes),
        ));
        checks.push(Check::new(
            &format!("{name}_threshold"),
            fitted.is_some_and(|f| (f - rep.predicted_threshold).abs() <= tol),
            format!("fitted {fitted:?}, predicted {}", rep.predicted_threshold),
        ));
        reports.push(rep);
    }
    Ok(ctx.summary("threshold", checks, files, serde_json::to_value(&reports)?))
}

/// Writes `<command>.json` next to the CSV files.
pub fn write_summary(summary: &RunSummary, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join(format!("{}.json", summary.command));
    crate::output::write_json(&path, summary)?;
    Ok(path)
}

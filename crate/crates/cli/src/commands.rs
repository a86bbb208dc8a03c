//! The subcommands, as functions from a validated scenario to a table.

use cmac_secrecy::allocator::{max_secrecy_endpoint_parallel, solve_async, solve_multipliers_with};
use cmac_secrecy::fading::{boundary_point, rule_discrepancy, secure_fraction, GENERATOR};
use cmac_secrecy::oracle::{
    grid_optimize_mode, lagrangian_grid_optimize_state_with, state_lagrangian,
};
use cmac_secrecy::{
    kkt_residuals_parallel, kkt_residuals_state, linear_to_db, par, random_instances, rate_pair,
    sample_states, solve_multipliers_empirical_with, BudgetStatus, Execution, FadingRule,
    FadingState, KktKind, MultiplierSolution, ParallelInstance, SolverOptions, Transmission,
};
use serde_json::{json, Map, Value};

use crate::config::{Mode, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::table::{json_f64, Cell, Table};

/// A table plus the failure, if any, that should set the exit status once
/// the table has been written.
#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub failure: Option<CliError>,
}

fn status_name(s: BudgetStatus) -> &'static str {
    match s {
        BudgetStatus::Binding => "binding",
        BudgetStatus::Slack => "slack",
        BudgetStatus::Zero => "zero",
    }
}

fn solver_options() -> SolverOptions {
    SolverOptions::default()
}

fn metadata(cfg: &ScenarioConfig, command: &str) -> Map<String, Value> {
    let [p1, p2] = cfg.budgets();
    let opts = solver_options();
    let mut m = Map::new();
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert(
        "mode".into(),
        json!(match cfg.mode {
            Mode::Parallel => "parallel",
            Mode::Fading => "fading",
        }),
    );
    m.insert(
        "budgets".into(),
        json!({
            "p1": json_f64(p1),
            "p2": json_f64(p2),
            "p1_db": json_f64(linear_to_db(p1)),
            "p2_db": json_f64(linear_to_db(p2)),
        }),
    );
    m.insert(
        "solver".into(),
        json!({
            "rel_tol": opts.rel_tol,
            "abs_tol": opts.abs_tol,
            "max_iter": opts.max_iter,
        }),
    );
    if let Some(p) = &cfg.parallel {
        m.insert("parallel".into(), json!({ "nu": p.nu, "mu": p.mu }));
    }
    if let Some(f) = &cfg.fading {
        m.insert(
            "fading".into(),
            json!({
                "sigma1": f.sigma1,
                "sigma2": f.sigma2,
                "sigma3": f.sigma3,
                "nu": f.nu,
                "mu": f.mu,
                "samples": f.samples,
                "seed": f.seed,
                "rule": f.rule.name(),
                "generator": GENERATOR,
            }),
        );
    }
    m
}

fn parallel_point(
    inst: &ParallelInstance,
    gamma1: f64,
) -> cmac_secrecy::Result<MultiplierSolution> {
    if gamma1 == f64::INFINITY {
        max_secrecy_endpoint_parallel(inst, &solver_options())
    } else {
        solve_multipliers_with(inst, gamma1, &solver_options())
    }
}

const REGION_COLUMNS: [&str; 12] = [
    "gamma1",
    "lambda1",
    "lambda2",
    "r0",
    "r1",
    "power_used_1",
    "power_used_2",
    "mc_stderr_r0",
    "mc_stderr_r1",
    "status_1",
    "status_2",
    "converged",
];

fn failed_row(gamma1: f64, n: usize) -> Vec<Cell> {
    let mut row = vec![Cell::Num(gamma1)];
    row.extend((1..n - 1).map(|_| Cell::Num(f64::NAN)));
    row.push(Cell::Bool(false));
    row
}

/// Both budgets always bind, so a slack one means the multiplier hit its
/// floor before the budget could be spent.
fn unreached(g: f64, status: &[BudgetStatus; 2], errors: &mut Vec<Value>) -> bool {
    let slack = status.contains(&BudgetStatus::Slack);
    if slack {
        errors.push(json!({
            "gamma1": json_f64(g),
            "error": "budget not reached at the multiplier floor",
        }));
    }
    !slack
}

fn record_errors(table: &mut Table, errors: Vec<Value>) -> Option<CliError> {
    if errors.is_empty() {
        return None;
    }
    let n = errors.len();
    table
        .metadata
        .insert("row_errors".into(), Value::Array(errors));
    Some(CliError::Solver(format!(
        "{n} sweep point(s) failed; see row_errors"
    )))
}

/// Boundary sweep: one row per weight.
pub fn region(cfg: &ScenarioConfig) -> CliResult<Report> {
    let exec = Execution::default();
    let gammas = &cfg.sweep.gamma1;
    let mut table = Table::new(REGION_COLUMNS.to_vec());
    table.metadata = metadata(cfg, "region");
    let mut errors = Vec::new();
    let ncol = REGION_COLUMNS.len();

    match cfg.mode {
        Mode::Parallel => {
            let inst = cfg.parallel_instance()?;
            let results = par::map(exec, gammas, |&g| {
                let sol = parallel_point(&inst, g)?;
                let rates = rate_pair(&inst, &sol.allocations, Transmission::Synchronous)?;
                Ok((sol, rates))
            });
            for (&g, res) in gammas.iter().zip(results) {
                match res {
                    Ok((sol, r)) => {
                        let converged = unreached(g, &sol.status, &mut errors);
                        table.push(vec![
                            Cell::Num(g),
                            Cell::Num(sol.multipliers.lambda1),
                            Cell::Num(sol.multipliers.lambda2),
                            Cell::Num(r.r0),
                            Cell::Num(r.r1),
                            Cell::Num(sol.power_used[0]),
                            Cell::Num(sol.power_used[1]),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Text(status_name(sol.status[0]).into()),
                            Cell::Text(status_name(sol.status[1]).into()),
                            Cell::Bool(converged),
                        ])
                    }
                    Err(e) => {
                        let e: cmac_secrecy::Error = e;
                        errors.push(json!({ "gamma1": json_f64(g), "error": e.to_string() }));
                        table.push(failed_row(g, ncol));
                    }
                }
            }
        }
        Mode::Fading => {
            let spec = cfg.rayleigh()?;
            let rule = cfg.fading_rule();
            let states = sample_states(&spec)?;
            table
                .metadata
                .insert("secure_fraction".into(), json!(secure_fraction(&states)));
            let opts = solver_options();
            let results = par::map(exec, gammas, |&g| {
                boundary_point(exec, &states, g, cfg.budgets(), rule, &opts)
            });
            let mut checks = Vec::new();
            let tol = cfg.verify.state_tolerance;
            let mut flagged = false;
            for (&g, res) in gammas.iter().zip(results) {
                match res {
                    Ok(p) => {
                        let converged = unreached(g, &p.status, &mut errors);
                        if g.is_finite() {
                            let d = rule_discrepancy(exec, &states, g, &p.multipliers, tol)?;
                            flagged |= d.fraction_differing > 1.0 - cfg.verify.agreement_threshold;
                            checks.push(serde_json::to_value(d).expect("serialisable"));
                        }
                        table.push(vec![
                            Cell::Num(g),
                            Cell::Num(p.multipliers.lambda1),
                            Cell::Num(p.multipliers.lambda2),
                            Cell::Num(p.rates.r0),
                            Cell::Num(p.rates.r1),
                            Cell::Num(p.power_used[0]),
                            Cell::Num(p.power_used[1]),
                            Cell::Num(p.stderr.r0),
                            Cell::Num(p.stderr.r1),
                            Cell::Text(status_name(p.status[0]).into()),
                            Cell::Text(status_name(p.status[1]).into()),
                            Cell::Bool(converged),
                        ]);
                    }
                    Err(e) => {
                        errors.push(json!({ "gamma1": json_f64(g), "error": e.to_string() }));
                        table.push(failed_row(g, ncol));
                    }
                }
            }
            table.metadata.insert(
                "rule_comparison".into(),
                json!({
                    "literal_rule_discrepancy": flagged,
                    "note": "literal closed form compared with the consistent one on the per-state Lagrangian at the solved multipliers",
                    "per_gamma1": checks,
                }),
            );
        }
    }
    let failure = record_errors(&mut table, errors);
    Ok(Report { table, failure })
}

/// Synchronous and asynchronous boundary points at the same weights.
pub fn compare_async(cfg: &ScenarioConfig) -> CliResult<Report> {
    if cfg.mode != Mode::Parallel {
        return Err(CliError::Usage(
            "compare-async needs mode = \"parallel\"".into(),
        ));
    }
    let exec = Execution::default();
    let inst = cfg.parallel_instance()?;
    let certify = inst.len() <= cmac_secrecy::oracle::MAX_SUBCHANNELS;
    let grid = cfg.verify.grid()?;
    let gammas = &cfg.sweep.gamma1;
    let columns = vec![
        "gamma1",
        "sync_r0",
        "sync_r1",
        "async_r0",
        "async_r1",
        "r0_gain",
        "async_oracle_objective",
        "converged",
    ];
    let ncol = columns.len();
    let mut table = Table::new(columns);
    table.metadata = metadata(cfg, "compare-async");
    table.metadata.insert(
        "async_method".into(),
        json!(if certify {
            "exact single-user reduction, certified by the grid oracle"
        } else {
            "exact single-user reduction"
        }),
    );

    let results = par::map(exec, gammas, |&g| -> cmac_secrecy::Result<_> {
        let sync = parallel_point(&inst, g)?;
        let rs = rate_pair(&inst, &sync.allocations, Transmission::Synchronous)?;
        let ra = if g.is_finite() {
            solve_async(&inst, g, &solver_options())?.rates
        } else {
            // a = 0 at the maximal-secrecy end, so there is nothing to combine
            rate_pair(&inst, &sync.allocations, Transmission::Asynchronous)?
        };
        let oracle = if certify && g.is_finite() {
            Some(grid_optimize_mode(&inst, g, &grid, Transmission::Asynchronous, exec)?.objective)
        } else {
            None
        };
        Ok((rs, ra, oracle, sync.status))
    });
    let mut errors = Vec::new();
    for (&g, res) in gammas.iter().zip(results) {
        match res {
            Ok((rs, ra, oracle, status)) => {
                let converged = unreached(g, &status, &mut errors);
                table.push(vec![
                    Cell::Num(g),
                    Cell::Num(rs.r0),
                    Cell::Num(rs.r1),
                    Cell::Num(ra.r0),
                    Cell::Num(ra.r1),
                    Cell::Num(rs.r0 - ra.r0),
                    oracle.map_or(Cell::Empty, Cell::Num),
                    Cell::Bool(converged),
                ])
            }
            Err(e) => {
                errors.push(json!({ "gamma1": json_f64(g), "error": e.to_string() }));
                table.push(failed_row(g, ncol));
            }
        }
    }
    let failure = record_errors(&mut table, errors);
    Ok(Report { table, failure })
}

/// Dumps the sampled fading states.
pub fn sample(cfg: &ScenarioConfig) -> CliResult<Report> {
    let spec = cfg.rayleigh()?;
    let states = sample_states(&spec)?;
    let mut table = Table::new(vec!["index", "h1sq", "h2sq", "g1sq", "secure"]);
    table.metadata = metadata(cfg, "sample");
    table
        .metadata
        .insert("secure_fraction".into(), json!(secure_fraction(&states)));
    for (i, s) in states.iter().enumerate() {
        table.push(vec![
            Cell::Int(i as u64),
            Cell::Num(s.h1sq()),
            Cell::Num(s.h2sq()),
            Cell::Num(s.g1sq()),
            Cell::Bool(s.classify() == cmac_secrecy::SetLabel::Secure),
        ]);
    }
    Ok(Report {
        table,
        failure: None,
    })
}

const VERIFY_COLUMNS: [&str; 13] = [
    "check",
    "subject",
    "size",
    "gamma1",
    "closed_form",
    "oracle",
    "gap",
    "kkt_residual",
    "ratio_residual",
    "budget_error",
    "confidential_zero",
    "agreement",
    "pass",
];

struct Worst {
    gap: f64,
    kkt: f64,
    ratio: f64,
    budget: f64,
    failures: usize,
}

fn verify_parallel(
    cfg: &ScenarioConfig,
    label: String,
    inst: &ParallelInstance,
    table: &mut Table,
    worst: &mut Worst,
) -> CliResult<()> {
    let v = &cfg.verify;
    let grid = v.grid()?;
    let exec = Execution::default();
    for &g in &v.gamma1 {
        let sol = solve_multipliers_with(inst, g, &solver_options())?;
        let closed = rate_pair(inst, &sol.allocations, Transmission::Synchronous)?;
        let closed = closed.r0 + g * closed.r1;
        let oracle = grid_optimize_mode(inst, g, &grid, Transmission::Synchronous, exec)?;
        let gap = (closed - oracle.objective).abs();
        let kkt = kkt_residuals_parallel(inst, g, &sol.multipliers, &sol.allocations);
        let stationarity = kkt
            .residuals
            .iter()
            .filter(|r| r.kind != KktKind::Ratio)
            .map(|r| r.value)
            .fold(0.0, f64::max);
        let ratio = kkt.max_of(KktKind::Ratio);
        let budget = if sol.degenerate() {
            None
        } else {
            let e1 = (sol.power_used[0] - inst.p1()).abs() / inst.p1();
            let e2 = (sol.power_used[1] - inst.p2()).abs() / inst.p2();
            Some(e1.max(e2))
        };
        let zero_b = (g <= 1.0).then(|| {
            sol.allocations.iter().all(|p| p.confidential == 0.0)
                && oracle.allocations.iter().all(|p| p.confidential == 0.0)
        });
        let pass = gap < v.tolerance
            && stationarity < v.kkt_tolerance
            && ratio < v.ratio_tolerance
            && budget.is_none_or(|e| e < v.budget_tolerance)
            && zero_b.unwrap_or(true);
        worst.gap = worst.gap.max(gap);
        worst.kkt = worst.kkt.max(stationarity);
        worst.ratio = worst.ratio.max(ratio);
        worst.budget = worst.budget.max(budget.unwrap_or(0.0));
        worst.failures += usize::from(!pass);
        table.push(vec![
            Cell::Text("parallel".into()),
            Cell::Text(label.clone()),
            Cell::Int(inst.len() as u64),
            Cell::Num(g),
            Cell::Num(closed),
            Cell::Num(oracle.objective),
            Cell::Num(gap),
            Cell::Num(stationarity),
            Cell::Num(ratio),
            budget.map_or(Cell::Empty, Cell::Num),
            zero_b.map_or(Cell::Empty, Cell::Bool),
            Cell::Empty,
            Cell::Bool(pass),
        ]);
    }
    Ok(())
}

/// Per-state certification of both fading rules at the multipliers solved
/// with the configured rule. Returns whether the literal rule was flagged.
fn verify_fading(cfg: &ScenarioConfig, table: &mut Table, worst: &mut Worst) -> CliResult<bool> {
    let v = &cfg.verify;
    let exec = Execution::default();
    let mut spec = cfg.rayleigh()?;
    spec.n_samples = v.states;
    let states: Vec<FadingState> = sample_states(&spec)?;
    let grid = v.state_grid()?;
    let rule = cfg.fading_rule();
    let [p1, p2] = cfg.budgets();
    let mut flagged = false;
    for &g in &v.gamma1 {
        let sol =
            solve_multipliers_empirical_with(exec, &states, g, p1, p2, rule, &solver_options())?;
        let m = sol.multipliers;
        let oracle = par::map(exec, &states, |s| {
            lagrangian_grid_optimize_state_with(Execution::Sequential, s, g, &m, &grid)
        })
        .into_iter()
        .collect::<cmac_secrecy::Result<Vec<_>>>()?;
        for r in [FadingRule::Consistent, FadingRule::Literal] {
            let mut agree = 0;
            let mut gap = 0.0f64;
            let mut kkt = 0.0f64;
            let (mut sum_closed, mut sum_oracle) = (0.0, 0.0);
            for (s, o) in states.iter().zip(&oracle) {
                let p = r.allocate(s, g, &m)?;
                let lc = state_lagrangian(s, g, &m, &p);
                let d = (o.lagrangian - lc).abs();
                gap = gap.max(d);
                agree += usize::from(d <= v.state_tolerance);
                kkt = kkt.max(kkt_residuals_state(s, g, &m, &p).max());
                sum_closed += lc;
                sum_oracle += o.lagrangian;
            }
            let n = states.len() as f64;
            let fraction = agree as f64 / n;
            let consistent = fraction >= v.agreement_threshold;
            // A disagreeing literal rule is reported, not failed.
            let pass = consistent || r == FadingRule::Literal;
            if r == FadingRule::Literal && !consistent {
                flagged = true;
            }
            if r == FadingRule::Consistent {
                worst.kkt = worst.kkt.max(kkt);
            }
            worst.failures += usize::from(!pass);
            table.push(vec![
                Cell::Text("fading-state".into()),
                Cell::Text(r.name().into()),
                Cell::Int(states.len() as u64),
                Cell::Num(g),
                Cell::Num(sum_closed / n),
                Cell::Num(sum_oracle / n),
                Cell::Num(gap),
                Cell::Num(kkt),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Num(fraction),
                Cell::Bool(pass),
            ]);
        }
    }
    Ok(flagged)
}

/// Closed forms against the brute-force oracles.
pub fn verify(cfg: &ScenarioConfig) -> CliResult<Report> {
    let v = &cfg.verify;
    let mut table = Table::new(VERIFY_COLUMNS.to_vec());
    table.metadata = metadata(cfg, "verify");
    let mut worst = Worst {
        gap: 0.0,
        kkt: 0.0,
        ratio: 0.0,
        budget: 0.0,
        failures: 0,
    };

    let mut flagged = None;
    match cfg.mode {
        Mode::Parallel => {
            let inst = cfg.parallel_instance()?;
            if inst.len() <= cmac_secrecy::oracle::MAX_SUBCHANNELS {
                verify_parallel(cfg, "scenario".into(), &inst, &mut table, &mut worst)?;
            }
        }
        Mode::Fading => flagged = Some(verify_fading(cfg, &mut table, &mut worst)?),
    }
    let sizes: Vec<usize> = std::iter::repeat_n(1, v.single_link_instances)
        .chain((0..v.multi_link_instances).map(|k| 2 + k % 2))
        .collect();
    let noise = (v.noise_range[0], v.noise_range[1]);
    let budget = (v.budget_range[0], v.budget_range[1]);
    for (k, inst) in random_instances(v.seed, &sizes, noise, budget)?
        .iter()
        .enumerate()
    {
        verify_parallel(cfg, format!("random-{k}"), inst, &mut table, &mut worst)?;
    }

    table.metadata.insert(
        "tolerances".into(),
        json!({
            "objective_gap": v.tolerance,
            "kkt": v.kkt_tolerance,
            "ratio": v.ratio_tolerance,
            "budget": v.budget_tolerance,
            "state_lagrangian": v.state_tolerance,
            "agreement_threshold": v.agreement_threshold,
            "points_per_axis": v.points_per_axis,
            "refinement_rounds": v.refinement_rounds,
            "state_refinement_rounds": v.state_refinement_rounds,
        }),
    );
    table.metadata.insert(
        "worst".into(),
        json!({
            "objective_gap": worst.gap,
            "kkt": worst.kkt,
            "ratio": worst.ratio,
            "budget": worst.budget,
        }),
    );
    table
        .metadata
        .insert("failures".into(), json!(worst.failures));
    if let Some(flag) = flagged {
        table.metadata.insert(
            "literal_rule_discrepancy".into(),
            json!({
                "flagged": flag,
                "detail": if flag {
                    "the literal fading closed form mixes received and transmit-referred noise in the common-power level and uses the real-valued factor in the confidential root; the consistent rule re-derives both from the complex-valued rates"
                } else {
                    "both fading rules agree with the per-state oracle"
                },
            }),
        );
    }
    let failure = (worst.failures > 0).then(|| {
        CliError::Verification(format!(
            "{} check(s) out of tolerance; worst objective gap {:e}, worst KKT residual {:e}",
            worst.failures, worst.gap, worst.kkt
        ))
    });
    Ok(Report { table, failure })
}

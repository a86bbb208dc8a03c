//! Multiplier search: nested geometric bisection.
//!
//! The outer loop bisects `λ1` on the user-1 budget; for every trial `λ1` the
//! inner loop bisects `λ2` on the user-2 budget. Each budget is a
//! non-increasing function of its own multiplier, and bisection is
//! indifferent to the kinks introduced by the `(·)⁺` clamps. A zero budget
//! pins its multiplier at `+∞`.

use serde::{Deserialize, Serialize};

use super::{allocate_subchannel, FadingRule, MultiplierPair};
use crate::channel::{check_gamma, FadingState, ParallelInstance, PowerAllocation};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative budget tolerance.
    pub rel_tol: f64,
    /// Absolute floor on the budget tolerance.
    pub abs_tol: f64,
    /// Bisection steps per level.
    pub max_iter: usize,
    /// Initial bracket, expanded geometrically until it straddles the budget.
    pub bracket: (f64, f64),
    /// Stand-in for `λ → 0⁺`.
    pub floor: f64,
    /// Largest multiplier tried before giving up.
    pub ceiling: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            max_iter: 200,
            bracket: (1e-9, 1e3),
            floor: 1e-12,
            ceiling: 1e18,
        }
    }
}

impl SolverOptions {
    fn tolerance(&self, budget: f64) -> f64 {
        (self.rel_tol * budget).max(self.abs_tol)
    }
}

/// How a budget constraint ended up being satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetStatus {
    /// Met with equality (within tolerance).
    Binding,
    /// Not exhausted even at the multiplier floor; holds as `<`.
    Slack,
    /// Zero budget, multiplier pinned at `+∞`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSolution {
    pub multipliers: MultiplierPair,
    pub allocations: Vec<PowerAllocation>,
    /// User-1 and user-2 power: sums for parallel links, sample averages for
    /// fading states.
    pub power_used: [f64; 2],
    pub status: [BudgetStatus; 2],
    /// Number of full allocation passes performed.
    pub evaluations: usize,
}

impl MultiplierSolution {
    /// True if either budget is not `Binding`.
    pub fn degenerate(&self) -> bool {
        self.status.iter().any(|s| *s != BudgetStatus::Binding)
    }
}

pub(crate) struct Root<T> {
    pub lambda: f64,
    pub payload: T,
    pub slack: bool,
}

/// Finds `λ` with `used(λ) = budget` for a non-increasing `used`. `eval`
/// returns the power used together with a payload carried to the caller.
pub(crate) fn bisect_budget<T, F>(
    target: &'static str,
    budget: f64,
    opts: &SolverOptions,
    start: (f64, f64),
    mut eval: F,
) -> Result<Root<T>>
where
    F: FnMut(f64) -> Result<(f64, T)>,
{
    let tol = opts.tolerance(budget);
    let (mut lo, mut hi) = start;
    let mut best: Option<(f64, f64)> = None;
    fn track(best: &mut Option<(f64, f64)>, lambda: f64, residual: f64) {
        if best.is_none_or(|(_, r)| residual.abs() < r.abs()) {
            *best = Some((lambda, residual));
        }
    }

    // Lower end: must overspend.
    loop {
        let (used, payload) = eval(lo)?;
        track(&mut best, lo, used - budget);
        if (used - budget).abs() <= tol {
            return Ok(Root {
                lambda: lo,
                payload,
                slack: false,
            });
        }
        if used > budget {
            break;
        }
        if lo <= opts.floor {
            return Ok(Root {
                lambda: lo,
                payload,
                slack: true,
            });
        }
        hi = hi.min(lo);
        lo = (lo * 1e-3).max(opts.floor);
    }

    // Upper end: must underspend.
    loop {
        let (used, payload) = eval(hi)?;
        track(&mut best, hi, used - budget);
        if (used - budget).abs() <= tol {
            return Ok(Root {
                lambda: hi,
                payload,
                slack: false,
            });
        }
        if used < budget {
            break;
        }
        lo = lo.max(hi);
        hi *= 1e3;
        if hi > opts.ceiling {
            return Err(Error::NonConvergence {
                target,
                iterations: 0,
                residual: best.map_or(f64::INFINITY, |(_, r)| r.abs() / budget),
            });
        }
    }

    for _ in 0..opts.max_iter {
        let mid = (lo * hi).sqrt();
        let (used, payload) = eval(mid)?;
        let residual = used - budget;
        track(&mut best, mid, residual);
        if residual.abs() <= tol {
            return Ok(Root {
                lambda: mid,
                payload,
                slack: false,
            });
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    Err(Error::NonConvergence {
        target,
        iterations: opts.max_iter,
        residual: best.map_or(f64::INFINITY, |(_, r)| r.abs() / budget),
    })
}

/// Runs the nested search against a `totals(λ) -> [user1, user2]` model.
pub(crate) fn solve_pair<F>(
    budgets: [f64; 2],
    opts: &SolverOptions,
    totals: F,
) -> Result<(MultiplierPair, [f64; 2], [BudgetStatus; 2], usize)>
where
    F: Fn(MultiplierPair) -> Result<[f64; 2]>,
{
    let [p1, p2] = budgets;
    let mut evaluations = 0usize;
    if p1 == 0.0 && p2 == 0.0 {
        let m = MultiplierPair::new(f64::INFINITY, f64::INFINITY);
        return Ok((m, [0.0, 0.0], [BudgetStatus::Zero, BudgetStatus::Zero], 0));
    }

    // Warm start for the inner search: previous λ2.
    let last_lambda2 = std::cell::Cell::new(None::<f64>);
    let mut inner = |lambda1: f64| -> Result<([f64; 2], f64, bool)> {
        if p2 == 0.0 {
            evaluations += 1;
            return Ok((
                totals(MultiplierPair::new(lambda1, f64::INFINITY))?,
                f64::INFINITY,
                false,
            ));
        }
        let start = match last_lambda2.get() {
            Some(l) => (l / 4.0, l * 4.0),
            None => opts.bracket,
        };
        let root = bisect_budget("lambda2", p2, opts, start, |lambda2| {
            evaluations += 1;
            let t = totals(MultiplierPair::new(lambda1, lambda2))?;
            Ok((t[1], t))
        })?;
        last_lambda2.set(Some(root.lambda));
        Ok((root.payload, root.lambda, root.slack))
    };

    let (lambda1, (used, lambda2, slack2), slack1) = if p1 == 0.0 {
        (f64::INFINITY, inner(f64::INFINITY)?, false)
    } else {
        let root = bisect_budget("lambda1", p1, opts, opts.bracket, |lambda1| {
            let r = inner(lambda1)?;
            Ok((r.0[0], r))
        })?;
        (root.lambda, root.payload, root.slack)
    };

    let status_of = |budget: f64, slack: bool| {
        if budget == 0.0 {
            BudgetStatus::Zero
        } else if slack {
            BudgetStatus::Slack
        } else {
            BudgetStatus::Binding
        }
    };
    Ok((
        MultiplierPair::new(lambda1, lambda2),
        used,
        [status_of(p1, slack1), status_of(p2, slack2)],
        evaluations,
    ))
}

fn check_budget(name: &'static str, v: f64) -> Result<()> {
    crate::error::check_finite_nonneg(name, v)
}

/// Multipliers meeting both budgets of a parallel instance, with the
/// induced allocation.
pub fn solve_multipliers(inst: &ParallelInstance, gamma1: f64) -> Result<MultiplierSolution> {
    solve_multipliers_with(inst, gamma1, &SolverOptions::default())
}

pub fn solve_multipliers_with(
    inst: &ParallelInstance,
    gamma1: f64,
    opts: &SolverOptions,
) -> Result<MultiplierSolution> {
    check_gamma(gamma1)?;
    let allocate = |m: MultiplierPair| -> Result<Vec<PowerAllocation>> {
        inst.subchannels()
            .iter()
            .map(|s| allocate_subchannel(s, gamma1, &m))
            .collect()
    };
    let totals = |m: MultiplierPair| -> Result<[f64; 2]> {
        let mut t = [0.0, 0.0];
        for s in inst.subchannels() {
            let p = allocate_subchannel(s, gamma1, &m)?;
            t[0] += p.user1();
            t[1] += p.user2;
        }
        Ok(t)
    };
    let (multipliers, power_used, status, evaluations) =
        solve_pair([inst.p1(), inst.p2()], opts, totals)?;
    Ok(MultiplierSolution {
        multipliers,
        allocations: allocate(multipliers)?,
        power_used,
        status,
        evaluations,
    })
}

/// Sample averages `(1/N)Σ(a+b)` and `(1/N)Σp2` under a fading rule.
pub(crate) fn empirical_totals(
    exec: Execution,
    states: &[FadingState],
    gamma1: f64,
    rule: FadingRule,
    m: MultiplierPair,
) -> Result<[f64; 2]> {
    let sums = par::fold_chunks(
        exec,
        states,
        Ok([0.0, 0.0]),
        |chunk| {
            let mut t = [0.0, 0.0];
            for s in chunk {
                let p = rule.allocate(s, gamma1, &m)?;
                t[0] += p.user1();
                t[1] += p.user2;
            }
            Ok(t)
        },
        |acc: Result<[f64; 2]>, part: Result<[f64; 2]>| {
            let (a, b) = (acc?, part?);
            Ok([a[0] + b[0], a[1] + b[1]])
        },
    )?;
    let n = states.len() as f64;
    Ok([sums[0] / n, sums[1] / n])
}

/// Multipliers meeting the sample-average budgets over `states`.
pub fn solve_multipliers_empirical(
    states: &[FadingState],
    gamma1: f64,
    p1: f64,
    p2: f64,
    rule: FadingRule,
) -> Result<MultiplierSolution> {
    solve_multipliers_empirical_with(
        Execution::default(),
        states,
        gamma1,
        p1,
        p2,
        rule,
        &SolverOptions::default(),
    )
}

pub fn solve_multipliers_empirical_with(
    exec: Execution,
    states: &[FadingState],
    gamma1: f64,
    p1: f64,
    p2: f64,
    rule: FadingRule,
    opts: &SolverOptions,
) -> Result<MultiplierSolution> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    check_gamma(gamma1)?;
    check_budget("p1", p1)?;
    check_budget("p2", p2)?;
    let (multipliers, power_used, status, evaluations) = solve_pair([p1, p2], opts, |m| {
        empirical_totals(exec, states, gamma1, rule, m)
    })?;
    let allocations = par::map(exec, states, |s| rule.allocate(s, gamma1, &multipliers))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiplierSolution {
        multipliers,
        allocations,
        power_used,
        status,
        evaluations,
    })
}

//! The `γ1 → ∞` end of the boundary: maximal confidential rate, and the
//! largest common rate compatible with it.
//!
//! `R1` is strictly increasing in `b` on every secure link, so the limit
//! point spends all of `P1` on confidential power (secrecy water-filling on
//! the marginal `t2` with `γ1 = 1`) and lets user 2 water-fill the common
//! message over the residual noise `ν + b` (`ν + b|h1|²` for fading).
//! Without a secure link, or with `P1 = 0`, `R1 ≡ 0` and the limit is the
//! `γ1 = 0` point.

use std::f64::consts::LN_2;

use super::solver::{bisect_budget, BudgetStatus, MultiplierSolution, SolverOptions};
use super::{secrecy_root, FadingRule, MultiplierPair};
use crate::channel::{FadingState, ParallelInstance, PowerAllocation, SetLabel};
use crate::error::{check_finite_nonneg, Error, Result};
use crate::par::{self, Execution};

fn status(budget: f64) -> BudgetStatus {
    if budget == 0.0 {
        BudgetStatus::Zero
    } else {
        BudgetStatus::Binding
    }
}

pub fn max_secrecy_endpoint_parallel(
    inst: &ParallelInstance,
    opts: &SolverOptions,
) -> Result<MultiplierSolution> {
    let subs = inst.subchannels();
    if inst.p1() == 0.0 || subs.iter().all(|s| s.classify() == SetLabel::CommonOnly) {
        return super::solve_multipliers_with(inst, 0.0, opts);
    }
    let secrecy = |lambda: f64| -> Vec<f64> {
        subs.iter()
            .map(|s| match s.classify() {
                SetLabel::Secure => secrecy_root(s.nu(), s.mu(), 1.0, lambda, 0.5).max(0.0),
                SetLabel::CommonOnly => 0.0,
            })
            .collect()
    };
    let mut evaluations = 0;
    let stage1 = bisect_budget("lambda1", inst.p1(), opts, opts.bracket, |lambda| {
        evaluations += 1;
        let b = secrecy(lambda);
        Ok((b.iter().sum(), b))
    })?;
    let b = stage1.payload;
    let noise: Vec<f64> = subs.iter().zip(&b).map(|(s, bj)| s.nu() + bj).collect();
    let fill = |lambda2: f64| -> Vec<f64> {
        noise
            .iter()
            .map(|n| (0.5 / (lambda2 * LN_2) - n).max(0.0))
            .collect()
    };
    let (lambda2, p2) = if inst.p2() == 0.0 {
        (f64::INFINITY, vec![0.0; subs.len()])
    } else {
        let root = bisect_budget("lambda2", inst.p2(), opts, opts.bracket, |l2| {
            evaluations += 1;
            let p = fill(l2);
            Ok((p.iter().sum(), p))
        })?;
        (root.lambda, root.payload)
    };
    let allocations: Vec<PowerAllocation> = b
        .iter()
        .zip(&p2)
        .map(|(&bj, &pj)| PowerAllocation::new(0.0, bj, pj))
        .collect();
    Ok(MultiplierSolution {
        multipliers: MultiplierPair::new(stage1.lambda, lambda2),
        power_used: [b.iter().sum(), p2.iter().sum()],
        allocations,
        status: [BudgetStatus::Binding, status(inst.p2())],
        evaluations,
    })
}

#[inline]
fn state_secrecy(s: &FadingState, lambda: f64) -> f64 {
    match s.classify() {
        SetLabel::Secure => {
            let mu_eff = if s.g1sq() == 0.0 {
                f64::INFINITY
            } else {
                s.mu() / s.g1sq()
            };
            secrecy_root(s.nu() / s.h1sq(), mu_eff, 1.0, lambda, 1.0).max(0.0)
        }
        SetLabel::CommonOnly => 0.0,
    }
}

#[inline]
fn state_fill(s: &FadingState, b: f64, lambda2: f64) -> f64 {
    if s.h2sq() == 0.0 || lambda2.is_infinite() {
        0.0
    } else {
        (1.0 / (lambda2 * LN_2) - (s.nu() + b * s.h1sq()) / s.h2sq()).max(0.0)
    }
}

fn mean_over<F>(exec: Execution, states: &[FadingState], f: F) -> f64
where
    F: Fn(&FadingState) -> f64 + Sync + Send,
{
    let sum = par::fold_chunks(
        exec,
        states,
        0.0,
        |chunk| chunk.iter().map(&f).sum::<f64>(),
        |a, b| a + b,
    );
    sum / states.len() as f64
}

pub fn max_secrecy_endpoint_empirical(
    exec: Execution,
    states: &[FadingState],
    p1: f64,
    p2: f64,
    opts: &SolverOptions,
) -> Result<MultiplierSolution> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    check_finite_nonneg("p1", p1)?;
    check_finite_nonneg("p2", p2)?;
    if p1 == 0.0 || states.iter().all(|s| s.classify() == SetLabel::CommonOnly) {
        // b ≡ 0 at γ1 = 0 under either rule.
        return super::solve_multipliers_empirical_with(
            exec,
            states,
            0.0,
            p1,
            p2,
            FadingRule::Consistent,
            opts,
        );
    }
    let mut evaluations = 0;
    let stage1 = bisect_budget("lambda1", p1, opts, opts.bracket, |lambda| {
        evaluations += 1;
        Ok((mean_over(exec, states, |s| state_secrecy(s, lambda)), ()))
    })?;
    let lambda1 = stage1.lambda;
    let lambda2 = if p2 == 0.0 {
        f64::INFINITY
    } else {
        bisect_budget("lambda2", p2, opts, opts.bracket, |l2| {
            evaluations += 1;
            let used = mean_over(exec, states, |s| {
                state_fill(s, state_secrecy(s, lambda1), l2)
            });
            Ok((used, ()))
        })?
        .lambda
    };
    let allocations: Vec<PowerAllocation> = par::map(exec, states, |s| {
        let b = state_secrecy(s, lambda1);
        PowerAllocation::new(0.0, b, state_fill(s, b, lambda2))
    });
    let n = states.len() as f64;
    let power_used = allocations.iter().fold([0.0, 0.0], |t, p| {
        [t[0] + p.user1() / n, t[1] + p.user2 / n]
    });
    Ok(MultiplierSolution {
        multipliers: MultiplierPair::new(lambda1, lambda2),
        allocations,
        power_used,
        status: [BudgetStatus::Binding, status(p2)],
        evaluations,
    })
}

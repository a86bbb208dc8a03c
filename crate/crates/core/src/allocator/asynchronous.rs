//! Optimal allocation for asynchronous (non-coherent) common-message
//! transmission.
//!
//! Without the cross term the destination only sees `a + p2`, so the two
//! users' common-message powers are interchangeable. The problem collapses
//! to one transmitter with budget `P1 + P2` whose confidential power is
//! additionally capped at `P1`. Its Lagrangian has the same shape as the
//! synchronous one: a common price `c` on all power and a surcharge `κ >= 0`
//! on confidential power, so [`secure_kernel`] solves it exactly. The
//! combined common power is then split between the users, user 2 first.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::solver::{bisect_budget, SolverOptions};
use super::{secure_kernel, KernelInput};
use crate::channel::{
    check_gamma, rate_pair_parallel_async, ParallelInstance, PowerAllocation, RatePair, SetLabel,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncSolution {
    /// Price on every unit of power.
    pub common_price: f64,
    /// Extra price on confidential power; 0 when the `P1` cap is slack.
    pub confidential_surcharge: f64,
    pub allocations: Vec<PowerAllocation>,
    pub rates: RatePair,
    pub power_used: [f64; 2],
}

/// `(received common power, confidential power)` per link.
fn per_link(
    inst: &ParallelInstance,
    gamma1: f64,
    price: f64,
    surcharge: f64,
) -> Result<Vec<(f64, f64)>> {
    inst.subchannels()
        .iter()
        .map(|s| match s.classify() {
            SetLabel::CommonOnly => Ok(((0.5 / (price * LN_2) - s.nu()).max(0.0), 0.0)),
            SetLabel::Secure => {
                let out = secure_kernel(KernelInput {
                    nu: s.nu(),
                    mu: s.mu(),
                    gamma1,
                    common_price: price,
                    price_gap: surcharge,
                    log_scale: 0.5,
                })?;
                Ok((out.common, out.confidential))
            }
        })
        .collect()
}

fn sums(links: &[(f64, f64)]) -> (f64, f64) {
    links
        .iter()
        .fold((0.0, 0.0), |(x, b), (xi, bi)| (x + xi, b + bi))
}

/// Boundary point of the asynchronous region for weight `gamma1`.
pub fn solve_async(
    inst: &ParallelInstance,
    gamma1: f64,
    opts: &SolverOptions,
) -> Result<AsyncSolution> {
    check_gamma(gamma1)?;
    let (p1, p2) = (inst.p1(), inst.p2());
    let total = p1 + p2;
    if total == 0.0 {
        return Ok(AsyncSolution {
            common_price: f64::INFINITY,
            confidential_surcharge: 0.0,
            allocations: vec![PowerAllocation::ZERO; inst.len()],
            rates: RatePair::ZERO,
            power_used: [0.0, 0.0],
        });
    }

    let links_at = |price: f64| -> Result<(Vec<(f64, f64)>, f64)> {
        if p1 == 0.0 {
            return Ok((per_link(inst, gamma1, price, f64::INFINITY)?, f64::INFINITY));
        }
        let free = per_link(inst, gamma1, price, 0.0)?;
        if sums(&free).1 <= p1 {
            return Ok((free, 0.0));
        }
        let root = bisect_budget("surcharge", p1, opts, opts.bracket, |kappa| {
            let links = per_link(inst, gamma1, price, kappa)?;
            Ok((sums(&links).1, links))
        })?;
        Ok((root.payload, root.lambda))
    };

    let root = bisect_budget("price", total, opts, opts.bracket, |price| {
        let (links, kappa) = links_at(price)?;
        let (x, b) = sums(&links);
        Ok((x + b, (links, kappa)))
    })?;
    let (links, kappa) = root.payload;

    let mut remaining = p2;
    let allocations: Vec<PowerAllocation> = links
        .iter()
        .map(|&(x, b)| {
            let u2 = x.min(remaining);
            remaining -= u2;
            PowerAllocation::new(x - u2, b, u2)
        })
        .collect();
    let rates = rate_pair_parallel_async(inst, &allocations)?;
    let power_used = allocations
        .iter()
        .fold([0.0, 0.0], |t, p| [t[0] + p.user1(), t[1] + p.user2]);
    Ok(AsyncSolution {
        common_price: root.lambda,
        confidential_surcharge: kappa,
        allocations,
        rates,
        power_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::solve_multipliers;
    use crate::channel::rate_pair_parallel;

    #[test]
    fn budgets_respected() {
        let inst =
            ParallelInstance::from_noise(&[1.0, 2.0, 5.0], &[5.0, 3.0, 1.0], 6.0, 4.0).unwrap();
        for g in [0.0, 1.0, 3.0, 20.0] {
            let sol = solve_async(&inst, g, &SolverOptions::default()).unwrap();
            assert!(sol.power_used[0] <= 6.0 * (1.0 + 1e-6));
            assert!(sol.power_used[1] <= 4.0 * (1.0 + 1e-6));
            assert!((sol.power_used[0] + sol.power_used[1] - 10.0).abs() < 1e-5);
        }
    }

    #[test]
    fn synchronous_dominates_in_weighted_objective() {
        let inst =
            ParallelInstance::from_noise(&[1.0, 2.0, 5.0], &[5.0, 3.0, 1.0], 6.0, 4.0).unwrap();
        for g in [0.0, 0.5, 2.0, 8.0] {
            let asy = solve_async(&inst, g, &SolverOptions::default()).unwrap();
            let syn = solve_multipliers(&inst, g).unwrap();
            let rs = rate_pair_parallel(&inst, &syn.allocations).unwrap();
            assert!(rs.r0 + g * rs.r1 >= asy.rates.r0 + g * asy.rates.r1 - 1e-9);
        }
    }

    #[test]
    fn zero_user2_budget_matches_synchronous() {
        let inst = ParallelInstance::from_noise(&[1.0, 2.0], &[3.0, 1.0], 5.0, 0.0).unwrap();
        for g in [0.0, 2.0] {
            let asy = solve_async(&inst, g, &SolverOptions::default()).unwrap();
            let syn = solve_multipliers(&inst, g).unwrap();
            let rs = rate_pair_parallel(&inst, &syn.allocations).unwrap();
            assert!((asy.rates.r0 - rs.r0).abs() < 1e-6);
            assert!((asy.rates.r1 - rs.r1).abs() < 1e-6);
        }
    }
}

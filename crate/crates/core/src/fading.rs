//! Seeded Rayleigh fading and sample-average ergodic boundary points.
//!
//! Each fading state is one equally weighted "subchannel"; expectations are
//! replaced by means over `n_samples` i.i.d. states.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::allocator::{
    max_secrecy_endpoint_empirical, solve_multipliers_empirical_with, BudgetStatus, FadingRule,
    MultiplierPair, MultiplierSolution, SolverOptions,
};
use crate::channel::{
    check_gamma, fading_summand, FadingState, PowerAllocation, RatePair, SetLabel,
};
use crate::error::{check_positive, Error, Result};
use crate::oracle::state_lagrangian;
use crate::par::{self, Execution};

/// Name of the sampling generator, recorded in outputs.
pub const GENERATOR: &str = "xoshiro256++ seeded via splitmix64; U = (x >> 11) * 2^-53";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighSpec {
    /// Mean of `|h1|²`.
    pub sigma1: f64,
    /// Mean of `|h2|²`.
    pub sigma2: f64,
    /// Mean of `|g1|²`.
    pub sigma3: f64,
    pub nu: f64,
    pub mu: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl RayleighSpec {
    pub fn validate(&self) -> Result<()> {
        check_positive("sigma1", self.sigma1)?;
        check_positive("sigma2", self.sigma2)?;
        check_positive("sigma3", self.sigma3)?;
        check_positive("nu", self.nu)?;
        check_positive("mu", self.mu)?;
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter {
                name: "n_samples",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Uniform on `[0, 1)` from the top 53 bits.
#[inline]
pub(crate) fn unit(rng: &mut Xoshiro256PlusPlus) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `|h1|²`, `|h2|²`, `|g1|²` per state, in that order, by inverse CDF.
pub fn sample_states(spec: &RayleighSpec) -> Result<Vec<FadingState>> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let mut exp = |mean: f64| -mean * (-unit(&mut rng)).ln_1p();
    (0..spec.n_samples)
        .map(|_| {
            let h1 = exp(spec.sigma1);
            let h2 = exp(spec.sigma2);
            let g1 = exp(spec.sigma3);
            FadingState::new(h1, h2, g1, spec.nu, spec.mu)
        })
        .collect()
}

/// Fraction of states in the secure set.
pub fn secure_fraction(states: &[FadingState]) -> f64 {
    let n = states
        .iter()
        .filter(|s| s.classify() == SetLabel::Secure)
        .count();
    n as f64 / states.len().max(1) as f64
}

/// Sample means of the per-state rates and their standard errors.
pub fn sample_average_rates(
    exec: Execution,
    states: &[FadingState],
    allocations: &[PowerAllocation],
) -> Result<(RatePair, RatePair)> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    if states.len() != allocations.len() {
        return Err(Error::LengthMismatch {
            expected: states.len(),
            got: allocations.len(),
        });
    }
    let pairs: Vec<(FadingState, PowerAllocation)> = states
        .iter()
        .copied()
        .zip(allocations.iter().copied())
        .collect();
    let n = states.len() as f64;
    let sum = par::fold_chunks(
        exec,
        &pairs,
        RatePair::ZERO,
        |c| {
            c.iter()
                .fold(RatePair::ZERO, |acc, (s, p)| acc + fading_summand(s, p))
        },
        |a, b| a + b,
    );
    let mean = sum.scale(1.0 / n);
    let sq = par::fold_chunks(
        exec,
        &pairs,
        [0.0, 0.0],
        |c| {
            c.iter().fold([0.0, 0.0], |acc, (s, p)| {
                let r = fading_summand(s, p);
                let (d0, d1) = (r.r0 - mean.r0, r.r1 - mean.r1);
                [acc[0] + d0 * d0, acc[1] + d1 * d1]
            })
        },
        |a, b| [a[0] + b[0], a[1] + b[1]],
    );
    let stderr = if states.len() > 1 {
        let k = 1.0 / ((n - 1.0) * n);
        RatePair::new((sq[0] * k).sqrt(), (sq[1] * k).sqrt())
    } else {
        RatePair::ZERO
    };
    Ok((mean, stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Weight on `R1`; `+∞` marks the maximal-secrecy endpoint.
    pub gamma1: f64,
    pub rates: RatePair,
    /// Monte-Carlo standard errors of `rates`.
    pub stderr: RatePair,
    pub multipliers: MultiplierPair,
    pub power_used: [f64; 2],
    pub status: [BudgetStatus; 2],
}

/// Boundary point for weight `gamma1` over a fixed set of states.
pub fn boundary_point(
    exec: Execution,
    states: &[FadingState],
    gamma1: f64,
    budgets: [f64; 2],
    rule: FadingRule,
    opts: &SolverOptions,
) -> Result<BoundaryPoint> {
    let sol: MultiplierSolution = if gamma1 == f64::INFINITY {
        max_secrecy_endpoint_empirical(exec, states, budgets[0], budgets[1], opts)?
    } else {
        check_gamma(gamma1)?;
        solve_multipliers_empirical_with(exec, states, gamma1, budgets[0], budgets[1], rule, opts)?
    };
    let (rates, stderr) = sample_average_rates(exec, states, &sol.allocations)?;
    Ok(BoundaryPoint {
        gamma1,
        rates,
        stderr,
        multipliers: sol.multipliers,
        power_used: sol.power_used,
        status: sol.status,
    })
}

/// Samples `spec` and returns the boundary point for `gamma1`.
pub fn ergodic_boundary_point(
    spec: &RayleighSpec,
    gamma1: f64,
    p1: f64,
    p2: f64,
) -> Result<BoundaryPoint> {
    let states = sample_states(spec)?;
    boundary_point(
        Execution::default(),
        &states,
        gamma1,
        [p1, p2],
        FadingRule::default(),
        &SolverOptions::default(),
    )
}

/// One boundary point per weight, all over the same states.
pub fn ergodic_sweep(
    exec: Execution,
    states: &[FadingState],
    gammas: &[f64],
    budgets: [f64; 2],
    rule: FadingRule,
    opts: &SolverOptions,
) -> Result<Vec<BoundaryPoint>> {
    gammas
        .iter()
        .map(|&g| boundary_point(exec, states, g, budgets, rule, opts))
        .collect()
}

/// How far the literal fading closed form falls short of the consistent one
/// on the per-state Lagrangian at fixed multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleDiscrepancy {
    pub gamma1: f64,
    /// States whose literal Lagrangian is lower by more than `tolerance`.
    pub states_differing: usize,
    pub fraction_differing: f64,
    pub max_shortfall: f64,
    pub mean_shortfall: f64,
    pub tolerance: f64,
}

pub fn rule_discrepancy(
    exec: Execution,
    states: &[FadingState],
    gamma1: f64,
    mult: &MultiplierPair,
    tolerance: f64,
) -> Result<RuleDiscrepancy> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    let gaps = par::map(exec, states, |s| -> Result<f64> {
        let lit = FadingRule::Literal.allocate(s, gamma1, mult)?;
        let con = FadingRule::Consistent.allocate(s, gamma1, mult)?;
        Ok(state_lagrangian(s, gamma1, mult, &con) - state_lagrangian(s, gamma1, mult, &lit))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let differing = gaps.iter().filter(|&&g| g > tolerance).count();
    Ok(RuleDiscrepancy {
        gamma1,
        states_differing: differing,
        fraction_differing: differing as f64 / states.len() as f64,
        max_shortfall: gaps.iter().copied().fold(0.0, f64::max),
        mean_shortfall: gaps.iter().sum::<f64>() / states.len() as f64,
        tolerance,
    })
}

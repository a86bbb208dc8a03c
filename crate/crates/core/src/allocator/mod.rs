//! Closed-form optimal power allocation for given Lagrange multipliers.
//!
//! For fixed multipliers the per-link Lagrangian of `R0 + γ1·R1` splits into
//! a common-message water-filling term and a confidential term. Both are
//! handled by one kernel, [`secure_kernel`], parameterised by
//!
//! * the *common price*: cost of one unit of received common-message power
//!   when user 1 and user 2 beamform in the cost-optimal ratio,
//! * the *price gap*: how much dearer one unit of confidential power is.
//!
//! For a parallel link the common price is `λ1λ2/(λ1+λ2)` and the gap is
//! `λ1²/(λ1+λ2)`, which reproduces the published closed form term by term
//! (`s1`, `s2`, `φ`, `ω`).
//!
//! Multipliers may be `+∞`: that is the limit in which the corresponding
//! user's budget is zero and its allocation vanishes identically.

mod asynchronous;
mod endpoint;
mod solver;

pub use asynchronous::{solve_async, AsyncSolution};
pub use endpoint::{max_secrecy_endpoint_empirical, max_secrecy_endpoint_parallel};
pub use solver::{
    solve_multipliers, solve_multipliers_empirical, solve_multipliers_empirical_with,
    solve_multipliers_with, BudgetStatus, MultiplierSolution, SolverOptions,
};

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{check_gamma, FadingState, PowerAllocation, SetLabel, Subchannel};
use crate::error::{Error, Result};

/// Lagrange multipliers on the user-1 and user-2 sum-power constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl MultiplierPair {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    /// Both multipliers must be `> 0`; `+∞` is accepted.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("multiplier must be > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// `λ1/λ2`.
    pub fn beta(&self) -> f64 {
        self.lambda1 / self.lambda2
    }

    /// `λ1λ2/(λ1+λ2)`, well defined when one multiplier is infinite.
    #[inline]
    pub fn common_price(&self) -> f64 {
        1.0 / (1.0 / self.lambda1 + 1.0 / self.lambda2)
    }

    fn both_infinite(&self) -> bool {
        self.lambda1.is_infinite() && self.lambda2.is_infinite()
    }
}

/// Which closed-form branch produced an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Link outside the secure set: common message only.
    CommonOnly,
    /// Secure link with `ω >=` threshold: no confidential power.
    NoConfidential,
    /// Secure link with `ω <` threshold: confidential power up to `φ`.
    Split,
}

/// Quantities of the closed form, in the units of the link they were
/// computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormIntermediates {
    /// Water level offset.
    pub s1: f64,
    /// Largest root of the confidential marginal; secure links only.
    pub s2: Option<f64>,
    /// Crossing point of the two marginals; `Split` branch only.
    pub phi: Option<f64>,
    pub omega: f64,
    pub beta: f64,
    pub branch: Branch,
}

/// Inputs of the per-link kernel. `mu` may be `+∞` (eavesdropper gain 0).
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelInput {
    pub nu: f64,
    pub mu: f64,
    pub gamma1: f64,
    pub common_price: f64,
    pub price_gap: f64,
    /// 0.5 for real-valued links, 1.0 for complex-valued ones.
    pub log_scale: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelOutput {
    /// Received common-message power, in the link's noise units.
    pub common: f64,
    pub confidential: f64,
    pub s1: f64,
    pub s2: f64,
    pub phi: Option<f64>,
    pub omega: f64,
    pub branch: Branch,
}

/// Right-hand side of the branch test, `(γ1(μ−ν)−μ)/(μν)`.
#[inline]
pub(crate) fn branch_threshold(nu: f64, mu: f64, gamma1: f64) -> f64 {
    if mu.is_infinite() {
        (gamma1 - 1.0) / nu
    } else {
        (gamma1 * (mu - nu) - mu) / (mu * nu)
    }
}

/// Largest root of the confidential marginal, with the `γ1/(λ ln 2)` term
/// scaled by `4·log_scale` (2 for real links).
#[inline]
pub(crate) fn secrecy_root(nu: f64, mu: f64, gamma1: f64, price: f64, log_scale: f64) -> f64 {
    let q = 4.0 * log_scale * gamma1 / (price * LN_2);
    if mu.is_infinite() {
        0.25 * q - nu
    } else {
        let gap = mu - nu;
        0.5 * ((gap * (gap + q)).sqrt() - (mu + nu))
    }
}

/// Nonnegative root of `s² + (μ+ν+1/ω)s + μν − (γ1(μ−ν)−μ)/ω = 0`.
///
/// Evaluated as `2(C−ωμν) / (ω(μ+ν)+1 + √D)`, the cancellation-free form
/// of the usual root after multiplying through by `ω`. At `ω = 0` it
/// reduces to `C = γ1(μ−ν)−μ`.
pub(crate) fn intersection_root(nu: f64, mu: f64, gamma1: f64, omega: f64) -> Result<f64> {
    if mu.is_infinite() {
        return Ok(if omega > 0.0 {
            (gamma1 - 1.0) / omega - nu
        } else {
            f64::INFINITY
        });
    }
    let c = gamma1 * (mu - nu) - mu;
    let lin = omega * (mu + nu) + 1.0;
    let mut disc = lin * lin - 4.0 * omega * (omega * mu * nu - c);
    if disc < 0.0 {
        if disc > -1e-12 {
            disc = 0.0;
        } else {
            return Err(Error::BranchLogic { value: disc });
        }
    }
    Ok(2.0 * (c - omega * mu * nu) / (lin + disc.sqrt()))
}

/// Maximises the per-link Lagrangian on a secure link.
pub(crate) fn secure_kernel(k: KernelInput) -> Result<KernelOutput> {
    let s1 = k.log_scale / (k.common_price * LN_2) - k.nu;
    let secret_price = k.common_price + k.price_gap;
    let s2 = secrecy_root(k.nu, k.mu, k.gamma1, secret_price, k.log_scale);
    let omega = k.price_gap * LN_2 / k.log_scale;
    // Equality takes the no-confidential branch.
    if omega >= branch_threshold(k.nu, k.mu, k.gamma1) {
        return Ok(KernelOutput {
            common: s1.max(0.0),
            confidential: 0.0,
            s1,
            s2,
            phi: None,
            omega,
            branch: Branch::NoConfidential,
        });
    }
    let phi = intersection_root(k.nu, k.mu, k.gamma1, omega)?;
    Ok(KernelOutput {
        common: (s1 - phi).max(0.0),
        confidential: s2.min(phi).max(0.0),
        s1,
        s2,
        phi: Some(phi),
        omega,
        branch: Branch::Split,
    })
}

fn check_inputs(gamma1: f64, mult: &MultiplierPair) -> Result<()> {
    check_gamma(gamma1)?;
    mult.validate()
}

/// Closed-form optimal allocation on one parallel link, with intermediates.
pub fn allocate_subchannel_detailed(
    sub: &Subchannel,
    gamma1: f64,
    mult: &MultiplierPair,
) -> Result<(PowerAllocation, ClosedFormIntermediates)> {
    check_inputs(gamma1, mult)?;
    let beta = mult.beta();
    if mult.both_infinite() {
        let im = ClosedFormIntermediates {
            s1: -sub.nu(),
            s2: None,
            phi: None,
            omega: f64::INFINITY,
            beta,
            branch: Branch::CommonOnly,
        };
        return Ok((PowerAllocation::ZERO, im));
    }
    let c = mult.common_price();
    // λ2²/(λ1+λ2)² and λ1²/(λ1+λ2)²
    let coef_a = (c / mult.lambda1).powi(2);
    let coef_p2 = (c / mult.lambda2).powi(2);
    let gap = mult.lambda1 * (c / mult.lambda2);

    let (received, b, im) = match sub.classify() {
        SetLabel::CommonOnly => {
            let s1 = 0.5 / (c * LN_2) - sub.nu();
            let im = ClosedFormIntermediates {
                s1,
                s2: None,
                phi: None,
                omega: 2.0 * LN_2 * gap,
                beta,
                branch: Branch::CommonOnly,
            };
            (s1.max(0.0), 0.0, im)
        }
        SetLabel::Secure => {
            let out = secure_kernel(KernelInput {
                nu: sub.nu(),
                mu: sub.mu(),
                gamma1,
                common_price: c,
                price_gap: gap,
                log_scale: 0.5,
            })?;
            let im = ClosedFormIntermediates {
                s1: out.s1,
                s2: Some(out.s2),
                phi: out.phi,
                omega: out.omega,
                beta,
                branch: out.branch,
            };
            (out.common, out.confidential, im)
        }
    };
    let alloc = PowerAllocation::new(coef_a * received, b, coef_p2 * received);
    Ok((alloc, im))
}

/// Closed-form optimal allocation `(a, b, p2)` on one parallel link.
pub fn allocate_subchannel(
    sub: &Subchannel,
    gamma1: f64,
    mult: &MultiplierPair,
) -> Result<PowerAllocation> {
    allocate_subchannel_detailed(sub, gamma1, mult).map(|(a, _)| a)
}

/// Selects the fading closed form.
///
/// `Literal` transcribes the published fading expressions term by term.
/// Two of its terms do not follow from the complex-valued rates: `s1` is
/// measured in received power while `φ` uses the noise referred to user 1's
/// transmitter (`ν/|h1|²`, `μ/|g1|²`), so `s1 − φ` mixes units when
/// `|h1|² ≠ 1`; and `s2` carries the real-valued `2γ1` factor where the
/// complex rate gives `4γ1`. `Consistent` re-derives the allocation from the
/// fading Lagrangian with the same kernel as the parallel case. The two
/// coincide whenever the `Split` branch is not taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingRule {
    Literal,
    #[default]
    Consistent,
}

impl FadingRule {
    pub fn allocate(
        self,
        state: &FadingState,
        gamma1: f64,
        mult: &MultiplierPair,
    ) -> Result<PowerAllocation> {
        match self {
            FadingRule::Literal => allocate_fading_state(state, gamma1, mult),
            FadingRule::Consistent => allocate_fading_state_consistent(state, gamma1, mult),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FadingRule::Literal => "literal",
            FadingRule::Consistent => "consistent",
        }
    }
}

/// `|h1|²/λ1 + |h2|²/λ2`: received power per unit of cost when both users
/// beamform in the cost-optimal ratio.
#[inline]
fn fading_gain_per_cost(state: &FadingState, mult: &MultiplierPair) -> f64 {
    let t1 = if mult.lambda1.is_infinite() {
        0.0
    } else {
        state.h1sq() / mult.lambda1
    };
    let t2 = if mult.lambda2.is_infinite() {
        0.0
    } else {
        state.h2sq() / mult.lambda2
    };
    t1 + t2
}

/// Published closed form for one fading state, transcribed literally (see
/// [`FadingRule`]).
pub fn allocate_fading_state(
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
) -> Result<PowerAllocation> {
    check_inputs(gamma1, mult)?;
    let g = fading_gain_per_cost(state, mult);
    if g == 0.0 || mult.both_infinite() {
        return Ok(PowerAllocation::ZERO);
    }
    let (h1, h2, g1, nu, mu) = (
        state.h1sq(),
        state.h2sq(),
        state.g1sq(),
        state.nu(),
        state.mu(),
    );
    let (l1, l2) = (mult.lambda1, mult.lambda2);
    // (λ1|h2|²+λ2|h1|²)/(λ1λ2 ln2) − ν
    let s1 = g / LN_2 - nu;
    // λ2²|h1|²/(λ1|h2|²+λ2|h1|²)² and λ1²|h2|²/(λ1|h2|²+λ2|h1|²)²
    let coef_a = h1 / (l1 * g).powi(2);
    let coef_p2 = h2 / (l2 * g).powi(2);
    let water_fill =
        |level: f64| PowerAllocation::new(coef_a * level.max(0.0), 0.0, coef_p2 * level.max(0.0));
    if state.classify() == SetLabel::CommonOnly {
        return Ok(water_fill(s1));
    }
    // ln2·λ1²|h2|²/(λ1|h2|²+λ2|h1|²)
    let omega = if l2.is_infinite() {
        0.0
    } else {
        LN_2 * l1 * (h2 / l2) / g
    };
    let threshold = (gamma1 * (mu * h1 - nu * g1) - mu * h1) / (mu * nu);
    if omega >= threshold {
        return Ok(water_fill(s1));
    }
    let nu_eff = nu / h1;
    let mu_eff = if g1 == 0.0 { f64::INFINITY } else { mu / g1 };
    let s2 = secrecy_root(nu_eff, mu_eff, gamma1, l1, 0.5);
    let phi = intersection_root(nu_eff, mu_eff, gamma1, omega)?;
    let rest = (s1 - phi).max(0.0);
    Ok(PowerAllocation::new(
        coef_a * rest,
        s2.min(phi).max(0.0),
        coef_p2 * rest,
    ))
}

/// Fading allocation re-derived from the complex-valued Lagrangian; the
/// pointwise maximiser that the grid oracle certifies.
pub fn allocate_fading_state_consistent(
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
) -> Result<PowerAllocation> {
    check_inputs(gamma1, mult)?;
    let g = fading_gain_per_cost(state, mult);
    if g == 0.0 || mult.both_infinite() {
        return Ok(PowerAllocation::ZERO);
    }
    let (h1, h2, g1, nu, mu) = (
        state.h1sq(),
        state.h2sq(),
        state.g1sq(),
        state.nu(),
        state.mu(),
    );
    let (l1, l2) = (mult.lambda1, mult.lambda2);
    let (received, b) = match state.classify() {
        SetLabel::CommonOnly => ((g / LN_2 - nu).max(0.0), 0.0),
        SetLabel::Secure => {
            // Work in user-1 transmit units: noise ν/|h1|², μ/|g1|².
            let gap = if l2.is_infinite() {
                0.0
            } else {
                l1 * (h2 / l2) / g
            };
            let out = secure_kernel(KernelInput {
                nu: nu / h1,
                mu: if g1 == 0.0 { f64::INFINITY } else { mu / g1 },
                gamma1,
                common_price: h1 / g,
                price_gap: gap,
                log_scale: 1.0,
            })?;
            (out.common * h1, out.confidential)
        }
    };
    Ok(PowerAllocation::new(
        received * h1 / (l1 * g).powi(2),
        b,
        received * h2 / (l2 * g).powi(2),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{fading_summand, subchannel_summand, Transmission};

    fn sub(nu: f64, mu: f64) -> Subchannel {
        Subchannel::new(nu, mu).unwrap()
    }

    /// Per-link Lagrangian, evaluated straight from the rate formulas.
    fn lagrangian(s: &Subchannel, gamma1: f64, m: &MultiplierPair, p: &PowerAllocation) -> f64 {
        let r = subchannel_summand(s, p, Transmission::Synchronous);
        r.r0 + gamma1 * r.r1 - m.lambda1 * p.user1() - m.lambda2 * p.user2
    }

    #[test]
    fn gamma_zero_never_spends_confidential_power() {
        for (nu, mu) in [(1.0, 4.0), (0.5, 10.0), (2.0, 2.5)] {
            for l in [0.01, 0.1, 1.0] {
                let m = MultiplierPair::new(l, 2.0 * l);
                let (p, im) = allocate_subchannel_detailed(&sub(nu, mu), 0.0, &m).unwrap();
                assert_eq!(p.confidential, 0.0);
                assert_eq!(im.branch, Branch::NoConfidential);
            }
        }
    }

    #[test]
    fn water_level_below_noise_gives_nothing() {
        // 1/(λ ln2) <= ν with λ1 = λ2 = λ
        let nu = 3.0;
        let lambda = 1.0 / (nu * LN_2);
        let m = MultiplierPair::new(lambda, lambda);
        let p = allocate_subchannel(&sub(nu, 1.0), 1.0, &m).unwrap();
        assert_eq!(p, PowerAllocation::ZERO);
        let p = allocate_subchannel(
            &sub(nu, 1.0),
            1.0,
            &MultiplierPair::new(2.0 * lambda, 2.0 * lambda),
        )
        .unwrap();
        assert_eq!(p, PowerAllocation::ZERO);
    }

    #[test]
    fn split_branch_example_quantities() {
        // threshold (2·3−4)/4 = 0.5, ω = 0.5·ln2
        let s = sub(1.0, 4.0);
        let m = MultiplierPair::new(0.5, 0.5);
        let (p, im) = allocate_subchannel_detailed(&s, 2.0, &m).unwrap();
        assert!((im.omega - 0.5 * LN_2).abs() < 1e-15);
        assert_eq!(im.branch, Branch::Split);
        // s1 = (λ1+λ2)/(2λ1λ2 ln2) − ν, s2 and φ from the textbook root formulas
        let s1 = 1.0 / (2.0 * 0.25 * LN_2) - 1.0;
        let s2 = 0.5 * ((3.0f64 * (3.0 + 4.0 / (0.5 * LN_2))).sqrt() - 5.0);
        let w = im.omega;
        let bb = 5.0 + 1.0 / w;
        let phi = -0.5 * bb + 0.5 * (bb * bb - 4.0 * (4.0 - 2.0 / w)).sqrt();
        assert!((im.s1 - s1).abs() < 1e-12);
        assert!((im.s2.unwrap() - s2).abs() < 1e-12);
        assert!((im.phi.unwrap() - phi).abs() < 1e-12);
        assert!((p.confidential - s2.min(phi).max(0.0)).abs() < 1e-12);
        assert!((p.common - 0.25 * (s1 - phi).max(0.0)).abs() < 1e-12);
        assert!((p.user2 - 0.25 * (s1 - phi).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn ratio_law_holds() {
        let m = MultiplierPair::new(0.07, 0.19);
        for s in [sub(1.0, 3.0), sub(2.0, 1.0), sub(0.5, 9.0)] {
            for g in [0.0, 0.5, 2.0, 6.0] {
                let p = allocate_subchannel(&s, g, &m).unwrap();
                if p.common > 0.0 {
                    let lhs = p.user2 * m.lambda2 * m.lambda2;
                    let rhs = p.common * m.lambda1 * m.lambda1;
                    assert!((lhs - rhs).abs() <= 1e-12 * rhs);
                }
            }
        }
    }

    #[test]
    fn branch_boundary_is_continuous() {
        // Solve for γ1 that puts the threshold exactly at ω, then nudge.
        let s = sub(1.0, 4.0);
        let m = MultiplierPair::new(0.3, 0.2);
        let omega = 2.0 * LN_2 * 0.09 / 0.5;
        // (γ(μ−ν) − μ)/(μν) = ω  ⇒  γ = (ωμν + μ)/(μ−ν)
        let g_star = (omega * 4.0 + 4.0) / 3.0;
        let (below, _) = allocate_subchannel_detailed(&s, g_star - 1e-9, &m).unwrap();
        let (above, im) = allocate_subchannel_detailed(&s, g_star + 1e-9, &m).unwrap();
        assert_eq!(im.branch, Branch::Split);
        assert!(im.phi.unwrap().abs() < 1e-8);
        assert!((below.common - above.common).abs() < 1e-8);
        assert!((below.confidential - above.confidential).abs() < 1e-8);
        assert!((below.user2 - above.user2).abs() < 1e-8);
    }

    #[test]
    fn closed_form_beats_local_perturbations() {
        let m = MultiplierPair::new(0.11, 0.23);
        for s in [sub(1.0, 4.0), sub(0.7, 1.5), sub(3.0, 1.0)] {
            for g in [0.5, 1.5, 3.0, 10.0] {
                let p = allocate_subchannel(&s, g, &m).unwrap();
                let base = lagrangian(&s, g, &m, &p);
                for da in [-1e-3, 0.0, 1e-3] {
                    for db in [-1e-3, 0.0, 1e-3] {
                        for dp in [-1e-3, 0.0, 1e-3] {
                            let q = PowerAllocation::new(
                                (p.common + da).max(0.0),
                                if s.classify() == SetLabel::Secure {
                                    (p.confidential + db).max(0.0)
                                } else {
                                    0.0
                                },
                                (p.user2 + dp).max(0.0),
                            );
                            assert!(lagrangian(&s, g, &m, &q) <= base + 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = sub(1.0, 2.0);
        assert!(allocate_subchannel(&s, 1.0, &MultiplierPair::new(0.0, 1.0)).is_err());
        assert!(allocate_subchannel(&s, 1.0, &MultiplierPair::new(1.0, -1.0)).is_err());
        assert!(allocate_subchannel(&s, 1.0, &MultiplierPair::new(f64::NAN, 1.0)).is_err());
        assert!(allocate_subchannel(&s, -0.5, &MultiplierPair::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn infinite_multiplier_silences_that_user() {
        let s = sub(1.0, 4.0);
        let p = allocate_subchannel(&s, 3.0, &MultiplierPair::new(0.2, f64::INFINITY)).unwrap();
        assert_eq!(p.user2, 0.0);
        assert!(p.user1() > 0.0);
        let p = allocate_subchannel(&s, 3.0, &MultiplierPair::new(f64::INFINITY, 0.2)).unwrap();
        assert_eq!(p.user1(), 0.0);
        assert!((p.user2 - (0.5 / (0.2 * LN_2) - 1.0)).abs() < 1e-12);
        let p = allocate_subchannel(&s, 3.0, &MultiplierPair::new(f64::INFINITY, f64::INFINITY))
            .unwrap();
        assert_eq!(p, PowerAllocation::ZERO);
    }

    #[test]
    fn fading_unit_gains_match_complex_parallel_form() {
        // Unit gains outside the secure set: water level 1/(λ' ln2) − ν.
        let state = FadingState::new(1.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(state.classify(), SetLabel::CommonOnly);
        let m = MultiplierPair::new(0.1, 0.3);
        let c = m.common_price();
        let level = 1.0 / (c * LN_2) - 2.0;
        for rule in [FadingRule::Literal, FadingRule::Consistent] {
            let p = rule.allocate(&state, 2.0, &m).unwrap();
            assert!((p.common - (c / 0.1).powi(2) * level).abs() < 1e-12);
            assert!((p.user2 - (c / 0.3).powi(2) * level).abs() < 1e-12);
            assert_eq!(p.confidential, 0.0);
        }
    }

    #[test]
    fn fading_gamma_zero_and_zero_gains() {
        let m = MultiplierPair::new(0.1, 0.1);
        let state = FadingState::new(3.0, 0.5, 0.1, 2.0, 2.0).unwrap();
        for rule in [FadingRule::Literal, FadingRule::Consistent] {
            assert_eq!(rule.allocate(&state, 0.0, &m).unwrap().confidential, 0.0);
        }
        let dead = FadingState::new(0.0, 0.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(
            allocate_fading_state(&dead, 4.0, &m).unwrap(),
            PowerAllocation::ZERO
        );
        assert_eq!(
            allocate_fading_state_consistent(&dead, 4.0, &m).unwrap(),
            PowerAllocation::ZERO
        );
    }

    #[test]
    fn fading_ratio_law() {
        let m = MultiplierPair::new(0.13, 0.05);
        let state = FadingState::new(1.7, 0.6, 0.2, 2.0, 2.0).unwrap();
        for g in [0.5, 2.0, 8.0] {
            let p = allocate_fading_state_consistent(&state, g, &m).unwrap();
            if p.common > 0.0 {
                let lhs = p.user2 * m.lambda2.powi(2) * state.h1sq();
                let rhs = p.common * m.lambda1.powi(2) * state.h2sq();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            }
        }
    }

    #[test]
    fn fading_consistent_beats_literal_on_lagrangian() {
        let m = MultiplierPair::new(0.1, 0.1);
        let state = FadingState::new(1.0, 1.0, 0.25, 2.0, 2.0).unwrap();
        let value = |p: &PowerAllocation| {
            let r = fading_summand(&state, p);
            r.r0 + 4.0 * r.r1 - 0.1 * p.user1() - 0.1 * p.user2
        };
        let lit = allocate_fading_state(&state, 4.0, &m).unwrap();
        let con = allocate_fading_state_consistent(&state, 4.0, &m).unwrap();
        assert!(value(&con) > value(&lit));
        // Unit h1: the only difference is the s2 factor, so b differs.
        assert!(con.confidential > lit.confidential);
    }

    #[test]
    fn zero_eavesdropper_gain_is_finite() {
        let m = MultiplierPair::new(0.1, 0.2);
        let state = FadingState::new(1.5, 0.8, 0.0, 2.0, 2.0).unwrap();
        for rule in [FadingRule::Literal, FadingRule::Consistent] {
            let p = rule.allocate(&state, 6.0, &m).unwrap();
            assert!(p.common.is_finite() && p.confidential.is_finite() && p.user2.is_finite());
            assert!(p.confidential > 0.0);
        }
    }
}

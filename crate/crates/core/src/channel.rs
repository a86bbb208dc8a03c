//! Domain types and rate evaluators.
//!
//! All powers and noise variances are linear. Rates are in bits per channel
//! use: the parallel model is real-valued (`½·log2`), the fading model is
//! complex-valued (`log2`).

use std::f64::consts::LN_2;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{check_finite_nonneg, check_positive, Error, Result};

/// Which part of the region a subchannel (or fading state) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetLabel {
    /// The destination hears user 1 strictly better than user 2 does;
    /// confidential power may be spent here.
    Secure,
    /// Common message only, confidential power is forced to zero.
    CommonOnly,
}

/// One parallel Gaussian link: destination noise `nu`, user-2 noise `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subchannel {
    nu: f64,
    mu: f64,
}

impl Subchannel {
    pub fn new(nu: f64, mu: f64) -> Result<Self> {
        check_positive("nu", nu)?;
        check_positive("mu", mu)?;
        Ok(Self { nu, mu })
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Ties (`nu == mu`) go to [`SetLabel::CommonOnly`].
    #[inline]
    pub fn classify(&self) -> SetLabel {
        if self.nu < self.mu {
            SetLabel::Secure
        } else {
            SetLabel::CommonOnly
        }
    }
}

pub fn classify(sub: &Subchannel) -> SetLabel {
    sub.classify()
}

/// Per-link powers: user 1 splits into `common` (a) and `confidential` (b),
/// user 2 spends `user2` (p2) on the common message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub common: f64,
    pub confidential: f64,
    pub user2: f64,
}

impl PowerAllocation {
    pub const ZERO: Self = Self {
        common: 0.0,
        confidential: 0.0,
        user2: 0.0,
    };

    pub fn new(common: f64, confidential: f64, user2: f64) -> Self {
        Self {
            common,
            confidential,
            user2,
        }
    }

    /// Total power drawn from user 1.
    #[inline]
    pub fn user1(&self) -> f64 {
        self.common + self.confidential
    }

    pub(crate) fn validate(&self, index: usize, label: SetLabel) -> Result<()> {
        for (component, value) in [
            ("common", self.common),
            ("confidential", self.confidential),
            ("user2", self.user2),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NegativePower {
                    index,
                    component,
                    value,
                });
            }
        }
        if label == SetLabel::CommonOnly && self.confidential > 0.0 {
            return Err(Error::SecretPowerOutsideSecureSet {
                index,
                value: self.confidential,
            });
        }
        Ok(())
    }
}

/// `L >= 1` subchannels sharing the two sum-power budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelInstance {
    subchannels: Vec<Subchannel>,
    p1: f64,
    p2: f64,
}

impl ParallelInstance {
    pub fn new(subchannels: Vec<Subchannel>, p1: f64, p2: f64) -> Result<Self> {
        if subchannels.is_empty() {
            return Err(Error::InvalidParameter {
                name: "subchannels",
                reason: "at least one subchannel is required".into(),
            });
        }
        check_finite_nonneg("p1", p1)?;
        check_finite_nonneg("p2", p2)?;
        Ok(Self {
            subchannels,
            p1,
            p2,
        })
    }

    /// Builds an instance from paired noise vectors.
    pub fn from_noise(nu: &[f64], mu: &[f64], p1: f64, p2: f64) -> Result<Self> {
        if nu.len() != mu.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                got: mu.len(),
            });
        }
        let subs = nu
            .iter()
            .zip(mu)
            .map(|(&n, &m)| Subchannel::new(n, m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subs, p1, p2)
    }

    pub fn subchannels(&self) -> &[Subchannel] {
        &self.subchannels
    }

    pub fn len(&self) -> usize {
        self.subchannels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subchannels.is_empty()
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Same subchannels, different budgets.
    pub fn with_budgets(&self, p1: f64, p2: f64) -> Result<Self> {
        Self::new(self.subchannels.clone(), p1, p2)
    }
}

/// One realisation of the fading gains together with the (shared) noise
/// variances. `|g2|²` never enters the rates, so it is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingState {
    h1sq: f64,
    h2sq: f64,
    g1sq: f64,
    nu: f64,
    mu: f64,
}

impl FadingState {
    pub fn new(h1sq: f64, h2sq: f64, g1sq: f64, nu: f64, mu: f64) -> Result<Self> {
        check_finite_nonneg("h1sq", h1sq)?;
        check_finite_nonneg("h2sq", h2sq)?;
        check_finite_nonneg("g1sq", g1sq)?;
        check_positive("nu", nu)?;
        check_positive("mu", mu)?;
        Ok(Self {
            h1sq,
            h2sq,
            g1sq,
            nu,
            mu,
        })
    }

    #[inline]
    pub fn h1sq(&self) -> f64 {
        self.h1sq
    }

    #[inline]
    pub fn h2sq(&self) -> f64 {
        self.h2sq
    }

    #[inline]
    pub fn g1sq(&self) -> f64 {
        self.g1sq
    }

    #[inline]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// In the secure set iff `h1sq/nu > g1sq/mu`; ties go to the complement.
    #[inline]
    pub fn classify(&self) -> SetLabel {
        if self.h1sq / self.nu > self.g1sq / self.mu {
            SetLabel::Secure
        } else {
            SetLabel::CommonOnly
        }
    }
}

/// Common-message rate `r0` and confidential rate `r1`, bits per channel use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r0: f64,
    pub r1: f64,
}

impl RatePair {
    pub const ZERO: Self = Self { r0: 0.0, r1: 0.0 };

    pub fn new(r0: f64, r1: f64) -> Self {
        Self { r0, r1 }
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            r0: self.r0 * k,
            r1: self.r1 * k,
        }
    }
}

impl Add for RatePair {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            r0: self.r0 + rhs.r0,
            r1: self.r1 + rhs.r1,
        }
    }
}

impl AddAssign for RatePair {
    fn add_assign(&mut self, rhs: Self) {
        self.r0 += rhs.r0;
        self.r1 += rhs.r1;
    }
}

/// The boundary-tracing objective `R0 + gamma1 * R1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedObjective {
    gamma1: f64,
}

impl WeightedObjective {
    pub fn new(gamma1: f64) -> Result<Self> {
        check_gamma(gamma1)?;
        Ok(Self { gamma1 })
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn value(&self, rates: RatePair) -> f64 {
        rates.r0 + self.gamma1 * rates.r1
    }
}

pub(crate) fn check_gamma(gamma1: f64) -> Result<()> {
    check_finite_nonneg("gamma1", gamma1)
}

/// Whether the two users' common-message signals combine coherently at the
/// destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transmission {
    Synchronous,
    Asynchronous,
}

#[inline]
fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / LN_2
}

/// Rate summands of a single subchannel. The allocation must already be
/// valid for the subchannel's set.
#[inline]
pub(crate) fn subchannel_summand(
    sub: &Subchannel,
    alloc: &PowerAllocation,
    mode: Transmission,
) -> RatePair {
    let PowerAllocation {
        common: a,
        confidential: b,
        user2: p2,
    } = *alloc;
    let received = match mode {
        Transmission::Synchronous => a + p2 + 2.0 * (a * p2).sqrt(),
        Transmission::Asynchronous => a + p2,
    };
    match sub.classify() {
        SetLabel::Secure => RatePair {
            r0: half_log2_1p(received / (b + sub.nu)),
            r1: half_log2_1p(b / sub.nu) - half_log2_1p(b / sub.mu),
        },
        SetLabel::CommonOnly => RatePair {
            r0: half_log2_1p(received / sub.nu),
            r1: 0.0,
        },
    }
}

/// Validated rate summands of one subchannel.
pub fn subchannel_rates(
    sub: &Subchannel,
    alloc: &PowerAllocation,
    mode: Transmission,
) -> Result<RatePair> {
    alloc.validate(0, sub.classify())?;
    Ok(subchannel_summand(sub, alloc, mode))
}

fn rate_pair_mode(
    inst: &ParallelInstance,
    allocs: &[PowerAllocation],
    mode: Transmission,
) -> Result<RatePair> {
    if allocs.len() != inst.len() {
        return Err(Error::LengthMismatch {
            expected: inst.len(),
            got: allocs.len(),
        });
    }
    let mut total = RatePair::ZERO;
    for (j, (sub, alloc)) in inst.subchannels().iter().zip(allocs).enumerate() {
        alloc.validate(j, sub.classify())?;
        total += subchannel_summand(sub, alloc, mode);
    }
    Ok(total)
}

/// Corner point `(R0, R1)` of the synchronous region for one allocation.
pub fn rate_pair_parallel(inst: &ParallelInstance, allocs: &[PowerAllocation]) -> Result<RatePair> {
    rate_pair_mode(inst, allocs, Transmission::Synchronous)
}

/// Same as [`rate_pair_parallel`] without the coherent-combining cross term.
pub fn rate_pair_parallel_async(
    inst: &ParallelInstance,
    allocs: &[PowerAllocation],
) -> Result<RatePair> {
    rate_pair_mode(inst, allocs, Transmission::Asynchronous)
}

/// Either transmission mode.
pub fn rate_pair(
    inst: &ParallelInstance,
    allocs: &[PowerAllocation],
    mode: Transmission,
) -> Result<RatePair> {
    rate_pair_mode(inst, allocs, mode)
}

#[inline]
pub(crate) fn fading_summand(state: &FadingState, alloc: &PowerAllocation) -> RatePair {
    let PowerAllocation {
        common: a,
        confidential: b,
        user2: p2,
    } = *alloc;
    let amplitude = (a * state.h1sq).sqrt() + (p2 * state.h2sq).sqrt();
    let chi = amplitude * amplitude;
    match state.classify() {
        SetLabel::Secure => RatePair {
            r0: (chi / (b * state.h1sq + state.nu)).ln_1p() / LN_2,
            r1: ((b * state.h1sq / state.nu).ln_1p() - (b * state.g1sq / state.mu).ln_1p()) / LN_2,
        },
        SetLabel::CommonOnly => RatePair {
            r0: (chi / state.nu).ln_1p() / LN_2,
            r1: 0.0,
        },
    }
}

/// Per-state integrand of the ergodic rate expectations.
pub fn rate_contribution_fading(state: &FadingState, alloc: &PowerAllocation) -> Result<RatePair> {
    alloc.validate(0, state.classify())?;
    Ok(fading_summand(state, alloc))
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(linear)`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

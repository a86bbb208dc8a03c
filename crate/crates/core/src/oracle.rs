//! Brute-force certification of the closed forms.
//!
//! [`grid_optimize`] maximises `R0 + γ1·R1` over full-spending budget splits
//! on small instances without using any of the allocator's structure: a
//! table of per-link optima on a budget grid, an exact dynamic programme
//! over links, then a pattern search around the incumbent.
//! [`lagrangian_grid_optimize_state`] does the same for the per-state
//! Lagrangian of the fading problem, and the `kkt_*` functions measure how
//! far an allocation is from stationarity.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::allocator::MultiplierPair;
use crate::channel::{
    check_gamma, fading_summand, rate_pair, subchannel_summand, FadingState, ParallelInstance,
    PowerAllocation, RatePair, SetLabel, Subchannel, Transmission,
};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Largest instance [`grid_optimize`] accepts.
pub const MAX_SUBCHANNELS: usize = 3;

/// Offsets, in steps, of the points tried along each axis of a refinement
/// box.
const OFFSETS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const SHRINK: f64 = 4.0;
/// Re-centerings allowed before the search stops regardless of rounds.
const MAX_MOVES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    /// Each round shrinks the box around the incumbent by 4×.
    pub refinement_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_axis: 64,
            refinement_rounds: 3,
        }
    }
}

impl GridSpec {
    pub fn new(points_per_axis: usize, refinement_rounds: usize) -> Result<Self> {
        let g = Self {
            points_per_axis,
            refinement_rounds,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 {
            return Err(Error::InvalidParameter {
                name: "points_per_axis",
                reason: format!("must be >= 8, got {}", self.points_per_axis),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub allocations: Vec<PowerAllocation>,
    pub rates: RatePair,
    pub objective: f64,
    /// Incumbent objective after the coarse pass and after each shrink.
    pub round_objectives: Vec<f64>,
}

/// Box-constrained pattern search. `eval` returns `None` outside the
/// feasible set. Returns the final point, its value and the value after each
/// shrink (starting with the initial value).
fn pattern_search<F>(
    exec: Execution,
    start: Vec<f64>,
    mut steps: Vec<f64>,
    rounds: usize,
    eval: F,
) -> (Vec<f64>, f64, Vec<f64>)
where
    F: Fn(&[f64]) -> Option<f64> + Sync + Send,
{
    let mut center = start;
    let mut value = eval(&center).unwrap_or(f64::NEG_INFINITY);
    let mut history = vec![value];
    let dim = center.len();
    if dim == 0 {
        history.extend(std::iter::repeat_n(value, rounds));
        return (center, value, history);
    }
    let count = OFFSETS.len().pow(dim as u32);
    let digits = |mut k: usize| -> Vec<usize> {
        (0..dim)
            .map(|_| {
                let d = k % OFFSETS.len();
                k /= OFFSETS.len();
                d
            })
            .collect()
    };
    let point = |center: &[f64], steps: &[f64], k: usize| -> Vec<f64> {
        digits(k)
            .iter()
            .zip(center.iter().zip(steps))
            .map(|(&d, (&c, &h))| c + OFFSETS[d] * h)
            .collect()
    };

    let mut shrinks = 0;
    let mut moves = 0;
    while shrinks < rounds {
        let best = par::argmax(exec, count, |k| eval(&point(&center, &steps, k)));
        let moved = match best {
            Some((k, v)) if v > value => {
                let on_edge = digits(k).iter().any(|&d| d == 0 || d == OFFSETS.len() - 1);
                center = point(&center, &steps, k);
                value = v;
                on_edge
            }
            _ => false,
        };
        if moved && moves < MAX_MOVES {
            moves += 1;
            continue;
        }
        for h in &mut steps {
            *h /= SHRINK;
        }
        shrinks += 1;
        history.push(value);
    }
    (center, value, history)
}

#[inline]
fn link_value(sub: &Subchannel, gamma1: f64, mode: Transmission, a: f64, b: f64, p2: f64) -> f64 {
    let r = subchannel_summand(sub, &PowerAllocation::new(a, b, p2), mode);
    r.r0 + gamma1 * r.r1
}

/// Best `(value, b)` for one link spending `u` of user 1's and `v` of user
/// 2's power.
fn best_split(
    sub: &Subchannel,
    gamma1: f64,
    mode: Transmission,
    u: f64,
    v: f64,
    n: usize,
) -> (f64, f64) {
    let f = |b: f64| link_value(sub, gamma1, mode, u - b, b, v);
    if sub.classify() == SetLabel::CommonOnly || u == 0.0 {
        return (f(0.0), 0.0);
    }
    let mut best = (f(0.0), 0.0);
    let mut width = u / n as f64;
    for k in 1..=n {
        let b = if k == n { u } else { u * k as f64 / n as f64 };
        let val = f(b);
        if val > best.0 {
            best = (val, b);
        }
    }
    // Two zoom levels around the grid incumbent.
    for _ in 0..2 {
        let centre = best.1;
        let sub_steps = 8;
        for k in 1..=2 * sub_steps {
            let b = centre - width + width * k as f64 / sub_steps as f64;
            if b <= 0.0 || b >= u || b == centre {
                continue;
            }
            let val = f(b);
            if val > best.0 {
                best = (val, b);
            }
        }
        width /= sub_steps as f64;
    }
    best
}

struct LinkTable {
    /// `(value, b)` indexed by `i * (n + 1) + m`.
    cells: Vec<(f64, f64)>,
}

/// `best[i][m]` over splits of `(i, m)` grid units among a suffix of links,
/// together with the share taken by its first link.
struct Stage {
    value: Vec<f64>,
    choice: Vec<(usize, usize)>,
}

fn combine(
    exec: Execution,
    n: usize,
    head: &LinkTable,
    tail: Option<&Stage>,
    only_full: bool,
) -> Stage {
    let side = n + 1;
    let cell = |idx: usize| -> (f64, (usize, usize)) {
        let (i, m) = (idx / side, idx % side);
        let Some(tail) = tail else {
            return (head.cells[idx].0, (i, m));
        };
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for i1 in 0..=i {
            for m1 in 0..=m {
                let v = head.cells[i1 * side + m1].0 + tail.value[(i - i1) * side + (m - m1)];
                if v > best.0 {
                    best = (v, (i1, m1));
                }
            }
        }
        best
    };
    let indices: Vec<usize> = if only_full {
        vec![side * side - 1]
    } else {
        (0..side * side).collect()
    };
    let done = par::map(exec, &indices, |&idx| cell(idx));
    let mut value = vec![f64::NEG_INFINITY; side * side];
    let mut choice = vec![(0, 0); side * side];
    for (&idx, (v, c)) in indices.iter().zip(done) {
        value[idx] = v;
        choice[idx] = c;
    }
    Stage { value, choice }
}

/// Brute-force maximiser of `R0 + γ1·R1` for a synchronous instance with at
/// most [`MAX_SUBCHANNELS`] links.
pub fn grid_optimize(
    inst: &ParallelInstance,
    gamma1: f64,
    grid: &GridSpec,
) -> Result<OracleSolution> {
    grid_optimize_mode(
        inst,
        gamma1,
        grid,
        Transmission::Synchronous,
        Execution::default(),
    )
}

pub fn grid_optimize_mode(
    inst: &ParallelInstance,
    gamma1: f64,
    grid: &GridSpec,
    mode: Transmission,
    exec: Execution,
) -> Result<OracleSolution> {
    check_gamma(gamma1)?;
    grid.validate()?;
    let l = inst.len();
    if l > MAX_SUBCHANNELS {
        return Err(Error::TooManySubchannels(l));
    }
    let (p1, p2) = (inst.p1(), inst.p2());
    let subs = inst.subchannels();
    if p1 == 0.0 && p2 == 0.0 {
        return Ok(OracleSolution {
            allocations: vec![PowerAllocation::ZERO; l],
            rates: RatePair::ZERO,
            objective: 0.0,
            round_objectives: vec![0.0; grid.refinement_rounds + 1],
        });
    }

    let n = grid.points_per_axis;
    let side = n + 1;
    let level = |total: f64, i: usize| {
        if i == n {
            total
        } else {
            total * i as f64 / n as f64
        }
    };
    let cells: Vec<usize> = (0..side * side).collect();
    let tables: Vec<LinkTable> = subs
        .iter()
        .map(|sub| LinkTable {
            cells: par::map(exec, &cells, |&idx| {
                best_split(
                    sub,
                    gamma1,
                    mode,
                    level(p1, idx / side),
                    level(p2, idx % side),
                    n,
                )
            }),
        })
        .collect();

    // Stages from the last link backwards; only the first needs (n, n).
    let mut stages: Vec<Stage> = Vec::with_capacity(l);
    for j in (0..l).rev() {
        let stage = combine(exec, n, &tables[j], stages.last(), j == 0 && l > 1);
        stages.push(stage);
    }
    stages.reverse();
    let (mut i, mut m) = (n, n);
    let mut shares = Vec::with_capacity(l);
    for (j, stage) in stages.iter().enumerate() {
        let (ij, mj) = if j + 1 == l {
            (i, m)
        } else {
            stage.choice[i * side + m]
        };
        shares.push((ij, mj, tables[j].cells[ij * side + mj].1));
        i -= ij;
        m -= mj;
    }

    // Continuous coordinates: user-1 shares and user-2 shares of all but
    // the last link, then the confidential fraction of each secure link.
    let secure: Vec<usize> = (0..l)
        .filter(|&j| subs[j].classify() == SetLabel::Secure)
        .collect();
    let mut start = Vec::new();
    let mut steps = Vec::new();
    let mut axes = Vec::new();
    for (j, &(ij, _, _)) in shares.iter().enumerate().take(l - 1) {
        if p1 > 0.0 {
            start.push(level(p1, ij));
            steps.push(p1 / n as f64);
            axes.push(Axis::User1(j));
        }
    }
    for (j, &(_, mj, _)) in shares.iter().enumerate().take(l - 1) {
        if p2 > 0.0 {
            start.push(level(p2, mj));
            steps.push(p2 / n as f64);
            axes.push(Axis::User2(j));
        }
    }
    for &j in &secure {
        if p1 > 0.0 {
            let u = level(p1, shares[j].0);
            start.push(if u > 0.0 {
                (shares[j].2 / u).clamp(0.0, 1.0)
            } else {
                0.0
            });
            steps.push(1.0 / n as f64);
            axes.push(Axis::Fraction(j));
        }
    }
    let mut base = Decoded {
        u: shares.iter().map(|s| level(p1, s.0)).collect(),
        v: shares.iter().map(|s| level(p2, s.1)).collect(),
        t: vec![0.0; l],
    };
    for &j in &secure {
        if base.u[j] > 0.0 {
            base.t[j] = (shares[j].2 / base.u[j]).clamp(0.0, 1.0);
        }
    }
    let decode = |x: &[f64]| -> Option<Vec<PowerAllocation>> {
        let mut d = base.clone();
        for (axis, &val) in axes.iter().zip(x) {
            match *axis {
                Axis::User1(j) => d.u[j] = val,
                Axis::User2(j) => d.v[j] = val,
                Axis::Fraction(j) => d.t[j] = val,
            }
        }
        if l > 1 {
            let rest1: f64 = d.u[..l - 1].iter().sum();
            let rest2: f64 = d.v[..l - 1].iter().sum();
            d.u[l - 1] = p1 - rest1;
            d.v[l - 1] = p2 - rest2;
            for last in [&mut d.u[l - 1], &mut d.v[l - 1]] {
                if *last < 0.0 && *last > -1e-12 * (p1 + p2) {
                    *last = 0.0;
                }
            }
        }
        if d.u.iter().chain(&d.v).any(|&x| x < 0.0)
            || d.t.iter().any(|&t| !(0.0..=1.0).contains(&t))
        {
            return None;
        }
        Some(
            (0..l)
                .map(|j| {
                    let b = d.u[j] * d.t[j];
                    PowerAllocation::new((d.u[j] - b).max(0.0), b, d.v[j])
                })
                .collect(),
        )
    };
    let objective_of = |allocs: &[PowerAllocation]| -> f64 {
        subs.iter()
            .zip(allocs)
            .map(|(s, p)| {
                let r = subchannel_summand(s, p, mode);
                r.r0 + gamma1 * r.r1
            })
            .sum()
    };

    let (x, _, history) = pattern_search(exec, start, steps, grid.refinement_rounds, |x| {
        decode(x).map(|a| objective_of(&a))
    });
    let allocations = decode(&x).expect("incumbent stays feasible");
    let rates = rate_pair(inst, &allocations, mode)?;
    Ok(OracleSolution {
        objective: rates.r0 + gamma1 * rates.r1,
        allocations,
        rates,
        round_objectives: history,
    })
}

#[derive(Clone, Copy)]
enum Axis {
    User1(usize),
    User2(usize),
    Fraction(usize),
}

#[derive(Clone)]
struct Decoded {
    u: Vec<f64>,
    v: Vec<f64>,
    t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateOracleSolution {
    pub allocation: PowerAllocation,
    pub lagrangian: f64,
    pub round_values: Vec<f64>,
}

/// Per-state Lagrangian `R0 + γ1·R1 − λ1(a+b) − λ2·p2` of the fading
/// problem. Infinite multipliers count only when the matching power is
/// positive.
pub fn state_lagrangian(
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
    alloc: &PowerAllocation,
) -> f64 {
    let r = fading_summand(state, alloc);
    let cost = |lambda: f64, p: f64| if p == 0.0 { 0.0 } else { lambda * p };
    r.r0 + gamma1 * r.r1 - cost(mult.lambda1, alloc.user1()) - cost(mult.lambda2, alloc.user2)
}

/// Side of a box `[0, M]³` that contains every maximiser: beyond total
/// power `M` the penalty exceeds any achievable rate.
fn lagrangian_box(state: &FadingState, gamma1: f64, lambda_min: f64) -> f64 {
    let gain = state.h1sq().max(state.h2sq());
    if gain == 0.0 {
        return 0.0;
    }
    let bound = |m: f64| (1.0 + gamma1) * (1.0 + 4.0 * m * gain / state.nu()).log2();
    let mut m = 1.0;
    while lambda_min * m <= bound(m) {
        m *= 2.0;
    }
    m
}

pub fn lagrangian_grid_optimize_state(
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
    grid: &GridSpec,
) -> Result<StateOracleSolution> {
    lagrangian_grid_optimize_state_with(Execution::default(), state, gamma1, mult, grid)
}

pub fn lagrangian_grid_optimize_state_with(
    exec: Execution,
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
    grid: &GridSpec,
) -> Result<StateOracleSolution> {
    check_gamma(gamma1)?;
    mult.validate()?;
    grid.validate()?;
    let lambda_min = mult.lambda1.min(mult.lambda2);
    let side = if lambda_min.is_infinite() {
        0.0
    } else {
        lagrangian_box(state, gamma1, lambda_min)
    };
    // Free coordinates: a and b cost λ1, p2 costs λ2; b only on secure states.
    let mut free = Vec::new();
    if side > 0.0 {
        if mult.lambda1.is_finite() {
            free.push(0);
            if state.classify() == SetLabel::Secure {
                free.push(1);
            }
        }
        if mult.lambda2.is_finite() {
            free.push(2);
        }
    }
    let to_alloc = |x: &[f64]| -> Option<PowerAllocation> {
        let mut p = [0.0; 3];
        for (&axis, &v) in free.iter().zip(x) {
            if !(0.0..=side).contains(&v) {
                return None;
            }
            p[axis] = v;
        }
        Some(PowerAllocation::new(p[0], p[1], p[2]))
    };
    let value = |x: &[f64]| to_alloc(x).map(|p| state_lagrangian(state, gamma1, mult, &p));

    let n = grid.points_per_axis;
    let dim = free.len();
    let per_axis = n + 1;
    let at = |k: usize| -> Vec<f64> {
        let mut k = k;
        (0..dim)
            .map(|_| {
                let i = k % per_axis;
                k /= per_axis;
                if i == n {
                    side
                } else {
                    side * i as f64 / n as f64
                }
            })
            .collect()
    };
    let coarse = if dim == 0 {
        Vec::new()
    } else {
        let (k, _) = par::argmax(exec, per_axis.pow(dim as u32), |k| value(&at(k)))
            .expect("grid is non-empty");
        at(k)
    };
    let steps = vec![side / n as f64; dim];
    let (x, lagrangian, round_values) =
        pattern_search(exec, coarse, steps, grid.refinement_rounds, value);
    Ok(StateOracleSolution {
        allocation: to_alloc(&x).expect("incumbent stays feasible"),
        lagrangian,
        round_values,
    })
}

/// Which first-order condition a residual measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KktKind {
    /// Marginal rate of user 1's common power against `λ1`.
    Common,
    /// Marginal rate of user 2's power against `λ2`.
    User2,
    /// Marginal weighted rate of confidential power against `λ1`.
    Confidential,
    /// Beamforming ratio law, relative.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub index: usize,
    pub kind: KktKind,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Residuals of active (strictly positive) coordinates only.
    pub residuals: Vec<KktResidual>,
}

impl KktReport {
    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn max_of(&self, kind: KktKind) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn first(&self, kind: KktKind) -> Option<&KktResidual> {
        self.residuals.iter().find(|r| r.kind == kind)
    }
}

/// Residuals of one link or state given effective gains. `h1`/`h2` scale
/// the two users' amplitudes, `g1` the eavesdropper; `k` is the log scale.
#[allow(clippy::too_many_arguments)]
fn kkt_entries(
    index: usize,
    label: SetLabel,
    gains: (f64, f64, f64),
    noise: (f64, f64),
    k: f64,
    gamma1: f64,
    mult: &MultiplierPair,
    p: &PowerAllocation,
    out: &mut Vec<KktResidual>,
) {
    let (h1, h2, g1) = gains;
    let (nu, mu) = (noise.0, noise.1);
    let PowerAllocation {
        common: a,
        confidential: b,
        user2: p2,
    } = *p;
    let amp = (a * h1).sqrt() + (p2 * h2).sqrt();
    let chi = amp * amp;
    let interference = nu + b * h1;
    let theta = amp / (interference + chi);
    let mut push = |kind, value: f64| out.push(KktResidual { index, kind, value });
    if a > 0.0 {
        push(
            KktKind::Common,
            (k * theta * h1.sqrt() / (LN_2 * a.sqrt()) - mult.lambda1).abs(),
        );
    }
    if p2 > 0.0 {
        push(
            KktKind::User2,
            (k * theta * h2.sqrt() / (LN_2 * p2.sqrt()) - mult.lambda2).abs(),
        );
    }
    if b > 0.0 && label == SetLabel::Secure {
        let d_r0 = -k * h1 * chi / (LN_2 * interference * (interference + chi));
        let d_r1 = k / LN_2 * (h1 / interference - g1 / (mu + b * g1));
        push(
            KktKind::Confidential,
            (d_r0 + gamma1 * d_r1 - mult.lambda1).abs(),
        );
    }
    if a > 0.0 && p2 > 0.0 {
        let lhs = p2 * mult.lambda2 * mult.lambda2 * h1;
        let rhs = a * mult.lambda1 * mult.lambda1 * h2;
        push(KktKind::Ratio, (lhs - rhs).abs() / lhs.max(rhs));
    }
}

/// First-order residuals of a parallel allocation at the given multipliers.
pub fn kkt_residuals_parallel(
    inst: &ParallelInstance,
    gamma1: f64,
    mult: &MultiplierPair,
    allocs: &[PowerAllocation],
) -> KktReport {
    let mut residuals = Vec::new();
    for (j, (s, p)) in inst.subchannels().iter().zip(allocs).enumerate() {
        kkt_entries(
            j,
            s.classify(),
            (1.0, 1.0, 1.0),
            (s.nu(), s.mu()),
            0.5,
            gamma1,
            mult,
            p,
            &mut residuals,
        );
    }
    KktReport { residuals }
}

/// First-order residuals of one fading-state allocation.
pub fn kkt_residuals_state(
    state: &FadingState,
    gamma1: f64,
    mult: &MultiplierPair,
    alloc: &PowerAllocation,
) -> KktReport {
    let mut residuals = Vec::new();
    kkt_entries(
        0,
        state.classify(),
        (state.h1sq(), state.h2sq(), state.g1sq()),
        (state.nu(), state.mu()),
        1.0,
        gamma1,
        mult,
        alloc,
        &mut residuals,
    );
    KktReport { residuals }
}

/// Reproducible random instances for certification runs: one instance per
/// entry of `sizes`, noises uniform on `noise`, budgets uniform on `budget`.
pub fn random_instances(
    seed: u64,
    sizes: &[usize],
    noise: (f64, f64),
    budget: (f64, f64),
) -> Result<Vec<ParallelInstance>> {
    use rand_core::SeedableRng;
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| lo + (hi - lo) * crate::fading::unit(&mut rng);
    sizes
        .iter()
        .map(|&l| {
            let nu: Vec<f64> = (0..l).map(|_| draw(noise)).collect();
            let mu: Vec<f64> = (0..l).map(|_| draw(noise)).collect();
            let p1 = draw(budget);
            let p2 = draw(budget);
            ParallelInstance::from_noise(&nu, &mu, p1, p2)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{
        allocate_fading_state_consistent, allocate_subchannel, solve_multipliers,
    };
    use crate::channel::rate_pair_parallel;

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instances(5, &[1, 2, 3], (0.5, 10.0), (1.0, 30.0)).unwrap();
        let b = random_instances(5, &[1, 2, 3], (0.5, 10.0), (1.0, 30.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|i| i.len()).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(a.iter().all(|i| (1.0..30.0).contains(&i.p1())));
    }

    #[test]
    fn zero_budgets() {
        let inst = ParallelInstance::from_noise(&[1.0, 2.0], &[2.0, 1.0], 0.0, 0.0).unwrap();
        let sol = grid_optimize(&inst, 1.0, &GridSpec::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.allocations.iter().all(|p| *p == PowerAllocation::ZERO));
    }

    #[test]
    fn single_link_corner() {
        let inst = ParallelInstance::from_noise(&[1.0], &[2.0], 1.0, 1.0).unwrap();
        let sol = grid_optimize(&inst, 0.0, &GridSpec::default()).unwrap();
        assert_eq!(sol.allocations[0], PowerAllocation::new(1.0, 0.0, 1.0));
        assert!((sol.objective - 0.5 * 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_solver_on_one_link() {
        let inst = ParallelInstance::from_noise(&[1.0], &[4.0], 2.0, 2.0).unwrap();
        let oracle = grid_optimize(&inst, 2.0, &GridSpec::default()).unwrap();
        let sol = solve_multipliers(&inst, 2.0).unwrap();
        let r = rate_pair_parallel(&inst, &sol.allocations).unwrap();
        assert!((oracle.objective - (r.r0 + 2.0 * r.r1)).abs() < 1e-3);
        // the solver meets budgets to 1e-7 relative
        assert!(oracle.objective <= r.r0 + 2.0 * r.r1 + 1e-6);
    }

    #[test]
    fn rounds_never_decrease() {
        let inst =
            ParallelInstance::from_noise(&[1.0, 3.0, 0.7], &[4.0, 2.0, 5.0], 7.0, 3.0).unwrap();
        let sol = grid_optimize(&inst, 3.0, &GridSpec::new(16, 4).unwrap()).unwrap();
        assert_eq!(sol.round_objectives.len(), 5);
        assert!(sol.round_objectives.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_large_instances_and_coarse_grids() {
        let inst = ParallelInstance::from_noise(&[1.0; 4], &[2.0; 4], 1.0, 1.0).unwrap();
        assert_eq!(
            grid_optimize(&inst, 1.0, &GridSpec::default()).unwrap_err(),
            Error::TooManySubchannels(4)
        );
        assert!(GridSpec::new(4, 3).is_err());
    }

    #[test]
    fn no_confidential_power_at_low_weight() {
        let inst = ParallelInstance::from_noise(&[1.0, 0.5], &[6.0, 3.0], 4.0, 2.0).unwrap();
        for g in [0.0, 0.5, 1.0] {
            let sol = grid_optimize(&inst, g, &GridSpec::new(16, 3).unwrap()).unwrap();
            assert!(sol.allocations.iter().all(|p| p.confidential == 0.0));
        }
    }

    #[test]
    fn huge_multipliers_give_zero() {
        let st = FadingState::new(1.0, 1.0, 0.25, 2.0, 2.0).unwrap();
        let m = MultiplierPair::new(1e3, 1e3);
        let sol = lagrangian_grid_optimize_state(&st, 4.0, &m, &GridSpec::default()).unwrap();
        assert_eq!(sol.allocation, PowerAllocation::ZERO);
    }

    #[test]
    fn common_only_state_has_no_confidential_power() {
        let st = FadingState::new(0.3, 1.0, 2.0, 1.0, 1.0).unwrap();
        let m = MultiplierPair::new(0.2, 0.3);
        let sol = lagrangian_grid_optimize_state(&st, 4.0, &m, &GridSpec::default()).unwrap();
        assert_eq!(sol.allocation.confidential, 0.0);
    }

    #[test]
    fn state_oracle_matches_consistent_rule() {
        let st = FadingState::new(1.0, 1.0, 0.25, 2.0, 2.0).unwrap();
        let m = MultiplierPair::new(0.1, 0.1);
        let grid = GridSpec::new(64, 6).unwrap();
        let sol = lagrangian_grid_optimize_state(&st, 4.0, &m, &grid).unwrap();
        let closed = allocate_fading_state_consistent(&st, 4.0, &m).unwrap();
        let lc = state_lagrangian(&st, 4.0, &m, &closed);
        assert!(sol.lagrangian <= lc + 1e-9);
        assert!(lc - sol.lagrangian < 1e-4, "{lc} vs {}", sol.lagrangian);
    }

    #[test]
    fn closed_form_is_stationary() {
        let sub = Subchannel::new(1.0, 4.0).unwrap();
        let inst = ParallelInstance::new(vec![sub], 1.0, 1.0).unwrap();
        let m = MultiplierPair::new(0.5, 0.5);
        let p = allocate_subchannel(&sub, 2.0, &m).unwrap();
        let rep = kkt_residuals_parallel(&inst, 2.0, &m, &[p]);
        assert!(!rep.is_empty());
        assert!(rep.max() < 1e-8, "{rep:?}");

        let perturbed = PowerAllocation::new(p.common * 1.1, p.confidential, p.user2);
        let rep = kkt_residuals_parallel(&inst, 2.0, &m, &[perturbed]);
        assert!(rep.first(KktKind::Common).unwrap().value > 0.0);
    }

    #[test]
    fn zero_allocation_has_no_active_residuals() {
        let inst = ParallelInstance::from_noise(&[1.0], &[2.0], 1.0, 1.0).unwrap();
        let rep = kkt_residuals_parallel(
            &inst,
            1.0,
            &MultiplierPair::new(1.0, 1.0),
            &[PowerAllocation::ZERO],
        );
        assert!(rep.is_empty());
    }

    #[test]
    fn fading_closed_form_is_stationary() {
        let st = FadingState::new(1.7, 0.6, 0.3, 2.0, 1.5).unwrap();
        let m = MultiplierPair::new(0.08, 0.12);
        let p = allocate_fading_state_consistent(&st, 3.0, &m).unwrap();
        let rep = kkt_residuals_state(&st, 3.0, &m, &p);
        assert!(rep.max() < 1e-8, "{rep:?}");
    }
}

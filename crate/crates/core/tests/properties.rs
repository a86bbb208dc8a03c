use cmac_secrecy::{
    allocate_subchannel, rate_pair_parallel, rate_pair_parallel_async, solve_multipliers,
    MultiplierPair, ParallelInstance, PowerAllocation, SetLabel,
};
use proptest::prelude::*;

fn instance(max_links: usize) -> impl Strategy<Value = ParallelInstance> {
    (1..=max_links)
        .prop_flat_map(|l| {
            (
                prop::collection::vec(0.5f64..10.0, l),
                prop::collection::vec(0.5f64..10.0, l),
                1.0f64..30.0,
                1.0f64..30.0,
            )
        })
        .prop_map(|(nu, mu, p1, p2)| ParallelInstance::from_noise(&nu, &mu, p1, p2).unwrap())
}

/// Arbitrary allocation respecting the set rule and both budgets.
fn feasible(inst: &ParallelInstance, w: &[(f64, f64, f64)]) -> Vec<PowerAllocation> {
    let subs = inst.subchannels();
    let raw: Vec<(f64, f64, f64)> = subs
        .iter()
        .zip(w)
        .map(|(s, &(a, b, p))| match s.classify() {
            SetLabel::Secure => (a, b, p),
            SetLabel::CommonOnly => (a, 0.0, p),
        })
        .collect();
    let u1: f64 = raw.iter().map(|r| r.0 + r.1).sum::<f64>().max(1e-300);
    let u2: f64 = raw.iter().map(|r| r.2).sum::<f64>().max(1e-300);
    raw.iter()
        .map(|&(a, b, p)| {
            PowerAllocation::new(a / u1 * inst.p1(), b / u1 * inst.p1(), p / u2 * inst.p2())
        })
        .collect()
}

fn weights(n: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), n)
}

fn objective(inst: &ParallelInstance, allocs: &[PowerAllocation], gamma1: f64) -> f64 {
    let r = rate_pair_parallel(inst, allocs).unwrap();
    r.r0 + gamma1 * r.r1
}

const GAMMAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 8.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn coherent_combining_never_hurts(inst in instance(6), w in weights(6)) {
        let allocs = feasible(&inst, &w);
        let sync = rate_pair_parallel(&inst, &allocs).unwrap();
        let asyn = rate_pair_parallel_async(&inst, &allocs).unwrap();
        prop_assert!(sync.r0 >= asyn.r0);
        prop_assert_eq!(sync.r1, asyn.r1);
    }

    #[test]
    fn optimum_beats_random_feasible_points(inst in instance(4), w in weights(4), gi in 0usize..5) {
        let gamma1 = GAMMAS[gi];
        let sol = solve_multipliers(&inst, gamma1).unwrap();
        let best = objective(&inst, &sol.allocations, gamma1);
        let other = objective(&inst, &feasible(&inst, &w), gamma1);
        prop_assert!(other <= best + 1e-6, "random {other} > optimum {best}");
    }

    #[test]
    fn scaling_noise_and_power_together_keeps_rates(inst in instance(4), k in 0.1f64..10.0, gi in 0usize..5) {
        let gamma1 = GAMMAS[gi];
        let nu: Vec<f64> = inst.subchannels().iter().map(|s| s.nu() * k).collect();
        let mu: Vec<f64> = inst.subchannels().iter().map(|s| s.mu() * k).collect();
        let scaled = ParallelInstance::from_noise(&nu, &mu, inst.p1() * k, inst.p2() * k).unwrap();
        let a = rate_pair_parallel(&inst, &solve_multipliers(&inst, gamma1).unwrap().allocations).unwrap();
        let b = rate_pair_parallel(&scaled, &solve_multipliers(&scaled, gamma1).unwrap().allocations).unwrap();
        prop_assert!((a.r0 + gamma1 * a.r1 - b.r0 - gamma1 * b.r1).abs() < 1e-6);
    }

    #[test]
    fn more_power_never_hurts(inst in instance(4), extra in 1.0f64..3.0, gi in 0usize..5) {
        let gamma1 = GAMMAS[gi];
        let richer = inst.with_budgets(inst.p1() * extra, inst.p2()).unwrap();
        let base = objective(&inst, &solve_multipliers(&inst, gamma1).unwrap().allocations, gamma1);
        let more = objective(&richer, &solve_multipliers(&richer, gamma1).unwrap().allocations, gamma1);
        prop_assert!(more >= base - 1e-6);
    }

    #[test]
    fn no_confidential_power_below_unit_weight(
        nu in 0.5f64..10.0,
        mu in 0.5f64..10.0,
        l1 in 1e-3f64..10.0,
        l2 in 1e-3f64..10.0,
        gamma1 in 0.0f64..=1.0,
    ) {
        let sub = cmac_secrecy::Subchannel::new(nu, mu).unwrap();
        let p = allocate_subchannel(&sub, gamma1, &MultiplierPair::new(l1, l2)).unwrap();
        prop_assert_eq!(p.confidential, 0.0);
    }
}

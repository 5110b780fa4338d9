//! Structural invariants beyond the acceptance criteria: small exhaustive
//! grids and sampled properties that tie the modules together.

mod common;

use num_rational::BigRational;
use num_traits::One;

use confip::confip::{complex_mass_bound_holds, thin_support_bound_holds, ConfIp};
use confip::eptas::{self, Epsilon};
use confip::instance::{generate_instance, Instance, XorShift64Star};
use confip::knapsack::KnapsackSpec;
use confip::objectives::{ObjectiveFunction, ObjectiveKind, ObjectiveSpec};
use confip::oracle::{self, OracleBudget};

/// On a small exhaustive grid, every oracle-feasible conf-IP admits a thin
/// rewriting of the oracle witness.
#[test]
fn thin_solutions_exist_for_all_feasible_small_ips() {
    let budget = OracleBudget::default();
    let mut feasible_count = 0u64;
    for t in [2u64, 4, 8] {
        for d in 1..=3usize {
            for sizes in common::sorted_tuples(d, t.min(4)) {
                let spec = KnapsackSpec::new(sizes, t).unwrap();
                let mut demand = vec![0u64; d];
                loop {
                    for m in 1..=4u64 {
                        let ip = ConfIp::new(spec.clone(), demand.clone(), m).unwrap();
                        if let Some(witness) = oracle::confip_feasible(&ip, &budget).unwrap() {
                            feasible_count += 1;
                            let thin = ip.make_thin(&witness).unwrap();
                            assert!(ip.check_feasible_solution(&thin).unwrap());
                            for (c, &v) in thin.multiplicities() {
                                assert!(spec.is_simple(c) || v <= 1);
                            }
                            assert!(thin_support_bound_holds(
                                thin.support_size(),
                                d,
                                spec.capacity()
                            ));
                            assert!(complex_mass_bound_holds(
                                thin.complex_mass(&spec),
                                d,
                                spec.capacity()
                            ));
                        }
                    }
                    let mut k = 0;
                    loop {
                        if k == d {
                            break;
                        }
                        if demand[k] < 3 {
                            demand[k] += 1;
                            break;
                        }
                        demand[k] = 0;
                        k += 1;
                    }
                    if demand.iter().all(|&v| v == 0) {
                        break;
                    }
                }
            }
        }
    }
    assert!(feasible_count > 1000);
}

/// The equal-subset pair is guaranteed above the Caratheodory-style bound.
#[test]
fn equal_subsets_exist_above_the_bound() {
    let mut rng = XorShift64Star::new(99);
    let mut exercised = 0u64;
    for _ in 0..40 {
        let d = 1 + rng.next_below(2) as usize;
        let t = 4 + rng.next_below(5);
        let sizes: Vec<u64> = (0..d).map(|_| 1 + rng.next_below(2)).collect();
        let spec = KnapsackSpec::new(sizes, t).unwrap();
        let q = spec.enumerate_configurations(100_000).unwrap();
        // 2(d+1) log2(4(d+1)T) with d <= 2, T <= 8 is at most ~38; only
        // polytopes with enough configurations can exceed it.
        let bound = (0..)
            .take_while(|&s| confip::confip::es_support_bound_holds(s, d, spec.capacity()))
            .last()
            .unwrap();
        if q.len() <= bound {
            continue;
        }
        let take = q.len().min(bound + 3);
        let entries: Vec<_> = q[..take].iter().map(|c| (c.clone(), 1u64)).collect();
        let solution = confip::ConfSolution::from_entries(entries);
        let mut demand = vec![0u64; d];
        for (c, _) in solution.multiplicities().iter().map(|(c, v)| (c, v)) {
            for (k, &vc) in c.counts().iter().enumerate() {
                demand[k] += vc;
            }
        }
        let ip = ConfIp::new(spec, demand, solution.machine_count()).unwrap();
        let pair = ip.find_equal_subsets(&solution);
        assert!(
            pair.is_some(),
            "support {} above bound {bound} must contain an equal pair",
            take
        );
        let (a, b) = pair.unwrap();
        assert!(!a.is_empty() && !b.is_empty());
        exercised += 1;
    }
    assert!(exercised > 0, "the sampler never exceeded the bound");
}

/// Geometric rounding never rounds down and inflates by at most a factor
/// `1+eps` plus one unit.
#[test]
fn rounding_is_tight_upward() {
    let eps = Epsilon::new(4).unwrap();
    for seed in 0..30u64 {
        let instance = generate_instance(seed, 12, 3, 40).unwrap();
        let t = eptas::graham_list(&instance).makespan();
        let reduction = eptas::reduce_small_jobs(&instance, t, eps).unwrap();
        let rounded = eptas::scale_and_round(&reduction, eps, 3).unwrap();
        let q = BigRational::from_integer(eps.inverse().into());
        let scale = (&q * &q) / BigRational::from_integer(t.into());
        for class in rounded.provenance.iter().zip(&rounded.sizes) {
            let (origin, &size) = class;
            for &j in &origin.big_jobs {
                let p = instance.processing_times()[j];
                let scaled = BigRational::from_integer(p.into()) * &scale;
                let size_r = BigRational::from_integer(size.into());
                assert!(size_r >= scaled, "rounded below the scaled size");
                let limit = &scaled * (BigRational::one() + BigRational::one() / &q)
                    + BigRational::one();
                assert!(size_r <= limit, "rounded size above (1+eps)*scaled + 1");
            }
        }
    }
}

/// Convex objectives never get worse when a job moves from a strictly
/// more-loaded machine to one whose load is lower by more than the job.
#[test]
fn convex_exchange_never_hurts() {
    let spec = ObjectiveSpec::new(ObjectiveKind::SumMin, ObjectiveFunction::Power(2)).unwrap();
    let mut rng = XorShift64Star::new(7);
    for seed in 0..50u64 {
        let instance = generate_instance(seed, 10, 3, 20).unwrap();
        let assignment: Vec<usize> = (0..10).map(|_| rng.next_below(3) as usize).collect();
        let schedule = confip::Schedule::new(&instance, assignment.clone()).unwrap();
        let loads = schedule.loads().to_vec();
        let before: u128 = spec.aggregate_loads_unsorted(&loads);
        for (j, &from) in assignment.iter().enumerate() {
            let p = instance.processing_times()[j];
            for to in 0..3usize {
                if to == from {
                    continue;
                }
                // Strictly more-loaded source with a gap above the job size.
                if loads[from] > loads[to] && loads[from] - loads[to] > p {
                    let mut moved = loads.clone();
                    moved[from] -= p;
                    moved[to] += p;
                    let after = spec.aggregate_loads_unsorted(&moved);
                    assert!(after <= before, "convex exchange increased the objective");
                }
            }
        }
    }
}

/// The dual search never refutes a target at or above the optimum, across
/// modes, on a fresh sample.
#[test]
fn dual_search_brackets_the_optimum() {
    let eps = Epsilon::new(5).unwrap();
    let budget = OracleBudget::default();
    for seed in 300..315u64 {
        let instance = generate_instance(seed, 12, 3, 25).unwrap();
        let (opt, _) = oracle::opt_makespan(&instance, &budget).unwrap();
        let (schedule, report) = eptas::solve(&instance, eps, &Default::default()).unwrap();
        for &(t, yes) in &report.decisions {
            if !yes {
                assert!(t < opt);
            }
        }
        assert!(instance.makespan_lower_bound() <= schedule.makespan());
    }
}

/// Long-haul stress pass over ten thousand seeded programs and a thousand
/// end-to-end solves; run explicitly with `cargo test -- --ignored`.
#[test]
#[ignore]
fn deep_stress() {
    use confip::confip::TraceKind;
    let mut splits = 0u64;
    for seed in 10_000..20_000u64 {
        let case = common::seeded_confip(seed);
        let spec = case.ip.spec();
        let mut trace = confip::confip::Trace::default();
        let thin = case.ip.make_thin_traced(&case.solution, &mut trace).unwrap();
        assert!(case.ip.check_feasible_solution(&thin).unwrap());
        for (c, &v) in thin.multiplicities() {
            assert!(spec.is_simple(c) || v <= 1, "seed {seed}");
        }
        assert!(thin_support_bound_holds(
            thin.support_size(),
            spec.dimension(),
            spec.capacity()
        ));
        assert!(complex_mass_bound_holds(
            thin.complex_mass(spec),
            spec.dimension(),
            spec.capacity()
        ));
        splits += trace
            .events
            .iter()
            .filter(|e| e.kind == TraceKind::Split)
            .count() as u64;
        let reduced = case.ip.reduce_support(&case.solution).unwrap();
        assert!(case.ip.check_feasible_solution(&reduced).unwrap());
    }
    assert!(splits > 200, "stress corpus exercised too few splits");

    let budget = OracleBudget::default();
    for seed in 5_000..6_000u64 {
        let n = 8 + (seed % 23) as usize;
        let m = 2 + (seed % 3) as usize;
        let instance = generate_instance(seed, n, m, 50).unwrap();
        for inverse in [4u64, 8] {
            let eps = Epsilon::new(inverse).unwrap();
            // The factor assertion inside solve re-checks the guarantee.
            let (schedule, _) = eptas::solve(&instance, eps, &Default::default()).unwrap();
            let (opt, _) = oracle::opt_makespan(&instance, &budget).unwrap();
            assert!(schedule.makespan() >= opt);
        }
    }
}

/// Sanity: makespans reported by the pipeline are real schedules of the
/// original jobs.
#[test]
fn solve_output_is_consistent() {
    let eps = Epsilon::new(4).unwrap();
    for seed in 400..410u64 {
        let instance: Instance = generate_instance(seed, 15, 4, 35).unwrap();
        let (schedule, _) = eptas::solve(&instance, eps, &Default::default()).unwrap();
        let recomputed = confip::instance::makespan(&instance, &schedule).unwrap();
        assert_eq!(recomputed, schedule.makespan());
    }
}

/// Both decision modes agree on randomized small rounded instances.
#[test]
fn decide_modes_agree_on_small_grid() {
    use confip::eptas::{decide_makespan, DecideMode, PipelineBudgets, RoundedInstance, SizeClass};
    let budgets = PipelineBudgets::default();
    let mut rng = XorShift64Star::new(4242);
    let mut yes = 0u64;
    for _ in 0..300 {
        let t = 4 + rng.next_below(9); // capacity <= 12
        let d = 1 + rng.next_below(3) as usize;
        let sizes: Vec<u64> = {
            let mut s: Vec<u64> = (0..d).map(|_| 1 + rng.next_below(t)).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let demand: Vec<u64> = sizes.iter().map(|_| rng.next_below(6)).collect();
        let machines = 1 + rng.next_below(4);
        let rounded = RoundedInstance {
            provenance: sizes.iter().map(|_| SizeClass::default()).collect(),
            sizes,
            demand,
            machines,
            capacity: t,
        };
        let paper = decide_makespan(&rounded, DecideMode::Paper, &budgets).unwrap();
        let oracle_v = decide_makespan(&rounded, DecideMode::Oracle, &budgets).unwrap();
        assert_eq!(
            paper.is_some(),
            oracle_v.is_some(),
            "modes disagree on {rounded:?}"
        );
        if let Some(sol) = paper {
            yes += 1;
            let ip = ConfIp::new(
                rounded.knapsack_spec(),
                rounded.demand.clone(),
                rounded.machines,
            )
            .unwrap();
            assert!(ip.check_feasible_solution(&sol).unwrap());
        }
    }
    assert!(yes > 30, "grid produced too few feasible cases ({yes})");
}

/// A solve with more machines than jobs leaves machines idle and stays
/// exact on the trivial side.
#[test]
fn solve_with_spare_machines() {
    let eps = Epsilon::new(4).unwrap();
    let instance = Instance::new(vec![9, 4], 5).unwrap();
    let (schedule, _) = eptas::solve(&instance, eps, &Default::default()).unwrap();
    assert_eq!(schedule.makespan(), 9);
    assert_eq!(schedule.loads().iter().filter(|&&l| l == 0).count(), 3);
}

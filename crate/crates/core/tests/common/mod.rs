//! Seeded corpora shared by the integration suites. Everything here is
//! deterministic in the seed, so failures reproduce exactly.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_rational::BigRational;

use confip::confip::{ConfIp, ConfSolution};
use confip::instance::{generate_instance, Instance, XorShift64Star};
use confip::knapsack::{Configuration, KnapsackSpec};
use confip::oracle::{self, OracleBudget};

pub struct SeededConfIp {
    pub ip: ConfIp,
    pub solution: ConfSolution,
}

/// A feasible configuration IP with `d <= 5`, `T <= 20`, `m <= 8`, whose
/// demand comes from sampling `m` configurations (so a feasible solution is
/// known by construction). Sizes lean small so complex configurations
/// exist; sampling prefers them half the time and repeats the previous
/// pick a third of the time, so multiplicities above one occur regularly.
pub fn seeded_confip(seed: u64) -> SeededConfIp {
    let mut rng = XorShift64Star::new(seed);
    let d = 1 + rng.next_below(5) as usize;
    let t = 4 + rng.next_below(17);
    let size_range = (t / 2).max(1);
    let sizes: Vec<u64> = (0..d).map(|_| 1 + rng.next_below(size_range)).collect();
    let spec = KnapsackSpec::new(sizes, t).unwrap();
    let q = spec.enumerate_configurations(1_000_000).unwrap();
    let complex: Vec<&Configuration> = q.iter().filter(|c| spec.is_complex(c)).collect();
    let m = 1 + rng.next_below(8);
    let mut demand = vec![0u64; d];
    let mut entries: Vec<(Configuration, u64)> = Vec::new();
    let mut last: Option<Configuration> = None;
    for _ in 0..m {
        let c = match &last {
            Some(prev) if rng.next_below(3) == 0 => prev.clone(),
            _ => {
                if !complex.is_empty() && rng.next_below(2) == 0 {
                    complex[rng.next_below(complex.len() as u64) as usize].clone()
                } else {
                    q[rng.next_below(q.len() as u64) as usize].clone()
                }
            }
        };
        for (k, &v) in c.counts().iter().enumerate() {
            demand[k] += v;
        }
        entries.push((c.clone(), 1));
        last = Some(c);
    }
    let ip = ConfIp::new(spec, demand, m).unwrap();
    let solution = ConfSolution::from_entries(entries);
    debug_assert!(ip.check_feasible_solution(&solution).unwrap());
    SeededConfIp { ip, solution }
}

/// A fractional LP-feasible input: the average of the sampled solution and
/// an independently found oracle witness for the same demand.
pub fn seeded_lp_input(seed: u64) -> (ConfIp, BTreeMap<Configuration, BigRational>) {
    let mut seed = seed;
    loop {
        let mut case = seeded_confip(seed);
        // Keep the DP state space reasonable.
        let states: u64 = case
            .ip
            .demand()
            .iter()
            .map(|&b| b + 1)
            .product();
        if states > 2_000_000 {
            seed += 10_000;
            continue;
        }
        let other = oracle::confip_feasible(&case.ip, &OracleBudget::default())
            .unwrap()
            .expect("demand built from a solution is feasible");
        let half = BigRational::new(1.into(), 2.into());
        let mut x: BTreeMap<Configuration, BigRational> = BTreeMap::new();
        for (c, &v) in case.solution.multiplicities() {
            *x.entry(c.clone()).or_insert_with(num_traits::Zero::zero) +=
                BigRational::from_integer(v.into()) * &half;
        }
        for (c, &v) in other.multiplicities() {
            *x.entry(c.clone()).or_insert_with(num_traits::Zero::zero) +=
                BigRational::from_integer(v.into()) * &half;
        }
        case.solution = ConfSolution::default();
        return (case.ip, x);
    }
}

/// The 200-instance scheduling corpus of the end-to-end criteria:
/// `n <= 30`, `m <= 4`, `p_j <= 40`, seeds 1..=200.
pub fn scheduling_corpus() -> &'static Vec<(Instance, u64)> {
    static CORPUS: OnceLock<Vec<(Instance, u64)>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        (1..=200u64)
            .map(|seed| {
                let n = 10 + (seed % 21) as usize;
                let m = 2 + (seed % 3) as usize;
                let instance = generate_instance(seed, n, m, 40).unwrap();
                let (opt, _) = oracle::opt_makespan(&instance, &OracleBudget::default())
                    .expect("corpus instances stay within the oracle budget");
                (instance, opt)
            })
            .collect()
    })
}

/// Sorted `d`-tuples over `1..=max` (combinations with repetition).
pub fn sorted_tuples(d: usize, max: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = vec![0u64; d];
    fn rec(d: usize, max: u64, pos: usize, min: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos == d {
            out.push(current.clone());
            return;
        }
        for v in min..=max {
            current[pos] = v;
            rec(d, max, pos + 1, v, current, out);
        }
    }
    rec(d, max, 0, 1, &mut current, &mut out);
    out
}

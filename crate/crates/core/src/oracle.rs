//! Independent brute-force ground truth: exact optimal schedules, exact
//! configuration-IP feasibility, and exact objective optima. Everything in
//! this module is written against the problem definitions directly, not
//! against the algorithmic pipeline it cross-checks.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::confip::{ConfIp, ConfSolution};
use crate::error::Error;
use crate::instance::{Instance, Schedule};
use crate::knapsack::Configuration;
use crate::objectives::ObjectiveSpec;

/// Work limits for the brute-force searches.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    pub max_states: u64,
    pub max_assignments: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_states: 10_000_000,
            max_assignments: 100_000_000,
        }
    }
}

/// Exact minimum makespan with a witness schedule, by branch and bound over
/// job-to-machine assignments. Machines are interchangeable, so branching
/// only considers one machine per distinct load and states are memoized on
/// the sorted load vector.
pub fn opt_makespan(instance: &Instance, budget: &OracleBudget) -> Result<(u64, Schedule), Error> {
    let m = instance.machine_count();
    let mut jobs: Vec<(usize, u64)> = instance
        .processing_times()
        .iter()
        .copied()
        .enumerate()
        .collect();
    jobs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    // Internal greedy upper bound (longest job to least-loaded machine).
    let mut greedy_assign = vec![0usize; jobs.len()];
    let mut loads = vec![0u64; m];
    for (pos, &(orig, p)) in jobs.iter().enumerate() {
        let i = (0..m).min_by_key(|&i| (loads[i], i)).unwrap();
        loads[i] += p;
        greedy_assign[pos] = i;
        let _ = orig;
    }
    let mut incumbent = *loads.iter().max().unwrap();
    let mut best_assign = greedy_assign;
    let lower = instance.makespan_lower_bound();

    struct Search<'a> {
        jobs: &'a [(usize, u64)],
        m: usize,
        incumbent: u64,
        best: Vec<usize>,
        nodes: u64,
        max_nodes: u64,
        visited: HashSet<(usize, Vec<u64>)>,
        lower: u64,
    }

    impl Search<'_> {
        fn run(
            &mut self,
            idx: usize,
            loads: &mut Vec<u64>,
            assign: &mut Vec<usize>,
        ) -> Result<(), Error> {
            self.nodes += 1;
            if self.nodes > self.max_nodes {
                return Err(Error::CapExceeded {
                    what: "oracle assignments",
                    limit: self.max_nodes,
                });
            }
            if self.incumbent == self.lower {
                return Ok(());
            }
            if idx == self.jobs.len() {
                let cmax = *loads.iter().max().unwrap();
                if cmax < self.incumbent {
                    self.incumbent = cmax;
                    self.best = assign.clone();
                }
                return Ok(());
            }
            let cur_max = *loads.iter().max().unwrap();
            if cur_max >= self.incumbent {
                return Ok(());
            }
            // States already explored were explored under an incumbent at
            // least as large, hence under weaker pruning; skipping is sound.
            let mut canon = loads.clone();
            canon.sort_unstable();
            if !self.visited.insert((idx, canon)) {
                return Ok(());
            }
            let p = self.jobs[idx].1;
            let mut seen = BTreeSet::new();
            for i in 0..self.m {
                if !seen.insert(loads[i]) {
                    continue;
                }
                if loads[i] + p >= self.incumbent {
                    continue;
                }
                loads[i] += p;
                assign[idx] = i;
                self.run(idx + 1, loads, assign)?;
                loads[i] -= p;
            }
            Ok(())
        }
    }

    let n = jobs.len();
    let mut search = Search {
        jobs: &jobs,
        m,
        incumbent,
        best: best_assign.clone(),
        nodes: 0,
        max_nodes: budget.max_assignments,
        visited: HashSet::new(),
        lower,
    };
    if incumbent > lower {
        let mut loads = vec![0u64; m];
        let mut assign = vec![0usize; n];
        search.run(0, &mut loads, &mut assign)?;
        incumbent = search.incumbent;
        best_assign = search.best;
    }

    let mut assignment = vec![0usize; n];
    for (pos, &(orig, _)) in jobs.iter().enumerate() {
        assignment[orig] = best_assign[pos];
    }
    let schedule = Schedule::new(instance, assignment)?;
    debug_assert_eq!(schedule.makespan(), incumbent);
    Ok((incumbent, schedule))
}

/// Exact feasibility of a configuration IP with a witness, via the vector
/// dynamic program over partial demands run over all of `Q`.
pub fn confip_feasible(ip: &ConfIp, budget: &OracleBudget) -> Result<Option<ConfSolution>, Error> {
    let spec = ip.spec();
    let d = spec.dimension();
    let demand = ip.demand();
    if !ip.volume_feasible() {
        return Ok(None);
    }
    let mut states: u64 = 1;
    for &b in demand {
        states = states.saturating_mul(b + 1);
    }
    if states > budget.max_states {
        return Err(Error::CapExceeded {
            what: "oracle DP states",
            limit: budget.max_states,
        });
    }
    let q = spec.enumerate_configurations(budget.max_states)?;

    let mut stride = vec![1usize; d];
    for k in 1..d {
        stride[k] = stride[k - 1] * (demand[k - 1] as usize + 1);
    }
    let total = states as usize;
    const INF: u32 = u32::MAX;
    let mut dist = vec![INF; total];
    let mut parent = vec![u32::MAX; total];
    dist[0] = 0;

    // Precomputed index offsets per configuration.
    let moves: Vec<(usize, &Configuration)> = q
        .iter()
        .filter(|c| !c.is_zero() && c.counts().iter().zip(demand).all(|(&v, &b)| v <= b))
        .map(|c| {
            let offset: usize = c
                .counts()
                .iter()
                .enumerate()
                .map(|(k, &v)| v as usize * stride[k])
                .sum();
            (offset, c)
        })
        .collect();

    let mut z = vec![0u64; d];
    for s in 0..total {
        if dist[s] == INF {
            // advance decoded z
        } else {
            for (qi, &(offset, c)) in moves.iter().enumerate() {
                if c.counts().iter().zip(&z).zip(demand).all(|((&v, &have), &b)| have + v <= b) {
                    let ns = s + offset;
                    if dist[s] + 1 < dist[ns] {
                        dist[ns] = dist[s] + 1;
                        parent[ns] = qi as u32;
                    }
                }
            }
        }
        // Increment the decoded state vector (mixed radix).
        for k in 0..d {
            if z[k] < demand[k] {
                z[k] += 1;
                break;
            }
            z[k] = 0;
        }
    }

    let target = total - 1;
    if dist[target] == INF || dist[target] as u64 > ip.machines() {
        return Ok(None);
    }
    // Walk the parents to collect the witness, padding with the zero
    // configuration so exactly m machines are used.
    let mut entries: Vec<(Configuration, u64)> = Vec::new();
    let mut s = target;
    while s != 0 {
        let (offset, c) = moves[parent[s] as usize];
        entries.push(((*c).clone(), 1));
        s -= offset;
    }
    let used = dist[target] as u64;
    if used < ip.machines() {
        entries.push((Configuration::zero(d), ip.machines() - used));
    }
    let solution = ConfSolution::from_entries(entries);
    debug_assert!(ip.check_feasible_solution(&solution).unwrap());
    Ok(Some(solution))
}

/// Exact minimum number of capacity-`T` machines covering the demand, or
/// `None` when the demand is not coverable at all. Shares the DP of
/// [`confip_feasible`] but reports the bin count.
pub fn min_bins(ip: &ConfIp, budget: &OracleBudget) -> Result<Option<u64>, Error> {
    // Any machine count at least the bin minimum is feasible; search for it
    // by running the same DP with an unconstrained machine count.
    let relaxed = ConfIp::new(ip.spec().clone(), ip.demand().to_vec(), u64::MAX / 2)?;
    match confip_feasible(&relaxed, budget)? {
        None => Ok(None),
        Some(witness) => {
            let nonzero: u64 = witness
                .multiplicities()
                .iter()
                .filter(|(c, _)| !c.is_zero())
                .map(|(_, &v)| v)
                .sum();
            Ok(Some(nonzero))
        }
    }
}

/// Exact optimum of a load-based objective by exhaustive assignment search
/// with machine-symmetry breaking, memoized on sorted load vectors.
pub fn opt_objective(
    instance: &Instance,
    spec: &ObjectiveSpec,
    budget: &OracleBudget,
) -> Result<(u128, Schedule), Error> {
    let m = instance.machine_count();
    let mut jobs: Vec<(usize, u64)> = instance
        .processing_times()
        .iter()
        .copied()
        .enumerate()
        .collect();
    jobs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let sizes: Vec<u64> = jobs.iter().map(|&(_, p)| p).collect();

    struct Search<'a> {
        sizes: &'a [u64],
        m: usize,
        spec: &'a ObjectiveSpec,
        memo: HashMap<(usize, Vec<u64>), u128>,
        max_states: u64,
    }

    impl Search<'_> {
        fn value(&mut self, idx: usize, loads: &[u64]) -> Result<u128, Error> {
            if idx == self.sizes.len() {
                return Ok(self.spec.aggregate_loads(loads));
            }
            let key = (idx, loads.to_vec());
            if let Some(&v) = self.memo.get(&key) {
                return Ok(v);
            }
            if self.memo.len() as u64 >= self.max_states {
                return Err(Error::CapExceeded {
                    what: "oracle objective states",
                    limit: self.max_states,
                });
            }
            let p = self.sizes[idx];
            let mut best: Option<u128> = None;
            let mut seen = BTreeSet::new();
            for i in 0..self.m {
                if !seen.insert(loads[i]) {
                    continue;
                }
                let mut child = loads.to_vec();
                child[i] += p;
                child.sort_unstable();
                let v = self.value(idx + 1, &child)?;
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        if self.spec.kind().is_maximization() {
                            b.max(v)
                        } else {
                            b.min(v)
                        }
                    }
                });
            }
            let v = best.expect("at least one machine");
            self.memo.insert(key, v);
            Ok(v)
        }
    }

    let mut search = Search {
        sizes: &sizes,
        m,
        spec,
        memo: HashMap::new(),
        max_states: budget.max_states,
    };
    let zeros = vec![0u64; m];
    let optimum = search.value(0, &zeros)?;

    // Replay with concrete machine indices to produce a witness schedule.
    let mut actual = vec![0u64; m];
    let mut assignment = vec![0usize; jobs.len()];
    for (pos, &(orig, p)) in jobs.iter().enumerate() {
        let mut canon = actual.clone();
        canon.sort_unstable();
        let target = search.value(pos, &canon)?;
        let mut chosen = None;
        let mut seen = BTreeSet::new();
        for i in 0..m {
            if !seen.insert(actual[i]) {
                continue;
            }
            let mut child = actual.clone();
            child[i] += p;
            child.sort_unstable();
            if search.value(pos + 1, &child)? == target {
                chosen = Some(i);
                break;
            }
        }
        let i = chosen.expect("replay must find an optimal branch");
        actual[i] += p;
        assignment[orig] = i;
    }
    let schedule = Schedule::new(instance, assignment)?;
    debug_assert_eq!(spec.aggregate_loads_unsorted(schedule.loads()), optimum);
    Ok((optimum, schedule))
}

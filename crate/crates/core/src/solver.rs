//! Exact solver for the configuration IP restricted to a given support set,
//! with an optional linear cost. Depth-first branch and bound over the
//! allowed configurations (sorted by descending weight), branching on
//! multiplicities, with demand/volume pruning and memoization of resolved
//! states. Complete: on termination the verdict is exact.

use std::collections::{BTreeMap, HashMap};

use crate::confip::{ConfIp, ConfSolution};
use crate::error::Error;
use crate::knapsack::Configuration;

/// Work limits for one solve call.
#[derive(Debug, Clone)]
pub struct SolveLimits {
    /// Search nodes (state visits) before the solver gives up with an error.
    pub max_nodes: u64,
    /// Memoized states; beyond this the search keeps running unmemoized.
    pub max_memo_states: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 100_000_000,
            max_memo_states: 1_000_000,
        }
    }
}

/// A configuration IP together with the support it may use and an optional
/// per-configuration cost.
#[derive(Debug, Clone)]
pub struct RestrictedConfIp {
    ip: ConfIp,
    allowed: Vec<Configuration>,
    cost: Option<BTreeMap<Configuration, u64>>,
}

impl RestrictedConfIp {
    pub fn new(ip: ConfIp, allowed: Vec<Configuration>) -> Result<Self, Error> {
        Self::build(ip, allowed, None)
    }

    pub fn with_cost(
        ip: ConfIp,
        allowed: Vec<Configuration>,
        cost: BTreeMap<Configuration, u64>,
    ) -> Result<Self, Error> {
        Self::build(ip, allowed, Some(cost))
    }

    fn build(
        ip: ConfIp,
        allowed: Vec<Configuration>,
        cost: Option<BTreeMap<Configuration, u64>>,
    ) -> Result<Self, Error> {
        let mut seen = std::collections::BTreeSet::new();
        let mut unique = Vec::with_capacity(allowed.len());
        for c in allowed {
            if !ip.spec().contains(&c) {
                return Err(Error::invalid(format!("allowed configuration {c} is not in Q")));
            }
            if seen.insert(c.clone()) {
                unique.push(c);
            }
        }
        if let Some(cost) = &cost {
            for c in &unique {
                if !cost.contains_key(c) {
                    return Err(Error::invalid(format!("missing cost for configuration {c}")));
                }
            }
        }
        Ok(RestrictedConfIp {
            ip,
            allowed: unique,
            cost,
        })
    }

    pub fn ip(&self) -> &ConfIp {
        &self.ip
    }

    pub fn allowed(&self) -> &[Configuration] {
        &self.allowed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Feasibility,
    Minimize,
    Maximize,
}

struct Solver<'a> {
    r: &'a RestrictedConfIp,
    /// Allowed configurations sorted by descending weight, then descending
    /// lexicographic counts; all search orders refer to this order.
    order: Vec<usize>,
    costs: Vec<u64>,
    /// suffix_max[i][k] = max count of coordinate k among order[i..].
    suffix_max: Vec<Vec<u64>>,
    /// Minimum / maximum cost among order[i..].
    suffix_min_cost: Vec<u64>,
    suffix_max_cost: Vec<u64>,
    mode: Mode,
    memo: HashMap<(usize, Vec<u64>, u64), Option<u64>>,
    nodes: u64,
    limits: SolveLimits,
}

impl<'a> Solver<'a> {
    fn new(r: &'a RestrictedConfIp, mode: Mode, limits: SolveLimits) -> Self {
        let spec = r.ip.spec();
        let mut order: Vec<usize> = (0..r.allowed.len()).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&r.allowed[a], &r.allowed[b]);
            spec.weight(cb)
                .cmp(&spec.weight(ca))
                .then_with(|| cb.counts().cmp(ca.counts()))
        });
        let costs: Vec<u64> = order
            .iter()
            .map(|&i| match (&r.cost, mode) {
                (Some(cost), Mode::Minimize | Mode::Maximize) => cost[&r.allowed[i]],
                _ => 0,
            })
            .collect();
        let d = spec.dimension();
        let n = order.len();
        let mut suffix_max = vec![vec![0u64; d]; n + 1];
        // u64::MAX marks the empty suffix: no configuration is left to put
        // on a machine, so a positive remaining machine count is infeasible.
        let mut suffix_min_cost = vec![u64::MAX; n + 1];
        let mut suffix_max_cost = vec![0u64; n + 1];
        for i in (0..n).rev() {
            let c = &r.allowed[order[i]];
            for k in 0..d {
                suffix_max[i][k] = suffix_max[i + 1][k].max(c.counts()[k]);
            }
            suffix_min_cost[i] = suffix_min_cost[i + 1].min(costs[i]);
            suffix_max_cost[i] = suffix_max_cost[i + 1].max(costs[i]);
        }
        Solver {
            r,
            order,
            costs,
            suffix_max,
            suffix_min_cost,
            suffix_max_cost,
            mode,
            memo: HashMap::new(),
            nodes: 0,
            limits,
        }
    }

    fn config(&self, idx: usize) -> &Configuration {
        &self.r.allowed[self.order[idx]]
    }

    fn prune(&self, idx: usize, rem_b: &[u64], rem_m: u64) -> bool {
        let spec = self.r.ip.spec();
        // Total-size accounting: remaining demand must fit in the remaining
        // machines at full capacity.
        let volume: u128 = rem_b
            .iter()
            .zip(spec.sizes())
            .map(|(&b, &s)| b as u128 * s as u128)
            .sum();
        if volume > rem_m as u128 * spec.capacity() as u128 {
            return true;
        }
        // Per-coordinate coverability by the remaining configurations.
        for (k, &b) in rem_b.iter().enumerate() {
            if b as u128 > self.suffix_max[idx][k] as u128 * rem_m as u128 {
                return true;
            }
        }
        false
    }

    /// Optimal suffix cost from this state, or `None` when infeasible.
    fn best(&mut self, idx: usize, rem_b: &[u64], rem_m: u64) -> Result<Option<u64>, Error> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            return Err(Error::CapExceeded {
                what: "solver nodes",
                limit: self.limits.max_nodes,
            });
        }
        if idx == self.order.len() {
            let done = rem_m == 0 && rem_b.iter().all(|&v| v == 0);
            return Ok(if done { Some(0) } else { None });
        }
        if self.prune(idx, rem_b, rem_m) {
            return Ok(None);
        }
        let key = (idx, rem_b.to_vec(), rem_m);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let c = self.config(idx).clone();
        let f = self.costs[idx];
        let vmax = multiplicity_bound(&c, rem_b, rem_m);
        let mut best: Option<u64> = None;
        // Feasibility searches greedily (largest multiplicity first); the
        // cost modes scan ascending so the replayed optimum is the
        // lexicographically smallest multiplicity vector.
        let values: Box<dyn Iterator<Item = u64>> = match self.mode {
            Mode::Feasibility => Box::new((0..=vmax).rev()),
            _ => Box::new(0..=vmax),
        };
        for v in values {
            if let Some(cur) = best {
                match self.mode {
                    Mode::Minimize => {
                        let smin = self.suffix_min_cost[idx + 1];
                        let lb = if rem_m == v {
                            v * f
                        } else if smin == u64::MAX {
                            // Machines left but nothing to assign to them.
                            continue;
                        } else {
                            v * f + (rem_m - v) * smin
                        };
                        if lb >= cur {
                            continue;
                        }
                    }
                    Mode::Maximize => {
                        let ub = v * f + (rem_m - v) * self.suffix_max_cost[idx + 1];
                        if ub <= cur {
                            continue;
                        }
                    }
                    Mode::Feasibility => {}
                }
            }
            let child_b = subtract(rem_b, &c, v);
            let child = self.best(idx + 1, &child_b, rem_m - v)?;
            if let Some(suffix) = child {
                let total = v * f + suffix;
                let better = match (self.mode, best) {
                    (_, None) => true,
                    (Mode::Minimize, Some(b)) => total < b,
                    (Mode::Maximize, Some(b)) => total > b,
                    (Mode::Feasibility, Some(_)) => false,
                };
                if better {
                    best = Some(total);
                }
                if self.mode == Mode::Feasibility {
                    break;
                }
            }
        }
        if self.memo.len() < self.limits.max_memo_states {
            self.memo.insert(key, best);
        }
        Ok(best)
    }

    /// Replays the search to extract the witness for the computed optimum.
    fn reconstruct(&mut self, total: u64) -> Result<ConfSolution, Error> {
        let mut rem_b: Vec<u64> = self.r.ip.demand().to_vec();
        let mut rem_m = self.r.ip.machines();
        let mut target = total;
        let mut entries = Vec::new();
        for idx in 0..self.order.len() {
            let c = self.config(idx).clone();
            let f = self.costs[idx];
            let vmax = multiplicity_bound(&c, &rem_b, rem_m);
            let values: Box<dyn Iterator<Item = u64>> = match self.mode {
                Mode::Feasibility => Box::new((0..=vmax).rev()),
                _ => Box::new(0..=vmax),
            };
            let mut advanced = false;
            for v in values {
                if v * f > target {
                    continue;
                }
                let child_b = subtract(&rem_b, &c, v);
                if let Some(suffix) = self.best(idx + 1, &child_b, rem_m - v)? {
                    if v * f + suffix == target {
                        if v > 0 {
                            entries.push((c.clone(), v));
                        }
                        rem_b = child_b;
                        rem_m -= v;
                        target = suffix;
                        advanced = true;
                        break;
                    }
                }
            }
            assert!(advanced, "reconstruction lost the optimum");
        }
        Ok(ConfSolution::from_entries(entries))
    }
}

fn multiplicity_bound(c: &Configuration, rem_b: &[u64], rem_m: u64) -> u64 {
    let mut vmax = rem_m;
    for (k, &v) in c.counts().iter().enumerate() {
        if v > 0 {
            vmax = vmax.min(rem_b[k] / v);
        }
    }
    vmax
}

fn subtract(rem_b: &[u64], c: &Configuration, v: u64) -> Vec<u64> {
    rem_b
        .iter()
        .zip(c.counts())
        .map(|(&b, &cv)| b - cv * v)
        .collect()
}

fn run(
    r: &RestrictedConfIp,
    mode: Mode,
    limits: &SolveLimits,
) -> Result<Option<(ConfSolution, u64)>, Error> {
    // Eager necessary condition; infeasible volumes never start a search.
    if !r.ip.volume_feasible() {
        return Ok(None);
    }
    // The search recurses once per allowed configuration. Large supports
    // get a dedicated thread with enough stack for that depth.
    if r.allowed.len() > 1024 {
        return std::thread::scope(|scope| {
            std::thread::Builder::new()
                .stack_size(512 * 1024 * 1024)
                .spawn_scoped(scope, || run_inner(r, mode, limits))
                .expect("spawn solver thread")
                .join()
                .expect("solver thread panicked")
        });
    }
    run_inner(r, mode, limits)
}

fn run_inner(
    r: &RestrictedConfIp,
    mode: Mode,
    limits: &SolveLimits,
) -> Result<Option<(ConfSolution, u64)>, Error> {
    let mut solver = Solver::new(r, mode, limits.clone());
    let demand = r.ip.demand().to_vec();
    let machines = r.ip.machines();
    let Some(total) = solver.best(0, &demand, machines)? else {
        return Ok(None);
    };
    let solution = solver.reconstruct(total)?;
    debug_assert!(r.ip.check_feasible_solution(&solution).unwrap_or(false));
    Ok(Some((solution, total)))
}

/// A feasible solution supported on the allowed set, or `None` if none
/// exists. Complete search; the verdict is exact.
pub fn solve_feasibility(
    r: &RestrictedConfIp,
    limits: &SolveLimits,
) -> Result<Option<ConfSolution>, Error> {
    Ok(run(r, Mode::Feasibility, limits)?.map(|(s, _)| s))
}

/// An exactly optimal (minimum total cost) feasible solution with its
/// objective value; ties resolve to the lexicographically smallest
/// multiplicity vector under the solver's descending-weight order.
pub fn solve_min_cost(
    r: &RestrictedConfIp,
    limits: &SolveLimits,
) -> Result<Option<(ConfSolution, u64)>, Error> {
    if r.cost.is_none() {
        return Err(Error::invalid("solve_min_cost requires a cost map"));
    }
    run(r, Mode::Minimize, limits)
}

/// Mirror of [`solve_min_cost`] maximizing the total cost.
pub fn solve_max_cost(
    r: &RestrictedConfIp,
    limits: &SolveLimits,
) -> Result<Option<(ConfSolution, u64)>, Error> {
    if r.cost.is_none() {
        return Err(Error::invalid("solve_max_cost requires a cost map"));
    }
    run(r, Mode::Maximize, limits)
}

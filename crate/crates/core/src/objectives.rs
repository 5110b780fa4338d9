//! Load-based objective families beyond the makespan: minimizing or
//! maximizing `sum_i f(l_i)` and `max_i/min_i f(l_i)` for built-in `f`
//! under the sensitivity condition (a `(1+-delta)` perturbation of loads
//! moves costs by at most `(1+-eps)`).
//!
//! The pipeline mirrors the makespan one. Jobs at least as large as the
//! average load are pinned to their own machines. The rest is rounded in
//! two stages: first to integer multiples of `L/lambda^2` with the small
//! jobs pooled into placeholder chunks of size exactly `L/lambda` (this
//! stage satisfies `L <= L' <= (1+2/lambda)L`), then geometrically to
//! powers of `1+delta`. Configuration costs are the scaled values
//! `ceil(f_c / (eps * f_min))`, which depend only on the load, so an
//! optimal solution can be rewritten load class by load class into one
//! whose per-class restriction is thin without changing the objective.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::confip::{ConfIp, ConfSolution};
use crate::error::Error;
use crate::instance::{Instance, Schedule};
use crate::knapsack::{Configuration, KnapsackSpec};
use crate::oracle::{self, OracleBudget};

/// The four objective families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// (I): minimize `sum_i f(l_i)`, `f` convex.
    SumMin,
    /// (II): minimize `max_i f(l_i)`, `f` convex.
    MinMax,
    /// (I'): maximize `sum_i f(l_i)`, `f` concave.
    SumMax,
    /// (II'): maximize `min_i f(l_i)`, `f` concave.
    MaxMin,
}

impl ObjectiveKind {
    pub fn is_maximization(&self) -> bool {
        matches!(self, ObjectiveKind::SumMax | ObjectiveKind::MaxMin)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        match text {
            "sum-min" => Ok(ObjectiveKind::SumMin),
            "min-max" => Ok(ObjectiveKind::MinMax),
            "sum-max" => Ok(ObjectiveKind::SumMax),
            "max-min" => Ok(ObjectiveKind::MaxMin),
            other => Err(Error::invalid(format!("unknown objective kind {other:?}"))),
        }
    }
}

/// Per-machine cost functions. The built-ins carry the acceptance tests;
/// `Custom` admits any user function together with its own sensitivity
/// rule, whose correctness is the caller's contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveFunction {
    /// `f(x) = x^p` for integer `p >= 1`; convex, strictly for `p >= 2`.
    Power(u32),
    /// `f(x) = x`; both convex and concave.
    Identity,
    /// A user-supplied cost on integer loads.
    Custom {
        f: fn(u64) -> u128,
        /// The sensitivity rule `eps -> delta` (snapped to a unit fraction
        /// downstream).
        delta_rule: fn(&BigRational) -> BigRational,
        /// Whether the function is strictly convex (restricts it to the
        /// minimization kinds).
        strictly_convex: bool,
        /// The constant with `1/delta <= gamma/eps`.
        gamma: u64,
    },
}

impl ObjectiveFunction {
    pub fn parse(text: &str) -> Result<Self, Error> {
        if text == "identity" {
            return Ok(ObjectiveFunction::Identity);
        }
        if let Some(p) = text.strip_prefix("power:") {
            let p: u32 = p
                .parse()
                .map_err(|_| Error::invalid(format!("bad power exponent {p:?}")))?;
            if p == 0 || p > 8 {
                return Err(Error::invalid("power exponent must be in 1..=8"));
            }
            return Ok(ObjectiveFunction::Power(p));
        }
        Err(Error::invalid(format!("unknown objective function {text:?}")))
    }

    /// Linear functions are simultaneously convex and concave.
    fn is_strictly_convex(&self) -> bool {
        match self {
            ObjectiveFunction::Power(p) => *p >= 2,
            ObjectiveFunction::Identity => false,
            ObjectiveFunction::Custom { strictly_convex, .. } => *strictly_convex,
        }
    }

    /// `f(load)` as an exact integer.
    pub fn evaluate(&self, load: u64) -> u128 {
        match self {
            ObjectiveFunction::Power(p) => (load as u128)
                .checked_pow(*p)
                .expect("objective value exceeds 128 bits; instance is beyond desk scale"),
            ObjectiveFunction::Identity => load as u128,
            ObjectiveFunction::Custom { f, .. } => f(load),
        }
    }
}

/// A validated objective: kind plus function, with the matching
/// convexity/concavity hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    f: ObjectiveFunction,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, f: ObjectiveFunction) -> Result<Self, Error> {
        if f.is_strictly_convex() && kind.is_maximization() {
            return Err(Error::invalid(
                "strictly convex functions pair with the minimization kinds only",
            ));
        }
        Ok(ObjectiveSpec { kind, f })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn function(&self) -> ObjectiveFunction {
        self.f
    }

    /// Aggregates `f` over machine loads according to the kind.
    pub fn aggregate_loads(&self, loads: &[u64]) -> u128 {
        let values = loads.iter().map(|&l| self.f.evaluate(l));
        match self.kind {
            ObjectiveKind::SumMin | ObjectiveKind::SumMax => values.sum(),
            ObjectiveKind::MinMax => values.max().unwrap_or(0),
            ObjectiveKind::MaxMin => values.min().unwrap_or(0),
        }
    }

    pub fn aggregate_loads_unsorted(&self, loads: &[u64]) -> u128 {
        self.aggregate_loads(loads)
    }

    /// The sensitivity parameter: for `f(x) = x^p` take `delta = eps/(3p)`
    /// (then `(1+delta)^p <= 1+eps` in the admissible range), for the
    /// identity `delta = eps`; both snapped down so `1/delta` is integral.
    /// The guarantee range of the downstream analysis is `eps <= 1/10`;
    /// values up to `1/3` are accepted for desk-scale experiments.
    pub fn delta_for(&self, eps: &BigRational) -> Result<BigRational, Error> {
        let third = BigRational::new(1.into(), 3.into());
        if !eps.is_positive() || eps > &third {
            return Err(Error::invalid("epsilon must lie in (0, 1/3]"));
        }
        let raw_inverse = match self.f {
            ObjectiveFunction::Identity => eps.recip(),
            ObjectiveFunction::Power(p) => {
                BigRational::from_integer((3 * p as u64).into()) / eps
            }
            ObjectiveFunction::Custom { delta_rule, .. } => {
                let delta = delta_rule(eps);
                if !delta.is_positive() || &delta > eps {
                    return Err(Error::invalid("custom delta rule must give 0 < delta <= eps"));
                }
                delta.recip()
            }
        };
        let lambda = ceil_rational(&raw_inverse);
        Ok(BigRational::new(1.into(), lambda.into()))
    }

    /// The constant `gamma` with `1/delta <= gamma/eps`.
    pub fn gamma(&self) -> u64 {
        match self.f {
            ObjectiveFunction::Identity => 2,
            ObjectiveFunction::Power(p) => 3 * p as u64 + 1,
            ObjectiveFunction::Custom { gamma, .. } => gamma,
        }
    }
}

fn ceil_rational(x: &BigRational) -> BigUint {
    let ceil = x.ceil();
    ceil.to_integer()
        .to_biguint()
        .expect("ceiling of a positive rational")
}

fn ceil_to_u64(x: &BigRational) -> u64 {
    ceil_rational(x).to_u64().expect("value fits u64 at desk scale")
}

/// Jobs pinned to their own machines because they are at least as large as
/// the (running) average load.
#[derive(Debug, Clone)]
pub struct SingletonPrefix {
    /// Original job indices in removal order; job `singletons[i]` occupies
    /// its own machine.
    pub singletons: Vec<usize>,
    /// `(original index, processing time)` of the remaining jobs.
    pub remaining: Vec<(usize, u64)>,
    pub remaining_machines: usize,
}

/// Repeatedly removes a job with `p_j >= L` (the current average load)
/// together with one machine. The largest such job goes first; ties break
/// toward the lower index.
pub fn preprocess_large(instance: &Instance) -> Result<SingletonPrefix, Error> {
    let mut remaining: Vec<(usize, u64)> = instance
        .processing_times()
        .iter()
        .copied()
        .enumerate()
        .collect();
    let mut machines = instance.machine_count();
    let mut singletons = Vec::new();
    loop {
        if remaining.is_empty() {
            break;
        }
        if machines == 0 {
            return Err(Error::invalid(
                "jobs remain but no machines are left for them",
            ));
        }
        let total: u128 = remaining.iter().map(|&(_, p)| p as u128).sum();
        // p >= total/machines compared in integers.
        let pick = remaining
            .iter()
            .enumerate()
            .filter(|(_, &(_, p))| p as u128 * machines as u128 >= total)
            .max_by(|a, b| (a.1 .1).cmp(&b.1 .1).then(b.1 .0.cmp(&a.1 .0)))
            .map(|(pos, _)| pos);
        match pick {
            Some(pos) => {
                let (j, _) = remaining.remove(pos);
                singletons.push(j);
                machines -= 1;
            }
            None => break,
        }
    }
    Ok(SingletonPrefix {
        singletons,
        remaining,
        remaining_machines: machines,
    })
}

/// Origin of one rounded size class of the general pipeline.
#[derive(Debug, Clone, Default)]
pub struct GenSizeClass {
    pub big_jobs: Vec<usize>,
    pub chunks: u64,
}

/// The rounded instance of the general pipeline, in units of
/// `L/lambda^2`. All sizes are integers at least `lambda`; the capacity is
/// `4*lambda^2` (four times the average load).
#[derive(Debug, Clone)]
pub struct GeneralRoundedInstance {
    pub lambda: u64,
    pub sizes: Vec<u64>,
    pub demand: Vec<u64>,
    pub machines: u64,
    pub capacity: u64,
    pub provenance: Vec<GenSizeClass>,
    /// Small jobs pooled into the chunks, descending by size.
    pub small_jobs: Vec<(usize, u64)>,
    /// Average load `L` of the input jobs (exact).
    pub average: BigRational,
    /// Average load of the stage-one (multiple-of-unit) instance; satisfies
    /// `L <= L' <= (1+2/lambda)L`.
    pub stage_one_average: BigRational,
}

impl GeneralRoundedInstance {
    pub fn dimension(&self) -> usize {
        self.sizes.len()
    }

    pub fn knapsack_spec(&self) -> KnapsackSpec {
        KnapsackSpec::new(self.sizes.clone(), self.capacity)
            .expect("rounded sizes fit the 4L capacity")
    }

    /// `L/lambda` in real units: the volume one chunk stands for.
    pub fn chunk_volume(&self) -> BigRational {
        &self.average / BigRational::from_integer(self.lambda.into())
    }
}

/// Two-stage rounding. Stage one rounds every job of size at least
/// `L/lambda` up to a multiple of `L/lambda^2` and pools the smaller jobs
/// into chunks of exactly `L/lambda`; this keeps the average within
/// `(1+2/lambda)L`. Stage two rounds every stage-one size up to the next
/// power of `1+delta` and then to the next unit multiple.
pub fn round_general(
    jobs: &[(usize, u64)],
    machines: u64,
    delta: &BigRational,
) -> Result<GeneralRoundedInstance, Error> {
    if jobs.is_empty() || machines == 0 {
        return Err(Error::invalid("round_general needs jobs and machines"));
    }
    let lambda = ceil_to_u64(&delta.recip());
    let total: u128 = jobs.iter().map(|&(_, p)| p as u128).sum();
    let average = BigRational::new(
        BigUint::from(total).into(),
        BigUint::from(machines).into(),
    );
    // unit = L/lambda^2; all arithmetic below works on unit counts.
    let lam2 = BigRational::from_integer((lambda * lambda).into());
    let to_units = |p: u64| -> BigRational {
        BigRational::from_integer(p.into()) / &average * &lam2
    };

    let mut big: Vec<(usize, u64)> = Vec::new(); // (index, stage-one units)
    let mut small: Vec<(usize, u64)> = Vec::new();
    for &(j, p) in jobs {
        // p >= L/lambda <=> p * m * lambda >= total
        if p as u128 * machines as u128 * lambda as u128 >= total {
            if p as u128 * machines as u128 >= total {
                return Err(Error::invalid(
                    "round_general requires all jobs below the average load",
                ));
            }
            let units = ceil_to_u64(&to_units(p));
            debug_assert!(units >= lambda && units <= lambda * lambda);
            big.push((j, units));
        } else {
            small.push((j, p));
        }
    }
    small.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let small_volume: u128 = small.iter().map(|&(_, p)| p as u128).sum();
    // chunks = ceil(S / (L/lambda)) = ceil(S*m*lambda / total)
    let chunks = if small_volume == 0 {
        0
    } else {
        let num = BigUint::from(small_volume) * BigUint::from(machines) * BigUint::from(lambda);
        let den = BigUint::from(total);
        ((num + &den - BigUint::one()) / den)
            .to_u64()
            .expect("chunk count fits u64")
    };

    // Stage-one average for the rounding contract check.
    let stage_one_units: u128 = big.iter().map(|&(_, u)| u as u128).sum::<u128>()
        + chunks as u128 * lambda as u128;
    let unit = &average / &lam2;
    let stage_one_average = BigRational::from_integer(BigUint::from(stage_one_units).into()) * &unit
        / BigRational::from_integer(machines.into());

    // Stage two: geometric rounding in units.
    let ratio = BigRational::new((lambda + 1).into(), lambda.into());
    let mut cache: HashMap<u64, u64> = HashMap::new();
    let mut geometric = |units: u64| -> u64 {
        *cache.entry(units).or_insert_with(|| {
            let target = BigRational::from_integer(units.into());
            let mut power = BigRational::one();
            while power < target {
                power *= &ratio;
            }
            ceil_to_u64(&power)
        })
    };

    let capacity = 4 * lambda * lambda;
    let mut classes: BTreeMap<u64, GenSizeClass> = BTreeMap::new();
    for &(j, units) in &big {
        let rounded = geometric(units);
        debug_assert!(rounded <= capacity);
        classes.entry(rounded).or_default().big_jobs.push(j);
    }
    if chunks > 0 {
        let rounded = geometric(lambda);
        debug_assert!(rounded <= capacity);
        classes.entry(rounded).or_default().chunks += chunks;
    }

    let mut sizes = Vec::with_capacity(classes.len());
    let mut demand = Vec::with_capacity(classes.len());
    let mut provenance = Vec::with_capacity(classes.len());
    for (size, class) in classes {
        sizes.push(size);
        demand.push(class.big_jobs.len() as u64 + class.chunks);
        provenance.push(class);
    }
    Ok(GeneralRoundedInstance {
        lambda,
        sizes,
        demand,
        machines,
        capacity,
        provenance,
        small_jobs: small,
        average,
        stage_one_average,
    })
}

/// Scaled configuration costs `ceil(f_c / (eps * f_min))`, keyed by load.
/// The zero configuration costs `f(0) = 0` and is kept outside the table;
/// `f_min` ranges over the nonzero configurations.
#[derive(Debug, Clone)]
pub struct CostTable {
    by_load: BTreeMap<u64, u64>,
    max_cost: u64,
    min_load: u64,
}

impl CostTable {
    pub fn cost_of_load(&self, load: u64) -> u64 {
        if load == 0 {
            return 0;
        }
        self.by_load[&load]
    }

    pub fn cost_of(&self, spec: &KnapsackSpec, c: &Configuration) -> u64 {
        self.cost_of_load(spec.weight(c) as u64)
    }

    pub fn max_cost(&self) -> u64 {
        self.max_cost
    }

    pub fn min_load(&self) -> u64 {
        self.min_load
    }
}

/// Scaled cost of one load value: `ceil(f(load) / (eps * f(min_load)))`
/// computed exactly. The physical unit of the loads cancels for the power
/// functions, so unit loads can be used directly.
fn scaled_cost(f: ObjectiveFunction, load: u64, min_load: u64, eps: &BigRational) -> u64 {
    let value = BigRational::from_integer(BigUint::from(f.evaluate(load)).into());
    let fmin = BigRational::from_integer(BigUint::from(f.evaluate(min_load)).into());
    let scaled = value / (eps * fmin);
    ceil_to_u64(&scaled)
}

/// Builds the scaled cost table over `Q`, reporting the largest entry.
/// Configurations share costs whenever they share loads, so the table is
/// computed over the distinct reachable loads (an unbounded-knapsack
/// reachability pass) rather than by enumerating `Q` itself.
pub fn build_cost_table(
    spec: &KnapsackSpec,
    f: ObjectiveFunction,
    eps: &BigRational,
    enumeration_cap: u64,
) -> Result<CostTable, Error> {
    let capacity = spec.capacity();
    if capacity.saturating_mul(spec.dimension() as u64) > enumeration_cap {
        return Err(Error::CapExceeded {
            what: "cost table loads",
            limit: enumeration_cap,
        });
    }
    let mut reachable = vec![false; capacity as usize + 1];
    reachable[0] = true;
    for &s in spec.sizes() {
        for load in s..=capacity {
            if reachable[(load - s) as usize] {
                reachable[load as usize] = true;
            }
        }
    }
    let loads: BTreeSet<u64> = (1..=capacity).filter(|&l| reachable[l as usize]).collect();
    let min_load = loads
        .iter()
        .next()
        .copied()
        .ok_or_else(|| Error::invalid("no nonzero configuration exists"))?;
    let mut by_load = BTreeMap::new();
    let mut max_cost = 0;
    for &load in &loads {
        let cost = scaled_cost(f, load, min_load, eps);
        debug_assert!(cost >= 1);
        max_cost = max_cost.max(cost);
        by_load.insert(load, cost);
    }
    Ok(CostTable {
        by_load,
        max_cost,
        min_load,
    })
}

/// Rewrites an optimal solution load class by load class into one whose
/// restriction to every class is thin, without changing the objective:
/// scaled costs depend only on the load, and the class demands and machine
/// counts are preserved exactly.
pub fn thin_gen(spec: &KnapsackSpec, x: &ConfSolution) -> Result<ConfSolution, Error> {
    let mut by_load: BTreeMap<u64, Vec<(Configuration, u64)>> = BTreeMap::new();
    for (c, &v) in x.multiplicities() {
        by_load
            .entry(spec.weight(c) as u64)
            .or_default()
            .push((c.clone(), v));
    }
    let mut merged: Vec<(Configuration, u64)> = Vec::new();
    for (load, entries) in by_load {
        let class_solution = ConfSolution::from_entries(entries.clone());
        if load == 0 {
            merged.extend(entries);
            continue;
        }
        let demand: Vec<u64> = class_solution
            .covered_demand(spec.dimension())
            .iter()
            .map(|&v| v as u64)
            .collect();
        let ip = ConfIp::new(spec.clone(), demand, class_solution.machine_count())?;
        let thin = ip.make_thin(&class_solution)?;
        // Sparsification preserves the weight, so the rewritten class stays
        // inside its own load class.
        debug_assert!(thin
            .multiplicities()
            .keys()
            .all(|c| spec.weight(c) as u64 == load));
        merged.extend(thin.multiplicities().iter().map(|(c, &v)| (c.clone(), v)));
    }
    Ok(ConfSolution::from_entries(merged))
}

/// How the rounded objective problem is optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    /// Class-demand dynamic program over scaled costs, then a per-load-class
    /// thinning pass on the optimal solution.
    Paper,
    /// Exhaustive assignment search on the rounded instance.
    Oracle,
}

/// Budgets for the objective pipeline.
#[derive(Debug, Clone)]
pub struct ObjectiveBudgets {
    pub enumeration_cap: u64,
    pub state_cap: u64,
    pub oracle: OracleBudget,
}

impl Default for ObjectiveBudgets {
    fn default() -> Self {
        ObjectiveBudgets {
            enumeration_cap: 10_000_000,
            state_cap: 10_000_000,
            oracle: OracleBudget::default(),
        }
    }
}

/// Run metadata for [`solve_objective`].
#[derive(Debug, Clone)]
pub struct ObjectiveReport {
    pub delta: BigRational,
    pub lambda: u64,
    /// `(1+eps)^4` for minimization, `(1-eps)^-4` for maximization: the
    /// composed slack of the rounding, chunk refill, scaled costs, and the
    /// sensitivity condition applications.
    pub composed_factor: BigRational,
    pub max_scaled_cost: Option<u64>,
}

fn composed_objective_factor(kind: ObjectiveKind, eps: &BigRational) -> BigRational {
    let one = BigRational::one();
    if kind.is_maximization() {
        let shrink = &one - eps;
        (one.clone() / &shrink).pow(4)
    } else {
        (&one + eps).pow(4)
    }
}

/// Exact optimum of the rounded instance under the scaled costs, by a
/// memoized search over class demands: jobs are placed one at a time on
/// machines deduplicated by load, honoring the capacity.
struct RoundedSearch<'a> {
    sizes: Vec<u64>,
    class_of: Vec<usize>,
    capacity: u64,
    machines: usize,
    kind: ObjectiveKind,
    cost: &'a CostTable,
    memo: HashMap<(usize, Vec<u64>), Option<u128>>,
    state_cap: u64,
}

impl RoundedSearch<'_> {
    fn machine_value(&self, load: u64) -> u128 {
        self.cost.cost_of_load(load) as u128
    }

    fn aggregate(&self, loads: &[u64]) -> u128 {
        let values = loads.iter().map(|&l| self.machine_value(l));
        match self.kind {
            ObjectiveKind::SumMin | ObjectiveKind::SumMax => values.sum(),
            ObjectiveKind::MinMax => values.max().unwrap_or(0),
            ObjectiveKind::MaxMin => values.min().unwrap_or(0),
        }
    }

    fn value(&mut self, idx: usize, loads: &[u64]) -> Result<Option<u128>, Error> {
        if idx == self.sizes.len() {
            return Ok(Some(self.aggregate(loads)));
        }
        let key = (idx, loads.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        if self.memo.len() as u64 >= self.state_cap {
            return Err(Error::CapExceeded {
                what: "rounded objective states",
                limit: self.state_cap,
            });
        }
        let p = self.sizes[idx];
        let mut best: Option<u128> = None;
        let mut seen = BTreeSet::new();
        for i in 0..self.machines {
            if loads[i] + p > self.capacity {
                continue;
            }
            if !seen.insert(loads[i]) {
                continue;
            }
            let mut child = loads.to_vec();
            child[i] += p;
            child.sort_unstable();
            if let Some(v) = self.value(idx + 1, &child)? {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        if self.kind.is_maximization() {
                            b.max(v)
                        } else {
                            b.min(v)
                        }
                    }
                });
            }
        }
        self.memo.insert(key, best);
        Ok(best)
    }

    /// Replays the optimum into per-machine class-count vectors.
    fn reconstruct(&mut self) -> Result<(u128, Vec<Vec<u64>>), Error> {
        let zeros = vec![0u64; self.machines];
        let best = self
            .value(0, &zeros)?
            .ok_or_else(|| Error::infeasible("rounded instance does not fit 4L capacity"))?;
        let class_count = self.class_of.iter().max().map_or(0, |&c| c + 1);
        let mut actual = vec![0u64; self.machines];
        let mut counts = vec![vec![0u64; class_count]; self.machines];
        for idx in 0..self.sizes.len() {
            let p = self.sizes[idx];
            let mut canon = actual.clone();
            canon.sort_unstable();
            let target = self.value(idx, &canon)?.expect("prefix of the optimum");
            let mut seen = BTreeSet::new();
            let mut advanced = false;
            for i in 0..self.machines {
                if actual[i] + p > self.capacity || !seen.insert(actual[i]) {
                    continue;
                }
                let mut child = actual.clone();
                child[i] += p;
                child.sort_unstable();
                if self.value(idx + 1, &child)? == Some(target) {
                    actual[i] += p;
                    counts[i][self.class_of[idx]] += 1;
                    advanced = true;
                    break;
                }
            }
            assert!(advanced, "replay lost the optimum");
        }
        Ok((best, counts))
    }
}

/// A complete run of the general objective pipeline.
pub fn solve_objective(
    instance: &Instance,
    eps: &BigRational,
    spec: &ObjectiveSpec,
    mode: ObjectiveMode,
    budgets: &ObjectiveBudgets,
) -> Result<(Schedule, u128, ObjectiveReport), Error> {
    let delta = spec.delta_for(eps)?;
    let lambda = ceil_to_u64(&delta.recip());
    let prefix = preprocess_large(instance)?;

    let mut assignment = vec![usize::MAX; instance.job_count()];
    let solved_machines = prefix.remaining_machines;
    for (offset, &j) in prefix.singletons.iter().enumerate() {
        assignment[j] = solved_machines + offset;
    }

    let mut report = ObjectiveReport {
        delta: delta.clone(),
        lambda,
        composed_factor: composed_objective_factor(spec.kind(), eps),
        max_scaled_cost: None,
    };

    if prefix.remaining.is_empty() {
        // Only singleton machines remain (plus idle ones, if any).
        for slot in assignment.iter_mut() {
            assert!(*slot != usize::MAX);
        }
        let schedule = Schedule::new(instance, assignment)?;
        let value = spec.aggregate_loads_unsorted(schedule.loads());
        return Ok((schedule, value, report));
    }

    let rounded = round_general(&prefix.remaining, solved_machines as u64, &delta)?;
    let kspec = rounded.knapsack_spec();
    let cost = build_cost_table(&kspec, spec.function(), eps, budgets.enumeration_cap)?;
    report.max_scaled_cost = Some(cost.max_cost());

    // Expand the rounded classes into a descending job list.
    let mut expanded: Vec<(usize, u64)> = Vec::new();
    for (k, &count) in rounded.demand.iter().enumerate() {
        for _ in 0..count {
            expanded.push((k, rounded.sizes[k]));
        }
    }
    expanded.sort_by_key(|&(_, s)| std::cmp::Reverse(s));

    let machine_counts: Vec<Vec<u64>> = match mode {
        ObjectiveMode::Paper => {
            let mut search = RoundedSearch {
                sizes: expanded.iter().map(|&(_, s)| s).collect(),
                class_of: expanded.iter().map(|&(k, _)| k).collect(),
                capacity: rounded.capacity,
                machines: solved_machines,
                kind: spec.kind(),
                cost: &cost,
                memo: HashMap::new(),
                state_cap: budgets.state_cap,
            };
            let (_scaled_value, counts) = search.reconstruct()?;
            // Structural pass: rewrite the optimum so every load class is
            // thin; the objective value is untouched because scaled costs
            // are load-class functions.
            let solution = ConfSolution::from_entries(
                counts
                    .iter()
                    .map(|c| (Configuration::new(c.clone()), 1u64)),
            );
            let thinned = thin_gen(&kspec, &solution)?;
            let scaled_of = |s: &ConfSolution| -> u128 {
                s.multiplicities()
                    .iter()
                    .map(|(c, &v)| v as u128 * cost.cost_of(&kspec, c) as u128)
                    .sum()
            };
            debug_assert_eq!(scaled_of(&solution), scaled_of(&thinned));
            expand_solution_to_machines(&thinned, solved_machines, kspec.dimension())?
        }
        ObjectiveMode::Oracle => {
            let materialized = Instance::new(
                expanded.iter().map(|&(_, s)| s).collect(),
                solved_machines,
            )?;
            let (_, rounded_schedule) = oracle::opt_objective(&materialized, spec, &budgets.oracle)?;
            let mut counts = vec![vec![0u64; rounded.dimension()]; solved_machines];
            for (pos, &machine) in rounded_schedule.assignment().iter().enumerate() {
                counts[machine][expanded[pos].0] += 1;
            }
            counts
        }
    };

    // Reconstruction: big jobs by class pools, chunks refilled greedily
    // with the pooled small jobs.
    let d = rounded.dimension();
    enum Token {
        Big(usize),
        Chunk,
    }
    let mut pools: Vec<std::collections::VecDeque<Token>> = rounded
        .provenance
        .iter()
        .map(|class| {
            let mut pool: std::collections::VecDeque<Token> =
                class.big_jobs.iter().map(|&j| Token::Big(j)).collect();
            for _ in 0..class.chunks {
                pool.push_back(Token::Chunk);
            }
            pool
        })
        .collect();
    let mut chunks_per_machine = vec![0u64; solved_machines];
    for (i, counts) in machine_counts.iter().enumerate() {
        for k in 0..d {
            for _ in 0..counts[k] {
                match pools[k].pop_front() {
                    Some(Token::Big(j)) => assignment[j] = i,
                    Some(Token::Chunk) => chunks_per_machine[i] += 1,
                    None => return Err(Error::invalid("solution does not match the demand")),
                }
            }
        }
    }
    debug_assert!(pools.iter().all(|p| p.is_empty()));

    // filled < chunks_i * L/lambda, compared exactly:
    // filled * m * lambda < chunks_i * total.
    let total: u128 = prefix.remaining.iter().map(|&(_, p)| p as u128).sum();
    let m_lambda = solved_machines as u128 * rounded.lambda as u128;
    let mut smalls = rounded.small_jobs.iter();
    for (i, &chunks) in chunks_per_machine.iter().enumerate() {
        let target = chunks as u128 * total;
        let mut filled: u128 = 0;
        while filled * m_lambda < target {
            match smalls.next() {
                Some(&(j, p)) => {
                    assignment[j] = i;
                    filled += p as u128;
                }
                None => break,
            }
        }
    }
    if smalls.next().is_some() {
        return Err(Error::invalid(
            "internal: chunk volume failed to absorb all small jobs",
        ));
    }

    debug_assert!(assignment.iter().all(|&i| i != usize::MAX));
    let schedule = Schedule::new(instance, assignment)?;
    let value = spec.aggregate_loads_unsorted(schedule.loads());
    Ok((schedule, value, report))
}

fn expand_solution_to_machines(
    solution: &ConfSolution,
    machines: usize,
    dimension: usize,
) -> Result<Vec<Vec<u64>>, Error> {
    let mut out = Vec::with_capacity(machines);
    for (c, &v) in solution.multiplicities() {
        for _ in 0..v {
            out.push(c.counts().to_vec());
        }
    }
    while out.len() < machines {
        out.push(vec![0; dimension]);
    }
    if out.len() != machines {
        return Err(Error::invalid("solution uses more machines than available"));
    }
    Ok(out)
}

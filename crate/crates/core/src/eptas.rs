//! The full `(1+eps)`-approximation pipeline for makespan scheduling on
//! identical machines.
//!
//! Stages, each with its tracked slack factor:
//!
//! 1. list scheduling in longest-processing-time order for a 2-approximate
//!    starting value `B`, then dual-approximation binary search over the
//!    integer target `T` in `[ceil(B/2), B]` (slack `1+eps`);
//! 2. small jobs (below `eps*T`) are replaced by placeholder jobs of size
//!    exactly `eps*T` covering their total volume, rounded up (the refill
//!    at the end costs at most `eps*T` extra load per machine);
//! 3. the remaining big jobs are scaled so the target becomes `1/eps^2` and
//!    rounded up to the next power of `1+eps`, then to the next integer;
//!    a packing into capacity `floor((1+5*eps)/eps^2)` exists whenever the
//!    original target was achievable (slack `1+5*eps`);
//! 4. the rounded packing problem is decided exactly through the
//!    configuration IP: either by guessing the demand handled by complex
//!    configurations, packing it with a minimum-machines dynamic program
//!    and solving the rest over simple configurations, or (oracle mode) by
//!    the exhaustive demand-vector dynamic program.
//!
//! The composed factor `(1+eps)^2 (1+5*eps)` is reported with every run and
//! the returned schedule is always verified against it.

use std::collections::VecDeque;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::confip::{ConfIp, ConfSolution};
use crate::error::Error;
use crate::instance::{Instance, Schedule};
use crate::knapsack::{ceil_log_bound, Configuration, KnapsackSpec};
use crate::oracle::{self, OracleBudget};
use crate::solver::{self, RestrictedConfIp, SolveLimits};

/// Error tolerance `eps = 1/q` with `q >= 4`, so `1/eps^2 = q^2` is integral
/// and `eps < 1/3` as the rounding arguments require.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Epsilon {
    inverse: u64,
}

impl Epsilon {
    pub fn new(inverse: u64) -> Result<Self, Error> {
        if inverse < 4 {
            return Err(Error::invalid(
                "epsilon must be 1/q with q >= 4 so that eps < 1/3",
            ));
        }
        if inverse > 1 << 20 {
            return Err(Error::invalid(
                "epsilon below 2^-20 is outside the supported desk scale",
            ));
        }
        Ok(Epsilon { inverse })
    }

    /// Accepts any `q >= 2`. Values below 4 leave the guaranteed tolerance
    /// range and are meant for desk experiments only.
    pub fn new_unchecked(inverse: u64) -> Self {
        assert!(inverse >= 2);
        Epsilon { inverse }
    }

    /// Parses the CLI form `1/q`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let q = text
            .strip_prefix("1/")
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| Error::invalid(format!("epsilon {text:?} must have the form 1/q")))?;
        Epsilon::new(q)
    }

    pub fn inverse(&self) -> u64 {
        self.inverse
    }

    /// `1/eps^2`, the scaled makespan target.
    pub fn inverse_sq(&self) -> u64 {
        self.inverse * self.inverse
    }

    pub fn value(&self) -> BigRational {
        BigRational::new(1.into(), self.inverse.into())
    }

    /// `(1+eps)(1+5eps)(1+eps)`: binary-search slack, rounding slack, and
    /// small-job refill slack composed.
    pub fn composed_factor(&self) -> BigRational {
        let q = BigRational::from_integer(self.inverse.into());
        let one = BigRational::one();
        (&one + &one / &q) * (&one + BigRational::from_integer(5.into()) / &q) * (one.clone() + one / q)
    }
}

/// Greedy list schedule in longest-processing-time order: jobs sorted by
/// descending processing time, each placed on the currently least-loaded
/// machine (ties resolved toward the lowest machine index). The makespan is
/// at most twice the optimum.
pub fn graham_list(instance: &Instance) -> Schedule {
    let mut order: Vec<usize> = (0..instance.job_count()).collect();
    order.sort_by(|&a, &b| {
        instance.processing_times()[b]
            .cmp(&instance.processing_times()[a])
            .then(a.cmp(&b))
    });
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, usize)>> =
        (0..instance.machine_count())
            .map(|i| std::cmp::Reverse((0u64, i)))
            .collect();
    let mut assignment = vec![0usize; instance.job_count()];
    for j in order {
        let std::cmp::Reverse((load, i)) = heap.pop().unwrap();
        assignment[j] = i;
        heap.push(std::cmp::Reverse((load + instance.processing_times()[j], i)));
    }
    Schedule::new(instance, assignment).expect("list schedule is always consistent")
}

/// Output of the big/small reduction at target `t`: big jobs keep their
/// identity, small jobs are summarized by placeholders of size exactly
/// `eps*t` (held in `q`-units so all arithmetic stays integral).
#[derive(Debug, Clone)]
pub struct BigJobReduction {
    pub target: u64,
    pub inverse_eps: u64,
    /// `(original index, processing time)` of jobs with `p >= eps*t`.
    pub big_jobs: Vec<(usize, u64)>,
    /// Small jobs sorted by descending processing time (ties by index).
    pub small_jobs: Vec<(usize, u64)>,
    /// `ceil(S / (eps*t))` placeholders, `S` the total small volume.
    pub placeholder_count: u64,
}

/// Splits jobs at `eps*t` and covers the small volume by placeholders.
/// Requires `t >= max_j p_j`; a smaller target can never be met.
pub fn reduce_small_jobs(
    instance: &Instance,
    t: u64,
    eps: Epsilon,
) -> Result<BigJobReduction, Error> {
    if t < instance.max_processing_time() {
        return Err(Error::invalid(format!(
            "target {t} is below the largest processing time {}",
            instance.max_processing_time()
        )));
    }
    let q = eps.inverse();
    let mut big_jobs = Vec::new();
    let mut small_jobs = Vec::new();
    for (j, &p) in instance.processing_times().iter().enumerate() {
        // p >= t/q compared in integers.
        if p as u128 * q as u128 >= t as u128 {
            big_jobs.push((j, p));
        } else {
            small_jobs.push((j, p));
        }
    }
    small_jobs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let small_volume: u128 = small_jobs.iter().map(|&(_, p)| p as u128).sum();
    let placeholder_count = small_volume
        .saturating_mul(q as u128)
        .div_ceil(t as u128) as u64;
    Ok(BigJobReduction {
        target: t,
        inverse_eps: q,
        big_jobs,
        small_jobs,
        placeholder_count,
    })
}

/// Origin of one rounded size class.
#[derive(Debug, Clone, Default)]
pub struct SizeClass {
    /// Original indices of big jobs rounded into this class, ascending.
    pub big_jobs: Vec<usize>,
    /// Number of placeholders rounded into this class.
    pub placeholders: u64,
}

/// The rounded instance in scaled units: distinct sizes, their demands, and
/// the capacity `floor((1+5eps)/eps^2) = q^2 + 5q`.
#[derive(Debug, Clone)]
pub struct RoundedInstance {
    pub sizes: Vec<u64>,
    pub demand: Vec<u64>,
    pub machines: u64,
    pub capacity: u64,
    pub provenance: Vec<SizeClass>,
}

impl RoundedInstance {
    pub fn dimension(&self) -> usize {
        self.sizes.len()
    }

    pub fn knapsack_spec(&self) -> KnapsackSpec {
        KnapsackSpec::new(self.sizes.clone(), self.capacity)
            .expect("rounded sizes always fit the capacity")
    }
}

/// Rounds one scaled size up to the next power of `1+eps` and then up to the
/// next integer, exactly.
fn round_scaled(scaled: &BigRational, eps: Epsilon) -> u64 {
    let q = eps.inverse();
    let ratio = BigRational::new((q + 1).into(), q.into());
    let mut power = BigRational::one();
    while &power < scaled {
        power *= &ratio;
    }
    // ceil(power)
    let ceil = (power.numer() + power.denom() - BigRational::one().numer())
        .checked_div(power.denom())
        .expect("positive denominator");
    ceil.to_u64().expect("rounded sizes stay within u64")
}

/// Scales the reduced job set so the target becomes `1/eps^2` and rounds
/// every size up geometrically. Placeholders scale to exactly `1/eps`.
pub fn scale_and_round(
    reduction: &BigJobReduction,
    eps: Epsilon,
    machines: u64,
) -> Result<RoundedInstance, Error> {
    let q = eps.inverse();
    let t = reduction.target;
    let scale = BigRational::new((q * q).into(), t.into());
    let capacity = q * q + 5 * q;

    // (rounded size, class origin) keyed by rounded size.
    let mut classes: std::collections::BTreeMap<u64, SizeClass> = std::collections::BTreeMap::new();
    let mut cache: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    for &(j, p) in &reduction.big_jobs {
        debug_assert!(p as u128 * q as u128 >= t as u128 && p <= t);
        let rounded = *cache.entry(p).or_insert_with(|| {
            let scaled = BigRational::from_integer(p.into()) * &scale;
            round_scaled(&scaled, eps)
        });
        classes.entry(rounded).or_default().big_jobs.push(j);
    }
    if reduction.placeholder_count > 0 {
        let rounded = round_scaled(&BigRational::from_integer(q.into()), eps);
        classes.entry(rounded).or_default().placeholders += reduction.placeholder_count;
    }

    let mut sizes = Vec::with_capacity(classes.len());
    let mut demand = Vec::with_capacity(classes.len());
    let mut provenance = Vec::with_capacity(classes.len());
    for (size, class) in classes {
        debug_assert!(size >= q && size <= q * q + q + 1);
        debug_assert!(size <= capacity);
        sizes.push(size);
        demand.push(class.big_jobs.len() as u64 + class.placeholders);
        provenance.push(class);
    }
    Ok(RoundedInstance {
        sizes,
        demand,
        machines,
        capacity,
        provenance,
    })
}

/// How the rounded packing decision is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecideMode {
    /// Complex-demand guessing, minimum-machines DP, and an exact solve
    /// over simple configurations.
    Paper,
    /// The exhaustive demand-vector DP from the oracle module.
    Oracle,
}

/// Budgets for the decision machinery.
#[derive(Debug, Clone)]
pub struct PipelineBudgets {
    /// Cap on enumerated configurations.
    pub enumeration_cap: u64,
    /// Cap on guessed complex-demand vectors per decision.
    pub complex_demand_budget: u64,
    /// Cap on the minimum-machines DP state space.
    pub dp_state_cap: u64,
    pub solver: SolveLimits,
    pub oracle: OracleBudget,
}

impl Default for PipelineBudgets {
    fn default() -> Self {
        PipelineBudgets {
            enumeration_cap: 10_000_000,
            complex_demand_budget: 1_000_000,
            dp_state_cap: 1_000_000,
            solver: SolveLimits::default(),
            oracle: OracleBudget::default(),
        }
    }
}

/// Minimum number of capacity-`T` machines needed to cover exactly the
/// demand `sub`, if it is at most `cap`; `None` otherwise. Dynamic program
/// over partial demand vectors.
pub fn min_machines_dp(
    sub: &[u64],
    spec: &KnapsackSpec,
    cap: u64,
    state_cap: u64,
) -> Result<Option<u64>, Error> {
    Ok(min_machines_dp_witness(sub, spec, cap, state_cap)?.map(|(count, _)| count))
}

fn min_machines_dp_witness(
    sub: &[u64],
    spec: &KnapsackSpec,
    cap: u64,
    state_cap: u64,
) -> Result<Option<(u64, Vec<Configuration>)>, Error> {
    let d = spec.dimension();
    let mut states: u64 = 1;
    for &b in sub {
        states = states.saturating_mul(b + 1);
    }
    if states > state_cap {
        return Err(Error::CapExceeded {
            what: "min-machines DP states",
            limit: state_cap,
        });
    }
    let total = states as usize;
    let configs = spec.enumerate_within(sub, state_cap)?;
    let mut stride = vec![1usize; d];
    for k in 1..d {
        stride[k] = stride[k - 1] * (sub[k - 1] as usize + 1);
    }
    const INF: u32 = u32::MAX;
    let mut dist = vec![INF; total];
    let mut parent = vec![u32::MAX; total];
    dist[0] = 0;
    let moves: Vec<(usize, &Configuration)> = configs
        .iter()
        .filter(|c| !c.is_zero())
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
        if dist[s] != INF && (dist[s] as u64) < cap.min(u32::MAX as u64 - 1) + 1 {
            for (qi, &(offset, c)) in moves.iter().enumerate() {
                if c.counts().iter().zip(&z).zip(sub).all(|((&v, &have), &b)| have + v <= b) {
                    let ns = s + offset;
                    if dist[s] + 1 < dist[ns] {
                        dist[ns] = dist[s] + 1;
                        parent[ns] = qi as u32;
                    }
                }
            }
        }
        for k in 0..d {
            if z[k] < sub[k] {
                z[k] += 1;
                break;
            }
            z[k] = 0;
        }
    }
    let target = total - 1;
    if dist[target] == INF || dist[target] as u64 > cap {
        return Ok(None);
    }
    let mut witness = Vec::new();
    let mut s = target;
    while s != 0 {
        let (offset, c) = moves[parent[s] as usize];
        witness.push((*c).clone());
        s -= offset;
    }
    Ok(Some((dist[target] as u64, witness)))
}

/// Decides whether the rounded demand packs into `machines` bins of the
/// rounded capacity, returning a packing certificate if so. Exact in both
/// modes; budget exhaustion is an error, never a silent verdict.
pub fn decide_makespan(
    rounded: &RoundedInstance,
    mode: DecideMode,
    budgets: &PipelineBudgets,
) -> Result<Option<ConfSolution>, Error> {
    let spec = rounded.knapsack_spec();
    let ip = ConfIp::new(spec.clone(), rounded.demand.clone(), rounded.machines)?;
    if !ip.volume_feasible() {
        return Ok(None);
    }
    match mode {
        DecideMode::Oracle => oracle::confip_feasible(&ip, &budgets.oracle),
        DecideMode::Paper => decide_paper(&spec, &ip, rounded, budgets),
    }
}

fn decide_paper(
    spec: &KnapsackSpec,
    ip: &ConfIp,
    rounded: &RoundedInstance,
    budgets: &PipelineBudgets,
) -> Result<Option<ConfSolution>, Error> {
    let d = spec.dimension();
    let t = spec.capacity();
    let b = &rounded.demand;
    // Only configurations below the demand can ever be used.
    let all = spec.enumerate_within(b, budgets.enumeration_cap)?;
    let simple: Vec<Configuration> = all.iter().filter(|c| spec.is_simple(c)).cloned().collect();
    let any_complex = all.len() != simple.len();

    let solve_rest = |bc: &[u64], used_machines: u64| -> Result<Option<ConfSolution>, Error> {
        let rest_demand: Vec<u64> = b.iter().zip(bc).map(|(&x, &y)| x - y).collect();
        let rest = ConfIp::new(
            spec.clone(),
            rest_demand,
            rounded.machines - used_machines,
        )?;
        let restricted = RestrictedConfIp::new(rest, simple.clone())?;
        solver::solve_feasibility(&restricted, &budgets.solver)
    };

    if !any_complex {
        // No complex configuration exists below the demand; the only valid
        // complex-demand guess is zero.
        return solve_rest(&vec![0; d], 0);
    }

    // Guessing bounds: at most ceil(2(d+1)log2(4(d+1)T)) machines follow
    // complex configurations, each holding at most T/min_size jobs.
    let mc_cap = ceil_log_bound(2 * (d as u64 + 1), 4 * (d as u64 + 1) * t).min(rounded.machines);
    let job_cap = mc_cap * (t / spec.sizes().iter().min().copied().unwrap_or(1));

    let mut bc = vec![0u64; d];
    let mut guesses: u64 = 0;
    loop {
        guesses += 1;
        if guesses > budgets.complex_demand_budget {
            return Err(Error::CapExceeded {
                what: "complex-demand guesses",
                limit: budgets.complex_demand_budget,
            });
        }
        let job_total: u64 = bc.iter().sum();
        if job_total <= job_cap {
            match min_machines_dp_witness(&bc, spec, mc_cap, budgets.dp_state_cap)? {
                Some((used, witness)) if used <= rounded.machines => {
                    if let Some(rest) = solve_rest(&bc, used)? {
                        let mut entries: Vec<(Configuration, u64)> =
                            witness.into_iter().map(|c| (c, 1)).collect();
                        entries.extend(
                            rest.multiplicities()
                                .iter()
                                .map(|(c, &v)| (c.clone(), v)),
                        );
                        let solution = ConfSolution::from_entries(entries);
                        debug_assert!(ip.check_feasible_solution(&solution).unwrap());
                        return Ok(Some(solution));
                    }
                }
                _ => {}
            }
        }
        // Advance the colexicographic odometer over 0..=b.
        let mut k = 0;
        loop {
            if k == d {
                return Ok(None);
            }
            if bc[k] < b[k] {
                bc[k] += 1;
                break;
            }
            bc[k] = 0;
            k += 1;
        }
    }
}

/// What `solve` did, alongside the schedule.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final target accepted by the dual-approximation search.
    pub chosen_target: u64,
    /// Exact composed approximation factor `(1+eps)^2 (1+5eps)`.
    pub composed_factor: BigRational,
    /// Binary-search trace: `(target, packable)` per decision.
    pub decisions: Vec<(u64, bool)>,
    /// Smallest scaled capacity that still packs at the chosen target; the
    /// returned schedule is reconstructed from this packing.
    pub refined_capacity: u64,
    /// Capacity-refinement trace: `(capacity, packable)` per decision.
    pub capacity_probes: Vec<(u64, bool)>,
}

/// Options for [`solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: DecideMode,
    pub budgets: PipelineBudgets,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: DecideMode::Paper,
            budgets: PipelineBudgets::default(),
        }
    }
}

fn decide_at(
    instance: &Instance,
    t: u64,
    eps: Epsilon,
    options: &SolveOptions,
) -> Result<Option<(BigJobReduction, RoundedInstance, ConfSolution)>, Error> {
    let reduction = reduce_small_jobs(instance, t, eps)?;
    let rounded = scale_and_round(&reduction, eps, instance.machine_count() as u64)?;
    Ok(decide_makespan(&rounded, options.mode, &options.budgets)?
        .map(|certificate| (reduction, rounded, certificate)))
}

/// Complete `(1+eps)`-approximate schedule for the instance, with the run
/// report. The makespan is verified against `(1+eps)(1+5eps) * T` before
/// returning.
pub fn solve(
    instance: &Instance,
    eps: Epsilon,
    options: &SolveOptions,
) -> Result<(Schedule, SolveReport), Error> {
    let start = graham_list(instance);
    let b_value = start.makespan();
    let mut low = instance
        .makespan_lower_bound()
        .max(b_value.div_ceil(2));
    let mut high = b_value;
    let q = eps.inverse();
    let mut decisions = Vec::new();
    while q as u128 * (high - low) as u128 > low as u128 {
        let mid = low + (high - low) / 2;
        let verdict = decide_at(instance, mid, eps, options)?;
        decisions.push((mid, verdict.is_some()));
        match verdict {
            Some(_) => high = mid,
            // An exact "no packing" at mid certifies OPT > mid.
            None => low = mid + 1,
        }
    }
    let (reduction, rounded, mut certificate) = decide_at(instance, high, eps, options)?
        .ok_or_else(|| {
            Error::invalid("internal: the certified upper bound failed to pack".to_string())
        })?;
    decisions.push((high, true));

    // Caping the packing at (1+5eps)T is what the existence argument
    // needs, but any packing up to that slack would do, including poor
    // ones. The decision is monotone in the capacity, so a short binary
    // search finds the tightest capacity that still packs and the final
    // schedule is rebuilt from that certificate.
    let mut capacity_probes = Vec::new();
    let volume: u128 = rounded
        .demand
        .iter()
        .zip(&rounded.sizes)
        .map(|(&b, &s)| b as u128 * s as u128)
        .sum();
    let mut cap_low = (volume.div_ceil(rounded.machines.max(1) as u128) as u64)
        .max(rounded.sizes.iter().copied().max().unwrap_or(1));
    let mut cap_high = rounded.capacity;
    while cap_low < cap_high {
        let mid = cap_low + (cap_high - cap_low) / 2;
        let probe = RoundedInstance {
            capacity: mid,
            ..rounded.clone()
        };
        match decide_makespan(&probe, options.mode, &options.budgets)? {
            Some(better) => {
                certificate = better;
                cap_high = mid;
                capacity_probes.push((mid, true));
            }
            None => {
                cap_low = mid + 1;
                capacity_probes.push((mid, false));
            }
        }
    }

    let schedule = reconstruct(instance, &reduction, &rounded, &certificate)?;
    // makespan <= (1+eps)(1+5eps) * T, checked exactly in integers.
    let lhs = schedule.makespan() as u128 * (q as u128 * q as u128);
    let rhs = (q as u128 + 1) * (q as u128 + 5) * high as u128;
    assert!(lhs <= rhs, "schedule exceeded the guaranteed factor");
    Ok((
        schedule,
        SolveReport {
            chosen_target: high,
            composed_factor: eps.composed_factor(),
            decisions,
            refined_capacity: cap_high,
            capacity_probes,
        },
    ))
}

/// Turns a packing certificate of the rounded instance back into a schedule
/// of the original jobs: big jobs land where their size class is used,
/// placeholders are refilled greedily with small jobs in descending size
/// until each machine's placeholder volume is exceeded.
fn reconstruct(
    instance: &Instance,
    reduction: &BigJobReduction,
    rounded: &RoundedInstance,
    certificate: &ConfSolution,
) -> Result<Schedule, Error> {
    let m = instance.machine_count();
    let d = rounded.dimension();
    let q = reduction.inverse_eps;
    let t = reduction.target;

    enum Token {
        Big(usize),
        Placeholder,
    }
    let mut pools: Vec<VecDeque<Token>> = rounded
        .provenance
        .iter()
        .map(|class| {
            let mut pool: VecDeque<Token> =
                class.big_jobs.iter().map(|&j| Token::Big(j)).collect();
            for _ in 0..class.placeholders {
                pool.push_back(Token::Placeholder);
            }
            pool
        })
        .collect();

    let mut machine_configs: Vec<&Configuration> = Vec::with_capacity(m);
    for (c, &count) in certificate.multiplicities() {
        for _ in 0..count {
            machine_configs.push(c);
        }
    }
    if machine_configs.len() != m {
        return Err(Error::invalid(
            "certificate does not use exactly m machines".to_string(),
        ));
    }

    let mut assignment = vec![usize::MAX; instance.job_count()];
    let mut placeholders_per_machine = vec![0u64; m];
    for (i, config) in machine_configs.iter().enumerate() {
        for k in 0..d {
            for _ in 0..config.counts()[k] {
                match pools[k].pop_front() {
                    Some(Token::Big(j)) => assignment[j] = i,
                    Some(Token::Placeholder) => placeholders_per_machine[i] += 1,
                    None => {
                        return Err(Error::invalid(
                            "certificate demand does not match the rounded instance".to_string(),
                        ))
                    }
                }
            }
        }
    }
    debug_assert!(pools.iter().all(|p| p.is_empty()));

    // Greedy refill: keep adding small jobs while the filled volume is
    // below the placeholder volume of the machine; the overshoot stays
    // below eps*t because small jobs are smaller than eps*t.
    let mut smalls = reduction.small_jobs.iter();
    let mut leftover = None;
    for i in 0..m {
        let volume_q = placeholders_per_machine[i] as u128 * t as u128;
        let mut filled_q: u128 = 0;
        while filled_q < volume_q {
            match leftover.take().or_else(|| smalls.next().copied()) {
                Some((j, p)) => {
                    assignment[j] = i;
                    filled_q += p as u128 * q as u128;
                }
                None => break,
            }
        }
        debug_assert!(volume_q == 0 || filled_q < volume_q + t as u128);
    }
    if smalls.next().is_some() || leftover.is_some() {
        return Err(Error::invalid(
            "internal: placeholder volume failed to absorb all small jobs".to_string(),
        ));
    }
    debug_assert!(assignment.iter().all(|&i| i != usize::MAX));
    Schedule::new(instance, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_instance;

    fn inst(p: &[u64], m: usize) -> Instance {
        Instance::new(p.to_vec(), m).unwrap()
    }

    #[test]
    fn epsilon_construction() {
        assert!(Epsilon::new(3).is_err());
        assert_eq!(Epsilon::new(4).unwrap().inverse_sq(), 16);
        assert_eq!(Epsilon::parse("1/8").unwrap().inverse(), 8);
        assert!(Epsilon::parse("0.25").is_err());
    }

    #[test]
    fn graham_examples() {
        let s = graham_list(&inst(&[3, 3, 2, 2, 2], 2));
        assert_eq!(s.makespan(), 7);
        let mut loads = s.loads().to_vec();
        loads.sort_unstable();
        assert_eq!(loads, vec![5, 7]);

        assert_eq!(graham_list(&inst(&[5], 3)).makespan(), 5);
        assert_eq!(graham_list(&inst(&[1, 1, 1, 1], 2)).makespan(), 2);
    }

    #[test]
    fn reduce_small_jobs_example() {
        let eps = Epsilon::new_unchecked(2);
        let r = reduce_small_jobs(&inst(&[3, 3, 2, 2, 2], 2), 6, eps).unwrap();
        // eps*T = 3: the two 3s are big, total small volume 6, so two
        // placeholders of size 3.
        assert_eq!(r.big_jobs.len(), 2);
        assert_eq!(r.small_jobs.len(), 3);
        assert_eq!(r.placeholder_count, 2);
    }

    #[test]
    fn reduce_small_jobs_no_smalls() {
        let eps = Epsilon::new(4).unwrap();
        let r = reduce_small_jobs(&inst(&[8, 8], 2), 8, eps).unwrap();
        assert_eq!(r.big_jobs.len(), 2);
        assert_eq!(r.placeholder_count, 0);
    }

    #[test]
    fn reduce_small_jobs_ceiling_boundary() {
        // eps*T = 2 with a single small job of exactly eps*T... jobs of
        // size eps*T are big, so use one strictly smaller: S = 2 = eps*T
        // via two jobs of size 1 gives exactly one placeholder.
        let eps = Epsilon::new(4).unwrap();
        let r = reduce_small_jobs(&inst(&[8, 1, 1], 1), 8, eps).unwrap();
        assert_eq!(r.small_jobs.len(), 2);
        assert_eq!(r.placeholder_count, 1);
    }

    #[test]
    fn reduce_small_jobs_rejects_low_target() {
        let eps = Epsilon::new(4).unwrap();
        assert!(reduce_small_jobs(&inst(&[9, 1], 1), 8, eps).is_err());
    }

    #[test]
    fn round_scaled_two_step_example() {
        // eps = 1/2: a scaled size of exactly 2 rounds to (1.5)^2 = 2.25,
        // then up to the integer 3.
        let eps = Epsilon::new_unchecked(2);
        let scaled = BigRational::from_integer(2.into());
        assert_eq!(round_scaled(&scaled, eps), 3);
    }

    #[test]
    fn round_scaled_fixed_point() {
        // A scaled size that is already an integral power of 1+eps stays.
        let eps = Epsilon::new_unchecked(2);
        // (3/2)^4 = 81/16 is not integral; use (3/2)^0 = 1... jobs scale to
        // >= q though, so check with q = 3: (4/3)^3 = 64/27 not integral.
        // The honest fixed point at integer scale: scaled=9/4 for q=2 gives
        // (3/2)^2 = 9/4, ceil = 3.
        let scaled = BigRational::new(9.into(), 4.into());
        assert_eq!(round_scaled(&scaled, eps), 3);
    }

    #[test]
    fn scale_and_round_example() {
        // q=2, T=10, big job p=5: scaled = 5*4/10 = 2 -> rounds to 3.
        let eps = Epsilon::new_unchecked(2);
        let instance = inst(&[5, 5], 2);
        let reduction = reduce_small_jobs(&instance, 10, eps).unwrap();
        let rounded = scale_and_round(&reduction, eps, 2).unwrap();
        assert_eq!(rounded.sizes, vec![3]);
        assert_eq!(rounded.demand, vec![2]);
        assert_eq!(rounded.capacity, 14); // q^2 + 5q
    }

    #[test]
    fn rounded_sizes_lie_in_documented_range() {
        let eps = Epsilon::new(4).unwrap();
        for seed in 0..20 {
            let instance = generate_instance(seed, 12, 3, 40).unwrap();
            let t = graham_list(&instance).makespan();
            let reduction = reduce_small_jobs(&instance, t, eps).unwrap();
            let rounded = scale_and_round(&reduction, eps, 3).unwrap();
            let q = eps.inverse();
            for &size in &rounded.sizes {
                assert!(size >= q);
                assert!(size <= q * q + q + 1);
            }
            // Size-class count bounded by the geometric range plus one.
            let ratio = 1.0 + 1.0 / q as f64;
            let count = ((q * q) as f64 * ratio).ln() / ratio.ln() - (q as f64).ln() / ratio.ln();
            assert!(rounded.sizes.len() as f64 <= count.ceil() + 1.0);
        }
    }

    #[test]
    fn min_machines_examples() {
        let spec = KnapsackSpec::new(vec![3], 6).unwrap();
        assert_eq!(min_machines_dp(&[0], &spec, 10, 1000).unwrap(), Some(0));
        let spec = KnapsackSpec::new(vec![3], 3).unwrap();
        assert_eq!(min_machines_dp(&[2], &spec, 10, 1000).unwrap(), Some(2));
        let spec = KnapsackSpec::new(vec![2, 3], 7).unwrap();
        assert_eq!(min_machines_dp(&[2, 1], &spec, 10, 1000).unwrap(), Some(1));
        // Cap binds.
        let spec = KnapsackSpec::new(vec![3], 3).unwrap();
        assert_eq!(min_machines_dp(&[2], &spec, 1, 1000).unwrap(), None);
    }

    #[test]
    fn decide_examples() {
        let budgets = PipelineBudgets::default();
        // Two machines, four size-3 jobs, capacity 6: packs two per machine.
        let r = RoundedInstance {
            sizes: vec![3],
            demand: vec![4],
            machines: 2,
            capacity: 6,
            provenance: vec![SizeClass::default()],
        };
        let sol = decide_makespan(&r, DecideMode::Paper, &budgets).unwrap().unwrap();
        assert_eq!(sol.get(&Configuration::new(vec![2])), 2);

        // Volume violation: three size-3 jobs on one capacity-6 machine.
        let r = RoundedInstance {
            sizes: vec![3],
            demand: vec![3],
            machines: 1,
            capacity: 6,
            provenance: vec![SizeClass::default()],
        };
        assert!(decide_makespan(&r, DecideMode::Paper, &budgets).unwrap().is_none());
        assert!(decide_makespan(&r, DecideMode::Oracle, &budgets).unwrap().is_none());
    }

    #[test]
    fn decide_monotone_in_capacity() {
        let budgets = PipelineBudgets::default();
        for seed in 0..15 {
            let instance = generate_instance(seed, 8, 2, 12).unwrap();
            let eps = Epsilon::new(4).unwrap();
            let t = instance.makespan_lower_bound().max(instance.max_processing_time());
            let reduction = reduce_small_jobs(&instance, t, eps).unwrap();
            let mut rounded = scale_and_round(&reduction, eps, 2).unwrap();
            let yes_at = decide_makespan(&rounded, DecideMode::Oracle, &budgets)
                .unwrap()
                .is_some();
            rounded.capacity += 1;
            let yes_after = decide_makespan(&rounded, DecideMode::Oracle, &budgets)
                .unwrap()
                .is_some();
            if yes_at {
                assert!(yes_after);
            }
        }
    }

    #[test]
    fn solve_single_job_is_exact() {
        let eps = Epsilon::new(4).unwrap();
        let (s, report) = solve(&inst(&[17], 1), eps, &SolveOptions::default()).unwrap();
        assert_eq!(s.makespan(), 17);
        assert_eq!(report.chosen_target, 17);
    }

    #[test]
    fn solve_example_instance() {
        let eps = Epsilon::new(4).unwrap();
        let instance = inst(&[3, 3, 2, 2, 2], 2);
        let (s, report) = solve(&instance, eps, &SolveOptions::default()).unwrap();
        // OPT = 6; the composed factor is (5/4)^2 * (9/4) = 225/64.
        let factor = report.composed_factor.to_f64().unwrap();
        assert!((factor - 225.0 / 64.0).abs() < 1e-12);
        assert!(s.makespan() as f64 <= factor * 6.0);
        crate::instance::makespan(&instance, &s).unwrap();
    }

    #[test]
    fn solve_modes_agree_on_seeded_instances() {
        let eps = Epsilon::new(4).unwrap();
        for seed in 0..10 {
            let instance = generate_instance(seed, 10, 3, 20).unwrap();
            let paper = solve(&instance, eps, &SolveOptions::default()).unwrap();
            let oracle_opts = SolveOptions {
                mode: DecideMode::Oracle,
                ..Default::default()
            };
            let orc = solve(&instance, eps, &oracle_opts).unwrap();
            // Identical decisions, hence the same accepted target; the
            // packing certificates (and thus exact makespans) may differ.
            assert_eq!(paper.1.decisions, orc.1.decisions);
            assert_eq!(paper.1.chosen_target, orc.1.chosen_target);
        }
    }
}

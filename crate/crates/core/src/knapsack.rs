//! The knapsack polytope `P = {c >= 0 : pi . c <= T}`, its integer points
//! (configurations), the simple/complex classification, and the splitting
//! machinery for complex configurations.
//!
//! A configuration is *simple* when `|supp(c)| <= log2(T+1)` and *complex*
//! otherwise. The comparison is evaluated exactly as `2^|supp(c)| <= T+1`
//! in integer arithmetic, so boundary cases never depend on floating point.
//! Every complex configuration `c` admits two configurations `c1, c2` of
//! strictly smaller support with equal weight and `c1 + c2 = 2c`; that split
//! drives both the convex decomposition here and the thinning of solutions
//! in [`crate::confip`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Error;

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// A nonnegative integer vector of job counts per size class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    counts: Vec<u64>,
}

impl Configuration {
    pub fn new(counts: Vec<u64>) -> Self {
        Configuration { counts }
    }

    pub fn zero(dimension: usize) -> Self {
        Configuration {
            counts: vec![0; dimension],
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn dimension(&self) -> usize {
        self.counts.len()
    }

    /// Indices of the nonzero coordinates.
    pub fn support(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&v| v > 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&v| v == 0)
    }

    /// Total number of jobs in the configuration.
    pub fn job_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.counts
            .iter()
            .zip(&other.counts)
            .all(|(a, b)| a <= b)
    }
}

/// Text form `(c1,c2,...,cd)`, used by the CLI.
impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::invalid(format!("configuration {s:?} must look like (2,0,1)")))?;
        let mut counts = Vec::new();
        for tok in inner.split(',') {
            let v: u64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad count {tok:?} in configuration {s:?}")))?;
            counts.push(v);
        }
        if counts.is_empty() {
            return Err(Error::invalid("configuration must have at least one coordinate"));
        }
        Ok(Configuration { counts })
    }
}

/// Simple/complex classification of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Simple,
    Complex,
}

/// The knapsack polytope data: positive integer sizes and capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnapsackSpec {
    sizes: Vec<u64>,
    capacity: u64,
}

impl KnapsackSpec {
    pub fn new(sizes: Vec<u64>, capacity: u64) -> Result<Self, Error> {
        if sizes.is_empty() {
            return Err(Error::invalid("knapsack spec needs dimension >= 1"));
        }
        if capacity == 0 {
            return Err(Error::invalid("knapsack capacity must be >= 1"));
        }
        for (k, &s) in sizes.iter().enumerate() {
            if s == 0 {
                return Err(Error::invalid(format!("size {k} must be positive")));
            }
            if s > capacity {
                return Err(Error::invalid(format!(
                    "size {k} ({s}) exceeds the capacity {capacity}"
                )));
            }
        }
        Ok(KnapsackSpec { sizes, capacity })
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn dimension(&self) -> usize {
        self.sizes.len()
    }

    /// Weight `pi . c`, accumulated in 128 bits.
    pub fn weight(&self, c: &Configuration) -> u128 {
        self.sizes
            .iter()
            .zip(c.counts())
            .map(|(&s, &v)| s as u128 * v as u128)
            .sum()
    }

    /// Membership in `Q`: matching dimension and weight at most the capacity.
    pub fn contains(&self, c: &Configuration) -> bool {
        c.dimension() == self.dimension() && self.weight(c) <= self.capacity as u128
    }

    fn require_member(&self, c: &Configuration) -> Result<(), Error> {
        if !self.contains(c) {
            return Err(Error::invalid(format!(
                "configuration {c} is not in Q (capacity {})",
                self.capacity
            )));
        }
        Ok(())
    }

    /// Simple iff `2^|supp(c)| <= T + 1`, evaluated exactly.
    pub fn classify(&self, c: &Configuration) -> Result<Classification, Error> {
        self.require_member(c)?;
        Ok(if self.support_is_simple(c.support_size()) {
            Classification::Simple
        } else {
            Classification::Complex
        })
    }

    pub fn is_simple(&self, c: &Configuration) -> bool {
        self.support_is_simple(c.support_size())
    }

    pub fn is_complex(&self, c: &Configuration) -> bool {
        !self.is_simple(c)
    }

    fn support_is_simple(&self, support_size: usize) -> bool {
        if support_size >= 128 {
            return false;
        }
        (1u128 << support_size) <= self.capacity as u128 + 1
    }

    /// The simplicity threshold `log2(T+1)` as a real number, for display.
    /// Classification itself never goes through floating point.
    pub fn simplicity_threshold(&self) -> f64 {
        ((self.capacity + 1) as f64).log2()
    }

    /// Visits every configuration in lexicographic order of the count
    /// vectors, stopping with an error once `cap` points were produced.
    pub fn for_each_configuration<F>(&self, cap: u64, mut visit: F) -> Result<(), Error>
    where
        F: FnMut(&Configuration) -> Result<(), Error>,
    {
        let mut counts = vec![0u64; self.dimension()];
        let mut produced: u64 = 0;
        self.enumerate_rec(0, self.capacity, &mut counts, cap, &mut produced, &mut visit)
    }

    fn enumerate_rec<F>(
        &self,
        k: usize,
        remaining: u64,
        counts: &mut Vec<u64>,
        cap: u64,
        produced: &mut u64,
        visit: &mut F,
    ) -> Result<(), Error>
    where
        F: FnMut(&Configuration) -> Result<(), Error>,
    {
        if k == self.dimension() {
            *produced += 1;
            if *produced > cap {
                return Err(Error::CapExceeded {
                    what: "configuration enumeration",
                    limit: cap,
                });
            }
            return visit(&Configuration::new(counts.clone()));
        }
        let max_here = remaining / self.sizes[k];
        for v in 0..=max_here {
            counts[k] = v;
            self.enumerate_rec(k + 1, remaining - v * self.sizes[k], counts, cap, produced, visit)?;
        }
        counts[k] = 0;
        Ok(())
    }

    /// All of `Q` in lexicographic order, or an error if `cap` is exceeded.
    pub fn enumerate_configurations(&self, cap: u64) -> Result<Vec<Configuration>, Error> {
        let mut out = Vec::new();
        self.for_each_configuration(cap, |c| {
            out.push(c.clone());
            Ok(())
        })?;
        Ok(out)
    }

    /// The configurations of `Q` that additionally satisfy `c <= bounds`
    /// componentwise. Solving against a demand `b` only ever uses such
    /// configurations, which keeps enumeration tractable for fine roundings.
    pub fn enumerate_within(&self, bounds: &[u64], cap: u64) -> Result<Vec<Configuration>, Error> {
        if bounds.len() != self.dimension() {
            return Err(Error::invalid("bounds dimension mismatch"));
        }
        let mut out = Vec::new();
        let mut counts = vec![0u64; self.dimension()];
        let mut produced = 0u64;
        self.enumerate_within_rec(0, self.capacity, bounds, &mut counts, cap, &mut produced, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_within_rec(
        &self,
        k: usize,
        remaining: u64,
        bounds: &[u64],
        counts: &mut Vec<u64>,
        cap: u64,
        produced: &mut u64,
        out: &mut Vec<Configuration>,
    ) -> Result<(), Error> {
        if k == self.dimension() {
            *produced += 1;
            if *produced > cap {
                return Err(Error::CapExceeded {
                    what: "configuration enumeration",
                    limit: cap,
                });
            }
            out.push(Configuration::new(counts.clone()));
            return Ok(());
        }
        let max_here = (remaining / self.sizes[k]).min(bounds[k]);
        for v in 0..=max_here {
            counts[k] = v;
            self.enumerate_within_rec(k + 1, remaining - v * self.sizes[k], bounds, counts, cap, produced, out)?;
        }
        counts[k] = 0;
        Ok(())
    }

    /// Number of simple configurations in `Q`.
    pub fn count_simple(&self, cap: u64) -> Result<u64, Error> {
        let mut count = 0u64;
        self.for_each_configuration(cap, |c| {
            if self.is_simple(c) {
                count += 1;
            }
            Ok(())
        })?;
        Ok(count)
    }

    /// The explicit product bound on the number of simple configurations:
    /// `(floor(log2(T+1)) + 1) * d^log2(T+1) * (T+1)^log2(T+1)`.
    pub fn simple_count_bound(&self) -> f64 {
        let t1 = (self.capacity + 1) as f64;
        let log = t1.log2();
        (log.floor() + 1.0) * (self.dimension() as f64).powf(log) * t1.powf(log)
    }

    /// Splits a complex configuration into `(c1, c2)` with equal weight,
    /// `c1 + c2 = 2c`, and strictly smaller supports.
    ///
    /// Subsets of `supp(c)` are scanned in increasing popcount order
    /// (lexicographic within one popcount); the first pair of subsets whose
    /// partial weights collide is used, after removing the intersection.
    pub fn sparsify(
        &self,
        c: &Configuration,
    ) -> Result<(Configuration, Configuration), Error> {
        self.require_member(c)?;
        if self.is_simple(c) {
            return Err(Error::invalid(format!(
                "configuration {c} is simple; sparsify requires a complex configuration"
            )));
        }
        let support = c.support();
        let s = support.len();
        // A collision among subset weights is guaranteed after at most T+2
        // subsets have been seen, so the scan below stays cheap.
        let mut seen: HashMap<u128, Vec<usize>> = HashMap::new();
        seen.insert(0, Vec::new());
        for popcount in 1..=s {
            let mut found: Option<(Vec<usize>, Vec<usize>)> = None;
            self.scan_combinations(c, &support, popcount, &mut seen, &mut found);
            if let Some((first, second)) = found {
                return Ok(self.split_by_subsets(c, &first, &second));
            }
        }
        unreachable!("pigeonhole guarantees a collision for complex configurations")
    }

    fn scan_combinations(
        &self,
        c: &Configuration,
        support: &[usize],
        popcount: usize,
        seen: &mut HashMap<u128, Vec<usize>>,
        found: &mut Option<(Vec<usize>, Vec<usize>)>,
    ) {
        let mut subset = vec![0usize; popcount];
        self.combinations_rec(c, support, popcount, 0, 0, 0, &mut subset, seen, found);
    }

    #[allow(clippy::too_many_arguments)]
    fn combinations_rec(
        &self,
        c: &Configuration,
        support: &[usize],
        popcount: usize,
        chosen: usize,
        start: usize,
        weight: u128,
        subset: &mut Vec<usize>,
        seen: &mut HashMap<u128, Vec<usize>>,
        found: &mut Option<(Vec<usize>, Vec<usize>)>,
    ) {
        if found.is_some() {
            return;
        }
        if chosen == popcount {
            if let Some(prev) = seen.get(&weight) {
                *found = Some((prev.clone(), subset[..popcount].to_vec()));
            } else {
                seen.insert(weight, subset[..popcount].to_vec());
            }
            return;
        }
        for pos in start..=support.len() - (popcount - chosen) {
            let k = support[pos];
            subset[chosen] = k;
            let w = weight + self.sizes[k] as u128 * c.counts()[k] as u128;
            self.combinations_rec(c, support, popcount, chosen + 1, pos + 1, w, subset, seen, found);
            if found.is_some() {
                return;
            }
        }
    }

    fn split_by_subsets(
        &self,
        c: &Configuration,
        first: &[usize],
        second: &[usize],
    ) -> (Configuration, Configuration) {
        // Strip the intersection; equal weights are preserved because both
        // sides lose the same coordinates of c.
        let in_first: Vec<usize> = first.iter().filter(|k| !second.contains(k)).copied().collect();
        let in_second: Vec<usize> = second.iter().filter(|k| !first.contains(k)).copied().collect();
        debug_assert!(!in_first.is_empty() && !in_second.is_empty());
        let mut c1 = c.counts().to_vec();
        let mut c2 = c.counts().to_vec();
        // c1 = c - c^S + c^R doubles the R coordinates and zeroes the S ones.
        for &k in &in_first {
            c1[k] = 0;
            c2[k] = 2 * c.counts()[k];
        }
        for &k in &in_second {
            c1[k] = 2 * c.counts()[k];
            c2[k] = 0;
        }
        let c1 = Configuration::new(c1);
        let c2 = Configuration::new(c2);
        debug_assert_eq!(self.weight(&c1), self.weight(c));
        debug_assert_eq!(self.weight(&c2), self.weight(c));
        (c1, c2)
    }

    /// Writes `c` as a convex combination of simple configurations with
    /// positive rational weights summing to one. Simple inputs map to
    /// `{c: 1}`; complex ones are split recursively with dyadic weights.
    pub fn convexify(
        &self,
        c: &Configuration,
    ) -> Result<Vec<(Configuration, BigRational)>, Error> {
        self.require_member(c)?;
        let mut acc: HashMap<Configuration, BigRational> = HashMap::new();
        self.convexify_rec(c, BigRational::one(), &mut acc)?;
        let mut out: Vec<(Configuration, BigRational)> = acc.into_iter().collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        debug_assert!(out
            .iter()
            .fold(BigRational::zero(), |s, (_, w)| s + w)
            .is_one());
        Ok(out)
    }

    fn convexify_rec(
        &self,
        c: &Configuration,
        weight: BigRational,
        acc: &mut HashMap<Configuration, BigRational>,
    ) -> Result<(), Error> {
        if self.is_simple(c) {
            let entry = acc.entry(c.clone()).or_insert_with(BigRational::zero);
            *entry += weight;
            return Ok(());
        }
        let (c1, c2) = self.sparsify(c)?;
        let half = weight / BigRational::from_integer(2.into());
        self.convexify_rec(&c1, half.clone(), acc)?;
        self.convexify_rec(&c2, half, acc)
    }

    /// For a complex configuration, a pair `(c1, c2)` of distinct points of
    /// `Q` with `c1 + c2 = 2c`, witnessing that `c` is not a vertex of
    /// `conv.hull(Q)`. Simple configurations return `None`.
    pub fn hull_vertex_witness(
        &self,
        c: &Configuration,
    ) -> Result<Option<(Configuration, Configuration)>, Error> {
        self.require_member(c)?;
        if self.is_simple(c) {
            return Ok(None);
        }
        let (c1, c2) = self.sparsify(c)?;
        debug_assert_ne!(&c1, c);
        debug_assert_ne!(&c2, c);
        Ok(Some((c1, c2)))
    }
}

/// Exact test of `s <= mult * log2(base)`, i.e. `2^s <= base^mult`.
pub fn le_log_bound(s: u64, mult: u64, base: u64) -> bool {
    if base == 0 {
        return false;
    }
    let lhs = BigUint::from(2u32).pow(s as u32);
    let rhs = BigUint::from(base).pow(mult as u32);
    lhs <= rhs
}

/// Smallest integer `B` with `2^B >= base^mult`, i.e. `ceil(mult * log2(base))`.
pub fn ceil_log_bound(mult: u64, base: u64) -> u64 {
    let x = BigUint::from(base).pow(mult as u32);
    let bits = x.bits();
    // bits-1 is floor(log2 x); exact powers of two need no extra bit.
    if x == BigUint::from(1u32) << (bits - 1) {
        bits - 1
    } else {
        bits
    }
}

//! Scheduling instances, schedules, deterministic generation, and text I/O.
//!
//! The instance file format is plain UTF-8 text: line 1 holds `m n`
//! (machine count, job count, separated by a single space), followed by one
//! processing time per line. A trailing newline is required. Schedules are
//! written as `makespan V` followed by one line of space-separated machine
//! indices, one per job.

use crate::error::Error;

/// Largest admissible processing time. Sums are always accumulated in
/// wider types so that no load computation can overflow.
pub const MAX_PROCESSING_TIME: u64 = (1 << 31) - 1;

/// A scheduling instance: jobs with positive integer processing times and
/// a number of identical machines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    processing_times: Vec<u64>,
    machine_count: usize,
}

impl Instance {
    pub fn new(processing_times: Vec<u64>, machine_count: usize) -> Result<Self, Error> {
        if processing_times.is_empty() {
            return Err(Error::invalid("instance must contain at least one job"));
        }
        if machine_count == 0 {
            return Err(Error::invalid("machine count must be at least 1"));
        }
        for (j, &p) in processing_times.iter().enumerate() {
            if p == 0 {
                return Err(Error::invalid(format!("job {j} has processing time 0")));
            }
            if p > MAX_PROCESSING_TIME {
                return Err(Error::invalid(format!(
                    "job {j} exceeds the maximum processing time {MAX_PROCESSING_TIME}"
                )));
            }
        }
        Ok(Instance {
            processing_times,
            machine_count,
        })
    }

    pub fn processing_times(&self) -> &[u64] {
        &self.processing_times
    }

    pub fn machine_count(&self) -> usize {
        self.machine_count
    }

    pub fn job_count(&self) -> usize {
        self.processing_times.len()
    }

    pub fn total_work(&self) -> u64 {
        self.processing_times.iter().sum()
    }

    pub fn max_processing_time(&self) -> u64 {
        *self.processing_times.iter().max().unwrap()
    }

    /// `max(⌈Σp/m⌉, max_j p_j)`: no schedule can beat this makespan.
    pub fn makespan_lower_bound(&self) -> u64 {
        let avg = self.total_work().div_ceil(self.machine_count as u64);
        avg.max(self.max_processing_time())
    }
}

/// An assignment of every job to a machine, with derived per-machine loads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    assignment: Vec<usize>,
    loads: Vec<u64>,
}

impl Schedule {
    /// Builds a schedule from an assignment vector, recomputing the loads.
    pub fn new(instance: &Instance, assignment: Vec<usize>) -> Result<Self, Error> {
        if assignment.len() != instance.job_count() {
            return Err(Error::invalid(format!(
                "assignment has {} entries but the instance has {} jobs",
                assignment.len(),
                instance.job_count()
            )));
        }
        let mut loads = vec![0u64; instance.machine_count()];
        for (j, &i) in assignment.iter().enumerate() {
            if i >= instance.machine_count() {
                return Err(Error::invalid(format!(
                    "job {j} assigned to machine {i}, but only {} machines exist",
                    instance.machine_count()
                )));
            }
            loads[i] += instance.processing_times()[j];
        }
        Ok(Schedule { assignment, loads })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    pub fn makespan(&self) -> u64 {
        self.loads.iter().copied().max().unwrap_or(0)
    }
}

/// Maximum machine load of `schedule`, after checking that it is consistent
/// with `instance` (dimensions and recomputed loads).
pub fn makespan(instance: &Instance, schedule: &Schedule) -> Result<u64, Error> {
    if schedule.assignment.len() != instance.job_count() {
        return Err(Error::invalid("schedule and instance dimensions differ"));
    }
    if schedule.loads.len() != instance.machine_count() {
        return Err(Error::invalid("schedule and instance machine counts differ"));
    }
    let recomputed = Schedule::new(instance, schedule.assignment.clone())?;
    if recomputed.loads != schedule.loads {
        return Err(Error::invalid("schedule loads do not match the assignment"));
    }
    Ok(schedule.makespan())
}

/// Parses the instance text format. Errors carry 1-based line numbers.
pub fn parse_instance(text: &str) -> Result<Instance, Error> {
    if !text.ends_with('\n') {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "trailing newline required".into(),
        });
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let mut parts = header.split(' ');
    let malformed = || Error::Parse {
        line: 1,
        message: format!("malformed header {header:?}, expected \"m n\""),
    };
    let m: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(malformed)?;
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(malformed)?;
    if parts.next().is_some() {
        return Err(malformed());
    }
    if m == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "machine count must be positive".into(),
        });
    }
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "job count must be positive".into(),
        });
    }
    let mut processing_times = Vec::with_capacity(n);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if processing_times.len() == n {
            return Err(Error::Parse {
                line: lineno,
                message: format!("job-count mismatch: expected {n} jobs, found more lines"),
            });
        }
        let p: i64 = line.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("expected an integer processing time, found {line:?}"),
        })?;
        if p <= 0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-positive processing time at line {lineno}"),
            });
        }
        if p as u64 > MAX_PROCESSING_TIME {
            return Err(Error::Parse {
                line: lineno,
                message: format!("processing time exceeds {MAX_PROCESSING_TIME}"),
            });
        }
        processing_times.push(p as u64);
    }
    if processing_times.len() != n {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!(
                "job-count mismatch: expected {n} jobs, found {}",
                processing_times.len()
            ),
        });
    }
    Instance::new(processing_times, m)
}

/// Inverse of [`parse_instance`]; the round trip is byte-exact.
pub fn format_instance(instance: &Instance) -> String {
    let mut out = format!(
        "{} {}\n",
        instance.machine_count(),
        instance.job_count()
    );
    for p in instance.processing_times() {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

/// Schedule output format: `makespan V` then the assignment on one line.
pub fn format_schedule(schedule: &Schedule) -> String {
    let indices: Vec<String> = schedule.assignment().iter().map(|i| i.to_string()).collect();
    format!("makespan {}\n{}\n", schedule.makespan(), indices.join(" "))
}

/// Parses the schedule output format back into `(declared makespan, assignment)`.
pub fn parse_schedule(text: &str) -> Result<(u64, Vec<usize>), Error> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty schedule".into(),
    })?;
    let value = header
        .strip_prefix("makespan ")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or(Error::Parse {
            line: 1,
            message: format!("malformed schedule header {header:?}"),
        })?;
    let body = lines.next().ok_or(Error::Parse {
        line: 2,
        message: "missing assignment line".into(),
    })?;
    let mut assignment = Vec::new();
    for tok in body.split_whitespace() {
        let i: usize = tok.parse().map_err(|_| Error::Parse {
            line: 2,
            message: format!("bad machine index {tok:?}"),
        })?;
        assignment.push(i);
    }
    Ok((value, assignment))
}

/// The documented xorshift64* generator. Fixed multiplier so generated
/// corpora are identical across implementations.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub const MULTIPLIER: u64 = 0x2545F4914F6CDD1D;

    /// Seeds the generator; a zero seed is mapped to 1.
    pub fn new(seed: u64) -> Self {
        XorShift64Star {
            state: if seed == 0 { 1 } else { seed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(Self::MULTIPLIER)
    }

    /// Uniform value in `[0, bound)` by plain modulus, as documented.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// Deterministic instance generator: `p_j = 1 + (next() mod p_max)`.
pub fn generate_instance(seed: u64, n: usize, m: usize, p_max: u64) -> Result<Instance, Error> {
    if n == 0 || m == 0 || p_max == 0 {
        return Err(Error::invalid("generate_instance requires n, m, p_max >= 1"));
    }
    let mut rng = XorShift64Star::new(seed);
    let processing_times = (0..n).map(|_| 1 + rng.next_below(p_max)).collect();
    Instance::new(processing_times, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_instance() {
        let inst = parse_instance("2 3\n5\n5\n5\n").unwrap();
        assert_eq!(inst.machine_count(), 2);
        assert_eq!(inst.processing_times(), &[5, 5, 5]);
    }

    #[test]
    fn parse_minimal_instance() {
        let inst = parse_instance("1 1\n7\n").unwrap();
        assert_eq!(inst.machine_count(), 1);
        assert_eq!(inst.processing_times(), &[7]);
    }

    #[test]
    fn parse_rejects_non_positive_time() {
        let err = parse_instance("2 2\n0\n1\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("non-positive processing time at line 2"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_missing_trailing_newline() {
        assert!(parse_instance("1 1\n7").is_err());
    }

    #[test]
    fn parse_rejects_job_count_mismatch() {
        assert!(parse_instance("2 3\n5\n5\n").is_err());
        assert!(parse_instance("2 1\n5\n5\n").is_err());
    }

    #[test]
    fn parse_format_round_trip() {
        for seed in 0..20 {
            let inst = generate_instance(seed, 7, 3, 50).unwrap();
            let text = format_instance(&inst);
            assert_eq!(parse_instance(&text).unwrap(), inst);
            assert_eq!(format_instance(&parse_instance(&text).unwrap()), text);
        }
    }

    #[test]
    fn makespan_examples() {
        let inst = Instance::new(vec![3, 3, 2, 2, 2], 2).unwrap();
        let s = Schedule::new(&inst, vec![0, 0, 1, 1, 1]).unwrap();
        assert_eq!(makespan(&inst, &s).unwrap(), 6);

        let s = Schedule::new(&inst, vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(makespan(&inst, &s).unwrap(), 7);

        let single = Instance::new(vec![7], 1).unwrap();
        let s = Schedule::new(&single, vec![0]).unwrap();
        assert_eq!(makespan(&single, &s).unwrap(), 7);
    }

    #[test]
    fn makespan_never_beats_lower_bound() {
        for seed in 0..50 {
            let inst = generate_instance(seed, 9, 3, 30).unwrap();
            let mut rng = XorShift64Star::new(seed + 1000);
            let assignment: Vec<usize> = (0..9)
                .map(|_| rng.next_below(3) as usize)
                .collect();
            let s = Schedule::new(&inst, assignment).unwrap();
            assert!(s.makespan() >= inst.makespan_lower_bound());
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_instance(7, 5, 2, 50).unwrap();
        let b = generate_instance(7, 5, 2, 50).unwrap();
        assert_eq!(format_instance(&a), format_instance(&b));
        let c = generate_instance(8, 5, 2, 50).unwrap();
        assert_ne!(format_instance(&a), format_instance(&c));
    }

    #[test]
    fn generator_pmax_one_forces_all_ones() {
        let inst = generate_instance(1, 3, 2, 1).unwrap();
        assert_eq!(inst.processing_times(), &[1, 1, 1]);
    }

    #[test]
    fn parsers_never_panic_on_junk() {
        let mut rng = XorShift64Star::new(0xFEED);
        let alphabet: Vec<char> = " \n\t0123456789-+makespn".chars().collect();
        for _ in 0..2000 {
            let len = rng.next_below(40) as usize;
            let junk: String = (0..len)
                .map(|_| alphabet[rng.next_below(alphabet.len() as u64) as usize])
                .collect();
            let _ = parse_instance(&junk);
            let _ = parse_schedule(&junk);
        }
        // Mutations of a valid instance.
        let valid = "2 3\n5\n5\n5\n";
        for i in 0..valid.len() {
            for c in ['0', '9', '-', ' ', '\n'] {
                let mut mutated: Vec<char> = valid.chars().collect();
                mutated[i] = c;
                let _ = parse_instance(&mutated.into_iter().collect::<String>());
            }
        }
    }

    #[test]
    fn schedule_format_round_trip() {
        let inst = Instance::new(vec![3, 3, 2, 2, 2], 2).unwrap();
        let s = Schedule::new(&inst, vec![0, 0, 1, 1, 1]).unwrap();
        let text = format_schedule(&s);
        assert_eq!(text, "makespan 6\n0 0 1 1 1\n");
        let (v, a) = parse_schedule(&text).unwrap();
        assert_eq!(v, 6);
        assert_eq!(a, vec![0, 0, 1, 1, 1]);
    }
}

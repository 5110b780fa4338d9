//! Command-line surface for the configuration-IP scheduling toolkit.
//!
//! Exit codes: 0 success, 1 infeasible (a `decide` that found no packing or
//! a failed `verify`), 2 budget exhaustion, 64 usage or input errors.

mod formats;

use std::io::Read;
use std::time::Instant;

use clap::{Parser, Subcommand};

use confip::confip::{complex_mass_bound_holds, thin_support_bound_holds, Trace};
use confip::eptas::{self, DecideMode, Epsilon, PipelineBudgets, SolveOptions};
use confip::error::Error;
use confip::instance::{
    format_instance, format_schedule, generate_instance, parse_instance, parse_schedule, Schedule,
};
use confip::knapsack::{Configuration, KnapsackSpec};
use confip::objectives::{
    solve_objective, ObjectiveBudgets, ObjectiveFunction, ObjectiveKind, ObjectiveMode,
    ObjectiveSpec,
};
use confip::oracle;

#[derive(Parser)]
#[command(name = "confip", version, about = "Configuration-IP scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic instance on stdout.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        pmax: u64,
    },
    /// List every configuration of a knapsack spec with its classification.
    Configs {
        /// Comma-separated sizes, e.g. 1,2,3
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        capacity: u64,
        /// Enumeration cap.
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
    /// Split a complex configuration into two of smaller support.
    Sparsify {
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        capacity: u64,
        /// Configuration in the text form (c1,c2,...).
        #[arg(long)]
        config: String,
    },
    /// Decide whether the instance on stdin packs at the given target.
    Decide {
        #[arg(long, alias = "T")]
        t: u64,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value = "paper")]
        mode: String,
        #[arg(long, default_value_t = 100_000_000)]
        max_nodes: u64,
    },
    /// Approximate the minimum makespan of the instance on stdin.
    Solve {
        #[arg(long)]
        eps: String,
        #[arg(long, default_value = "paper")]
        mode: String,
        #[arg(long, default_value_t = 100_000_000)]
        max_nodes: u64,
        /// Write the binary-search decision trace to this file.
        #[arg(long)]
        trace: Option<String>,
    },
    /// Approximate a load-based objective for the instance on stdin.
    SolveObj {
        /// One of sum-min, min-max, sum-max, max-min.
        #[arg(long)]
        kind: String,
        /// One of identity, power:p.
        #[arg(long)]
        f: String,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value = "paper")]
        mode: String,
    },
    /// Rewrite a configuration-IP solution (stdin) into a thin one.
    Thin {},
    /// Check a schedule file against an instance file.
    Verify {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        schedule: String,
    },
    /// Run the seeded corpus from a manifest and emit CSV.
    Bench {
        #[arg(long, default_value = "bench/manifest.csv")]
        manifest: String,
        /// Emit 0 in the ms column for byte-reproducible output.
        #[arg(long, default_value_t = false)]
        zero_ms: bool,
        /// Skip the exact-oracle column.
        #[arg(long, default_value_t = false)]
        no_oracle: bool,
    },
}

fn main() {
    // The exact solvers recurse once per allowed configuration; give them
    // room on a dedicated thread.
    let child = std::thread::Builder::new()
        .stack_size(256 * 1024 * 1024)
        .spawn(real_main)
        .expect("spawn worker");
    let code = child.join().unwrap_or(70);
    std::process::exit(code);
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::CapExceeded { .. } => 2,
                Error::Infeasible(_) => 1,
                _ => 64,
            }
        }
    }
}

fn read_stdin() -> Result<String, Error> {
    let mut text = String::new();
    std::io::stdin()
        .read_to_string(&mut text)
        .map_err(|e| Error::invalid(format!("stdin: {e}")))?;
    Ok(text)
}

fn read_file(path: &str) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("{path}: {e}")))
}

fn parse_sizes(text: &str) -> Result<Vec<u64>, Error> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("bad size {tok:?}")))
        })
        .collect()
}

fn parse_mode(text: &str) -> Result<DecideMode, Error> {
    match text {
        "paper" => Ok(DecideMode::Paper),
        "oracle" => Ok(DecideMode::Oracle),
        other => Err(Error::invalid(format!(
            "mode must be paper or oracle, got {other:?}"
        ))),
    }
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Gen { seed, n, m, pmax } => {
            let instance = generate_instance(seed, n, m, pmax)?;
            print!("{}", format_instance(&instance));
            Ok(0)
        }
        Command::Configs { sizes, capacity, cap } => {
            let spec = KnapsackSpec::new(parse_sizes(&sizes)?, capacity)?;
            spec.for_each_configuration(cap, |c| {
                let class = if spec.is_simple(c) { "simple" } else { "complex" };
                println!("{c} {class}");
                Ok(())
            })?;
            Ok(0)
        }
        Command::Sparsify { sizes, capacity, config } => {
            let spec = KnapsackSpec::new(parse_sizes(&sizes)?, capacity)?;
            let c: Configuration = config.parse()?;
            let (c1, c2) = spec.sparsify(&c)?;
            println!("{c1}");
            println!("{c2}");
            Ok(0)
        }
        Command::Decide { t, eps, mode, max_nodes } => {
            let eps = Epsilon::parse(&eps)?;
            let mode = parse_mode(&mode)?;
            let instance = parse_instance(&read_stdin()?)?;
            if t < instance.max_processing_time() {
                println!("no packing: target below the largest job");
                return Ok(1);
            }
            let mut budgets = PipelineBudgets::default();
            budgets.solver.max_nodes = max_nodes;
            let reduction = eptas::reduce_small_jobs(&instance, t, eps)?;
            let rounded =
                eptas::scale_and_round(&reduction, eps, instance.machine_count() as u64)?;
            match eptas::decide_makespan(&rounded, mode, &budgets)? {
                Some(solution) => {
                    println!(
                        "packing exists at target {t} (rounded capacity {})",
                        rounded.capacity
                    );
                    println!("{solution}");
                    Ok(0)
                }
                None => {
                    println!("no packing of the rounded instance at target {t}");
                    Ok(1)
                }
            }
        }
        Command::Solve { eps, mode, max_nodes, trace } => {
            let eps = Epsilon::parse(&eps)?;
            let mode = parse_mode(&mode)?;
            let instance = parse_instance(&read_stdin()?)?;
            let mut options = SolveOptions {
                mode,
                ..Default::default()
            };
            options.budgets.solver.max_nodes = max_nodes;
            let (schedule, report) = eptas::solve(&instance, eps, &options)?;
            if let Some(path) = trace {
                let mut lines = String::new();
                for (step, (t, yes)) in report.decisions.iter().enumerate() {
                    let verdict = if *yes { "yes" } else { "no" };
                    lines.push_str(&format!(
                        "step={} kind=decide t={t} verdict={verdict}\n",
                        step + 1
                    ));
                }
                std::fs::write(&path, lines)
                    .map_err(|e| Error::invalid(format!("{path}: {e}")))?;
            }
            print!("{}", format_schedule(&schedule));
            eprintln!(
                "target {} factor {}",
                report.chosen_target, report.composed_factor
            );
            Ok(0)
        }
        Command::SolveObj { kind, f, eps, mode } => {
            let kind = ObjectiveKind::parse(&kind)?;
            let f = ObjectiveFunction::parse(&f)?;
            let spec = ObjectiveSpec::new(kind, f)?;
            let eps = Epsilon::parse(&eps)?;
            let mode = match parse_mode(&mode)? {
                DecideMode::Paper => ObjectiveMode::Paper,
                DecideMode::Oracle => ObjectiveMode::Oracle,
            };
            let instance = parse_instance(&read_stdin()?)?;
            let (schedule, value, report) = solve_objective(
                &instance,
                &eps.value(),
                &spec,
                mode,
                &ObjectiveBudgets::default(),
            )?;
            println!("objective {value}");
            let indices: Vec<String> = schedule
                .assignment()
                .iter()
                .map(|i| i.to_string())
                .collect();
            println!("{}", indices.join(" "));
            eprintln!(
                "factor {} delta {} lambda {}",
                report.composed_factor, report.delta, report.lambda
            );
            Ok(0)
        }
        Command::Thin {} => {
            let (ip, solution) = formats::parse_confip_with_solution(&read_stdin()?)?;
            let mut trace = Trace::default();
            let thin = ip.make_thin_traced(&solution, &mut trace)?;
            println!("{thin}");
            let spec = ip.spec();
            let multiplicity_ok = thin
                .multiplicities()
                .iter()
                .all(|(c, &v)| spec.is_simple(c) || v <= 1);
            let support_ok =
                thin_support_bound_holds(thin.support_size(), spec.dimension(), spec.capacity());
            let mass_ok = complex_mass_bound_holds(
                thin.complex_mass(spec),
                spec.dimension(),
                spec.capacity(),
            );
            println!(
                "supp={} complex_mass={} phi={}",
                thin.support_size(),
                thin.complex_mass(spec),
                thin.potential(spec)
            );
            println!(
                "properties multiplicity={} support={} mass={}",
                ok(multiplicity_ok),
                ok(support_ok),
                ok(mass_ok)
            );
            print!("{}", trace.lines());
            Ok(if multiplicity_ok && support_ok && mass_ok { 0 } else { 1 })
        }
        Command::Verify { instance, schedule } => {
            let instance = parse_instance(&read_file(&instance)?)?;
            let text = read_file(&schedule)?;
            let (declared, assignment) = parse_schedule(&text)?;
            let schedule = match Schedule::new(&instance, assignment) {
                Ok(s) => s,
                Err(e) => {
                    println!("invalid schedule: {e}");
                    return Ok(1);
                }
            };
            let actual = schedule.makespan();
            if actual != declared {
                println!("makespan mismatch: declared {declared}, recomputed {actual}");
                return Ok(1);
            }
            println!("ok makespan {actual}");
            Ok(0)
        }
        Command::Bench { manifest, zero_ms, no_oracle } => {
            let rows = formats::parse_manifest(&read_file(&manifest)?)?;
            let mut records: Vec<(String, String)> = Vec::new();
            for row in &rows {
                let eps = Epsilon::parse(&row.eps)?;
                let mode = parse_mode(&row.mode)?;
                let instance = generate_instance(row.seed, row.n, row.m, row.pmax)?;
                let options = SolveOptions {
                    mode,
                    ..Default::default()
                };
                let started = Instant::now();
                let outcome = eptas::solve(&instance, eps, &options);
                let ms = if zero_ms {
                    0
                } else {
                    started.elapsed().as_millis() as u64
                };
                let (value, budget_hit) = match &outcome {
                    Ok((schedule, _)) => (Some(schedule.makespan()), false),
                    Err(Error::CapExceeded { .. }) => (None, true),
                    Err(e) => return Err(Error::invalid(format!("{}: {e}", row.id))),
                };
                let oracle_value = if no_oracle {
                    None
                } else {
                    oracle::opt_makespan(&instance, &Default::default())
                        .ok()
                        .map(|(v, _)| v)
                };
                let ratio = match (value, oracle_value) {
                    (Some(v), Some(o)) if o > 0 => format!("{:.6}", v as f64 / o as f64),
                    _ => String::new(),
                };
                let record = format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    row.id,
                    row.n,
                    row.m,
                    row.eps,
                    row.mode,
                    value.map_or(String::new(), |v| v.to_string()),
                    oracle_value.map_or(String::new(), |v| v.to_string()),
                    ratio,
                    ms,
                    if budget_hit { 1 } else { 0 }
                );
                records.push((row.id.clone(), record));
            }
            records.sort_by(|a, b| a.0.cmp(&b.0));
            println!("id,n,m,eps,mode,value,oracle,ratio,ms,budget_hit");
            for (_, record) in records {
                println!("{record}");
            }
            Ok(0)
        }
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "violated"
    }
}

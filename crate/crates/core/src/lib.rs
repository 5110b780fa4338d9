//! Structural toolkit for configuration integer programs over knapsack
//! polytopes, and the approximation schemes built on it: an EPTAS for
//! makespan scheduling on identical machines and for a family of load-based
//! objectives, together with brute-force oracles that verify every
//! structural property at desk scale.
//!
//! The central objects are the knapsack polytope `{c >= 0 : pi . c <= T}`,
//! its integer points (*configurations*), and the IP that covers a demand
//! vector with exactly `m` configurations. Configurations with support
//! larger than `log2(T+1)` can always be split into two of smaller support
//! ([`knapsack::KnapsackSpec::sparsify`]), which yields sparse, near-integral
//! structure in the solution space ([`confip::ConfIp::make_thin`]) and a
//! fast exact decision procedure for rounded scheduling instances
//! ([`eptas::solve`], [`objectives::solve_objective`]).

pub mod confip;
pub mod eptas;
pub mod error;
pub mod instance;
pub mod knapsack;
pub mod objectives;
pub mod oracle;
pub mod solver;

pub use confip::{ConfIp, ConfSolution};
pub use error::Error;
pub use instance::{Instance, Schedule};
pub use knapsack::{Configuration, KnapsackSpec};

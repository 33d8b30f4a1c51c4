//! Trust-region policy optimization over tabular policies with Wasserstein and Sinkhorn
//! trust regions: closed-form updates, dual multiplier solvers, exact MDP oracles and
//! numerical certificates for the convergence theory.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cost;
pub mod distribution;
pub mod dual;
pub mod envs;
pub mod estimation;
pub mod error;
pub mod mdp;
pub mod ot;
pub mod policy;
pub mod rng;
pub mod table;
pub mod trainer;
pub mod trajectory;
pub mod updates;

pub use cost::{CostMatrix, CostPreset};
pub use distribution::Distribution;
pub use envs::{EnvKind, EnvSpec};
pub use error::{Error, Result};
pub use mdp::{Outcome, TabularMdp};
pub use policy::PolicyTable;
pub use rng::Rng;
pub use table::ActionTable;
pub use trajectory::{Step, Trajectory};

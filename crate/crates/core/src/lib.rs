//! Self-adaptive inertial extragradient methods for monotone, Lipschitz
//! continuous variational inequalities, with the baselines they are compared
//! against and a small benchmark harness.
//!
//! ```
//! use vi_extragrad::prelude::*;
//!
//! let p = make_example1();
//! let x0 = HVec::euclidean(vec![0.8, 0.6]).unwrap();
//! let trace = run(Algorithm::Misegm, &p, &Schedules::default(), x0.clone(), x0, 200, None).unwrap();
//! assert!(trace.records.last().unwrap().error < 1e-6);
//! ```

pub mod cli;
pub mod error;
pub mod harness;
pub mod hilbert;
pub mod problems;
pub mod projections;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::harness::{ExperimentConfig, ProblemKind, ResultRow};
    pub use crate::hilbert::{Grid, HVec};
    pub use crate::problems::{make_example1, make_example2, make_example3, ProblemInstance};
    pub use crate::projections::FeasibleSet;
    pub use crate::solvers::{run, Algorithm, IterationRecord, IterationTrace, Schedules, Solver};
}

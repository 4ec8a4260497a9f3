//! Interactive clustering with a same-cluster oracle and noisy pairwise side
//! information: instance generation, a Monte Carlo and a Las Vegas solver, a
//! query-only baseline, lower-bound calculators and a benchmark harness.

pub mod bounds;
pub mod clustering;
pub mod divergence;
pub mod estimation;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod partition;
pub mod report;
pub mod solver_lv;
pub mod solver_mc;

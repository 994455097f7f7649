//! Oracles and experiment runners: finite differences, manufactured
//! solutions, jump-relation sweeps, non-tangential maximal functions,
//! convergence studies and the check suites shared by the CLI and the
//! acceptance run.

mod fd;
mod manufactured;
mod studies;
pub mod suites;

pub use fd::{fd_gradient, fd_laplacian};
pub use manufactured::{manufactured_catalog, Manufactured};
pub use studies::{
    convergence_study, fit_order, jump_relation_sweep, nontangential_max, probe_points, write_csv, ConvergenceRecord,
    CsvRow, DataFn, FamilyData, JumpQuantity, JumpRow, MaximalFunction, ProblemFamily, CSV_HEADER,
};
pub use suites::Check;

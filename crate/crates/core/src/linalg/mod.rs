//! Dense linear algebra shared by every checker: exact rationals for
//! decisions, doubles for sampling and search, intervals for certification.

pub mod exact;
pub mod interval;
pub mod modular;
pub mod numeric;
pub mod signal;

pub use exact::{nullspace_basis, projector, rank_exact, same_row_space, RMatrix, Rational};
pub use interval::{interval_minor, Interval, IntervalMatrix};
pub use numeric::{numeric_rank, smallest_singular_value, FMatrix};
pub use signal::Signal;

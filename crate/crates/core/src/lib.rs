//! Exact number variance of dilated integer sequences modulo one.
//!
//! Points `alpha x_n mod 1` live on a 128-bit fixed-point circle and interval
//! lengths are dyadic rationals, so the variance routes, the plateau
//! decomposition and the arithmetic statistics are all exact integer
//! computations until the final conversion to `f64`.

pub mod arithmetic;
pub mod baselines;
pub mod dyadic;
pub mod error;
pub mod fixed;
pub mod points;
pub mod scan;
pub mod variance;

pub use arithmetic::{
    additive_energy, congruence_solution_count, difference_set, divisibility_bound_check,
    energy_window, gcd_average, gcd_sum, rep_quadratic_divisor, rep_table, sparse_u2_mass,
    tau_moment_sum, DifferenceSet, GcdVariant, RepTable,
};
pub use baselines::{
    bridge_functional, bridge_path, kronecker_experiment, prop2_exceedance_scan,
    random_variance_experiment, sample_uniform, BridgePath, RandomSample,
};
pub use dyadic::{decompose, verify_decomposition, y_statistic, DyadicExpansion, PlateauKernel};
pub use error::{Budget, Error, Result};
pub use fixed::Dyadic;
pub use points::{
    continued_fraction_convergents, dilate_mod1, generate_terms, Alpha, Convergents, PointSet,
    SequenceSpec,
};
pub use scan::{emit, run_scan, ExperimentConfig, OutputFormat, ScanResult};
pub use variance::{
    counting_function, periodized_tent, variance_pairwise, variance_sweep, AlphaTag, TentKernel,
    VarianceRecord,
};

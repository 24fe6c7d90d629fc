//! Input-output theory engine: pump steady state, bistability and
//! linearized signal/image gain.

pub mod continuation;
pub mod cubic;
pub mod gain;
pub mod steady;

pub use continuation::{trace_branch, BranchPoint, ContinuationBranch};
pub use gain::{
    degenerate_gain, gain_spectrum, linearized_gain, optimal_pump_detuning, to_db, GainEntry, GainSpectrum, LinearGain,
    OptimalPump,
};
pub use steady::{
    critical_power, cubic_residual, residual_bound, select_branch, slow_fast_rates, solve_pump_cubic,
    solve_pump_cubic_phased, BranchChoice, CriticalPoint, PumpOperatingPoint,
};

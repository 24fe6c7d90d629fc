//! Characterization, sweep and comparison workflows built on both engines.

pub mod calibration;
pub mod fit;
pub mod runs;
pub mod sweep;

pub use calibration::{
    current_for_flux, current_to_dbm, dbm_to_current, extract_resonance, Calibration, ResonanceCharacterization,
    RunOptions,
};
pub use fit::{fit_reflection_phase, reflection_phase, ResonanceFit, VALID_RESIDUAL_RMS};
pub use runs::{
    compare_frameworks, compression_sweep, measure_gain, one_db_point, pump_detuning_sweep, signal_frequency_sweep,
    ComparisonReport, CompressionResult, GainCellValues, GainOutcome, GainRequest,
};
pub use sweep::{fmt_f64, CellStatus, SweepAxis, SweepCell, SweepResult};

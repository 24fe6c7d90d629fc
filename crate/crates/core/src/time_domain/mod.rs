//! Circuit engine: time-domain integration of the coupled junction
//! resonator, wave reconstruction and tone extraction.

pub mod circuit;
pub mod measure;
pub mod ode;
pub mod projection;
pub mod trace;

pub use circuit::{eom_rhs, junction_current, small_signal_pole, CircuitSystem, JunctionKind, State};
pub use measure::{measure_tones, single_tone_window, snap_tones, SnappedTones, ToneMeasurement, ToneReport};
pub use ode::{run, Method, OdeSettings, RunStats, SampleGrid};
pub use projection::{fourier_project, simpson_weight, ProjectionAccumulator, ProjectionWindow, S11Point};
pub use trace::{
    idler_gain_at, integrate, integrate_with, reconstruct_waves, s11_at, write_trace_csv, TimeTrace, TraceOptions,
    Waves,
};

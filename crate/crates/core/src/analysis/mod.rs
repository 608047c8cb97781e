//! Chaos diagnostics applied uniformly to every backend.

pub mod backend;
pub mod divergence;
pub mod fit;
pub mod histogram;
pub mod lyapunov;
pub mod strobe;

pub use backend::{
    default_initial_moments, Backend, ClassicalBackend, ClosureBackend, NoisyClassicalBackend,
    SseBackend, WignerBackend,
};
pub use divergence::{divergence_curve, PhaseMetric};
pub use fit::{linear_fit, select_window, LinearFit, WindowRule};
pub use histogram::{bhattacharyya, Histogram2d};
pub use lyapunov::{lyapunov_paper_procedure, Averaging, LyapunovEstimate, NeighbourMode, LyapunovProtocol};
pub use strobe::{stroboscopic_map, StroboscopicMap};

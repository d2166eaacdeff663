//! Monte Carlo of the heralded detection chain, timing analysis and CAR, with
//! a closed-form model of the same chain.

mod analysis;
mod analytic;
mod detector;
mod rates;
mod sim;

pub use analysis::{
    car, car_summary, histogram, histogram_summary, pair_metrics, pair_metrics_summary,
    CarEstimate, PairMetrics, TimingHistogram,
};
pub use analytic::{analytic_car, analytic_counts, first_order_car, AnalyticCounts};
pub use detector::{
    DetectorKind, DetectorModel, EfficiencyProfile, DEFAULT_GATED_DARK_PROB,
    DEFAULT_NFAD_DEAD_TIME_NS,
};
pub use rates::{BirthModel, ChannelRates, PairStatistics};
pub use sim::{simulate_pulses, simulate_summary, CountRecord, CountSummary, BLOCK_PULSES};

//! Valuations, rho/mu gain stability and gain computation over finite
//! graphs, and small-gain composition.

mod compose;
mod cycles;
mod graph;
mod valuation;

pub use compose::small_gain_compose;
pub use cycles::{
    compute_gain, compute_gain_witnessed, max_cycle_mean, verify_gain_stable, CycleMean,
    StabilityVerdict,
};
pub use graph::{Cycle, WeightedEdge, WeightedGraph};
pub use valuation::{partial_sums, GainSpec, Valuation};

pub(crate) use graph::scc;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GainError {
    #[error("symbol is not in the valuation's alphabet")]
    AlphabetMismatch,
    #[error("symbol appears twice in a valuation")]
    DuplicateSymbol,
    #[error("signal sequences are shorter than the horizon")]
    SequenceTooShort,
    #[error("partial sums need a finite gamma")]
    InfiniteGamma,
    #[error("gamma must be non-negative")]
    NegativeGamma,
    #[error("gain computation needs non-negative rho and mu weights")]
    NegativeWeight,
    #[error("edge or initial node refers to an undeclared node")]
    MalformedGraph,
    #[error("tau must be positive")]
    NonPositiveTau,
    #[error("composition over an empty alphabet")]
    DegenerateAlphabet,
}

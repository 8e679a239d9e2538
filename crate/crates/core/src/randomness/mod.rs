//! Randomness sources: independent, k-wise independent and (δ,k)-dependent
//! bits, Bernoulli extraction from bit slots, and seed accounting.

mod bch;
mod dependency;
mod gf2;
mod smallbias;
mod source;

pub use bch::{bch_kwise_vectors, field_degree, kwise_length, KwiseVectors};
pub use dependency::{dependency_tracker, DependencyReport, EdgeDependency};
pub use gf2::{is_irreducible, Gf2Field};
pub use smallbias::{
    bias_of_subset, eps_biased_seed_space, ones_probability, sample_delta_k, seed_budget,
    verify_delta_k, BitDistribution, DeltaKReport, SeedAccounting, SeedBudget, SeedSpace,
    SmallBiasSpace, SEED_BUDGET_CONSTANT,
};
pub use source::{
    bernoulli_from_bits, trial_seed, CoinRole, CoinSource, IidSource, RngSpec, SlotSource,
    SourceFactory,
};

//! Digital-character spectra, alignment measures and learning bounds for
//! arithmetic functions on `Z/XZ` with `X = ∏ p_i^{d_i}`.
//!
//! Integers `x < X` are identified with digit vectors through the CRT:
//! block `i` holds the base-`p_i` digits of `x mod p_i^{d_i}`, least
//! significant first.

pub mod align;
pub mod arith;
pub mod error;
pub mod fp;
pub mod group;
pub mod learn;
pub mod limits;
pub mod primes;
pub mod spectral;
pub mod sum;

pub use align::{
    alignment_full_group, alignment_gram_oracle, alignment_semidirect, alignment_subgroup, learning_bounds,
    AlignmentResult, AlignmentWitness, BoundParams, LearningBounds, SubgroupSpec,
};
pub use arith::{nu_p_weight, sieve, ArithmeticTable, FunctionKind};
pub use error::{Error, Result};
pub use group::{char_eval, char_stats, CharStats, CharacterIndex, GroupShape};
pub use limits::Limits;
pub use primes::{
    count_primes_digit_condition, lambda_balanced_correlation, singular_series, DigitPrimeCount, LinearDigitMap,
    SingularSeries,
};
pub use spectral::{correlation, group_spectrum, Spectrum};

pub mod covariance;
pub mod csq;
pub mod mlp;
pub mod ngd;

pub use covariance::{binary_mult_covariance, sample_binary_multiplicative, CovarianceMode, CovarianceSpectrum};
pub use csq::{csq_adversarial_game, csq_bad_event_rate, CsqLearner, CsqTranscript, FixedFeatureLearner};
pub use mlp::{gradient_check, Mlp};
pub use ngd::{ngd_experiment, ngd_train, NgdConfig, NgdExperiment, NgdRun};

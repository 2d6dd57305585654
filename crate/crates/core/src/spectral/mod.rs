pub mod katai;
pub mod kernel;
pub mod transform;

pub use katai::{katai_witness, p_power_rational_check, KataiOutcome, KataiWitness, RationalCheck, SparseTerm};
pub use kernel::{
    ap_l1_sum, char_dft_closed_form, char_l1_norm, gq, interval_l1_sum, linf_bound, linf_bound_check,
    truncated_character, LinfCheck, Truncation,
};
pub use transform::{correlation, group_spectrum, group_spectrum_complex, group_spectrum_with, Spectrum};

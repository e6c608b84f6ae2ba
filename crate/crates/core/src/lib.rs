//! Sharing analysis for logic programs: set-sharing with and without
//! pair-sharing redundancy, freeness/linearity/ground-or-freeness tracking,
//! Pos groundness, a suite of precision enhancements, a goal-dependent and
//! goal-independent fixpoint analyzer, and a precision measurement harness.

pub mod concrete_oracle;
pub mod enhancements;
pub mod groundness_pos;
pub mod kernel_terms;
pub mod mode_domains;
pub mod set_sharing;
pub mod fixpoint_engine;
pub mod precision_harness;

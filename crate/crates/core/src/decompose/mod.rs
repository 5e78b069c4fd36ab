//! Quasi-mixture decompositions of non-signalling channels and the
//! common-cause realizations built from them.

pub mod frame;
pub mod quasi;
pub mod realization;
pub(crate) mod tensor;

pub use frame::{expected_affine_rank, labelled_frame, local_channel_frame, LocalChannelFrame, WingFrame};
pub use quasi::{decompose_quasimixture, decompose_with, negativity, DecomposeMode, QuasiMixture, QuasiTerm};
pub use realization::{
    build_realization, build_realization_for, carrier_view, next_channel_id, recompose, verify_realization,
    CommonCauseRealization, TypeBrand,
};

//! Click statistics of multiplexed photon detectors, nonclassicality
//! witnesses built on them, and the simulated experiments that exercise both.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]
// `!(x >= 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detector;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod fockspace;
pub mod inversion;
mod math;
pub mod rng;
pub mod witnesses;

pub use detector::{
    click_matrix, click_matrix_inclusion_exclusion, condition_on_clicks, forward_clicks, joint_forward_clicks,
    sample_counts, sample_joint_counts, Arm, ClickDistribution, ClickMatrix, Condition, CountRecord, DetectorModel,
    JointClickDistribution, JointCountRecord,
};
pub use distributions::{
    coherent_pn, fock_pn, moments, thermal_pn, JointPhotonDistribution, PhotonDistribution, Truncation,
};
pub use error::{Error, Result};
pub use fockspace::{
    apply_beamsplitter, apply_beamsplitter_inverse, apply_loss, catalysis_conditional_pn, BeamSplitter, Herald,
    TwoModeState,
};
pub use inversion::{
    invert_clicks, q_mandel_from_clicks, InversionMethod, InversionReport, InversionWarning, Inverter,
};
pub use witnesses::{mc_witness, q_binomial, q_fake, q_mandel, ClickWitness, Histogram, WitnessEstimate};

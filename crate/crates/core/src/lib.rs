//! Thrombus vs. muscle classification of transesophageal echocardiography
//! sequences.
//!
//! The pipeline runs per frame and per sequence:
//!
//! 1. [`enhance`]: Gaussian low-pass filtering in the frequency domain followed
//!    by a nonlinear gain that keeps bright echoes and attenuates dim ones.
//! 2. [`texture`]: rotation-invariant uniform LBP variance (LBPV) histogram over
//!    the region of interest, plus gray-level entropy, mean and deviation.
//! 3. [`features`]: static per-frame vectors, dynamic vectors that add the mean
//!    absolute difference to the neighboring frames, min-max normalization and
//!    multiple-instance training-set construction.
//! 4. [`svm`]: soft-margin SVM trained with sequential minimal optimization and
//!    tuned by grid search.
//! 5. [`eval`]: bag-level stratified cross-validation of the three pipeline
//!    variants, ROC/AUC with bootstrap confidence intervals and a paired Z-test.
//!
//! [`synth`] generates deterministic synthetic sequences so everything can be
//! run without clinical data, and [`dataset`] reads and writes the manifest and
//! PGM formats shared by all of the above.

pub mod cli;
pub mod dataset;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod features;
pub mod svm;
pub mod synth;
pub mod texture;

pub use dataset::{Bag, Dataset, Frame, GrayImage, Label, RoiMask};
pub use error::{Error, Result};

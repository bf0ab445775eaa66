//! Atypicality detection for binary data.
//!
//! A window of data is *atypical* when it can be described more compactly by
//! a universal coder that learns as it goes than by the model of typical
//! data, after paying a threshold `tau` in bits. This crate provides the code
//! lengths on both sides, a scanner that locates atypical windows in long
//! sequences, conversions from common data into bits and Monte-Carlo
//! experiments on the detector.

pub mod binarize;
pub mod bits;
pub mod cli;
pub mod codelength;
pub mod ctw;
pub mod error;
pub mod frozen;
pub mod iid;
pub mod montecarlo;
pub mod scanner;

pub use bits::BitSequence;
pub use codelength::{binary_entropy, kt_block_codelength, kt_predict, log_star, relative_entropy, KtCounts};
pub use ctw::{atypical_codelength, ctw_codelength, ctw_update, AtypicalCodeLength, BlockCoder, ContextTree, SequentialCoder, WindowCoder};
pub use error::{Error, Result};
pub use iid::{iid_atypicality_test, AtypicalityVerdict, IidTypicalModel};

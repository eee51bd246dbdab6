//! Template matching in hierarchical CNN feature spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: dense CHW tensors, convolution, pooling, bilinear resize, image I/O.
//! - [`vgg`]: weight-bundle loading and a VGG19 forward pass that taps named layers.
//! - [`features`]: color difference-of-Gaussians channels, PCA, and multi-layer fusion.
//! - [`matchers`]: SSD, NCC, ZNCC and the DIM explaining-away matcher.
//! - [`bench`]: dataset manifests, IoU/success-curve metrics, evaluation and reports.
//! - [`pipeline`]: the per-pair glue used by both evaluation and the CLI.

pub mod bench;
pub mod error;
pub mod features;
pub mod matchers;
pub mod pipeline;
pub mod tensor;
pub mod vgg;

pub use error::{Error, Result};
pub use tensor::{BoundingBox, Scale, Tensor};

//! Centerline-boundary Dice and the cl-X-Dice metric family for tubular
//! structure segmentation.

pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod numfmt;
pub mod phantoms;
pub mod softloss;

pub use error::{Error, Result};
pub use grid::{BinaryField, GridShape, LabelGrid, ScalarField};
pub use metrics::{cl_dice, cl_x_dice, dice, evaluate, MetricReport, Variant, VariantSpec};
pub use morphology::{build_bundle, edt, joint_bundles, skeletonize, SkeletonBundle};
pub use morphology::{paired_bundles, Normalization};
pub use softloss::{combined_loss, soft_skeleton, CombinedLossSpec, ProbField, SoftLoss};

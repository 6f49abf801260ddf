//! Hard evaluation metrics.

mod betti;
mod nsd;
mod overlap;
mod report;
mod variants;

pub use betti::{betti_err, betti_numbers, euler_characteristic, Betti};
pub use nsd::{boundary, nsd};
pub use overlap::{cl_dice, cl_dice_parts, dice, Topo};
pub use report::{evaluate, ClassMetrics, EvalOptions, MetricReport, Summary, SCHEMA};
pub use variants::{cl_x_dice, cl_x_parts, cl_x_sums, FieldKind, QField, RatioSums, Recipe, Variant, VariantSpec};

pub(crate) use overlap::{harmonic_mean, ratio};
pub(crate) use variants::Fields;

//! Skeletons, distance maps and the radius fields derived from them.

mod bundle;
mod edt;
mod thinning;

pub use bundle::{
    build_bundle, joint_bundles, normalized_fields, paired_bundles, Normalization, NormalizedFields, SkeletonBundle,
};
pub use edt::{edt, edt_squared, sq_distance_to_sites};
pub use thinning::skeletonize;

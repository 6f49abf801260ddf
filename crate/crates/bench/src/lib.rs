//! Fixtures shared by the benchmarks.

use vesseltop::phantoms::{generate, translate, PhantomSpec};
use vesseltop::BinaryField;

/// A reference tube and a copy shifted off-axis by one voxel, in a square
/// plane of side `n` or a cube of side `n / 2`.
pub fn tube_pair(n: usize, volumetric: bool) -> (BinaryField, BinaryField) {
    let (dims, offset) = if volumetric {
        (vec![n / 2; 3], vec![0, 1, 0])
    } else {
        (vec![n, n], vec![0, 1])
    };
    let r = (n as f64 / if volumetric { 12.0 } else { 8.0 }).max(1.0);
    let len = dims[0] as f64 * 0.6;
    let reference = generate(&PhantomSpec::tube(&dims, r, len)).expect("fixture fits");
    let pred = translate(&reference, &offset).expect("shift stays inside");
    (pred, reference)
}

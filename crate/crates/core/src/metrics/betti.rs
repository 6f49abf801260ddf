//! Betti numbers of binary masks.
//!
//! Foreground uses full adjacency (8 in 2D, 26 in 3D) and background uses
//! face adjacency, the pairing under which the mask behaves like the union
//! of its closed unit cells. The outside of the grid is background.

use std::collections::VecDeque;

use crate::error::Result;
use crate::grid::{BinaryField, GridShape};

/// `[β0, β1, β2]`; β2 is 0 for 2D masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Betti(pub [u64; 3]);

impl Betti {
    pub fn b0(&self) -> u64 {
        self.0[0]
    }
    pub fn b1(&self) -> u64 {
        self.0[1]
    }
    pub fn b2(&self) -> u64 {
        self.0[2]
    }
}

/// Labels the members reachable through `offsets`. Returns per-element
/// labels (`u32::MAX` for non-members) and the component count.
pub(crate) fn components(shape: &GridShape, member: &[bool], offsets: &[[isize; 3]]) -> (Vec<u32>, usize) {
    let mut label = vec![u32::MAX; member.len()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for s in 0..member.len() {
        if !member[s] || label[s] != u32::MAX {
            continue;
        }
        label[s] = count;
        queue.push_back(s);
        while let Some(i) = queue.pop_front() {
            let c = shape.coords(i);
            for &o in offsets {
                if let Some(j) = shape.shifted(c, o) {
                    if member[j] && label[j] == u32::MAX {
                        label[j] = count;
                        queue.push_back(j);
                    }
                }
            }
        }
        count += 1;
    }
    (label, count as usize)
}

/// Face-connected background components that do not touch the grid border.
fn bounded_background(mask: &BinaryField) -> u64 {
    let shape = mask.shape();
    let bg: Vec<bool> = mask.values().iter().map(|&v| v == 0).collect();
    let (label, count) = components(shape, &bg, shape.face_offsets());
    let mut open = vec![false; count];
    let [w, h, d] = shape.extent();
    let three = shape.ndim() == 3;
    for (i, &l) in label.iter().enumerate() {
        if l == u32::MAX {
            continue;
        }
        let [x, y, z] = shape.coords(i);
        let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h || (three && (z == 0 || z + 1 == d));
        if border {
            open[l as usize] = true;
        }
    }
    open.iter().filter(|&&o| !o).count() as u64
}

/// Euler characteristic of the union of closed unit cells (squares in 2D,
/// cubes in 3D) covering the foreground.
///
/// Cells of every dimension are enumerated on the doubled lattice: a cell
/// with doubled coordinates `u` has dimension equal to the number of odd
/// entries and is present when any voxel containing it is foreground.
pub fn euler_characteristic(mask: &BinaryField) -> i64 {
    let shape = mask.shape();
    let [w, h, d] = shape.extent();
    let three = shape.ndim() == 3;
    let nz = if three { 2 * d + 1 } else { 1 };
    // voxel ranges along one axis containing doubled coordinate u
    let span = |u: usize, n: usize| -> (usize, usize) {
        if u % 2 == 1 {
            (u / 2, u / 2)
        } else {
            (if u == 0 { 0 } else { u / 2 - 1 }, (u / 2).min(n - 1))
        }
    };
    let mut chi = 0i64;
    for wz in 0..nz {
        let (z0, z1) = if three { span(wz, d) } else { (0, 0) };
        let zodd = three && wz % 2 == 1;
        for v in 0..2 * h + 1 {
            let (y0, y1) = span(v, h);
            for u in 0..2 * w + 1 {
                let (x0, x1) = span(u, w);
                let mut present = false;
                'search: for z in z0..=z1 {
                    for y in y0..=y1 {
                        for x in x0..=x1 {
                            if mask.get(shape.index(x, y, z)) {
                                present = true;
                                break 'search;
                            }
                        }
                    }
                }
                if present {
                    let dim = (u % 2) + (v % 2) + zodd as usize;
                    chi += if dim % 2 == 0 { 1 } else { -1 };
                }
            }
        }
    }
    chi
}

pub fn betti_numbers(mask: &BinaryField) -> Betti {
    let shape = mask.shape();
    let fg = mask.to_bools();
    let (_, b0) = components(shape, &fg, shape.full_offsets());
    let b0 = b0 as u64;
    let holes = bounded_background(mask);
    if shape.ndim() == 2 {
        Betti([b0, holes, 0])
    } else {
        let chi = euler_characteristic(mask);
        let b1 = b0 as i64 + holes as i64 - chi;
        debug_assert!(b1 >= 0, "negative β1 from χ = {chi}");
        Betti([b0, b1.max(0) as u64, holes])
    }
}

/// `Σ |β_i(pred) − β_i(ref)|`.
pub fn betti_err(pred: &BinaryField, reference: &BinaryField) -> Result<u64> {
    pred.shape().ensure_same(reference.shape())?;
    let (a, b) = (betti_numbers(pred), betti_numbers(reference));
    Ok((0..3).map(|k| a.0[k].abs_diff(b.0[k])).sum())
}

//! Distance-ordered homotopic thinning.
//!
//! Border voxels are visited in order of increasing distance to the
//! background and deleted when they are simple. Deleting a simple point never
//! changes the number of components, tunnels or cavities, so the result has
//! the topology of the input. Local maxima of the distance map are anchored
//! during the first pass, which keeps the ridge of a tube (its centerline)
//! and lets curve tips retract onto it instead of leaving spurs.
//!
//! Connectivity pairing: 8/4 in 2D, 26/6 in 3D. Voxels outside the grid are
//! background.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use super::edt::edt_squared;
use crate::grid::{BinaryField, GridShape};

pub fn skeletonize(mask: &BinaryField) -> BinaryField {
    let shape = mask.shape();
    let depth = edt_squared(mask);
    let mut img = mask.to_bools();
    let anchor: Vec<bool> = (0..shape.len())
        .map(|i| {
            img[i] && {
                let c = shape.coords(i);
                shape
                    .full_offsets()
                    .iter()
                    .all(|&o| shape.shifted(c, o).is_none_or(|j| depth[j] <= depth[i]))
            }
        })
        .collect();
    // Pass 1 peels everything that is not a local maximum of the distance
    // map; pass 2 thins plateaus of maxima down to curves.
    thin(shape, &mut img, &depth, |i, nb| !anchor[i] && is_simple(shape.ndim(), nb), false);
    thin(shape, &mut img, &depth, |_, nb| !is_endpoint(nb) && is_simple(shape.ndim(), nb), true);
    BinaryField::from_bools(shape.clone(), &img).expect("same shape")
}

fn thin(shape: &GridShape, img: &mut [bool], depth: &[u64], deletable: impl Fn(usize, u32) -> bool, all: bool) {
    let n = shape.len();
    let mut queued = vec![false; n];
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        if !img[i] {
            continue;
        }
        let c = shape.coords(i);
        let border = all
            || shape
                .face_offsets()
                .iter()
                .any(|&o| shape.shifted(c, o).is_none_or(|j| !img[j]));
        if border {
            heap.push(Reverse((depth[i], i)));
            queued[i] = true;
        }
    }
    while let Some(Reverse((_, i))) = heap.pop() {
        queued[i] = false;
        if !img[i] {
            continue;
        }
        if !deletable(i, neighborhood(shape, img, i)) {
            continue;
        }
        img[i] = false;
        let c = shape.coords(i);
        for &o in shape.full_offsets() {
            if let Some(j) = shape.shifted(c, o) {
                if img[j] && !queued[j] {
                    queued[j] = true;
                    heap.push(Reverse((depth[j], j)));
                }
            }
        }
    }
}

/// Bit k set when the k-th entry of `full_offsets` is foreground.
fn neighborhood(shape: &GridShape, img: &[bool], i: usize) -> u32 {
    let c = shape.coords(i);
    shape
        .full_offsets()
        .iter()
        .enumerate()
        .fold(0u32, |acc, (k, &o)| match shape.shifted(c, o) {
            Some(j) if img[j] => acc | (1 << k),
            _ => acc,
        })
}

fn is_endpoint(nb: u32) -> bool {
    nb.count_ones() == 1
}

pub(crate) fn is_simple(ndim: usize, nb: u32) -> bool {
    if ndim == 2 {
        simple_table_2d()[nb as usize]
    } else {
        simple_3d(nb)
    }
}

fn simple_table_2d() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let offs = GridShape::plane(1, 1).full_offsets();
        let mut t = [false; 256];
        for (cfg, slot) in t.iter_mut().enumerate() {
            *slot = simple_generic(offs, cfg as u32);
        }
        t
    })
}

fn simple_3d(nb: u32) -> bool {
    simple_generic(GridShape::volume(1, 1, 1).full_offsets(), nb)
}

/// Simple-point test on the punctured neighborhood.
///
/// The foreground must form exactly one component under full adjacency, and
/// the background restricted to positions within L1 distance 2 of the center
/// (all of N8 in 2D, N18 in 3D) must have exactly one face-connected
/// component touching a face neighbor of the center.
fn simple_generic(offs: &[[isize; 3]], cfg: u32) -> bool {
    let l1 = |o: &[isize; 3]| o[0].abs() + o[1].abs() + o[2].abs();
    let linf = |a: &[isize; 3], b: &[isize; 3]| (0..3).map(|k| (a[k] - b[k]).abs()).max().unwrap();
    let face = |a: &[isize; 3], b: &[isize; 3]| (0..3).map(|k| (a[k] - b[k]).abs()).sum::<isize>() == 1;

    let m = offs.len();
    let fg: Vec<bool> = (0..m).map(|k| cfg & (1 << k) != 0).collect();

    let fg_components = count_components(m, |k| fg[k], |a, b| linf(&offs[a], &offs[b]) <= 1, |_| true);
    if fg_components != 1 {
        return false;
    }
    let bg_components = count_components(
        m,
        |k| !fg[k] && l1(&offs[k]) <= 2,
        |a, b| face(&offs[a], &offs[b]),
        |k| l1(&offs[k]) == 1,
    );
    bg_components == 1
}

/// Components of the members that contain at least one `anchor`.
fn count_components(
    m: usize,
    member: impl Fn(usize) -> bool,
    adjacent: impl Fn(usize, usize) -> bool,
    anchor: impl Fn(usize) -> bool,
) -> usize {
    let mut seen = vec![false; m];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..m {
        if seen[s] || !member(s) {
            continue;
        }
        seen[s] = true;
        stack.push(s);
        let mut anchored = false;
        while let Some(a) = stack.pop() {
            anchored |= anchor(a);
            for b in 0..m {
                if !seen[b] && member(b) && adjacent(a, b) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        count += anchored as usize;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_point_table_basics() {
        // isolated point and fully interior point are not simple
        assert!(!is_simple(2, 0));
        assert!(!is_simple(2, 0xff));
        // a single neighbor: endpoint-like but simple
        assert!(is_simple(2, 1 << 1));
        // bridge between left and right neighbors is not simple
        assert!(!is_simple(2, (1 << 3) | (1 << 4)));
        assert!(!is_simple(3, 0));
        assert!(!is_simple(3, (1 << 26) - 1));
    }

    #[test]
    fn thin_line_is_fixed() {
        let shape = GridShape::plane(12, 5);
        let line = BinaryField::from_fn(shape, |x, y, _| y == 2 && (1..11).contains(&x));
        assert_eq!(skeletonize(&line), line);
    }

    #[test]
    fn rectangle_becomes_path() {
        let shape = GridShape::plane(11, 7);
        let rect = BinaryField::from_fn(shape.clone(), |x, y, _| (2..9).contains(&x) && (2..5).contains(&y));
        let sk = skeletonize(&rect);
        assert!(sk.count() >= 1);
        for i in sk.foreground() {
            assert!(rect.get(i));
        }
        // no 2x2 blocks
        for y in 0..6 {
            for x in 0..10 {
                let block = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]
                    .iter()
                    .all(|&(a, b)| sk.get(shape.index(a, b, 0)));
                assert!(!block);
            }
        }
    }
}

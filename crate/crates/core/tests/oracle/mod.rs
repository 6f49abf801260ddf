//! Brute-force reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng;
use vesseltop::{BinaryField, GridShape};

/// Random shape with each extent in `2..=max` (the third only in 3D).
pub fn random_shape<R: Rng>(rng: &mut R, max: [usize; 3], ndim: usize) -> GridShape {
    let w = rng.gen_range(2..=max[0]);
    let h = rng.gen_range(2..=max[1]);
    if ndim == 2 {
        GridShape::plane(w, h)
    } else {
        GridShape::volume(w, h, rng.gen_range(2..=max[2]))
    }
}

/// Bernoulli mask; the density itself is drawn so both sparse and dense
/// masks occur.
pub fn random_mask<R: Rng>(rng: &mut R, shape: GridShape) -> BinaryField {
    let density = rng.gen_range(0.1..0.9);
    let bits: Vec<bool> = (0..shape.len()).map(|_| rng.gen_bool(density)).collect();
    BinaryField::from_bools(shape, &bits).unwrap()
}

/// Squared distance to the nearest background element, scanning every
/// background element and the nearest position outside the grid.
pub fn edt_squared(mask: &BinaryField) -> Vec<u64> {
    let shape = mask.shape();
    let ext = shape.extent();
    let ndim = shape.ndim();
    let background: Vec<[usize; 3]> = (0..shape.len()).filter(|&i| !mask.get(i)).map(|i| shape.coords(i)).collect();
    (0..shape.len())
        .map(|i| {
            if !mask.get(i) {
                return 0;
            }
            let c = shape.coords(i);
            let mut best = u64::MAX;
            for b in &background {
                let d: u64 = (0..3).map(|a| (c[a].abs_diff(b[a]) as u64).pow(2)).sum();
                best = best.min(d);
            }
            for a in 0..ndim {
                let out = (c[a] as u64 + 1).min((ext[a] - c[a]) as u64);
                best = best.min(out * out);
            }
            best
        })
        .collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

fn offsets(ndim: usize, full: bool) -> Vec<[isize; 3]> {
    let zr = if ndim == 3 { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for dz in zr {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nz = [dx, dy, dz].iter().filter(|&&v| v != 0).count();
                if nz > 0 && (full || nz == 1) {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Components of the members under the given adjacency, by union-find. With
/// `outside` set, one extra node stands for the space around the grid and
/// joins every member on the border; it is then not counted.
fn count_components(shape: &GridShape, member: &[bool], full: bool, outside: bool) -> usize {
    let n = shape.len();
    let ext = shape.extent();
    let ndim = shape.ndim();
    let mut uf = UnionFind::new(n + 1);
    let offs = offsets(ndim, full);
    for i in 0..n {
        if !member[i] {
            continue;
        }
        let c = shape.coords(i);
        for o in &offs {
            match shape.shifted(c, *o) {
                Some(j) if member[j] => uf.union(i, j),
                None if outside => uf.union(i, n),
                _ => {}
            }
        }
        if outside && (0..ndim).any(|a| c[a] == 0 || c[a] + 1 == ext[a]) {
            uf.union(i, n);
        }
    }
    let mut roots: HashSet<usize> = (0..n).filter(|&i| member[i]).map(|i| uf.find(i)).collect();
    if outside {
        roots.remove(&uf.find(n));
    }
    roots.len()
}

/// Euler characteristic of the union of closed unit cells, counting every
/// face of every foreground cell once in doubled coordinates.
pub fn euler(mask: &BinaryField) -> i64 {
    let shape = mask.shape();
    let ndim = shape.ndim();
    let mut cells: HashSet<[i64; 3]> = HashSet::new();
    for i in mask.foreground() {
        let c = shape.coords(i);
        let zr = if ndim == 3 { -1..=1 } else { 0..=0 };
        for dz in zr {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    cells.insert([2 * c[0] as i64 + dx, 2 * c[1] as i64 + dy, 2 * c[2] as i64 + dz]);
                }
            }
        }
    }
    cells
        .iter()
        .map(|cell| {
            // odd coordinates are the open directions of the cell
            let dim = (0..ndim).filter(|&a| cell[a].rem_euclid(2) == 0).count();
            if dim % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// `[β0, β1, β2]` from union-find component counts and the Euler count.
pub fn betti(mask: &BinaryField) -> [u64; 3] {
    let shape = mask.shape();
    let fg = mask.to_bools();
    let bg: Vec<bool> = fg.iter().map(|b| !b).collect();
    let b0 = count_components(shape, &fg, true, false) as i64;
    let chi = euler(mask);
    if shape.ndim() == 2 {
        [b0 as u64, (b0 - chi) as u64, 0]
    } else {
        let b2 = count_components(shape, &bg, false, true) as i64;
        [b0 as u64, (b0 + b2 - chi) as u64, b2 as u64]
    }
}

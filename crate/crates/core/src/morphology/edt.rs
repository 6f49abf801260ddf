//! Separable exact Euclidean distance transforms.
//!
//! [`edt_squared`] works in voxel units with integer arithmetic, so squared
//! distances are exact. The space outside the grid counts as background: the
//! mask is padded by one background voxel on every side before the transform.
//! [`sq_distance_to_sites`] is the floating point variant with physical
//! spacing, used for surface distances.

use crate::grid::{BinaryField, GridShape, ScalarField};

/// Exact squared distance from each foreground voxel to the nearest background
/// voxel (0 on background).
pub fn edt_squared(mask: &BinaryField) -> Vec<u64> {
    let shape = mask.shape();
    let [w, h, d] = shape.extent();
    let pad_z = shape.ndim() == 3;
    let pw = w + 2;
    let ph = h + 2;
    let pd = if pad_z { d + 2 } else { 1 };
    let oz = pad_z as usize;
    let pidx = |x: usize, y: usize, z: usize| x + pw * (y + ph * z);

    let mut fg = vec![false; pw * ph * pd];
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                fg[pidx(x + 1, y + 1, z + oz)] = mask.get(shape.index(x, y, z));
            }
        }
    }

    // x pass: every padded row starts and ends with background, so each
    // foreground voxel has a finite 1D distance.
    let mut f = vec![0i64; fg.len()];
    for z in 0..pd {
        for y in 0..ph {
            let base = pidx(0, y, z);
            let row = &fg[base..base + pw];
            let out = &mut f[base..base + pw];
            let mut last = i64::MIN / 4;
            let mut fwd = vec![0i64; pw];
            for (x, &on) in row.iter().enumerate() {
                if !on {
                    last = x as i64;
                }
                fwd[x] = x as i64 - last;
            }
            let mut next = i64::MAX / 4;
            for x in (0..pw).rev() {
                if !row[x] {
                    next = x as i64;
                }
                let g = fwd[x].min(next - x as i64);
                out[x] = g * g;
            }
        }
    }

    let mut line = Vec::new();
    let mut scratch = Envelope::default();
    // y pass
    for z in 0..pd {
        for x in 0..pw {
            line.clear();
            line.extend((0..ph).map(|y| f[pidx(x, y, z)]));
            scratch.transform(&mut line);
            for (y, &v) in line.iter().enumerate() {
                f[pidx(x, y, z)] = v;
            }
        }
    }
    // z pass
    if pad_z {
        for y in 0..ph {
            for x in 0..pw {
                line.clear();
                line.extend((0..pd).map(|z| f[pidx(x, y, z)]));
                scratch.transform(&mut line);
                for (z, &v) in line.iter().enumerate() {
                    f[pidx(x, y, z)] = v;
                }
            }
        }
    }

    let mut out = Vec::with_capacity(shape.len());
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                out.push(f[pidx(x + 1, y + 1, z + oz)] as u64);
            }
        }
    }
    out
}

/// Euclidean distance to the nearest background voxel, in voxel units.
///
/// Foreground voxels touching background get exactly 1; background is 0.
pub fn edt(mask: &BinaryField) -> ScalarField {
    let values = edt_squared(mask)
        .into_iter()
        .map(|d2| (d2 as f64).sqrt())
        .collect();
    ScalarField::from_raw(mask.shape().clone(), values)
}

/// Lower envelope of parabolas with exact rational breakpoints.
#[derive(Default)]
struct Envelope {
    v: Vec<usize>,
    // breakpoints z[k] = num / den with den > 0
    z: Vec<(i128, i128)>,
    out: Vec<i64>,
}

impl Envelope {
    fn transform(&mut self, f: &mut [i64]) {
        let n = f.len();
        self.v.clear();
        self.z.clear();
        self.v.push(0);
        self.z.push((0, 1)); // unused sentinel for k = 0
        for q in 1..n {
            let fq = f[q] as i128 + (q * q) as i128;
            let s = loop {
                let vk = *self.v.last().unwrap();
                let num = fq - (f[vk] as i128 + (vk * vk) as i128);
                let den = 2 * (q as i128 - vk as i128);
                let k = self.v.len() - 1;
                if k > 0 {
                    let (zn, zd) = self.z[k];
                    if num * zd <= zn * den {
                        self.v.pop();
                        self.z.pop();
                        continue;
                    }
                }
                break (num, den);
            };
            self.v.push(q);
            self.z.push(s);
        }
        self.out.clear();
        let mut k = 0;
        for q in 0..n {
            while k + 1 < self.v.len() {
                let (zn, zd) = self.z[k + 1];
                if zn < q as i128 * zd {
                    k += 1;
                } else {
                    break;
                }
            }
            let vk = self.v[k];
            let dq = q as i64 - vk as i64;
            self.out.push(dq * dq + f[vk]);
        }
        f.copy_from_slice(&self.out);
    }
}

/// Squared physical distance from every element to the nearest site.
///
/// Elements with no site anywhere in the grid get `f64::INFINITY`.
pub fn sq_distance_to_sites(shape: &GridShape, sites: &[bool]) -> Vec<f64> {
    assert_eq!(shape.len(), sites.len());
    let [w, h, d] = shape.extent();
    let sp = shape.spacing3();
    let mut f: Vec<f64> = sites
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let mut line = Vec::new();
    let axes: [(usize, [usize; 3]); 3] = [(0, [w, h, d]), (1, [h, w, d]), (2, [d, w, h])];
    for &(axis, [n, a, b]) in &axes {
        if n == 1 {
            continue;
        }
        for j in 0..b {
            for i in 0..a {
                let at = |t: usize| match axis {
                    0 => shape.index(t, i, j),
                    1 => shape.index(i, t, j),
                    _ => shape.index(i, j, t),
                };
                line.clear();
                line.extend((0..n).map(|t| f[at(t)]));
                envelope_f64(&mut line, sp[axis]);
                for (t, &v) in line.iter().enumerate() {
                    f[at(t)] = v;
                }
            }
        }
    }
    f
}

fn envelope_f64(f: &mut [f64], spacing: f64) {
    let n = f.len();
    let pos = |q: usize| q as f64 * spacing;
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + pos(q) * pos(q);
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&vk) => {
                    let s = (fq - (f[vk] + pos(vk) * pos(vk))) / (2.0 * (pos(q) - pos(vk)));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        return;
    }
    let src: Vec<f64> = f.to_vec();
    let mut k = 0;
    for (q, out) in f.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < pos(q) {
            k += 1;
        }
        let dx = pos(q) - pos(v[k]);
        *out = dx * dx + src[v[k]];
    }
}

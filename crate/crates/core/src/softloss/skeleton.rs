//! Iterative min/max soft skeleton with a recorded tape for the backward pass.
//!
//! Erosion takes the minimum over the face neighborhood, with elements
//! outside the grid reading as 0. Dilation takes the maximum over the full
//! 3^d box. Opening is dilation after erosion and is anti-extensive with
//! these kernels, so every residue `x - open(x)` is nonnegative.

use crate::grid::GridShape;

use super::ProbField;

/// Marks a min or max that came from outside the grid.
const PAD: usize = usize::MAX;

struct Step {
    /// `x_j - open(x_j)` before the ReLU.
    residue: Vec<f64>,
    /// Source of each eroded value.
    argmin: Vec<usize>,
    /// Source of each opened value, an index into the eroded field.
    argmax: Vec<usize>,
}

/// Soft skeleton of a field together with what is needed to differentiate it.
pub(crate) struct SoftSkeleton {
    pub(crate) value: Vec<f64>,
    steps: Vec<Step>,
    /// Skeleton accumulated up to and including step j.
    partial: Vec<Vec<f64>>,
}

fn neighbors<'a>(shape: &'a GridShape, offsets: &'a [[isize; 3]], i: usize) -> impl Iterator<Item = Option<usize>> + 'a {
    let c = shape.coords(i);
    offsets.iter().map(move |&o| shape.shifted(c, o))
}

fn erode(shape: &GridShape, x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut out = Vec::with_capacity(x.len());
    let mut arg = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let (mut best, mut at) = (x[i], i);
        for n in neighbors(shape, shape.face_offsets(), i) {
            let (v, j) = match n {
                Some(j) => (x[j], j),
                None => (0.0, PAD),
            };
            if v < best {
                best = v;
                at = j;
            }
        }
        out.push(best);
        arg.push(at);
    }
    (out, arg)
}

fn dilate(shape: &GridShape, x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut out = Vec::with_capacity(x.len());
    let mut arg = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let (mut best, mut at) = (x[i], i);
        for j in neighbors(shape, shape.full_offsets(), i).flatten() {
            if x[j] > best {
                best = x[j];
                at = j;
            }
        }
        out.push(best);
        arg.push(at);
    }
    (out, arg)
}

impl SoftSkeleton {
    pub(crate) fn forward(shape: &GridShape, p: &[f64], iters: usize) -> Self {
        let mut x = p.to_vec();
        let mut steps = Vec::with_capacity(iters + 1);
        let mut partial: Vec<Vec<f64>> = Vec::with_capacity(iters + 1);
        for _ in 0..=iters {
            let (e, argmin) = erode(shape, &x);
            let (o, argmax) = dilate(shape, &e);
            let residue: Vec<f64> = x.iter().zip(&o).map(|(a, b)| a - b).collect();
            let skel = match partial.last() {
                None => residue.iter().map(|&r| r.max(0.0)).collect(),
                Some(prev) => prev
                    .iter()
                    .zip(&residue)
                    .map(|(&s, &r)| {
                        let d = r.max(0.0);
                        s + (d - s * d).max(0.0)
                    })
                    .collect(),
            };
            partial.push(skel);
            steps.push(Step { residue, argmin, argmax });
            x = e;
        }
        let value = partial.last().cloned().unwrap_or_default();
        Self { value, steps, partial }
    }

    /// Pulls a gradient on the skeleton back onto the input field.
    pub(crate) fn backward(&self, grad: &[f64]) -> Vec<f64> {
        let n = grad.len();
        let k = self.steps.len();
        // gradients on each step's ReLU'd residue
        let mut g_delta = vec![vec![0.0; n]; k];
        let mut g = grad.to_vec();
        for j in (1..k).rev() {
            let prev = &self.partial[j - 1];
            let res = &self.steps[j].residue;
            for i in 0..n {
                let d = res[i].max(0.0);
                if d - prev[i] * d > 0.0 {
                    g_delta[j][i] = g[i] * (1.0 - prev[i]);
                    g[i] *= 1.0 - d;
                }
            }
        }
        g_delta[0] = g;

        // x_{j+1} = erode(x_j); walk the chain from the innermost step out
        let mut g_next = vec![0.0; n];
        for j in (0..k).rev() {
            let step = &self.steps[j];
            let mut g_x = vec![0.0; n];
            let mut g_e = std::mem::take(&mut g_next);
            for i in 0..n {
                let gd = g_delta[j][i];
                if gd != 0.0 && step.residue[i] > 0.0 {
                    g_x[i] += gd;
                    g_e[step.argmax[i]] -= gd;
                }
            }
            for i in 0..n {
                let src = step.argmin[i];
                if src != PAD && g_e[i] != 0.0 {
                    g_x[src] += g_e[i];
                }
            }
            g_next = g_x;
        }
        g_next
    }
}

/// Differentiable skeleton of a probability field.
///
/// Each round erodes the field, opens the result and keeps what the opening
/// removed. One-element-wide lines survive unchanged because the opening
/// erases them entirely in the first round.
pub fn soft_skeleton(p: &ProbField, iters: usize) -> ProbField {
    let s = SoftSkeleton::forward(p.shape(), p.values(), iters);
    ProbField::from_raw(p.shape().clone(), s.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(shape: GridShape, f: impl Fn(usize, usize, usize) -> f64) -> ProbField {
        let v = (0..shape.len())
            .map(|i| {
                let [x, y, z] = shape.coords(i);
                f(x, y, z)
            })
            .collect();
        ProbField::new(shape, v).unwrap()
    }

    #[test]
    fn line_is_fixed() {
        let p = field(GridShape::plane(12, 9), |x, y, _| (y == 4 && (2..10).contains(&x)) as u8 as f64);
        assert_eq!(soft_skeleton(&p, 5), p);
        let q = field(GridShape::volume(9, 7, 7), |x, y, z| (y == 3 && z == 3 && x > 0) as u8 as f64);
        assert_eq!(soft_skeleton(&q, 5), q);
    }

    #[test]
    fn square_shrinks_inside() {
        let inside = |x: usize, y: usize| (2..9).contains(&x) && (2..9).contains(&y);
        let p = field(GridShape::plane(11, 11), |x, y, _| inside(x, y) as u8 as f64);
        for iters in 3..7 {
            let s = soft_skeleton(&p, iters);
            let total: f64 = s.values().iter().sum();
            assert!(total > 0.0 && total < 49.0);
            for (i, &v) in s.values().iter().enumerate() {
                let [x, y, _] = s.shape().coords(i);
                if v > 0.0 {
                    assert!((3..8).contains(&x) && (3..8).contains(&y), "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let p = ProbField::zeros(GridShape::volume(5, 4, 3));
        assert_eq!(soft_skeleton(&p, 4), p);
    }

    #[test]
    fn values_stay_in_unit_interval() {
        let shape = GridShape::plane(9, 9);
        let p = field(shape, |x, y, _| ((x * 7 + y * 13) % 10) as f64 / 10.0);
        let s = soft_skeleton(&p, 4);
        assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}

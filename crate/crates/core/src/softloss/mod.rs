//! Differentiable counterparts of the metrics: soft skeletons, soft Dice and
//! cl-X-Dice losses, the combined training loss and a finite-difference
//! gradient check.

mod losses;
mod skeleton;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{BinaryField, GridShape};

pub use losses::{
    combined_loss, cross_entropy, soft_cl_x_loss, soft_dice_loss, CombinedLoss, CombinedLossSpec, CrossEntropy,
    SoftClX, SoftDice,
};
pub use skeleton::soft_skeleton;

/// Per-element foreground probability for one class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ProbField {
    /// Rejects values that are not finite or fall outside `[0, 1]`.
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::BufferLength {
                expected: shape.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidValue {
                index: i,
                value: values[i],
                reason: "probabilities lie in [0, 1]",
            });
        }
        Ok(Self { shape, values })
    }

    /// Clamps finite values into `[0, 1]`; NaN is still rejected.
    pub fn clamped(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|v| if v.is_nan() { v } else { v.clamp(0.0, 1.0) }).collect();
        Self::new(shape, values)
    }

    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn from_mask(mask: &BinaryField) -> Self {
        Self {
            shape: mask.shape().clone(),
            values: mask.values().iter().map(|&v| v as f64).collect(),
        }
    }

    pub(crate) fn from_raw(shape: GridShape, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), values.len());
        Self { shape, values }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Elements with `p >= level`.
    pub fn threshold(&self, level: f64) -> BinaryField {
        let bits: Vec<bool> = self.values.iter().map(|&v| v >= level).collect();
        BinaryField::from_bools(self.shape.clone(), &bits).expect("same shape")
    }

    /// Copy with one element replaced, clamped into `[0, 1]`.
    pub fn with_value(&self, index: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.values[index] = value.clamp(0.0, 1.0);
        out
    }
}

/// A scalar loss of a probability field with an analytic gradient.
pub trait SoftLoss {
    fn value(&self, p: &ProbField) -> Result<f64>;

    /// Loss value and its gradient with respect to every element of `p`.
    fn value_and_grad(&self, p: &ProbField) -> Result<(f64, Vec<f64>)>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over the probed elements.
    pub max_rel_error: f64,
    /// Element where it occurred.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub probes: usize,
}

/// Compares the analytic gradient with central differences of step `eps`.
///
/// The relative error at an element is
/// `|a - cd| / max(|a|, |cd|, 1e-8)`. Without explicit probes every element
/// is checked; probed elements must leave `eps` of room inside `(0, 1)`.
pub fn grad_check(loss: &dyn SoftLoss, p: &ProbField, eps: f64, probes: Option<&[usize]>) -> Result<GradCheck> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let all: Vec<usize>;
    let probes = match probes {
        Some(ix) => ix,
        None => {
            all = (0..p.len()).collect();
            &all
        }
    };
    let (_, grad) = loss.value_and_grad(p)?;
    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst_index: probes.first().copied().unwrap_or(0),
        analytic: 0.0,
        numeric: 0.0,
        probes: probes.len(),
    };
    for &i in probes {
        let v = *p.values().get(i).ok_or_else(|| Error::InvalidArgument(format!("probe {i} is outside the field")))?;
        if v - eps <= 0.0 || v + eps >= 1.0 {
            return Err(Error::InvalidArgument(format!("probe {i} has value {v}, too close to 0 or 1")));
        }
        let up = loss.value(&p.with_value(i, v + eps))?;
        let down = loss.value(&p.with_value(i, v - eps))?;
        let cd = (up - down) / (2.0 * eps);
        let a = grad[i];
        let err = (a - cd).abs() / a.abs().max(cd.abs()).max(1e-8);
        if err > out.max_rel_error {
            out = GradCheck {
                max_rel_error: err,
                worst_index: i,
                analytic: a,
                numeric: cd,
                probes: probes.len(),
            };
        }
    }
    Ok(out)
}

/// A seeded reference mask and a probability field whose 0.5-threshold
/// disagrees with it in places.
///
/// The reference is a union of random boxes. Probabilities take distinct
/// levels spaced well apart, above 0.5 on the predicted foreground and below
/// it elsewhere, so small perturbations never cross a tie or the threshold.
pub fn random_instance(dims: &[usize], seed: u64) -> Result<(ProbField, BinaryField)> {
    let shape = GridShape::new(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = shape.extent();
    let ndim = shape.ndim();
    let mut reference = BinaryField::zeros(shape.clone());
    while reference.count() < shape.len() / 4 {
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        for a in 0..ndim {
            let len = rng.gen_range(2..=ext[a].clamp(2, 5)).min(ext[a]);
            lo[a] = rng.gen_range(0..=ext[a] - len);
            hi[a] = lo[a] + len;
        }
        for i in 0..shape.len() {
            let c = shape.coords(i);
            if (0..3).all(|a| (lo[a]..hi[a]).contains(&c[a])) {
                reference.set(i, true);
            }
        }
    }
    let pred: Vec<bool> = reference.values().iter().map(|&v| (v == 1) != rng.gen_bool(0.15)).collect();
    let (n_fg, n_bg) = (pred.iter().filter(|&&b| b).count(), pred.iter().filter(|&&b| !b).count());
    let levels = |n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n.max(1) as f64).collect();
        v.shuffle(rng);
        v
    };
    let mut fg = levels(n_fg, 0.55, 0.95, &mut rng).into_iter();
    let mut bg = levels(n_bg, 0.05, 0.45, &mut rng).into_iter();
    let values = pred
        .iter()
        .map(|&b| if b { fg.next() } else { bg.next() }.expect("one level per element"))
        .collect();
    Ok((ProbField::new(shape, values)?, reference))
}

#[cfg(test)]
mod tests;

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::grid::BinaryField;
use crate::metrics::{harmonic_mean, ratio, FieldKind, Fields, QField, VariantSpec};
use crate::morphology::{build_bundle, edt, Normalization, SkeletonBundle};

use super::skeleton::SoftSkeleton;
use super::{ProbField, SoftLoss};

const CE_CLAMP: f64 = 1e-7;

fn check(p: &ProbField, reference: &BinaryField) -> Result<()> {
    p.shape().ensure_same(reference.shape())
}

/// `1 - 2 Σ p g / (Σ p + Σ g)`; 0 when both sides are empty.
#[derive(Clone, Debug)]
pub struct SoftDice {
    reference: BinaryField,
}

impl SoftDice {
    pub fn new(reference: &BinaryField) -> Self {
        Self {
            reference: reference.clone(),
        }
    }

    fn sums(&self, p: &ProbField) -> Result<(f64, f64)> {
        check(p, &self.reference)?;
        let (mut inter, mut total) = (0.0, self.reference.count() as f64);
        for (&v, &g) in p.values().iter().zip(self.reference.values()) {
            inter += v * g as f64;
            total += v;
        }
        Ok((inter, total))
    }
}

impl SoftLoss for SoftDice {
    fn value(&self, p: &ProbField) -> Result<f64> {
        let (inter, total) = self.sums(p)?;
        Ok(if total == 0.0 { 0.0 } else { 1.0 - 2.0 * inter / total })
    }

    fn value_and_grad(&self, p: &ProbField) -> Result<(f64, Vec<f64>)> {
        let (inter, total) = self.sums(p)?;
        if total == 0.0 {
            return Ok((0.0, vec![0.0; p.len()]));
        }
        let grad = self
            .reference
            .values()
            .iter()
            .map(|&g| -2.0 * (g as f64 * total - inter) / (total * total))
            .collect();
        Ok((1.0 - 2.0 * inter / total, grad))
    }
}

pub fn soft_dice_loss(p: &ProbField, reference: &BinaryField) -> Result<f64> {
    SoftDice::new(reference).value(p)
}

/// Mean binary cross-entropy with `p` clamped to `[1e-7, 1 - 1e-7]`.
#[derive(Clone, Debug)]
pub struct CrossEntropy {
    reference: BinaryField,
}

impl CrossEntropy {
    pub fn new(reference: &BinaryField) -> Self {
        Self {
            reference: reference.clone(),
        }
    }
}

impl SoftLoss for CrossEntropy {
    fn value(&self, p: &ProbField) -> Result<f64> {
        Ok(self.value_and_grad(p)?.0)
    }

    fn value_and_grad(&self, p: &ProbField) -> Result<(f64, Vec<f64>)> {
        check(p, &self.reference)?;
        let n = p.len().max(1) as f64;
        let mut total = 0.0;
        let mut grad = Vec::with_capacity(p.len());
        for (&v, &g) in p.values().iter().zip(self.reference.values()) {
            let c = v.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
            let inside = c == v;
            if g == 1 {
                total -= c.ln();
                grad.push(if inside { -1.0 / (c * n) } else { 0.0 });
            } else {
                total -= (1.0 - c).ln();
                grad.push(if inside { 1.0 / ((1.0 - c) * n) } else { 0.0 });
            }
        }
        Ok((total / n, grad))
    }
}

pub fn cross_entropy(p: &ProbField, reference: &BinaryField) -> Result<f64> {
    CrossEntropy::new(reference).value(p)
}

/// Prediction-side constants taken from the thresholded field.
struct PredConsts {
    mask: BinaryField,
    /// Distance map of the thresholded mask, clamped to `r_max`.
    dist: Vec<f64>,
    r_max: f64,
    /// The reference bundle rescaled to match, under joint normalization.
    joint_reference: Option<SkeletonBundle>,
}

/// `1 - cl-X-Dice` with a soft prediction.
///
/// The prediction skeleton is the soft skeleton of `p` and the prediction
/// volume is `p` itself. Distance and radius weights of the prediction come
/// from the mask `p >= 0.5` and carry no gradient. A radius field on the soft
/// skeleton is the skeleton value times the distance map, so on hard inputs
/// every field reduces to its metric counterpart.
pub struct SoftClX {
    spec: VariantSpec,
    reference: SkeletonBundle,
    iters: usize,
    cache: Mutex<Option<Arc<PredConsts>>>,
}

impl SoftClX {
    /// `iters` defaults to the ceiling of the reference's largest skeleton
    /// radius, and at least 1.
    pub fn new(spec: &VariantSpec, reference: &SkeletonBundle, iters: Option<usize>) -> Result<Self> {
        let shape = reference.mask.shape();
        if spec.dim != shape.ndim() {
            return Err(Error::DimensionMismatch {
                variant: spec.dim,
                grid: shape.ndim(),
            });
        }
        if iters == Some(0) {
            return Err(Error::InvalidArgument("soft skeleton needs at least one iteration".into()));
        }
        let iters = iters.unwrap_or_else(|| (reference.radius.max().ceil() as usize).max(1));
        Ok(Self {
            spec: spec.clone(),
            reference: reference.clone(),
            iters,
            cache: Mutex::new(None),
        })
    }

    pub fn iters(&self) -> usize {
        self.iters
    }

    fn consts(&self, p: &ProbField) -> Result<Arc<PredConsts>> {
        let mask = p.threshold(0.5);
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(c) = cache.as_ref().filter(|c| c.mask == mask) {
            return Ok(Arc::clone(c));
        }
        let own = build_bundle(&mask, None)?.r_max;
        let r_max = match self.spec.normalization {
            Normalization::PerMask => own,
            Normalization::Joint => own.max(self.reference.r_max),
        };
        let dist = edt(&mask).values().iter().map(|&d| d.min(r_max)).collect();
        let joint_reference =
            (self.spec.normalization == Normalization::Joint).then(|| self.reference.clone().with_r_max(r_max));
        let c = Arc::new(PredConsts {
            mask,
            dist,
            r_max,
            joint_reference,
        });
        *cache = Some(Arc::clone(&c));
        Ok(c)
    }

    fn evaluate(&self, p: &ProbField, want_grad: bool) -> Result<(f64, Vec<f64>)> {
        check(p, &self.reference.mask)?;
        let n = p.len();
        let consts = self.consts(p)?;
        let reference = consts.joint_reference.as_ref().unwrap_or(&self.reference);
        let skel = SoftSkeleton::forward(p.shape(), p.values(), self.iters);
        let pred = PredFields {
            s: &skel.value,
            p: p.values(),
            dist: &consts.dist,
            r_max: consts.r_max,
        };
        let l = Fields::new(reference);
        let r = &self.spec.recipe;

        // sums in the order prec_num, prec_den, sens_num, sens_den, with
        // their derivatives by skeleton value and by probability
        let mut sums = [0.0f64; 4];
        let mut ds = vec![[0.0f64; 4]; if want_grad { n } else { 0 }];
        let mut dp = vec![[0.0f64; 4]; if want_grad { n } else { 0 }];
        for i in 0..n {
            let sp = pred.q(r.sp, i);
            let spvp = pred.q(r.spvp, i);
            let vp = pred.q(r.vp, i);
            let (sl, vl, slvl) = (l.q(r.sl, i), l.q(r.vl, i), l.q(r.slvl, i));
            let not_sl = 1.0 - l.get(FieldKind::Skeleton, i);
            let s_p = pred.get(FieldKind::Skeleton, i).0;
            sums[0] += sp.0 * vl;
            sums[1] += sp.0 * spvp.0 * not_sl + sp.0 * slvl;
            sums[2] += sl * vp.0;
            sums[3] += sl * slvl * (1.0 - s_p) + sl * spvp.0;
            if want_grad {
                for (d, k) in [(&mut ds[i], 1), (&mut dp[i], 2)] {
                    let (a, b, c) = (sp.k(k), spvp.k(k), vp.k(k));
                    d[0] = a * vl;
                    d[1] = (a * spvp.0 + sp.0 * b) * not_sl + a * slvl;
                    d[2] = sl * c;
                    d[3] = sl * b;
                }
                ds[i][3] -= sl * slvl;
            }
        }
        let tprec = ratio(sums[0], sums[1]);
        let tsens = ratio(sums[2], sums[3]);
        let loss = 1.0 - harmonic_mean(tprec, tsens);
        if !want_grad {
            return Ok((loss, Vec::new()));
        }

        let t = tprec + tsens;
        let (dh_prec, dh_sens) = if t == 0.0 {
            (0.0, 0.0)
        } else {
            (2.0 * tsens * tsens / (t * t), 2.0 * tprec * tprec / (t * t))
        };
        // d ratio / d num and d ratio / d den, zero where a convention or the
        // cap decides the value
        let ratio_grad = |num: f64, den: f64| {
            if den == 0.0 || num > den {
                (0.0, 0.0)
            } else {
                (1.0 / den, -num / (den * den))
            }
        };
        let (pn, pd) = ratio_grad(sums[0], sums[1]);
        let (sn, sd) = ratio_grad(sums[2], sums[3]);
        let w = [-dh_prec * pn, -dh_prec * pd, -dh_sens * sn, -dh_sens * sd];
        let dot = |d: &[f64; 4]| d.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let g_s: Vec<f64> = ds.iter().map(dot).collect();
        let mut grad = skel.backward(&g_s);
        for (g, d) in grad.iter_mut().zip(&dp) {
            *g += dot(d);
        }
        Ok((loss, grad))
    }
}

impl SoftLoss for SoftClX {
    fn value(&self, p: &ProbField) -> Result<f64> {
        Ok(self.evaluate(p, false)?.0)
    }

    fn value_and_grad(&self, p: &ProbField) -> Result<(f64, Vec<f64>)> {
        self.evaluate(p, true)
    }
}

/// A prediction-side field value and its derivatives by the skeleton value
/// and by the probability.
#[derive(Clone, Copy)]
struct Val(f64, f64, f64);

impl Val {
    fn k(self, which: usize) -> f64 {
        if which == 1 {
            self.1
        } else {
            self.2
        }
    }
}

struct PredFields<'a> {
    s: &'a [f64],
    p: &'a [f64],
    dist: &'a [f64],
    r_max: f64,
}

impl PredFields<'_> {
    fn get(&self, kind: FieldKind, i: usize) -> Val {
        let (s, d, r) = (self.s[i], self.dist[i], self.r_max);
        let inv = if d > 0.0 { 1.0 / d } else { 0.0 };
        // skeleton-derived fields are linear in s with these slopes
        let slope = match kind {
            FieldKind::Skeleton => 1.0,
            FieldKind::Radius => d,
            FieldKind::InvRadius => inv,
            FieldKind::RadiusNorm => d / r,
            FieldKind::InvRadiusNorm => inv * r,
            FieldKind::Mask => return Val(self.p[i], 0.0, 1.0),
            FieldKind::Dist => return Val(d, 0.0, 0.0),
            FieldKind::DistNorm => return Val(d / r, 0.0, 0.0),
        };
        Val(s * slope, slope, 0.0)
    }

    fn q(&self, slot: QField, i: usize) -> Val {
        let v = self.get(slot.field, i);
        match slot.exponent {
            1 => v,
            e => {
                let e = e as i32;
                let f = e as f64 * v.0.powi(e - 1);
                Val(v.0.powi(e), f * v.1, f * v.2)
            }
        }
    }
}

pub fn soft_cl_x_loss(
    spec: &VariantSpec,
    p: &ProbField,
    reference: &BinaryField,
    reference_bundle: &SkeletonBundle,
) -> Result<f64> {
    check(p, reference)?;
    if reference_bundle.mask != *reference {
        return Err(Error::InvalidArgument("reference bundle was built from a different mask".into()));
    }
    SoftClX::new(spec, reference_bundle, None)?.value(p)
}

/// Weights of the combined training loss
/// `0.5 CE + α/(2(α+β)) Dice + β/(2(α+β)) X`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedLossSpec {
    pub alpha: f64,
    pub beta: f64,
    /// The cl-X-Dice variant behind the X term, if any.
    pub variant: Option<VariantSpec>,
    /// Soft skeleton iterations; defaults to the reference's largest radius
    /// rounded up.
    pub soft_skel_iters: Option<usize>,
}

impl CombinedLossSpec {
    pub fn new(alpha: f64, beta: f64, variant: Option<VariantSpec>) -> Self {
        Self {
            alpha,
            beta,
            variant,
            soft_skel_iters: None,
        }
    }

    /// Coefficients of the CE, Dice and X terms.
    pub fn weights(&self) -> Result<[f64; 3]> {
        let (a, b) = (self.alpha, self.beta);
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be finite and nonnegative, got {a} and {b}"
            )));
        }
        if b > 0.0 && self.variant.is_none() {
            return Err(Error::InvalidArgument("beta > 0 needs a cl-X-Dice variant".into()));
        }
        let s = a + b;
        Ok(if s == 0.0 {
            [0.5, 0.0, 0.0]
        } else {
            [0.5, a / (2.0 * s), b / (2.0 * s)]
        })
    }
}

pub struct CombinedLoss {
    weights: [f64; 3],
    ce: CrossEntropy,
    dice: SoftDice,
    x: Option<SoftClX>,
}

impl CombinedLoss {
    pub fn new(spec: &CombinedLossSpec, reference: &BinaryField) -> Result<Self> {
        let weights = spec.weights()?;
        let x = match &spec.variant {
            Some(v) if weights[2] > 0.0 => {
                let bundle = build_bundle(reference, None)?;
                Some(SoftClX::new(v, &bundle, spec.soft_skel_iters)?)
            }
            _ => None,
        };
        Ok(Self {
            weights,
            ce: CrossEntropy::new(reference),
            dice: SoftDice::new(reference),
            x,
        })
    }

    /// CE, Dice and X term values; X is 0 when its weight is.
    pub fn terms(&self, p: &ProbField) -> Result<[f64; 3]> {
        let x = match &self.x {
            Some(x) => x.value(p)?,
            None => 0.0,
        };
        Ok([self.ce.value(p)?, self.dice.value(p)?, x])
    }
}

impl SoftLoss for CombinedLoss {
    fn value(&self, p: &ProbField) -> Result<f64> {
        let t = self.terms(p)?;
        Ok(self.weights.iter().zip(&t).map(|(w, v)| w * v).sum())
    }

    fn value_and_grad(&self, p: &ProbField) -> Result<(f64, Vec<f64>)> {
        let [wc, wd, wx] = self.weights;
        let (ce, g_ce) = self.ce.value_and_grad(p)?;
        let (dice, g_dice) = self.dice.value_and_grad(p)?;
        let mut value = wc * ce + wd * dice;
        let mut grad: Vec<f64> = g_ce.iter().zip(&g_dice).map(|(a, b)| wc * a + wd * b).collect();
        if let Some(x) = &self.x {
            let (v, g) = x.value_and_grad(p)?;
            value += wx * v;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += wx * b;
            }
        }
        Ok((value, grad))
    }
}

pub fn combined_loss(spec: &CombinedLossSpec, p: &ProbField, reference: &BinaryField) -> Result<f64> {
    check(p, reference)?;
    CombinedLoss::new(spec, reference)?.value(p)
}

use crate::error::Result;
use crate::grid::BinaryField;
use crate::morphology::SkeletonBundle;

/// `num / den` with the empty-side conventions: 0/0 is 1 (nothing to get
/// wrong), x/0 is 0. Ratios are capped at 1.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (num / den).min(1.0)
    }
}

pub(crate) fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// `2|P ∩ L| / (|P| + |L|)`, 1 when both masks are empty.
pub fn dice(pred: &BinaryField, reference: &BinaryField) -> Result<f64> {
    pred.shape().ensure_same(reference.shape())?;
    let (mut inter, mut total) = (0usize, 0usize);
    for (&p, &l) in pred.values().iter().zip(reference.values()) {
        inter += (p & l) as usize;
        total += (p + l) as usize;
    }
    Ok(if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    })
}

/// Topology precision and sensitivity of a skeleton/mask pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Topo {
    pub tprec: f64,
    pub tsens: f64,
    pub value: f64,
}

/// Counting form of clDice: `|S_P ∩ V_L| / |S_P|` against `|S_L ∩ V_P| / |S_L|`.
pub fn cl_dice_parts(pred: &SkeletonBundle, reference: &SkeletonBundle) -> Result<Topo> {
    pred.mask.shape().ensure_same(reference.mask.shape())?;
    let count = |s: &BinaryField, v: &BinaryField| {
        s.values()
            .iter()
            .zip(v.values())
            .map(|(&a, &b)| (a & b) as usize)
            .sum::<usize>()
    };
    let tprec = ratio(
        count(&pred.skeleton, &reference.mask) as f64,
        pred.skeleton.count() as f64,
    );
    let tsens = ratio(
        count(&reference.skeleton, &pred.mask) as f64,
        reference.skeleton.count() as f64,
    );
    Ok(Topo {
        tprec,
        tsens,
        value: harmonic_mean(tprec, tsens),
    })
}

pub fn cl_dice(pred: &SkeletonBundle, reference: &SkeletonBundle) -> Result<f64> {
    Ok(cl_dice_parts(pred, reference)?.value)
}

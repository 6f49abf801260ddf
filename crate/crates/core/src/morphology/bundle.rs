use super::edt::edt;
use super::thinning::skeletonize;
use crate::error::{Error, Result};
use crate::grid::{BinaryField, ScalarField};

/// Mask, skeleton and the distance-derived fields built from them.
#[derive(Clone, Debug)]
pub struct SkeletonBundle {
    pub mask: BinaryField,
    pub skeleton: BinaryField,
    /// Distance map D, clamped to `r_max`.
    pub dist: ScalarField,
    /// D restricted to the skeleton.
    pub radius: ScalarField,
    /// 1 / radius on the skeleton, 0 elsewhere.
    pub inv_radius: ScalarField,
    pub r_max: f64,
    pub i_min: f64,
}

/// Normalized ratios R/R_max, I/I_min and D/R_max.
#[derive(Clone, Debug)]
pub struct NormalizedFields {
    pub radius: ScalarField,
    pub inv_radius: ScalarField,
    pub dist: ScalarField,
}

/// Builds the bundle for one mask.
///
/// Without an override, `r_max` is the largest skeleton radius (1 for an
/// empty mask). Pass the joint maximum of two bundles as the override so
/// prediction and reference share one normalization scale.
pub fn build_bundle(mask: &BinaryField, r_max_override: Option<f64>) -> Result<SkeletonBundle> {
    if let Some(r) = r_max_override {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("r_max override {r} is not positive")));
        }
    }
    let raw = edt(mask);
    let skeleton = skeletonize(mask);
    let skeleton_max = skeleton
        .foreground()
        .map(|i| raw.get(i))
        .fold(0.0f64, f64::max);
    let r_max = match r_max_override {
        Some(r) => r,
        None if skeleton_max > 0.0 => skeleton_max,
        None => 1.0,
    };
    Ok(assemble(mask.clone(), skeleton, &raw, r_max))
}

fn assemble(mask: BinaryField, skeleton: BinaryField, raw: &ScalarField, r_max: f64) -> SkeletonBundle {
    let shape = mask.shape().clone();
    let dist = raw.map(|d| d.min(r_max));
    let radius: Vec<f64> = (0..shape.len())
        .map(|i| if skeleton.get(i) { dist.get(i) } else { 0.0 })
        .collect();
    let inv_radius = radius.iter().map(|&r| if r > 0.0 { 1.0 / r } else { 0.0 }).collect();
    SkeletonBundle {
        mask,
        skeleton,
        dist,
        radius: ScalarField::from_raw(shape.clone(), radius),
        inv_radius: ScalarField::from_raw(shape, inv_radius),
        r_max,
        i_min: 1.0 / r_max,
    }
}

/// Bundles for a prediction/reference pair sharing the larger of the two
/// skeleton-radius maxima.
pub fn joint_bundles(pred: &BinaryField, reference: &BinaryField) -> Result<(SkeletonBundle, SkeletonBundle)> {
    pred.shape().ensure_same(reference.shape())?;
    let p = build_bundle(pred, None)?;
    let l = build_bundle(reference, None)?;
    let r = p.r_max.max(l.r_max);
    Ok((p.with_r_max(r), l.with_r_max(r)))
}

/// How the two sides of a comparison pick `r_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// Each mask is normalized (and its distance map clamped) by its own
    /// largest skeleton radius.
    #[default]
    PerMask,
    /// Both masks use the larger of the two maxima.
    Joint,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::PerMask => "per-mask",
            Normalization::Joint => "joint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-mask" | "per_mask" | "permask" | "own" => Ok(Normalization::PerMask),
            "joint" | "shared" => Ok(Normalization::Joint),
            _ => Err(Error::InvalidArgument(format!("unknown normalization {s:?}"))),
        }
    }
}

/// Bundles for a prediction/reference pair under the given normalization.
pub fn paired_bundles(
    pred: &BinaryField,
    reference: &BinaryField,
    normalization: Normalization,
) -> Result<(SkeletonBundle, SkeletonBundle)> {
    match normalization {
        Normalization::Joint => joint_bundles(pred, reference),
        Normalization::PerMask => {
            pred.shape().ensure_same(reference.shape())?;
            Ok((build_bundle(pred, None)?, build_bundle(reference, None)?))
        }
    }
}

impl SkeletonBundle {
    /// Re-clamps and re-normalizes under a different `r_max` without
    /// recomputing the skeleton.
    pub fn with_r_max(self, r_max: f64) -> SkeletonBundle {
        if r_max == self.r_max {
            return self;
        }
        let raw = super::edt::edt(&self.mask);
        assemble(self.mask, self.skeleton, &raw, r_max)
    }

    pub fn normalized(&self) -> NormalizedFields {
        NormalizedFields {
            radius: self.radius.map(|r| r / self.r_max),
            inv_radius: self.inv_radius.map(|i| i / self.i_min),
            dist: self.dist.map(|d| d / self.r_max),
        }
    }
}

/// Free-function form of [`SkeletonBundle::normalized`].
pub fn normalized_fields(bundle: &SkeletonBundle) -> NormalizedFields {
    bundle.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    fn tube(half_width: usize) -> BinaryField {
        let shape = GridShape::plane(40, 4 * half_width + 4);
        let c = 2 * half_width + 2;
        BinaryField::from_fn(shape, move |x, y, _| (4..36).contains(&x) && y.abs_diff(c) < half_width)
    }

    #[test]
    fn straight_tube_radius() {
        let b = build_bundle(&tube(3), None).unwrap();
        assert_eq!(b.r_max, 3.0);
        assert!(b.skeleton.count() > 0);
        let c = b.mask.shape().dims()[1] / 2;
        for i in b.skeleton.foreground() {
            let [x, y, _] = b.mask.shape().coords(i);
            if (7..33).contains(&x) {
                assert_eq!(y, c);
                assert_eq!(b.radius.get(i), 3.0);
            }
        }
    }

    #[test]
    fn line_has_unit_radius() {
        let b = build_bundle(&tube(1), None).unwrap();
        assert_eq!(b.r_max, 1.0);
        assert_eq!(b.i_min, 1.0);
        assert_eq!(b.skeleton, b.mask);
        for i in b.skeleton.foreground() {
            assert_eq!(b.radius.get(i), 1.0);
            assert_eq!(b.inv_radius.get(i), 1.0);
        }
    }

    #[test]
    fn override_clamps() {
        let b = build_bundle(&tube(5), Some(3.0)).unwrap();
        assert_eq!(b.r_max, 3.0);
        assert!(b.dist.max() <= 3.0);
        assert_eq!(b.radius.max(), 3.0);
        assert!(build_bundle(&tube(2), Some(0.0)).is_err());
    }

    #[test]
    fn empty_mask_bundle() {
        let b = build_bundle(&BinaryField::zeros(GridShape::plane(5, 5)), None).unwrap();
        assert_eq!(b.r_max, 1.0);
        assert!(b.skeleton.is_empty());
    }

    #[test]
    fn normalized_examples() {
        let b = build_bundle(&tube(3), None).unwrap();
        let n = b.normalized();
        for i in b.skeleton.foreground() {
            if b.radius.get(i) == 3.0 {
                assert_eq!(n.radius.get(i), 1.0);
                assert_eq!(n.inv_radius.get(i), 1.0);
            }
            assert!((n.radius.get(i) * n.inv_radius.get(i) - 1.0).abs() <= 1e-12);
        }

        let b4 = build_bundle(&tube(1), Some(4.0)).unwrap();
        let n4 = b4.normalized();
        let i = b4.skeleton.foreground().next().unwrap();
        assert_eq!(n4.radius.get(i), 0.25);
        assert_eq!(n4.inv_radius.get(i), 4.0);

        let t2 = build_bundle(&tube(2), Some(4.0)).unwrap();
        let centre = t2.skeleton.foreground().find(|&i| t2.dist.get(i) == 2.0).unwrap();
        assert_eq!(t2.normalized().dist.get(centre), 0.5);
    }
}

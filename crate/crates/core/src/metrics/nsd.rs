use crate::error::{Error, Result};
use crate::grid::BinaryField;
use crate::morphology::sq_distance_to_sites;

/// Foreground elements with at least one face neighbor in the background,
/// counting the outside of the grid as background.
pub fn boundary(mask: &BinaryField) -> BinaryField {
    let shape = mask.shape();
    let mut out = BinaryField::zeros(shape.clone());
    for i in mask.foreground() {
        let c = shape.coords(i);
        let edge = shape
            .face_offsets()
            .iter()
            .any(|&o| shape.shifted(c, o).is_none_or(|j| !mask.get(j)));
        if edge {
            out.set(i, true);
        }
    }
    out
}

/// Normalized surface distance at a physical tolerance.
///
/// The fraction of boundary elements of either mask lying within `tol` of
/// the other mask's boundary, with distances in physical units.
pub fn nsd(pred: &BinaryField, reference: &BinaryField, tol: f64) -> Result<f64> {
    pred.shape().ensure_same(reference.shape())?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} is not positive")));
    }
    let shape = pred.shape();
    let (bp, bl) = (boundary(pred), boundary(reference));
    let total = bp.count() + bl.count();
    if total == 0 {
        return Ok(1.0);
    }
    // absorbs rounding in spacing products so exact-tolerance pairs count
    let limit = tol * tol * (1.0 + 1e-12);
    let near = |from: &BinaryField, to: &BinaryField| {
        let d2 = sq_distance_to_sites(shape, &to.to_bools());
        from.foreground().filter(|&i| d2[i] <= limit).count()
    };
    Ok((near(&bp, &bl) + near(&bl, &bp)) as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    fn tube(shape: &GridShape, cy: usize) -> BinaryField {
        BinaryField::from_fn(shape.clone(), |x, y, _| (4..20).contains(&x) && y.abs_diff(cy) < 3)
    }

    #[test]
    fn examples() {
        let shape = GridShape::plane(24, 20);
        let a = tube(&shape, 8);
        assert_eq!(nsd(&a, &a, 1.0).unwrap(), 1.0);
        assert_eq!(nsd(&a, &tube(&shape, 9), 1.0).unwrap(), 1.0);
        let far = BinaryField::from_fn(shape.clone(), |x, y, _| x < 2 && y > 16);
        assert_eq!(nsd(&a, &far, 1.0).unwrap(), 0.0);
        let z = BinaryField::zeros(shape);
        assert_eq!(nsd(&z, &z, 1.0).unwrap(), 1.0);
        assert_eq!(nsd(&a, &z, 1.0).unwrap(), 0.0);
        assert!(nsd(&a, &a, 0.0).is_err());
    }

    #[test]
    fn spacing_scales_tolerance() {
        let shape = GridShape::with_spacing(&[24, 20], &[1.0, 2.0]).unwrap();
        let a = tube(&shape, 8);
        let b = tube(&shape, 9);
        // a one-row shift is 2 physical units apart along y
        assert!(nsd(&a, &b, 1.0).unwrap() < 1.0);
        assert_eq!(nsd(&a, &b, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn boundary_of_block() {
        let shape = GridShape::plane(5, 5);
        let m = BinaryField::from_fn(shape, |x, y, _| (1..4).contains(&x) && (1..4).contains(&y));
        assert_eq!(boundary(&m).count(), 8);
        assert_eq!(boundary(&BinaryField::ones(GridShape::plane(3, 3))).count(), 8);
    }
}

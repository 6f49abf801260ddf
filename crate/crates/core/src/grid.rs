//! Grid shapes and the three field types every other module works on.
//!
//! Elements are stored row-major with x fastest: `index = x + w * (y + h * z)`.
//! 2D grids carry an implicit depth of 1.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GridShape {
    ndim: usize,
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl GridShape {
    /// Unit-spacing shape from 2 or 3 extents.
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_spacing(dims, &vec![1.0; dims.len()])
    }

    pub fn with_spacing(dims: &[usize], spacing: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(Error::InvalidShape(format!(
                "expected 2 or 3 dims, got {}",
                dims.len()
            )));
        }
        if dims.len() != spacing.len() {
            return Err(Error::DimsSpacingMismatch {
                dims: dims.len(),
                spacing: spacing.len(),
            });
        }
        if let Some(d) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dim {d} is zero")));
        }
        if let Some(&s) = spacing.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidShape(format!("spacing {s} is not positive")));
        }
        let mut d = [1usize; 3];
        let mut sp = [1.0f64; 3];
        d[..dims.len()].copy_from_slice(dims);
        sp[..dims.len()].copy_from_slice(spacing);
        dims.iter()
            .try_fold(1usize, |acc, &x| acc.checked_mul(x))
            .ok_or_else(|| Error::InvalidShape("element count overflows".into()))?;
        Ok(Self {
            ndim: dims.len(),
            dims: d,
            spacing: sp,
        })
    }

    /// Unit-spacing 2D shape.
    ///
    /// Panics if either extent is zero.
    pub fn plane(w: usize, h: usize) -> Self {
        Self::new(&[w, h]).expect("plane extents must be positive")
    }

    /// Unit-spacing 3D shape.
    ///
    /// Panics if any extent is zero.
    pub fn volume(w: usize, h: usize, d: usize) -> Self {
        Self::new(&[w, h, d]).expect("volume extents must be positive")
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.ndim]
    }

    /// Extents padded to three axes (depth 1 for 2D).
    pub fn extent(&self) -> [usize; 3] {
        self.dims
    }

    pub(crate) fn spacing3(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [w, h, _] = self.dims;
        [index % w, (index / w) % h, index / (w * h)]
    }

    /// Index of `coords + offset`, or `None` when it falls outside the grid.
    #[inline]
    pub fn shifted(&self, coords: [usize; 3], offset: [isize; 3]) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let v = coords[a] as isize + offset[a];
            if v < 0 || v >= self.dims[a] as isize {
                return None;
            }
            c[a] = v as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    /// Face-adjacent neighbor offsets (4 in 2D, 6 in 3D).
    pub fn face_offsets(&self) -> &'static [[isize; 3]] {
        if self.ndim == 2 {
            &FACE_2D
        } else {
            &FACE_3D
        }
    }

    /// All neighbor offsets sharing at least a vertex (8 in 2D, 26 in 3D).
    pub fn full_offsets(&self) -> &'static [[isize; 3]] {
        if self.ndim == 2 {
            &FULL_2D
        } else {
            &FULL_3D
        }
    }

    pub fn ensure_same(&self, other: &GridShape) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims().iter().map(|d| d.to_string()).collect();
        let spacing: Vec<String> = self.spacing().iter().map(|s| s.to_string()).collect();
        write!(f, "{} (spacing {})", dims.join("x"), spacing.join(","))
    }
}

const FACE_2D: [[isize; 3]; 4] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0]];
const FACE_3D: [[isize; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];
const FULL_2D: [[isize; 3]; 8] = [
    [-1, -1, 0],
    [0, -1, 0],
    [1, -1, 0],
    [-1, 0, 0],
    [1, 0, 0],
    [-1, 1, 0],
    [0, 1, 0],
    [1, 1, 0],
];
const FULL_3D: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut n = 0;
    let mut z = -1;
    while z <= 1 {
        let mut y = -1;
        while y <= 1 {
            let mut x = -1;
            while x <= 1 {
                if !(x == 0 && y == 0 && z == 0) {
                    out[n] = [x, y, z];
                    n += 1;
                }
                x += 1;
            }
            y += 1;
        }
        z += 1;
    }
    out
};

/// A {0,1} field: masks V, skeletons S and the all-ones field U.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryField {
    shape: GridShape,
    values: Vec<u8>,
}

impl BinaryField {
    pub fn new(shape: GridShape, values: Vec<u8>) -> Result<Self> {
        check_len(&shape, values.len())?;
        if let Some(i) = values.iter().position(|&v| v > 1) {
            return Err(Error::InvalidValue {
                index: i,
                value: values[i] as f64,
                reason: "binary fields hold only 0 or 1",
            });
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len();
        Self {
            shape,
            values: vec![0; n],
        }
    }

    pub fn ones(shape: GridShape) -> Self {
        let n = shape.len();
        Self {
            shape,
            values: vec![1; n],
        }
    }

    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let [w, h, d] = shape.extent();
        let mut values = Vec::with_capacity(shape.len());
        for z in 0..d {
            for y in 0..h {
                for x in 0..w {
                    values.push(f(x, y, z) as u8);
                }
            }
        }
        Self { shape, values }
    }

    pub fn from_bools(shape: GridShape, bits: &[bool]) -> Result<Self> {
        check_len(&shape, bits.len())?;
        Ok(Self {
            shape,
            values: bits.iter().map(|&b| b as u8).collect(),
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.values[index] != 0
    }

    pub fn set(&mut self, index: usize, on: bool) {
        self.values[index] = on as u8;
    }

    /// Number of foreground elements.
    pub fn count(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    pub fn foreground(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| i)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v != 0).collect()
    }

    pub fn to_scalar(&self) -> ScalarField {
        ScalarField {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Elementwise `self AND NOT other`.
    pub fn minus(&self, other: &BinaryField) -> Result<BinaryField> {
        self.shape.ensure_same(&other.shape)?;
        Ok(Self {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a & (1 - b))
                .collect(),
        })
    }

    pub fn union(&self, other: &BinaryField) -> Result<BinaryField> {
        self.shape.ensure_same(&other.shape)?;
        Ok(Self {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a | b)
                .collect(),
        })
    }
}

/// Nonnegative real field: distance maps, radius maps and their normalized forms.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        check_len(&shape, values.len())?;
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidValue {
                index: i,
                value: values[i],
                reason: "scalar fields hold finite nonnegative reals",
            });
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len();
        Self {
            shape,
            values: vec![0.0; n],
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

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Elements with a nonzero value.
    pub fn support(&self) -> BinaryField {
        BinaryField {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| (v != 0.0) as u8).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Integer class labels; 0 is background.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelGrid {
    shape: GridShape,
    labels: Vec<u16>,
    num_classes: usize,
}

impl LabelGrid {
    pub fn new(shape: GridShape, labels: Vec<u16>, num_classes: usize) -> Result<Self> {
        check_len(&shape, labels.len())?;
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: l,
                num_classes,
            });
        }
        Ok(Self {
            shape,
            labels,
            num_classes,
        })
    }

    /// Class count inferred as `max label + 1`.
    pub fn from_labels(shape: GridShape, labels: Vec<u16>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0) as usize + 1;
        Self::new(shape, labels, k)
    }

    /// Two-class grid (background + class 1) from a mask.
    pub fn from_mask(mask: &BinaryField) -> Self {
        Self {
            shape: mask.shape.clone(),
            labels: mask.values.iter().map(|&v| v as u16).collect(),
            num_classes: 2,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Same labels under a larger declared vocabulary.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if let Some(&l) = self.labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label: l,
                num_classes,
            });
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    /// One-hot mask of a foreground class.
    pub fn binarize(&self, class_id: usize) -> Result<BinaryField> {
        if class_id == 0 || class_id >= self.num_classes {
            return Err(Error::UnknownClass {
                class_id,
                num_classes: self.num_classes,
            });
        }
        Ok(BinaryField {
            shape: self.shape.clone(),
            values: self
                .labels
                .iter()
                .map(|&l| (l as usize == class_id) as u8)
                .collect(),
        })
    }
}

fn check_len(shape: &GridShape, found: usize) -> Result<()> {
    if shape.len() == found {
        Ok(())
    } else {
        Err(Error::BufferLength {
            expected: shape.len(),
            found,
        })
    }
}

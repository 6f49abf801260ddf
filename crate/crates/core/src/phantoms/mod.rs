//! Synthetic vessel phantoms and the perturbations used by the sweeps.
//!
//! Every shape is a union of capsules: an element is foreground when its
//! center lies strictly closer than the local radius to a centerline
//! segment. With integer radii on axis-aligned segments the distance map on
//! the centerline equals the radius exactly.

mod sweep;

pub use sweep::{sweep, sweep_csv, Experiment, SweepRow};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{BinaryField, GridShape};

/// Minimum background band between any foreground element and the border.
pub const MARGIN: usize = 2;

/// A centerline segment with a radius varying linearly from `a` to `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub r0: f64,
    pub r1: f64,
}

impl Segment {
    pub fn uniform(a: [f64; 3], b: [f64; 3], r: f64) -> Self {
        Self { a, b, r0: r, r1: r }
    }

    /// Strict capsule test against the radius at the closest point.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let ab = sub(self.b, self.a);
        let ap = sub(p, self.a);
        let len2 = dot(ab, ab);
        let t = if len2 == 0.0 { 0.0 } else { (dot(ap, ab) / len2).clamp(0.0, 1.0) };
        let q = [self.a[0] + t * ab[0], self.a[1] + t * ab[1], self.a[2] + t * ab[2]];
        let r = self.r0 + t * (self.r1 - self.r0);
        let d = sub(p, q);
        dot(d, d) < r * r
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let r = self.r0.max(self.r1);
        let lo = std::array::from_fn(|k| self.a[k].min(self.b[k]) - r);
        let hi = std::array::from_fn(|k| self.a[k].max(self.b[k]) + r);
        (lo, hi)
    }

    fn shifted(&self, by: [f64; 3]) -> Segment {
        Segment {
            a: add(self.a, by),
            b: add(self.b, by),
            ..*self
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// Straight capsule through the grid center along `orientation`.
    Tube { radius: f64, length: f64 },
    /// Trunk plus two daughters of equal length meeting at a junction.
    /// `orientation` is the direction bisecting the daughters; the trunk
    /// points the opposite way. Branch 0 is the trunk, 1 and 2 carry
    /// `radii[0]` and `radii[1]`.
    YBranch {
        radii: [f64; 2],
        /// Defaults to the larger daughter radius.
        trunk_radius: Option<f64>,
        length: f64,
        /// Angle between the daughters, in degrees.
        spread_deg: f64,
    },
    /// Annulus `inner <= d < outer` in 2D; in 3D the torus swept by the
    /// same cross-section in the central z plane.
    Ring { inner: f64, outer: f64 },
    /// Segments in absolute voxel coordinates.
    MultiTube { segments: Vec<Segment> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub dims: Vec<usize>,
    pub geometry: Geometry,
    /// In-plane angle from +x, degrees.
    pub orientation_deg: f64,
    /// Uniform perturbation amplitude of segment endpoints, voxels.
    pub jitter: f64,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(dims: &[usize], geometry: Geometry) -> Self {
        let orientation_deg = match geometry {
            Geometry::YBranch { .. } => 45.0,
            _ => 0.0,
        };
        Self {
            dims: dims.to_vec(),
            geometry,
            orientation_deg,
            jitter: 0.0,
            seed: 0,
        }
    }

    pub fn tube(dims: &[usize], radius: f64, length: f64) -> Self {
        Self::new(dims, Geometry::Tube { radius, length })
    }

    pub fn ybranch(dims: &[usize], radii: [f64; 2], length: f64) -> Self {
        Self::new(
            dims,
            Geometry::YBranch {
                radii,
                trunk_radius: None,
                length,
                spread_deg: 90.0,
            },
        )
    }

    pub fn ring(dims: &[usize], inner: f64, outer: f64) -> Self {
        Self::new(dims, Geometry::Ring { inner, outer })
    }

    pub fn shape(&self) -> Result<GridShape> {
        GridShape::new(&self.dims)
    }

    /// Number of separately addressable branches.
    pub fn branch_count(&self) -> usize {
        match &self.geometry {
            Geometry::YBranch { .. } => 3,
            Geometry::MultiTube { segments } => segments.len(),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidPhantom(format!("{what} must be positive, got {v}")))
            }
        };
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::InvalidPhantom(format!("jitter {} is negative", self.jitter)));
        }
        if !self.orientation_deg.is_finite() {
            return Err(Error::InvalidPhantom("orientation is not finite".into()));
        }
        match &self.geometry {
            Geometry::Tube { radius, length } => {
                positive(*radius, "radius")?;
                if !(length.is_finite() && *length >= 0.0) {
                    return Err(Error::InvalidPhantom(format!("length must be nonnegative, got {length}")));
                }
                Ok(())
            }
            Geometry::YBranch {
                radii,
                trunk_radius,
                length,
                spread_deg,
            } => {
                positive(radii[0], "thin radius")?;
                positive(radii[1], "thick radius")?;
                if let Some(t) = trunk_radius {
                    positive(*t, "trunk radius")?;
                }
                positive(*length, "length")?;
                if !(*spread_deg > 0.0 && *spread_deg < 180.0) {
                    return Err(Error::InvalidPhantom(format!("spread {spread_deg} is outside (0, 180)")));
                }
                Ok(())
            }
            Geometry::Ring { inner, outer } => {
                positive(*outer, "outer radius")?;
                if !(*inner >= 0.0 && inner < outer) {
                    return Err(Error::InvalidPhantom(format!("ring needs 0 <= inner < outer, got {inner}/{outer}")));
                }
                Ok(())
            }
            Geometry::MultiTube { segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidPhantom("multi_tube needs at least one segment".into()));
                }
                for s in segments {
                    positive(s.r0, "segment radius")?;
                    positive(s.r1, "segment radius")?;
                }
                Ok(())
            }
        }
    }

    /// Centerline segments after centering and jitter, one per branch.
    /// Empty for rings.
    pub fn segments(&self) -> Result<Vec<Segment>> {
        self.validate()?;
        let shape = self.shape()?;
        let center = center_of(&shape);
        let th = self.orientation_deg.to_radians();
        // snap so axis-aligned directions stay exactly on the lattice
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-12 {
                r
            } else {
                v
            }
        };
        let dir = |angle: f64| [snap(angle.cos()), snap(angle.sin()), 0.0];
        let mut segs = match &self.geometry {
            Geometry::Tube { radius, length } => {
                let u = dir(th);
                let h = length / 2.0;
                vec![Segment::uniform(
                    [center[0] - h * u[0], center[1] - h * u[1], center[2]],
                    [center[0] + h * u[0], center[1] + h * u[1], center[2]],
                    *radius,
                )]
            }
            Geometry::YBranch {
                radii,
                trunk_radius,
                length,
                spread_deg,
            } => {
                let half = (spread_deg / 2.0).to_radians();
                let reach = |u: [f64; 3]| [length * u[0], length * u[1], 0.0];
                let o = [0.0; 3];
                let trunk = trunk_radius.unwrap_or(radii[0].max(radii[1]));
                let raw = vec![
                    Segment::uniform(o, reach(dir(th + std::f64::consts::PI)), trunk),
                    Segment::uniform(o, reach(dir(th - half)), radii[0]),
                    Segment::uniform(o, reach(dir(th + half)), radii[1]),
                ];
                // center the bounding box on the grid center with an integer shift
                let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
                for s in &raw {
                    for p in [s.a, s.b] {
                        for k in 0..3 {
                            lo[k] = lo[k].min(p[k]);
                            hi[k] = hi[k].max(p[k]);
                        }
                    }
                }
                let shift: [f64; 3] = std::array::from_fn(|k| (center[k] - (lo[k] + hi[k]) / 2.0).round());
                raw.iter().map(|s| s.shifted(shift)).collect()
            }
            Geometry::Ring { .. } => Vec::new(),
            Geometry::MultiTube { segments } => segments.clone(),
        };
        if self.jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let planar = shape.ndim() == 2;
            for s in &mut segs {
                for p in [&mut s.a, &mut s.b] {
                    for (k, v) in p.iter_mut().enumerate() {
                        if !(planar && k == 2) {
                            *v += rng.gen_range(-self.jitter..=self.jitter);
                        }
                    }
                }
            }
        }
        Ok(segs)
    }
}

/// Integer center `dim / 2` on every axis (0 for the unused z of 2D grids).
fn center_of(shape: &GridShape) -> [f64; 3] {
    let e = shape.extent();
    std::array::from_fn(|k| (e[k] / 2) as f64)
}

fn raster_segment(shape: &GridShape, seg: &Segment, out: &mut BinaryField) {
    let e = shape.extent();
    let (lo, hi) = seg.bounds();
    let range = |k: usize| {
        let a = lo[k].floor().max(0.0) as usize;
        let b = (hi[k].ceil().max(-1.0) as isize).min(e[k] as isize - 1);
        a..(b + 1).max(0) as usize
    };
    let (rx, ry, rz) = (range(0), range(1), if shape.ndim() == 3 { range(2) } else { 0..1 });
    for z in rz {
        for y in ry.clone() {
            for x in rx.clone() {
                if seg.contains([x as f64, y as f64, z as f64]) {
                    out.set(shape.index(x, y, z), true);
                }
            }
        }
    }
}

fn raster_ring(spec: &PhantomSpec, shape: &GridShape, inner: f64, outer: f64) -> BinaryField {
    let mut c = center_of(shape);
    if spec.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in c.iter_mut().take(2) {
            *v += rng.gen_range(-spec.jitter..=spec.jitter);
        }
    }
    let three = shape.ndim() == 3;
    let major = (inner + outer) / 2.0;
    let minor = (outer - inner) / 2.0;
    BinaryField::from_fn(shape.clone(), |x, y, z| {
        let (dx, dy) = (x as f64 - c[0], y as f64 - c[1]);
        let rho = (dx * dx + dy * dy).sqrt();
        if three {
            let dz = z as f64 - c[2];
            (rho - major).powi(2) + dz * dz < minor * minor
        } else {
            inner <= rho && rho < outer
        }
    })
}

fn check_margin(mask: &BinaryField) -> Result<()> {
    let shape = mask.shape();
    let e = shape.extent();
    for i in mask.foreground() {
        let c = shape.coords(i);
        for k in 0..shape.ndim() {
            if c[k] < MARGIN || c[k] + MARGIN >= e[k] {
                return Err(Error::InvalidPhantom(format!(
                    "foreground at {:?} is within {MARGIN} voxels of the border of {shape}",
                    &c[..shape.ndim()]
                )));
            }
        }
    }
    Ok(())
}

/// Per-branch rasters, in branch id order.
pub fn branches(spec: &PhantomSpec) -> Result<Vec<BinaryField>> {
    let shape = spec.shape()?;
    if let Geometry::Ring { inner, outer } = spec.geometry {
        spec.validate()?;
        return Ok(vec![raster_ring(spec, &shape, inner, outer)]);
    }
    Ok(spec
        .segments()?
        .iter()
        .map(|s| {
            let mut m = BinaryField::zeros(shape.clone());
            raster_segment(&shape, s, &mut m);
            m
        })
        .collect())
}

/// Rasterizes the phantom; fails when it comes closer than [`MARGIN`] to
/// the border.
pub fn generate(spec: &PhantomSpec) -> Result<BinaryField> {
    let parts = branches(spec)?;
    let mut mask = BinaryField::zeros(spec.shape()?);
    for p in &parts {
        mask = mask.union(p)?;
    }
    check_margin(&mask)?;
    Ok(mask)
}

/// Lattice shift with zero fill. Fails if any foreground would leave the grid.
pub fn translate(mask: &BinaryField, offset: &[isize]) -> Result<BinaryField> {
    let shape = mask.shape();
    if offset.len() != shape.ndim() {
        return Err(Error::InvalidArgument(format!(
            "offset has {} components for a {}D grid",
            offset.len(),
            shape.ndim()
        )));
    }
    let o = [offset[0], offset[1], offset.get(2).copied().unwrap_or(0)];
    let mut out = BinaryField::zeros(shape.clone());
    for i in mask.foreground() {
        match shape.shifted(shape.coords(i), o) {
            Some(j) => out.set(j, true),
            None => {
                return Err(Error::OutOfGrid(format!(
                    "shift {offset:?} moves foreground at {:?} outside {shape}",
                    &shape.coords(i)[..shape.ndim()]
                )))
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbor resampling about the grid center `(dim - 1) / 2`.
pub fn scale(mask: &BinaryField, factor: f64) -> Result<BinaryField> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidArgument(format!("scale factor {factor} is not positive")));
    }
    let shape = mask.shape();
    let e = shape.extent();
    let nd = shape.ndim();
    let cen: [f64; 3] = std::array::from_fn(|k| (e[k] as f64 - 1.0) / 2.0);
    for i in mask.foreground() {
        let c = shape.coords(i);
        for k in 0..nd {
            let to = cen[k] + (c[k] as f64 - cen[k]) * factor;
            if to < -0.5 || to > e[k] as f64 - 0.5 {
                return Err(Error::OutOfGrid(format!("scaling by {factor} pushes foreground outside {shape}")));
            }
        }
    }
    Ok(BinaryField::from_fn(shape.clone(), |x, y, z| {
        let c = [x, y, z];
        let mut src = [0usize; 3];
        for k in 0..nd {
            let s = (cen[k] + (c[k] as f64 - cen[k]) / factor).round();
            if s < 0.0 || s >= e[k] as f64 {
                return false;
            }
            src[k] = s as usize;
        }
        mask.get(shape.index(src[0], src[1], src[2]))
    }))
}

/// Removes the part of `mask` covered only by branch `branch_id`; elements
/// shared with another branch (the junction) are kept.
pub fn delete_branch(spec: &PhantomSpec, mask: &BinaryField, branch_id: usize) -> Result<BinaryField> {
    let parts = branches(spec)?;
    if branch_id >= parts.len() {
        return Err(Error::UnknownBranch {
            branch: branch_id,
            count: parts.len(),
        });
    }
    mask.shape().ensure_same(parts[0].shape())?;
    let mut own = parts[branch_id].clone();
    for (k, p) in parts.iter().enumerate() {
        if k != branch_id {
            own = own.minus(p)?;
        }
    }
    mask.minus(&own)
}

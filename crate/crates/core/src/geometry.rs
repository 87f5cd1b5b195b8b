//! Box geometry, point-cloud cropping and Birds-Eye-View rasterization.
//!
//! 3D conventions: `z` is up, a box's `length` runs along its local `x` axis,
//! `width` along local `y`, `height` along `z`, and `yaw` rotates the box
//! about `z`. Box centers are volumetric centers.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid 2D box ({left}, {top}, {right}, {bottom})")]
    InvalidBox2D {
        left: f64,
        top: f64,
        right: f64,
        bottom: f64,
    },
    #[error("invalid 3D box size ({0}, {1}, {2}); all components must be positive")]
    InvalidBox3D(f64, f64, f64),
    #[error("BEV resolution must be positive, got {rows}x{cols}")]
    InvalidResolution { rows: usize, cols: usize },
    #[error("box footprint has zero extent")]
    DegenerateFootprint,
}

/// Axis-aligned image-plane box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Box2D {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Result<Self, GeometryError> {
        let b = Self {
            left,
            top,
            right,
            bottom,
        };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(GeometryError::InvalidBox2D {
                left,
                top,
                right,
                bottom,
            })
        }
    }

    pub fn is_valid(&self) -> bool {
        let finite = self.left.is_finite()
            && self.top.is_finite()
            && self.right.is_finite()
            && self.bottom.is_finite();
        finite && self.left <= self.right && self.top <= self.bottom
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }
}

/// Intersection over union of two boxes; 0 when the union is empty.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let iw = a.right.min(b.right) - a.left.max(b.left);
    let ih = a.bottom.min(b.bottom) - a.top.max(b.top);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Oriented 3D box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: [f64; 3],
    /// (height, width, length)
    pub size: [f64; 3],
    pub yaw: f64,
}

impl Box3D {
    pub fn new(center: [f64; 3], size: [f64; 3], yaw: f64) -> Result<Self, GeometryError> {
        let b = Self { center, size, yaw };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(GeometryError::InvalidBox3D(size[0], size[1], size[2]))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.size.iter().all(|s| s.is_finite() && *s > 0.0)
            && self.center.iter().all(|c| c.is_finite())
            && self.yaw.is_finite()
    }

    pub fn height(&self) -> f64 {
        self.size[0]
    }

    pub fn width(&self) -> f64 {
        self.size[1]
    }

    pub fn length(&self) -> f64 {
        self.size[2]
    }

    /// Maps a world point into the box frame (origin at the center, axes
    /// aligned with length/width/height).
    pub fn to_local(&self, p: &[f64; 3]) -> [f64; 3] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dz = p[2] - self.center[2];
        let (s, c) = (libm::sin(self.yaw), libm::cos(self.yaw));
        [c * dx + s * dy, -s * dx + c * dy, dz]
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        let l = self.to_local(p);
        l[0].abs() <= self.length() / 2.0
            && l[1].abs() <= self.width() / 2.0
            && l[2].abs() <= self.height() / 2.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Keeps exactly the points inside `bbox`, in their original order.
pub fn crop_points(cloud: &PointCloud, bbox: &Box3D) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .filter(|p| bbox.contains(p))
            .copied()
            .collect(),
    }
}

pub const DEFAULT_BEV_RESOLUTION: (usize, usize) = (256, 256);

/// Row-major height raster; empty cells hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BevImage {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl BevImage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }
}

fn cell_index(offset: f64, extent: f64, bins: usize) -> usize {
    let raw = libm::floor(offset / extent * bins as f64);
    if raw <= 0.0 {
        0
    } else {
        (raw as usize).min(bins - 1)
    }
}

/// Rasterizes the points lying over `bbox`'s ground-plane footprint into a
/// `rows x cols` image holding the maximum `z` per cell.
///
/// Rows follow the box's local `y` (width), columns its local `x` (length),
/// both starting at the footprint's minimum corner. Points whose footprint
/// coordinates fall outside the box are skipped; the upper boundary is
/// clamped into the last cell.
pub fn rasterize_bev(
    cloud: &PointCloud,
    bbox: &Box3D,
    resolution: (usize, usize),
) -> Result<BevImage, GeometryError> {
    let (rows, cols) = resolution;
    if rows == 0 || cols == 0 {
        return Err(GeometryError::InvalidResolution { rows, cols });
    }
    let (x_extent, y_extent) = (bbox.length(), bbox.width());
    if !(x_extent > 0.0 && y_extent > 0.0) {
        return Err(GeometryError::DegenerateFootprint);
    }
    let (x_min, y_min) = (-x_extent / 2.0, -y_extent / 2.0);

    let mut cells = vec![0.0; rows * cols];
    let mut filled = vec![false; rows * cols];
    for p in &cloud.points {
        let local = bbox.to_local(p);
        let (dx, dy) = (local[0] - x_min, local[1] - y_min);
        if dx < 0.0 || dy < 0.0 || dx > x_extent || dy > y_extent {
            continue;
        }
        let idx = cell_index(dy, y_extent, rows) * cols + cell_index(dx, x_extent, cols);
        let z = p[2];
        if !filled[idx] || z > cells[idx] {
            cells[idx] = z;
            filled[idx] = true;
        }
    }
    Ok(BevImage { rows, cols, cells })
}

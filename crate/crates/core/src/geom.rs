//! Axis-aligned boxes in continuous image coordinates.
//!
//! Coordinates are measured in pixels with the origin at the top-left image
//! corner. A box covers the half-open region `[x_min, x_max) x [y_min, y_max)`,
//! so adjacent boxes tile without double-counting pixel centers.

/// Axis-aligned rectangle, `x_min <= x_max` and `y_min <= y_max` expected.
///
/// Degenerate boxes (zero width or height) are allowed and have zero area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x_min: f32,
    pub y_min: f32,
    pub x_max: f32,
    pub y_max: f32,
}

impl BoundingBox {
    pub fn new(x_min: f32, y_min: f32, x_max: f32, y_max: f32) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f32 {
        (self.x_max - self.x_min).max(0.0)
    }

    pub fn height(&self) -> f32 {
        (self.y_max - self.y_min).max(0.0)
    }

    pub fn area(&self) -> f32 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f32, f32) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Area of the overlap with `other`, zero when they do not intersect.
    pub fn intersection_area(&self, other: &BoundingBox) -> f32 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Intersection over union. Zero when the union is empty, so two
    /// degenerate boxes compare as disjoint rather than NaN.
    pub fn iou(&self, other: &BoundingBox) -> f32 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    /// Whether the center of pixel `(x, y)` falls inside the box.
    ///
    /// Pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`; the box is
    /// half-open so a center exactly on `x_max` counts as outside.
    pub fn contains_pixel_center(&self, x: u32, y: u32) -> bool {
        let cx = x as f32 + 0.5;
        let cy = y as f32 + 0.5;
        cx >= self.x_min && cx < self.x_max && cy >= self.y_min && cy < self.y_max
    }
}

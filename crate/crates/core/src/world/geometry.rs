//! Circle primitives and shape decomposition.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A disc `(x, y, r)`. Used both for object-local offsets and world placements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Circle {
    pub const fn new(x: f64, y: f64, r: f64) -> Self {
        Circle { x, y, r }
    }

    /// Signed gap between two discs; `<= 0` means contact or overlap.
    #[inline]
    pub fn gap(&self, other: &Circle) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt() - self.r - other.r
    }

    #[inline]
    pub fn overlaps(&self, other: &Circle) -> bool {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        let rr = self.r + other.r;
        dx * dx + dy * dy <= rr * rr
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        let dx = px - self.x;
        let dy = py - self.y;
        dx * dx + dy * dy <= self.r * self.r
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Circle {
        Circle::new(self.x + dx, self.y + dy, self.r)
    }

    /// Apply the pose `(x, y, theta)` to a local circle.
    pub fn placed(&self, x: f64, y: f64, theta: f64) -> Circle {
        if theta == 0.0 {
            return Circle::new(self.x + x, self.y + y, self.r);
        }
        let (s, c) = theta.sin_cos();
        Circle::new(
            x + c * self.x - s * self.y,
            y + s * self.x + c * self.y,
            self.r,
        )
    }
}

/// True iff some pair of circles touches or overlaps. Tangency counts.
pub fn collide(a: &[Circle], b: &[Circle]) -> bool {
    a.iter().any(|ca| b.iter().any(|cb| ca.overlaps(cb)))
}

/// Smallest pairwise gap between two circle sets (`+inf` if either is empty).
pub fn min_gap(a: &[Circle], b: &[Circle]) -> f64 {
    let mut best = f64::INFINITY;
    for ca in a {
        for cb in b {
            let g = ca.gap(cb);
            if g < best {
                best = g;
            }
        }
    }
    best
}

/// Smallest disc containing every circle of the set, centred at the given point.
pub fn bounding_radius(cx: f64, cy: f64, circles: &[Circle]) -> f64 {
    circles
        .iter()
        .map(|c| ((c.x - cx).powi(2) + (c.y - cy).powi(2)).sqrt() + c.r)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Circle { radius: f64 },
    Box { width: f64, height: f64 },
    Triangle { side: f64 },
}

/// Shape classes the goal language can filter on. `Box` matches both squares and rectangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeClass {
    Circle,
    Box,
    Square,
    Rectangle,
    Triangle,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 5] = [
        ShapeClass::Circle,
        ShapeClass::Box,
        ShapeClass::Square,
        ShapeClass::Rectangle,
        ShapeClass::Triangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Circle => "circle",
            ShapeClass::Box => "box",
            ShapeClass::Square => "square",
            ShapeClass::Rectangle => "rectangle",
            ShapeClass::Triangle => "triangle",
        }
    }

    pub fn parse(s: &str) -> Option<ShapeClass> {
        ShapeClass::ALL.into_iter().find(|c| c.name() == s)
    }
}

const SQUARE_TOL: f64 = 1e-9;

impl Shape {
    pub fn is_valid(&self) -> bool {
        match *self {
            Shape::Circle { radius } => radius > 0.0 && radius.is_finite(),
            Shape::Box { width, height } => {
                width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()
            }
            Shape::Triangle { side } => side > 0.0 && side.is_finite(),
        }
    }

    /// The coarse class: circle, box or triangle.
    pub fn base_class(&self) -> ShapeClass {
        match self {
            Shape::Circle { .. } => ShapeClass::Circle,
            Shape::Box { .. } => ShapeClass::Box,
            Shape::Triangle { .. } => ShapeClass::Triangle,
        }
    }

    pub fn is(&self, class: ShapeClass) -> bool {
        match (class, self) {
            (ShapeClass::Circle, Shape::Circle { .. }) => true,
            (ShapeClass::Triangle, Shape::Triangle { .. }) => true,
            (ShapeClass::Box, Shape::Box { .. }) => true,
            (ShapeClass::Square, Shape::Box { width, height }) => {
                (width - height).abs() <= SQUARE_TOL
            }
            (ShapeClass::Rectangle, Shape::Box { width, height }) => {
                (width - height).abs() > SQUARE_TOL
            }
            _ => false,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Circle { radius } => PI * radius * radius,
            Shape::Box { width, height } => width * height,
            Shape::Triangle { side } => 3f64.sqrt() / 4.0 * side * side,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            Shape::Circle { radius } => 2.0 * PI * radius,
            Shape::Box { width, height } => 2.0 * (width + height),
            Shape::Triangle { side } => 3.0 * side,
        }
    }

    /// Largest dimension: diameter, longer box side, or triangle side.
    pub fn extent(&self) -> f64 {
        match *self {
            Shape::Circle { radius } => 2.0 * radius,
            Shape::Box { width, height } => width.max(height),
            Shape::Triangle { side } => side,
        }
    }

    /// Half-widths of the axis-aligned bounding box at `theta = 0`, as (left/right, down, up).
    /// Triangles are not symmetric about the x axis, hence the split vertical extent.
    pub fn half_extents(&self) -> (f64, f64, f64) {
        match *self {
            Shape::Circle { radius } => (radius, radius, radius),
            Shape::Box { width, height } => (width / 2.0, height / 2.0, height / 2.0),
            Shape::Triangle { side } => {
                let h = side * 3f64.sqrt() / 2.0;
                (side / 2.0, h / 3.0, 2.0 * h / 3.0)
            }
        }
    }

    /// Vertices in the local frame (centroid at the origin). Empty for circles.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        match *self {
            Shape::Circle { .. } => Vec::new(),
            Shape::Box { width, height } => {
                let (w, h) = (width / 2.0, height / 2.0);
                vec![(-w, -h), (w, -h), (w, h), (-w, h)]
            }
            Shape::Triangle { side } => {
                let h = side * 3f64.sqrt() / 2.0;
                vec![
                    (-side / 2.0, -h / 3.0),
                    (side / 2.0, -h / 3.0),
                    (0.0, 2.0 * h / 3.0),
                ]
            }
        }
    }

    /// Whether a local point lies inside the shape (boundary included).
    pub fn contains_local(&self, px: f64, py: f64) -> bool {
        match *self {
            Shape::Circle { radius } => px * px + py * py <= radius * radius,
            Shape::Box { width, height } => px.abs() <= width / 2.0 && py.abs() <= height / 2.0,
            Shape::Triangle { .. } => {
                let v = self.vertices();
                (0..3).all(|i| {
                    let (ax, ay) = v[i];
                    let (bx, by) = v[(i + 1) % 3];
                    (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0.0
                })
            }
        }
    }

    /// Euclidean distance from a local point to the shape (0 inside).
    pub fn distance_local(&self, px: f64, py: f64) -> f64 {
        if self.contains_local(px, py) {
            return 0.0;
        }
        match *self {
            Shape::Circle { radius } => (px * px + py * py).sqrt() - radius,
            _ => {
                let v = self.vertices();
                let n = v.len();
                (0..n)
                    .map(|i| segment_distance(px, py, v[i], v[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `count` points spread evenly along the outline, in the local frame.
    pub fn boundary_samples(&self, count: usize) -> Vec<(f64, f64)> {
        let count = count.max(1);
        match *self {
            Shape::Circle { radius } => (0..count)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / count as f64;
                    (radius * a.cos(), radius * a.sin())
                })
                .collect(),
            _ => {
                let v = self.vertices();
                let n = v.len();
                let lens: Vec<f64> = (0..n)
                    .map(|i| {
                        let (a, b) = (v[i], v[(i + 1) % n]);
                        ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt()
                    })
                    .collect();
                let total: f64 = lens.iter().sum();
                let mut out = Vec::with_capacity(count);
                for i in 0..count {
                    let mut s = total * i as f64 / count as f64;
                    let mut e = 0;
                    while e + 1 < n && s > lens[e] {
                        s -= lens[e];
                        e += 1;
                    }
                    let t = (s / lens[e]).clamp(0.0, 1.0);
                    let (a, b) = (v[e], v[(e + 1) % n]);
                    out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
                }
                out
            }
        }
    }
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Cover a shape with circles in its local frame.
///
/// Boxes use a grid of cell circumcircles with at least `resolution` cells; triangles use one
/// circumcircle (resolution 1), three kite circles on the medial axis (2-3), or the
/// circumcircles of an `m x m` subdivision with `m*m >= resolution`. Every point of the shape
/// lies in some circle; [`overshoot`] bounds how far the circles reach past the outline.
pub fn decompose(shape: &Shape, resolution: usize) -> Vec<Circle> {
    let resolution = resolution.max(1);
    match *shape {
        Shape::Circle { radius } => vec![Circle::new(0.0, 0.0, radius)],
        Shape::Box { width, height } => {
            let (nx, ny) = box_grid(width, height, resolution);
            let (cw, ch) = (width / nx as f64, height / ny as f64);
            let r = (cw * cw + ch * ch).sqrt() / 2.0;
            let mut out = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    out.push(Circle::new(
                        -width / 2.0 + cw * (i as f64 + 0.5),
                        -height / 2.0 + ch * (j as f64 + 0.5),
                        r,
                    ));
                }
            }
            out
        }
        Shape::Triangle { side } => {
            let v = shape.vertices();
            match resolution {
                1 => vec![Circle::new(0.0, 0.0, side / 3f64.sqrt())],
                2 | 3 => v
                    .iter()
                    .map(|&(x, y)| Circle::new(x / 2.0, y / 2.0, side / (2.0 * 3f64.sqrt())))
                    .collect(),
                _ => {
                    let m = (resolution as f64).sqrt().ceil() as usize;
                    triangle_subdivision(v[0], v[1], v[2], m, side / m as f64)
                }
            }
        }
    }
}

fn box_grid(width: f64, height: f64, resolution: usize) -> (usize, usize) {
    let nx = ((resolution as f64 * width / height).sqrt().round() as usize).max(1);
    let ny = resolution.div_ceil(nx).max(1);
    (nx, ny)
}

fn triangle_subdivision(
    a: (f64, f64),
    b: (f64, f64),
    c: (f64, f64),
    m: usize,
    small_side: f64,
) -> Vec<Circle> {
    let r = small_side / 3f64.sqrt();
    let mf = m as f64;
    let pt = |i: usize, j: usize| -> (f64, f64) {
        // barycentric lattice point a + i/m (b-a) + j/m (c-a)
        let (u, v) = (i as f64 / mf, j as f64 / mf);
        (
            a.0 + u * (b.0 - a.0) + v * (c.0 - a.0),
            a.1 + u * (b.1 - a.1) + v * (c.1 - a.1),
        )
    };
    let centroid = |p: (f64, f64), q: (f64, f64), s: (f64, f64)| -> Circle {
        Circle::new((p.0 + q.0 + s.0) / 3.0, (p.1 + q.1 + s.1) / 3.0, r)
    };
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..(m - i) {
            out.push(centroid(pt(i, j), pt(i + 1, j), pt(i, j + 1)));
            if i + j + 1 < m {
                out.push(centroid(pt(i + 1, j), pt(i + 1, j + 1), pt(i, j + 1)));
            }
        }
    }
    out
}

/// How far the decomposition at `resolution` can reach outside the shape outline.
pub fn overshoot(shape: &Shape, resolution: usize) -> f64 {
    let resolution = resolution.max(1);
    match *shape {
        Shape::Circle { .. } => 0.0,
        Shape::Box { width, height } => {
            let (nx, ny) = box_grid(width, height, resolution);
            let (cw, ch) = (width / nx as f64, height / ny as f64);
            (cw * cw + ch * ch).sqrt() / 2.0 - cw.min(ch) / 2.0
        }
        Shape::Triangle { side } => match resolution {
            1 => side / (2.0 * 3f64.sqrt()),
            2 | 3 => side / (4.0 * 3f64.sqrt()),
            _ => {
                let m = (resolution as f64).sqrt().ceil();
                side / m / (2.0 * 3f64.sqrt())
            }
        },
    }
}

/// Smallest resolution whose overshoot is within `eps`.
pub fn resolution_for(shape: &Shape, eps: f64) -> usize {
    match *shape {
        Shape::Circle { .. } => 1,
        Shape::Triangle { side } => {
            let m = (side / (2.0 * 3f64.sqrt() * eps)).ceil().max(2.0) as usize;
            m * m
        }
        Shape::Box { .. } => {
            let mut n = 1;
            while overshoot(shape, n) > eps && n < 10_000 {
                n += 1;
            }
            n
        }
    }
}

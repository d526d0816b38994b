//! Convex polygon clipping against axis-aligned rectangles, with shoelace
//! area and centroid. The fan-subdomain overlaps and their centers of mass
//! are computed with these generic routines rather than closed-form case
//! analysis; the per-cell partition invariant (overlap areas sum to dx·dy)
//! pins them down in tests.

/// 2D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Axis-aligned rectangle `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Convex polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }
}

/// Stack-allocated polygon used in the per-cell geometry loops; a quad
/// clipped by four half-planes gains at most four vertices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SmallPoly {
    pts: [(f64, f64); 16],
    len: usize,
}

impl SmallPoly {
    pub(crate) fn from_points(pts: &[(f64, f64)]) -> Self {
        let mut p = SmallPoly {
            pts: [(0.0, 0.0); 16],
            len: pts.len(),
        };
        p.pts[..pts.len()].copy_from_slice(pts);
        p
    }

    pub(crate) fn points(&self) -> &[(f64, f64)] {
        &self.pts[..self.len]
    }

    fn push(&mut self, p: (f64, f64)) {
        debug_assert!(self.len < 16, "SmallPoly capacity exceeded");
        self.pts[self.len] = p;
        self.len += 1;
    }

    /// Sutherland–Hodgman pass against one half-plane. `dist` is a signed
    /// distance, non-negative inside the kept region and affine along edges.
    fn clip_halfplane(&self, dist: impl Fn(f64, f64) -> f64) -> SmallPoly {
        let mut out = SmallPoly {
            pts: [(0.0, 0.0); 16],
            len: 0,
        };
        let n = self.len;
        if n == 0 {
            return out;
        }
        for i in 0..n {
            let a = self.pts[i];
            let b = self.pts[(i + 1) % n];
            let da = dist(a.0, a.1);
            let db = dist(b.0, b.1);
            if da >= 0.0 {
                out.push(a);
                if db < 0.0 {
                    let t = da / (da - db);
                    out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
                }
            } else if db >= 0.0 {
                let t = da / (da - db);
                out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        out
    }

    pub(crate) fn clip_rect(&self, r: Rect) -> SmallPoly {
        self.clip_halfplane(|x, _| x - r.x_lo)
            .clip_halfplane(|x, _| r.x_hi - x)
            .clip_halfplane(|_, y| y - r.y_lo)
            .clip_halfplane(|_, y| r.y_hi - y)
    }

    /// Signed shoelace area (positive for counter-clockwise vertices) and
    /// centroid. The sums run relative to the vertex mean so thin slivers
    /// keep their centroid accuracy, and the centroid is clamped into the
    /// vertex bounding box, which contains it exactly. Degenerate polygons
    /// report area 0 with the vertex mean as centroid so downstream weights
    /// of zero stay finite.
    pub(crate) fn area_centroid(&self) -> (f64, (f64, f64)) {
        let n = self.len;
        let mut mx = 0.0;
        let mut my = 0.0;
        for &(x, y) in self.points() {
            mx += x;
            my += y;
        }
        mx /= n.max(1) as f64;
        my /= n.max(1) as f64;
        if n < 3 {
            return (0.0, (mx, my));
        }
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let (x0, y0) = (self.pts[i].0 - mx, self.pts[i].1 - my);
            let (x1, y1) = (
                self.pts[(i + 1) % n].0 - mx,
                self.pts[(i + 1) % n].1 - my,
            );
            let cross = x0 * y1 - x1 * y0;
            area2 += cross;
            cx += (x0 + x1) * cross;
            cy += (y0 + y1) * cross;
        }
        let area = 0.5 * area2;
        if area2.abs() < 1e-300 {
            return (0.0, (mx, my));
        }
        let mut gx = mx + cx / (3.0 * area2);
        let mut gy = my + cy / (3.0 * area2);
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in self.points() {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        gx = gx.clamp(lo.0, hi.0);
        gy = gy.clamp(lo.1, hi.1);
        (area, (gx, gy))
    }
}

/// Clips a convex polygon against an axis-aligned rectangle. An empty
/// intersection is returned as an empty polygon, not an error.
pub fn clip_convex(poly: &Polygon, rect: Rect) -> Polygon {
    assert!(
        poly.vertices.len() <= 12,
        "clip_convex supports up to 12 vertices"
    );
    let pts: Vec<(f64, f64)> = poly.vertices.iter().map(|p| (p.x, p.y)).collect();
    let clipped = SmallPoly::from_points(&pts).clip_rect(rect);
    Polygon::new(
        clipped
            .points()
            .iter()
            .map(|&(x, y)| Point { x, y })
            .collect(),
    )
}

/// Signed shoelace area and centroid of a polygon (counter-clockwise
/// vertices give positive area).
pub fn area_centroid(poly: &Polygon) -> (f64, Point) {
    let pts: Vec<(f64, f64)> = poly.vertices.iter().map(|p| (p.x, p.y)).collect();
    let (area, (cx, cy)) = SmallPoly::from_points(&pts).area_centroid();
    (area, Point { x: cx, y: cy })
}

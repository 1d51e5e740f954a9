//! Pixel-space geometry: boxes, polygons and row-wise coverage.
//!
//! Coordinates are image pixels with y pointing down. Areas of unions and
//! intersections are integrated row by row at unit-row midpoints, which is
//! exact for polygons whose vertices lie on integer coordinates.

use serde::de::Error as _;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Serialize integral coordinates as JSON integers.
pub(crate) fn write_coord<S: SerializeSeq>(seq: &mut S, v: f64) -> Result<(), S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        seq.serialize_element(&(v as i64))
    } else {
        seq.serialize_element(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    /// Box spanning the two corners in any order.
    pub fn from_corners(ax: f64, ay: f64, bx: f64, by: f64) -> Self {
        BBox::new(ax.min(bx), ay.min(by), ax.max(bx), ay.max(by))
    }

    pub fn is_valid(&self) -> bool {
        self.x0 <= self.x1
            && self.y0 <= self.y1
            && self.x0 >= 0.0
            && self.y0 >= 0.0
            && [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.x0.min(other.x0),
            self.y0.min(other.y0),
            self.x1.max(other.x1),
            self.y1.max(other.y1),
        )
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub fn contains(&self, other: &BBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    /// Clamp into `[0, width] x [0, height]`. Returns the box and whether it moved.
    pub fn clamp_to(&self, width: f64, height: f64) -> (BBox, bool) {
        let c = BBox::new(
            self.x0.clamp(0.0, width),
            self.y0.clamp(0.0, height),
            self.x1.clamp(0.0, width),
            self.y1.clamp(0.0, height),
        );
        (c, c != *self)
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon::new(vec![
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ])
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        for v in [self.x0, self.y0, self.x1, self.y1] {
            write_coord(&mut seq, v)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        let b = BBox::new(v[0], v[1], v[2], v[3]);
        if !(b.x0 <= b.x1 && b.y0 <= b.y1) {
            return Err(D::Error::custom(format!("inverted bbox {v:?}")));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        write_coord(&mut seq, self.x)?;
        write_coord(&mut seq, self.y)?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

/// Closed polygon; the closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Axis-aligned hull. Empty polygons yield a zero box at the origin.
    pub fn bbox(&self) -> BBox {
        let mut it = self.vertices.iter();
        let Some(first) = it.next() else {
            return BBox::default();
        };
        it.fold(BBox::new(first.x, first.y, first.x, first.y), |b, p| {
            BBox::new(b.x0.min(p.x), b.y0.min(p.y), b.x1.max(p.x), b.y1.max(p.y))
        })
    }

    /// Shoelace area (absolute).
    pub fn area(&self) -> f64 {
        let twice: f64 = self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum();
        twice.abs() / 2.0
    }

    pub fn clamp_to(&self, width: f64, height: f64) -> (Polygon, bool) {
        let mut moved = false;
        let vertices = self
            .vertices
            .iter()
            .map(|p| {
                let q = Point::new(p.x.clamp(0.0, width), p.y.clamp(0.0, height));
                moved |= q != *p;
                q
            })
            .collect();
        (Polygon { vertices }, moved)
    }

    /// True when no two non-adjacent edges touch and adjacent edges meet only at
    /// their shared vertex.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Shared vertex only: reject folding back along the same line.
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                    if collinear_overlap(shared, p, q) {
                        return false;
                    }
                } else if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd crossings of the horizontal line at `y`, as sorted covered intervals.
    pub fn row_intervals(&self, y: f64) -> Vec<(f64, f64)> {
        let mut xs: Vec<f64> = self
            .edges()
            .filter_map(|(a, b)| {
                if a.y == b.y {
                    return None;
                }
                let (lo, hi) = if a.y < b.y { (a, b) } else { (b, a) };
                if y >= lo.y && y < hi.y {
                    Some(lo.x + (y - lo.y) * (hi.x - lo.x) / (hi.y - lo.y))
                } else {
                    None
                }
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.chunks_exact(2).map(|c| (c[0], c[1])).collect()
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// `p` and `q` both leave `shared` in the same direction.
fn collinear_overlap(shared: Point, p: Point, q: Point) -> bool {
    if cross(shared, p, q) != 0.0 {
        return false;
    }
    let dot = (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y);
    dot > 0.0
}

/// Merge a list of intervals into disjoint sorted intervals.
pub fn merge_intervals(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.retain(|(a, b)| b > a);
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intervals_length(iv: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    iv.iter()
        .map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0))
        .sum()
}

fn intersect_intervals(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut i, mut j, mut total) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Covered x-intervals of the union of `polys` along the row at `y`.
pub fn union_row(polys: &[&Polygon], y: f64) -> Vec<(f64, f64)> {
    merge_intervals(polys.iter().flat_map(|p| p.row_intervals(y)).collect())
}

/// Integrate `f(y)` over `[y0, y1]` with one midpoint sample per unit row.
fn integrate_rows(y0: f64, y1: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if y1 <= y0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut k = y0.floor();
    while k < y1 {
        let lo = k.max(y0);
        let hi = (k + 1.0).min(y1);
        if hi > lo {
            total += (hi - lo) * f((lo + hi) / 2.0);
        }
        k += 1.0;
    }
    total
}

/// Area of `bbox` covered by the union of `polys`.
pub fn covered_area(bbox: &BBox, polys: &[&Polygon]) -> f64 {
    if polys.is_empty() {
        return 0.0;
    }
    integrate_rows(bbox.y0, bbox.y1, |y| {
        intervals_length(&union_row(polys, y), bbox.x0, bbox.x1)
    })
}

/// Fraction of `bbox` covered by the union of `polys`. Degenerate boxes use
/// their centre point.
pub fn covered_fraction(bbox: &BBox, polys: &[&Polygon]) -> f64 {
    let area = bbox.area();
    if area > 0.0 {
        return covered_area(bbox, polys) / area;
    }
    let (cx, cy) = ((bbox.x0 + bbox.x1) / 2.0, (bbox.y0 + bbox.y1) / 2.0);
    let inside = union_row(polys, cy)
        .iter()
        .any(|&(a, b)| cx >= a && cx < b);
    if inside {
        1.0
    } else {
        0.0
    }
}

/// Intersection and union areas of two polygon sets.
pub fn overlap_areas(a: &[&Polygon], b: &[&Polygon]) -> (f64, f64) {
    let hull = a
        .iter()
        .chain(b.iter())
        .map(|p| p.bbox())
        .reduce(|x, y| x.union(&y));
    let Some(hull) = hull else {
        return (0.0, 0.0);
    };
    let inter = integrate_rows(hull.y0, hull.y1, |y| {
        intersect_intervals(&union_row(a, y), &union_row(b, y))
    });
    let union = integrate_rows(hull.y0, hull.y1, |y| {
        let both: Vec<_> = union_row(a, y).into_iter().chain(union_row(b, y)).collect();
        intervals_length(&merge_intervals(both), f64::NEG_INFINITY, f64::INFINITY)
    });
    (inter, union)
}

/// Intersection-over-union of two polygons (0 when both are empty).
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    let (inter, union) = overlap_areas(&[a], &[b]);
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

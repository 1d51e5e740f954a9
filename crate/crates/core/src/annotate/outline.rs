//! Outline of a union of line boxes as one simple rectilinear polygon.
//!
//! Consecutive boxes (in reading order) are joined by bridge rectangles across
//! the gap between them. The union is rasterized on the coordinate-compressed
//! grid of all box edges, holes are filled, diagonal pinch points are closed,
//! and the outer boundary is traced clockwise (y down) from its top-left corner.

use crate::geom::{BBox, Point, Polygon};

fn bridge(a: &BBox, b: &BBox) -> Option<BBox> {
    let gap_x = a.x0.max(b.x0) - a.x1.min(b.x1);
    let gap_y = a.y0.max(b.y0) - a.y1.min(b.y1);
    let span_x = (a.x0.min(b.x0), a.x1.max(b.x1));
    let span_y = (a.y0.min(b.y0), a.y1.max(b.y1));
    let overlap_x = (a.x0.max(b.x0), a.x1.min(b.x1));
    let overlap_y = (a.y0.max(b.y0), a.y1.min(b.y1));
    if gap_y > 0.0 {
        let (x0, x1) = if overlap_x.1 > overlap_x.0 { overlap_x } else { span_x };
        Some(BBox::new(x0, a.y1.min(b.y1), x1, a.y0.max(b.y0)))
    } else if gap_x > 0.0 {
        let (y0, y1) = if overlap_y.1 > overlap_y.0 { overlap_y } else { span_y };
        Some(BBox::new(a.x1.min(b.x1), y0, a.x0.max(b.x0), y1))
    } else {
        None
    }
}

struct Grid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    w: usize,
    h: usize,
    cells: Vec<bool>,
}

impl Grid {
    fn get(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.w && (j as usize) < self.h && self.cells[j as usize * self.w + i as usize]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.cells[j * self.w + i] = true;
    }

    fn cell_area(&self, i: usize, j: usize) -> f64 {
        (self.xs[i + 1] - self.xs[i]) * (self.ys[j + 1] - self.ys[j])
    }

    /// Empty cells not reachable from outside the grid become filled.
    fn fill_holes(&mut self) {
        let (w, h) = (self.w, self.h);
        let mut outside = vec![false; w * h];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for i in 0..w {
            stack.push((i, 0));
            stack.push((i, h - 1));
        }
        for j in 0..h {
            stack.push((0, j));
            stack.push((w - 1, j));
        }
        while let Some((i, j)) = stack.pop() {
            let k = j * w + i;
            if self.cells[k] || outside[k] {
                continue;
            }
            outside[k] = true;
            if i > 0 {
                stack.push((i - 1, j));
            }
            if i + 1 < w {
                stack.push((i + 1, j));
            }
            if j > 0 {
                stack.push((i, j - 1));
            }
            if j + 1 < h {
                stack.push((i, j + 1));
            }
        }
        for k in 0..w * h {
            if !outside[k] {
                self.cells[k] = true;
            }
        }
    }

    /// Fill the smaller empty cell at every vertex where two filled cells meet
    /// only diagonally. Returns whether anything changed.
    fn close_pinches(&mut self) -> bool {
        let mut changed = false;
        for j in 1..self.h {
            for i in 1..self.w {
                let (ii, jj) = (i as isize, j as isize);
                let tl = self.get(ii - 1, jj - 1);
                let tr = self.get(ii, jj - 1);
                let bl = self.get(ii - 1, jj);
                let br = self.get(ii, jj);
                let pick = if tl && br && !tr && !bl {
                    [(i, j - 1), (i - 1, j)]
                } else if tr && bl && !tl && !br {
                    [(i - 1, j - 1), (i, j)]
                } else {
                    continue;
                };
                let (a, b) = (pick[0], pick[1]);
                let c = if self.cell_area(b.0, b.1) < self.cell_area(a.0, a.1) { b } else { a };
                self.set(c.0, c.1);
                changed = true;
            }
        }
        changed
    }

    /// Clockwise outer boundary with collinear vertices removed.
    fn trace(&self) -> Vec<Point> {
        // Directed unit edges between grid vertices, interior on the right.
        // Each boundary vertex has exactly one outgoing edge once pinches are closed.
        let (w, h) = (self.w, self.h);
        let vid = |i: usize, j: usize| j * (w + 1) + i;
        let mut next = vec![usize::MAX; (w + 1) * (h + 1)];
        let mut start = None;
        for j in 0..h {
            for i in 0..w {
                if !self.get(i as isize, j as isize) {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                if !self.get(ii, jj - 1) {
                    next[vid(i, j)] = vid(i + 1, j);
                    start.get_or_insert(vid(i, j));
                }
                if !self.get(ii + 1, jj) {
                    next[vid(i + 1, j)] = vid(i + 1, j + 1);
                }
                if !self.get(ii, jj + 1) {
                    next[vid(i + 1, j + 1)] = vid(i, j + 1);
                }
                if !self.get(ii - 1, jj) {
                    next[vid(i, j + 1)] = vid(i, j);
                }
            }
        }
        let Some(start) = start else {
            return Vec::new();
        };
        let coords = |v: usize| (v % (w + 1), v / (w + 1));
        let mut path = vec![start];
        let mut v = next[start];
        while v != start {
            path.push(v);
            v = next[v];
        }
        let n = path.len();
        let mut out = Vec::new();
        for k in 0..n {
            let (pi, pj) = coords(path[(k + n - 1) % n]);
            let (ci, cj) = coords(path[k]);
            let (ni, nj) = coords(path[(k + 1) % n]);
            let d_in = (ci as isize - pi as isize, cj as isize - pj as isize);
            let d_out = (ni as isize - ci as isize, nj as isize - cj as isize);
            if d_in.0.signum() != d_out.0.signum() || d_in.1.signum() != d_out.1.signum() {
                out.push(Point::new(self.xs[ci], self.ys[cj]));
            }
        }
        out
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Outline of the union of `boxes`, bridged in the given order. `None` when
/// the boxes cover no area.
pub fn union_outline(boxes: &[BBox]) -> Option<Polygon> {
    let mut rects: Vec<BBox> = boxes.iter().copied().filter(|b| b.area() > 0.0).collect();
    if rects.is_empty() {
        return None;
    }
    let bridges: Vec<BBox> = rects.windows(2).filter_map(|w| bridge(&w[0], &w[1])).collect();
    rects.extend(bridges);

    let xs = sorted_unique(rects.iter().flat_map(|r| [r.x0, r.x1]).collect());
    let ys = sorted_unique(rects.iter().flat_map(|r| [r.y0, r.y1]).collect());
    let (w, h) = (xs.len() - 1, ys.len() - 1);
    let mut grid = Grid {
        cells: vec![false; w * h],
        xs,
        ys,
        w,
        h,
    };
    let index = |v: &[f64], x: f64| v.binary_search_by(|p| p.total_cmp(&x)).expect("edge on grid");
    for r in &rects {
        let (i0, i1) = (index(&grid.xs, r.x0), index(&grid.xs, r.x1));
        let (j0, j1) = (index(&grid.ys, r.y0), index(&grid.ys, r.y1));
        for j in j0..j1 {
            for i in i0..i1 {
                grid.set(i, j);
            }
        }
    }
    grid.fill_holes();
    while grid.close_pinches() {
        grid.fill_holes();
    }
    Some(Polygon::new(grid.trace()))
}

/// Hull of the boxes as a rectangle polygon.
pub fn hull_rect(boxes: &[BBox]) -> Option<Polygon> {
    let hull = boxes.iter().copied().reduce(|a, b| a.union(&b))?;
    (hull.area() > 0.0).then(|| hull.to_polygon())
}

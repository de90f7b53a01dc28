//! Zero sets of functions sampled on a square grid, and the nesting forest
//! of their closed components.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `n x n` grid of sample points covering `[lo, hi]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareGrid {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl SquareGrid {
    pub fn new(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::invalid("grid needs n >= 2 and hi > lo"));
        }
        Ok(SquareGrid { n, lo, hi })
    }

    /// Grid over `[-r, r]^2` with `cells` cells per side.
    pub fn centered(r: f64, cells: usize) -> Result<Self> {
        Self::new(cells + 1, -r, r)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i), self.coord(j)]
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Samples `f` at every grid point, row-major in `j`.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for j in 0..self.n {
            let y = self.coord(j);
            for i in 0..self.n {
                v.push(f(self.coord(i), y));
            }
        }
        v
    }
}

/// Contours extracted from one sign field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlanarContours {
    pub cycles: Vec<Vec<[f64; 2]>>,
    pub open_paths: Vec<Vec<[f64; 2]>>,
    /// Cells where all four edges cross; two branches pass within one cell.
    pub saddle_cells: usize,
}

fn positive(v: f64) -> bool {
    v >= 0.0
}

/// Marching squares on `values` (row-major, `grid.n^2` entries). Saddle
/// cells are resolved by the sign of the mean of the four corners.
pub fn extract_contours(values: &[f64], grid: &SquareGrid) -> Result<PlanarContours> {
    let n = grid.n;
    if values.len() != n * n {
        return Err(Error::invalid("value array does not match the grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite value on the contour grid", None));
    }
    let h_count = n * (n - 1);
    let h_edge = |i: usize, j: usize| j * (n - 1) + i;
    let v_edge = |i: usize, j: usize| h_count + j * n + i;
    let total = 2 * h_count;
    let val = |i: usize, j: usize| values[j * n + i];
    let crossed = |a: f64, b: f64| positive(a) != positive(b);

    const NONE: u32 = u32::MAX;
    let mut link = vec![[NONE, NONE]; total];
    let mut add = |a: usize, b: usize| {
        for (x, y) in [(a, b), (b, a)] {
            if link[x][0] == NONE {
                link[x][0] = y as u32;
            } else {
                link[x][1] = y as u32;
            }
        }
    };
    let mut saddle_cells = 0;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let (v00, v10, v11, v01) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1));
            let bottom = (h_edge(i, j), crossed(v00, v10));
            let right = (v_edge(i + 1, j), crossed(v10, v11));
            let top = (h_edge(i, j + 1), crossed(v01, v11));
            let left = (v_edge(i, j), crossed(v00, v01));
            let on: Vec<usize> = [bottom, right, top, left].iter().filter(|e| e.1).map(|e| e.0).collect();
            match on.len() {
                0 => {}
                2 => add(on[0], on[1]),
                4 => {
                    saddle_cells += 1;
                    let centre = 0.25 * (v00 + v10 + v11 + v01);
                    if positive(centre) == positive(v00) {
                        add(bottom.0, right.0);
                        add(left.0, top.0);
                    } else {
                        add(bottom.0, left.0);
                        add(top.0, right.0);
                    }
                }
                _ => unreachable!("a square cell has an even number of sign changes"),
            }
        }
    }

    let point = |e: usize| -> [f64; 2] {
        let (a, b) = if e < h_count {
            let (i, j) = (e % (n - 1), e / (n - 1));
            ((i, j), (i + 1, j))
        } else {
            let k = e - h_count;
            let (i, j) = (k % n, k / n);
            ((i, j), (i, j + 1))
        };
        let (fa, fb) = (val(a.0, a.1), val(b.0, b.1));
        let t = fa / (fa - fb);
        let pa = grid.point(a.0, a.1);
        let pb = grid.point(b.0, b.1);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    let mut seen = vec![false; total];
    let mut out = PlanarContours { saddle_cells, ..Default::default() };
    let walk = |start: usize, seen: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut path = vec![start];
        seen[start] = true;
        let mut prev = NONE;
        let mut cur = start as u32;
        loop {
            let l = link[cur as usize];
            let next = if l[0] != prev { l[0] } else { l[1] };
            if next == NONE {
                return (path, false);
            }
            if next as usize == start {
                return (path, true);
            }
            if seen[next as usize] {
                return (path, false);
            }
            seen[next as usize] = true;
            path.push(next as usize);
            prev = cur;
            cur = next;
        }
    };
    // Open paths start at edges with a single link (grid boundary).
    for e in 0..total {
        if !seen[e] && link[e][0] != NONE && link[e][1] == NONE {
            let (p, _) = walk(e, &mut seen);
            out.open_paths.push(p.into_iter().map(point).collect());
        }
    }
    for e in 0..total {
        if !seen[e] && link[e][0] != NONE {
            let (p, closed) = walk(e, &mut seen);
            let pts: Vec<[f64; 2]> = p.into_iter().map(point).collect();
            if closed {
                out.cycles.push(pts);
            } else {
                out.open_paths.push(pts);
            }
        }
    }
    Ok(out)
}

/// Even-odd ray casting.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let m = poly.len();
    for k in 0..m {
        let a = poly[k];
        let b = poly[(k + 1) % m];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let m = poly.len();
    let mut s = 0.0;
    for k in 0..m {
        let a = poly[k];
        let b = poly[(k + 1) % m];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

/// Canonical encoding of the nesting forest of disjoint closed curves.
///
/// Each curve becomes `(` + its children + `)`, siblings sorted, so `""` is
/// empty, `"()"` one oval, `"()()"` two side by side and `"(())"` one inside
/// another.
pub fn nesting_signature(cycles: &[Vec<[f64; 2]>]) -> String {
    let m = cycles.len();
    let areas: Vec<f64> = cycles.iter().map(|c| polygon_area(c)).collect();
    let mut parent = vec![usize::MAX; m];
    for a in 0..m {
        let probe = cycles[a][0];
        let mut best = usize::MAX;
        for b in 0..m {
            if a != b && areas[b] > areas[a] && point_in_polygon(probe, &cycles[b]) && (best == usize::MAX || areas[b] < areas[best]) {
                best = b;
            }
        }
        parent[a] = best;
    }
    fn encode(node: usize, parent: &[usize]) -> String {
        let mut kids: Vec<String> = (0..parent.len()).filter(|&c| parent[c] == node).map(|c| encode(c, parent)).collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    let mut roots: Vec<String> = (0..m).filter(|&c| parent[c] == usize::MAX).map(|c| encode(c, &parent)).collect();
    roots.sort();
    roots.concat()
}

/// Checks that `s` is a well-formed signature and returns it in canonical
/// sibling order.
pub fn canonical_signature(s: &str) -> Result<String> {
    fn parse(chars: &[u8], pos: &mut usize) -> Result<Vec<String>> {
        let mut out = Vec::new();
        while *pos < chars.len() && chars[*pos] == b'(' {
            *pos += 1;
            let mut kids = parse(chars, pos)?;
            if *pos >= chars.len() || chars[*pos] != b')' {
                return Err(Error::invalid("unbalanced nesting signature"));
            }
            *pos += 1;
            kids.sort();
            out.push(format!("({})", kids.concat()));
        }
        Ok(out)
    }
    let bytes: Vec<u8> = s.bytes().filter(|c| !c.is_ascii_whitespace()).collect();
    let mut pos = 0;
    let mut top = parse(&bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::invalid(format!("malformed nesting signature {s:?}")));
    }
    top.sort();
    Ok(top.concat())
}

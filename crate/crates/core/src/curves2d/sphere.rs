//! Icosahedral triangulations of `S^2` and zero sets of ternary forms on them.
//!
//! A ternary form `Q` of degree `d` satisfies `Q(-v) = (-1)^d Q(v)`, so its
//! zero set on the sphere is antipodally symmetric and covers the real plane
//! curve twice. Each triangle with mixed vertex signs carries one segment
//! joining its two sign-changing edges; the segments close up into cycles.
//! A cycle mapped to itself by the antipodal map covers a pseudoline, and a
//! pair of distinct antipodal cycles covers one oval.

use crate::ensembles::HomogeneousPolynomial;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
pub struct SphereGrid {
    pub level: u32,
    pub vertices: Vec<[f64; 3]>,
    pub edges: Vec<[u32; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub tri_edges: Vec<[u32; 3]>,
    pub edge_tris: Vec<[u32; 2]>,
    pub antipode_vertex: Vec<u32>,
    pub antipode_edge: Vec<u32>,
    /// Longest edge, as a geodesic angle.
    pub max_edge: f64,
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

// Bit pattern with -0.0 folded onto 0.0.
fn key(v: &[f64; 3]) -> [u64; 3] {
    [(v[0] + 0.0).to_bits(), (v[1] + 0.0).to_bits(), (v[2] + 0.0).to_bits()]
}

// Fixed generic rotation (axis (1, 2, 3), angle 0.7) applied after the
// antipodal tables are built, so no grid vertex sits on a coordinate plane.
fn generic_rotation() -> [[f64; 3]; 3] {
    let k = normalize([1.0, 2.0, 3.0]);
    let (s, c) = 0.7f64.sin_cos();
    let mut r = [[0.0; 3]; 3];
    let cross = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = c * id + s * cross[i][j] + (1.0 - c) * k[i] * k[j];
        }
    }
    r
}

impl SphereGrid {
    /// Shared grid for `level`.
    pub fn get(level: u32) -> Arc<SphereGrid> {
        type Cache = Mutex<HashMap<u32, Arc<SphereGrid>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("grid cache poisoned").get(&level) {
            return g.clone();
        }
        let g = Arc::new(SphereGrid::build(level));
        cache.lock().expect("grid cache poisoned").entry(level).or_insert(g).clone()
    }

    /// Icosahedron subdivided `level` times, vertices projected to the sphere.
    pub fn build(level: u32) -> SphereGrid {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let mut vertices: Vec<[f64; 3]> = raw.iter().map(|v| normalize(*v)).collect();
        let mut triangles: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3 / 2);
            let mut next = Vec::with_capacity(triangles.len() * 4);
            let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<[f64; 3]>| -> u32 {
                let k = (a.min(b), a.max(b));
                *mid.entry(k).or_insert_with(|| {
                    let (p, q) = (vertices[a as usize], vertices[b as usize]);
                    vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    (vertices.len() - 1) as u32
                })
            };
            for t in &triangles {
                let ab = midpoint(t[0], t[1], &mut vertices);
                let bc = midpoint(t[1], t[2], &mut vertices);
                let ca = midpoint(t[2], t[0], &mut vertices);
                next.push([t[0], ab, ca]);
                next.push([t[1], bc, ab]);
                next.push([t[2], ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }
        // Antipodes are exact: negation commutes with the midpoint and
        // normalization arithmetic.
        let index: HashMap<[u64; 3], u32> = vertices.iter().enumerate().map(|(i, v)| (key(v), i as u32)).collect();
        let antipode_vertex: Vec<u32> =
            vertices.iter().map(|v| *index.get(&key(&[-v[0], -v[1], -v[2]])).expect("antipodal vertex")).collect();
        drop(index);
        let mut edge_index: HashMap<(u32, u32), u32> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2);
        let mut edge_tris: Vec<[u32; 2]> = Vec::with_capacity(triangles.len() * 3 / 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (ti, t) in triangles.iter().enumerate() {
            let mut te = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let kk = (a.min(b), a.max(b));
                let e = *edge_index.entry(kk).or_insert_with(|| {
                    edges.push([kk.0, kk.1]);
                    edge_tris.push([u32::MAX, u32::MAX]);
                    (edges.len() - 1) as u32
                });
                let slot = &mut edge_tris[e as usize];
                if slot[0] == u32::MAX {
                    slot[0] = ti as u32;
                } else {
                    slot[1] = ti as u32;
                }
                te[k] = e;
            }
            tri_edges.push(te);
        }
        let antipode_edge: Vec<u32> = edges
            .iter()
            .map(|e| {
                let (a, b) = (antipode_vertex[e[0] as usize], antipode_vertex[e[1] as usize]);
                edge_index[&(a.min(b), a.max(b))]
            })
            .collect();
        drop(edge_index);
        let r = generic_rotation();
        for v in vertices.iter_mut() {
            *v = [dot(&r[0], v), dot(&r[1], v), dot(&r[2], v)];
        }
        let max_edge = edges
            .iter()
            .map(|e| dot(&vertices[e[0] as usize], &vertices[e[1] as usize]).clamp(-1.0, 1.0).acos())
            .fold(0.0, f64::max);
        SphereGrid { level, vertices, edges, triangles, tri_edges, edge_tris, antipode_vertex, antipode_edge, max_edge }
    }

    /// Smallest level whose longest edge is at most `max_angle`.
    pub fn level_for_edge(max_angle: f64) -> Result<u32> {
        for level in 0..=9 {
            if SphereGrid::get(level).max_edge <= max_angle {
                return Ok(level);
            }
        }
        Err(Error::invalid(format!("edge length {max_angle} needs a grid finer than level 9")))
    }

    /// Values of a ternary form at all vertices, using the parity symmetry
    /// to evaluate only one vertex of each antipodal pair.
    pub fn evaluate(&self, q: &HomogeneousPolynomial) -> Result<Vec<f64>> {
        if q.nvars() != 3 {
            return Err(Error::invalid("sphere grids evaluate ternary forms"));
        }
        let d = q.degree() as usize;
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let c = q.coeffs();
        let mut out = vec![0.0; self.vertices.len()];
        let mut p0 = vec![0.0; d + 1];
        let mut p1 = vec![0.0; d + 1];
        let mut p2 = vec![0.0; d + 1];
        for (i, v) in self.vertices.iter().enumerate() {
            let a = self.antipode_vertex[i] as usize;
            if a < i {
                out[i] = sign * out[a];
                continue;
            }
            for (t, x) in [(&mut p0, v[0]), (&mut p1, v[1]), (&mut p2, v[2])] {
                t[0] = 1.0;
                for k in 1..=d {
                    t[k] = t[k - 1] * x;
                }
            }
            // Storage order: a0 descending, then a1 descending.
            let mut idx = 0;
            let mut s = 0.0;
            for a0 in (0..=d).rev() {
                let m = d - a0;
                let mut inner = 0.0;
                for a1 in (0..=m).rev() {
                    inner += c[idx] * p1[a1] * p2[m - a1];
                    idx += 1;
                }
                s += p0[a0] * inner;
            }
            out[i] = s;
        }
        Ok(out)
    }

    /// Point where the zero set crosses edge `e`, by linear interpolation.
    pub fn crossing_point(&self, values: &[f64], e: usize) -> [f64; 3] {
        let [a, b] = self.edges[e];
        let (fa, fb) = (values[a as usize], values[b as usize]);
        let t = fa / (fa - fb);
        let (p, q) = (self.vertices[a as usize], self.vertices[b as usize]);
        normalize([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])])
    }
}

/// One cycle of the zero set on `S^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereCycle {
    /// Crossed edges in traversal order.
    pub edges: Vec<u32>,
    /// Index of the antipodal cycle (itself for a pseudoline).
    pub antipode: usize,
}

impl SphereCycle {
    pub fn is_pseudoline(&self, index: usize) -> bool {
        self.antipode == index
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionFlags {
    /// A vertex value was exactly zero.
    pub zero_vertex: bool,
    /// Two different cycles meet at a common vertex, i.e. pass within one
    /// edge of each other.
    pub narrow_passage: bool,
    /// A cycle encloses a single vertex (tube under two triangles wide).
    pub tiny_cycle: bool,
}

impl ResolutionFlags {
    pub fn any(&self) -> bool {
        self.zero_vertex || self.narrow_passage || self.tiny_cycle
    }
}

/// Topology of a real plane curve extracted on a sphere grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveTopology {
    pub level: u32,
    pub cycles: Vec<SphereCycle>,
    /// Number of connected components in `RP^2`.
    pub b0: usize,
    /// Components not bounding a disk (0 or 1).
    pub noncontractible: usize,
    pub flags: ResolutionFlags,
}

impl CurveTopology {
    /// One representative cycle per component of the projective curve,
    /// with whether it is a pseudoline.
    pub fn components(&self) -> Vec<(usize, bool)> {
        self.cycles
            .iter()
            .enumerate()
            .filter(|(i, c)| c.antipode >= *i)
            .map(|(i, c)| (i, c.antipode == i))
            .collect()
    }
}

/// Extracts cycles from vertex values on `grid`.
pub fn extract_topology(values: &[f64], grid: &SphereGrid) -> Result<CurveTopology> {
    if values.len() != grid.vertices.len() {
        return Err(Error::invalid("value array does not match the grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite value on the sphere grid", None));
    }
    let mut flags = ResolutionFlags { zero_vertex: values.contains(&0.0), ..Default::default() };
    let pos: Vec<bool> = values.iter().map(|v| *v >= 0.0).collect();
    let crossed: Vec<bool> = grid.edges.iter().map(|e| pos[e[0] as usize] != pos[e[1] as usize]).collect();

    const NONE: u32 = u32::MAX;
    let mut cycle_of = vec![NONE; grid.edges.len()];
    let mut cycles: Vec<SphereCycle> = Vec::new();
    let other_crossed = |t: u32, e: u32| -> u32 {
        let te = grid.tri_edges[t as usize];
        *te.iter().find(|&&x| x != e && crossed[x as usize]).expect("a crossed triangle has two crossed edges")
    };
    for start in 0..grid.edges.len() {
        if !crossed[start] || cycle_of[start] != NONE {
            continue;
        }
        let id = cycles.len() as u32;
        let mut edges = vec![start as u32];
        cycle_of[start] = id;
        let mut prev_tri = grid.edge_tris[start][0];
        let mut cur = start as u32;
        loop {
            let tris = grid.edge_tris[cur as usize];
            let t = if tris[0] == prev_tri { tris[1] } else { tris[0] };
            let next = other_crossed(t, cur);
            if next as usize == start {
                break;
            }
            if cycle_of[next as usize] != NONE {
                return Err(Error::InvalidState("zero-set traversal revisited an edge".into()));
            }
            cycle_of[next as usize] = id;
            edges.push(next);
            prev_tri = t;
            cur = next;
        }
        cycles.push(SphereCycle { edges, antipode: 0 });
    }
    for c in cycles.iter_mut() {
        c.antipode = cycle_of[grid.antipode_edge[c.edges[0] as usize] as usize] as usize;
    }

    let mut seen_at = vec![NONE; grid.vertices.len()];
    for (e, &c) in cycle_of.iter().enumerate() {
        if c == NONE {
            continue;
        }
        for &v in &grid.edges[e] {
            let s = &mut seen_at[v as usize];
            if *s == NONE {
                *s = c;
            } else if *s != c {
                flags.narrow_passage = true;
            }
        }
    }
    flags.tiny_cycle = cycles.iter().any(|c| c.edges.len() <= 6);

    let noncontractible = cycles.iter().enumerate().filter(|(i, c)| c.antipode == *i).count();
    let pairs = cycles.len() - noncontractible;
    if pairs % 2 != 0 {
        return Err(Error::InvalidState("antipodal cycles do not pair up".into()));
    }
    Ok(CurveTopology { level: grid.level, b0: noncontractible + pairs / 2, noncontractible, cycles, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::AffinePolynomial;

    #[test]
    fn grid_counts_and_symmetry() {
        for level in 0..4 {
            let g = SphereGrid::build(level);
            let f = 20 * 4usize.pow(level);
            assert_eq!(g.triangles.len(), f);
            assert_eq!(g.edges.len(), 3 * f / 2);
            assert_eq!(g.vertices.len(), f / 2 + 2);
            for (i, v) in g.vertices.iter().enumerate() {
                let a = g.vertices[g.antipode_vertex[i] as usize];
                assert_eq!([-v[0], -v[1], -v[2]], a);
            }
            assert!(g.edge_tris.iter().all(|t| t[1] != u32::MAX));
        }
        let g = SphereGrid::get(3);
        assert!(g.max_edge < 1.2 * 1.1071 / 8.0);
    }

    fn form(terms: &[(f64, Vec<u32>)]) -> HomogeneousPolynomial {
        // Ternary form from terms in (X0, X1, X2).
        let d = terms[0].1.iter().sum();
        let mut q = HomogeneousPolynomial::zero(3, d);
        for (c, e) in terms {
            let r = q.basis().rank(e);
            q.coeffs_mut()[r] += c;
        }
        q
    }

    #[test]
    fn conic_is_one_oval() {
        // X1^2 + X2^2 - X0^2/4
        let q = form(&[(1.0, vec![0, 2, 0]), (1.0, vec![0, 0, 2]), (-0.25, vec![2, 0, 0])]);
        let g = SphereGrid::get(4);
        let t = extract_topology(&g.evaluate(&q).unwrap(), &g).unwrap();
        assert_eq!((t.b0, t.noncontractible), (1, 0));
        assert!(!t.flags.any());
    }

    #[test]
    fn line_is_a_pseudoline() {
        let q = form(&[(1.0, vec![1, 0, 0]), (0.3, vec![0, 1, 0]), (-0.2, vec![0, 0, 1])]);
        let g = SphereGrid::get(3);
        let t = extract_topology(&g.evaluate(&q).unwrap(), &g).unwrap();
        assert_eq!((t.b0, t.noncontractible), (1, 1));
    }

    #[test]
    fn empty_conic() {
        let q = form(&[(1.0, vec![0, 2, 0]), (1.0, vec![0, 0, 2]), (1.0, vec![2, 0, 0])]);
        let g = SphereGrid::get(2);
        let t = extract_topology(&g.evaluate(&q).unwrap(), &g).unwrap();
        assert_eq!(t.b0, 0);
    }

    #[test]
    fn cubic_with_oval_and_pseudoline() {
        // y^2 = x (x - 1)(x + 1) ... in the chart X0 = 1: y^2 - x^3 + x = 0,
        // scaled down so both branches sit well inside the visible region.
        let p = AffinePolynomial::from_terms(
            2,
            &[(1.0, vec![0, 2]), (-1.0, vec![3, 0]), (1.0, vec![1, 0])],
        )
        .unwrap();
        let q = p.homogenize(3).unwrap();
        let g = SphereGrid::get(6);
        let t = extract_topology(&g.evaluate(&q).unwrap(), &g).unwrap();
        assert_eq!((t.b0, t.noncontractible), (2, 1));
    }

    #[test]
    fn parity_evaluation_matches_direct() {
        let s = crate::ensembles::Sampler::new(crate::ensembles::EnsembleSpec::kostlan(3, 7, 1)).unwrap();
        let q = s.sample(2);
        let g = SphereGrid::get(2);
        let v = g.evaluate(&q).unwrap();
        for (i, p) in g.vertices.iter().enumerate() {
            assert!((v[i] - q.evaluate(p)).abs() < 1e-12 * (1.0 + v[i].abs()));
        }
    }
}

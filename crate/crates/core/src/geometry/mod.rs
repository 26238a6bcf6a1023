//! Convex hulls in one to three dimensions, point and box distance queries.

pub mod gjk;
mod hull2d;
pub use hull2d::monotone_chain;
mod hull3d;
pub(crate) mod vec3;

use thiserror::Error;

use gjk::{AaBox, Distance, PointSet};
use hull3d::Quickhull;
use vec3::{add, cross, dot, norm, scale, sub};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("convex hull needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDim(usize),
    #[error("point {0} has {1} coordinates, expected {2}")]
    Ragged(usize, usize, usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
}

/// Supporting half-space `normal·x ≤ offset` with unit normal, spanned by
/// hull vertices (indices into [`Hull::vertices`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hull {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    affine_dim: usize,
    thickness: f64,
}

pub(crate) fn embed(p: &[f64]) -> [f64; 3] {
    std::array::from_fn(|k| p.get(k).copied().unwrap_or(0.0))
}

/// Convex hull of `points` (dimension 1, 2 or 3). Affinely dependent input
/// gives a lower-dimensional hull: `is_degenerate()` is set, facets are empty
/// and `thickness()` reports how far the points stray from that subspace.
pub fn convex_hull(points: &[Vec<f64>]) -> Result<Hull, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::TooFewPoints(points.len()));
    }
    let dim = points[0].len();
    if !(1..=3).contains(&dim) {
        return Err(GeometryError::UnsupportedDim(dim));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(GeometryError::Ragged(i, p.len(), dim));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
    }
    Ok(match dim {
        1 => hull_1d(points),
        2 => hull_2d(points),
        _ => hull_3d(points),
    })
}

fn hull_1d(points: &[Vec<f64>]) -> Hull {
    let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Hull { dim: 1, vertices: vec![vec![lo]], facets: vec![], affine_dim: 0, thickness: 0.0 };
    }
    Hull {
        dim: 1,
        vertices: vec![vec![lo], vec![hi]],
        facets: vec![
            Facet { normal: vec![-1.0], offset: -lo, vertices: vec![0] },
            Facet { normal: vec![1.0], offset: hi, vertices: vec![1] },
        ],
        affine_dim: 1,
        thickness: 0.0,
    }
}

fn hull_2d(points: &[Vec<f64>]) -> Hull {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    let idx = hull2d::monotone_chain(&pts);
    let vertices: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
    if vertices.len() < 3 {
        let thickness = if vertices.len() == 2 { max_line_distance(points, &vertices[0], &vertices[1]) } else { 0.0 };
        let affine_dim = vertices.len() - 1;
        return Hull { dim: 2, vertices, facets: vec![], affine_dim, thickness };
    }
    let n = vertices.len();
    let facets = (0..n)
        .map(|i| {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let l = dx.hypot(dy);
            let normal = vec![dy / l, -dx / l];
            let offset = normal[0] * a[0] + normal[1] * a[1];
            Facet { normal, offset, vertices: vec![i, (i + 1) % n] }
        })
        .collect();
    Hull { dim: 2, vertices, facets, affine_dim: 2, thickness: 0.0 }
}

fn max_line_distance(points: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (embed(a), embed(b));
    let ab = sub(b, a);
    let l = norm(ab);
    points.iter().map(|p| norm(cross(ab, sub(embed(p), a))) / l).fold(0.0, f64::max)
}

fn hull_3d(points: &[Vec<f64>]) -> Hull {
    let pts: Vec<[f64; 3]> = points.iter().map(|p| embed(p)).collect();
    match hull3d::quickhull(&pts) {
        Quickhull::Full(fs) => {
            let mut remap = std::collections::BTreeMap::new();
            for f in &fs {
                for &v in &f.v {
                    let next = remap.len();
                    remap.entry(v).or_insert(next);
                }
            }
            let mut vertices = vec![Vec::new(); remap.len()];
            for (&orig, &new) in &remap {
                vertices[new] = points[orig].clone();
            }
            let facets = fs
                .iter()
                .map(|f| Facet { normal: f.n.to_vec(), offset: f.d, vertices: f.v.iter().map(|v| remap[v]).collect() })
                .collect();
            Hull { dim: 3, vertices, facets, affine_dim: 3, thickness: 0.0 }
        }
        Quickhull::Degenerate { affine_dim, seed, thickness } => {
            let verts: Vec<usize> = match affine_dim {
                0 => vec![seed[0]],
                1 => {
                    let (p0, dir) = (pts[seed[0]], sub(pts[seed[1]], pts[seed[0]]));
                    let t = |i: usize| dot(sub(pts[i], p0), dir);
                    let lo = (0..pts.len()).min_by(|&a, &b| t(a).total_cmp(&t(b))).unwrap();
                    let hi = (0..pts.len()).max_by(|&a, &b| t(a).total_cmp(&t(b))).unwrap();
                    vec![lo, hi]
                }
                _ => {
                    let p0 = pts[seed[0]];
                    let e1 = sub(pts[seed[1]], p0);
                    let e1 = scale(e1, 1.0 / norm(e1));
                    let w = sub(pts[seed[2]], p0);
                    let e2 = sub(w, scale(e1, dot(w, e1)));
                    let e2 = scale(e2, 1.0 / norm(e2));
                    let flat: Vec<[f64; 2]> =
                        pts.iter().map(|&p| [dot(sub(p, p0), e1), dot(sub(p, p0), e2)]).collect();
                    hull2d::monotone_chain(&flat)
                }
            };
            Hull { dim: 3, vertices: verts.iter().map(|&i| points[i].clone()).collect(), facets: vec![], affine_dim, thickness }
        }
    }
}

fn closest_on_segment(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    if l2 == 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0);
    add(a, scale(ab, t))
}

/// Closest point of triangle `abc` to `p` (Voronoi-region walk).
fn closest_on_triangle(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let (ab, ac, ap) = (sub(b, a), sub(c, a), sub(p, a));
    let (d1, d2) = (dot(ab, ap), dot(ac, ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let (d3, d4) = (dot(ab, bp), dot(ac, bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add(a, scale(ab, d1 / (d1 - d3)));
    }
    let cp = sub(p, c);
    let (d5, d6) = (dot(ab, cp), dot(ac, cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add(a, scale(ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return add(b, scale(sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6))));
    }
    let denom = 1.0 / (va + vb + vc);
    add(a, add(scale(ab, vb * denom), scale(ac, vc * denom)))
}

impl Hull {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_degenerate(&self) -> bool {
        self.affine_dim < self.dim
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    fn violation(&self, f: &Facet, p: &[f64]) -> f64 {
        f.normal.iter().zip(p).map(|(n, x)| n * x).sum::<f64>() - f.offset
    }

    fn facet_distance(&self, f: &Facet, p: &[f64]) -> f64 {
        let q = embed(p);
        let v = |i: usize| embed(&self.vertices[f.vertices[i]]);
        let c = match f.vertices.len() {
            1 => v(0),
            2 => closest_on_segment(q, v(0), v(1)),
            _ => closest_on_triangle(q, v(0), v(1), v(2)),
        };
        norm(sub(q, c))
    }

    /// Euclidean distance from `p` to the hull (0 inside).
    pub fn distance_to_point(&self, p: &[f64]) -> f64 {
        if self.is_degenerate() {
            let pt = embed(p);
            return gjk::distance(&self.point_set(), &AaBox { lo: pt, hi: pt }).upper;
        }
        // the nearest point lies on a facet whose plane separates p
        self.facets
            .iter()
            .filter(|f| self.violation(f, p) > 0.0)
            .map(|f| self.facet_distance(f, p))
            .fold(0.0, |m: f64, d| if m == 0.0 { d } else { m.min(d) })
    }

    /// Whether `p` lies in the hull padded by a closed ball of radius `eps`.
    pub fn contains_padded(&self, p: &[f64], eps: f64) -> bool {
        if self.is_degenerate() {
            return self.distance_to_point(p) <= eps;
        }
        let mut outside = false;
        for f in &self.facets {
            let s = self.violation(f, p);
            if s > eps {
                return false;
            }
            outside |= s > 0.0;
        }
        !outside || self.distance_to_point(p) <= eps
    }

    fn point_set(&self) -> PointSet {
        PointSet(self.vertices.iter().map(|v| embed(v)).collect())
    }

    /// Vertices projected onto `dims` (the hull of the projection is the
    /// projection of the hull).
    pub fn project(&self, dims: &[usize]) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| dims.iter().map(|&k| v[k]).collect()).collect()
    }

    /// Distance between the hull projected onto `dims` and the box
    /// `[lo, hi]` over those dims.
    pub fn distance_to_box(&self, dims: &[usize], lo: &[f64], hi: &[f64]) -> Distance {
        let set = PointSet(self.project(dims).iter().map(|v| embed(v)).collect());
        gjk::distance(&set, &AaBox { lo: embed(lo), hi: embed(hi) })
    }

    /// Every projected vertex is at least `eps` inside every face of the box.
    pub fn inside_box(&self, dims: &[usize], lo: &[f64], hi: &[f64], eps: f64) -> bool {
        self.vertices.iter().all(|v| dims.iter().enumerate().all(|(j, &k)| v[k] - lo[j] >= eps && hi[j] - v[k] >= eps))
    }

    /// Strict separation by more than `eps`; non-convergence counts as
    /// touching.
    pub fn avoids_box(&self, dims: &[usize], lo: &[f64], hi: &[f64], eps: f64) -> bool {
        let d = self.distance_to_box(dims, lo, hi);
        d.converged && d.lower > eps
    }
}

/// Distance between two point sets' hulls via their support maps.
pub fn hull_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Distance {
    let pa = PointSet(a.iter().map(|v| embed(v)).collect());
    let pb = PointSet(b.iter().map(|v| embed(v)).collect());
    gjk::distance(&pa, &pb)
}

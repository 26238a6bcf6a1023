//! Quickhull in three dimensions with conflict lists and a directed-edge
//! adjacency map.

use std::collections::HashMap;

use super::vec3::{cross, dot, norm, sub};

pub(crate) struct Facet3 {
    /// Counter-clockwise seen from outside.
    pub v: [usize; 3],
    pub n: [f64; 3],
    pub d: f64,
}

pub(crate) enum Quickhull {
    Full(Vec<Facet3>),
    /// Affinely dependent input: the points span `affine_dim < 3` dimensions;
    /// `seed` holds indices spanning that subspace.
    Degenerate { affine_dim: usize, seed: Vec<usize>, thickness: f64 },
}

struct Face {
    v: [usize; 3],
    n: [f64; 3],
    d: f64,
    outside: Vec<usize>,
    alive: bool,
}

fn make_face(pts: &[[f64; 3]], v: [usize; 3]) -> Face {
    let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
    let l = norm(n);
    let n = if l > 0.0 { [n[0] / l, n[1] / l, n[2] / l] } else { n };
    Face { v, n, d: dot(n, pts[v[0]]), outside: Vec::new(), alive: true }
}

fn dist(f: &Face, p: [f64; 3]) -> f64 {
    dot(f.n, p) - f.d
}

fn line_distance(a: [f64; 3], b: [f64; 3], p: [f64; 3]) -> f64 {
    let ab = sub(b, a);
    norm(cross(ab, sub(p, a))) / norm(ab)
}

pub(crate) fn quickhull(pts: &[[f64; 3]]) -> Quickhull {
    let max_abs = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * max_abs;

    // initial simplex: widest axis pair, farthest from their line, farthest
    // from that plane
    let (mut i0, mut i1, mut extent) = (0, 0, -1.0);
    for k in 0..3 {
        let lo = (0..pts.len()).min_by(|&a, &b| pts[a][k].total_cmp(&pts[b][k])).unwrap();
        let hi = (0..pts.len()).max_by(|&a, &b| pts[a][k].total_cmp(&pts[b][k])).unwrap();
        let e = pts[hi][k] - pts[lo][k];
        if e > extent {
            (i0, i1, extent) = (lo, hi, e);
        }
    }
    let flat = 1e-9 * extent.max(tol);
    if extent <= tol {
        return Quickhull::Degenerate { affine_dim: 0, seed: vec![i0], thickness: extent.max(0.0) };
    }
    let (i2, dl) = (0..pts.len())
        .map(|i| (i, line_distance(pts[i0], pts[i1], pts[i])))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if dl <= flat {
        return Quickhull::Degenerate { affine_dim: 1, seed: vec![i0, i1], thickness: dl };
    }
    let base = make_face(pts, [i0, i1, i2]);
    let (i3, dp) = (0..pts.len())
        .map(|i| (i, dist(&base, pts[i]).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if dp <= flat {
        return Quickhull::Degenerate { affine_dim: 2, seed: vec![i0, i1, i2], thickness: dp };
    }

    let simplex = [i0, i1, i2, i3];
    let mut faces: Vec<Face> = Vec::new();
    for (a, b, c, o) in [(0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 3, 1), (1, 2, 3, 0)] {
        let mut f = make_face(pts, [simplex[a], simplex[b], simplex[c]]);
        if dist(&f, pts[simplex[o]]) > 0.0 {
            f = make_face(pts, [simplex[a], simplex[c], simplex[b]]);
        }
        faces.push(f);
    }
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            edges.insert((f.v[k], f.v[(k + 1) % 3]), fi);
        }
    }
    for (i, &p) in pts.iter().enumerate() {
        if simplex.contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| dist(f, p) > tol) {
            f.outside.push(i);
        }
    }

    let mut pending: Vec<usize> = (0..faces.len()).filter(|&f| !faces[f].outside.is_empty()).collect();
    while let Some(fi) = pending.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let eye = *faces[fi]
            .outside
            .iter()
            .max_by(|&&a, &&b| dist(&faces[fi], pts[a]).total_cmp(&dist(&faces[fi], pts[b])))
            .unwrap();
        let pe = pts[eye];

        let mut visible = vec![fi];
        let mut is_visible: HashMap<usize, bool> = HashMap::from([(fi, true)]);
        let mut k = 0;
        while k < visible.len() {
            let f = visible[k];
            k += 1;
            let v = faces[f].v;
            for e in 0..3 {
                let nb = edges[&(v[(e + 1) % 3], v[e])];
                if is_visible.contains_key(&nb) {
                    continue;
                }
                let vis = dist(&faces[nb], pe) > tol;
                is_visible.insert(nb, vis);
                if vis {
                    visible.push(nb);
                }
            }
        }

        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                if !is_visible[&edges[&(b, a)]] {
                    horizon.push((a, b));
                }
            }
            orphans.extend(faces[f].outside.drain(..).filter(|&p| p != eye));
            faces[f].alive = false;
        }
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let key = (v[e], v[(e + 1) % 3]);
                if edges.get(&key) == Some(&f) {
                    edges.remove(&key);
                }
            }
        }
        let first_new = faces.len();
        for &(a, b) in &horizon {
            let f = make_face(pts, [a, b, eye]);
            let id = faces.len();
            for e in 0..3 {
                edges.insert((f.v[e], f.v[(e + 1) % 3]), id);
            }
            faces.push(f);
        }
        for p in orphans {
            if let Some(f) = faces[first_new..].iter_mut().find(|f| dist(f, pts[p]) > tol) {
                f.outside.push(p);
            }
        }
        pending.extend((first_new..faces.len()).filter(|&f| !faces[f].outside.is_empty()));
    }

    Quickhull::Full(faces.into_iter().filter(|f| f.alive).map(|f| Facet3 { v: f.v, n: f.n, d: f.d }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cube_corners() -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for i in 0..8 {
            v.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        v
    }

    #[test]
    fn cube_with_interior_points() {
        let mut pts = cube_corners();
        let mut rng = crate::rng::stream(1, &[]);
        for _ in 0..200 {
            pts.push([rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)]);
        }
        let Quickhull::Full(fs) = quickhull(&pts) else { panic!("degenerate") };
        let mut verts: Vec<usize> = fs.iter().flat_map(|f| f.v).collect();
        verts.sort();
        verts.dedup();
        assert_eq!(verts, (0..8).collect::<Vec<_>>());
        // closed 2-manifold: Euler characteristic 2
        assert_eq!(8 + fs.len() - fs.len() * 3 / 2, 2);
        for f in &fs {
            for p in &pts {
                assert!(dot(f.n, *p) - f.d <= 1e-12);
            }
        }
    }

    #[test]
    fn flat_and_thin_inputs() {
        let plane: Vec<[f64; 3]> = (0..20).map(|i| [i as f64 % 5.0, (i / 5) as f64, 1.0]).collect();
        assert!(matches!(quickhull(&plane), Quickhull::Degenerate { affine_dim: 2, .. }));
        let line: Vec<[f64; 3]> = (0..5).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        assert!(matches!(quickhull(&line), Quickhull::Degenerate { affine_dim: 1, .. }));
        assert!(matches!(quickhull(&[[1.0, 2.0, 3.0]; 4]), Quickhull::Degenerate { affine_dim: 0, .. }));
    }
}

//! Seeded, chunk-parallel sampling and propagation. Chunks have a fixed size
//! and their own rng streams, so output is independent of the thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::controller::Controller;
use crate::dynamics::System;
use crate::geometry::Hull;
use crate::rng::stream;
use crate::workspace::Bounds;

pub const CHUNK: usize = 2048;
/// Rejection attempts allowed per requested point before falling back.
pub const ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub points: Vec<Vec<f64>>,
    /// Some points came from the vertex-simplex fallback.
    pub non_uniform: bool,
}

fn chunks(m: usize) -> Vec<(u64, usize)> {
    (0..m.div_ceil(CHUNK)).map(|c| (c as u64, CHUNK.min(m - c * CHUNK))).collect()
}

pub fn sample_box(b: &Bounds, m: usize, key: u64) -> Vec<Vec<f64>> {
    chunks(m)
        .into_par_iter()
        .flat_map_iter(|(c, len)| {
            let mut rng = stream(key, &[c]);
            (0..len).map(|_| b.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

fn ball_offset(d: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    if r == 0.0 {
        return vec![0.0; d];
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v.into_iter().map(|x| x * r).collect();
        }
    }
}

/// Random convex combination of the vertices (flat Dirichlet weights) plus
/// a uniform offset in the padding ball. Lands in the padded hull but is not
/// uniform over it.
fn fallback_point(hull: &Hull, eps: f64, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = hull.vertices().iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut p = ball_offset(hull.dim(), eps, rng);
    for (v, wi) in hull.vertices().iter().zip(&w) {
        p.iter_mut().zip(v).for_each(|(a, b)| *a += wi / total * b);
    }
    p
}

/// Uniform samples from the hull padded by `eps`, by rejection from its
/// inflated bounding box. Returns `None` when a chunk exhausts its attempt
/// budget and `fallback` is off.
pub fn sample_padded(hull: &Hull, eps: f64, m: usize, key: u64, fallback: bool) -> Option<Sampled> {
    let (lo, hi) = hull.bounding_box();
    let lo: Vec<f64> = lo.iter().map(|v| v - eps).collect();
    let hi: Vec<f64> = hi.iter().map(|v| v + eps).collect();
    let parts: Vec<Option<(Vec<Vec<f64>>, bool)>> = chunks(m)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream(key, &[c]);
            let mut out = Vec::with_capacity(len);
            let mut attempts = 0;
            while out.len() < len && attempts < ATTEMPTS_PER_POINT * len {
                attempts += 1;
                let p: Vec<f64> =
                    lo.iter().zip(&hi).map(|(&l, &h)| if h > l { rng.gen_range(l..=h) } else { l }).collect();
                if hull.contains_padded(&p, eps) {
                    out.push(p);
                }
            }
            if out.len() == len {
                return Some((out, false));
            }
            if !fallback {
                return None;
            }
            while out.len() < len {
                out.push(fallback_point(hull, eps, &mut rng));
            }
            Some((out, true))
        })
        .collect();
    let mut points = Vec::with_capacity(m);
    let mut non_uniform = false;
    for part in parts {
        let (pts, nu) = part?;
        points.extend(pts);
        non_uniform |= nu;
    }
    Some(Sampled { points, non_uniform })
}

/// One closed-loop step per point with fresh noise; order preserved.
pub fn propagate(points: &[Vec<f64>], sys: &System, ctrl: &dyn Controller, key: u64) -> Vec<Vec<f64>> {
    points
        .par_chunks(CHUNK)
        .enumerate()
        .flat_map_iter(|(c, chunk)| {
            let mut rng = stream(key, &[c as u64]);
            chunk.iter().map(|x| sys.closed_loop_step(x, ctrl, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

//! Andrew's monotone chain.

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the extreme points in counter-clockwise order, starting from
/// the lexicographically smallest. Points on an edge interior are dropped.
/// Collinear input yields the two endpoints; coincident input one point.
pub fn monotone_chain(pts: &[[f64; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_interior_and_edge_points() {
        let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.2, 0.7]];
        pts.push([0.0, 0.5]);
        let h = monotone_chain(&pts);
        assert_eq!(h, vec![0, 1, 2, 3]);
    }

    #[test]
    fn collinear_gives_endpoints() {
        let pts = [[0.0, 0.0], [2.0, 2.0], [1.0, 1.0], [3.0, 3.0]];
        let mut h = monotone_chain(&pts);
        h.sort();
        assert_eq!(h, vec![0, 3]);
    }

    #[test]
    fn duplicates() {
        let pts = [[1.0, 1.0]; 5];
        assert_eq!(monotone_chain(&pts).len(), 1);
    }
}

//! Inner polygons and the periodic-start triangles of odd bases.
//!
//! For a block of `b` minus-signed steps from `z_{-1}`, the sides are
//! `s_j = -e^{i(theta + 2 pi j / b)}` and the vertices `p_{j+1} = p_j + s_j`.
//! The minus sign at vertex `p_j` needs the origin in the open halfplane
//! `<x - p_j, s_j> > 0`; the intersection of these is the inner polygon.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::point::Point;
use crate::walk::Sign;

/// Open halfplane `{x : <x - point, normal> > 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub point: [f64; 2],
    pub normal: [f64; 2],
}

impl HalfPlane {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        (x[0] - self.point[0]) * self.normal[0] + (x[1] - self.point[1]) * self.normal[1]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.value(x) > 0.0
    }
}

/// Clips a convex polygon (counter-clockwise) to the closure of `h`.
pub fn clip(poly: &[[f64; 2]], h: &HalfPlane) -> Vec<[f64; 2]> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (fa, fb) = (h.value(a), h.value(b));
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    dedup(out)
}

fn dedup(mut poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12;
    poly.dedup_by(|a, b| close(*a, *b));
    while poly.len() > 1 && close(poly[0], poly[poly.len() - 1]) {
        poly.pop();
    }
    poly
}

fn intersect(halfplanes: &[HalfPlane], center: [f64; 2], radius: f64) -> Vec<[f64; 2]> {
    let (cx, cy) = (center[0], center[1]);
    let mut poly = vec![
        [cx - radius, cy - radius],
        [cx + radius, cy - radius],
        [cx + radius, cy + radius],
        [cx - radius, cy + radius],
    ];
    for h in halfplanes {
        poly = clip(&poly, h);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Vertices `p_0 = z_start, ..., p_{b-1}` of the block polygon rotated by `theta`.
pub fn block_polygon(b: u64, theta: f64, z_start: [f64; 2]) -> Vec<[f64; 2]> {
    let mut p = z_start;
    (0..b)
        .map(|j| {
            let here = p;
            let (s, c) = (theta + TAU * j as f64 / b as f64).sin_cos();
            p = [p[0] - c, p[1] - s];
            here
        })
        .collect()
}

/// Halfplanes that must contain the origin for a minus-signed block.
pub fn block_halfplanes(b: u64, theta: f64, z_start: [f64; 2]) -> Vec<HalfPlane> {
    block_polygon(b, theta, z_start)
        .into_iter()
        .enumerate()
        .map(|(j, p)| {
            let (s, c) = (theta + TAU * j as f64 / b as f64).sin_cos();
            HalfPlane {
                point: p,
                normal: [-c, -s],
            }
        })
        .collect()
}

/// Inner polygon of the block polygon traced from `z_start` with rotation
/// `theta`, as `b` counter-clockwise vertices.
pub fn inner_polygon(b: u64, theta: f64, z_start: &Point) -> Result<Vec<Point>> {
    if b < 3 {
        return Err(invalid("b", "inner polygons need b >= 3"));
    }
    if z_start.dim() != 2 {
        return Err(invalid("z_start", "must be a planar point"));
    }
    let z = [z_start.x(), z_start.y()];
    let outer = block_polygon(b, theta, z);
    let c = centroid(&outer);
    let poly = intersect(&block_halfplanes(b, theta, z), c, 20.0);
    Ok(poly.into_iter().map(|v| Point::xy(v[0], v[1])).collect())
}

fn centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let n = poly.len() as f64;
    let (sx, sy) = poly.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Side length of every inner polygon, `tan(pi / b)`.
pub fn inner_side_length(b: u64) -> f64 {
    (PI / b as f64).tan()
}

/// Region of origin positions, relative to `z_{-1} = 0`, that keeps every
/// rotated block minus-signed: the intersection of the unrotated inner
/// polygon and the one rotated by `2 pi / b`.
pub fn origin_region(b: u64) -> Vec<[f64; 2]> {
    let mut hs = block_halfplanes(b, 0.0, [0.0, 0.0]);
    hs.extend(block_halfplanes(b, TAU / b as f64, [0.0, 0.0]));
    intersect(&hs, [0.0, 0.0], 20.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleRegion {
    pub vertices: [Point; 3],
    /// Sign taken at every step by starts inside the region.
    pub sign_family: Sign,
}

impl TriangleRegion {
    fn corners(&self) -> [[f64; 2]; 3] {
        self.vertices.clone().map(|v| [v.x(), v.y()])
    }

    fn oriented(&self) -> [[f64; 2]; 3] {
        let [a, b, c] = self.corners();
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if cross >= 0.0 {
            [a, b, c]
        } else {
            [a, c, b]
        }
    }

    /// Strict membership; the region is open.
    pub fn contains(&self, p: &Point) -> bool {
        let [a, b, c] = self.oriented();
        let x = [p.x(), p.y()];
        [(a, b), (b, c), (c, a)].iter().all(|(u, v)| {
            (v[0] - u[0]) * (x[1] - u[1]) - (v[1] - u[1]) * (x[0] - u[0]) > 0.0
        })
    }

    /// Euclidean distance to the closed triangle, zero inside.
    pub fn distance(&self, p: &Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let [a, b, c] = self.corners();
        let x = [p.x(), p.y()];
        [(a, b), (b, c), (c, a)]
            .iter()
            .map(|(u, v)| segment_distance(x, *u, *v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let c = centroid(&self.corners());
        Point::xy(c[0], c[1])
    }

    pub fn area(&self) -> f64 {
        let [a, b, c] = self.corners();
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
    }

    /// Point with barycentric-style weights `(1 - sqrt(u), sqrt(u)(1 - v), sqrt(u) v)`,
    /// uniform on the triangle for uniform `u, v` in `[0, 1)`.
    pub fn sample(&self, u: f64, v: f64) -> Point {
        let [a, b, c] = self.corners();
        let su = u.sqrt();
        let (wa, wb, wc) = (1.0 - su, su * (1.0 - v), su * v);
        Point::xy(
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
        )
    }
}

fn segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (x[0] - a[0] - t * dx).hypot(x[1] - a[1] - t * dy)
}

/// The two open triangles of periodic starts for odd `b >= 5`.
///
/// `T1` holds the starts whose steps all take the minus sign; `T2 = -T1`
/// those with plus signs.
pub fn triangle_region(b: u64) -> Result<(TriangleRegion, TriangleRegion)> {
    if b < 5 || b % 2 == 0 {
        return Err(invalid(
            "b",
            format!("triangle regions are constructed for odd b >= 5, got {b}"),
        ));
    }
    let r = origin_region(b);
    if r.len() != 3 {
        return Err(invalid("b", format!("expected a triangle, found {} vertices", r.len())));
    }
    let tri = |sign: f64, family: Sign| TriangleRegion {
        vertices: [
            Point::xy(sign * r[0][0], sign * r[0][1]),
            Point::xy(sign * r[1][0], sign * r[1][1]),
            Point::xy(sign * r[2][0], sign * r[2][1]),
        ],
        sign_family: family,
    };
    Ok((tri(-1.0, Sign::Minus), tri(1.0, Sign::Plus)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side_lengths(poly: &[Point]) -> Vec<f64> {
        (0..poly.len())
            .map(|i| poly[i].distance(&poly[(i + 1) % poly.len()]))
            .collect()
    }

    #[test]
    fn inner_polygon_sides() {
        for b in 3..=12u64 {
            let poly = inner_polygon(b, 0.3, &Point::xy(0.2, -0.1)).unwrap();
            assert_eq!(poly.len() as u64, b, "b={b}");
            for s in side_lengths(&poly) {
                assert!((s - inner_side_length(b)).abs() < 1e-9, "b={b}");
            }
        }
        assert!((inner_side_length(5) - 0.726_542_528).abs() < 1e-9);
        let x = PI / 2.0 - 2.0 * PI / 5.0;
        assert!((inner_side_length(5) - (1.0 / x.cos() - x.tan())).abs() < 1e-12);
        assert!((inner_side_length(4) - 1.0).abs() < 1e-12);
        assert!(inner_side_length(3) > 1.0);
    }

    #[test]
    fn rotated_polygon_is_a_translate() {
        let b = 7;
        let p0 = block_polygon(b, 0.0, [0.0, 0.0]);
        let p1 = block_polygon(b, TAU / b as f64, [0.0, 0.0]);
        // p1[j] = p0[j + 1] + (1, 0).
        for j in 0..b as usize {
            let q = p0[(j + 1) % b as usize];
            assert!((p1[j][0] - q[0] - 1.0).abs() < 1e-12 && (p1[j][1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_apex_and_cut() {
        for b in [5u64, 7, 9, 11] {
            let r = origin_region(b);
            assert_eq!(r.len(), 3);
            let cos = (PI / b as f64).cos();
            let apex = r.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            assert!((apex - (0.5 - 1.0 / (2.0 * cos))).abs() < 1e-12, "b={b}");
            // The other two corners lie on the vertical edge x = 0.
            assert_eq!(r.iter().filter(|v| v[0].abs() < 1e-12).count(), 2);
        }
        let apex5 = 0.5 - 1.0 / (2.0 * (PI / 5.0).cos());
        assert!((apex5 + 0.118_034_0).abs() < 1e-7);
    }

    #[test]
    fn adjacent_vertices_of_rotated_inner_polygon() {
        for b in [5u64, 7, 9] {
            let bf = b as f64;
            let poly = inner_polygon(b, TAU / bf, &Point::xy(0.0, 0.0)).unwrap();
            let mut xs: Vec<f64> = poly.iter().map(|p| p.x()).collect();
            xs.sort_by(f64::total_cmp);
            let expect = 0.5 - (TAU / bf).cos() / (2.0 * (PI / bf).cos());
            assert!(expect > 0.0);
            assert!((xs[1] - expect).abs() < 1e-12 && (xs[2] - expect).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn triangles_are_symmetric() {
        let (t1, t2) = triangle_region(5).unwrap();
        assert_eq!(t1.sign_family, Sign::Minus);
        for (a, b) in t1.vertices.iter().zip(&t2.vertices) {
            assert_eq!(a, &-b);
        }
        let c = t1.centroid();
        assert!(c.x() > 0.0 && c.y() > 0.0);
        assert!(t1.contains(&c) && !t2.contains(&c));
        assert!(t2.contains(&-&c));
        assert!(triangle_region(3).is_err() && triangle_region(6).is_err());
    }

    #[test]
    fn distance_and_sampling() {
        let (t1, _) = triangle_region(7).unwrap();
        for i in 0..50 {
            let p = t1.sample(i as f64 / 50.0 + 0.01, (i * 7 % 50) as f64 / 50.0);
            assert_eq!(t1.distance(&p), 0.0);
        }
        let far = Point::xy(5.0, 5.0);
        assert!(t1.distance(&far) > 4.0);
        assert!(t1.area() > 0.0);
    }
}

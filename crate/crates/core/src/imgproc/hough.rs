use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::canny::EdgeMap;
use super::hull::Point;
use crate::raster::Mask;
use crate::rng::Rng;

/// Seed of the fixed point-visiting order; the transform stays a pure function.
const VISIT_ORDER_SEED: u64 = 0x0c0f_fee5_eed5_1234;

/// Perpendicular tolerance, in pixels, of the walk that collects a segment's pixels.
const CORRIDOR: i64 = 1;

/// Largest distance, in pixels, from a longer segment's line at which a shorter
/// one is folded into it. Covers the twin edges of a thin bright line.
const MERGE_DISTANCE: f64 = 4.0;

/// Candidate angles per side of the accumulator bin when refining a line's direction.
const ANGLE_SUBSTEPS: i64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    pub rho_res: f64,
    pub theta_res: f64,
    pub votes_min: u32,
    pub min_len: f64,
    pub max_gap: u32,
}

impl HoughParams {
    /// Defaults for an image of the given size; `min_len` scales with the short side.
    pub fn for_image(width: u32, height: u32) -> Self {
        HoughParams {
            rho_res: 1.0,
            theta_res: PI / 180.0,
            votes_min: 80,
            min_len: 0.1 * width.min(height) as f64,
            max_gap: 10,
        }
    }
}

/// Finite segment with the normal form `rho = x cos(theta) + y sin(theta)` of its line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub p0: Point,
    pub p1: Point,
    /// Normal angle in `[0, pi)`.
    pub theta: f64,
    pub rho: f64,
}

impl LineSegment {
    /// Returns `None` when the endpoints coincide.
    pub fn from_endpoints(p0: Point, p1: Point) -> Option<Self> {
        if p0 == p1 {
            return None;
        }
        let (dx, dy) = ((p1.x - p0.x) as f64, (p1.y - p0.y) as f64);
        let mut theta = (dx).atan2(-dy);
        if theta < 0.0 {
            theta += PI;
        }
        if theta >= PI {
            theta -= PI;
        }
        let rho = p0.x as f64 * theta.cos() + p0.y as f64 * theta.sin();
        Some(LineSegment { p0, p1, theta, rho })
    }

    pub fn length(&self) -> f64 {
        ((self.p1.x - self.p0.x) as f64).hypot((self.p1.y - self.p0.y) as f64)
    }

    /// Distance from `(x, y)` to the infinite line through the segment.
    pub fn line_distance(&self, x: f64, y: f64) -> f64 {
        (x * self.theta.cos() + y * self.theta.sin() - self.rho).abs()
    }
}

struct Accumulator {
    cos: Vec<f64>,
    sin: Vec<f64>,
    num_rho: usize,
    offset: i64,
    inv_rho_res: f64,
    votes: Vec<i32>,
}

impl Accumulator {
    fn new(width: u32, height: u32, rho_res: f64, theta_res: f64) -> Self {
        let num_theta = ((PI / theta_res).round() as usize).max(1);
        let num_rho = (((width + height) as f64 * 2.0 + 1.0) / rho_res).round() as usize;
        let (sin, cos) = (0..num_theta)
            .map(|n| (n as f64 * theta_res).sin_cos())
            .unzip();
        Accumulator {
            cos,
            sin,
            num_rho,
            offset: (num_rho as i64 - 1) / 2,
            inv_rho_res: 1.0 / rho_res,
            votes: vec![0; num_theta * num_rho],
        }
    }

    #[inline]
    fn bin(&self, n: usize, x: u32, y: u32) -> usize {
        let r = ((x as f64 * self.cos[n] + y as f64 * self.sin[n]) * self.inv_rho_res).round()
            as i64
            + self.offset;
        n * self.num_rho + r as usize
    }

    /// Adds the point's votes and returns the strongest theta index and its count.
    fn vote(&mut self, x: u32, y: u32) -> (usize, i32) {
        let mut best = (0, i32::MIN);
        for n in 0..self.cos.len() {
            let b = self.bin(n, x, y);
            self.votes[b] += 1;
            if self.votes[b] > best.1 {
                best = (n, self.votes[b]);
            }
        }
        best
    }

    fn unvote(&mut self, x: u32, y: u32) {
        for n in 0..self.cos.len() {
            let b = self.bin(n, x, y);
            self.votes[b] -= 1;
        }
    }
}

struct Walk {
    ends: [(f64, f64); 2],
    hits: Vec<(u32, u32)>,
    /// Hits that lie on the ideal digital line rather than beside it.
    centred: usize,
}

/// Steps from `origin` along `dir` in both senses, one pixel along the dominant
/// axis per step. Each step takes at most one set pixel, the one nearest the
/// ideal line within the corridor, and the walk stops after more than
/// `max_gap` consecutive empty steps.
fn walk(mask: &Mask, origin: (f64, f64), dir: (f64, f64), max_gap: u32) -> Walk {
    let x_major = dir.0.abs() >= dir.1.abs();
    let major = if x_major { dir.0 } else { dir.1 };
    let step = (dir.0 / major.abs(), dir.1 / major.abs());
    let mut ends = [origin; 2];
    let mut hits = Vec::new();
    let mut centred = 0;

    for (k, sense) in [1.0f64, -1.0].into_iter().enumerate() {
        let mut gap = 0;
        let mut i = if k == 0 { 0.0 } else { 1.0 };
        loop {
            let (fx, fy) = (origin.0 + sense * i * step.0, origin.1 + sense * i * step.1);
            let (cx, cy) = (fx.round() as i64, fy.round() as i64);
            if cx < 0 || cy < 0 || cx >= mask.width() as i64 || cy >= mask.height() as i64 {
                break;
            }
            // Neighbour on the side the ideal line leans towards is tried first.
            let lean = if x_major {
                fy - cy as f64
            } else {
                fx - cx as f64
            };
            let side = if lean >= 0.0 { 1 } else { -1 };
            let hit = [0, side, -side, 2 * side, -2 * side]
                .into_iter()
                .filter(|d: &i64| d.abs() <= CORRIDOR)
                .map(|d| {
                    if x_major {
                        (cx, cy + d, d)
                    } else {
                        (cx + d, cy, d)
                    }
                })
                .find(|&(px, py, _)| mask.get_signed(px, py));
            match hit {
                Some((px, py, d)) => {
                    hits.push((px as u32, py as u32));
                    centred += usize::from(d == 0);
                    gap = 0;
                    ends[k] = (fx, fy);
                }
                None => {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
            }
            i += 1.0;
        }
    }
    Walk {
        ends,
        hits,
        centred,
    }
}

/// Folds segments that continue or shadow a longer one into it: same direction
/// within two angle bins, endpoints within [`MERGE_DISTANCE`] of the longer line,
/// and extents overlapping or separated by at most `max_gap`. The longer
/// segment's line is kept and only its extent grows.
fn merge_collinear(mut segments: Vec<LineSegment>, params: &HoughParams) -> Vec<LineSegment> {
    segments.sort_by(|a, b| b.length().total_cmp(&a.length()));
    let mut merged: Vec<LineSegment> = Vec::with_capacity(segments.len());
    'next: for s in segments {
        for m in merged.iter_mut() {
            let dtheta = (s.theta - m.theta).rem_euclid(PI);
            if dtheta.min(PI - dtheta) > 2.0 * params.theta_res {
                continue;
            }
            let ends = [s.p0, s.p1];
            if ends
                .iter()
                .any(|p| m.line_distance(p.x as f64, p.y as f64) > MERGE_DISTANCE)
            {
                continue;
            }
            let dir = (-m.theta.sin(), m.theta.cos());
            let origin = (m.p0.x as f64, m.p0.y as f64);
            let along =
                |p: Point| (p.x as f64 - origin.0) * dir.0 + (p.y as f64 - origin.1) * dir.1;
            let (m_lo, m_hi) = min_max(along(m.p0), along(m.p1));
            let (s_lo, s_hi) = min_max(along(s.p0), along(s.p1));
            if s_lo > m_hi + params.max_gap as f64 || s_hi < m_lo - params.max_gap as f64 {
                continue;
            }
            let (lo, hi) = (m_lo.min(s_lo), m_hi.max(s_hi));
            if lo < m_lo || hi > m_hi {
                let at = |t: f64| {
                    Point::new(
                        (origin.0 + t * dir.0).round() as i64,
                        (origin.1 + t * dir.1).round() as i64,
                    )
                };
                if let Some(grown) = LineSegment::from_endpoints(at(lo), at(hi)) {
                    *m = grown;
                }
            }
            continue 'next;
        }
        merged.push(s);
    }
    merged
}

fn min_max(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Progressive probabilistic Hough transform.
///
/// Edge pixels vote in random (but fixed) order. When a bin reaches
/// `votes_min`, the bin angle is refined to a tenth of a bin, the line through
/// the voting pixel is walked to collect its pixels, and the walked pixels are
/// removed from the edge set. Segments of at least `min_len` are kept and
/// their votes withdrawn from the accumulator; collinear pieces of one line
/// are merged at the end.
pub fn hough_segments(edges: &EdgeMap, params: &HoughParams) -> Vec<LineSegment> {
    if edges.is_empty() || params.rho_res <= 0.0 || params.theta_res <= 0.0 {
        return Vec::new();
    }
    let votes_min = params.votes_min.max(1) as i32;
    let (w, h) = (edges.width(), edges.height());
    let mut acc = Accumulator::new(w, h, params.rho_res, params.theta_res);
    let mut live = edges.as_mask().clone();
    let mut voted = Mask::new(w, h);

    let mut order = edges.points();
    Rng::new(VISIT_ORDER_SEED).shuffle(&mut order);

    let mut segments = Vec::new();
    for (x, y) in order {
        if !live.get(x, y) {
            continue;
        }
        voted.set(x, y, true);
        let (n, count) = acc.vote(x, y);
        if count < votes_min {
            continue;
        }

        // The accumulator only knows the angle to within a bin; refine it to a
        // fraction of a bin by scoring exact-line hits through the seed.
        let origin = (x as f64, y as f64);
        let bin_theta = n as f64 * params.theta_res;
        let mut best = (usize::MIN, bin_theta);
        for k in -ANGLE_SUBSTEPS..=ANGLE_SUBSTEPS {
            let theta = bin_theta + k as f64 * params.theta_res / ANGLE_SUBSTEPS as f64;
            let hits = walk(&live, origin, (-theta.sin(), theta.cos()), params.max_gap).centred;
            if hits > best.0 {
                best = (hits, theta);
            }
        }
        let run = walk(&live, origin, (-best.1.sin(), best.1.cos()), params.max_gap);

        let p0 = Point::new(run.ends[0].0.round() as i64, run.ends[0].1.round() as i64);
        let p1 = Point::new(run.ends[1].0.round() as i64, run.ends[1].1.round() as i64);
        let segment = LineSegment::from_endpoints(p1, p0).filter(|s| s.length() >= params.min_len);

        for &(hx, hy) in &run.hits {
            live.set(hx, hy, false);
            if segment.is_some() && voted.get(hx, hy) {
                acc.unvote(hx, hy);
                voted.set(hx, hy, false);
            }
        }
        // The seed is consumed even if the corridor walk missed it.
        live.set(x, y, false);

        if let Some(s) = segment {
            segments.push(s);
        }
    }
    merge_collinear(segments, params)
        .into_iter()
        .filter(|s| inlier_count(edges, s, params.rho_res) >= params.votes_min as usize)
        .collect()
}

fn inlier_count(edges: &EdgeMap, s: &LineSegment, tol: f64) -> usize {
    let (c, si) = (s.theta.cos(), s.theta.sin());
    let mut n = 0;
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) && (x as f64 * c + y as f64 * si - s.rho).abs() <= tol {
                n += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_map(w: u32, h: u32, f: impl Fn(u32, u32) -> bool) -> EdgeMap {
        EdgeMap::from_mask(Mask::from_fn(w, h, f))
    }

    fn params(votes_min: u32, min_len: f64) -> HoughParams {
        HoughParams {
            rho_res: 1.0,
            theta_res: PI / 180.0,
            votes_min,
            min_len,
            max_gap: 10,
        }
    }

    /// Full standard Hough accumulator: every edge pixel votes in every theta.
    /// Returns the theta of the strongest bin.
    fn brute_force_peak(edges: &EdgeMap, theta_res: f64) -> (f64, u32) {
        let num_theta = (PI / theta_res).round() as usize;
        let diag = (edges.width() + edges.height()) as i64;
        let mut acc = vec![0u32; num_theta * (2 * diag as usize + 1)];
        for (x, y) in edges.points() {
            for n in 0..num_theta {
                let t = n as f64 * theta_res;
                let r = (x as f64 * t.cos() + y as f64 * t.sin()).round() as i64 + diag;
                acc[n * (2 * diag as usize + 1) + r as usize] += 1;
            }
        }
        let (i, &v) = acc.iter().enumerate().max_by_key(|(_, v)| **v).unwrap();
        ((i / (2 * diag as usize + 1)) as f64 * theta_res, v)
    }

    fn theta_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn empty_input() {
        let e = edge_map(20, 20, |_, _| false);
        assert!(hough_segments(&e, &params(5, 5.0)).is_empty());
    }

    #[test]
    fn normal_form_from_endpoints() {
        let s = LineSegment::from_endpoints(Point::new(0, 5), Point::new(10, 5)).unwrap();
        assert!((s.theta - PI / 2.0).abs() < 1e-12);
        assert!((s.rho - 5.0).abs() < 1e-12);
        let v = LineSegment::from_endpoints(Point::new(3, 9), Point::new(3, 1)).unwrap();
        assert!(v.theta.abs() < 1e-12);
        assert!((v.rho - 3.0).abs() < 1e-12);
        assert!(LineSegment::from_endpoints(Point::new(1, 1), Point::new(1, 1)).is_none());
    }

    #[test]
    fn single_horizontal_run() {
        let e = edge_map(300, 100, |x, y| y == 40 && (50..250).contains(&x));
        let theta_res = PI / 180.0;
        let segs = hough_segments(&e, &params(50, 100.0));
        assert_eq!(segs.len(), 1, "{segs:?}");
        let s = segs[0];
        let (peak, votes) = brute_force_peak(&e, theta_res);
        assert!(votes >= 200);
        assert!(theta_diff(s.theta, peak) <= theta_res);
        assert!(theta_diff(s.theta, PI / 2.0) <= theta_res);
        let (a, b) = if s.p0.x < s.p1.x {
            (s.p0, s.p1)
        } else {
            (s.p1, s.p0)
        };
        assert!((a.x - 50).abs() <= 2 && (a.y - 40).abs() <= 2);
        assert!((b.x - 249).abs() <= 2 && (b.y - 40).abs() <= 2);
    }

    #[test]
    fn two_crossing_runs() {
        let e = edge_map(200, 200, |x, y| {
            (y == 100 && (25..175).contains(&x)) || (x == 90 && (30..180).contains(&y))
        });
        let theta_res = PI / 180.0;
        let segs = hough_segments(&e, &params(50, 100.0));
        assert_eq!(segs.len(), 2, "{segs:?}");
        let d = theta_diff(segs[0].theta, segs[1].theta);
        assert!((d - PI / 2.0).abs() <= 2.0 * theta_res);
        let (peak, _) = brute_force_peak(&e, theta_res);
        assert!(segs.iter().any(|s| theta_diff(s.theta, peak) <= theta_res));
    }

    #[test]
    fn segments_have_enough_inliers() {
        let e = edge_map(160, 120, |x, y| {
            (x + 2 * y) % 97 == 0 || (y == 60 && x > 20) || (x * 3 + y) % 211 == 3
        });
        let p = params(40, 30.0);
        for s in hough_segments(&e, &p) {
            let inliers = e
                .points()
                .iter()
                .filter(|&&(x, y)| s.line_distance(x as f64, y as f64) <= p.rho_res)
                .count();
            assert!(inliers >= p.votes_min as usize);
            assert_ne!(s.p0, s.p1);
        }
    }

    #[test]
    fn deterministic() {
        let e = edge_map(120, 90, |x, y| (x * 7 + y * 13) % 17 == 0 || y == 45);
        let p = params(20, 20.0);
        assert_eq!(hough_segments(&e, &p), hough_segments(&e, &p));
    }
}

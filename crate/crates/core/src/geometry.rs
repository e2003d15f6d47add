//! Point-swarm antenna parameterization.
//!
//! A design is the vector `[c, rho_f, phi_f, rho_1..rho_L, phi_1..phi_L]`.
//! Outline vertex `l` sits at polar coordinates `(c * rho_l, Phi_l)` where
//! `Phi_l` is the cumulative sum of the angular increments normalized so that
//! `Phi_L = 2*pi`. Positive radii at strictly increasing angles give a
//! star-shaped, hence simple, polygon.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outer radius of the coaxial feed (mm).
pub const FEED_OUTER_RADIUS_MM: f64 = 1.415;
/// Inner radius of the coaxial feed (mm).
pub const FEED_INNER_RADIUS_MM: f64 = 0.615;
/// Patch-to-substrate-edge offset (mm).
pub const EDGE_OFFSET_MM: f64 = 5.0;
/// Minimum number of outline vertices.
pub const MIN_OUTLINE_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Substrate {
    pub height_mm: f64,
    pub eps_r: f64,
    pub tan_delta: f64,
}

impl Default for Substrate {
    fn default() -> Self {
        Self {
            height_mm: 1.524,
            eps_r: 2.55,
            tan_delta: 0.0013,
        }
    }
}

/// Parameters of the generic model that are not optimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub edge_offset_mm: f64,
    pub feed_r1_mm: f64,
    pub feed_r2_mm: f64,
    pub substrate: Substrate,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self {
            edge_offset_mm: EDGE_OFFSET_MM,
            feed_r1_mm: FEED_INNER_RADIUS_MM,
            feed_r2_mm: FEED_OUTER_RADIUS_MM,
            substrate: Substrate::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVector {
    /// Scale factor (mm).
    pub c: f64,
    /// Feed radial fraction.
    pub rho_f: f64,
    /// Feed angle (rad).
    pub phi_f: f64,
    /// Outline radial fractions.
    pub rho: Vec<f64>,
    /// Outline angular increments.
    pub phi: Vec<f64>,
}

impl DesignVector {
    pub fn new(c: f64, rho_f: f64, phi_f: f64, rho: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let x = Self {
            c,
            rho_f,
            phi_f,
            rho,
            phi,
        };
        x.validate()?;
        Ok(x)
    }

    /// Unpacks a flat `2L + 3` vector without checking value invariants.
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 * MIN_OUTLINE_POINTS + 3 || !(n - 3).is_multiple_of(2) {
            return Err(Error::InvalidDesign(format!(
                "length {n} is not of the form 2L + 3 with L >= {MIN_OUTLINE_POINTS}"
            )));
        }
        let l = (n - 3) / 2;
        Ok(Self {
            c: values[0],
            rho_f: values[1],
            phi_f: values[2],
            rho: values[3..3 + l].to_vec(),
            phi: values[3 + l..].to_vec(),
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend([self.c, self.rho_f, self.phi_f]);
        v.extend_from_slice(&self.rho);
        v.extend_from_slice(&self.phi);
        v
    }

    /// Number of outline points `L`.
    pub fn outline_len(&self) -> usize {
        self.rho.len()
    }

    /// Dimensionality `D = 2L + 3`.
    pub fn dim(&self) -> usize {
        2 * self.rho.len() + 3
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.rho.len();
        if l != self.phi.len() {
            return Err(Error::InvalidDesign(format!(
                "{} radial but {} angular coordinates",
                l,
                self.phi.len()
            )));
        }
        if l < MIN_OUTLINE_POINTS {
            return Err(Error::InvalidDesign(format!(
                "outline needs at least {MIN_OUTLINE_POINTS} points, got {l}"
            )));
        }
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("non-finite component".into()));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidDesign(format!("scale c = {} must be > 0", self.c)));
        }
        if self.rho_f < 0.0 {
            return Err(Error::InvalidDesign(format!(
                "feed radial fraction {} must be >= 0",
                self.rho_f
            )));
        }
        if let Some((index, &value)) = self.rho.iter().enumerate().find(|(_, &r)| r <= 0.0) {
            return Err(Error::DegenerateOutline { index, value });
        }
        if let Some((i, p)) = self.phi.iter().enumerate().find(|(_, &p)| p <= 0.0) {
            return Err(Error::InvalidDesign(format!(
                "angular increment {i} is {p} (must be > 0)"
            )));
        }
        Ok(())
    }

    /// Vertex angles `Phi_l = 2*pi * cumsum(phi)_l / sum(phi)`; the last is exactly `2*pi`.
    pub fn normalized_angles(&self) -> Vec<f64> {
        let total: f64 = self.phi.iter().sum();
        let mut acc = 0.0;
        let mut angles: Vec<f64> = self
            .phi
            .iter()
            .map(|p| {
                acc += p;
                TAU * acc / total
            })
            .collect();
        if let Some(last) = angles.last_mut() {
            *last = TAU;
        }
        angles
    }

    /// Space-separated text form `[c rho_f phi_f rho.. phi..]`.
    pub fn to_text(&self) -> String {
        self.to_vec()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for DesignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for DesignVector {
    type Err = Error;

    /// Accepts whitespace- or comma-separated decimals, optionally wrapped in brackets.
    fn from_str(s: &str) -> Result<Self> {
        let cleaned: String = s
            .chars()
            .map(|ch| match ch {
                '[' | ']' | ',' | ';' => ' ',
                other => other,
            })
            .collect();
        let values = cleaned
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad design component {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DesignVector::from_slice(&values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Self::new(r * angle.cos(), r * angle.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaLayout {
    pub vertices: Vec<Point>,
    pub feed: Point,
    /// Side of the square enclosing the patch, `A1 = 2 c max(rho)` (mm).
    pub patch_side_mm: f64,
    /// Substrate side, `A = A1 + 2 o` (mm).
    pub substrate_side_mm: f64,
    pub fixed: FixedParams,
}

/// Outline vertices in millimeters. Only the structural invariants are checked.
pub fn outline_vertices(x: &DesignVector) -> Result<Vec<Point>> {
    x.validate()?;
    Ok(x.rho
        .iter()
        .zip(x.normalized_angles())
        .map(|(&r, angle)| Point::from_polar(x.c * r, angle))
        .collect())
}

pub fn feed_point(x: &DesignVector) -> Point {
    Point::from_polar(x.c * x.rho_f, x.phi_f.rem_euclid(TAU))
}

pub fn build_layout(x: &DesignVector, fixed: &FixedParams) -> Result<AntennaLayout> {
    let vertices = outline_vertices(x)?;
    // Increasing angles only guarantee a simple outline while every angular
    // gap stays below half a turn.
    if !is_simple(&vertices) {
        return Err(Error::SelfIntersectingOutline);
    }
    let feed = feed_point(x);
    let clearance = signed_distance(&vertices, feed);
    if clearance < fixed.feed_r2_mm {
        return Err(Error::FeedOutsideOutline {
            clearance,
            required: fixed.feed_r2_mm,
        });
    }
    let max_rho = x.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let patch_side_mm = 2.0 * x.c * max_rho;
    Ok(AntennaLayout {
        vertices,
        feed,
        patch_side_mm,
        substrate_side_mm: patch_side_mm + 2.0 * fixed.edge_offset_mm,
        fixed: *fixed,
    })
}

pub fn polygon_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    0.5 * twice.abs()
}

/// Axis-aligned bounding box as `(min, max)`.
pub fn bounding_box(vertices: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    (lo, hi)
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, including collinear overlap.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// All-pairs edge test: no two non-adjacent edges touch, and adjacent edges
/// do not fold back onto each other.
pub fn is_simple(vertices: &[Point]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        let (a1, a2) = edge(i);
        if a1 == a2 {
            return false;
        }
        // Adjacent edge i, i+1 share a2; they overlap only if collinear and pointing back.
        let (_, b2) = edge((i + 1) % n);
        if orientation(a1, a2, b2) == 0.0 {
            let dot = (a1.x - a2.x) * (b2.x - a2.x) + (a1.y - a2.y) * (b2.y - a2.y);
            if dot > 0.0 {
                return false;
            }
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (b1, b2) = edge(j);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}

/// Even-odd crossing test.
pub fn contains_point(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the polygon boundary, positive inside and negative outside.
pub fn signed_distance(vertices: &[Point], p: Point) -> f64 {
    let n = vertices.len();
    let dist = (0..n)
        .map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if dist == 0.0 {
        0.0
    } else if contains_point(vertices, p) {
        dist
    } else {
        -dist
    }
}

pub fn feed_clearance(layout: &AntennaLayout) -> f64 {
    signed_distance(&layout.vertices, layout.feed)
}

/// Uniform resize: only `c` changes, every physical coordinate scales by `c_new / c`.
pub fn scale_design(x: &DesignVector, c_new: f64) -> DesignVector {
    DesignVector {
        c: c_new,
        ..x.clone()
    }
}

/// Sampling ranges for fresh random candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRanges {
    pub c0: f64,
    pub rho: (f64, f64),
    pub phi: (f64, f64),
    pub rho_f: (f64, f64),
    pub phi_f: (f64, f64),
    pub max_feed_attempts: usize,
}

impl Default for GenerationRanges {
    fn default() -> Self {
        Self {
            c0: 30.0,
            rho: (0.1, 0.9),
            phi: (0.01, 0.8),
            rho_f: (0.0, 0.9),
            phi_f: (0.0, TAU),
            max_feed_attempts: 10_000,
        }
    }
}

fn sample<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Draws a simple outline, then re-draws the feed until it clears the outline by `r2`.
pub fn random_design<R: Rng + ?Sized>(
    rng: &mut R,
    outline_len: usize,
    ranges: &GenerationRanges,
    fixed: &FixedParams,
) -> Result<DesignVector> {
    if outline_len < MIN_OUTLINE_POINTS {
        return Err(Error::InvalidDesign(format!(
            "outline needs at least {MIN_OUTLINE_POINTS} points, got {outline_len}"
        )));
    }
    let (mut x, vertices) = loop {
        let rho: Vec<f64> = (0..outline_len).map(|_| sample(rng, ranges.rho)).collect();
        let phi: Vec<f64> = (0..outline_len).map(|_| sample(rng, ranges.phi)).collect();
        let x = DesignVector::new(ranges.c0, 0.0, 0.0, rho, phi)?;
        let vertices = outline_vertices(&x)?;
        if is_simple(&vertices) {
            break (x, vertices);
        }
    };
    for _ in 0..ranges.max_feed_attempts {
        x.rho_f = sample(rng, ranges.rho_f);
        x.phi_f = sample(rng, ranges.phi_f);
        if signed_distance(&vertices, feed_point(&x)) >= fixed.feed_r2_mm {
            return Ok(x);
        }
    }
    Err(Error::FeedSamplingExhausted(ranges.max_feed_attempts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: DesignVector,
    pub upper: DesignVector,
}

impl Bounds {
    pub fn lower_vec(&self) -> Vec<f64> {
        self.lower.to_vec()
    }

    pub fn upper_vec(&self) -> Vec<f64> {
        self.upper.to_vec()
    }

    pub fn contains(&self, x: &DesignVector) -> bool {
        let (lo, hi) = (self.lower_vec(), self.upper_vec());
        x.dim() == lo.len()
            && x
                .to_vec()
                .iter()
                .zip(lo.iter().zip(&hi))
                .all(|(v, (l, h))| v >= l && v <= h)
    }

    /// Clips `x` into the box and reports how many components moved.
    pub fn clip(&self, x: &DesignVector) -> Result<(DesignVector, usize)> {
        let (lo, hi) = (self.lower_vec(), self.upper_vec());
        let mut v = x.to_vec();
        if v.len() != lo.len() {
            return Err(Error::InvalidDesign(format!(
                "design has {} components, bounds have {}",
                v.len(),
                lo.len()
            )));
        }
        let mut clipped = 0;
        for (xi, (l, h)) in v.iter_mut().zip(lo.iter().zip(&hi)) {
            let y = xi.clamp(*l, *h);
            if y != *xi {
                clipped += 1;
                *xi = y;
            }
        }
        Ok((DesignVector::from_slice(&v)?, clipped))
    }
}

/// Box constraints anchored on a starting design.
pub fn make_bounds(x0: &DesignVector) -> Bounds {
    let l = x0.outline_len();
    let max_rho = x0.rho.iter().copied().fold(0.0, f64::max);
    Bounds {
        lower: DesignVector {
            c: x0.c - 2.0,
            rho_f: 0.0,
            phi_f: x0.phi_f - FRAC_PI_2,
            rho: vec![0.1; l],
            phi: vec![0.01; l],
        },
        upper: DesignVector {
            c: x0.c + 3.0,
            rho_f: max_rho,
            phi_f: x0.phi_f + 3.0 * PI / 2.0,
            rho: vec![0.9; l],
            phi: vec![0.8; l],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(c: f64) -> DesignVector {
        DesignVector::new(c, 0.0, 0.0, vec![0.5; 4], vec![1.0; 4]).unwrap()
    }

    #[test]
    fn uniform_increments_give_square() {
        let x = square(30.0);
        let angles = x.normalized_angles();
        let expected = [FRAC_PI_2, PI, 3.0 * FRAC_PI_2, TAU];
        for (a, e) in angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        let layout = build_layout(&x, &FixedParams::default()).unwrap();
        for v in &layout.vertices {
            assert!(((v.x * v.x + v.y * v.y).sqrt() - 15.0).abs() < 1e-12);
        }
        assert!(is_simple(&layout.vertices));
        assert!((layout.patch_side_mm - 30.0).abs() < 1e-12);
        assert!((layout.substrate_side_mm - 40.0).abs() < 1e-12);
    }

    #[test]
    fn zero_radius_is_degenerate() {
        let x = DesignVector {
            rho: vec![0.5, 0.0, 0.5, 0.5],
            ..square(30.0)
        };
        assert!(matches!(
            build_layout(&x, &FixedParams::default()),
            Err(Error::DegenerateOutline { index: 1, .. })
        ));
    }

    #[test]
    fn feed_outside_is_rejected() {
        let x = DesignVector {
            rho_f: 0.49,
            ..square(30.0)
        };
        assert!(matches!(
            build_layout(&x, &FixedParams::default()),
            Err(Error::FeedOutsideOutline { .. })
        ));
    }

    #[test]
    fn simple_and_crossed_quads() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(is_simple(&sq));
        let bowtie = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(!is_simple(&bowtie));
        let folded = [
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
        ];
        assert!(!is_simple(&folded));
    }

    #[test]
    fn clearance_of_square_patch() {
        // Vertices on a radius-15 circle at 90 degree spacing: the edges are
        // at distance 15 cos(pi/4) from the origin.
        let layout = build_layout(&square(30.0), &FixedParams::default()).unwrap();
        let expected = 15.0 * (PI / 4.0).cos();
        assert!((feed_clearance(&layout) - expected).abs() < 1e-12);

        let on_vertex = AntennaLayout {
            feed: layout.vertices[0],
            ..layout.clone()
        };
        assert_eq!(feed_clearance(&on_vertex), 0.0);

        let outside = AntennaLayout {
            feed: Point::new(40.0, 0.0),
            ..layout
        };
        assert!(feed_clearance(&outside) < 0.0);
    }

    #[test]
    fn scale_design_scales_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_design(&mut rng, 8, &GenerationRanges::default(), &FixedParams::default())
            .unwrap();
        assert_eq!(scale_design(&x, x.c), x);
        let y = scale_design(&x, 45.0);
        let (vx, vy) = (outline_vertices(&x).unwrap(), outline_vertices(&y).unwrap());
        for (a, b) in vx.iter().zip(&vy) {
            assert!((b.x - 1.5 * a.x).abs() <= 1e-12 * b.x.abs().max(1.0));
            assert!((b.y - 1.5 * a.y).abs() <= 1e-12 * b.y.abs().max(1.0));
        }
    }

    #[test]
    fn random_design_is_deterministic_and_feasible() {
        let ranges = GenerationRanges::default();
        let fixed = FixedParams::default();
        let a = random_design(&mut ChaCha8Rng::seed_from_u64(11), 25, &ranges, &fixed).unwrap();
        let b = random_design(&mut ChaCha8Rng::seed_from_u64(11), 25, &ranges, &fixed).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 53);
        assert_eq!(a.c, 30.0);
        let layout = build_layout(&a, &fixed).unwrap();
        assert!(feed_clearance(&layout) >= fixed.feed_r2_mm);
    }

    #[test]
    fn feed_sampling_gives_up() {
        let ranges = GenerationRanges {
            rho_f: (5.0, 6.0),
            max_feed_attempts: 50,
            ..GenerationRanges::default()
        };
        let err = random_design(
            &mut ChaCha8Rng::seed_from_u64(1),
            6,
            &ranges,
            &FixedParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::FeedSamplingExhausted(50)));
    }

    #[test]
    fn bounds_follow_anchor() {
        let mut x0 = square(42.0);
        x0.phi_f = 5.72;
        x0.rho = vec![0.3, 0.64, 0.5, 0.05];
        x0.phi = vec![0.5; 4];
        let b = make_bounds(&x0);
        assert_eq!((b.lower.c, b.upper.c), (40.0, 45.0));
        assert!((b.lower.phi_f - (5.72 - FRAC_PI_2)).abs() < 1e-15);
        assert!((b.upper.phi_f - (5.72 + 1.5 * PI)).abs() < 1e-15);
        assert_eq!((b.lower.rho_f, b.upper.rho_f), (0.0, 0.64));
        assert!(!b.contains(&x0));
        let (clipped, count) = b.clip(&x0).unwrap();
        assert_eq!(count, 1);
        assert_eq!(clipped.rho[3], 0.1);
        assert!(b.contains(&clipped));
    }

    #[test]
    fn text_form_round_trips() {
        let x = square(30.0);
        let parsed: DesignVector = x.to_text().parse().unwrap();
        assert_eq!(parsed, x);
        assert!("1 2 3 4".parse::<DesignVector>().is_err());
        assert!("[30, 0.1, 0.2, 0.5, 0.5, 0.5, 1, 1, 1]"
            .parse::<DesignVector>()
            .is_ok());
    }
}

//! Iterated function systems and the chaos game.
//!
//! Map selection draws `u` uniformly from `[0, 1)` as
//! `(next_u64 >> 11) * 2^-53` from a `Xoshiro256PlusPlus` stream seeded via
//! SplitMix64, and picks the first map whose cumulative probability exceeds
//! `u`.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub type Point = (f64, f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap2D {
    /// Row-major 2x2 matrix.
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub probability: f64,
}

impl AffineMap2D {
    pub fn apply(&self, (x, y): Point) -> Point {
        let m = &self.linear;
        (
            m[0][0] * x + m[0][1] * y + self.translation[0],
            m[1][0] * x + m[1][1] * y + self.translation[1],
        )
    }
}

pub fn apply_map(m: &AffineMap2D, p: Point) -> Point {
    m.apply(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IfsSystem {
    maps: Vec<AffineMap2D>,
    cumulative: Vec<f64>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap2D>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidArgument(
                "an IFS needs at least one map".into(),
            ));
        }
        if let Some(m) = maps.iter().find(|m| !(0.0..=1.0).contains(&m.probability)) {
            return Err(Error::InvalidArgument(format!(
                "map probability {} outside [0, 1]",
                m.probability
            )));
        }
        let mut cumulative = Vec::with_capacity(maps.len());
        let mut acc = 0.0;
        for m in &maps {
            acc += m.probability;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {acc}, not 1"
            )));
        }
        Ok(Self { maps, cumulative })
    }

    pub fn maps(&self) -> &[AffineMap2D] {
        &self.maps
    }

    /// Running sums of the map probabilities, in map order.
    pub fn thresholds(&self) -> &[f64] {
        &self.cumulative
    }

    /// Map index for a uniform draw `u` in `[0, 1)`.
    pub fn select(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&t| u < t)
            .unwrap_or(self.maps.len() - 1)
    }
}

/// The four fern maps.
pub fn barnsley_fern_system() -> IfsSystem {
    let map = |linear, translation, probability| AffineMap2D {
        linear,
        translation,
        probability,
    };
    IfsSystem::new(vec![
        map([[0.0, 0.0], [0.0, 0.16]], [0.0, 0.0], 0.01),
        map([[0.85, 0.04], [-0.04, 0.85]], [0.0, 1.6], 0.85),
        map([[0.2, -0.26], [0.23, 0.22]], [0.0, 1.6], 0.07),
        map([[-0.15, 0.28], [0.26, 0.24]], [0.0, 0.44], 0.07),
    ])
    .expect("fern probabilities sum to one")
}

pub const DEFAULT_BURN_IN: usize = 20;
pub const DEFAULT_ITERATIONS: usize = 100_000;

/// Envelope containing every fern point after burn-in, from a 10^7-step pilot
/// run (seed 0) rounded outward to 1e-3.
pub const FERN_ENVELOPE: BoundingBox = BoundingBox {
    xmin: -2.183,
    xmax: 2.659,
    ymin: 0.0,
    ymax: 9.999,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud2D {
    pub points: Vec<Point>,
    /// Index of the map that produced each point.
    pub map_indices: Vec<u8>,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
}

impl PointCloud2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounds(&self) -> Option<BoundingBox> {
        let (&(x0, y0), rest) = self.points.split_first()?;
        let mut b = BoundingBox {
            xmin: x0,
            xmax: x0,
            ymin: y0,
            ymax: y0,
        };
        for &(x, y) in rest {
            b.xmin = b.xmin.min(x);
            b.xmax = b.xmax.max(x);
            b.ymin = b.ymin.min(y);
            b.ymax = b.ymax.max(y);
        }
        Some(b)
    }

    /// One `x,y` line per point, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 32);
        for &(x, y) in &self.points {
            let _ = writeln!(out, "{x:.8e},{y:.8e}");
        }
        out
    }
}

/// Runs the chaos game from `start`, keeping the `iterations - burn_in`
/// points produced after the first `burn_in` steps.
pub fn chaos_game(
    sys: &IfsSystem,
    start: Point,
    iterations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PointCloud2D> {
    if iterations <= burn_in {
        return Err(Error::InvalidArgument(format!(
            "iterations ({iterations}) must exceed burn_in ({burn_in})"
        )));
    }
    let mut rng = rng::rng_from_seed(seed);
    let kept = iterations - burn_in;
    let mut points = Vec::with_capacity(kept);
    let mut map_indices = Vec::with_capacity(kept);
    let mut p = start;
    for step in 0..iterations {
        let k = sys.select(rng.random::<f64>());
        p = sys.maps[k].apply(p);
        if step >= burn_in {
            points.push(p);
            map_indices.push(k as u8);
        }
    }
    Ok(PointCloud2D {
        points,
        map_indices,
        seed,
        iterations,
        burn_in,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn contains(&self, (x, y): Point) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }
}

/// 8-bit grayscale image, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn nonzero_fraction(&self) -> f64 {
        self.pixels.iter().filter(|&&p| p != 0).count() as f64 / self.pixels.len() as f64
    }

    /// Plain PGM (`P2`): header, then one text row per image row.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn bin_index((x, y): Point, width: usize, height: usize, bbox: &BoundingBox) -> Option<usize> {
    if !bbox.contains((x, y)) {
        return None;
    }
    let fx = (x - bbox.xmin) / (bbox.xmax - bbox.xmin);
    let fy = (bbox.ymax - y) / (bbox.ymax - bbox.ymin);
    let col = ((fx * width as f64) as usize).min(width - 1);
    let row = ((fy * height as f64) as usize).min(height - 1);
    Some(row * width + col)
}

fn histogram(points: &[Point], width: usize, height: usize, bbox: &BoundingBox) -> Vec<u64> {
    let fill = |acc: &mut Vec<u64>, p: &Point| {
        if let Some(i) = bin_index(*p, width, height, bbox) {
            acc[i] += 1;
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points
            .par_iter()
            .fold(
                || vec![0u64; width * height],
                |mut acc, p| {
                    fill(&mut acc, p);
                    acc
                },
            )
            .reduce(
                || vec![0u64; width * height],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = vec![0u64; width * height];
        points.iter().for_each(|p| fill(&mut acc, p));
        acc
    }
}

/// Hit-count histogram, scaled as `255 * ln(1 + n) / ln(1 + max)`.
/// Points outside `bbox` are dropped.
pub fn rasterize(
    cloud: &PointCloud2D,
    width: usize,
    height: usize,
    bbox: &BoundingBox,
) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(
            "raster size must be at least 1x1".into(),
        ));
    }
    let finite = [bbox.xmin, bbox.xmax, bbox.ymin, bbox.ymax]
        .iter()
        .all(|v| v.is_finite());
    let ordered = bbox.xmax > bbox.xmin && bbox.ymax > bbox.ymin;
    if !finite || !ordered {
        return Err(Error::InvalidArgument("degenerate bounding box".into()));
    }
    let counts = histogram(&cloud.points, width, height, bbox);
    let max = counts.iter().copied().max().unwrap_or(0);
    let pixels = if max == 0 {
        vec![0; width * height]
    } else {
        let denom = (1.0 + max as f64).ln();
        counts
            .iter()
            .map(|&n| (255.0 * (1.0 + n as f64).ln() / denom).round() as u8)
            .collect()
    };
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fern_map_coefficients() {
        let sys = barnsley_fern_system();
        assert_eq!(sys.maps().len(), 4);
        let total: f64 = sys.maps().iter().map(|m| m.probability).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_eq!(sys.maps()[1].translation, [0.0, 1.6]);
        assert_eq!(sys.maps()[3].translation, [0.0, 0.44]);
    }

    #[test]
    fn apply_map_at_origin() {
        let sys = barnsley_fern_system();
        assert_eq!(apply_map(&sys.maps()[0], (0.0, 0.0)), (0.0, 0.0));
        assert_eq!(apply_map(&sys.maps()[1], (0.0, 0.0)), (0.0, 1.6));
        assert_eq!(apply_map(&sys.maps()[3], (0.0, 0.0)), (0.0, 0.44));
        assert_eq!(apply_map(&sys.maps()[1], (1.0, 1.0)), (0.89, 0.81 + 1.6));
    }

    #[test]
    fn selection_thresholds_are_running_sums() {
        let sys = barnsley_fern_system();
        let t = sys.thresholds();
        assert_eq!(t[0], 0.01);
        assert_eq!(t[1], 0.01 + 0.85);
        assert_eq!(t[2], 0.01 + 0.85 + 0.07);
        assert_eq!(sys.select(0.0), 0);
        assert_eq!(sys.select(0.0099), 0);
        assert_eq!(sys.select(0.01), 1);
        assert_eq!(sys.select(0.9299), 2);
        assert_eq!(sys.select(0.95), 3);
    }

    #[test]
    fn invalid_systems() {
        let m = AffineMap2D {
            linear: [[0.5, 0.0], [0.0, 0.5]],
            translation: [0.0, 0.0],
            probability: 0.5,
        };
        assert!(IfsSystem::new(vec![m]).is_err());
        assert!(IfsSystem::new(vec![]).is_err());
        assert!(IfsSystem::new(vec![AffineMap2D {
            probability: 1.5,
            ..m
        }])
        .is_err());
    }

    #[test]
    fn burn_in_must_be_below_iterations() {
        let sys = barnsley_fern_system();
        assert!(chaos_game(&sys, (0.0, 0.0), 1000, 1000, 1).is_err());
        assert_eq!(
            chaos_game(&sys, (0.0, 0.0), 1000, 20, 1).unwrap().len(),
            980
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let sys = barnsley_fern_system();
        let a = chaos_game(&sys, (0.0, 0.0), 5000, 20, 7).unwrap();
        let b = chaos_game(&sys, (0.0, 0.0), 5000, 20, 7).unwrap();
        let c = chaos_game(&sys, (0.0, 0.0), 5000, 20, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn map_one_zeroes_x() {
        let sys = barnsley_fern_system();
        let cloud = chaos_game(&sys, (0.0, 0.0), 50_000, 20, 3).unwrap();
        let mut seen = 0;
        for (p, &k) in cloud.points.iter().zip(&cloud.map_indices) {
            if k == 0 {
                assert_eq!(p.0, 0.0);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn raster_examples() {
        let bbox = BoundingBox {
            xmin: 0.0,
            xmax: 3.0,
            ymin: 0.0,
            ymax: 3.0,
        };
        let mut cloud = PointCloud2D {
            points: vec![],
            map_indices: vec![],
            seed: 0,
            iterations: 0,
            burn_in: 0,
        };
        let img = rasterize(&cloud, 3, 3, &bbox).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0));

        cloud.points = vec![(1.5, 1.5), (10.0, 1.0)];
        let img = rasterize(&cloud, 3, 3, &bbox).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(img.get(x, y) != 0, x == 1 && y == 1);
            }
        }
        assert_eq!(img.get(1, 1), 255);

        let flat = BoundingBox { ymax: 0.0, ..bbox };
        assert!(rasterize(&cloud, 3, 3, &flat).is_err());
        assert!(rasterize(&cloud, 0, 3, &bbox).is_err());
    }

    #[test]
    fn top_row_is_high_y() {
        let bbox = BoundingBox {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 2.0,
        };
        let cloud = PointCloud2D {
            points: vec![(0.1, 1.9)],
            map_indices: vec![1],
            seed: 0,
            iterations: 1,
            burn_in: 0,
        };
        let img = rasterize(&cloud, 1, 2, &bbox).unwrap();
        assert_eq!(img.pixels, vec![255, 0]);
        assert_eq!(img.to_pgm(), "P2\n1 2\n255\n255\n0\n");
    }
}

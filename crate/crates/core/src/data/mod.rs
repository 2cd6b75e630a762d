//! Synthetic shape datasets, MNIST composites, image files and normalization.
//!
//! Images are square, row-major, with pixel values in `[0, 1]`. Truth maps
//! use 0 for background and `1..=k` for objects in stamp order.

pub mod idx;
pub mod manifest;
pub mod pgm;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seed;

/// Smallest canvas accepted by the shape generator.
pub const MIN_SIDE: usize = 16;

/// Rejection-sampling budget for non-overlapping placement.
pub const PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Triangle,
    Square,
    Circle,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Triangle => "triangle",
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
        }
    }

    /// Whether offset `(dr, dc)` inside a `size` bounding box is filled.
    /// Triangles are right isosceles with the right angle at the lower left.
    pub fn covers(self, size: usize, dr: usize, dc: usize) -> bool {
        match self {
            ShapeKind::Square => true,
            ShapeKind::Triangle => dc <= dr,
            ShapeKind::Circle => {
                let c = (size as f64 - 1.0) / 2.0;
                let r = size as f64 / 2.0;
                (dr as f64 - c).powi(2) + (dc as f64 - c).powi(2) <= r * r
            }
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangle" => Ok(ShapeKind::Triangle),
            "square" => Ok(ShapeKind::Square),
            "circle" => Ok(ShapeKind::Circle),
            other => Err(Error::invalid(format!("unknown shape kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    /// Bounding-box side in pixels.
    pub size: usize,
    pub intensity: f64,
    /// Top-left corner of the bounding box as (row, col).
    pub position: (usize, usize),
}

impl ShapeSpec {
    pub fn validate(&self, side: usize) -> Result<()> {
        if self.size == 0 {
            return Err(Error::invalid("shape size must be positive"));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(Error::invalid(format!("intensity {} outside (0, 1]", self.intensity)));
        }
        let (r, c) = self.position;
        if r + self.size > side || c + self.size > side {
            return Err(Error::invalid(format!(
                "{} of size {} at ({r}, {c}) does not fit a {side}x{side} canvas",
                self.kind, self.size
            )));
        }
        Ok(())
    }

    /// Lattice indices covered by the shape.
    pub fn pixels(&self, side: usize) -> Vec<usize> {
        let (r0, c0) = self.position;
        let mut out = Vec::new();
        for dr in 0..self.size {
            for dc in 0..self.size {
                if self.kind.covers(self.size, dr, dc) {
                    out.push((r0 + dr) * side + c0 + dc);
                }
            }
        }
        out
    }

    /// Bounding boxes separated by at least `gap` empty rows or columns.
    fn separated(&self, other: &ShapeSpec, gap: usize) -> bool {
        let (r1, c1) = self.position;
        let (r2, c2) = other.position;
        r1 + self.size + gap <= r2 || r2 + other.size + gap <= r1 || c1 + self.size + gap <= c2 || c2 + other.size + gap <= c1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapPolicy {
    #[default]
    Forbid,
    Allow,
}

impl FromStr for OverlapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forbid" => Ok(OverlapPolicy::Forbid),
            "allow" => Ok(OverlapPolicy::Allow),
            other => Err(Error::invalid(format!("unknown overlap policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub seed: u64,
    pub shapes: Vec<ShapeSpec>,
    /// Pixels stamped by more than one shape; the last stamp owns them.
    pub overlap_zone: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub side: usize,
    pub pixels: Vec<f64>,
    pub truth: Vec<u32>,
    pub meta: ImageMeta,
}

impl LabeledImage {
    pub fn object_count(&self) -> usize {
        self.truth.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn foreground(&self) -> Vec<bool> {
        self.truth.iter().map(|&t| t > 0).collect()
    }
}

/// Either explicit shapes or `count` random ones.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeRequest {
    Explicit(Vec<ShapeSpec>),
    Random(usize),
}

/// Parameters for random shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRecipe {
    pub side: usize,
    pub count: usize,
    pub overlap: OverlapPolicy,
    /// Inclusive bounding-box size range.
    pub size_range: (usize, usize),
    pub intensity: f64,
    /// Minimum number of empty rows or columns between bounding boxes when
    /// overlap is forbidden.
    pub min_gap: usize,
}

impl ShapeRecipe {
    pub fn new(count: usize) -> Self {
        Self {
            side: 28,
            count,
            overlap: OverlapPolicy::Forbid,
            size_range: (7, 11),
            intensity: 1.0,
            min_gap: 2,
        }
    }
}

/// Shape kinds for a `count`-shape image: triangle, square, circle, repeating.
pub fn default_kinds(count: usize) -> Vec<ShapeKind> {
    const CYCLE: [ShapeKind; 3] = [ShapeKind::Triangle, ShapeKind::Square, ShapeKind::Circle];
    (0..count).map(|i| CYCLE[i % 3]).collect()
}

/// Stamps shapes in order. Later shapes overwrite earlier ones.
pub fn rasterize(side: usize, shapes: &[ShapeSpec], seed: u64) -> Result<LabeledImage> {
    let mut pixels = vec![0.0; side * side];
    let mut truth = vec![0u32; side * side];
    let mut stamped = vec![0u8; side * side];
    for (i, s) in shapes.iter().enumerate() {
        s.validate(side)?;
        for p in s.pixels(side) {
            pixels[p] = s.intensity;
            truth[p] = i as u32 + 1;
            stamped[p] = stamped[p].saturating_add(1);
        }
    }
    let overlap_zone = (0..side * side).filter(|&p| stamped[p] > 1).collect();
    Ok(LabeledImage {
        side,
        pixels,
        truth,
        meta: ImageMeta {
            seed,
            shapes: shapes.to_vec(),
            overlap_zone,
        },
    })
}

pub fn generate_shapes_image(recipe: &ShapeRecipe, request: &ShapeRequest, seed: u64) -> Result<LabeledImage> {
    let side = recipe.side;
    if side < MIN_SIDE {
        return Err(Error::invalid(format!("canvas side must be at least {MIN_SIDE}, got {side}")));
    }
    let shapes = match request {
        ShapeRequest::Explicit(shapes) => {
            if shapes.is_empty() {
                return Err(Error::invalid("at least one shape is required"));
            }
            if recipe.overlap == OverlapPolicy::Forbid {
                for (i, a) in shapes.iter().enumerate() {
                    if shapes[..i].iter().any(|b| !a.separated(b, 0)) {
                        return Err(Error::invalid("explicit shapes overlap while overlap is forbidden"));
                    }
                }
            }
            shapes.clone()
        }
        ShapeRequest::Random(count) => {
            let mut rng = seed::rng(seed::mix(seed, seed::stream::SHAPES));
            random_shapes(recipe, *count, &mut rng)?
        }
    };
    rasterize(side, &shapes, seed)
}

fn random_shapes(recipe: &ShapeRecipe, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<ShapeSpec>> {
    if count == 0 {
        return Err(Error::invalid("at least one shape is required"));
    }
    let (lo, hi) = recipe.size_range;
    if lo == 0 || lo > hi || hi > recipe.side {
        return Err(Error::invalid(format!("size range {lo}..={hi} invalid for side {}", recipe.side)));
    }
    let kinds = default_kinds(count);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let shapes: Vec<ShapeSpec> = kinds
            .iter()
            .map(|&kind| {
                let size = rng.gen_range(lo..=hi);
                let span = recipe.side - size;
                ShapeSpec {
                    kind,
                    size,
                    intensity: recipe.intensity,
                    position: (rng.gen_range(0..=span), rng.gen_range(0..=span)),
                }
            })
            .collect();
        let ok = recipe.overlap == OverlapPolicy::Allow
            || shapes
                .iter()
                .enumerate()
                .all(|(i, a)| shapes[..i].iter().all(|b| a.separated(b, recipe.min_gap)));
        if ok {
            return Ok(shapes);
        }
    }
    Err(Error::Placement {
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// A square and a triangle whose bounding boxes partially overlap. The
/// triangle is stamped last with intensity 1, the square with `1 - delta`.
pub fn generate_overlap_pair(side: usize, delta: f64, seed: u64) -> Result<LabeledImage> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("intensity delta {delta} outside [0, 1)")));
    }
    if side < MIN_SIDE {
        return Err(Error::invalid(format!("canvas side must be at least {MIN_SIDE}, got {side}")));
    }
    let mut rng = seed::rng(seed::mix(seed, seed::stream::SHAPES));
    let size = (side * 3 / 8).max(6);
    let shift_lo = size / 3;
    let shift_hi = (2 * size) / 3;
    let span = side - size - shift_hi;
    let r = rng.gen_range(0..=span);
    let c = rng.gen_range(0..=span);
    let dr = rng.gen_range(shift_lo..=shift_hi);
    let dc = rng.gen_range(shift_lo..=shift_hi);
    let square = ShapeSpec {
        kind: ShapeKind::Square,
        size,
        intensity: 1.0 - delta,
        position: (r, c),
    };
    let triangle = ShapeSpec {
        kind: ShapeKind::Triangle,
        size,
        intensity: 1.0,
        position: (r + dr, c + dc),
    };
    rasterize(side, &[square, triangle], seed)
}

/// Images generated from one master seed. Image `i` uses seed `mix(master, i)`.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub images: Vec<LabeledImage>,
    /// Indices whose placement failed.
    pub failed: Vec<usize>,
}

impl GeneratedDataset {
    /// Even indices train, odd indices test.
    pub fn split_by_parity(&self) -> (Vec<&LabeledImage>, Vec<&LabeledImage>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, img) in self.images.iter().enumerate() {
            if i % 2 == 0 {
                train.push(img);
            } else {
                test.push(img);
            }
        }
        (train, test)
    }

    /// First `round(fraction * len)` images train, the rest test.
    pub fn split_by_fraction(&self, fraction: f64) -> (Vec<&LabeledImage>, Vec<&LabeledImage>) {
        let cut = ((fraction.clamp(0.0, 1.0) * self.images.len() as f64).round() as usize).min(self.images.len());
        (self.images[..cut].iter().collect(), self.images[cut..].iter().collect())
    }
}

pub fn generate_dataset(count: usize, recipe: &ShapeRecipe, seed: u64) -> Result<GeneratedDataset> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let results: Vec<Result<LabeledImage>> = (0..count)
        .into_par_iter()
        .map(|i| generate_shapes_image(recipe, &ShapeRequest::Random(recipe.count), seed::mix(seed, i as u64)))
        .collect();
    let mut images = Vec::with_capacity(count);
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(img) => images.push(img),
            Err(Error::Placement { .. }) => failed.push(i),
            Err(e) => return Err(e),
        }
    }
    Ok(GeneratedDataset { images, failed })
}

/// Places a binarized digit (label 1) and a shape (label 2) on a blank
/// canvas without any shared pixel.
pub fn compose_mnist_shape(digit: &[f64], digit_side: usize, digit_intensity: f64, shape: ShapeSpec, canvas: usize, seed: u64) -> Result<LabeledImage> {
    if digit.len() != digit_side * digit_side {
        return Err(Error::invalid("digit buffer does not match its side"));
    }
    if digit_side > canvas || shape.size > canvas {
        return Err(Error::invalid("digit or shape larger than the canvas"));
    }
    if !(digit_intensity > 0.0 && digit_intensity <= 1.0) {
        return Err(Error::invalid("digit intensity outside (0, 1]"));
    }
    let mut rng = seed::rng(seed::mix(seed, seed::stream::COMPOSE));
    let mask: Vec<(usize, usize)> = (0..digit.len())
        .filter(|&p| digit[p] >= 0.5)
        .map(|p| (p / digit_side, p % digit_side))
        .collect();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let dpos = (rng.gen_range(0..=canvas - digit_side), rng.gen_range(0..=canvas - digit_side));
        let spos = (rng.gen_range(0..=canvas - shape.size), rng.gen_range(0..=canvas - shape.size));
        let placed = ShapeSpec { position: spos, ..shape };
        placed.validate(canvas)?;
        let shape_px = placed.pixels(canvas);
        let mut pixels = vec![0.0; canvas * canvas];
        let mut truth = vec![0u32; canvas * canvas];
        for &(r, c) in &mask {
            let p = (dpos.0 + r) * canvas + dpos.1 + c;
            pixels[p] = digit_intensity;
            truth[p] = 1;
        }
        if shape_px.iter().any(|&p| truth[p] != 0) {
            continue;
        }
        for p in shape_px {
            pixels[p] = placed.intensity;
            truth[p] = 2;
        }
        return Ok(LabeledImage {
            side: canvas,
            pixels,
            truth,
            meta: ImageMeta {
                seed,
                shapes: vec![placed],
                overlap_zone: Vec::new(),
            },
        });
    }
    Err(Error::Placement {
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// Standardizes to zero mean and unit variance, then rescales affinely so the
/// minimum is 0 and the maximum 1.
pub fn zscore_image(image: &[f64]) -> Result<Vec<f64>> {
    if image.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("image contains non-finite values"));
    }
    let n = image.len() as f64;
    let mean = image.iter().sum::<f64>() / n;
    let sd = (image.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let lo = image.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if image.len() < 2 || hi == lo || sd == 0.0 {
        return Err(Error::invalid("image is constant"));
    }
    let z: Vec<f64> = image.iter().map(|v| (v - mean) / sd).collect();
    let (zlo, zhi) = ((lo - mean) / sd, (hi - mean) / sd);
    let out = z
        .iter()
        .zip(image)
        .map(|(&v, &raw)| {
            if raw == lo {
                0.0
            } else if raw == hi {
                1.0
            } else {
                ((v - zlo) / (zhi - zlo)).clamp(0.0, 1.0)
            }
        })
        .collect();
    Ok(out)
}

/// Center-crops to a square and box-averages down to `side x side`.
pub fn fit_to_lattice(pixels: &[f64], width: usize, height: usize, side: usize) -> Result<Vec<f64>> {
    if pixels.len() != width * height {
        return Err(Error::invalid("pixel buffer does not match dimensions"));
    }
    let sq = width.min(height);
    if sq < side || side == 0 {
        return Err(Error::invalid(format!("image {width}x{height} is smaller than the {side}x{side} lattice")));
    }
    let r0 = (height - sq) / 2;
    let c0 = (width - sq) / 2;
    let mut out = vec![0.0; side * side];
    for (i, o) in out.iter_mut().enumerate() {
        let (r, c) = (i / side, i % side);
        let (ra, rb) = (r * sq / side, (r + 1) * sq / side);
        let (ca, cb) = (c * sq / side, (c + 1) * sq / side);
        let mut sum = 0.0;
        for rr in ra..rb {
            for cc in ca..cb {
                sum += pixels[(r0 + rr) * width + c0 + cc];
            }
        }
        *o = sum / ((rb - ra) * (cb - ca)) as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_square_raster() {
        let sq = ShapeSpec {
            kind: ShapeKind::Square,
            size: 8,
            intensity: 1.0,
            position: (4, 4),
        };
        let img = generate_shapes_image(&ShapeRecipe::new(1), &ShapeRequest::Explicit(vec![sq]), 0).unwrap();
        assert_eq!(img.pixels.iter().filter(|&&p| p == 1.0).count(), 64);
        for p in 0..28 * 28 {
            let (r, c) = (p / 28, p % 28);
            let inside = (4..12).contains(&r) && (4..12).contains(&c);
            assert_eq!(img.truth[p], inside as u32);
            assert_eq!(img.pixels[p], if inside { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn shape_rasters() {
        let tri: usize = (0..5).flat_map(|r| (0..5).map(move |c| (r, c))).filter(|&(r, c)| ShapeKind::Triangle.covers(5, r, c)).count();
        assert_eq!(tri, 15);
        assert!(ShapeKind::Circle.covers(9, 4, 4));
        assert!(!ShapeKind::Circle.covers(9, 0, 0));
        assert!(ShapeKind::Circle.covers(9, 0, 4));
    }

    #[test]
    fn random_images_are_reproducible_and_separated() {
        let recipe = ShapeRecipe::new(3);
        let a = generate_shapes_image(&recipe, &ShapeRequest::Random(3), 17).unwrap();
        let b = generate_shapes_image(&recipe, &ShapeRequest::Random(3), 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.object_count(), 3);
        assert!(a.meta.overlap_zone.is_empty());
        let kinds: Vec<ShapeKind> = a.meta.shapes.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, default_kinds(3));
    }

    #[test]
    fn rejects_bad_requests() {
        let mut recipe = ShapeRecipe::new(2);
        assert!(generate_shapes_image(&recipe, &ShapeRequest::Random(0), 1).is_err());
        recipe.side = 12;
        assert!(generate_shapes_image(&recipe, &ShapeRequest::Random(2), 1).is_err());
        let mut crowded = ShapeRecipe::new(9);
        crowded.size_range = (11, 11);
        assert!(matches!(
            generate_shapes_image(&crowded, &ShapeRequest::Random(9), 1),
            Err(Error::Placement { .. })
        ));
        let big = ShapeSpec {
            kind: ShapeKind::Square,
            size: 10,
            intensity: 1.0,
            position: (20, 20),
        };
        assert!(generate_shapes_image(&ShapeRecipe::new(1), &ShapeRequest::Explicit(vec![big]), 0).is_err());
    }

    #[test]
    fn overlap_zone_takes_last_stamp() {
        let img = generate_overlap_pair(28, 0.4, 3).unwrap();
        assert!(!img.meta.overlap_zone.is_empty());
        for &p in &img.meta.overlap_zone {
            assert_eq!(img.truth[p], 2);
            assert_eq!(img.pixels[p], 1.0);
        }
        let square_only = img.truth.iter().zip(&img.pixels).filter(|(&t, _)| t == 1);
        for (_, &v) in square_only {
            assert!((v - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn dataset_seeding() {
        let recipe = ShapeRecipe::new(2);
        let a = generate_dataset(20, &recipe, 1).unwrap();
        let b = generate_dataset(20, &recipe, 1).unwrap();
        let c = generate_dataset(20, &recipe, 2).unwrap();
        assert_eq!(a.images, b.images);
        assert_ne!(a.images, c.images);
        assert!(a.failed.is_empty());
        let one = generate_dataset(1, &recipe, 1).unwrap();
        assert_eq!(one.images.len(), 1);
        let distinct: std::collections::HashSet<Vec<u32>> = a.images.iter().map(|i| i.truth.clone()).collect();
        assert_eq!(distinct.len(), 20);
        let (tr, te) = a.split_by_parity();
        assert_eq!((tr.len(), te.len()), (10, 10));
        let (tr, te) = a.split_by_fraction(0.75);
        assert_eq!((tr.len(), te.len()), (15, 5));
    }

    #[test]
    fn mnist_composite() {
        let blank = vec![0.0; 28 * 28];
        let shape = ShapeSpec {
            kind: ShapeKind::Square,
            size: 6,
            intensity: 0.8,
            position: (0, 0),
        };
        let img = compose_mnist_shape(&blank, 28, 1.0, shape, 40, 4).unwrap();
        assert_eq!(img.truth.iter().filter(|&&t| t == 2).count(), 36);
        assert!(img.truth.iter().all(|&t| t != 1));

        let mut digit = vec![0.0; 28 * 28];
        for r in 5..23 {
            for c in 12..16 {
                digit[r * 28 + c] = 0.9;
            }
        }
        digit[0] = 0.3;
        let a = compose_mnist_shape(&digit, 28, 1.0, shape, 40, 9).unwrap();
        let b = compose_mnist_shape(&digit, 28, 1.0, shape, 40, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.truth.iter().filter(|&&t| t == 1).count(), 18 * 4);
        assert_eq!(a.truth.iter().filter(|&&t| t == 2).count(), 36);
        for (t, p) in a.truth.iter().zip(&a.pixels) {
            assert_eq!(*t > 0, *p > 0.0);
        }
    }

    #[test]
    fn zscore_endpoints_and_errors() {
        let img = vec![0.2, 0.5, 0.9, 0.2, 0.4];
        let z = zscore_image(&img).unwrap();
        assert_eq!(z.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(z.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        assert!(zscore_image(&[0.3; 4]).is_err());
    }

    #[test]
    fn fit_to_lattice_box_average() {
        let px: Vec<f64> = (0..6 * 4).map(|i| i as f64).collect();
        // 6 wide, 4 tall: crop columns 1..5, average 2x2 blocks
        let out = fit_to_lattice(&px, 6, 4, 2).unwrap();
        assert_eq!(out, vec![(1.0 + 2.0 + 7.0 + 8.0) / 4.0, (3.0 + 4.0 + 9.0 + 10.0) / 4.0, (13.0 + 14.0 + 19.0 + 20.0) / 4.0, (15.0 + 16.0 + 21.0 + 22.0) / 4.0]);
        assert!(fit_to_lattice(&px, 6, 4, 5).is_err());
    }

    proptest! {
        #[test]
        fn zscore_is_idempotent(v in proptest::collection::vec(0.0f64..1.0, 4..40)) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let once = zscore_image(&v).unwrap();
            let twice = zscore_image(&once).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn truth_marks_exactly_the_stamped_pixels(seed in 0u64..500, k in 1usize..4) {
            let img = generate_shapes_image(&ShapeRecipe::new(k), &ShapeRequest::Random(k), seed).unwrap();
            let mut stamped = vec![false; img.side * img.side];
            for s in &img.meta.shapes {
                for p in s.pixels(img.side) {
                    stamped[p] = true;
                }
            }
            for p in 0..stamped.len() {
                prop_assert_eq!(img.truth[p] > 0, stamped[p]);
                prop_assert_eq!(img.pixels[p] > 0.0, stamped[p]);
            }
        }
    }
}

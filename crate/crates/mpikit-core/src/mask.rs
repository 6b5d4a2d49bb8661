//! Binary foreground masks: morphology, downsampling, and the random
//! rectangle generator used for weak supervision.
//!
//! Convention throughout: 1 = background, 0 = foreground.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    height: usize,
    width: usize,
    bits: Vec<u8>,
}

/// Parameters of the fake rectangular mask generator: `count` rectangles
/// whose height/width are uniform fractions of the image dims.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectMaskConfig {
    pub count: usize,
    pub frac_min: f64,
    pub frac_max: f64,
    pub seed: u64,
}

impl RectMaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.frac_min)
            || !(0.0..=1.0).contains(&self.frac_max)
            || self.frac_min > self.frac_max
        {
            return Err(Error::InvalidConfig(format!(
                "rectangle fractions must satisfy 0 <= min <= max <= 1, got {} / {}",
                self.frac_min, self.frac_max
            )));
        }
        Ok(())
    }
}

impl Default for RectMaskConfig {
    fn default() -> Self {
        // 3 rectangles, 0.1..0.4 of the mask dimensions.
        RectMaskConfig { count: 3, frac_min: 0.1, frac_max: 0.4, seed: 0 }
    }
}

impl ForegroundMask {
    pub fn new(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidShape { context: "ForegroundMask::new", shape: vec![height, width] });
        }
        if bits.len() != height * width {
            return Err(Error::DataLength { expected: height * width, got: bits.len() });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Format("mask bits must be 0 or 1".into()));
        }
        Ok(ForegroundMask { height, width, bits })
    }

    pub fn all_background(height: usize, width: usize) -> Self {
        ForegroundMask { height, width, bits: vec![1; height * width] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(height * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::Format("ragged mask rows".into()));
            }
            bits.extend_from_slice(r);
        }
        ForegroundMask::new(height, width, bits)
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(y, x));
            }
        }
        ForegroundMask { height, width, bits }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: u8) {
        debug_assert!(v <= 1);
        self.bits[y * self.width + x] = v;
    }

    pub fn count_background(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.len() - self.count_background()
    }

    /// True when every pixel is foreground.
    pub fn all_foreground(&self) -> bool {
        self.count_background() == 0
    }
}

/// One pass of a 3x3 minimum filter (out-of-bounds excluded).
fn min_filter_once(m: &ForegroundMask) -> ForegroundMask {
    filter_once(m, |acc, v| acc.min(v), 1)
}

/// One pass of a 3x3 maximum filter (out-of-bounds excluded).
fn max_filter_once(m: &ForegroundMask) -> ForegroundMask {
    filter_once(m, |acc, v| acc.max(v), 0)
}

fn filter_once(m: &ForegroundMask, join: impl Fn(u8, u8) -> u8, id: u8) -> ForegroundMask {
    let (h, w) = (m.height, m.width);
    ForegroundMask::from_fn(h, w, |y, x| {
        let mut acc = id;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let yy = y as i64 + dy;
                let xx = x as i64 + dx;
                if yy < 0 || yy >= h as i64 || xx < 0 || xx >= w as i64 {
                    continue;
                }
                acc = join(acc, m.get(yy as usize, xx as usize));
            }
        }
        acc
    })
}

/// Shrinks the background: a pixel stays background only if its whole
/// Chebyshev ball of the given radius is background. Radius 0 is the identity.
pub fn erode_background(m: &ForegroundMask, radius: usize) -> ForegroundMask {
    let mut out = m.clone();
    for _ in 0..radius {
        out = min_filter_once(&out);
    }
    out
}

/// Grows the background by iterated 3x3 maximum filtering; this is the literal
/// max-pooling of a 1-is-background mask.
pub fn dilate_background(m: &ForegroundMask, radius: usize) -> ForegroundMask {
    let mut out = m.clone();
    for _ in 0..radius {
        out = max_filter_once(&out);
    }
    out
}

/// Elementwise minimum: a pixel is background only if background in both.
pub fn intersect_backgrounds(a: &ForegroundMask, b: &ForegroundMask) -> Result<ForegroundMask> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::ShapeMismatch {
            context: "intersect_backgrounds",
            expected: vec![a.height, a.width],
            got: vec![b.height, b.width],
        });
    }
    let bits = a.bits.iter().zip(&b.bits).map(|(&x, &y)| x.min(y)).collect();
    Ok(ForegroundMask { height: a.height, width: a.width, bits })
}

/// Draws `cfg.count` random axis-aligned rectangles of foreground (0) onto an
/// all-background mask. Each side is sampled uniformly from
/// `[frac_min * extent, frac_max * extent]`, rounded to nearest and clamped to
/// at least 1; the top-left corner is uniform over fully-interior placements.
/// Per rectangle the draw order is height, width, top, left.
pub fn gen_fake_masks(cfg: &RectMaskConfig, h: usize, w: usize) -> Result<ForegroundMask> {
    cfg.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::InvalidShape { context: "gen_fake_masks", shape: vec![h, w] });
    }
    let mut mask = ForegroundMask::all_background(h, w);
    let mut rng = Stream::new(cfg.seed);
    let mut side = |extent: usize| -> usize {
        let v = rng.uniform_range(cfg.frac_min * extent as f64, cfg.frac_max * extent as f64);
        (v.round() as usize).clamp(1, extent)
    };
    for _ in 0..cfg.count {
        let rh = side(h);
        let rw = side(w);
        let top = rng.uniform_usize(h - rh + 1);
        let left = rng.uniform_usize(w - rw + 1);
        for y in top..top + rh {
            for x in left..left + rw {
                mask.set(y, x, 0);
            }
        }
    }
    Ok(mask)
}

/// Conservative block downsampling: an output cell is background only when
/// every covered input pixel is background.
pub fn downsample_mask(m: &ForegroundMask, factor: usize) -> Result<ForegroundMask> {
    if factor == 0 {
        return Err(Error::NonDivisible { extent: 0, factor });
    }
    if m.height % factor != 0 {
        return Err(Error::NonDivisible { extent: m.height, factor });
    }
    if m.width % factor != 0 {
        return Err(Error::NonDivisible { extent: m.width, factor });
    }
    let (oh, ow) = (m.height / factor, m.width / factor);
    Ok(ForegroundMask::from_fn(oh, ow, |y, x| {
        for yy in y * factor..(y + 1) * factor {
            for xx in x * factor..(x + 1) * factor {
                if m.get(yy, xx) == 0 {
                    return 0;
                }
            }
        }
        1
    }))
}

/// Nearest-neighbor upsampling by pixel replication.
pub fn upsample_mask_replicate(m: &ForegroundMask, factor: usize) -> ForegroundMask {
    ForegroundMask::from_fn(m.height * factor, m.width * factor, |y, x| {
        m.get(y / factor, x / factor)
    })
}

/// Thresholds 1-channel logits into a foreground mask: a pixel is foreground
/// (0) iff `sigmoid(logit) >= threshold`.
pub fn binarize_foreground_logits(logits: &Tensor, threshold: f32) -> Result<ForegroundMask> {
    let (c, h, w) = logits.dims3();
    if c != 1 {
        return Err(Error::InvalidShape {
            context: "binarize_foreground_logits: expected 1 channel",
            shape: logits.shape().to_vec(),
        });
    }
    Ok(ForegroundMask::from_fn(h, w, |y, x| {
        let p = sigmoid(logits.get3(0, y, x));
        if p >= threshold {
            0
        } else {
            1
        }
    }))
}

pub(crate) fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

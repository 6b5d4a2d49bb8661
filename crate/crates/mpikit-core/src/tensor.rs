//! Dense single-precision tensors and the handful of array operations the
//! rest of the crate builds on.

use crate::error::{Error, Result};
use crate::mask::ForegroundMask;

/// Dense real-valued tensor, rank 3 (`C x H x W`) or rank 4 (`N x C x H x W`),
/// row-major and contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

/// How masked-out positions participate in max-pooling.
///
/// `ZeroFill` pools over stored values (the caller has already zeroed the
/// invalid positions, so a zero can win against negative data). In
/// `MaskedSentinel` invalid positions are excluded from the window outright,
/// which keeps arbitrary-sign features correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    ZeroFill,
    MaskedSentinel,
}

/// Per output element of a pooling pass: the input coordinate that won the
/// 3x3 max, or `None` when no valid input existed in the window.
#[derive(Debug, Clone)]
pub struct ArgmaxMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    entries: Vec<Option<(usize, usize)>>,
}

impl ArgmaxMap {
    pub fn get(&self, c: usize, y: usize, x: usize) -> Option<(usize, usize)> {
        self.entries[(c * self.height + y) * self.width + x]
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.len() != 3 && shape.len() != 4 {
            return Err(Error::InvalidShape { context: "Tensor::new", shape });
        }
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::InvalidShape { context: "Tensor::new", shape });
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::DataLength { expected, got: data.len() });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor::new(shape, vec![0.0; n]).expect("zeros: valid shape")
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n: usize = shape.iter().product();
        Tensor::new(shape, vec![value; n]).expect("filled: valid shape")
    }

    /// Rank-3 constructor from nested channel/row data.
    pub fn from_planes(planes: &[Vec<Vec<f32>>]) -> Self {
        let c = planes.len();
        let h = planes[0].len();
        let w = planes[0][0].len();
        let mut data = Vec::with_capacity(c * h * w);
        for plane in planes {
            for row in plane {
                data.extend_from_slice(row);
            }
        }
        Tensor::new(vec![c, h, w], data).expect("from_planes: consistent rows")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// (C, H, W) of a rank-3 tensor.
    pub fn dims3(&self) -> (usize, usize, usize) {
        assert_eq!(self.rank(), 3, "dims3 on rank-{} tensor", self.rank());
        (self.shape[0], self.shape[1], self.shape[2])
    }

    /// (N, C, H, W) of a rank-4 tensor.
    pub fn dims4(&self) -> (usize, usize, usize, usize) {
        assert_eq!(self.rank(), 4, "dims4 on rank-{} tensor", self.rank());
        (self.shape[0], self.shape[1], self.shape[2], self.shape[3])
    }

    pub fn get3(&self, c: usize, y: usize, x: usize) -> f32 {
        let (_, h, w) = self.dims3();
        self.data[(c * h + y) * w + x]
    }

    pub fn set3(&mut self, c: usize, y: usize, x: usize, v: f32) {
        let (_, h, w) = self.dims3();
        self.data[(c * h + y) * w + x] = v;
    }

    /// Copies batch item `n` of a rank-4 tensor into a rank-3 tensor.
    pub fn item(&self, n: usize) -> Tensor {
        let (nn, c, h, w) = self.dims4();
        assert!(n < nn);
        let stride = c * h * w;
        Tensor::new(vec![c, h, w], self.data[n * stride..(n + 1) * stride].to_vec())
            .expect("item: consistent slice")
    }

    fn check_same_shape(&self, other: &Tensor, context: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.shape.clone(),
                got: other.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other, "Tensor::add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other, "Tensor::sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn add_into(&mut self, other: &Tensor) -> Result<()> {
        self.check_same_shape(other, "Tensor::add_into")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }
}

/// Multiplies every channel of a rank-3 tensor elementwise by the mask
/// (1 = background keeps its value, 0 = foreground becomes exactly 0).
pub fn mask_mul(t: &Tensor, m: &ForegroundMask) -> Result<Tensor> {
    let (c, h, w) = t.dims3();
    if (m.height(), m.width()) != (h, w) {
        return Err(Error::ShapeMismatch {
            context: "mask_mul",
            expected: vec![h, w],
            got: vec![m.height(), m.width()],
        });
    }
    let mut out = t.clone();
    for ci in 0..c {
        let base = ci * h * w;
        for i in 0..h * w {
            if m.bits()[i] == 0 {
                out.data[base + i] = 0.0;
            }
        }
    }
    Ok(out)
}

/// 3x3, stride-1 max-pooling with the output the same size as the input.
///
/// Out-of-bounds window positions are excluded (equivalent to padding with
/// negative infinity). In `MaskedSentinel` mode positions where
/// `mask_of_valid` is 0 are excluded too; a window with no valid position
/// yields 0 and an argmax of `None`. Ties break to the row-major-first
/// coordinate.
pub fn maxpool_same(
    t: &Tensor,
    mask_of_valid: Option<&ForegroundMask>,
    mode: PoolMode,
) -> Result<(Tensor, ArgmaxMap)> {
    let (c, h, w) = t.dims3();
    if let Some(m) = mask_of_valid {
        if (m.height(), m.width()) != (h, w) {
            return Err(Error::ShapeMismatch {
                context: "maxpool_same",
                expected: vec![h, w],
                got: vec![m.height(), m.width()],
            });
        }
    }
    let valid_bits = match mode {
        PoolMode::MaskedSentinel => mask_of_valid.map(|m| m.bits()),
        PoolMode::ZeroFill => None,
    };
    let mut out = Tensor::zeros(vec![c, h, w]);
    let mut entries = vec![None; c * h * w];
    for ci in 0..c {
        let plane = &t.data[ci * h * w..(ci + 1) * h * w];
        let (pooled, arg) = pool_plane(plane, h, w, valid_bits);
        out.data[ci * h * w..(ci + 1) * h * w].copy_from_slice(&pooled);
        entries[ci * h * w..(ci + 1) * h * w].copy_from_slice(&arg);
    }
    Ok((out, ArgmaxMap { channels: c, height: h, width: w, entries }))
}

/// 3x3 stride-1 same-size max over one plane. `valid` (1 = usable) excludes
/// positions from the window; `None` pools over every in-bounds position.
/// Ties break to the row-major-first coordinate. Windows with no usable
/// position yield zero and no argmax.
pub(crate) fn pool_plane<T: num_traits::Float>(
    src: &[T],
    h: usize,
    w: usize,
    valid: Option<&[u8]>,
) -> (Vec<T>, Vec<Option<(usize, usize)>>) {
    let mut out = vec![T::zero(); h * w];
    let mut arg = vec![None; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut best: Option<(T, (usize, usize))> = None;
            let y0 = y.saturating_sub(1);
            let y1 = (y + 2).min(h);
            let x0 = x.saturating_sub(1);
            let x1 = (x + 2).min(w);
            for yy in y0..y1 {
                for xx in x0..x1 {
                    if let Some(v) = valid {
                        if v[yy * w + xx] == 0 {
                            continue;
                        }
                    }
                    let val = src[yy * w + xx];
                    match best {
                        Some((bv, _)) if bv >= val => {}
                        _ => best = Some((val, (yy, xx))),
                    }
                }
            }
            if let Some((v, coord)) = best {
                out[y * w + x] = v;
                arg[y * w + x] = Some(coord);
            }
        }
    }
    (out, arg)
}

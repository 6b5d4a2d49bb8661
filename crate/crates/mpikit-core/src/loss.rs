//! Training losses: binary cross-entropy on the foreground head and
//! region-masked multi-class cross-entropy on the background head.
//!
//! Both consume logits and run in the stable softplus / log-sum-exp forms,
//! accumulating in double precision.

use crate::error::{Error, Result};
use crate::label::LabelMap;
use crate::mask::ForegroundMask;
use crate::tensor::Tensor;

/// A reduced loss: mean value in nats plus the number of contributing pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub pixel_count: usize,
    /// Set when the contributing region was empty (value is then 0).
    pub empty_region: bool,
}

impl LossValue {
    fn new(value: f64, pixel_count: usize) -> Self {
        LossValue { value, pixel_count, empty_region: pixel_count == 0 }
    }
}

/// Unweighted sum of the two branch losses.
pub fn total_loss(lf: &LossValue, lb: &LossValue) -> LossValue {
    LossValue {
        value: lf.value + lb.value,
        pixel_count: lf.pixel_count + lb.pixel_count,
        empty_region: lf.empty_region && lb.empty_region,
    }
}

/// Binary cross-entropy over all pixels of a 1-channel logit map. The target
/// is 1 at foreground pixels (mask value 0). Returns the mean loss and its
/// gradient with respect to the logits.
pub fn bce_foreground(fg_logits: &Tensor, gt_fg: &ForegroundMask) -> Result<(LossValue, Tensor)> {
    let (c, h, w) = fg_logits.dims3();
    if c != 1 {
        return Err(Error::InvalidShape {
            context: "bce_foreground: expected 1 channel",
            shape: fg_logits.shape().to_vec(),
        });
    }
    if (gt_fg.height(), gt_fg.width()) != (h, w) {
        return Err(Error::ShapeMismatch {
            context: "bce_foreground",
            expected: vec![h, w],
            got: vec![gt_fg.height(), gt_fg.width()],
        });
    }
    let targets: Vec<f64> = gt_fg.bits().iter().map(|&b| f64::from(b == 0)).collect();
    let (value, grad) = bce_generic(fg_logits.data(), &targets);
    Ok((
        LossValue::new(value, h * w),
        Tensor::new(vec![1, h, w], grad)?,
    ))
}

/// Generic-precision BCE-with-logits: mean of `f*softplus(-x) + (1-f)*softplus(x)`.
/// Gradient per pixel is `(sigmoid(x) - f) / n`.
pub(crate) fn bce_generic<T: num_traits::Float>(logits: &[T], targets: &[f64]) -> (f64, Vec<T>) {
    let n = logits.len() as f64;
    let mut acc = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (&x, &f) in logits.iter().zip(targets) {
        let x = x.to_f64().unwrap();
        acc += f * softplus(-x) + (1.0 - f) * softplus(x);
        grad.push(T::from((sigmoid64(x) - f) / n).unwrap());
    }
    (acc / n, grad)
}

/// Multi-class cross-entropy over the background region A (pixels where
/// `real_fg` is 1); real-foreground pixels are ignored and receive zero
/// gradient. An empty A yields value 0 with the empty-region flag set.
pub fn partial_ce_background(
    bg_logits: &Tensor,
    gt_labels: &LabelMap,
    real_fg: &ForegroundMask,
) -> Result<(LossValue, Tensor)> {
    let (c, h, w) = bg_logits.dims3();
    if (gt_labels.height(), gt_labels.width()) != (h, w)
        || (real_fg.height(), real_fg.width()) != (h, w)
    {
        return Err(Error::ShapeMismatch {
            context: "partial_ce_background",
            expected: vec![h, w],
            got: vec![gt_labels.height(), gt_labels.width()],
        });
    }
    let (value, grad, count) =
        partial_ce_generic(bg_logits.data(), c, h * w, gt_labels.ids(), real_fg.bits())?;
    Ok((LossValue::new(value, count), Tensor::new(vec![c, h, w], grad)?))
}

pub(crate) fn partial_ce_generic<T: num_traits::Float>(
    logits: &[T],
    classes: usize,
    plane: usize,
    labels: &[u8],
    region_bg: &[u8],
) -> Result<(f64, Vec<T>, usize)> {
    let count = region_bg.iter().filter(|&&b| b == 1).count();
    let mut grad = vec![T::zero(); classes * plane];
    if count == 0 {
        return Ok((0.0, grad, 0));
    }
    let inv = 1.0 / count as f64;
    let mut acc = 0.0f64;
    let mut probs = vec![0.0f64; classes];
    for i in 0..plane {
        if region_bg[i] != 1 {
            continue;
        }
        let gt = labels[i] as usize;
        if gt >= classes {
            return Err(Error::LabelOutOfRange { label: labels[i], classes });
        }
        let mut max = f64::NEG_INFINITY;
        for ci in 0..classes {
            max = max.max(logits[ci * plane + i].to_f64().unwrap());
        }
        let mut denom = 0.0f64;
        for ci in 0..classes {
            let e = (logits[ci * plane + i].to_f64().unwrap() - max).exp();
            probs[ci] = e;
            denom += e;
        }
        let log_denom = denom.ln();
        acc += log_denom - (logits[gt * plane + i].to_f64().unwrap() - max);
        for ci in 0..classes {
            let p = probs[ci] / denom;
            let target = f64::from(ci == gt);
            grad[ci * plane + i] = T::from((p - target) * inv).unwrap();
        }
    }
    Ok((acc * inv, grad, count))
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

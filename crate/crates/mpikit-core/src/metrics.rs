//! Confusion-matrix accumulation and mean intersection-over-union.

use crate::error::{Error, Result};
use crate::label::LabelMap;
use crate::mask::ForegroundMask;

/// C x C count matrix; rows are ground-truth classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix { classes, counts: vec![0; classes * classes] }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::DataLength { expected: classes * classes, got: counts.len() });
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    /// Adds the pixel tallies of one prediction/ground-truth pair. When
    /// `region` is given, only its foreground pixels (value 0, the inpainted
    /// area) are counted.
    pub fn accumulate(
        &mut self,
        pred: &LabelMap,
        gt: &LabelMap,
        region: Option<&ForegroundMask>,
    ) -> Result<()> {
        let (h, w) = (gt.height(), gt.width());
        if (pred.height(), pred.width()) != (h, w) {
            return Err(Error::ShapeMismatch {
                context: "ConfusionMatrix::accumulate",
                expected: vec![h, w],
                got: vec![pred.height(), pred.width()],
            });
        }
        if let Some(r) = region {
            if (r.height(), r.width()) != (h, w) {
                return Err(Error::ShapeMismatch {
                    context: "ConfusionMatrix::accumulate",
                    expected: vec![h, w],
                    got: vec![r.height(), r.width()],
                });
            }
        }
        for i in 0..h * w {
            if let Some(r) = region {
                if r.bits()[i] == 1 {
                    continue;
                }
            }
            let g = gt.ids()[i] as usize;
            let p = pred.ids()[i] as usize;
            if g >= self.classes {
                return Err(Error::LabelOutOfRange { label: gt.ids()[i], classes: self.classes });
            }
            if p >= self.classes {
                return Err(Error::LabelOutOfRange { label: pred.ids()[i], classes: self.classes });
            }
            self.counts[g * self.classes + p] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes, other.classes);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Unweighted mean of per-class IoU; classes absent from both ground
    /// truth and prediction are excluded. `None` when no class is present.
    pub fn mean_iou(&self) -> Option<f64> {
        let mut sum = 0.0f64;
        let mut included = 0usize;
        for c in 0..self.classes {
            let tp = self.count(c, c);
            let row: u64 = (0..self.classes).map(|p| self.count(c, p)).sum();
            let col: u64 = (0..self.classes).map(|g| self.count(g, c)).sum();
            let denom = row + col - tp;
            if denom == 0 {
                continue;
            }
            sum += tp as f64 / denom as f64;
            included += 1;
        }
        if included == 0 {
            None
        } else {
            Some(sum / included as f64)
        }
    }
}

/// The two per-image figures: mean IoU over every pixel, and mean IoU over
/// only the real-foreground (inpainted) pixels.
pub fn evaluate_pair(
    pred: &LabelMap,
    gt_bg: &LabelMap,
    real_fg: &ForegroundMask,
    classes: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    let mut all = ConfusionMatrix::new(classes);
    all.accumulate(pred, gt_bg, None)?;
    let mut fg = ConfusionMatrix::new(classes);
    fg.accumulate(pred, gt_bg, Some(real_fg))?;
    Ok((all.mean_iou(), fg.mean_iou()))
}

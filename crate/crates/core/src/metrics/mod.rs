//! Binary confusion-matrix segmentation metrics.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("mask sizes differ: {pred:?} vs {gt:?}")]
    Dimension { pred: (u32, u32), gt: (u32, u32) },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// A ratio with a flag set when its denominator was zero (value then 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64) -> Score {
    if den == 0.0 {
        Score { value: 0.0, degenerate: true }
    } else {
        Score { value: num / den, degenerate: false }
    }
}

impl ConfusionMatrix {
    pub fn pixels(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Adds a pixelwise comparison of `positive` against every other class.
    /// Masks are row-major with the given `(width, height)`.
    pub fn accumulate(&mut self, pred: &[u8], pred_dims: (u32, u32), gt: &[u8], gt_dims: (u32, u32), positive: u8) -> Result<(), MetricsError> {
        if pred_dims != gt_dims || pred.len() != gt.len() {
            return Err(MetricsError::Dimension { pred: pred_dims, gt: gt_dims });
        }
        for (&p, &g) in pred.iter().zip(gt) {
            match (p == positive, g == positive) {
                (true, true) => self.tp += 1,
                (true, false) => self.fp += 1,
                (false, true) => self.fn_ += 1,
                (false, false) => self.tn += 1,
            }
        }
        Ok(())
    }

    pub fn accumulate_images(&mut self, pred: &image::GrayImage, gt: &image::GrayImage, positive: u8) -> Result<(), MetricsError> {
        self.accumulate(pred.as_raw(), pred.dimensions(), gt.as_raw(), gt.dimensions(), positive)
    }

    pub fn iou(&self) -> Score {
        ratio(self.tp as f64, (self.tp + self.fp + self.fn_) as f64)
    }

    pub fn oa(&self) -> Score {
        ratio((self.tp + self.tn) as f64, self.pixels() as f64)
    }

    pub fn precision(&self) -> Score {
        ratio(self.tp as f64, (self.tp + self.fp) as f64)
    }

    pub fn recall(&self) -> Score {
        ratio(self.tp as f64, (self.tp + self.fn_) as f64)
    }

    pub fn f1(&self) -> Score {
        let (p, r) = (self.precision(), self.recall());
        let s = ratio(2.0 * p.value * r.value, p.value + r.value);
        Score { value: s.value, degenerate: s.degenerate || p.degenerate || r.degenerate }
    }

    pub fn report(&self) -> MetricsReport {
        let (iou, oa, precision, recall, f1) = (self.iou(), self.oa(), self.precision(), self.recall(), self.f1());
        MetricsReport {
            iou: iou.value,
            oa: oa.value,
            precision: precision.value,
            recall: recall.value,
            f1: f1.value,
            pixels: self.pixels(),
            degenerate: iou.degenerate || oa.degenerate || precision.degenerate || recall.degenerate || f1.degenerate,
            confusion: *self,
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;
    fn add(self, o: Self) -> Self {
        ConfusionMatrix { tp: self.tp + o.tp, fp: self.fp + o.fp, tn: self.tn + o.tn, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iou: f64,
    pub oa: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pixels: u64,
    /// Some denominator was zero and the matching value was reported as 0.
    pub degenerate: bool,
    pub confusion: ConfusionMatrix,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    #[test]
    fn perfect_and_total_miss() {
        let mut c = ConfusionMatrix::default();
        c.accumulate(&[1; 9], (3, 3), &[1; 9], (3, 3), 1).unwrap();
        assert_eq!(c, cm(9, 0, 0, 0));
        let mut c = ConfusionMatrix::default();
        c.accumulate(&[1; 9], (3, 3), &[0; 9], (3, 3), 1).unwrap();
        assert_eq!(c, cm(0, 9, 0, 0));
        assert!(c.accumulate(&[1; 9], (3, 3), &[0; 8], (4, 2), 1).is_err());
    }

    #[test]
    fn formulas() {
        let c = cm(50, 25, 0, 25);
        assert_eq!(c.iou().value, 0.5);
        let c = cm(0, 0, 10, 0);
        assert_eq!(c.iou(), Score { value: 0.0, degenerate: true });
        assert_eq!(c.oa(), Score { value: 1.0, degenerate: false });
        let c = cm(7, 0, 3, 0);
        assert_eq!((c.iou().value, c.oa().value, c.f1().value), (1.0, 1.0, 1.0));
    }

    #[test]
    fn serializes_fn_field() {
        let s = serde_json::to_string(&cm(1, 2, 3, 4)).unwrap();
        assert_eq!(s, r#"{"tp":1,"fp":2,"tn":3,"fn":4}"#);
    }

    proptest! {
        #[test]
        fn iou_never_exceeds_f1(tp in 1u64..1000, fp in 0u64..1000, fn_ in 0u64..1000, tn in 0u64..1000) {
            let c = cm(tp, fp, tn, fn_);
            prop_assert!(0.0 <= c.iou().value && c.iou().value <= c.f1().value + 1e-15 && c.f1().value <= 1.0);
        }

        #[test]
        fn accumulation_order_free(a in proptest::collection::vec(0u8..4, 64), b in proptest::collection::vec(0u8..4, 64)) {
            let mut whole = ConfusionMatrix::default();
            whole.accumulate(&a, (8, 8), &b, (8, 8), 1).unwrap();
            let mut top = ConfusionMatrix::default();
            top.accumulate(&a[..32], (8, 4), &b[..32], (8, 4), 1).unwrap();
            let mut bottom = ConfusionMatrix::default();
            bottom.accumulate(&a[32..], (8, 4), &b[32..], (8, 4), 1).unwrap();
            prop_assert_eq!(whole, bottom + top);
            let hamming = a.iter().zip(&b).filter(|(x, y)| (**x == 1) != (**y == 1)).count() as f64;
            prop_assert!((whole.oa().value - (1.0 - hamming / 64.0)).abs() < 1e-12);
        }
    }
}

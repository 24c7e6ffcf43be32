use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A half-open time interval `[start, end)` in integer milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start_ms: i64,
    pub end_ms: i64,
}

pub fn secs_to_ms(secs: f64) -> Result<i64> {
    if !secs.is_finite() || secs < 0.0 {
        return Err(Error::InvalidInput(format!("timestamp {secs} must be finite and >= 0")));
    }
    Ok((secs * 1000.0).round() as i64)
}

impl Span {
    pub fn new(start_ms: i64, end_ms: i64) -> Result<Self> {
        if start_ms < 0 || end_ms <= start_ms {
            return Err(Error::InvalidInput(format!(
                "span [{start_ms}, {end_ms}) ms must satisfy 0 <= start < end"
            )));
        }
        Ok(Span { start_ms, end_ms })
    }

    pub fn from_secs(start: f64, end: f64) -> Result<Self> {
        Span::new(secs_to_ms(start)?, secs_to_ms(end)?)
    }

    pub fn start_secs(&self) -> f64 {
        self.start_ms as f64 / 1000.0
    }

    pub fn end_secs(&self) -> f64 {
        self.end_ms as f64 / 1000.0
    }

    pub fn len_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }

    pub fn intersection_ms(&self, other: &Span) -> i64 {
        (self.end_ms.min(other.end_ms) - self.start_ms.max(other.start_ms)).max(0)
    }

    /// Length of the hull `[min start, max end)`, the IoU denominator.
    pub fn hull_ms(&self, other: &Span) -> i64 {
        self.end_ms.max(other.end_ms) - self.start_ms.min(other.start_ms)
    }

    /// Temporal IoU. Numerator and denominator are exact integers, so the
    /// result is the correctly rounded quotient.
    pub fn iou(&self, other: &Span) -> f64 {
        let inter = self.intersection_ms(other);
        if inter == 0 {
            return 0.0;
        }
        inter as f64 / self.hull_ms(other) as f64
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start_secs(), self.end_secs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(a: i64, b: i64) -> Span {
        Span::new(a, b).unwrap()
    }

    #[test]
    fn iou_of_half_overlapping_windows() {
        assert_eq!(s(0, 20_000).iou(&s(10_000, 30_000)), 1.0 / 3.0);
    }

    #[test]
    fn touching_spans_do_not_overlap() {
        assert_eq!(s(0, 20_000).iou(&s(20_000, 40_000)), 0.0);
    }

    #[test]
    fn rejects_bad_spans() {
        assert!(Span::new(5, 5).is_err());
        assert!(Span::new(-1, 5).is_err());
        assert!(Span::from_secs(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn seconds_round_to_millis() {
        let sp = Span::from_secs(1.2345, 2.0).unwrap();
        assert_eq!(sp.start_ms, 1235);
        assert_eq!(sp.end_ms, 2000);
    }

    proptest! {
        #[test]
        fn iou_properties(a in 0i64..1000, la in 1i64..500, b in 0i64..1000, lb in 1i64..500) {
            let x = s(a, a + la);
            let y = s(b, b + lb);
            let v = x.iou(&y);
            prop_assert_eq!(v, y.iou(&x));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 1.0, x == y);
            prop_assert_eq!(v == 0.0, x.end_ms <= y.start_ms || y.end_ms <= x.start_ms);
        }
    }
}

use crate::corpus::span::{secs_to_ms, Span};
use crate::error::{Error, Result};

/// Sliding-window segmentation in milliseconds.
///
/// Full windows start at `0, stride, 2*stride, ...` while `start + window <= duration`.
/// A single truncated tail `[start, duration)` follows iff its length is at least
/// half a window and it reaches past the end of the last full window.
pub fn segment_video_ms(duration_ms: i64, window_ms: i64, stride_ms: i64) -> Result<Vec<Span>> {
    if duration_ms <= 0 {
        return Err(Error::InvalidConfig(format!("duration must be positive, got {duration_ms} ms")));
    }
    if window_ms <= 0 || stride_ms <= 0 {
        return Err(Error::InvalidConfig("window and stride must be positive".into()));
    }
    if stride_ms > window_ms {
        return Err(Error::InvalidConfig(format!(
            "stride {stride_ms} ms exceeds window {window_ms} ms"
        )));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + window_ms <= duration_ms {
        out.push(Span { start_ms: start, end_ms: start + window_ms });
        start += stride_ms;
    }
    let covered = out.last().map_or(0, |s: &Span| s.end_ms);
    let rest = duration_ms - start;
    if duration_ms > covered && 2 * rest >= window_ms {
        out.push(Span { start_ms: start, end_ms: duration_ms });
    }
    Ok(out)
}

/// Seconds front-end to [`segment_video_ms`].
pub fn segment_video(duration: f64, window: f64, stride: f64) -> Result<Vec<Span>> {
    let conv = |v: f64, what: &str| {
        if !v.is_finite() || v <= 0.0 {
            Err(Error::InvalidConfig(format!("{what} must be positive, got {v}")))
        } else {
            secs_to_ms(v)
        }
    };
    segment_video_ms(conv(duration, "duration")?, conv(window, "window")?, conv(stride, "stride")?)
}

/// Number of full windows, `floor((D - W) / S) + 1` for `D >= W`.
pub fn full_window_count(duration_ms: i64, window_ms: i64, stride_ms: i64) -> usize {
    if duration_ms < window_ms {
        0
    } else {
        ((duration_ms - window_ms) / stride_ms + 1) as usize
    }
}

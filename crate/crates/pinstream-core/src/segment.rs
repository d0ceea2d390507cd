//! Throw segmentation: aligning the wrist and leg streams onto one clock,
//! finding throw intervals from the swing angle with a hysteresis rule, and
//! partitioning each throw into per-stride phases.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{AccelStream, GaitProfile};
use crate::quat::{SwingAngleSeries, TWO_PI};

/// Swing-angle and leg-accel pair resampled onto a shared uniform grid.
#[derive(Debug, Clone)]
pub struct AlignedStreams {
    pub swing: SwingAngleSeries,
    pub leg: AccelStream,
}

fn nearest_idx(t: &[f64], target: f64) -> usize {
    let mut lo = t.partition_point(|&v| v < target);
    if lo == t.len() {
        lo = t.len() - 1;
    }
    if lo > 0 && (target - t[lo - 1]).abs() <= (t[lo] - target).abs() {
        lo - 1
    } else {
        lo
    }
}

/// Crops both streams to their common time window and samples each at the
/// nearest timestamp onto a uniform `fs_hz` grid anchored at the window start.
/// Values are taken as-is (no interpolation). Residual per-point skew beyond
/// `max_skew_ms` is an error; an empty overlap is `NoCommonWindow`.
pub fn synchronize(
    swing: &SwingAngleSeries,
    leg: &AccelStream,
    fs_hz: f64,
    max_skew_ms: f64,
) -> Result<AlignedStreams> {
    if swing.is_empty() || leg.is_empty() {
        return Err(Error::NoCommonWindow);
    }
    let start = swing.t_ms[0].max(leg.t_ms[0]);
    let end = swing.t_ms[swing.len() - 1].min(leg.t_ms[leg.len() - 1]);
    if end < start {
        return Err(Error::NoCommonWindow);
    }
    let step = 1000.0 / fs_hz;
    let n = ((end - start) / step).floor() as usize + 1;
    let mut t_ms = Vec::with_capacity(n);
    let mut angle = Vec::with_capacity(n);
    let mut accel = Vec::with_capacity(n);
    for k in 0..n {
        let tg = start + k as f64 * step;
        let si = nearest_idx(&swing.t_ms, tg);
        let li = nearest_idx(&leg.t_ms, tg);
        for &skew in &[(swing.t_ms[si] - tg).abs(), (leg.t_ms[li] - tg).abs()] {
            if skew > max_skew_ms {
                return Err(Error::ClockSkew { skew_ms: skew, max_ms: max_skew_ms });
            }
        }
        t_ms.push(tg);
        angle.push(swing.angle[si]);
        accel.push(leg.accel[li]);
    }
    Ok(AlignedStreams {
        swing: SwingAngleSeries::new(t_ms.clone(), angle)?,
        leg: AccelStream::new(t_ms, accel)?,
    })
}

/// Angular distance from the rest pose; wrapped values just below 2π are as
/// close to rest as small positives.
fn baseline_distance(angle: f64) -> f64 {
    angle.min(TWO_PI - angle)
}

/// Pre-roll kept before a throw's first out-of-band sample. The first gait
/// notch sits near the swing onset, and the velocity filter needs that much
/// honest plateau ahead of it; a tight crop would reflect the notch into the
/// filter's padding and distort the first stride's velocity.
const LEAD_PAD_S: f64 = 1.0;

/// Incremental hysteresis detector over a swing-angle sample stream.
///
/// A throw opens once the angle stays at least `theta_on` away from the rest
/// pose for `t_on` and closes once it stays inside that band for `t_off`; the
/// emitted range starts [`LEAD_PAD_S`] before the first out-of-band sample
/// and ends one `t_on` dwell after the last. Lookback is O(1): only dwell
/// counters and the candidate boundary indices are kept, so feeding samples
/// one at a time yields exactly the batch result.
#[derive(Debug, Clone)]
pub struct ThrowBoundDetector {
    theta_on: f64,
    on_samples: usize,
    off_samples: usize,
    lead_pad: usize,
    tail_pad: usize,
    idx: usize,
    out_since: Option<usize>,
    in_since: Option<usize>,
    open_start: Option<usize>,
    last_out: usize,
}

impl ThrowBoundDetector {
    pub fn new(theta_on: f64, t_on_ms: f64, t_off_ms: f64, fs_hz: f64) -> Self {
        let per = 1000.0 / fs_hz;
        let on_samples = (t_on_ms / per).round().max(1.0) as usize;
        ThrowBoundDetector {
            theta_on,
            on_samples,
            off_samples: (t_off_ms / per).round().max(1.0) as usize,
            lead_pad: on_samples.max((LEAD_PAD_S * fs_hz).round() as usize),
            tail_pad: on_samples,
            idx: 0,
            out_since: None,
            in_since: None,
            open_start: None,
            last_out: 0,
        }
    }

    fn emit(&self, start: usize, end_incl: usize, limit: usize) -> Range<usize> {
        let s = start.saturating_sub(self.lead_pad);
        let e = (end_incl + self.tail_pad + 1).min(limit);
        s..e
    }

    /// Feeds one sample; returns a completed throw range when one closes.
    pub fn push(&mut self, angle: f64) -> Option<Range<usize>> {
        let i = self.idx;
        self.idx += 1;
        let out_of_band = baseline_distance(angle) >= self.theta_on;
        let mut done = None;
        if out_of_band {
            self.in_since = None;
            self.last_out = i;
            let since = *self.out_since.get_or_insert(i);
            if self.open_start.is_none() && i + 1 - since >= self.on_samples {
                self.open_start = Some(since);
            }
        } else {
            self.out_since = None;
            if self.open_start.is_some() {
                let since = *self.in_since.get_or_insert(i);
                if i + 1 - since >= self.off_samples {
                    let start = self.open_start.take().unwrap();
                    done = Some(self.emit(start, self.last_out, self.idx));
                    self.in_since = None;
                }
            }
        }
        done
    }

    /// Closes a still-open throw at end of stream.
    pub fn flush(&mut self) -> Option<Range<usize>> {
        self.open_start
            .take()
            .map(|start| self.emit(start, self.last_out.max(start), self.idx))
    }
}

/// Batch throw detection; identical to feeding the series sample by sample.
pub fn detect_throw_bounds(
    swing: &SwingAngleSeries,
    theta_on: f64,
    t_on_ms: f64,
    t_off_ms: f64,
    fs_hz: f64,
) -> Vec<Range<usize>> {
    let mut det = ThrowBoundDetector::new(theta_on, t_on_ms, t_off_ms, fs_hz);
    let mut out = Vec::new();
    for &a in &swing.angle {
        if let Some(r) = det.push(a) {
            out.push(r);
        }
    }
    if let Some(r) = det.flush() {
        out.push(r);
    }
    out
}

/// One segmented throw, ready for quality and error analysis. Indices in
/// `phase_bounds` and in `gait` are relative to the segment, whose absolute
/// position in the aligned stream is `segment_range`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThrowRecord {
    pub swing: SwingAngleSeries,
    pub gait: GaitProfile,
    /// Per-stride phase windows [IS..=IC], half-open ranges into the segment.
    pub phase_bounds: Vec<Range<usize>>,
    pub segment_range: Range<usize>,
}

pub const FIVE_STEP_STRIDES: usize = 3;

/// Builds the per-phase partition of a segmented throw: one phase per stride
/// of the five-step approach. A stride count other than three does not match
/// the style and is rejected.
pub fn partition_phases(
    swing: SwingAngleSeries,
    gait: GaitProfile,
    segment_range: Range<usize>,
) -> Result<ThrowRecord> {
    if gait.strides.len() != FIVE_STEP_STRIDES {
        return Err(Error::StyleMismatch {
            style: "five-step".into(),
            expected: FIVE_STEP_STRIDES,
            found: gait.strides.len(),
        });
    }
    let phase_bounds = gait
        .strides
        .iter()
        .map(|s| s.is_idx..s.ic_idx + 1)
        .collect::<Vec<_>>();
    for b in &phase_bounds {
        if b.end > swing.len() {
            return Err(Error::Internal("phase bound outside segment".into()));
        }
    }
    Ok(ThrowRecord { swing, gait, phase_bounds, segment_range })
}

impl ThrowRecord {
    /// Swing angles of phase `k`, re-centered for distance computations.
    pub fn phase_angles(&self, k: usize, unwrap_margin: f64) -> Vec<f64> {
        let b = &self.phase_bounds[k];
        crate::quat::centered_angles(&self.swing.angle[b.start..b.end], unwrap_margin)
    }

    /// Whole-segment swing angles, re-centered.
    pub fn centered_swing(&self, unwrap_margin: f64) -> Vec<f64> {
        crate::quat::centered_angles(&self.swing.angle, unwrap_margin)
    }
}

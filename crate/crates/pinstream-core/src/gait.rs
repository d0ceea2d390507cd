//! Gait analysis of the non-bowling leg: acceleration magnitude, zero-phase
//! high-pass filtering, stride/event detection on prominent magnitude minima
//! and per-stride velocity by trapezoidal integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamped 3-axis accelerometer trace (m/s²), nominally uniform rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccelStream {
    pub t_ms: Vec<f64>,
    pub accel: Vec<[f64; 3]>,
}

impl AccelStream {
    pub fn new(t_ms: Vec<f64>, accel: Vec<[f64; 3]>) -> Result<Self> {
        if t_ms.len() != accel.len() {
            return Err(Error::DimensionMismatch { left: t_ms.len(), right: accel.len() });
        }
        for (i, a) in accel.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::CorruptSample { index: i, reason: "non-finite acceleration".into() });
            }
        }
        for i in 1..t_ms.len() {
            if t_ms[i] <= t_ms[i - 1] {
                return Err(Error::CorruptSample {
                    index: i,
                    reason: "timestamps not strictly increasing".into(),
                });
            }
        }
        Ok(AccelStream { t_ms, accel })
    }

    pub fn len(&self) -> usize {
        self.accel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accel.is_empty()
    }

    /// Rejects streams whose sample spacing strays more than `tol_frac` of the
    /// nominal period from it.
    pub fn validate_rate(&self, fs_hz: f64, tol_frac: f64) -> Result<()> {
        let nominal = 1000.0 / fs_hz;
        for i in 1..self.t_ms.len() {
            let dt = self.t_ms[i] - self.t_ms[i - 1];
            if (dt - nominal).abs() > tol_frac * nominal {
                return Err(Error::CorruptSample {
                    index: i,
                    reason: format!("sample spacing {dt:.3} ms vs nominal {nominal:.3} ms"),
                });
            }
        }
        Ok(())
    }
}

/// Per-sample Euclidean norm of the acceleration.
pub fn magnitude(a: &AccelStream) -> Vec<f64> {
    a.accel
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        .collect()
}

/// Second-order high-pass Butterworth biquad from the bilinear transform with
/// frequency prewarping. Returns (b, a) with a0 normalized to 1.
fn butter_highpass(fc_hz: f64, fs_hz: f64) -> ([f64; 3], [f64; 2]) {
    let k = (std::f64::consts::PI * fc_hz / fs_hz).tan();
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let norm = 1.0 / (1.0 + k / q + k * k);
    let b = [norm, -2.0 * norm, norm];
    let a = [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm];
    (b, a)
}

/// One biquad pass, direct form II transposed, with initial state `zi`
/// (already scaled by the caller).
fn biquad(x: &[f64], b: [f64; 3], a: [f64; 2], zi: [f64; 2]) -> Vec<f64> {
    let mut z1 = zi[0];
    let mut z2 = zi[1];
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + z1;
        z1 = b[1] * xn - a[0] * yn + z2;
        z2 = b[2] * xn - a[1] * yn;
        y.push(yn);
    }
    y
}

/// Steady-state biquad state for a unit step input, so a constant signal
/// produces its steady output from the first sample.
fn step_state(b: [f64; 3], a: [f64; 2]) -> [f64; 2] {
    let g = (b[0] + b[1] + b[2]) / (1.0 + a[0] + a[1]);
    [g - b[0], b[2] - a[1] * g]
}

const FILTER_ORDER: usize = 2;

/// Zero-phase high-pass: one forward and one backward Butterworth pass, edges
/// handled by odd-reflection padding of 3× the filter order and step-matched
/// initial conditions. The net magnitude response is the squared single-pass
/// response with zero phase shift.
pub fn highpass_zero_phase(x: &[f64], fc_hz: f64, fs_hz: f64) -> Result<Vec<f64>> {
    let pad = 3 * FILTER_ORDER;
    if x.len() <= pad {
        return Err(Error::InsufficientSamples { need: pad, got: x.len() });
    }
    let (b, a) = butter_highpass(fc_hz, fs_hz);
    let zi = step_state(b, a);

    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let fwd = biquad(&ext, b, a, [zi[0] * ext[0], zi[1] * ext[0]]);
    let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
    rev = biquad(&rev, b, a, [zi[0] * rev[0], zi[1] * rev[0]]);
    rev.reverse();
    Ok(rev[pad..pad + n].to_vec())
}

/// Half-width of the centered box average applied before event detection,
/// seconds. 45 ms (2 samples at 50 Hz) is short against the ~60 ms contact
/// notches, so they stay resolved, while sample noise drops by sqrt(window).
/// Without it, the noise maximum of each stance plateau forms a local peak
/// whose prominence includes a full notch depth, mimicking a swing lobe.
const SMOOTH_HALF_S: f64 = 0.045;

/// Centered moving average with the half-width shrunk near the edges so the
/// window always stays symmetric. Zero phase: extrema of symmetric features
/// keep their sample position exactly.
fn boxcar_smooth(x: &[f64], half: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let h = half.min(i).min(x.len() - 1 - i);
            x[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect()
}

/// One stride of the non-bowling leg. All indices are positions in the
/// segment the profile was computed on; `start <= is <= mid_swing <= ic <= end`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stride {
    pub start_idx: usize,
    /// Initial swing: prominent magnitude minimum where the foot leaves the ground.
    pub is_idx: usize,
    /// Magnitude peak in mid swing.
    pub mid_swing_idx: usize,
    /// Initial contact: prominent minimum where the foot strikes again.
    pub ic_idx: usize,
    pub end_idx: usize,
}

/// Prominence of the local maximum at `idx`: height above the higher of the
/// two lowest saddles toward the nearest samples at least as high on each
/// side (window edges count as boundaries). Each scan may step across one
/// equal-height sample before it breaks: a symmetric crest sampled half a
/// period off the grid renders as a two-sample tie and must keep its full
/// prominence, while flat runs of three or more equal samples still score
/// zero, so the level stretches between stride notches never rank as peaks.
fn peak_prominence(x: &[f64], idx: usize) -> f64 {
    let h = x[idx];
    let mut left_min = h;
    let mut ties = 0;
    let mut i = idx;
    while i > 0 {
        i -= 1;
        if x[i] > h || (x[i] == h && ties > 0) {
            break;
        }
        if x[i] == h {
            ties += 1;
        } else if x[i] < left_min {
            left_min = x[i];
        }
    }
    let mut right_min = h;
    ties = 0;
    let mut j = idx;
    while j + 1 < x.len() {
        j += 1;
        if x[j] > h || (x[j] == h && ties > 0) {
            break;
        }
        if x[j] == h {
            ties += 1;
        } else if x[j] < right_min {
            right_min = x[j];
        }
    }
    h - left_min.max(right_min)
}

/// Local maxima with prominence ≥ `min_prominence`, thinned so that no two
/// survivors are closer than `min_separation` samples (higher peak wins).
fn prominent_maxima(x: &[f64], min_prominence: f64, min_separation: usize) -> Vec<usize> {
    let mut cands = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        // Plateau-tolerant local max: strictly above the previous sample and
        // at least as high as the next.
        if x[i] > x[i - 1] && x[i] >= x[i + 1] && peak_prominence(x, i) >= min_prominence {
            cands.push(i);
        }
    }
    // Highest-first thinning keeps the dominant peak of each burst.
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&p, &q| x[cands[q]].partial_cmp(&x[cands[p]]).unwrap());
    let mut kept: Vec<usize> = Vec::new();
    for o in order {
        let i = cands[o];
        if kept.iter().all(|&k| k.abs_diff(i) >= min_separation.max(1)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Index of the smallest value in `x[lo..hi]`; on ties the index closest to
/// `anchor` wins, so flat valleys resolve toward the swing they delimit.
fn argmin_near(x: &[f64], lo: usize, hi: usize, anchor: usize) -> usize {
    let mut best = lo;
    for i in lo..hi {
        let better = x[i] < x[best]
            || (x[i] == x[best] && i.abs_diff(anchor) < best.abs_diff(anchor));
        if better {
            best = i;
        }
    }
    best
}

/// Detects strides on the acceleration magnitude of one throw segment.
///
/// Mid-swing peaks are the prominent local maxima of a box-smoothed copy of
/// the magnitude (smoothing keeps stance-plateau noise from ranking as
/// peaks). Each stride's IS/IC events are then the raw-magnitude minima
/// flanking its peak: the raw notches are sharp, so their minima land on the
/// sample nearest the true contact instant, which smoothing can displace.
/// `min_separation_s` applies between mid-swing peaks.
pub fn detect_strides(
    mag: &[f64],
    fs_hz: f64,
    min_prominence: f64,
    min_separation_s: f64,
) -> Result<Vec<Stride>> {
    if mag.len() < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: mag.len() });
    }
    let smooth = boxcar_smooth(mag, (SMOOTH_HALF_S * fs_hz) as usize);
    let sep = (min_separation_s * fs_hz).round() as usize;
    let peaks = prominent_maxima(&smooth, min_prominence, sep);
    if peaks.is_empty() {
        return Err(Error::NoStrides);
    }
    let mut strides = Vec::with_capacity(peaks.len());
    for (k, &p) in peaks.iter().enumerate() {
        // Each inter-peak gap holds two minima (this stride's IC, the next
        // stride's IS); splitting the gap at its midpoint keeps each search
        // on its own side so noise cannot assign both events to one notch.
        let lo = if k == 0 { 0 } else { (peaks[k - 1] + p) / 2 + 1 };
        let hi = if k + 1 < peaks.len() { (p + peaks[k + 1]) / 2 + 1 } else { mag.len() };
        let is_idx = argmin_near(mag, lo, p + 1, p);
        let ic_idx = argmin_near(mag, p, hi, p);
        strides.push(Stride {
            start_idx: is_idx,
            is_idx,
            mid_swing_idx: p,
            ic_idx,
            end_idx: ic_idx,
        });
    }
    for w in strides.windows(2) {
        if w[1].is_idx <= w[0].ic_idx {
            return Err(Error::Internal("strides overlap".into()));
        }
    }
    Ok(strides)
}

/// Velocity over one stride: cumulative trapezoid of the filtered magnitude,
/// re-zeroed at the stride start. Returns one value per sample in
/// `[is_idx, ic_idx]`.
pub fn stride_velocity(filtered: &[f64], stride: &Stride, fs_hz: f64) -> Vec<f64> {
    let dt = 1.0 / fs_hz;
    let mut v = Vec::with_capacity(stride.ic_idx - stride.is_idx + 1);
    let mut acc = 0.0;
    v.push(0.0);
    for i in stride.is_idx + 1..=stride.ic_idx {
        acc += 0.5 * (filtered[i - 1] + filtered[i]) * dt;
        v.push(acc);
    }
    v
}

/// Gait summary of one throw segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaitProfile {
    pub strides: Vec<Stride>,
    /// Raw acceleration magnitude of the segment.
    pub mag: Vec<f64>,
    /// High-passed magnitude used for velocity integration.
    pub filtered: Vec<f64>,
    /// Per-stride velocity traces over [IS, IC].
    pub velocity: Vec<Vec<f64>>,
    pub avg_velocity: Vec<f64>,
    /// t(IC_k) − t(IS_k), seconds.
    pub swing_period: Vec<f64>,
    /// t(IS_{k+1}) − t(IC_k); the final stride has no successor, so its value
    /// runs to the end of the segment.
    pub stance_period: Vec<f64>,
    pub ratio: Vec<f64>,
}

/// Full gait pipeline on one throw segment: magnitude, stride events on the
/// raw magnitude, zero-phase high-pass, per-stride velocities and timing.
pub fn gait_profile(
    a: &AccelStream,
    fs_hz: f64,
    fc_hz: f64,
    min_prominence: f64,
    min_separation_s: f64,
) -> Result<GaitProfile> {
    let mag = magnitude(a);
    let strides = detect_strides(&mag, fs_hz, min_prominence, min_separation_s)?;
    let filtered = highpass_zero_phase(&mag, fc_hz, fs_hz)?;

    let mut velocity = Vec::with_capacity(strides.len());
    let mut avg_velocity = Vec::with_capacity(strides.len());
    let mut swing_period = Vec::with_capacity(strides.len());
    let mut stance_period = Vec::with_capacity(strides.len());
    let mut ratio = Vec::with_capacity(strides.len());
    for (k, s) in strides.iter().enumerate() {
        let v = stride_velocity(&filtered, s, fs_hz);
        avg_velocity.push(v.iter().sum::<f64>() / v.len() as f64);
        velocity.push(v);
        let sw = (a.t_ms[s.ic_idx] - a.t_ms[s.is_idx]) / 1000.0;
        let st_end = if k + 1 < strides.len() {
            a.t_ms[strides[k + 1].is_idx]
        } else {
            a.t_ms[a.t_ms.len() - 1]
        };
        let st = (st_end - a.t_ms[s.ic_idx]) / 1000.0;
        if sw <= 0.0 || st <= 0.0 {
            return Err(Error::Internal(format!(
                "non-positive stride period: swing {sw:.4}s stance {st:.4}s"
            )));
        }
        swing_period.push(sw);
        stance_period.push(st);
        ratio.push(sw / st);
    }
    Ok(GaitProfile {
        strides,
        mag,
        filtered,
        velocity,
        avg_velocity,
        swing_period,
        stance_period,
        ratio,
    })
}

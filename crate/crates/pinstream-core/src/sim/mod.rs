//! Synthetic five-step throw generator: scripted swing-angle trajectories and
//! leg acceleration bursts rendered into the same sensor streams the pipeline
//! consumes, together with the ground truth the script implies. Serves as the
//! oracle corpus for tests and demos.

pub mod corpus;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SkillLabel;
use crate::gait::{highpass_zero_phase, AccelStream};
use crate::quat::Quaternion;

pub const GRAVITY: f64 = 9.81;

/// Angle trajectory control point; the trajectory eases between consecutive
/// keyframes with zero slope at each one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t_s: f64,
    pub angle: f64,
}

/// Scripted gait events of one stride of the non-bowling leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrideEvents {
    pub is_s: f64,
    pub ic_s: f64,
}

impl StrideEvents {
    pub fn mid_s(&self) -> f64 {
        0.5 * (self.is_s + self.ic_s)
    }
}

/// Localized raised-cosine addition to the swing-angle trajectory; the
/// mechanism behind contact-desync injections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleBump {
    pub center_s: f64,
    pub halfwidth_s: f64,
    pub amp_rad: f64,
}

/// Ground-truth labels of what a script has injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorLabels {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    pub e4: bool,
    /// Phase index (0-based) carrying an injected timing warp, if any.
    pub timing_phase: Option<usize>,
}

impl ErrorLabels {
    pub fn any(&self) -> bool {
        self.e1 || self.e2 || self.e3 || self.e4
    }
}

/// Complete recipe for one synthetic throw. Everything the renderer needs is
/// explicit here, so equal scripts yield byte-equal streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThrowScript {
    pub skill: SkillLabel,
    pub athlete_id: String,
    pub fs_hz: f64,
    pub duration_s: f64,
    /// Ordered non-bowling-leg strides; IS < IC < next IS.
    pub strides: Vec<StrideEvents>,
    /// Swing-angle keyframes, strictly increasing in time.
    pub keyframes: Vec<Keyframe>,
    pub angle_bumps: Vec<AngleBump>,
    /// Shift of the arm trajectory relative to the gait events.
    pub arm_lag_ms: f64,
    /// Rest orientation: yaw about vertical, then pitch about the flexion
    /// axis. |heading| must stay well below π/2 or the swing sign convention
    /// flips.
    pub baseline_heading: f64,
    pub baseline_pitch: f64,
    /// Mid-swing acceleration lobe height, m/s²; gait-speed changes scale it.
    pub lobe_amp: f64,
    /// IS/IC notch depth, m/s².
    pub notch_amp: f64,
    pub lobe_halfwidth_s: f64,
    pub notch_halfwidth_s: f64,
    pub angle_noise_rms: f64,
    pub accel_noise_rms: f64,
    pub twist_noise_rms: f64,
    pub labels: ErrorLabels,
    pub seed: u64,
}

impl ThrowScript {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs_hz.is_finite() && self.fs_hz > 0.0)
            || !(self.duration_s.is_finite() && self.duration_s > 0.0)
        {
            return Err(Error::InvalidInput("fs and duration must be positive".into()));
        }
        if self.strides.is_empty() || self.keyframes.len() < 2 {
            return Err(Error::InvalidInput("script needs strides and keyframes".into()));
        }
        let mut prev_ic = f64::NEG_INFINITY;
        for s in &self.strides {
            if !(prev_ic < s.is_s && s.is_s < s.ic_s && s.ic_s < self.duration_s) {
                return Err(Error::InvalidInput("stride events out of order".into()));
            }
            prev_ic = s.ic_s;
        }
        for w in self.keyframes.windows(2) {
            if w[1].t_s <= w[0].t_s {
                return Err(Error::InvalidInput("keyframes not strictly increasing".into()));
            }
        }
        for v in [self.angle_noise_rms, self.accel_noise_rms, self.twist_noise_rms] {
            if v < 0.0 {
                return Err(Error::InvalidInput("noise levels must be nonnegative".into()));
            }
        }
        if self.baseline_heading.abs() > 1.4 {
            return Err(Error::InvalidInput("baseline heading too far from forward".into()));
        }
        Ok(())
    }

    /// Clean swing angle at time `t_s`: eased keyframe trajectory shifted by
    /// the arm lag, plus any injected bumps.
    pub fn angle_at(&self, t_s: f64) -> f64 {
        let mut a = ease(&self.keyframes, t_s - self.arm_lag_ms / 1000.0);
        for b in &self.angle_bumps {
            a += bump(b.center_s, b.halfwidth_s, t_s) * b.amp_rad;
        }
        a
    }

    /// Clean acceleration-magnitude deviation from gravity at time `t_s`:
    /// notches at IS/IC and a lobe at mid swing, per stride.
    pub fn accel_deviation_at(&self, t_s: f64) -> f64 {
        let mut d = 0.0;
        for s in &self.strides {
            d += self.lobe_amp * bump(s.mid_s(), self.lobe_halfwidth_s, t_s)
                - self.notch_amp * bump(s.is_s, self.notch_halfwidth_s, t_s)
                - self.notch_amp * bump(s.ic_s, self.notch_halfwidth_s, t_s);
        }
        d
    }

    pub fn baseline(&self) -> Quaternion {
        Quaternion::from_axis_angle([0.0, 1.0, 0.0], self.baseline_heading)
            .hamilton(&Quaternion::from_axis_angle([1.0, 0.0, 0.0], self.baseline_pitch))
    }

    /// Scales the gait intensity; the mechanism behind E1.
    pub fn inject_speed_scale(&mut self, scale: f64) {
        self.lobe_amp *= scale;
        self.labels.e1 = true;
    }

    /// Shifts the backswing-peak keyframe; the mechanism behind E2. The peak
    /// is the highest keyframe.
    pub fn inject_backswing_shift(&mut self, delta_rad: f64) {
        if let Some(k) = self
            .keyframes
            .iter_mut()
            .max_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap())
        {
            k.angle += delta_rad;
        }
        self.labels.e2 = true;
    }

    /// Adds a contact-desync bump at stride `k` (0-based); E3 when `k` is the
    /// final stride, E4 otherwise.
    pub fn inject_contact_shift(&mut self, k: usize, delta_rad: f64) {
        let ic = self.strides[k].ic_s;
        self.angle_bumps.push(AngleBump { center_s: ic, halfwidth_s: 0.15, amp_rad: delta_rad });
        if k + 1 == self.strides.len() {
            self.labels.e3 = true;
        } else {
            self.labels.e4 = true;
        }
    }

    /// Warps the trajectory inside phase `k` by moving its via keyframe in
    /// time; the quality-protocol timing error. The via keyframe is the one
    /// scripted at the stride's initial swing.
    pub fn inject_timing_warp(&mut self, k: usize, shift_s: f64) -> Result<()> {
        let is = self.strides[k].is_s;
        let idx = self
            .keyframes
            .iter()
            .position(|f| (f.t_s - is).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidInput(format!("no via keyframe at stride {k}")))?;
        let lo = self.keyframes[idx - 1].t_s;
        let hi = self.keyframes[idx + 1].t_s;
        let t = (is + shift_s).clamp(lo + 0.04, hi - 0.04);
        self.keyframes[idx].t_s = t;
        self.labels.timing_phase = Some(k);
        Ok(())
    }
}

/// Raised-cosine window: 1 at `center`, 0 outside `center ± halfwidth`.
pub fn bump(center_s: f64, halfwidth_s: f64, t_s: f64) -> f64 {
    let u = (t_s - center_s) / halfwidth_s;
    if u.abs() >= 1.0 {
        0.0
    } else {
        let c = (0.5 * std::f64::consts::PI * u).cos();
        c * c
    }
}

/// Piecewise cosine easing through keyframes; constant outside the scripted
/// range and zero-slope at every keyframe, so values sampled exactly at a
/// keyframe are robust to small timing shifts.
pub fn ease(keyframes: &[Keyframe], t_s: f64) -> f64 {
    let i = keyframes.partition_point(|k| k.t_s <= t_s);
    if i == 0 {
        return keyframes[0].angle;
    }
    if i == keyframes.len() {
        return keyframes[i - 1].angle;
    }
    let (a, b) = (&keyframes[i - 1], &keyframes[i]);
    let u = (t_s - a.t_s) / (b.t_s - a.t_s);
    a.angle + (b.angle - a.angle) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos())
}

/// Everything the script implies about its own output, computed from the
/// clean (pre-noise) signals and the scripted event times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub skill: SkillLabel,
    pub athlete_id: String,
    /// First/last instant the clean swing angle is ≥ 0.26 rad from rest; the
    /// interval the default segmenter should find.
    pub throw_span_s: (f64, f64),
    pub events: Vec<StrideEvents>,
    /// Per-stride mean of the cumulative trapezoid of the high-passed clean
    /// magnitude over [IS, IC]; stride velocity is defined through that
    /// filter, so its ground truth is too.
    pub avg_velocity: Vec<f64>,
    pub a_max: f64,
    /// Clean swing angle at each IC.
    pub a_contact: Vec<f64>,
    pub swing_period: Vec<f64>,
    pub stance_period: Vec<f64>,
    pub labels: ErrorLabels,
    pub seed: u64,
}

/// One rendered throw: wrist quaternion stream, leg accelerometer stream, the
/// rest-pose baseline and the script's ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimThrow {
    pub t_ms: Vec<f64>,
    pub wrist: Vec<Quaternion>,
    pub baseline: Quaternion,
    pub leg: AccelStream,
    pub truth: GroundTruth,
}

const REST_BAND: f64 = 0.26;

/// Renders a script into sensor streams. Noise is seeded from the script, so
/// equal scripts produce byte-equal output; zero noise levels consume the
/// same random stream and yield the clean signals exactly.
pub fn synthesize(script: &ThrowScript) -> Result<SimThrow> {
    script.validate()?;
    let fs = script.fs_hz;
    let step_ms = 1000.0 / fs;
    let n = (script.duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut gauss = |rms: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        z * rms
    };

    let baseline = script.baseline();
    let mut t_ms = Vec::with_capacity(n);
    let mut wrist = Vec::with_capacity(n);
    let mut accel = Vec::with_capacity(n);
    let mut clean_angle = Vec::with_capacity(n);
    let mut clean_mag = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        t_ms.push(i as f64 * step_ms);

        let omega = script.angle_at(t);
        clean_angle.push(omega);
        let noisy = omega + gauss(script.angle_noise_rms);
        let twist = gauss(script.twist_noise_rms);
        let q = baseline
            .hamilton(&Quaternion::from_axis_angle([1.0, 0.0, 0.0], noisy))
            .hamilton(&Quaternion::from_axis_angle([0.0, 1.0, 0.0], twist));
        wrist.push(q);

        let d = script.accel_deviation_at(t);
        clean_mag.push(GRAVITY + d);
        accel.push([
            gauss(script.accel_noise_rms),
            gauss(script.accel_noise_rms),
            GRAVITY + d + gauss(script.accel_noise_rms),
        ]);
    }

    let leg = AccelStream::new(t_ms.clone(), accel)?;
    let truth = ground_truth(script, &clean_angle, &clean_mag, fs)?;
    Ok(SimThrow { t_ms, wrist, baseline, leg, truth })
}

fn ground_truth(
    script: &ThrowScript,
    clean_angle: &[f64],
    clean_mag: &[f64],
    fs: f64,
) -> Result<GroundTruth> {
    let out_of_band = |a: f64| a.abs().min((std::f64::consts::TAU - a).abs()) >= REST_BAND;
    let first = clean_angle.iter().position(|&a| out_of_band(a));
    let last = clean_angle.iter().rposition(|&a| out_of_band(a));
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidInput("scripted trajectory never leaves rest".into())),
    };
    let span = (first as f64 / fs, last as f64 / fs);

    let filtered = highpass_zero_phase(clean_mag, 1.0, fs)?;
    let dt = 1.0 / fs;
    let mut avg_velocity = Vec::with_capacity(script.strides.len());
    let mut a_contact = Vec::with_capacity(script.strides.len());
    let mut swing_period = Vec::with_capacity(script.strides.len());
    let mut stance_period = Vec::with_capacity(script.strides.len());
    for (k, s) in script.strides.iter().enumerate() {
        let is_i = (s.is_s * fs).round() as usize;
        let ic_i = (s.ic_s * fs).round() as usize;
        if ic_i >= filtered.len() {
            return Err(Error::InvalidInput("stride events past end of stream".into()));
        }
        let mut acc = 0.0;
        let mut sum = 0.0;
        for i in is_i + 1..=ic_i {
            acc += 0.5 * (filtered[i - 1] + filtered[i]) * dt;
            sum += acc;
        }
        avg_velocity.push(sum / (ic_i - is_i + 1) as f64);
        a_contact.push(script.angle_at(s.ic_s));
        swing_period.push(s.ic_s - s.is_s);
        let next = script.strides.get(k + 1).map(|n| n.is_s).unwrap_or(span.1);
        stance_period.push(next - s.ic_s);
    }
    let a_max = clean_angle.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    Ok(GroundTruth {
        skill: script.skill,
        athlete_id: script.athlete_id.clone(),
        throw_span_s: span,
        events: script.strides.clone(),
        avg_velocity,
        a_max,
        a_contact,
        swing_period,
        stance_period,
        labels: script.labels,
        seed: script.seed,
    })
}

/// SplitMix64 step; used to derive independent per-throw seeds from one
/// corpus seed so parallel generation order cannot matter.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, athlete: u64, throw: u64) -> u64 {
    splitmix64(splitmix64(base.wrapping_add(athlete)).wrapping_add(throw))
}

/// Fixed hand-written script with clean keyframes and known events; shared
/// by unit tests across modules.
#[cfg(test)]
pub(crate) fn test_script() -> ThrowScript {
    ThrowScript {
        skill: SkillLabel::Expert,
        athlete_id: "t0".into(),
        fs_hz: 50.0,
        duration_s: 8.0,
        strides: vec![
            StrideEvents { is_s: 2.2, ic_s: 2.6 },
            StrideEvents { is_s: 3.2, ic_s: 3.6 },
            StrideEvents { is_s: 4.2, ic_s: 4.6 },
        ],
        keyframes: vec![
            Keyframe { t_s: 0.0, angle: 0.03 },
            Keyframe { t_s: 2.0, angle: 0.03 },
            Keyframe { t_s: 2.2, angle: 0.25 },
            Keyframe { t_s: 2.6, angle: 0.70 },
            Keyframe { t_s: 3.2, angle: 1.05 },
            Keyframe { t_s: 3.6, angle: 1.80 },
            Keyframe { t_s: 4.2, angle: 2.35 },
            Keyframe { t_s: 4.6, angle: 3.30 },
            Keyframe { t_s: 4.9, angle: 4.10 },
            Keyframe { t_s: 5.6, angle: 0.35 },
            Keyframe { t_s: 6.0, angle: 0.06 },
        ],
        angle_bumps: vec![],
        arm_lag_ms: 0.0,
        baseline_heading: 0.4,
        baseline_pitch: 0.08,
        lobe_amp: 12.0,
        notch_amp: 3.0,
        lobe_halfwidth_s: 0.14,
        notch_halfwidth_s: 0.06,
        angle_noise_rms: 0.0,
        accel_noise_rms: 0.0,
        twist_noise_rms: 0.0,
        labels: ErrorLabels::default(),
        seed: 11,
    }
}

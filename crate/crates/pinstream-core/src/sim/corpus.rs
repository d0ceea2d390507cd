//! Skill-conditioned corpus generation on top of the throw renderer: priors
//! per skill level, per-athlete biases, sampling around a canonical five-step
//! timeline, controlled perturbation for template/user protocols, and
//! deterministic parallel rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, splitmix64, synthesize, Keyframe, SimThrow, StrideEvents, ThrowScript};
use crate::config::SimConfig;
use crate::error::Result;
use crate::features::{SkillLabel, ALL_LABELS};

/// Fraction of the backswing peak reached at each stride's initial swing.
pub const VIA_RATIOS: [f64; 3] = [0.061, 0.256, 0.573];
/// Fraction of the backswing peak reached at each stride's initial contact.
pub const CONTACT_RATIOS: [f64; 3] = [0.171, 0.439, 0.805];

const REST_ANGLE: f64 = 0.03;
const FS: f64 = 50.0;
const DURATION: f64 = 8.0;
const FIRST_IS: f64 = 2.2;
const LOBE_BASE: f64 = 26.0;
const NOTCH_AMP: f64 = 3.0;
const LOBE_HALFWIDTH: f64 = 0.14;
const NOTCH_HALFWIDTH: f64 = 0.06;
/// Largest timing jitter ever applied to a single event; keeps every sampled
/// script strictly ordered without per-draw rejection.
const MAX_TIME_JITTER: f64 = 0.11;

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sd
}

fn time_jitter(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    gauss(rng, sd).clamp(-MAX_TIME_JITTER, MAX_TIME_JITTER)
}

fn angle_jitter(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    gauss(rng, sd).clamp(-0.2, 0.2)
}

/// Population parameters of one skill level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkillPrior {
    pub a_max_mean: f64,
    pub a_max_sd: f64,
    pub period_mean: f64,
    pub period_sd: f64,
    /// Gait intensity relative to the nominal lobe height.
    pub speed_mean: f64,
    pub speed_sd: f64,
    /// Per-keyframe swing-angle scatter, rad.
    pub angle_jitter: f64,
    /// Per-event timing scatter, s.
    pub event_jitter: f64,
    pub lag_sd_ms: f64,
    pub angle_noise_rms: f64,
    pub accel_noise_rms: f64,
    pub twist_noise_rms: f64,
}

pub fn skill_prior(label: SkillLabel) -> SkillPrior {
    match label {
        SkillLabel::Novice => SkillPrior {
            a_max_mean: 3.6,
            a_max_sd: 0.15,
            period_mean: 1.12,
            period_sd: 0.045,
            speed_mean: 0.8,
            speed_sd: 0.1,
            angle_jitter: 0.05,
            event_jitter: 0.05,
            lag_sd_ms: 30.0,
            angle_noise_rms: 0.02,
            accel_noise_rms: 0.45,
            twist_noise_rms: 0.02,
        },
        SkillLabel::Intermediate => SkillPrior {
            a_max_mean: 3.95,
            a_max_sd: 0.1,
            period_mean: 1.0,
            period_sd: 0.03,
            speed_mean: 1.0,
            speed_sd: 0.065,
            angle_jitter: 0.035,
            event_jitter: 0.03,
            lag_sd_ms: 20.0,
            angle_noise_rms: 0.015,
            accel_noise_rms: 0.35,
            twist_noise_rms: 0.015,
        },
        SkillLabel::Expert => SkillPrior {
            a_max_mean: 4.25,
            a_max_sd: 0.06,
            period_mean: 0.92,
            period_sd: 0.02,
            speed_mean: 1.18,
            speed_sd: 0.045,
            angle_jitter: 0.02,
            event_jitter: 0.015,
            lag_sd_ms: 10.0,
            angle_noise_rms: 0.01,
            accel_noise_rms: 0.3,
            twist_noise_rms: 0.01,
        },
    }
}

/// Tight prior for coach recordings: the reference style the quality and
/// error-detection protocols measure against.
pub fn coach_prior() -> SkillPrior {
    SkillPrior {
        a_max_mean: 4.0,
        a_max_sd: 0.03,
        period_mean: 1.0,
        period_sd: 0.008,
        speed_mean: 1.0,
        speed_sd: 0.03,
        angle_jitter: 0.025,
        event_jitter: 0.008,
        lag_sd_ms: 8.0,
        angle_noise_rms: 0.01,
        accel_noise_rms: 0.3,
        twist_noise_rms: 0.01,
    }
}

fn prior_noise(p: &SkillPrior) -> (f64, f64, f64) {
    (p.angle_noise_rms, p.accel_noise_rms, p.twist_noise_rms)
}

/// Stable per-athlete offsets, small relative to the gaps between skill
/// priors so athletes cluster inside their class.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AthleteBias {
    pub a_max: f64,
    pub period: f64,
    pub speed: f64,
    pub lag_ms: f64,
}

pub fn sample_bias(rng: &mut ChaCha8Rng) -> AthleteBias {
    AthleteBias {
        a_max: gauss(rng, 0.06),
        period: gauss(rng, 0.02),
        speed: gauss(rng, 0.04),
        lag_ms: gauss(rng, 12.0),
    }
}

/// Structured description of one throw: gait events plus the swing keyframe
/// values at those events. Events and keyframes stay coupled here, so
/// perturbing a shape moves them together and the result is still a valid
/// five-step script.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptShape {
    pub a_max: f64,
    pub is_s: [f64; 3],
    pub ic_s: [f64; 3],
    pub via_angle: [f64; 3],
    pub contact_angle: [f64; 3],
    /// Backswing-peak delay after the final contact, s.
    pub peak_dt_s: f64,
    pub lobe_amp: f64,
    pub arm_lag_ms: f64,
    pub heading: f64,
    pub pitch: f64,
}

impl ScriptShape {
    pub fn to_script(
        &self,
        skill: SkillLabel,
        athlete_id: String,
        noise: (f64, f64, f64),
        seed: u64,
    ) -> ThrowScript {
        let peak_t = self.ic_s[2] + self.peak_dt_s;
        let mut keyframes = vec![
            Keyframe { t_s: 0.0, angle: REST_ANGLE },
            Keyframe { t_s: self.is_s[0] - 0.2, angle: REST_ANGLE },
        ];
        for k in 0..3 {
            keyframes.push(Keyframe { t_s: self.is_s[k], angle: self.via_angle[k] });
            keyframes.push(Keyframe { t_s: self.ic_s[k], angle: self.contact_angle[k] });
        }
        keyframes.push(Keyframe { t_s: peak_t, angle: self.a_max });
        keyframes.push(Keyframe { t_s: peak_t + 0.7, angle: 0.085 * self.a_max });
        keyframes.push(Keyframe { t_s: peak_t + 1.1, angle: 0.015 * self.a_max });
        ThrowScript {
            skill,
            athlete_id,
            fs_hz: FS,
            duration_s: DURATION,
            strides: (0..3)
                .map(|k| StrideEvents { is_s: self.is_s[k], ic_s: self.ic_s[k] })
                .collect(),
            keyframes,
            angle_bumps: vec![],
            arm_lag_ms: self.arm_lag_ms,
            baseline_heading: self.heading,
            baseline_pitch: self.pitch,
            lobe_amp: self.lobe_amp,
            notch_amp: NOTCH_AMP,
            lobe_halfwidth_s: LOBE_HALFWIDTH,
            notch_halfwidth_s: NOTCH_HALFWIDTH,
            angle_noise_rms: noise.0,
            accel_noise_rms: noise.1,
            twist_noise_rms: noise.2,
            labels: Default::default(),
            seed,
        }
    }
}

/// Snaps an event time to the sample grid. A contact notch centered between
/// two samples renders a half-sample tie whose noise-free argmin is
/// arbitrary, and a one-sample disagreement with the recorded truth moves
/// mean stride velocity by ~5%; the 20 ms snap is well inside every prior's
/// event jitter.
fn snap(t_s: f64) -> f64 {
    (t_s * FS).round() / FS
}

/// Draws a throw shape from a skill prior: the canonical timeline scaled by
/// the sampled stride period, keyframe angles as fixed fractions of the
/// sampled backswing peak, and independent jitter on every event and angle.
pub fn sample_shape(prior: &SkillPrior, bias: &AthleteBias, rng: &mut ChaCha8Rng) -> ScriptShape {
    let a_max = prior.a_max_mean + bias.a_max + gauss(rng, prior.a_max_sd);
    let period = (prior.period_mean + bias.period + gauss(rng, prior.period_sd)).clamp(0.75, 1.35);
    let speed = (prior.speed_mean + bias.speed + gauss(rng, prior.speed_sd)).max(0.4);
    let swing = 0.4 * period;
    let mut is_s = [0.0; 3];
    let mut ic_s = [0.0; 3];
    let mut via_angle = [0.0; 3];
    let mut contact_angle = [0.0; 3];
    for k in 0..3 {
        let base = FIRST_IS + k as f64 * period;
        is_s[k] = snap(base + time_jitter(rng, prior.event_jitter));
        ic_s[k] = snap(base + swing + time_jitter(rng, prior.event_jitter));
        via_angle[k] = (VIA_RATIOS[k] * a_max + angle_jitter(rng, prior.angle_jitter)).max(0.02);
        contact_angle[k] = CONTACT_RATIOS[k] * a_max + angle_jitter(rng, prior.angle_jitter);
    }
    ScriptShape {
        a_max,
        is_s,
        ic_s,
        via_angle,
        contact_angle,
        peak_dt_s: 0.75 * swing,
        lobe_amp: LOBE_BASE * speed,
        arm_lag_ms: bias.lag_ms + gauss(rng, prior.lag_sd_ms),
        heading: rng.gen_range(-1.1..1.1),
        pitch: rng.gen_range(-0.12..0.12),
    }
}

/// Strength of a controlled re-jitter around an existing shape.
#[derive(Debug, Clone, Copy)]
pub struct PerturbScale {
    pub angle_sd: f64,
    pub a_max_sd: f64,
    pub time_sd: f64,
    /// Relative lobe-height scatter.
    pub speed_sd: f64,
    pub lag_sd_ms: f64,
}

/// Spread between coach templates of one house style.
pub const TEMPLATE_SCALE: PerturbScale = PerturbScale {
    angle_sd: 0.15,
    a_max_sd: 0.075,
    time_sd: 0.065,
    speed_sd: 0.075,
    lag_sd_ms: 15.0,
};

/// Spread of a practiced user around the template they mimic; well under
/// [`TEMPLATE_SCALE`] so such users score high quality degrees.
pub const MIMIC_SCALE: PerturbScale = PerturbScale {
    angle_sd: 0.02,
    a_max_sd: 0.012,
    time_sd: 0.012,
    speed_sd: 0.015,
    lag_sd_ms: 4.0,
};

/// Re-jitters a shape. The baseline pose is redrawn outright: mounting
/// orientation varies per recording and the analysis must not depend on it.
pub fn perturb_shape(
    base: &ScriptShape,
    scale: &PerturbScale,
    rng: &mut ChaCha8Rng,
) -> ScriptShape {
    let mut s = base.clone();
    s.a_max += gauss(rng, scale.a_max_sd);
    for k in 0..3 {
        s.is_s[k] = snap(s.is_s[k] + time_jitter(rng, scale.time_sd));
        s.ic_s[k] = snap(s.ic_s[k] + time_jitter(rng, scale.time_sd));
        s.via_angle[k] = (s.via_angle[k] + angle_jitter(rng, scale.angle_sd)).max(0.02);
        s.contact_angle[k] += angle_jitter(rng, scale.angle_sd);
    }
    s.lobe_amp *= (1.0 + gauss(rng, scale.speed_sd)).max(0.3);
    s.arm_lag_ms += gauss(rng, scale.lag_sd_ms);
    s.heading = rng.gen_range(-1.1..1.1);
    s.pitch = rng.gen_range(-0.12..0.12);
    s
}

/// Perturbed copy of a phase-angle series, for AD_ref calibration of a
/// single template: a smooth monotone time warp plus slight amplitude scale
/// and offset. `rel` sets the strength; 1.0 matches a practiced user's
/// deviation from their template, 5.0 the spread between coach templates.
pub fn perturb_series(angle: &[f64], rel: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = angle.len();
    if n < 3 {
        return angle.to_vec();
    }
    let warp = gauss(rng, 0.010 * rel).clamp(-0.2, 0.2);
    let scale = 1.0 + gauss(rng, 0.007 * rel).clamp(-0.3, 0.3);
    let offset = gauss(rng, 0.006 * rel).clamp(-0.3, 0.3);
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let su = (u + warp * (std::f64::consts::PI * u).sin()).clamp(0.0, 1.0);
            let x = su * (n - 1) as f64;
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = x - lo as f64;
            let v = angle[lo] * (1.0 - frac) + angle[hi] * frac;
            v * scale + offset
        })
        .collect()
}

/// Settings for one labeled corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusParams {
    pub athletes: usize,
    pub throws_each: usize,
    pub seed: u64,
    /// Error-injection probability per skill, in [`ALL_LABELS`] order.
    pub error_rates: [f64; 3],
    pub angle_noise_override: Option<f64>,
    pub accel_noise_override: Option<f64>,
    pub twist_noise_override: Option<f64>,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            athletes: 9,
            throws_each: 50,
            seed: 7,
            error_rates: [0.35, 0.20, 0.08],
            angle_noise_override: None,
            accel_noise_override: None,
            twist_noise_override: None,
        }
    }
}

impl CorpusParams {
    pub fn from_config(sim: &SimConfig) -> Self {
        CorpusParams {
            athletes: sim.athletes,
            throws_each: sim.throws_each,
            seed: sim.seed,
            angle_noise_override: sim.angle_noise_rms,
            accel_noise_override: sim.accel_noise_rms,
            twist_noise_override: sim.twist_noise_rms,
            ..Default::default()
        }
    }
}

/// One rendered corpus entry. Ground-truth labels live in `sim.truth`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusThrow {
    pub athlete: usize,
    pub throw: usize,
    pub script: ThrowScript,
    pub sim: SimThrow,
}

/// Reserved throw index of the per-athlete bias stream.
const BIAS_STREAM: u64 = u64::MAX;

pub fn athlete_skill(athlete: usize) -> SkillLabel {
    ALL_LABELS[athlete % ALL_LABELS.len()]
}

pub fn athlete_name(athlete: usize) -> String {
    format!("athlete-{athlete:02}")
}

fn skill_index(skill: SkillLabel) -> usize {
    ALL_LABELS.iter().position(|&l| l == skill).unwrap()
}

/// Renders the full corpus: athletes rotate through the skill levels, every
/// throw's randomness derives from `(seed, athlete, throw)` alone, and the
/// output order is athlete-major regardless of scheduling.
pub fn generate_corpus(p: &CorpusParams) -> Result<Vec<CorpusThrow>> {
    let biases: Vec<AthleteBias> = (0..p.athletes)
        .map(|a| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(p.seed, a as u64, BIAS_STREAM));
            sample_bias(&mut rng)
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..p.athletes)
        .flat_map(|a| (0..p.throws_each).map(move |t| (a, t)))
        .collect();
    jobs.par_iter().map(|&(a, t)| corpus_throw(p, a, t, &biases[a])).collect()
}

fn corpus_throw(p: &CorpusParams, a: usize, t: usize, bias: &AthleteBias) -> Result<CorpusThrow> {
    let skill = athlete_skill(a);
    let prior = skill_prior(skill);
    let seed = derive_seed(p.seed, a as u64, t as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = sample_shape(&prior, bias, &mut rng);
    let noise = (
        p.angle_noise_override.unwrap_or(prior.angle_noise_rms),
        p.accel_noise_override.unwrap_or(prior.accel_noise_rms),
        p.twist_noise_override.unwrap_or(prior.twist_noise_rms),
    );
    let mut script = shape.to_script(skill, athlete_name(a), noise, splitmix64(seed));
    maybe_inject(&mut script, p.error_rates[skill_index(skill)], &mut rng);
    let sim = synthesize(&script)?;
    Ok(CorpusThrow { athlete: a, throw: t, script, sim })
}

fn maybe_inject(script: &mut ThrowScript, rate: f64, rng: &mut ChaCha8Rng) {
    if rng.gen::<f64>() >= rate {
        return;
    }
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match rng.gen_range(0..4u8) {
        0 => {
            let scale = if rng.gen_bool(0.5) {
                rng.gen_range(1.9..2.5)
            } else {
                rng.gen_range(0.2..0.35)
            };
            script.inject_speed_scale(scale);
        }
        1 => script.inject_backswing_shift(sign * rng.gen_range(0.32..0.5)),
        2 => script.inject_contact_shift(2, sign * rng.gen_range(0.28..0.4)),
        _ => script.inject_contact_shift(1, sign * rng.gen_range(0.28..0.4)),
    }
}

/// Labeled set for exercising the four error detectors: three clean coach
/// templates plus users drawn from the same style, a fixed number per
/// injected error type. Labels ride along in each throw's ground truth.
#[derive(Debug, Clone)]
pub struct ErrorProtocol {
    pub templates: Vec<SimThrow>,
    pub throws: Vec<SimThrow>,
}

const TEMPLATE_STREAM: u64 = 0;
const USER_STREAM: u64 = 1;

pub fn error_protocol(seed: u64, clean_count: usize, per_type: usize) -> Result<ErrorProtocol> {
    let prior = coach_prior();
    let bias = AthleteBias::default();
    let templates: Vec<SimThrow> = (0..3)
        .map(|j| {
            let tseed = derive_seed(seed, TEMPLATE_STREAM, j as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(tseed);
            let shape = sample_shape(&prior, &bias, &mut rng);
            let script = shape.to_script(
                SkillLabel::Intermediate,
                format!("coach-{j}"),
                prior_noise(&prior),
                splitmix64(tseed),
            );
            synthesize(&script)
        })
        .collect::<Result<_>>()?;

    let mut kinds = vec![0u8; clean_count];
    for e in 1..=4u8 {
        kinds.extend(std::iter::repeat_n(e, per_type));
    }
    let throws: Vec<SimThrow> = kinds
        .par_iter()
        .enumerate()
        .map(|(i, &kind)| {
            let useed = derive_seed(seed, USER_STREAM, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(useed);
            let shape = sample_shape(&prior, &bias, &mut rng);
            let mut script = shape.to_script(
                SkillLabel::Intermediate,
                format!("user-{i:03}"),
                prior_noise(&prior),
                splitmix64(useed),
            );
            // Even/odd indices alternate the injection direction so both
            // fast/slow and both signs stay well represented.
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            match kind {
                0 => {}
                1 => {
                    let scale = if i % 2 == 0 {
                        rng.gen_range(1.9..2.5)
                    } else {
                        rng.gen_range(0.15..0.3)
                    };
                    script.inject_speed_scale(scale);
                }
                2 => script.inject_backswing_shift(sign * rng.gen_range(0.32..0.5)),
                3 => script.inject_contact_shift(2, sign * rng.gen_range(0.28..0.4)),
                _ => script.inject_contact_shift(1, sign * rng.gen_range(0.28..0.4)),
            }
            synthesize(&script)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorProtocol { templates, throws })
}

/// One athlete's quality-protocol recordings.
#[derive(Debug, Clone)]
pub struct QualityAthlete {
    pub athlete_id: String,
    pub clean: Vec<SimThrow>,
    /// `timing[p][i]` is `clean[i]` re-rendered with a timing warp in phase
    /// `p`, so clean/warped pairs differ only in that phase.
    pub timing: Vec<Vec<SimThrow>>,
}

/// Recordings for the quality-degree study: three coach templates spread
/// around one house style, and athletes who each mimic one template per
/// throw with much smaller spread. Their minimum DTW distance lands on the
/// mimicked template while the average spans the style spread, which is what
/// drives the quality degree toward the top of the scale on clean throws.
#[derive(Debug, Clone)]
pub struct QualityProtocol {
    pub templates: Vec<SimThrow>,
    pub athletes: Vec<QualityAthlete>,
}

pub const QD_ATHLETES: usize = 9;
pub const QD_THROWS: usize = 10;

const HOUSE_STREAM: u64 = 2;
const QD_TEMPLATE_STREAM: u64 = 3;
const QD_TEMPLATE_NOISE_STREAM: u64 = 4;
const QD_ATHLETE_STREAM: u64 = 5;
const QD_NOISE_STREAM: u64 = 100;

pub fn quality_protocol(seed: u64) -> Result<QualityProtocol> {
    let prior = coach_prior();
    let noise = prior_noise(&prior);
    let mut house_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, HOUSE_STREAM, 0));
    let house = sample_shape(&prior, &AthleteBias::default(), &mut house_rng);

    let mut template_shapes = Vec::with_capacity(3);
    let mut templates = Vec::with_capacity(3);
    for j in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, QD_TEMPLATE_STREAM, j));
        let shape = perturb_shape(&house, &TEMPLATE_SCALE, &mut rng);
        let script = shape.to_script(
            SkillLabel::Intermediate,
            format!("coach-{j}"),
            noise,
            derive_seed(seed, QD_TEMPLATE_NOISE_STREAM, j),
        );
        templates.push(synthesize(&script)?);
        template_shapes.push(shape);
    }

    let athletes = (0..QD_ATHLETES)
        .map(|a| {
            let mut clean = Vec::with_capacity(QD_THROWS);
            let mut timing: Vec<Vec<SimThrow>> =
                (0..3).map(|_| Vec::with_capacity(QD_THROWS)).collect();
            for t in 0..QD_THROWS {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    QD_ATHLETE_STREAM + a as u64,
                    t as u64,
                ));
                let j = rng.gen_range(0..template_shapes.len());
                let shape = perturb_shape(&template_shapes[j], &MIMIC_SCALE, &mut rng);
                let script = shape.to_script(
                    SkillLabel::Intermediate,
                    athlete_name(a),
                    noise,
                    derive_seed(seed, QD_NOISE_STREAM + a as u64, t as u64),
                );
                clean.push(synthesize(&script)?);
                for (p, bucket) in timing.iter_mut().enumerate() {
                    let mut warped = script.clone();
                    warped.seed = splitmix64(warped.seed.wrapping_add(p as u64 + 1));
                    let magnitude = 0.12 + 0.08 * rng.gen::<f64>();
                    let shift = if t % 2 == 0 { magnitude } else { -magnitude };
                    warped.inject_timing_warp(p, shift)?;
                    bucket.push(synthesize(&warped)?);
                }
            }
            Ok(QualityAthlete { athlete_id: athlete_name(a), clean, timing })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(QualityProtocol { templates, athletes })
}

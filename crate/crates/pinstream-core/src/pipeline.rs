//! End-to-end throw analysis assembled from the lower-level stages: stream
//! alignment, swing-angle extraction, throw segmentation, gait profiling,
//! phase partitioning, and optional quality scoring with error flags.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::error_detection::{detect_all, ErrorFlags};
use crate::gait::{gait_profile, AccelStream};
use crate::quality::{assess_throw, QualityReport, Template};
use crate::quat::{swing_angle_series, BaselineFrame, Quaternion, SwingAngleSeries};
use crate::segment::{detect_throw_bounds, partition_phases, synchronize, ThrowRecord};

/// Analysis outcome for one detected segment. Failures stay attached to the
/// segment that produced them so a multi-throw stream keeps going.
#[derive(Debug)]
pub struct SegmentOutcome {
    pub range: Range<usize>,
    pub result: Result<ThrowRecord>,
}

/// Runs segmentation and per-throw analysis over an aligned session.
///
/// `t_ms`/`wrist` carry the orientation stream, `leg` the shank
/// accelerations; both may start and end at different times as long as they
/// overlap. Returns one outcome per detected throw segment.
pub fn analyze_session(
    cfg: &Config,
    t_ms: &[f64],
    wrist: &[Quaternion],
    baseline: &BaselineFrame,
    leg: &AccelStream,
) -> Result<Vec<SegmentOutcome>> {
    let fs = cfg.gait.fs_hz;
    leg.validate_rate(fs, cfg.gait.rate_tol_frac)?;
    let swing = swing_angle_series(t_ms, wrist, baseline)?;
    let aligned = synchronize(&swing, leg, fs, cfg.segmentation.max_skew_ms)?;
    let s = &cfg.segmentation;
    let bounds = detect_throw_bounds(&aligned.swing, s.theta_on, s.t_on_ms, s.t_off_ms, fs);
    let outcomes = bounds
        .into_iter()
        .map(|range| SegmentOutcome {
            result: segment_record(cfg, &aligned.swing, &aligned.leg, range.clone()),
            range,
        })
        .collect();
    Ok(outcomes)
}

/// Analyzes one detected segment: gait events on the leg slice, then the
/// per-stride phase partition.
fn segment_record(
    cfg: &Config,
    swing: &SwingAngleSeries,
    leg: &AccelStream,
    range: Range<usize>,
) -> Result<ThrowRecord> {
    let swing_slice = SwingAngleSeries::new(
        swing.t_ms[range.clone()].to_vec(),
        swing.angle[range.clone()].to_vec(),
    )?;
    let leg_slice =
        AccelStream::new(leg.t_ms[range.clone()].to_vec(), leg.accel[range.clone()].to_vec())?;
    let g = &cfg.gait;
    let gait = gait_profile(&leg_slice, g.fs_hz, g.fc_hz, g.min_prominence, g.min_separation_s)?;
    partition_phases(swing_slice, gait, range)
}

/// Like [`analyze_session`] for recordings known to hold exactly one throw.
pub fn analyze_single(
    cfg: &Config,
    t_ms: &[f64],
    wrist: &[Quaternion],
    baseline: &BaselineFrame,
    leg: &AccelStream,
) -> Result<ThrowRecord> {
    let mut outcomes = analyze_session(cfg, t_ms, wrist, baseline, leg)?;
    match outcomes.len() {
        0 => Err(Error::NoThrowDetected),
        1 => outcomes.remove(0).result,
        n => Err(Error::InvalidInput(format!("expected a single throw segment, found {n}"))),
    }
}

/// Runs the single-throw analysis on a rendered synthetic throw.
pub fn analyze_sim_throw(cfg: &Config, throw: &crate::sim::SimThrow) -> Result<ThrowRecord> {
    let baseline = BaselineFrame::new(throw.baseline)?;
    analyze_single(cfg, &throw.t_ms, &throw.wrist, &baseline, &throw.leg)
}

/// Quality score and error flags for a segmented throw against a template
/// set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThrowAssessment {
    pub quality: QualityReport,
    pub flags: ErrorFlags,
}

pub fn assess(cfg: &Config, rec: &ThrowRecord, templates: &[Template]) -> Result<ThrowAssessment> {
    let q = &cfg.quality;
    let quality = assess_throw(rec, templates, q.cost, q.band, q.unwrap_margin)?;
    let flags = detect_all(rec, templates, &cfg.thresholds, q.unwrap_margin)?;
    Ok(ThrowAssessment { quality, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{synthesize, test_script};

    #[test]
    fn zero_noise_throw_round_trips_through_the_pipeline() {
        let cfg = Config::default();
        let mut script = test_script();
        script.angle_noise_rms = 0.0;
        script.accel_noise_rms = 0.0;
        script.twist_noise_rms = 0.0;
        let throw = synthesize(&script).unwrap();
        let baseline = BaselineFrame::new(throw.baseline).unwrap();
        let rec = analyze_single(&cfg, &throw.t_ms, &throw.wrist, &baseline, &throw.leg).unwrap();
        assert_eq!(rec.gait.strides.len(), 3);
        let truth = &throw.truth;
        for (k, stride) in rec.gait.strides.iter().enumerate() {
            let is_s = rec.swing.t_ms[stride.is_idx] / 1000.0;
            let ic_s = rec.swing.t_ms[stride.ic_idx] / 1000.0;
            assert!((is_s - truth.events[k].is_s).abs() < 2.5 / cfg.gait.fs_hz, "IS stride {k}");
            assert!((ic_s - truth.events[k].ic_s).abs() < 2.5 / cfg.gait.fs_hz, "IC stride {k}");
        }
    }

    #[test]
    fn quiet_stream_reports_no_throw() {
        let cfg = Config::default();
        let n = 400;
        let t_ms: Vec<f64> = (0..n).map(|i| i as f64 * 20.0).collect();
        let wrist = vec![Quaternion::IDENTITY; n];
        let accel = vec![[0.0, 0.0, 9.81]; n];
        let leg = AccelStream::new(t_ms.clone(), accel).unwrap();
        let baseline = BaselineFrame::new(Quaternion::IDENTITY).unwrap();
        let err = analyze_single(&cfg, &t_ms, &wrist, &baseline, &leg).unwrap_err();
        assert!(matches!(err, Error::NoThrowDetected));
    }

    #[test]
    fn self_assessment_scores_perfect_quality() {
        let cfg = Config::default();
        let mut script = test_script();
        script.angle_noise_rms = 0.0;
        script.accel_noise_rms = 0.0;
        script.twist_noise_rms = 0.0;
        let throw = synthesize(&script).unwrap();
        let baseline = BaselineFrame::new(throw.baseline).unwrap();
        let rec = analyze_single(&cfg, &throw.t_ms, &throw.wrist, &baseline, &throw.leg).unwrap();
        let mut tpl = Template::from_throw(&rec, cfg.quality.unwrap_margin, cfg.thresholds);
        for s in &mut tpl.strides {
            s.ad_ref = Some(1.0);
        }
        let out = assess(&cfg, &rec, std::slice::from_ref(&tpl)).unwrap();
        for qd in &out.quality.qd {
            assert_eq!(*qd, 100.0);
        }
        assert!(!out.flags.any());
    }
}

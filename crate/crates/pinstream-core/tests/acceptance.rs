//! End-to-end acceptance suite. Each test checks one release gate against an
//! independent oracle or a fixed statistical protocol and prints a single
//! PASS line with the measured numbers (visible with `--nocapture`).

use std::sync::OnceLock;
use std::time::Instant;

use pinstream_core::config::Config;
use pinstream_core::error::Error;
use pinstream_core::error_detection::detect_all;
use pinstream_core::features::{self, SkillLabel};
use pinstream_core::gait::{highpass_zero_phase, GaitProfile};
use pinstream_core::pipeline::analyze_sim_throw;
use pinstream_core::quality::{assess_throw, dtw, LocalCost, Template, TemplateStride};
use pinstream_core::quat::{swing_twist_decompose, Quaternion, SwingAngleSeries};
use pinstream_core::segment::ThrowRecord;
use pinstream_core::sim::corpus::{
    error_protocol, generate_corpus, quality_protocol, CorpusParams,
};
use pinstream_core::sim::SimThrow;
use pinstream_core::svm::{metrics, rbf_kernel, smo_train, train_skill_model, SmoParams};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};

fn sha_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// One-sided paired test: H1 says the differences are positive.
fn paired_one_sided_p(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let t = mean / (var.sqrt() / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    1.0 - dist.cdf(t)
}

// ---------------------------------------------------------------------------
// 1. Quaternion rotation against a rotation-matrix oracle.

fn rotation_matrix(q: &Quaternion) -> [[f64; 3]; 3] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn mat_mul(m: &[[f64; 3]; 3], u: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * u[0] + m[0][1] * u[1] + m[0][2] * u[2],
        m[1][0] * u[0] + m[1][1] * u[1] + m[1][2] * u[2],
        m[2][0] * u[0] + m[2][1] * u[1] + m[2][2] * u[2],
    ]
}

fn random_unit_quat(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion {
            w: rng.gen_range(-1.0..1.0),
            x: rng.gen_range(-1.0..1.0),
            y: rng.gen_range(-1.0..1.0),
            z: rng.gen_range(-1.0..1.0),
        };
        if let Ok(u) = q.normalize() {
            return u;
        }
    }
}

#[test]
fn criterion_01_rotation_matches_matrix_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut max_rot = 0.0f64;
    let mut max_recomp = 0.0f64;
    for _ in 0..10_000 {
        let q = random_unit_quat(&mut rng);
        let u = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let got = q.rotate(u);
        let want = mat_mul(&rotation_matrix(&q), u);
        for k in 0..3 {
            max_rot = max_rot.max((got[k] - want[k]).abs());
        }

        let axis = {
            let v = [
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let (swing, twist) = swing_twist_decompose(&q, axis);
        let back = swing.hamilton(&twist);
        for (a, b) in [(back.w, q.w), (back.x, q.x), (back.y, q.y), (back.z, q.z)] {
            max_recomp = max_recomp.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(max_rot <= 1e-9, "rotation error {max_rot}");
    assert!(max_recomp <= 1e-9, "recomposition error {max_recomp}");
    assert!(secs < 5.0, "took {secs:.2} s");
    println!(
        "criterion 01 rotation vs matrix oracle: PASS (max rotation err {max_rot:.2e}, max recomposition err {max_recomp:.2e}, {secs:.2} s)"
    );
}

// ---------------------------------------------------------------------------
// 2. DTW against exhaustive enumeration of monotone alignments.

fn enumerate_alignments(a: &[f64], b: &[f64], i: usize, j: usize, local: fn(f64, f64) -> f64) -> f64 {
    let c = local(a[i], b[j]);
    if i + 1 == a.len() && j + 1 == b.len() {
        return c;
    }
    let mut best = f64::INFINITY;
    if i + 1 < a.len() {
        best = best.min(enumerate_alignments(a, b, i + 1, j, local));
    }
    if j + 1 < b.len() {
        best = best.min(enumerate_alignments(a, b, i, j + 1, local));
    }
    if i + 1 < a.len() && j + 1 < b.len() {
        best = best.min(enumerate_alignments(a, b, i + 1, j + 1, local));
    }
    c + best
}

#[test]
fn criterion_02_dtw_matches_exhaustive_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_real_err = 0.0f64;
    for case in 0..500 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let integer = case % 2 == 0;
        let gen = |rng: &mut ChaCha8Rng| {
            if integer {
                rng.gen_range(-5i32..=5) as f64
            } else {
                rng.gen_range(-2.0..2.0)
            }
        };
        let a: Vec<f64> = (0..n).map(|_| gen(&mut rng)).collect();
        let b: Vec<f64> = (0..m).map(|_| gen(&mut rng)).collect();
        for (cost, local) in [
            (LocalCost::L1, (|x, y| (x - y).abs()) as fn(f64, f64) -> f64),
            (LocalCost::L2, |x, y| (x - y) * (x - y)),
        ] {
            let got = dtw(&a, &b, cost, None).unwrap();
            let want = enumerate_alignments(&a, &b, 0, 0, local);
            if integer {
                assert_eq!(got, want, "case {case}: {got} vs {want}");
            } else {
                let err = (got - want).abs();
                max_real_err = max_real_err.max(err);
                assert!(err <= 1e-12, "case {case}: err {err}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "took {secs:.2} s");
    println!(
        "criterion 02 dtw vs exhaustive alignments: PASS (500 pairs, max real-input err {max_real_err:.2e}, {secs:.2} s)"
    );
}

// ---------------------------------------------------------------------------
// 3. Zero-phase high-pass filter response.

#[test]
fn criterion_03_zero_phase_highpass_response() {
    let fs = 50.0;
    let fc = 1.0;

    let dc = vec![1.0; 400];
    let y = highpass_zero_phase(&dc, fc, fs).unwrap();
    let dc_leak = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    // -60 dB on a unit input is an absolute residual of 1e-3.
    assert!(dc_leak <= 1e-3, "DC leak {dc_leak}");
    let dc_db = if dc_leak > 0.0 { 20.0 * dc_leak.log10() } else { f64::NEG_INFINITY };

    let n = 1000;
    let x: Vec<f64> = (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin())
        .collect();
    let y = highpass_zero_phase(&x, fc, fs).unwrap();
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    let gain = rms(&y[200..800]) / rms(&x[200..800]);
    // Forward+backward passes square the order-2 Butterworth magnitude:
    // |H(f)|^2 = (f/fc)^4 / (1 + (f/fc)^4).
    let omega4 = (10.0f64 / fc).powi(4);
    let analytic = omega4 / (1.0 + omega4);
    assert!(
        (gain - analytic).abs() <= 0.02,
        "10 Hz gain {gain} vs analytic {analytic}"
    );

    let mut pulse = vec![0.0; 401];
    for (i, v) in pulse.iter_mut().enumerate() {
        *v = (1.0 - (i as f64 - 200.0).abs() / 25.0).max(0.0);
    }
    let y = highpass_zero_phase(&pulse, fc, fs).unwrap();
    let peak = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    assert_eq!(peak, 200, "pulse peak displaced to {peak}");

    println!(
        "criterion 03 zero-phase high-pass: PASS (DC {dc_db:.0} dB, 10 Hz gain {gain:.5} vs {analytic:.5}, peak displacement 0)"
    );
}

// ---------------------------------------------------------------------------
// 4. Gait recovery on zero-noise throws (cached for the determinism check).

#[derive(Serialize)]
struct GaitRow {
    athlete: usize,
    throw: usize,
    is_s: Vec<f64>,
    mid_s: Vec<f64>,
    ic_s: Vec<f64>,
    velocity: Vec<f64>,
}

struct GaitRun {
    report: String,
    throws: usize,
    max_event_off: f64,
    max_vel_err: f64,
}

fn run_gait_recovery() -> GaitRun {
    let p = CorpusParams {
        athletes: 10,
        throws_each: 20,
        seed: 11,
        error_rates: [0.0; 3],
        angle_noise_override: Some(0.0),
        accel_noise_override: Some(0.0),
        twist_noise_override: Some(0.0),
    };
    let cfg = Config::default();
    let fs = cfg.gait.fs_hz;
    let mut rows = Vec::new();
    let mut max_event_off = 0.0f64;
    let mut max_vel_err = 0.0f64;
    for ct in generate_corpus(&p).unwrap() {
        let rec = analyze_sim_throw(&cfg, &ct.sim).unwrap();
        assert_eq!(
            rec.gait.strides.len(),
            3,
            "athlete {} throw {}: stride count",
            ct.athlete,
            ct.throw
        );
        let at = |i: usize| rec.swing.t_ms[i] / 1000.0;
        let mut row = GaitRow {
            athlete: ct.athlete,
            throw: ct.throw,
            is_s: Vec::new(),
            mid_s: Vec::new(),
            ic_s: Vec::new(),
            velocity: rec.gait.avg_velocity.clone(),
        };
        for (k, s) in rec.gait.strides.iter().enumerate() {
            let truth = &ct.sim.truth.events[k];
            for (det, want) in [
                (at(s.is_idx), truth.is_s),
                (at(s.mid_swing_idx), truth.mid_s()),
                (at(s.ic_idx), truth.ic_s),
            ] {
                let off = (det - want).abs() * fs;
                max_event_off = max_event_off.max(off);
                assert!(
                    off <= 2.0 + 1e-9,
                    "athlete {} throw {} stride {k}: event off {off:.2} samples",
                    ct.athlete,
                    ct.throw
                );
            }
            row.is_s.push(at(s.is_idx));
            row.mid_s.push(at(s.mid_swing_idx));
            row.ic_s.push(at(s.ic_idx));
        }
        for (k, &v) in rec.gait.avg_velocity.iter().enumerate() {
            let want = ct.sim.truth.avg_velocity[k];
            let err = (v - want).abs() / want.abs();
            max_vel_err = max_vel_err.max(err);
            assert!(
                err <= 0.05,
                "athlete {} throw {} stride {k}: velocity {v} vs {want}",
                ct.athlete,
                ct.throw
            );
        }
        rows.push(row);
    }
    GaitRun {
        report: serde_json::to_string(&rows).unwrap(),
        throws: rows.len(),
        max_event_off,
        max_vel_err,
    }
}

static GAIT_RUN: OnceLock<GaitRun> = OnceLock::new();

fn gait_run() -> &'static GaitRun {
    GAIT_RUN.get_or_init(run_gait_recovery)
}

#[test]
fn criterion_04_zero_noise_gait_recovery() {
    let run = gait_run();
    assert_eq!(run.throws, 200);
    println!(
        "criterion 04 gait recovery: PASS (200/200 throws with 3 strides, max event offset {:.2} samples, max velocity error {:.1}%)",
        run.max_event_off,
        run.max_vel_err * 100.0
    );
}

// ---------------------------------------------------------------------------
// 5. Quality-degree study: clean throws vs single-phase timing errors.

fn analyzed_templates(cfg: &Config, sims: &[SimThrow]) -> Vec<Template> {
    sims.iter()
        .map(|t| {
            let rec = analyze_sim_throw(cfg, t).unwrap();
            Template::from_throw(&rec, cfg.quality.unwrap_margin, cfg.thresholds.clone())
        })
        .collect()
}

struct QualityRun {
    report: String,
    clean_mean: [f64; 3],
    warp_mean: [f64; 3],
    p: [f64; 3],
}

fn run_quality_study() -> QualityRun {
    let cfg = Config::default();
    let proto = quality_protocol(7).unwrap();
    let templates = analyzed_templates(&cfg, &proto.templates);

    let qd_of = |sim: &SimThrow| -> Vec<f64> {
        let rec = analyze_sim_throw(&cfg, sim).unwrap();
        assess_throw(&rec, &templates, cfg.quality.cost, cfg.quality.band, cfg.quality.unwrap_margin)
            .unwrap()
            .qd
    };

    // pairs[p] collects (clean QD, warped QD) of the same throw in phase p.
    let mut pairs: [Vec<(f64, f64)>; 3] = Default::default();
    for athlete in &proto.athletes {
        for (i, clean) in athlete.clean.iter().enumerate() {
            let clean_qd = qd_of(clean);
            for (p, bucket) in athlete.timing.iter().enumerate() {
                let warped_qd = qd_of(&bucket[i]);
                pairs[p].push((clean_qd[p], warped_qd[p]));
            }
        }
    }

    let mut clean_mean = [0.0; 3];
    let mut warp_mean = [0.0; 3];
    let mut p_values = [0.0; 3];
    for (p, bucket) in pairs.iter().enumerate() {
        let n = bucket.len() as f64;
        clean_mean[p] = bucket.iter().map(|x| x.0).sum::<f64>() / n;
        warp_mean[p] = bucket.iter().map(|x| x.1).sum::<f64>() / n;
        let diffs: Vec<f64> = bucket.iter().map(|x| x.0 - x.1).collect();
        p_values[p] = paired_one_sided_p(&diffs);
    }
    QualityRun {
        report: serde_json::to_string(&pairs).unwrap(),
        clean_mean,
        warp_mean,
        p: p_values,
    }
}

static QUALITY_RUN: OnceLock<QualityRun> = OnceLock::new();

fn quality_run() -> &'static QualityRun {
    QUALITY_RUN.get_or_init(run_quality_study)
}

#[test]
fn criterion_05_quality_degree_study() {
    let run = quality_run();
    for p in 0..3 {
        assert!(
            (72.0..=100.0).contains(&run.clean_mean[p]),
            "phase {p}: clean mean {:.2} outside [72, 100]",
            run.clean_mean[p]
        );
        assert!(
            run.clean_mean[p] > run.warp_mean[p],
            "phase {p}: clean {:.2} not above warped {:.2}",
            run.clean_mean[p],
            run.warp_mean[p]
        );
        assert!(run.p[p] < 0.05, "phase {p}: p = {:.3}", run.p[p]);
    }
    println!(
        "criterion 05 quality-degree study: PASS (clean means {:.1}/{:.1}/{:.1}, warped {:.1}/{:.1}/{:.1}, p {:.1e}/{:.1e}/{:.1e})",
        run.clean_mean[0], run.clean_mean[1], run.clean_mean[2],
        run.warp_mean[0], run.warp_mean[1], run.warp_mean[2],
        run.p[0], run.p[1], run.p[2]
    );
}

// ---------------------------------------------------------------------------
// 6. Quality assessment timing budget.

fn timing_record(phases: usize, samples_per_phase: usize) -> ThrowRecord {
    let n = phases * samples_per_phase;
    let t_ms: Vec<f64> = (0..n).map(|i| i as f64 * 20.0).collect();
    let angle: Vec<f64> =
        (0..n).map(|i| 1.5 + (i as f64 * 0.037).sin()).collect();
    let swing = SwingAngleSeries::new(t_ms, angle).unwrap();
    let gait = GaitProfile {
        strides: Vec::new(),
        mag: vec![9.81; n],
        filtered: vec![0.0; n],
        velocity: Vec::new(),
        avg_velocity: Vec::new(),
        swing_period: Vec::new(),
        stance_period: Vec::new(),
        ratio: Vec::new(),
    };
    let phase_bounds =
        (0..phases).map(|p| p * samples_per_phase..(p + 1) * samples_per_phase).collect();
    ThrowRecord { swing, gait, phase_bounds, segment_range: 0..n }
}

fn timing_template(style: &str, phases: usize, samples: usize, shift: f64) -> Template {
    let cfg = Config::default();
    let stride = |p: usize| TemplateStride {
        angle: (0..samples)
            .map(|i| (i as f64 * 0.037 + shift + p as f64 * 0.1).sin() * 0.9)
            .collect(),
        avg_velocity: 0.5,
        a_contact: 1.0,
        ad_ref: Some(3.0),
    };
    Template {
        style: style.to_string(),
        strides: (0..phases).map(stride).collect(),
        a_max: 2.5,
        thresholds: cfg.thresholds,
    }
}

fn median_ms(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

#[test]
fn criterion_06_quality_timing_budget() {
    let cfg = Config::default();

    let single_rec = timing_record(1, 500);
    let single_tpl = vec![timing_template("t0", 1, 500, 0.2)];
    let mut single: Vec<f64> = (0..11)
        .map(|_| {
            let t = Instant::now();
            let rep = assess_throw(
                &single_rec,
                &single_tpl,
                cfg.quality.cost,
                cfg.quality.band,
                cfg.quality.unwrap_margin,
            )
            .unwrap();
            assert_eq!(rep.qd.len(), 1);
            t.elapsed().as_secs_f64() * 1000.0
        })
        .collect();
    let single_med = median_ms(&mut single);
    assert!(single_med < 210.0, "single-phase median {single_med:.1} ms");

    let full_rec = timing_record(3, 500);
    let full_tpl: Vec<Template> =
        (0..6).map(|j| timing_template(&format!("t{j}"), 3, 500, 0.1 * j as f64)).collect();
    let mut full: Vec<f64> = (0..11)
        .map(|_| {
            let t = Instant::now();
            let rep = assess_throw(
                &full_rec,
                &full_tpl,
                cfg.quality.cost,
                cfg.quality.band,
                cfg.quality.unwrap_margin,
            )
            .unwrap();
            assert_eq!(rep.qd.len(), 3);
            t.elapsed().as_secs_f64() * 1000.0
        })
        .collect();
    let full_med = median_ms(&mut full);
    assert!(full_med < 1100.0, "full-throw median {full_med:.1} ms");

    println!(
        "criterion 06 quality timing: PASS (single-template single-phase median {single_med:.1} ms < 210, 6-template full-throw median {full_med:.1} ms < 1100)"
    );
}

// ---------------------------------------------------------------------------
// 7. Error detection precision/recall on labeled throws.

#[derive(Serialize)]
struct FlagRow {
    throw: usize,
    truth: [bool; 4],
    flags: [bool; 4],
}

struct ErrorRun {
    report: String,
    precision: [f64; 4],
    recall: [f64; 4],
    throws: usize,
    per_type_count: usize,
}

fn run_error_study() -> ErrorRun {
    let cfg = Config::default();
    let proto = error_protocol(7, 80, 50).unwrap();
    let templates = analyzed_templates(&cfg, &proto.templates);

    let mut rows = Vec::new();
    let mut tp = [0usize; 4];
    let mut fp = [0usize; 4];
    let mut fn_ = [0usize; 4];
    let mut per_type_count = usize::MAX;
    for (i, sim) in proto.throws.iter().enumerate() {
        let rec = analyze_sim_throw(&cfg, sim).unwrap();
        let flags =
            detect_all(&rec, &templates, &cfg.thresholds, cfg.quality.unwrap_margin).unwrap();
        let got = [flags.e1, flags.e2, flags.e3, flags.e4];
        let want = [
            sim.truth.labels.e1,
            sim.truth.labels.e2,
            sim.truth.labels.e3,
            sim.truth.labels.e4,
        ];
        for k in 0..4 {
            match (want[k], got[k]) {
                (true, true) => tp[k] += 1,
                (false, true) => fp[k] += 1,
                (true, false) => fn_[k] += 1,
                (false, false) => {}
            }
        }
        rows.push(FlagRow { throw: i, truth: want, flags: got });
    }
    let mut precision = [0.0; 4];
    let mut recall = [0.0; 4];
    for k in 0..4 {
        precision[k] = tp[k] as f64 / (tp[k] + fp[k]) as f64;
        recall[k] = tp[k] as f64 / (tp[k] + fn_[k]) as f64;
        per_type_count = per_type_count.min(tp[k] + fn_[k]);
    }
    ErrorRun {
        report: serde_json::to_string(&rows).unwrap(),
        precision,
        recall,
        throws: rows.len(),
        per_type_count,
    }
}

static ERROR_RUN: OnceLock<ErrorRun> = OnceLock::new();

fn error_run() -> &'static ErrorRun {
    ERROR_RUN.get_or_init(run_error_study)
}

#[test]
fn criterion_07_error_detection_rates() {
    let run = error_run();
    assert!(run.throws >= 200, "only {} labeled throws", run.throws);
    assert!(run.per_type_count >= 50, "only {} throws of the rarest type", run.per_type_count);
    for k in 0..4 {
        assert!(
            run.precision[k] >= 0.88,
            "error {}: precision {:.3}",
            k + 1,
            run.precision[k]
        );
        assert!(run.recall[k] >= 0.75, "error {}: recall {:.3}", k + 1, run.recall[k]);
    }
    let avg_p = run.precision.iter().sum::<f64>() / 4.0;
    let avg_r = run.recall.iter().sum::<f64>() / 4.0;
    assert!(avg_p >= 0.90, "average precision {avg_p:.3}");
    assert!(avg_r >= 0.84, "average recall {avg_r:.3}");
    println!(
        "criterion 07 error detection: PASS ({} throws, precision {:.2}/{:.2}/{:.2}/{:.2} avg {avg_p:.3}, recall {:.2}/{:.2}/{:.2}/{:.2} avg {avg_r:.3})",
        run.throws,
        run.precision[0], run.precision[1], run.precision[2], run.precision[3],
        run.recall[0], run.recall[1], run.recall[2], run.recall[3]
    );
}

// ---------------------------------------------------------------------------
// 8. SMO against an exact pairwise coordinate-ascent QP solution.

fn dual_objective(alpha: &[f64], y: &[f64], k: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut w = alpha.iter().sum::<f64>();
    for i in 0..n {
        for j in 0..n {
            w -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    w
}

/// Cycles over every multiplier pair with the exact two-variable solution
/// until no pair moves; for a positive-definite kernel this reaches the
/// global maximum of the dual.
fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    for _sweep in 0..20_000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let f = |m: usize| -> f64 {
                    (0..n).map(|t| alpha[t] * y[t] * k[t][m]).sum::<f64>()
                };
                let (lo, hi) = if (y[i] - y[j]).abs() > 0.5 {
                    let d = alpha[j] - alpha[i];
                    (d.max(0.0), (c + d).min(c))
                } else {
                    let s = alpha[i] + alpha[j];
                    ((s - c).max(0.0), s.min(c))
                };
                if hi - lo < 1e-15 {
                    continue;
                }
                let eta = k[i][i] + k[j][j] - 2.0 * k[i][j];
                let old_j = alpha[j];
                let new_j = if eta > 1e-12 {
                    let e = (f(i) - y[i]) - (f(j) - y[j]);
                    (old_j + y[j] * e / eta).clamp(lo, hi)
                } else {
                    // Flat direction: the dual is linear along it, so one of
                    // the interval ends is optimal.
                    let mut trial = alpha.clone();
                    let set = |t: &mut Vec<f64>, v: f64| {
                        t[j] = v;
                        t[i] = alpha[i] + y[i] * y[j] * (old_j - v);
                    };
                    set(&mut trial, lo);
                    let w_lo = dual_objective(&trial, y, k);
                    set(&mut trial, hi);
                    let w_hi = dual_objective(&trial, y, k);
                    if w_lo >= w_hi {
                        lo
                    } else {
                        hi
                    }
                };
                alpha[i] += y[i] * y[j] * (old_j - new_j);
                alpha[j] = new_j;
                moved = moved.max((new_j - old_j).abs());
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    alpha
}

#[test]
fn criterion_08_smo_reaches_qp_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let params = SmoParams { tol: 1e-3, max_passes: 200 };
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_kkt = 0.0f64;
    for case in 0..100 {
        let n = rng.gen_range(6..=12);
        let d = rng.gen_range(2..=4);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = loop {
            let y: Vec<f64> =
                (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
                break y;
            }
        };
        let c = if rng.gen::<bool>() { 1.0 } else { 10.0 };
        let gamma = rng.gen_range(0.2..1.5);

        let gram: Vec<Vec<f64>> = rows
            .iter()
            .map(|a| rows.iter().map(|b| rbf_kernel(a, b, gamma).unwrap()).collect())
            .collect();

        let model = smo_train(&rows, &y, c, gamma, &params).unwrap();
        let w_smo = dual_objective(&model.alpha, &y, &gram);
        let w_oracle = dual_objective(&qp_oracle(&gram, &y, c), &y, &gram);
        let gap = w_oracle - w_smo;
        worst_gap = worst_gap.max(gap);
        assert!(gap <= 1e-4, "case {case}: dual gap {gap:.2e}");

        // KKT from the returned multipliers and bias, checked independently.
        for i in 0..n {
            let fi: f64 =
                (0..n).map(|j| model.alpha[j] * y[j] * gram[j][i]).sum::<f64>() - model.bias;
            let margin = y[i] * fi;
            let violation = if model.alpha[i] <= 1e-9 {
                (1.0 - margin).max(0.0)
            } else if model.alpha[i] >= c - 1e-9 {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst_kkt = worst_kkt.max(violation);
            assert!(violation <= 1e-3 + 1e-9, "case {case} point {i}: KKT violation {violation:.2e}");
        }
    }
    println!(
        "criterion 08 smo vs qp oracle: PASS (100 datasets, worst dual gap {worst_gap:.2e}, worst KKT violation {worst_kkt:.2e})"
    );
}

// ---------------------------------------------------------------------------
// 9. End-to-end skill classification.

#[derive(Serialize)]
struct SkillReport {
    cv: Vec<(f64, f64, f64, f64, usize)>,
    best_c: f64,
    best_gamma: f64,
    confusion: Vec<Vec<usize>>,
    accuracy: f64,
    macro_f1: f64,
}

struct SkillRun {
    report: String,
    accuracy: f64,
    macro_f1: f64,
    best_c: f64,
    best_gamma: f64,
    secs: f64,
}

fn run_skill_study() -> SkillRun {
    let start = Instant::now();
    let cfg = Config::default();
    let corpus = generate_corpus(&CorpusParams::from_config(&cfg.sim)).unwrap();
    assert_eq!(corpus.len(), 450);

    let mut rows = Vec::with_capacity(corpus.len());
    let mut labels = Vec::with_capacity(corpus.len());
    for ct in &corpus {
        let rec = analyze_sim_throw(&cfg, &ct.sim).unwrap();
        rows.push(features::extract(&rec, cfg.quality.unwrap_margin).unwrap());
        labels.push(ct.sim.truth.skill);
    }

    let outcome =
        train_skill_model(&rows, &labels, &cfg.svm.grid_params(), cfg.svm.test_fraction).unwrap();
    let report = SkillReport {
        cv: outcome
            .grid
            .table
            .iter()
            .map(|c| (c.c, c.gamma, c.mean_macro_f1, c.std_macro_f1, c.failed_folds))
            .collect(),
        best_c: outcome.grid.best_c,
        best_gamma: outcome.grid.best_gamma,
        confusion: outcome.holdout.confusion.clone(),
        accuracy: outcome.holdout.accuracy,
        macro_f1: outcome.holdout.macro_f1,
    };
    SkillRun {
        report: serde_json::to_string(&report).unwrap(),
        accuracy: outcome.holdout.accuracy,
        macro_f1: outcome.holdout.macro_f1,
        best_c: outcome.grid.best_c,
        best_gamma: outcome.grid.best_gamma,
        secs: start.elapsed().as_secs_f64(),
    }
}

static SKILL_RUN: OnceLock<SkillRun> = OnceLock::new();

fn skill_run() -> &'static SkillRun {
    SKILL_RUN.get_or_init(run_skill_study)
}

#[test]
fn criterion_09_skill_classification_end_to_end() {
    let run = skill_run();
    assert!(run.accuracy >= 0.85, "holdout accuracy {:.3}", run.accuracy);
    assert!(run.macro_f1 >= 0.80, "holdout macro F1 {:.3}", run.macro_f1);
    assert!(run.secs < 600.0, "took {:.1} s", run.secs);
    println!(
        "criterion 09 skill classification: PASS (450 throws, holdout accuracy {:.3}, macro F1 {:.3}, best C={} gamma={}, {:.1} s)",
        run.accuracy, run.macro_f1, run.best_c, run.best_gamma, run.secs
    );
}

// ---------------------------------------------------------------------------
// 10. Classification metrics against hand-worked examples.

#[test]
fn criterion_10_metrics_match_hand_worked_examples() {
    use SkillLabel::{Expert as E, Intermediate as I, Novice as N};

    // Perfect predictions: every number is exactly 1.
    let r = metrics(&[N, N, I, I, E, E], &[N, N, I, I, E, E]).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.macro_f1, 1.0);
    assert_eq!(r.weighted_precision, 1.0);
    assert!(!r.zero_division);

    // Small asymmetric case, worked by hand from its confusion matrix.
    let r = metrics(&[N, N, N, I, I, E], &[N, I, N, I, N, E]).unwrap();
    assert_eq!(r.confusion, vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]);
    assert_eq!(r.accuracy, 4.0 / 6.0);
    assert_eq!(r.per_class[0].precision, 2.0 / 3.0);
    assert_eq!(r.per_class[0].recall, 2.0 / 3.0);
    assert_eq!(r.per_class[1].precision, 0.5);
    assert_eq!(r.per_class[1].recall, 0.5);
    assert_eq!(r.per_class[2].precision, 1.0);
    assert_eq!(r.per_class[2].f1, 1.0);
    assert_eq!(r.macro_precision, (2.0 / 3.0 + 0.5 + 1.0) / 3.0);
    assert_eq!(r.weighted_precision, (3.0 * (2.0 / 3.0) + 2.0 * 0.5 + 1.0) / 6.0);

    // 20-sample, 3-class spreadsheet case. Confusion (rows actual N/I/E):
    //   [6 1 1; 2 4 1; 0 1 4]
    let actual = [
        N, N, N, N, N, N, N, N, //
        I, I, I, I, I, I, I, //
        E, E, E, E, E,
    ];
    let predicted = [
        N, N, N, N, N, N, I, E, //
        N, N, I, I, I, I, E, //
        I, E, E, E, E,
    ];
    let r = metrics(&actual, &predicted).unwrap();
    assert_eq!(r.confusion, vec![vec![6, 1, 1], vec![2, 4, 1], vec![0, 1, 4]]);
    let tol = 1e-12;
    let close = |got: f64, want: f64, what: &str| {
        assert!((got - want).abs() <= tol, "{what}: {got} vs {want}");
    };
    close(r.accuracy, 0.7, "accuracy");
    close(r.per_class[0].precision, 0.75, "novice precision");
    close(r.per_class[0].recall, 0.75, "novice recall");
    close(r.per_class[0].f1, 0.75, "novice f1");
    close(r.per_class[1].precision, 2.0 / 3.0, "intermediate precision");
    close(r.per_class[1].recall, 4.0 / 7.0, "intermediate recall");
    close(r.per_class[1].f1, 8.0 / 13.0, "intermediate f1");
    close(r.per_class[2].precision, 2.0 / 3.0, "expert precision");
    close(r.per_class[2].recall, 0.8, "expert recall");
    close(r.per_class[2].f1, 8.0 / 11.0, "expert f1");
    close(r.macro_precision, 25.0 / 36.0, "macro precision");
    close(r.macro_recall, 99.0 / 140.0, "macro recall");
    close(r.macro_f1, (0.75 + 8.0 / 13.0 + 8.0 / 11.0) / 3.0, "macro f1");
    close(r.weighted_precision, 0.7, "weighted precision");
    close(r.weighted_recall, 0.7, "weighted recall");
    close(
        r.weighted_f1,
        (8.0 * 0.75 + 7.0 * (8.0 / 13.0) + 5.0 * (8.0 / 11.0)) / 20.0,
        "weighted f1",
    );

    println!(
        "criterion 10 metrics hand examples: PASS (3 worked cases, 20-sample spreadsheet values within 1e-12)"
    );
}

// ---------------------------------------------------------------------------
// 11. Fixed-seed reruns are byte-identical.

#[test]
fn criterion_11_fixed_seed_reruns_are_byte_identical() {
    let cases: [(&str, &str, String); 4] = [
        ("gait recovery", &gait_run().report, run_gait_recovery().report),
        ("quality study", &quality_run().report, run_quality_study().report),
        ("error study", &error_run().report, run_error_study().report),
        ("skill study", &skill_run().report, run_skill_study().report),
    ];
    let mut hashes = Vec::new();
    for (name, first, second) in &cases {
        let h1 = sha_hex(first);
        let h2 = sha_hex(second);
        assert_eq!(h1, h2, "{name}: rerun diverged");
        hashes.push(format!("{name} {}", &h1[..12]));
    }
    println!(
        "criterion 11 determinism: PASS (identical rerun hashes: {})",
        hashes.join(", ")
    );
}

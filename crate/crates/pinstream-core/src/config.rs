//! Runtime configuration: one TOML document covering segmentation, gait,
//! thresholds, quality, classifier and simulator settings. Every field has a
//! default, unknown fields are rejected, and semantic validation names the
//! offending field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_detection::ErrorThresholds;
use crate::quality::LocalCost;
use crate::svm::{GridSearchParams, SmoParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Hysteresis band around the rest pose, rad.
    pub theta_on: f64,
    pub t_on_ms: f64,
    pub t_off_ms: f64,
    /// Max tolerated offset between a stream sample and the shared grid.
    pub max_skew_ms: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig { theta_on: 0.26, t_on_ms: 200.0, t_off_ms: 500.0, max_skew_ms: 15.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitConfig {
    pub fs_hz: f64,
    /// High-pass cutoff for velocity integration, Hz.
    pub fc_hz: f64,
    /// Minimum mid-swing peak prominence, m/s². Must exceed the contact-notch
    /// depth so the flat stretches between strides never rank as peaks.
    pub min_prominence: f64,
    /// Minimum spacing between mid-swing peaks, s.
    pub min_separation_s: f64,
    /// Allowed sample-spacing deviation as a fraction of the nominal period.
    pub rate_tol_frac: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        GaitConfig {
            fs_hz: 50.0,
            fc_hz: 1.0,
            min_prominence: 3.5,
            min_separation_s: 0.3,
            rate_tol_frac: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub cost: LocalCost,
    /// Optional DTW band half-width, samples.
    pub band: Option<usize>,
    /// Margin below 2π treated as wrapped rest noise when re-centering.
    pub unwrap_margin: f64,
    /// Perturbed variants used to calibrate a single template's AD_ref.
    pub calibration_perturbations: usize,
    /// Perturbation strength for calibration, relative to clean variation.
    pub calibration_spread: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        QualityConfig {
            cost: LocalCost::L1,
            band: None,
            unwrap_margin: 0.5,
            calibration_perturbations: 20,
            calibration_spread: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_passes: usize,
    pub test_fraction: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let g = GridSearchParams::default();
        SvmConfig {
            c_grid: g.c_grid,
            gamma_grid: g.gamma_grid,
            folds: g.folds,
            seed: 42,
            tol: g.smo.tol,
            max_passes: g.smo.max_passes,
            test_fraction: 0.2,
        }
    }
}

impl SvmConfig {
    pub fn grid_params(&self) -> GridSearchParams {
        GridSearchParams {
            c_grid: self.c_grid.clone(),
            gamma_grid: self.gamma_grid.clone(),
            folds: self.folds,
            seed: self.seed,
            smo: SmoParams { tol: self.tol, max_passes: self.max_passes },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub athletes: usize,
    pub throws_each: usize,
    pub seed: u64,
    /// Overrides the per-skill noise priors when set.
    pub angle_noise_rms: Option<f64>,
    pub accel_noise_rms: Option<f64>,
    pub twist_noise_rms: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            athletes: 9,
            throws_each: 50,
            seed: 7,
            angle_noise_rms: None,
            accel_noise_rms: None,
            twist_noise_rms: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub segmentation: SegmentationConfig,
    pub gait: GaitConfig,
    pub thresholds: ErrorThresholds,
    pub quality: QualityConfig,
    pub svm: SvmConfig,
    pub sim: SimConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Config> {
        let cfg: Config =
            toml::from_str(s).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.segmentation;
        positive("segmentation.theta_on", s.theta_on)?;
        if s.theta_on >= std::f64::consts::PI {
            return Err(Error::Config(format!(
                "segmentation.theta_on {} out of (0, pi)",
                s.theta_on
            )));
        }
        positive("segmentation.t_on_ms", s.t_on_ms)?;
        positive("segmentation.t_off_ms", s.t_off_ms)?;
        positive("segmentation.max_skew_ms", s.max_skew_ms)?;

        let g = &self.gait;
        positive("gait.fs_hz", g.fs_hz)?;
        positive("gait.fc_hz", g.fc_hz)?;
        if g.fc_hz >= g.fs_hz / 2.0 {
            return Err(Error::Config(format!(
                "gait.fc_hz {} must stay below the Nyquist rate {}",
                g.fc_hz,
                g.fs_hz / 2.0
            )));
        }
        positive("gait.min_prominence", g.min_prominence)?;
        if g.min_separation_s < 0.0 || g.rate_tol_frac < 0.0 {
            return Err(Error::Config("gait separations/tolerances must be nonnegative".into()));
        }

        let t = &self.thresholds;
        positive("thresholds.eps1", t.eps1)?;
        positive("thresholds.eps2", t.eps2)?;
        positive("thresholds.eps3", t.eps3)?;
        positive("thresholds.eps4", t.eps4)?;
        if t.error4_stride == 0 {
            return Err(Error::Config("thresholds.error4_stride is 1-based, got 0".into()));
        }

        let q = &self.quality;
        if !(0.0..=1.0).contains(&q.unwrap_margin) {
            return Err(Error::Config(format!(
                "quality.unwrap_margin {} out of [0, 1]",
                q.unwrap_margin
            )));
        }
        if q.calibration_perturbations == 0 {
            return Err(Error::Config("quality.calibration_perturbations must be >= 1".into()));
        }
        positive("quality.calibration_spread", q.calibration_spread)?;

        let v = &self.svm;
        if v.c_grid.is_empty() || v.gamma_grid.is_empty() {
            return Err(Error::Config("svm grids must be non-empty".into()));
        }
        for &c in &v.c_grid {
            positive("svm.c_grid entry", c)?;
        }
        for &gm in &v.gamma_grid {
            positive("svm.gamma_grid entry", gm)?;
        }
        if v.folds < 2 {
            return Err(Error::Config(format!("svm.folds must be >= 2, got {}", v.folds)));
        }
        positive("svm.tol", v.tol)?;
        if v.max_passes == 0 {
            return Err(Error::Config("svm.max_passes must be >= 1".into()));
        }
        if !(v.test_fraction > 0.0 && v.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "svm.test_fraction {} out of (0, 1)",
                v.test_fraction
            )));
        }

        let m = &self.sim;
        if m.athletes == 0 || m.throws_each == 0 {
            return Err(Error::Config("sim.athletes and sim.throws_each must be >= 1".into()));
        }
        for (name, v) in [
            ("sim.angle_noise_rms", m.angle_noise_rms),
            ("sim.accel_noise_rms", m.accel_noise_rms),
            ("sim.twist_noise_rms", m.twist_noise_rms),
        ] {
            if let Some(v) = v {
                if v < 0.0 {
                    return Err(Error::Config(format!("{name} must be nonnegative, got {v}")));
                }
            }
        }
        Ok(())
    }
}

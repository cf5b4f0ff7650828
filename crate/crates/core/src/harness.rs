//! Monte-Carlo episodes: scene and frame generation, method fitting, metrics,
//! aggregation and grid tuning.

use std::time::Instant;

use rayon::prelude::*;

use crate::dro::{self, BallKind, SolverConfig};
use crate::error::{Error, Result};
use crate::linear::{self, RsRvVariant, UncertaintyKind, UncertaintySpec};
use crate::moments::{estimate_moments, NominalEstimates};
use crate::rkhs::{self, KernelKind, KernelMethod, KernelSpec};
use crate::scene::{
    derive_seed, expected_signal_power, generate_scene, generate_signals, synthesize_channel,
    transmit_with_variance, NoiseSpec, PilotFrame, SignalKind, SnrReference,
};
use crate::types::{lift_columns, CMat, JointMoments, C64};

/// `‖S − Ŝ‖²_F / (M L)`.
pub fn mse_metric(s_true: &CMat, s_hat: &CMat) -> Result<f64> {
    if s_true.shape() != s_hat.shape() {
        return Err(Error::dim(format!(
            "truth is {:?}, estimate is {:?}",
            s_true.shape(),
            s_hat.shape()
        )));
    }
    let count = (s_true.nrows() * s_true.ncols()).max(1) as f64;
    Ok((s_true - s_hat).iter().map(|z| z.norm_sqr()).sum::<f64>() / count)
}

/// Fraction of entries whose nearest QPSK point differs from the truth.
///
/// The constellation of each stream is scaled by that stream's power, which
/// leaves the quadrant decision regions unchanged.
pub fn ser_metric(s_true: &CMat, s_hat: &CMat) -> Result<f64> {
    if s_true.shape() != s_hat.shape() {
        return Err(Error::dim(format!(
            "truth is {:?}, estimate is {:?}",
            s_true.shape(),
            s_hat.shape()
        )));
    }
    let (m, l) = s_true.shape();
    let mut errors = 0usize;
    for i in 0..m {
        let amp = s_true[(i, 0.min(l.saturating_sub(1)))].re.abs();
        for j in 0..l {
            let z = s_true[(i, j)];
            let tol = 1e-9 * amp.max(1e-300);
            if !(amp > 0.0) || (z.re.abs() - amp).abs() > tol || (z.im.abs() - amp).abs() > tol {
                return Err(Error::NotOnConstellation { row: i, col: j });
            }
            let e = s_hat[(i, j)];
            if (e.re >= 0.0) != (z.re > 0.0) || (e.im >= 0.0) != (z.im > 0.0) {
                errors += 1;
            }
        }
    }
    Ok(errors as f64 / (m * l).max(1) as f64)
}

/// Estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Wiener,
    WienerDl { eps: f64 },
    /// Joint moment matrix in an F-norm ball.
    WienerDr { eps: f64 },
    /// Joint moment matrix in a Bures ball.
    WienerDrBures { eps: f64 },
    WienerCe,
    WienerCeDl { eps: f64 },
    WienerCeDr { eps1: f64, eps2: f64 },
    Capon,
    CaponDl { eps: f64 },
    Zf,
    EigenThreshold { mu: f64 },
    Kernel,
    KernelDl { eps: f64 },
    KernelDlK2 { eps: f64 },
    KernelEigen { mu: f64 },
}

impl Method {
    /// Config key.
    pub fn key(&self) -> &'static str {
        match self {
            Method::Wiener => "wiener",
            Method::WienerDl { .. } => "wiener_dl",
            Method::WienerDr { .. } => "wiener_dr",
            Method::WienerDrBures { .. } => "wiener_dr_bures",
            Method::WienerCe => "wiener_ce",
            Method::WienerCeDl { .. } => "wiener_ce_dl",
            Method::WienerCeDr { .. } => "wiener_ce_dr",
            Method::Capon => "capon",
            Method::CaponDl { .. } => "capon_dl",
            Method::Zf => "zf",
            Method::EigenThreshold { .. } => "wiener_et",
            Method::Kernel => "kernel",
            Method::KernelDl { .. } => "kernel_dl",
            Method::KernelDlK2 { .. } => "kernel_dl_k2",
            Method::KernelEigen { .. } => "kernel_et",
        }
    }

    /// Name used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Wiener => "Wiener",
            Method::WienerDl { .. } => "Wiener-DL",
            Method::WienerDr { .. } => "Wiener-DR",
            Method::WienerDrBures { .. } => "Wiener-DR-Bures",
            Method::WienerCe => "Wiener-CE",
            Method::WienerCeDl { .. } => "Wiener-CE-DL",
            Method::WienerCeDr { .. } => "Wiener-CE-DR",
            Method::Capon => "Capon",
            Method::CaponDl { .. } => "Capon-DL",
            Method::Zf => "ZF",
            Method::EigenThreshold { .. } => "Wiener-ET",
            Method::Kernel => "Kernel",
            Method::KernelDl { .. } => "Kernel-DL",
            Method::KernelDlK2 { .. } => "Kernel-DL-K2",
            Method::KernelEigen { .. } => "Kernel-ET",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Method::WienerDl { eps }
            | Method::WienerDr { eps }
            | Method::WienerDrBures { eps }
            | Method::WienerCeDl { eps }
            | Method::CaponDl { eps }
            | Method::KernelDl { eps }
            | Method::KernelDlK2 { eps } => vec![eps],
            Method::WienerCeDr { eps1, eps2 } => vec![eps1, eps2],
            Method::EigenThreshold { mu } | Method::KernelEigen { mu } => vec![mu],
            _ => Vec::new(),
        }
    }

    /// Same method with its tuning parameter set to `v` (both radii for `wiener_ce_dr`).
    pub fn with_param(&self, v: f64) -> Result<Method> {
        Ok(match self {
            Method::WienerDl { .. } => Method::WienerDl { eps: v },
            Method::WienerDr { .. } => Method::WienerDr { eps: v },
            Method::WienerDrBures { .. } => Method::WienerDrBures { eps: v },
            Method::WienerCeDl { .. } => Method::WienerCeDl { eps: v },
            Method::WienerCeDr { .. } => Method::WienerCeDr { eps1: v, eps2: v },
            Method::CaponDl { .. } => Method::CaponDl { eps: v },
            Method::EigenThreshold { .. } => Method::EigenThreshold { mu: v },
            Method::KernelDl { .. } => Method::KernelDl { eps: v },
            Method::KernelDlK2 { .. } => Method::KernelDlK2 { eps: v },
            Method::KernelEigen { .. } => Method::KernelEigen { mu: v },
            other => {
                return Err(Error::param(
                    "method",
                    format!("{} has no tunable parameter", other.key()),
                ))
            }
        })
    }

    /// Parse `key` or `key:p1[:p2]`.
    pub fn parse(text: &str) -> Result<Method> {
        let mut parts = text.trim().split(':');
        let key = parts.next().unwrap_or("").trim();
        let vals = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::param("methods", format!("bad parameter '{p}' in '{text}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |n: usize| -> Result<()> {
            if vals.len() == n {
                Ok(())
            } else {
                Err(Error::param(
                    "methods",
                    format!("'{key}' takes {n} parameter(s), got {}", vals.len()),
                ))
            }
        };
        let one = |v: &[f64]| v.first().copied().unwrap_or(0.0);
        let m = match key {
            "wiener" => Method::Wiener,
            "wiener_ce" => Method::WienerCe,
            "capon" => Method::Capon,
            "zf" => Method::Zf,
            "kernel" => Method::Kernel,
            "wiener_dl" => Method::WienerDl { eps: one(&vals) },
            "wiener_dr" => Method::WienerDr { eps: one(&vals) },
            "wiener_dr_bures" => Method::WienerDrBures { eps: one(&vals) },
            "wiener_ce_dl" => Method::WienerCeDl { eps: one(&vals) },
            "wiener_ce_dr" => Method::WienerCeDr {
                eps1: one(&vals),
                eps2: vals.get(1).copied().unwrap_or(0.0),
            },
            "capon_dl" => Method::CaponDl { eps: one(&vals) },
            "wiener_et" => Method::EigenThreshold { mu: one(&vals) },
            "kernel_dl" => Method::KernelDl { eps: one(&vals) },
            "kernel_dl_k2" => Method::KernelDlK2 { eps: one(&vals) },
            "kernel_et" => Method::KernelEigen { mu: one(&vals) },
            _ => return Err(Error::param("methods", format!("unknown method '{key}'"))),
        };
        want(m.params().len())?;
        for &v in &vals {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param("methods", format!("parameter in '{text}' must be >= 0")));
            }
        }
        Ok(m)
    }

    /// Method from its bare key, with every parameter set to zero.
    pub fn from_key(key: &str) -> Result<Method> {
        Method::parse(key)
            .or_else(|_| Method::parse(&format!("{key}:0")))
            .or_else(|_| Method::parse(&format!("{key}:0:0")))
    }

    /// Inverse of [`Method::parse`].
    pub fn spec_string(&self) -> String {
        let mut s = self.key().to_string();
        for p in self.params() {
            s.push(':');
            s.push_str(&p.to_string());
        }
        s
    }
}

/// Everything needed to run a Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_paths: usize,
    pub snr_db: f64,
    pub snr_reference: SnrReference,
    /// Absolute channel power gain applied after unit normalization.
    pub channel_gain_db: f64,
    pub signal_kind: SignalKind,
    pub pilot_sizes: Vec<usize>,
    pub test_len: usize,
    pub episodes: usize,
    pub tune_episodes: usize,
    pub impulse_fraction: f64,
    pub impulse_max_amplitude: f64,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    /// Use the true `R_v` instead of its estimate in the channel-estimate methods.
    pub rv_known: bool,
    pub kernel: KernelKind,
    /// Multiplier on the median-heuristic bandwidth.
    pub kernel_bw_scale: f64,
    /// Fixed bandwidth overriding the median heuristic.
    pub kernel_bandwidth: Option<f64>,
    pub kernel_degree: u32,
    pub kernel_offset: f64,
    pub kernel_smoothness: f64,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_tx: 4,
            n_rx: 8,
            n_paths: 25,
            snr_db: -10.0,
            snr_reference: SnrReference::PerAntenna,
            channel_gain_db: 0.0,
            signal_kind: SignalKind::Gaussian,
            pilot_sizes: vec![10, 15, 20, 25, 50, 100],
            test_len: 500,
            episodes: 250,
            tune_episodes: 50,
            impulse_fraction: 0.10,
            impulse_max_amplitude: 1.5,
            methods: default_methods(),
            master_seed: 1,
            rv_known: false,
            kernel: KernelKind::Gaussian,
            kernel_bw_scale: 1.0,
            kernel_bandwidth: None,
            kernel_degree: 2,
            kernel_offset: 1.0,
            kernel_smoothness: 1.5,
            solver: SolverConfig::default(),
        }
    }
}

/// The eleven beamformers of the comparison tables, with untuned unit parameters.
pub fn default_methods() -> Vec<Method> {
    vec![
        Method::Wiener,
        Method::WienerDl { eps: 1.0 },
        Method::WienerDr { eps: 1.0 },
        Method::WienerCe,
        Method::WienerCeDl { eps: 1.0 },
        Method::WienerCeDr { eps1: 1.0, eps2: 1.0 },
        Method::Capon,
        Method::CaponDl { eps: 1.0 },
        Method::Zf,
        Method::Kernel,
        Method::KernelDl { eps: 1.0 },
    ]
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("n_paths", self.n_paths),
            ("test_len", self.test_len),
            ("episodes", self.episodes),
            ("tune_episodes", self.tune_episodes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if self.pilot_sizes.is_empty() || self.pilot_sizes.contains(&0) {
            return Err(Error::param("pilot_sizes", "must be a non-empty list of positive counts"));
        }
        if self.methods.is_empty() {
            return Err(Error::param("methods", "must not be empty"));
        }
        if !self.channel_gain_db.is_finite() {
            return Err(Error::param("channel_gain_db", "must be finite"));
        }
        if !(self.kernel_bw_scale > 0.0) || !self.kernel_bw_scale.is_finite() {
            return Err(Error::param("kernel_bw_scale", "must be positive"));
        }
        if let Some(b) = self.kernel_bandwidth {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::param("kernel_bandwidth", "must be positive"));
            }
        }
        self.noise().validate()?;
        self.kernel_template(1.0).validate()?;
        if self.solver.max_iters == 0 || !(self.solver.tol > 0.0) || !(self.solver.step_init > 0.0) {
            return Err(Error::param("solver", "max_iters, tol and step_init must be positive"));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            snr_db: self.snr_db,
            impulse_fraction: self.impulse_fraction,
            impulse_max_amplitude: self.impulse_max_amplitude,
            snr_reference: self.snr_reference,
        }
    }

    fn kernel_template(&self, bandwidth: f64) -> KernelSpec {
        KernelSpec {
            kind: self.kernel,
            bandwidth,
            degree: self.kernel_degree,
            offset: self.kernel_offset,
            smoothness: self.kernel_smoothness,
        }
    }

    /// Kernel for a pilot frame: fixed bandwidth if configured, else scaled median heuristic.
    pub fn kernel_for(&self, frame: &PilotFrame) -> KernelSpec {
        let bw = self.kernel_bandwidth.unwrap_or_else(|| {
            self.kernel_bw_scale * rkhs::median_bandwidth(&lift_columns(&frame.x_block))
        });
        self.kernel_template(bw)
    }
}

/// One episode's data: pilot frame plus a test block from the same channel.
#[derive(Debug, Clone)]
pub struct EpisodeData {
    pub pilots: PilotFrame,
    pub s_test: CMat,
    pub x_test: CMat,
}

/// Build scene, channel, pilots and test data for one episode. The pilot and
/// test streams depend on the seed only, so different pilot sizes share the
/// same scene and the leading pilot columns.
pub fn generate_episode(cfg: &ExperimentConfig, pilot_size: usize, episode_seed: u64) -> Result<EpisodeData> {
    let scene = generate_scene(cfg.n_tx, cfg.n_rx, cfg.n_paths, derive_seed(episode_seed, 1))?;
    let gain = 10f64.powf(cfg.channel_gain_db / 20.0);
    let h = synthesize_channel(&scene)? * C64::from(gain);
    let r_s = CMat::identity(cfg.n_tx, cfg.n_tx);
    let noise = cfg.noise();
    let sigma2 = noise.noise_variance(expected_signal_power(&h, &r_s), cfg.n_rx, cfg.n_tx);
    let sigma2 = if sigma2.is_finite() { sigma2 } else { 0.0 };
    let s = generate_signals(cfg.signal_kind, cfg.n_tx, pilot_size, &r_s, derive_seed(episode_seed, 2))?;
    let s_test = generate_signals(cfg.signal_kind, cfg.n_tx, cfg.test_len, &r_s, derive_seed(episode_seed, 3))?;
    let (x, r_v) = transmit_with_variance(&h, &s, sigma2, &noise, derive_seed(episode_seed, 4))?;
    let (x_test, _) = transmit_with_variance(&h, &s_test, sigma2, &noise, derive_seed(episode_seed, 5))?;
    Ok(EpisodeData {
        pilots: PilotFrame::new(s, x, h, r_v)?,
        s_test,
        x_test,
    })
}

/// Fit `method` on the pilots and return the estimate of the test block.
pub fn fit_and_predict(cfg: &ExperimentConfig, method: &Method, data: &EpisodeData) -> Result<CMat> {
    let frame = &data.pilots;
    let linear_w = |w: linear::BeamformerWeights| Ok(w.apply(&data.x_test));
    let noise_cov = |est: &NominalEstimates| {
        if cfg.rv_known {
            frame.true_r_v.clone()
        } else {
            est.r_v_hat.clone()
        }
    };
    let moments = || -> Result<JointMoments> { estimate_moments(frame) };
    match *method {
        Method::Wiener => linear_w(linear::wiener(&moments()?)?),
        Method::WienerDl { eps } => linear_w(linear::dr_beamformer(
            &moments()?,
            &UncertaintySpec::new(UncertaintyKind::DiagLoading, eps),
        )?),
        Method::WienerDr { eps } => linear_w(dro::dr_wasserstein_beamformer(
            &moments()?,
            eps,
            &cfg.solver,
            BallKind::JointFnorm,
        )?),
        Method::WienerDrBures { eps } => linear_w(dro::dr_wasserstein_beamformer(
            &moments()?,
            eps,
            &cfg.solver,
            BallKind::JointWasserstein,
        )?),
        Method::WienerCe => {
            let est = NominalEstimates::from_frame(frame)?;
            linear_w(linear::wiener_ce(&est.h_hat, &est.moments.r_s, &noise_cov(&est))?)
        }
        Method::WienerCeDl { eps } => {
            let est = NominalEstimates::from_frame(frame)?;
            linear_w(linear::dr_rs_rv_beamformer(
                &est.h_hat,
                &est.moments.r_s,
                &noise_cov(&est),
                0.0,
                eps,
                RsRvVariant::RvIdentity,
            )?)
        }
        Method::WienerCeDr { eps1, eps2 } => {
            let est = NominalEstimates::from_frame(frame)?;
            linear_w(dro::dr_blocks_beamformer(
                &est.h_hat,
                &est.moments.r_s,
                &noise_cov(&est),
                eps1,
                eps2,
                &cfg.solver,
            )?)
        }
        Method::Capon | Method::CaponDl { .. } => {
            let eps = method.params().first().copied().unwrap_or(0.0);
            let est = NominalEstimates::from_frame(frame)?;
            linear_w(linear::capon(&est.h_hat, &est.moments.r_x, eps)?)
        }
        Method::Zf => {
            let est = NominalEstimates::from_frame(frame)?;
            linear_w(linear::zero_forcing(&est.h_hat)?)
        }
        Method::EigenThreshold { mu } => linear_w(linear::eigen_threshold_bf(&moments()?, mu)?),
        Method::Kernel | Method::KernelDl { .. } | Method::KernelDlK2 { .. } | Method::KernelEigen { .. } => {
            let (km, p) = match *method {
                Method::KernelDl { eps } => (KernelMethod::KdlK, eps),
                Method::KernelDlK2 { eps } => (KernelMethod::KdlK2, eps),
                Method::KernelEigen { mu } => (KernelMethod::EigenThreshold, mu),
                _ => (KernelMethod::Nominal, 0.0),
            };
            let est = rkhs::fit_kernel_estimator(frame, &cfg.kernel_for(frame), km, p)?;
            rkhs::predict_block(&est, &data.x_test)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    Mse,
    Ser,
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricName::Mse => "mse",
            MetricName::Ser => "ser",
        })
    }
}

/// One (method, pilot size, metric) cell. `value` is NaN when no episode succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub pilot_size: usize,
    pub metric: MetricName,
    pub value: f64,
    /// Standard error of the mean over successful episodes.
    pub std_err: f64,
    pub train_time_s: f64,
    pub episodes_ok: usize,
}

/// Per-method outcome of a single episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub method: String,
    pub mse: Option<f64>,
    pub ser: Option<f64>,
    pub train_time_s: f64,
    pub error: Option<String>,
}

/// Fit and evaluate every configured method on one episode; failures are
/// recorded per method.
pub fn run_episode_outcomes(cfg: &ExperimentConfig, pilot_size: usize, episode_seed: u64) -> Result<Vec<EpisodeOutcome>> {
    let data = generate_episode(cfg, pilot_size, episode_seed)?;
    Ok(cfg
        .methods
        .iter()
        .map(|m| {
            let t0 = Instant::now();
            let fit = fit_and_predict(cfg, m, &data);
            let secs = t0.elapsed().as_secs_f64();
            let scored = fit.and_then(|s_hat| {
                let mse = mse_metric(&data.s_test, &s_hat)?;
                if !mse.is_finite() {
                    return Err(Error::param("estimate", "non-finite test error"));
                }
                let ser = match cfg.signal_kind {
                    SignalKind::Qpsk => Some(ser_metric(&data.s_test, &s_hat)?),
                    SignalKind::Gaussian => None,
                };
                Ok((mse, ser))
            });
            match scored {
                Ok((mse, ser)) => EpisodeOutcome {
                    method: m.label().to_string(),
                    mse: Some(mse),
                    ser,
                    train_time_s: secs,
                    error: None,
                },
                Err(e) => EpisodeOutcome {
                    method: m.label().to_string(),
                    mse: None,
                    ser: None,
                    train_time_s: secs,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Rows for one episode (`episodes_ok` is 0 or 1).
pub fn run_episode(cfg: &ExperimentConfig, pilot_size: usize, episode_seed: u64) -> Result<Vec<ResultRow>> {
    let outcomes = run_episode_outcomes(cfg, pilot_size, episode_seed)?;
    Ok(aggregate(cfg, pilot_size, &[outcomes]))
}

/// Seed of evaluation episode `index`.
pub fn episode_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

const TUNE_STREAM: u64 = 0x7475_6e65;

/// Seed of tuning episode `index`, drawn from a stream separate from evaluation.
pub fn tuning_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(master_seed, TUNE_STREAM), index as u64)
}

fn aggregate(cfg: &ExperimentConfig, pilot_size: usize, episodes: &[Vec<EpisodeOutcome>]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (k, m) in cfg.methods.iter().enumerate() {
        let mut metrics = vec![MetricName::Mse];
        if cfg.signal_kind == SignalKind::Qpsk {
            metrics.push(MetricName::Ser);
        }
        for metric in metrics {
            let mut vals = Vec::new();
            let mut time = 0.0;
            for ep in episodes {
                let o = &ep[k];
                let v = match metric {
                    MetricName::Mse => o.mse,
                    MetricName::Ser => o.ser,
                };
                if let Some(v) = v {
                    vals.push(v);
                    time += o.train_time_s;
                }
            }
            let (mean, se) = mean_and_se(&vals);
            rows.push(ResultRow {
                method: m.label().to_string(),
                pilot_size,
                metric,
                value: mean,
                std_err: se,
                train_time_s: if vals.is_empty() { f64::NAN } else { time / vals.len() as f64 },
                episodes_ok: vals.len(),
            });
        }
    }
    rows
}

pub fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_seeds(
    cfg: &ExperimentConfig,
    pilot_size: usize,
    seeds: &[u64],
) -> Result<Vec<Vec<EpisodeOutcome>>> {
    seeds
        .par_iter()
        .map(|&s| run_episode_outcomes(cfg, pilot_size, s))
        .collect()
}

/// Mean metrics per pilot size and method over `cfg.episodes` episodes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.episodes).map(|i| episode_seed(cfg.master_seed, i)).collect();
    let mut rows = Vec::new();
    for &l in &cfg.pilot_sizes {
        let outcomes = run_seeds(cfg, l, &seeds)?;
        rows.extend(aggregate(cfg, l, &outcomes));
    }
    Ok(rows)
}

/// Run `f` on a dedicated pool of `jobs` worker threads.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// [`run_experiment`] on a dedicated pool of `jobs` threads.
pub fn run_experiment_jobs(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRow>> {
    with_jobs(jobs, || run_experiment(cfg))
}

/// Outcome of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: f64,
    /// `(parameter, mean MSE over pilot sizes)` for each grid point that produced a score.
    pub scores: Vec<(f64, f64)>,
}

/// Grid search for the parameter minimizing the MSE averaged over all pilot
/// sizes, on tuning episodes disjoint from the evaluation seeds. Ties go to the
/// smaller parameter.
pub fn tune_parameter(cfg: &ExperimentConfig, method: &Method, grid: &[f64]) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let candidates = grid
        .iter()
        .map(|&g| method.with_param(g))
        .collect::<Result<Vec<Method>>>()?;
    let mut tcfg = cfg.clone();
    tcfg.methods = candidates;
    tcfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.tune_episodes).map(|i| tuning_seed(cfg.master_seed, i)).collect();
    let mut sums = vec![0.0; grid.len()];
    let mut ok = vec![true; grid.len()];
    for &l in &cfg.pilot_sizes {
        let outcomes = run_seeds(&tcfg, l, &seeds)?;
        for (k, slot) in sums.iter_mut().enumerate() {
            let vals: Vec<f64> = outcomes.iter().filter_map(|ep| ep[k].mse).collect();
            if vals.is_empty() {
                ok[k] = false;
            } else {
                *slot += mean_and_se(&vals).0;
            }
        }
    }
    let scores: Vec<(f64, f64)> = grid
        .iter()
        .zip(&sums)
        .zip(&ok)
        .filter(|(_, &good)| good)
        .map(|((&g, &s), _)| (g, s / cfg.pilot_sizes.len() as f64))
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for &(g, s) in &scores {
        if best.is_none_or(|(_, bs)| s < bs) {
            best = Some((g, s));
        }
    }
    let (best, _) = best.ok_or_else(|| Error::param("grid", "every grid point failed"))?;
    Ok(TuneResult { best, scores })
}

/// Wiener MSE per stream computed from the true model.
pub fn model_wiener_mse(h: &CMat, r_s: &CMat, r_v: &CMat) -> Result<f64> {
    let m = JointMoments::from_model(h, r_s, r_v)?;
    Ok(linear::min_error(&m)? / h.ncols() as f64)
}

//! Scene geometry, ray-sum channel synthesis, transmit signals and noisy reception.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::types::{check_hermitian, herm_sqrt, trace_re, CMat, C64};

pub const TX_POS: [f64; 2] = [0.0, 0.0];
pub const RX_POS: [f64; 2] = [500.0, 450.0];
pub const FIELD_SIZE: f64 = 500.0;
/// Carrier wavelength in meters (3 GHz).
pub const DEFAULT_WAVELENGTH: f64 = 0.1;

/// Mix a base seed with a tag into an independent-looking 64-bit seed.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(base ^ splitmix(tag))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Transmitter, receiver and scatterer positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScene {
    pub tx_pos: [f64; 2],
    pub rx_pos: [f64; 2],
    pub scatterers: Vec<[f64; 2]>,
    pub n_tx: usize,
    pub n_rx: usize,
    pub carrier_wavelength: f64,
    pub rng_seed: u64,
}

/// Fixed tx/rx positions, `n_paths` scatterers uniform over the square field.
pub fn generate_scene(n_tx: usize, n_rx: usize, n_paths: usize, seed: u64) -> Result<ChannelScene> {
    for (name, v) in [("n_tx", n_tx), ("n_rx", n_rx), ("n_paths", n_paths)] {
        if v == 0 {
            return Err(Error::param(name, "must be at least 1"));
        }
    }
    let mut r = rng(seed);
    let u = Uniform::new_inclusive(0.0, FIELD_SIZE).expect("valid range");
    let scatterers = (0..n_paths)
        .map(|_| [u.sample(&mut r), u.sample(&mut r)])
        .collect();
    Ok(ChannelScene {
        tx_pos: TX_POS,
        rx_pos: RX_POS,
        scatterers,
        n_tx,
        n_rx,
        carrier_wavelength: DEFAULT_WAVELENGTH,
        rng_seed: seed,
    })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Half-wavelength ULA along the y axis, steered toward `dir` (unit vector).
fn steering(n: usize, dir: [f64; 2]) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(1.0, PI * k as f64 * dir[1]))
        .collect()
}

/// Ray-sum channel over single-bounce scatterer paths, scaled to unit average entry power.
pub fn synthesize_channel(scene: &ChannelScene) -> Result<CMat> {
    if scene.scatterers.is_empty() {
        return Err(Error::param("scatterers", "scene has no scatterers"));
    }
    let all_finite = scene
        .scatterers
        .iter()
        .chain([&scene.tx_pos, &scene.rx_pos])
        .all(|p| p[0].is_finite() && p[1].is_finite());
    if !all_finite || !(scene.carrier_wavelength > 0.0) {
        return Err(Error::param("scene", "positions and wavelength must be finite"));
    }
    let (n, m) = (scene.n_rx, scene.n_tx);
    let mut h = CMat::zeros(n, m);
    for &p in &scene.scatterers {
        let d1 = dist(scene.tx_pos, p);
        let d2 = dist(p, scene.rx_pos);
        if d1 < 1e-9 || d2 < 1e-9 {
            return Err(Error::param(
                "scatterers",
                "scatterer coincides with an antenna array (zero-length path)",
            ));
        }
        let to_tx = [(p[0] - scene.tx_pos[0]) / d1, (p[1] - scene.tx_pos[1]) / d1];
        let to_rx = [(p[0] - scene.rx_pos[0]) / d2, (p[1] - scene.rx_pos[1]) / d2];
        let a_tx = steering(m, to_tx);
        let a_rx = steering(n, to_rx);
        let phase = -2.0 * PI * (d1 + d2) / scene.carrier_wavelength;
        let g = C64::from_polar(1.0 / (d1 * d2), phase);
        for i in 0..n {
            for j in 0..m {
                h[(i, j)] += g * a_rx[i] * a_tx[j].conj();
            }
        }
    }
    let power = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n * m) as f64;
    if !(power > 0.0) {
        return Err(Error::param("scene", "synthesized channel is identically zero"));
    }
    Ok(h / C64::from(power.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Gaussian,
    Qpsk,
}

impl std::str::FromStr for SignalKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SignalKind::Gaussian),
            "qpsk" => Ok(SignalKind::Qpsk),
            _ => Err(Error::param("signal_kind", format!("unknown kind '{s}'"))),
        }
    }
}

impl std::fmt::Display for SignalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SignalKind::Gaussian => "gaussian",
            SignalKind::Qpsk => "qpsk",
        })
    }
}

pub(crate) fn complex_normal(r: &mut impl Rng, var: f64) -> C64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(r);
    let im: f64 = StandardNormal.sample(r);
    C64::new(sd * re, sd * im)
}

/// Transmit block `S` (M×L): circular Gaussian columns with covariance `r_s`,
/// or QPSK symbols scaled by the diagonal of `r_s`.
pub fn generate_signals(kind: SignalKind, m: usize, l: usize, r_s: &CMat, seed: u64) -> Result<CMat> {
    if r_s.shape() != (m, m) {
        return Err(Error::dim(format!("R_s is {:?}, expected {m}x{m}", r_s.shape())));
    }
    check_hermitian(r_s)?;
    let mut r = rng(seed);
    match kind {
        SignalKind::Gaussian => {
            let z = CMat::from_fn(m, l, |_, _| complex_normal(&mut r, 1.0));
            Ok(herm_sqrt(r_s) * z)
        }
        SignalKind::Qpsk => {
            for i in 0..m {
                for j in 0..m {
                    if i != j && r_s[(i, j)].norm() > 1e-12 {
                        return Err(Error::param("r_s", "QPSK streams need a diagonal covariance"));
                    }
                }
            }
            let amp: Vec<f64> = (0..m)
                .map(|i| (r_s[(i, i)].re.max(0.0)).sqrt() * FRAC_1_SQRT_2)
                .collect();
            let mut s = CMat::zeros(m, l);
            for c in 0..l {
                for i in 0..m {
                    let re = if r.random::<bool>() { 1.0 } else { -1.0 };
                    let im = if r.random::<bool>() { 1.0 } else { -1.0 };
                    s[(i, c)] = C64::new(re * amp[i], im * amp[i]);
                }
            }
            Ok(s)
        }
    }
}

/// How the SNR is referenced to the received signal power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrReference {
    /// `E‖Hs‖² / (N σ²)`.
    PerAntenna,
    /// `E‖Hs‖² / (N M σ²)`: signal power of one stream at one antenna.
    PerStream,
}

impl std::str::FromStr for SnrReference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_antenna" => Ok(SnrReference::PerAntenna),
            "per_stream" => Ok(SnrReference::PerStream),
            _ => Err(Error::param("snr_reference", format!("unknown reference '{s}'"))),
        }
    }
}

impl std::fmt::Display for SnrReference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SnrReference::PerAntenna => "per_antenna",
            SnrReference::PerStream => "per_stream",
        })
    }
}

/// Gaussian noise level and impulse contamination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub impulse_fraction: f64,
    pub impulse_max_amplitude: f64,
    pub snr_reference: SnrReference,
}

impl NoiseSpec {
    pub fn gaussian(snr_db: f64) -> Self {
        NoiseSpec {
            snr_db,
            impulse_fraction: 0.0,
            impulse_max_amplitude: 0.0,
            snr_reference: SnrReference::PerAntenna,
        }
    }

    pub fn noiseless() -> Self {
        NoiseSpec::gaussian(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.impulse_fraction) {
            return Err(Error::param("impulse_fraction", "must lie in [0, 1]"));
        }
        if !(self.impulse_max_amplitude >= 0.0) || !self.impulse_max_amplitude.is_finite() {
            return Err(Error::param("impulse_max_amplitude", "must be finite and non-negative"));
        }
        if self.snr_db.is_nan() {
            return Err(Error::param("snr_db", "is NaN"));
        }
        Ok(())
    }

    /// Gaussian noise variance per antenna given `E‖Hs‖²` and the array sizes.
    pub fn noise_variance(&self, signal_power: f64, n_rx: usize, n_tx: usize) -> f64 {
        let snr = 10f64.powf(self.snr_db / 10.0);
        let denom = match self.snr_reference {
            SnrReference::PerAntenna => n_rx as f64,
            SnrReference::PerStream => (n_rx * n_tx) as f64,
        };
        signal_power / (denom * snr)
    }
}

/// `E‖Hs‖² = Tr(H R_s Hᴴ)`.
pub fn expected_signal_power(h: &CMat, r_s: &CMat) -> f64 {
    trace_re(&(h * r_s * h.adjoint()))
}

/// Received block `X = HS + V` with the Gaussian noise level set from the
/// block's own average signal power. Returns `X` and the Gaussian covariance `σ²I`.
pub fn transmit(h: &CMat, s_block: &CMat, noise: &NoiseSpec, seed: u64) -> Result<(CMat, CMat)> {
    if h.ncols() != s_block.nrows() {
        return Err(Error::dim(format!(
            "H is {:?} but S has {} rows",
            h.shape(),
            s_block.nrows()
        )));
    }
    let l = s_block.ncols().max(1);
    let power = (h * s_block).iter().map(|z| z.norm_sqr()).sum::<f64>() / l as f64;
    let sigma2 = noise.noise_variance(power, h.nrows(), h.ncols());
    transmit_with_variance(h, s_block, sigma2, noise, seed)
}

/// Like [`transmit`] with an explicit Gaussian noise variance.
pub fn transmit_with_variance(
    h: &CMat,
    s_block: &CMat,
    sigma2: f64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<(CMat, CMat)> {
    noise.validate()?;
    if h.ncols() != s_block.nrows() {
        return Err(Error::dim(format!(
            "H is {:?} but S has {} rows",
            h.shape(),
            s_block.nrows()
        )));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::param("sigma2", "noise variance must be finite and non-negative"));
    }
    let (n, l) = (h.nrows(), s_block.ncols());
    let mut r = rng(seed);
    let mut x = h * s_block;
    if sigma2 > 0.0 {
        for z in x.iter_mut() {
            *z += complex_normal(&mut r, sigma2);
        }
    }
    let hits = impulse_count(noise.impulse_fraction, l);
    let a = noise.impulse_max_amplitude;
    if hits > 0 && a > 0.0 {
        let u = Uniform::new_inclusive(-a, a).expect("valid range");
        let mut cols = sample(&mut r, l, hits.min(l)).into_vec();
        cols.sort_unstable();
        for c in cols {
            for i in 0..n {
                x[(i, c)] += C64::new(u.sample(&mut r), u.sample(&mut r));
            }
        }
    }
    Ok((x, CMat::identity(n, n) * C64::from(sigma2)))
}

/// Number of impulse-hit columns in a block of `l` columns.
pub fn impulse_count(fraction: f64, l: usize) -> usize {
    (fraction * l as f64).round() as usize
}

/// Matched pilot blocks with the ground truth used to generate them.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotFrame {
    pub s_block: CMat,
    pub x_block: CMat,
    pub true_h: CMat,
    pub true_r_v: CMat,
}

impl PilotFrame {
    pub fn new(s_block: CMat, x_block: CMat, true_h: CMat, true_r_v: CMat) -> Result<Self> {
        if s_block.ncols() != x_block.ncols() {
            return Err(Error::dim(format!(
                "S has {} columns, X has {}",
                s_block.ncols(),
                x_block.ncols()
            )));
        }
        let (n, m) = (x_block.nrows(), s_block.nrows());
        if true_h.shape() != (n, m) || true_r_v.shape() != (n, n) {
            return Err(Error::dim("ground-truth H or R_v does not match the blocks"));
        }
        Ok(PilotFrame {
            s_block,
            x_block,
            true_h,
            true_r_v,
        })
    }

    pub fn len(&self) -> usize {
        self.s_block.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_rx(&self) -> usize {
        self.x_block.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.s_block.nrows()
    }
}

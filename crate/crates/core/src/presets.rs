//! Named experiment presets for the comparison tables and the Gaussian/QPSK figures.

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, Method};
use crate::rkhs::KernelKind;
use crate::scene::{SignalKind, SnrReference};

pub const TABLE_PILOT_SIZES: [usize; 6] = [10, 15, 20, 25, 50, 100];
pub const FIG_PILOT_SIZES: [usize; 5] = [32, 50, 75, 100, 200];

pub const PRESETS: &[&str] = &[
    "table1", "table2", "table3", "table4", "table5", "table6", "tables", "fig3a", "fig3b",
    "fig3c", "fig3d", "fig4a", "fig4b", "fig4c", "fig4d",
];

/// The eleven table methods with parameters tuned once over all table pilot
/// sizes on tuning seeds (see `drbf tune`).
pub fn table_methods() -> Vec<Method> {
    vec![
        Method::Wiener,
        Method::WienerDl { eps: 0.3 },
        Method::WienerDr { eps: 1.0 },
        Method::WienerCe,
        Method::WienerCeDl { eps: 0.3 },
        Method::WienerCeDr { eps1: 1.0, eps2: 1.0 },
        Method::Capon,
        Method::CaponDl { eps: 10.0 },
        Method::Zf,
        Method::Kernel,
        Method::KernelDl { eps: 1.0 },
    ]
}

/// Shared setting of the tables: impulse-dominated reception with a weak channel.
pub fn table_base() -> ExperimentConfig {
    ExperimentConfig {
        n_tx: 4,
        n_rx: 8,
        n_paths: 25,
        snr_db: -10.0,
        snr_reference: SnrReference::PerStream,
        channel_gain_db: -30.0,
        signal_kind: SignalKind::Gaussian,
        pilot_sizes: TABLE_PILOT_SIZES.to_vec(),
        test_len: 500,
        episodes: 250,
        impulse_fraction: 0.10,
        impulse_max_amplitude: 1.5,
        methods: table_methods(),
        kernel: KernelKind::Gaussian,
        kernel_bw_scale: 0.5,
        ..ExperimentConfig::default()
    }
}

/// Non-robust methods drawn in the figures.
pub fn fig_methods() -> Vec<Method> {
    vec![
        Method::Wiener,
        Method::WienerCe,
        Method::Capon,
        Method::Zf,
        Method::Kernel,
    ]
}

fn fig(signal: SignalKind, n_rx: usize, snr_db: f64, rv_known: bool) -> ExperimentConfig {
    ExperimentConfig {
        n_tx: 4,
        n_rx,
        snr_db,
        snr_reference: SnrReference::PerStream,
        signal_kind: signal,
        pilot_sizes: FIG_PILOT_SIZES.to_vec(),
        episodes: 100,
        impulse_fraction: 0.0,
        impulse_max_amplitude: 0.0,
        rv_known,
        methods: fig_methods(),
        ..ExperimentConfig::default()
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let table = |l: usize| ExperimentConfig {
        pilot_sizes: vec![l],
        ..table_base()
    };
    Ok(match name {
        "table1" => table(10),
        "table2" => table(15),
        "table3" => table(20),
        "table4" => table(25),
        "table5" => table(50),
        "table6" => table(100),
        "tables" => table_base(),
        "fig3a" => fig(SignalKind::Gaussian, 8, 10.0, false),
        "fig3b" => fig(SignalKind::Gaussian, 8, 10.0, true),
        "fig3c" => fig(SignalKind::Gaussian, 16, 10.0, false),
        "fig3d" => fig(SignalKind::Gaussian, 16, -10.0, false),
        "fig4a" => fig(SignalKind::Qpsk, 8, 10.0, false),
        "fig4b" => fig(SignalKind::Qpsk, 8, 10.0, true),
        "fig4c" => fig(SignalKind::Qpsk, 16, 10.0, false),
        "fig4d" => fig(SignalKind::Qpsk, 16, -10.0, false),
        _ => {
            return Err(Error::param(
                "preset",
                format!("unknown preset '{name}' (expected one of {})", PRESETS.join(", ")),
            ))
        }
    })
}

const PUBLISHED_METHODS: [&str; 11] = [
    "Wiener",
    "Wiener-DL",
    "Wiener-DR",
    "Wiener-CE",
    "Wiener-CE-DL",
    "Wiener-CE-DR",
    "Capon",
    "Capon-DL",
    "ZF",
    "Kernel",
    "Kernel-DL",
];

/// Published MSE per method (rows in `PUBLISHED_METHODS` order) for each table pilot size.
const PUBLISHED_MSE: [[f64; 11]; 6] = [
    [3.30, 2.11, 1.97, 3.30, 2.50, 3.31, 5.44, 4.52, 2.12, 1.07, 0.80],
    [1.38, 1.23, 1.07, 1.38, 1.30, 1.39, 4.48, 4.34, 2.97, 1.12, 0.70],
    [1.12, 1.05, 0.93, 1.12, 1.08, 1.13, 5.01, 4.94, 3.82, 1.20, 0.66],
    [0.92, 0.88, 0.80, 0.92, 0.90, 0.92, 4.94, 4.89, 4.06, 1.14, 0.60],
    [0.69, 0.68, 0.65, 0.69, 0.68, 0.70, 6.95, 6.93, 6.36, 0.92, 0.53],
    [0.57, 0.57, 0.55, 0.57, 0.57, 0.58, 9.89, 9.88, 9.45, 0.72, 0.49],
];

/// Published table MSE for a method label and pilot size, when one exists.
pub fn published_table_mse(method: &str, pilot_size: usize) -> Option<f64> {
    let col = TABLE_PILOT_SIZES.iter().position(|&l| l == pilot_size)?;
    let row = PUBLISHED_METHODS.iter().position(|&m| m == method)?;
    Some(PUBLISHED_MSE[col][row])
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drbf::config::{apply_override, parse_config, to_config_text};
use drbf::csvio::{plot_script, write_frame, write_results};
use drbf::harness::{
    episode_seed, generate_episode, run_experiment_jobs, tune_parameter, with_jobs, ExperimentConfig, Method,
    ResultRow,
};
use drbf::presets::{published_table_mse, preset};

#[derive(Parser)]
#[command(name = "drbf", version, about = "Distributionally robust receive beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (table1..table6, tables, fig3a..fig4d).
    #[arg(long)]
    preset: Option<String>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for episodes.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named preset and annotate results with published values.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid-search one method parameter on tuning seeds.
    Tune {
        #[command(flatten)]
        common: Common,
        /// Method to tune, e.g. `wiener_dl` or `kernel_dl:1`.
        #[arg(long)]
        method: String,
        /// Comma-separated parameter grid.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Optional directory for tune.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one generated pilot frame (S, X, H, R_v) as CSV.
    ExportFrame {
        #[command(flatten)]
        common: Common,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Pilot count (defaults to the first configured pilot size).
        #[arg(long)]
        pilot_size: Option<usize>,
    },
}

fn load(common: &Common, need_source: bool) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => return Err("use either --config or --preset, not both".into()),
        (Some(path), None) => parse_config(path).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, Some(name)) => preset(name).map_err(|e| e.to_string())?,
        (None, None) if need_source => return Err("--config or --preset is required".into()),
        (None, None) => ExperimentConfig::default(),
    };
    for o in &common.overrides {
        apply_override(&mut cfg, o).map_err(|e| format!("--set {o}: {e}"))?;
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn manifest(cfg: &ExperimentConfig, command: &str) -> String {
    format!(
        "drbf {}\ncommand: {command}\nmaster_seed: {}\nartifacts: results.csv, plot.gp\n\n[config]\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.master_seed,
        to_config_text(cfg)
    )
}

fn emit(out: &Path, cfg: &ExperimentConfig, rows: &[ResultRow], command: &str, annotate: bool) -> Result<bool, String> {
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let mut buf = Vec::new();
    let published = |r: &ResultRow| match r.metric {
        drbf::harness::MetricName::Mse => published_table_mse(&r.method, r.pilot_size),
        drbf::harness::MetricName::Ser => None,
    };
    let published_ref: Option<&dyn Fn(&ResultRow) -> Option<f64>> = if annotate { Some(&published) } else { None };
    write_results(&mut buf, rows, published_ref).map_err(|e| e.to_string())?;
    let write = |name: &str, bytes: &[u8]| {
        fs::write(out.join(name), bytes).map_err(|e| format!("{}: {e}", out.join(name).display()))
    };
    write("results.csv", &buf)?;
    write("manifest.txt", manifest(cfg, command).as_bytes())?;
    write("plot.gp", plot_script(rows, "results.csv", command).as_bytes())?;
    let mut ok = true;
    for m in &cfg.methods {
        if rows.iter().filter(|r| r.method == m.label()).all(|r| r.episodes_ok == 0) {
            eprintln!("method {} failed in every episode", m.label());
            ok = false;
        }
    }
    Ok(ok)
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:<16} {:>6} {:>5} {:>12} {:>10} {:>6}", "method", "L", "metric", "value", "time_s", "ok");
    for r in rows {
        println!(
            "{:<16} {:>6} {:>5} {:>12.4e} {:>10.2e} {:>6}",
            r.method, r.pilot_size, r.metric, r.value, r.train_time_s, r.episodes_ok
        );
    }
}

fn real_main(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { common, out } => {
            if common.config.is_none() {
                return Err("run needs --config".into());
            }
            let cfg = load(&common, true)?;
            let rows = run_experiment_jobs(&cfg, common.jobs).map_err(|e| e.to_string())?;
            print_rows(&rows);
            let label = format!("run {}", common.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
            emit(&out, &cfg, &rows, &label, false)
        }
        Command::Reproduce { common, out } => {
            let name = common.preset.clone().ok_or("reproduce needs --preset")?;
            let cfg = load(&common, true)?;
            let rows = run_experiment_jobs(&cfg, common.jobs).map_err(|e| e.to_string())?;
            print_rows(&rows);
            emit(&out, &cfg, &rows, &format!("reproduce {name}"), true)
        }
        Command::Tune { common, method, grid, out } => {
            let cfg = load(&common, true)?;
            let m = Method::parse(&method)
                .or_else(|_| Method::from_key(&method))
                .map_err(|e| e.to_string())?;
            let res = with_jobs(common.jobs, || tune_parameter(&cfg, &m, &grid)).map_err(|e| e.to_string())?;
            println!("{:>12} {:>12}", "param", "mean_mse");
            for (g, s) in &res.scores {
                println!("{g:>12} {s:>12.5}");
            }
            println!("best {} = {}", m.key(), res.best);
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                let mut text = String::from("param,mean_mse\n");
                for (g, s) in &res.scores {
                    text.push_str(&format!("{g},{s}\n"));
                }
                fs::write(dir.join("tune.csv"), text).map_err(|e| e.to_string())?;
                fs::write(dir.join("manifest.txt"), manifest(&cfg, &format!("tune {method}"))).map_err(|e| e.to_string())?;
            }
            Ok(true)
        }
        Command::ExportFrame { common, out, pilot_size } => {
            let cfg = load(&common, false)?;
            let l = pilot_size.unwrap_or(cfg.pilot_sizes[0]);
            let data = generate_episode(&cfg, l, episode_seed(cfg.master_seed, 0)).map_err(|e| e.to_string())?;
            write_frame(&out, &data.pilots).map_err(|e| e.to_string())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

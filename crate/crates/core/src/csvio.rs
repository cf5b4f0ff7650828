//! Plain CSV containers for frames, weights, kernel estimators, solver traces and results.
//!
//! Matrix sections start with a header record `matrix,<name>,<rows>,<cols>`
//! (or `rmatrix` for real matrices) followed by one record per row. Complex
//! entries occupy two fields, `re,im`. Floats use the shortest representation
//! that parses back to the same value, so a write/read cycle is exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dro::TraceRow;
use crate::error::{Error, Result};
use crate::harness::ResultRow;
use crate::linear::BeamformerWeights;
use crate::rkhs::{KernelEstimator, KernelKind, KernelSpec};
use crate::scene::PilotFrame;
use crate::types::{CMat, RMat, C64};

/// A parsed container: named matrices plus free `key,value...` records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub complex: Vec<(String, CMat)>,
    pub real: Vec<(String, RMat)>,
    pub meta: Vec<Vec<String>>,
}

impl Container {
    pub fn complex(&self, name: &str) -> Result<&CMat> {
        self.complex
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Io(format!("missing complex matrix '{name}'")))
    }

    pub fn real(&self, name: &str) -> Result<&RMat> {
        self.real
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Io(format!("missing real matrix '{name}'")))
    }

    pub fn meta_value(&self, key: &str) -> Option<&[String]> {
        self.meta
            .iter()
            .find(|r| r.first().map(String::as_str) == Some(key))
            .map(|r| &r[1..])
    }

    pub fn write_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        for rec in &self.meta {
            w.write_record(rec)?;
        }
        for (name, m) in &self.complex {
            w.write_record(["matrix", name, &m.nrows().to_string(), &m.ncols().to_string()])?;
            for r in 0..m.nrows() {
                let fields: Vec<String> = (0..m.ncols())
                    .flat_map(|c| [m[(r, c)].re.to_string(), m[(r, c)].im.to_string()])
                    .collect();
                w.write_record(&fields)?;
            }
        }
        for (name, m) in &self.real {
            w.write_record(["rmatrix", name, &m.nrows().to_string(), &m.ncols().to_string()])?;
            for r in 0..m.nrows() {
                let fields: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
                w.write_record(&fields)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(input: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
        let mut out = Container::default();
        let mut i = 0;
        let num = |s: &str, line: usize| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("'{s}' is not a number"),
            })
        };
        while i < records.len() {
            let rec = &records[i];
            let line = i + 1;
            let tag = rec.get(0).unwrap_or("");
            if tag == "matrix" || tag == "rmatrix" {
                if rec.len() != 4 {
                    return Err(Error::Parse {
                        line,
                        msg: "matrix header needs name, rows, cols".into(),
                    });
                }
                let name = rec[1].to_string();
                let rows: usize = rec[2].trim().parse().map_err(|_| Error::Parse {
                    line,
                    msg: "bad row count".into(),
                })?;
                let cols: usize = rec[3].trim().parse().map_err(|_| Error::Parse {
                    line,
                    msg: "bad column count".into(),
                })?;
                let width = if tag == "matrix" { 2 * cols } else { cols };
                let mut vals = Vec::with_capacity(rows * width);
                for r in 0..rows {
                    let row = records.get(i + 1 + r).ok_or_else(|| Error::Parse {
                        line: line + 1 + r,
                        msg: format!("matrix '{name}' is truncated"),
                    })?;
                    let fields: Vec<&str> = row.iter().filter(|f| !f.is_empty()).collect();
                    if fields.len() != width {
                        return Err(Error::Parse {
                            line: line + 1 + r,
                            msg: format!("expected {width} fields, found {}", fields.len()),
                        });
                    }
                    for f in fields {
                        vals.push(num(f, line + 1 + r)?);
                    }
                }
                if tag == "matrix" {
                    let m = CMat::from_fn(rows, cols, |r, c| {
                        C64::new(vals[r * width + 2 * c], vals[r * width + 2 * c + 1])
                    });
                    out.complex.push((name, m));
                } else {
                    let m = RMat::from_fn(rows, cols, |r, c| vals[r * width + c]);
                    out.real.push((name, m));
                }
                i += 1 + rows;
            } else {
                out.meta.push(rec.iter().map(str::to_string).collect());
                i += 1;
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Container::read_from(File::open(path)?)
    }
}

pub fn write_frame(path: &Path, frame: &PilotFrame) -> Result<()> {
    frame_container(frame).save(path)
}

pub fn frame_container(frame: &PilotFrame) -> Container {
    Container {
        complex: vec![
            ("S".into(), frame.s_block.clone()),
            ("X".into(), frame.x_block.clone()),
            ("H".into(), frame.true_h.clone()),
            ("R_v".into(), frame.true_r_v.clone()),
        ],
        ..Container::default()
    }
}

pub fn read_frame(path: &Path) -> Result<PilotFrame> {
    let c = Container::load(path)?;
    PilotFrame::new(
        c.complex("S")?.clone(),
        c.complex("X")?.clone(),
        c.complex("H")?.clone(),
        c.complex("R_v")?.clone(),
    )
}

pub fn write_weights(path: &Path, bw: &BeamformerWeights) -> Result<()> {
    let mut meta = vec![vec!["method".to_string(), bw.method.clone()]];
    for (k, v) in &bw.params {
        meta.push(vec!["param".into(), k.clone(), v.to_string()]);
    }
    Container {
        complex: vec![("W".into(), bw.w.clone())],
        meta,
        ..Container::default()
    }
    .save(path)
}

pub fn read_weights(path: &Path) -> Result<BeamformerWeights> {
    let c = Container::load(path)?;
    let method = c
        .meta_value("method")
        .and_then(|v| v.first().cloned())
        .unwrap_or_default();
    let mut bw = BeamformerWeights::new(c.complex("W")?.clone(), &method);
    for rec in c.meta.iter().filter(|r| r.first().map(String::as_str) == Some("param")) {
        if rec.len() != 3 {
            return Err(Error::Io("param record needs name and value".into()));
        }
        let v: f64 = rec[2].parse().map_err(|_| Error::Io(format!("bad param value '{}'", rec[2])))?;
        bw = bw.with_param(&rec[1], v);
    }
    Ok(bw)
}

/// Kernel estimator container: `kernel,<kind>,<bandwidth>,<degree>,<offset>,<smoothness>`,
/// `method,<tag>`, `param,<name>,<value>` records, then real matrices `anchors` (2N×L)
/// and `weights` (2M×L).
pub fn write_kernel_estimator(path: &Path, est: &KernelEstimator) -> Result<()> {
    let k = &est.kernel;
    let mut meta = vec![
        vec![
            "kernel".to_string(),
            k.kind.to_string(),
            k.bandwidth.to_string(),
            k.degree.to_string(),
            k.offset.to_string(),
            k.smoothness.to_string(),
        ],
        vec!["method".to_string(), est.method.clone()],
    ];
    for (name, v) in &est.params {
        meta.push(vec!["param".into(), name.clone(), v.to_string()]);
    }
    Container {
        real: vec![
            ("anchors".into(), est.anchors.clone()),
            ("weights".into(), est.weights.clone()),
        ],
        meta,
        ..Container::default()
    }
    .save(path)
}

pub fn read_kernel_estimator(path: &Path) -> Result<KernelEstimator> {
    let c = Container::load(path)?;
    let k = c
        .meta_value("kernel")
        .ok_or_else(|| Error::Io("missing kernel record".into()))?;
    if k.len() != 5 {
        return Err(Error::Io("kernel record needs 5 fields".into()));
    }
    let f = |s: &str| s.parse::<f64>().map_err(|_| Error::Io(format!("bad number '{s}'")));
    let kernel = KernelSpec {
        kind: k[0].parse::<KernelKind>()?,
        bandwidth: f(&k[1])?,
        degree: k[2].parse().map_err(|_| Error::Io("bad degree".into()))?,
        offset: f(&k[3])?,
        smoothness: f(&k[4])?,
    };
    let method = c
        .meta_value("method")
        .and_then(|v| v.first().cloned())
        .unwrap_or_default();
    let mut params = Vec::new();
    for rec in c.meta.iter().filter(|r| r.first().map(String::as_str) == Some("param")) {
        if rec.len() != 3 {
            return Err(Error::Io("param record needs name and value".into()));
        }
        params.push((rec[1].clone(), f(&rec[2])?));
    }
    let anchors = c.real("anchors")?.clone();
    let weights = c.real("weights")?.clone();
    if anchors.ncols() != weights.ncols() {
        return Err(Error::dim("anchor count differs from weight columns"));
    }
    Ok(KernelEstimator {
        anchors,
        weights,
        kernel,
        method,
        params,
    })
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "objective", "residual"])?;
    for r in trace {
        w.write_record([r.iter.to_string(), r.objective.to_string(), r.residual.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Results table; `published` adds a `paper_value` column (empty where unknown).
pub fn write_results(
    out: impl Write,
    rows: &[ResultRow],
    published: Option<&dyn Fn(&ResultRow) -> Option<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "method",
        "pilot_size",
        "metric_name",
        "metric_value",
        "train_time_s",
        "episodes_ok",
    ];
    if published.is_some() {
        header.push("paper_value");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.method.clone(),
            r.pilot_size.to_string(),
            r.metric.to_string(),
            fmt_value(r.value),
            fmt_value(r.train_time_s),
            r.episodes_ok.to_string(),
        ];
        if let Some(p) = published {
            rec.push(p(r).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        String::new()
    }
}

/// Gnuplot script drawing metric against pilot size, one line per method.
pub fn plot_script(rows: &[ResultRow], csv_name: &str, title: &str) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let metric = rows.first().map(|r| r.metric.to_string()).unwrap_or_else(|| "mse".into());
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str("set xlabel 'pilot size'\n");
    s.push_str(&format!("set ylabel '{metric}'\n"));
    s.push_str("set logscale y\nset key outside right\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{}.png'\n", csv_name.trim_end_matches(".csv")));
    let plots: Vec<String> = methods
        .iter()
        .map(|m| {
            format!(
                "'{csv_name}' using ((strcol(1) eq '{m}' && strcol(3) eq '{metric}') ? $2 : 1/0):4 with linespoints title '{m}'"
            )
        })
        .collect();
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

//! Dataset files: a structured-text header block followed by a
//! comma-separated numeric payload.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-lossless for every f64 payload. Unknown header
//! keys are preserved across round trips. A file with a newer minor format
//! version loads with a warning; a newer major version is rejected.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::chain::CalibrationSweep;
use crate::error::{Error, Result};
use crate::physics::ResonatorParams;
use crate::sim::{CoherentHeatMap, NoiseHeatMap};

pub const FORMAT_MAJOR: u32 = 1;
pub const FORMAT_MINOR: u32 = 0;
const MAGIC: &str = "#limn-dataset";
const END_HEADER: &str = "#end-header";

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub name: String,
    pub unit: String,
    pub len: usize,
}

/// Generic header + rectangular payload container.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub axes: Vec<AxisSpec>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Unrecognized header entries, preserved in order.
    pub extra: Vec<(String, String)>,
    /// Notes produced while loading (e.g. newer minor version).
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn new(kind: &str, config_hash: &str, columns: &[&str]) -> Self {
        Dataset {
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            seed: None,
            axes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            extra: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_axis(mut self, name: &str, unit: &str, len: usize) -> Self {
        self.axes.push(AxisSpec {
            name: name.to_string(),
            unit: unit.to_string(),
            len,
        });
        self
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::ShapeMismatch(format!("missing column `{name}` in {}", self.kind)))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    fn expected_rows(&self) -> Option<usize> {
        if self.axes.is_empty() {
            None
        } else {
            Some(self.axes.iter().map(|a| a.len).product())
        }
    }
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_MAJOR}.{FORMAT_MINOR}");
    let _ = writeln!(out, "#kind: {}", dataset.kind);
    let _ = writeln!(out, "#config-hash: {}", dataset.config_hash);
    if let Some(seed) = dataset.seed {
        let _ = writeln!(out, "#seed: {seed}");
    }
    for axis in &dataset.axes {
        let _ = writeln!(out, "#axis: {} {} {}", axis.name, axis.unit, axis.len);
    }
    let _ = writeln!(out, "#columns: {}", dataset.columns.join(","));
    for (key, value) in &dataset.extra {
        let _ = writeln!(out, "#{key}: {value}");
    }
    let _ = writeln!(out, "{END_HEADER}");
    for row in &dataset.rows {
        if row.len() != dataset.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "row has {} values but {} columns declared",
                row.len(),
                dataset.columns.len()
            )));
        }
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();

    let first = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("empty file".into()))?;
    let version = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::MalformedHeader(format!("missing `{MAGIC}` magic line")))?
        .trim();
    let (major, minor) = parse_version(version)?;
    let mut warnings = Vec::new();
    if major > FORMAT_MAJOR {
        return Err(Error::VersionMismatch {
            found: format!("{major}.{minor}"),
            supported: format!("{FORMAT_MAJOR}.{FORMAT_MINOR}"),
        });
    }
    if major == FORMAT_MAJOR && minor > FORMAT_MINOR {
        warnings.push(format!(
            "dataset written by newer format {major}.{minor}; reading as {FORMAT_MAJOR}.{FORMAT_MINOR}"
        ));
    }

    let mut dataset = Dataset {
        kind: String::new(),
        config_hash: String::new(),
        seed: None,
        axes: Vec::new(),
        columns: Vec::new(),
        rows: Vec::new(),
        extra: Vec::new(),
        warnings,
    };

    let mut saw_end = false;
    for line in lines.by_ref() {
        if line == END_HEADER {
            saw_end = true;
            break;
        }
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::MalformedHeader(format!("expected header line, got `{line}`")))?;
        let (key, value) = body
            .split_once(':')
            .ok_or_else(|| Error::MalformedHeader(format!("header line without `:` — `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "kind" => dataset.kind = value.to_string(),
            "config-hash" => dataset.config_hash = value.to_string(),
            "seed" => {
                dataset.seed = Some(value.parse().map_err(|_| {
                    Error::MalformedHeader(format!("seed `{value}` is not an integer"))
                })?)
            }
            "axis" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::MalformedHeader(format!(
                        "axis line needs `name unit len`, got `{value}`"
                    )));
                }
                let len = parts[2].parse().map_err(|_| {
                    Error::MalformedHeader(format!("axis length `{}` is not an integer", parts[2]))
                })?;
                dataset.axes.push(AxisSpec {
                    name: parts[0].to_string(),
                    unit: parts[1].to_string(),
                    len,
                });
            }
            "columns" => {
                dataset.columns = value.split(',').map(|c| c.trim().to_string()).collect()
            }
            _ => dataset.extra.push((key.to_string(), value.to_string())),
        }
    }
    if !saw_end {
        return Err(Error::MalformedHeader(format!("missing `{END_HEADER}` line")));
    }
    if dataset.kind.is_empty() {
        return Err(Error::MalformedHeader("missing `kind` entry".into()));
    }
    if dataset.columns.is_empty() {
        return Err(Error::MalformedHeader("missing `columns` entry".into()));
    }

    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    Error::MalformedHeader(format!("payload cell `{cell}` is not a number"))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != dataset.columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "payload row has {} cells, expected {}",
                row.len(),
                dataset.columns.len()
            )));
        }
        dataset.rows.push(row);
    }
    if let Some(expected) = dataset.expected_rows() {
        if dataset.rows.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "payload has {} rows but axes imply {expected}",
                dataset.rows.len()
            )));
        }
    }
    Ok(dataset)
}

fn parse_version(text: &str) -> Result<(u32, u32)> {
    let (major, minor) = text
        .split_once('.')
        .ok_or_else(|| Error::MalformedHeader(format!("version `{text}` is not MAJOR.MINOR")))?;
    let parse = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| Error::MalformedHeader(format!("version component `{s}` is not a number")))
    };
    Ok((parse(major)?, parse(minor)?))
}

// ---------------------------------------------------------------------------
// Concrete dataset kinds

pub const KIND_NOISE_HEATMAP: &str = "noise-heatmap";
pub const KIND_COHERENT_HEATMAP: &str = "coherent-heatmap";
pub const KIND_CALIBRATION_SWEEP: &str = "calibration-sweep";
pub const KIND_CHAIN_CALIBRATION: &str = "chain-calibration";
pub const KIND_RESONANCE_TRACE: &str = "resonance-trace";
pub const KIND_NIDIFF_TRACE: &str = "nidiff-trace";
pub const KIND_GROUND_TRUTH: &str = "bath-ground-truth";
pub const KIND_XY_MODEL: &str = "xy-model";

pub fn heatmap_to_dataset(map: &NoiseHeatMap, config_hash: &str) -> Dataset {
    let mut ds = Dataset::new(
        KIND_NOISE_HEATMAP,
        config_hash,
        &["time", "frequency", "power_on", "power_off"],
    )
    .with_seed(map.seed)
    .with_axis("time", "s", map.times.len())
    .with_axis("frequency", "rad/s", map.frequencies.len());
    for (i, &t) in map.times.iter().enumerate() {
        for (j, &f) in map.frequencies.iter().enumerate() {
            ds.rows.push(vec![t, f, map.power_on[i][j], map.power_off[i][j]]);
        }
    }
    ds
}

pub fn dataset_to_heatmap(ds: &Dataset) -> Result<NoiseHeatMap> {
    expect_kind(ds, KIND_NOISE_HEATMAP)?;
    let (times, frequencies) = grid_axes(ds)?;
    let i_on = ds.column_index("power_on")?;
    let i_off = ds.column_index("power_off")?;
    let n_f = frequencies.len();
    let mut power_on = Vec::with_capacity(times.len());
    let mut power_off = Vec::with_capacity(times.len());
    for chunk in ds.rows.chunks(n_f) {
        power_on.push(chunk.iter().map(|r| r[i_on]).collect());
        power_off.push(chunk.iter().map(|r| r[i_off]).collect());
    }
    Ok(NoiseHeatMap {
        times,
        frequencies,
        power_on,
        power_off,
        seed: ds.seed.unwrap_or(0),
    })
}

pub fn coherent_to_dataset(map: &CoherentHeatMap, config_hash: &str) -> Dataset {
    let mut ds = Dataset::new(
        KIND_COHERENT_HEATMAP,
        config_hash,
        &["time", "frequency", "s11_re", "s11_im"],
    )
    .with_seed(map.seed)
    .with_axis("time", "s", map.times.len())
    .with_axis("frequency", "rad/s", map.frequencies.len());
    for (i, &t) in map.times.iter().enumerate() {
        for (j, &f) in map.frequencies.iter().enumerate() {
            ds.rows.push(vec![t, f, map.s11[i][j].re, map.s11[i][j].im]);
        }
    }
    ds
}

pub fn dataset_to_coherent(ds: &Dataset) -> Result<CoherentHeatMap> {
    expect_kind(ds, KIND_COHERENT_HEATMAP)?;
    let (times, frequencies) = grid_axes(ds)?;
    let i_re = ds.column_index("s11_re")?;
    let i_im = ds.column_index("s11_im")?;
    let n_f = frequencies.len();
    let s11 = ds
        .rows
        .chunks(n_f)
        .map(|chunk| {
            chunk
                .iter()
                .map(|r| Complex64::new(r[i_re], r[i_im]))
                .collect()
        })
        .collect();
    Ok(CoherentHeatMap {
        times,
        frequencies,
        s11,
        seed: ds.seed.unwrap_or(0),
    })
}

pub fn sweep_to_dataset(sweep: &CalibrationSweep, config_hash: &str, seed: u64) -> Dataset {
    let mut ds = Dataset::new(
        KIND_CALIBRATION_SWEEP,
        config_hash,
        &["temperature", "power"],
    )
    .with_seed(seed)
    .with_axis("temperature", "K", sweep.temperatures.len());
    for (t, p) in sweep.temperatures.iter().zip(&sweep.powers) {
        ds.rows.push(vec![*t, *p]);
    }
    ds
}

pub fn dataset_to_sweep(ds: &Dataset) -> Result<CalibrationSweep> {
    expect_kind(ds, KIND_CALIBRATION_SWEEP)?;
    CalibrationSweep::new(ds.column("temperature")?, ds.column("power")?)
}

pub fn resonance_trace_to_dataset(
    times: &[f64],
    params: &[ResonatorParams],
    residuals: &[f64],
    config_hash: &str,
) -> Dataset {
    let mut ds = Dataset::new(
        KIND_RESONANCE_TRACE,
        config_hash,
        &["time", "omega0", "kappa_i", "kappa_e", "residual_rms"],
    )
    .with_axis("time", "s", times.len());
    for ((t, p), r) in times.iter().zip(params).zip(residuals) {
        ds.rows.push(vec![*t, p.omega0, p.kappa_i, p.kappa_e, *r]);
    }
    ds
}

pub fn dataset_to_resonance_trace(ds: &Dataset) -> Result<(Vec<f64>, Vec<ResonatorParams>)> {
    expect_kind(ds, KIND_RESONANCE_TRACE)?;
    let times = ds.column("time")?;
    let omega0 = ds.column("omega0")?;
    let kappa_i = ds.column("kappa_i")?;
    let kappa_e = ds.column("kappa_e")?;
    let params = omega0
        .iter()
        .zip(&kappa_i)
        .zip(&kappa_e)
        .map(|((&w, &ki), &ke)| ResonatorParams::new(w, ki, ke))
        .collect::<Result<Vec<_>>>()?;
    Ok((times, params))
}

fn expect_kind(ds: &Dataset, kind: &str) -> Result<()> {
    if ds.kind != kind {
        return Err(Error::ShapeMismatch(format!(
            "expected dataset kind `{kind}`, found `{}`",
            ds.kind
        )));
    }
    Ok(())
}

/// Rebuild (times, frequencies) from a time-major two-axis payload and
/// verify grid consistency.
fn grid_axes(ds: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    if ds.axes.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "grid dataset needs 2 axes, found {}",
            ds.axes.len()
        )));
    }
    let n_t = ds.axes[0].len;
    let n_f = ds.axes[1].len;
    let i_t = ds.column_index("time")?;
    let i_f = ds.column_index("frequency")?;
    let mut times = Vec::with_capacity(n_t);
    let mut frequencies = Vec::with_capacity(n_f);
    for j in 0..n_f {
        frequencies.push(ds.rows[j][i_f]);
    }
    for i in 0..n_t {
        times.push(ds.rows[i * n_f][i_t]);
    }
    for (i, chunk) in ds.rows.chunks(n_f).enumerate() {
        for (j, row) in chunk.iter().enumerate() {
            if row[i_t] != times[i] || row[i_f] != frequencies[j] {
                return Err(Error::ShapeMismatch(format!(
                    "grid axis values inconsistent at row {}",
                    i * n_f + j
                )));
            }
        }
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ShapeMismatch(
            "grid axes must be strictly increasing".into(),
        ));
    }
    Ok((times, frequencies))
}

/// Plot-ready (x, y, model) table.
pub fn xy_model_to_dataset(
    label: &str,
    x: &[f64],
    y: &[f64],
    model: &[f64],
    config_hash: &str,
) -> Dataset {
    let mut ds = Dataset::new(KIND_XY_MODEL, config_hash, &["x", "y", "model"]);
    ds.extra.push(("label".to_string(), label.to_string()));
    ds = ds.with_axis("x", "-", x.len());
    for ((a, b), m) in x.iter().zip(y).zip(model) {
        ds.rows.push(vec![*a, *b, *m]);
    }
    ds
}

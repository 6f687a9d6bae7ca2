//! Run manifests and the CSV/JSON files a run reads and writes.
//!
//! Every run writes into `<root>/run-<hash>/`, where `<hash>` is the first
//! twelve hex digits of the SHA-256 of the resolved configuration, so
//! identical configurations map to the same directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::diagnostics::{
    amplitude_profile, loglog_fit, rescaled_shape, self_similar_profile, DiagnosticRecord, PowerLawFit,
};
use crate::error::{Error, Result};
use crate::grid::{DensityVector, Field, Grid};
use crate::params::{parse_config_file, InitKind, Params, Preset};
use crate::reproduction::ReproductionMethod;
use crate::stepper::{run_observed, Model, RunEvent, SimState};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "INVASION_OUT";

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Full double precision, round-trippable.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Short label for a time in file names: `200`, `20.5`.
pub fn time_label(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    format!("{r}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub params: Params,
    pub init: InitKind,
    pub method: ReproductionMethod,
    /// Hex SHA-256 of the configuration text and method.
    pub hash: String,
    pub dir: PathBuf,
}

impl RunManifest {
    pub fn new(params: Params, init: InitKind, method: ReproductionMethod, root: &Path) -> Self {
        let hash = config_hash(&params, init, method);
        let dir = root.join(format!("run-{}", &hash[..12]));
        Self {
            params,
            init,
            method,
            hash,
            dir,
        }
    }

    pub fn short_hash(&self) -> &str {
        &self.hash[..12]
    }

    /// Creates the run directory. An existing non-empty directory is an
    /// error unless `force` is set, in which case its files are replaced.
    pub fn prepare(&self, force: bool) -> Result<()> {
        if self.dir.exists() {
            let occupied = fs::read_dir(&self.dir)
                .map_err(|e| Error::io(&self.dir, e))?
                .next()
                .is_some();
            if occupied && !force {
                return Err(Error::Config(format!(
                    "{} already exists; pass --force to overwrite",
                    self.dir.display()
                )));
            }
        }
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        write_text(&self.dir.join("config.txt"), &self.params.to_config_string(self.init))?;
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = format!(
            "hash = {}\nmethod = {}\ninit = {}\ncreated_unix = {}\nversion = {}\n",
            self.hash,
            self.method.as_str(),
            self.init.as_str(),
            created,
            env!("CARGO_PKG_VERSION"),
        );
        write_text(&self.dir.join("manifest.txt"), &manifest)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

pub fn config_hash(params: &Params, init: InitKind, method: ReproductionMethod) -> String {
    let mut h = Sha256::new();
    h.update(params.to_config_string(init).as_bytes());
    h.update(format!("method = {}\n", method.as_str()).as_bytes());
    format!("{:x}", h.finalize())
}

/// Reads the configuration stored in a run directory.
pub fn load_run_config(dir: &Path) -> Result<(Params, InitKind)> {
    parse_config_file(&dir.join("config.txt"), Preset::Paper.build())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes a header and rows of numbers.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v)))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header plus numeric rows as read back from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    message: format!("record {}: `{s}` is not a number", n + 1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub const FRONT_HEADER: [&str; 5] = ["t", "X_num", "theta_bar", "X_half", "min_field"];

pub fn front_row(rec: &DiagnosticRecord) -> Vec<f64> {
    vec![rec.t, rec.x_num, rec.theta_bar, rec.x_half, rec.min_field]
}

/// Snapshot file: first row `theta\x, x_0, x_1, ...`, then one row per
/// trait value `theta_j, f(x_0, theta_j), f(x_1, theta_j), ...`.
pub fn write_field_csv(path: &Path, field: &Field, grid: &Grid) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["theta\\x".to_string()];
    header.extend(grid.xs.iter().map(|x| fmt_num(*x)));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (j, th) in grid.thetas.iter().enumerate() {
        let mut rec = Vec::with_capacity(grid.nx() + 1);
        rec.push(fmt_num(*th));
        rec.extend(field.values.column(j).iter().map(|v| fmt_num(*v)));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Inverse of [`write_field_csv`]: `(xs, thetas, values[[i, j]])`.
pub fn read_field_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Array2<f64>)> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut records = r.records();
    let head = records
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .map_err(|e| csv_error(path, e))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| parse_err(format!("`{s}` is not a number")));
    let xs = head.iter().skip(1).map(num).collect::<Result<Vec<_>>>()?;
    let mut thetas = Vec::new();
    let mut data = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mut it = rec.iter();
        thetas.push(num(it.next().unwrap_or(""))?);
        for s in it {
            data.push(num(s)?);
        }
    }
    let by_theta = Array2::from_shape_vec((thetas.len(), xs.len()), data)
        .map_err(|e| parse_err(e.to_string()))?;
    Ok((xs, thetas, by_theta.reversed_axes().as_standard_layout().to_owned()))
}

/// Snapshot files `f_t<time>.csv` of a run directory, sorted by time.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(t) = name
            .strip_prefix("f_t")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<f64>().ok())
        {
            out.push((t, entry.path()));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Writes `profile_<kind>_t<time>.csv` for the self-similar, shape and
/// amplitude profiles of one snapshot. The shape profile is skipped when
/// `rho` never crosses 1/2.
pub fn write_profiles(dir: &Path, t: f64, field: &Field, rho: &DensityVector, grid: &Grid, front_x: f64) -> Result<()> {
    let label = time_label(t);
    if t > 0.0 {
        let ss: Vec<Vec<f64>> = self_similar_profile(rho.as_slice(), grid, t)
            .into_iter()
            .map(|(y, r)| vec![y, r])
            .collect();
        write_table(&dir.join(format!("profile_selfsimilar_t{label}.csv")), &["y", "rho"], &ss)?;
        if let Ok(shape) = rescaled_shape(rho.as_slice(), grid, t) {
            let rows: Vec<Vec<f64>> = shape.into_iter().map(|(z, r)| vec![z, r]).collect();
            write_table(&dir.join(format!("profile_shape_t{label}.csv")), &["z", "rho"], &rows)?;
        }
    }
    let amp = amplitude_profile(field, grid, front_x);
    let rows: Vec<Vec<f64>> = amp.points.into_iter().map(|(x, l)| vec![x, l]).collect();
    write_table(&dir.join(format!("profile_amplitude_t{label}.csv")), &["x", "log_max_f"], &rows)
}

/// Power-law fits written to `fit.json`.
#[derive(Debug, Clone)]
pub struct FitSummary {
    pub window: (f64, f64),
    pub x_num: std::result::Result<PowerLawFit, String>,
    pub theta_bar: std::result::Result<PowerLawFit, String>,
}

/// Default fit window: the last 70% of the run.
pub fn default_fit_window(t_end: f64) -> (f64, f64) {
    (0.3 * t_end, t_end)
}

pub fn fit_records(records: &[DiagnosticRecord], window: (f64, f64)) -> FitSummary {
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let xs: Vec<f64> = records.iter().map(|r| r.x_num).collect();
    let th: Vec<f64> = records.iter().map(|r| r.theta_bar).collect();
    FitSummary {
        window,
        x_num: loglog_fit(&ts, &xs, window).map_err(|e| e.to_string()),
        theta_bar: loglog_fit(&ts, &th, window).map_err(|e| e.to_string()),
    }
}

fn fit_json(fit: &std::result::Result<PowerLawFit, String>) -> serde_json::Value {
    match fit {
        Ok(f) => serde_json::json!({
            "C": f.prefactor,
            "p": f.exponent,
            "R2": f.r_squared,
            "n_points": f.n_points,
        }),
        Err(e) => serde_json::json!({ "error": e }),
    }
}

pub fn write_fit_json(path: &Path, fit: &FitSummary) -> Result<()> {
    let v = serde_json::json!({
        "window": [fit.window.0, fit.window.1],
        "X_num": fit_json(&fit.x_num),
        "theta_bar": fit_json(&fit.theta_bar),
    });
    let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_text(path, &(text + "\n"))
}

/// What [`execute_run`] produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub records: Vec<DiagnosticRecord>,
    pub snapshot_times: Vec<f64>,
    pub fit: FitSummary,
    pub final_time: f64,
}

/// Runs a model and writes `front.csv`, `rho.csv`, the snapshots, their
/// profiles and `fit.json` into the manifest's directory. On blow-up the
/// files written so far are kept and the error is returned.
pub fn execute_run(manifest: &RunManifest, force: bool) -> Result<RunSummary> {
    manifest.prepare(force)?;
    let model = Model::new(manifest.params.clone(), manifest.method)?;
    let grid = model.grid().clone();
    let dir = manifest.dir.clone();
    let rho_path = manifest.path("rho.csv");
    let mut rho_w = csv_writer(&rho_path)?;
    rho_w
        .write_record(["t", "x", "rho"])
        .map_err(|e| csv_error(&rho_path, e))?;
    let mut records = Vec::new();
    let mut snapshot_times = Vec::new();
    let outcome = run_observed(&model, model.initial_state(manifest.init), |ev| {
        let RunEvent::Record(rec, st) = ev;
        if rec.snapshot.is_some() {
            write_snapshot(&dir, st, &grid, rec.x_num)?;
            for (x, r) in grid.xs.iter().zip(st.rho.rho.iter()) {
                rho_w
                    .write_record([fmt_num(st.time), fmt_num(*x), fmt_num(*r)])
                    .map_err(|e| csv_error(&rho_path, e))?;
            }
            snapshot_times.push(st.time);
        }
        records.push(rec.clone());
        Ok(())
    });
    rho_w.flush().map_err(|e| Error::io(&rho_path, e))?;
    let rows: Vec<Vec<f64>> = records.iter().map(front_row).collect();
    write_table(&manifest.path("front.csv"), &FRONT_HEADER, &rows)?;
    let final_state = outcome?;
    let fit = fit_records(&records, default_fit_window(manifest.params.t_end));
    write_fit_json(&manifest.path("fit.json"), &fit)?;
    Ok(RunSummary {
        manifest: manifest.clone(),
        records,
        snapshot_times,
        fit,
        final_time: final_state.time,
    })
}

fn write_snapshot(dir: &Path, st: &SimState, grid: &Grid, front_x: f64) -> Result<()> {
    let label = time_label(st.time);
    write_field_csv(&dir.join(format!("f_t{label}.csv")), &st.field, grid)?;
    write_profiles(dir, st.time, &st.field, &st.rho, grid, front_x)
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::CliError;

pub const RESULT_COLUMNS: [&str; 10] = [
    "alpha",
    "lambda",
    "residual",
    "iterations",
    "R_max",
    "converged",
    "mass",
    "kinetic",
    "potential_V",
    "potential_W",
];

pub const BOUNDS_COLUMNS: [&str; 8] = [
    "check_name",
    "p",
    "N",
    "alpha",
    "parameter",
    "value",
    "threshold",
    "pass",
];

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub timestamp: Option<u64>,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64, timestamps: bool) -> Self {
        let timestamp = timestamps.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Self {
            config_hash,
            seed,
            timestamp,
        }
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut f = vec![
            ("artifact", "pcrit".to_string()),
            ("version", env!("CARGO_PKG_VERSION").to_string()),
            ("config_sha256", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
        ];
        if let Some(t) = self.timestamp {
            f.push(("timestamp", t.to_string()));
        }
        f
    }

    /// `# key=value` lines.
    pub fn comment_block(&self, prefix: &str) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{prefix} {k}={v}\n"))
            .collect()
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in self.fields() {
            m.insert(k.to_string(), Value::String(v));
        }
        Value::Object(m)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// CSV file with the provenance block, then the header row. Every row is flushed on write so an
/// interrupted run leaves the completed rows on disk.
pub struct CsvOut {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, prov: &Provenance, columns: &[&str]) -> Result<Self, CliError> {
        let mut file = File::create(path).map_err(|e| io_err(path, e))?;
        file.write_all(prov.comment_block("#").as_bytes())
            .map_err(|e| io_err(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(columns).map_err(|e| io_err(path, e))?;
        inner.flush().map_err(|e| io_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<(), CliError> {
        self.inner
            .write_record(fields.iter().map(|s| s.as_ref()))
            .map_err(|e| io_err(&self.path, e))?;
        self.inner.flush().map_err(|e| io_err(&self.path, e))
    }
}

pub fn write_json(path: &Path, prov: &Provenance, body: Value) -> Result<(), CliError> {
    let mut obj = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    obj.insert("provenance".into(), prov.json());
    let text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json values serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Two-column `log α, log(-λ)` text for plotting.
pub fn write_curve(path: &Path, prov: &Provenance, curve: &[(f64, f64)]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut text = prov.comment_block("#");
    text.push_str("# log_alpha log_neg_lambda\n");
    for &(a, l) in curve {
        if l < 0.0 {
            text.push_str(&format!("{} {}\n", a.ln(), (-l).ln()));
        }
    }
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Self-contained scatter plot of `log(-λ)` against `log α`, with an optional fitted line
/// `(slope, intercept)`.
pub fn write_svg(
    path: &Path,
    prov: &Provenance,
    curve: &[(f64, f64)],
    line: Option<(f64, f64)>,
) -> Result<(), CliError> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|p| p.1 < 0.0)
        .map(|&(a, l)| (a.ln(), (-l).ln()))
        .collect();
    let (w, h, pad) = (480.0, 360.0, 48.0);
    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!--\n");
    svg.push_str(&prov.comment_block(""));
    svg.push_str("-->\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * pad,
        h - 2.0 * pad
    ));
    if pts.len() >= 2 {
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        if let Some((m, c)) = line {
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\"/>\n",
                sx(x0),
                sy(m * x0 + c),
                sx(x1),
                sy(m * x1 + c)
            ));
        }
        for &(x, y) in &pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">log alpha [{x0:.2}, {x1:.2}]</text>\n",
            w / 2.0,
            h - 12.0
        ));
        svg.push_str(&format!(
            "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">log(-lambda) [{y0:.2}, {y1:.2}]</text>\n",
            h / 2.0,
            h / 2.0
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(|e| io_err(path, e))
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// `null` for non-finite values, which JSON cannot carry.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

//! Output files of a benchmark run: `runs.csv`, `runs.json`, `summary.json`
//! and `queries.svg`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Aggregate, ExperimentConfig, ExperimentResult};
use crate::report::{Algo, RunReport};
use crate::solver_mc::McParams;

pub const CSV_HEADER: [&str; 11] = [
    "algo",
    "n",
    "k",
    "seed",
    "queries",
    "q_phase1",
    "q_phase2",
    "q_phase3",
    "exact",
    "misassigned",
    "ms",
];

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub algo: Algo,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub queries: u64,
    pub q_phase1: u64,
    pub q_phase2: u64,
    pub q_phase3: u64,
    pub exact: bool,
    pub misassigned: usize,
    pub ms: f64,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        Self {
            algo: r.algo,
            n: r.n,
            k: r.k,
            seed: r.seed,
            queries: r.queries,
            q_phase1: r.q_phase1,
            q_phase2: r.q_phase2,
            q_phase3: r.q_phase3,
            exact: r.exact,
            misassigned: r.misassigned,
            ms: (r.wall_ms * 1e3).round() / 1e3,
        }
    }
}

/// Writes the header and one row per report.
pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<(), EmitError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, EmitError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(EmitError::Io {
            path: PathBuf::from("<csv>"),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("unexpected header {header:?}"),
            ),
        });
    }
    Ok(r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?)
}

pub fn write_json<W: Write>(reports: &[RunReport], out: W) -> Result<(), EmitError> {
    serde_json::to_writer_pretty(out, reports)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<RunReport>, EmitError> {
    Ok(serde_json::from_reader(input)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub base_seed: u64,
    pub trials: usize,
    pub params: McParams,
    pub aggregates: Vec<Aggregate>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Median queries against `n`, one polyline per algorithm (cells sharing an
/// `n` are averaged), plus the `min(nk, k²/h²)` curve.
pub fn svg(aggregates: &[Aggregate], algos: &[Algo]) -> String {
    let mut by_algo: Vec<BTreeMap<usize, Vec<f64>>> = vec![BTreeMap::new(); algos.len()];
    let mut bound: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for a in aggregates {
        if let Some(i) = algos.iter().position(|&x| x == a.algo) {
            by_algo[i].entry(a.n).or_default().push(a.median_queries);
            if i == 0 {
                bound.entry(a.n).or_default().push(a.lb_query_budget);
            }
        }
    }
    let mean = |m: &BTreeMap<usize, Vec<f64>>| -> Vec<(f64, f64)> {
        m.iter()
            .map(|(&n, v)| (n as f64, v.iter().sum::<f64>() / v.len() as f64))
            .collect()
    };
    let lines: Vec<Vec<(f64, f64)>> = by_algo.iter().map(mean).collect();
    let lb = mean(&bound);

    let all = lines.iter().flatten().chain(&lb);
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 1.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        (x0, x1) = (x0 - 1.0, x1 + 1.0);
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);
    let points = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{x0}</text>"#, b + 18.0);
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{x1}</text>"#, b + 18.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, (l + r) / 2.0, b + 36.0);
    let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">0</text>"#, l - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.0}</text>"#, l - 6.0, t + 4.0);
    let _ = writeln!(s, r#"<text x="{l}" y="{}">median queries</text>"#, t - 20.0);
    for (i, (algo, pts)) in algos.iter().zip(&lines).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polyline class="algo" data-algo="{algo}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points(pts)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{algo}</text>"#,
            r - 90.0,
            t + 16.0 * i as f64
        );
    }
    let _ = writeln!(
        s,
        r#"<polyline class="lower-bound" fill="none" stroke="gray" stroke-dasharray="6 4" points="{}"/>"#,
        points(&lb)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" fill="gray">min(nk, k²/h²)</text>"#,
        r - 90.0,
        t + 16.0 * algos.len() as f64
    );
    s.push_str("</svg>\n");
    s
}

/// Paths written by [`emit`].
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub summary: PathBuf,
    pub svg: PathBuf,
}

/// Writes all four output files into `dir`, creating it if needed.
pub fn emit(dir: &Path, config: &ExperimentConfig, result: &ExperimentResult) -> Result<Emitted, EmitError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let out = Emitted {
        csv: dir.join("runs.csv"),
        json: dir.join("runs.json"),
        summary: dir.join("summary.json"),
        svg: dir.join("queries.svg"),
    };
    let create = |p: &Path| fs::File::create(p).map(std::io::BufWriter::new).map_err(io_err(p));
    write_csv(&result.reports, create(&out.csv)?)?;
    write_json(&result.reports, create(&out.json)?)?;
    let summary = Summary {
        base_seed: config.base_seed,
        trials: config.trials,
        params: config.params,
        aggregates: result.aggregates.clone(),
    };
    serde_json::to_writer_pretty(create(&out.summary)?, &summary)?;
    fs::write(&out.svg, svg(&result.aggregates, &config.algos)).map_err(io_err(&out.svg))?;
    Ok(out)
}

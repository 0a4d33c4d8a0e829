//! Multi-seed experiments: config, execution, aggregation and output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    geometric_indices, run_with, AlgorithmId, MemoryInit, Method, PdhgConfig, Record, RecordPlan, RunOptions,
    Schedule, Status, Trajectory,
};
use crate::error::{ConfigIssue, Error, Result};
use crate::numerics::Vector;
use crate::problems::{Problem, ProblemSpec};

pub const DEFAULT_MAX_ROWS: usize = 2000;
pub const DEFAULT_SEEDS: u32 = 20;
/// `α` of the fixed-stepsize methods unless configured.
pub const DEFAULT_FIXED_ALPHA: f64 = 1.0 / 18.0;

/// `α_k = 1/(18(k/100 + 1))`
pub fn default_schedule() -> Schedule {
    Schedule::harmonic(1.0 / 18.0, 100.0)
}

/// Per-iterate quantities that can be aggregated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// `‖Fz^k‖`
    FzNorm,
    /// `‖z^k − z⋆‖`
    Dist,
    /// `‖z^k − J(z^k − γFz^k)‖`
    Residual,
    /// `dist(0, Tz̄^k)` through the element built from the step.
    Gap,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::FzNorm, MetricKind::Dist, MetricKind::Residual, MetricKind::Gap];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::FzNorm => "fz-norm",
            MetricKind::Dist => "dist",
            MetricKind::Residual => "residual",
            MetricKind::Gap => "gap",
        }
    }

    pub fn value(self, r: &Record) -> Option<f64> {
        match self {
            MetricKind::FzNorm => Some(r.fz_sq.sqrt()),
            MetricKind::Dist => r.dist_sq.map(f64::sqrt),
            MetricKind::Residual => Some(r.residual),
            MetricKind::Gap => Some(r.gap_sq.sqrt()),
        }
    }
}

/// An entry of `algorithms`: either a bare id or an object with overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesEntry {
    Id(AlgorithmId),
    Full(SeriesConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub algorithm: AlgorithmId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    /// Fixed `α` for `sf-eg+` and `sf-peg+`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<MemoryInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pdhg: Option<PdhgConfig>,
}

impl SeriesEntry {
    fn config(&self) -> SeriesConfig {
        match self {
            SeriesEntry::Id(id) => SeriesConfig {
                algorithm: *id,
                label: None,
                gamma: None,
                schedule: None,
                alpha: None,
                init: None,
                pdhg: None,
            },
            SeriesEntry::Full(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub problem: ProblemSpec,
    /// Per-coordinate standard deviation of additive Gaussian noise.
    #[serde(default)]
    pub sigma: f64,
    /// Starting point; all ones by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    /// Defaults to `1/(2L_F)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Schedule of the diminishing-stepsize methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    /// `α` of the fixed-stepsize methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_alpha: Option<f64>,
    pub algorithms: Vec<SeriesEntry>,
    pub n_iters: u64,
    #[serde(default = "default_seeds")]
    pub n_seeds: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    #[serde(default = "default_max_rows")]
    pub max_rows: usize,
    #[serde(default = "default_tol")]
    pub converged_tol: f64,
}

fn default_seeds() -> u32 {
    DEFAULT_SEEDS
}

fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::FzNorm]
}

fn default_max_rows() -> usize {
    DEFAULT_MAX_ROWS
}

fn default_tol() -> f64 {
    1e-2
}

/// A config with every default filled in and every series resolved.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub problem: Problem,
    pub z0: Vector,
    pub series: Vec<(String, Method)>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every rule and reports all violations at once.
    pub fn resolve(&self) -> Result<Resolved> {
        let mut issues = Vec::new();
        let mut issue = |path: &str, message: String| {
            issues.push(ConfigIssue {
                path: path.to_string(),
                message,
            })
        };
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            issue("name", "must be non-empty and use only ASCII letters, digits, '-', '_' or '.'".into());
        }
        if self.n_iters == 0 {
            issue("n_iters", "must be at least 1".into());
        }
        if self.n_seeds == 0 {
            issue("n_seeds", "must be at least 1".into());
        }
        if self.max_rows < 2 {
            issue("max_rows", "must be at least 2".into());
        }
        if !(self.converged_tol > 0.0) {
            issue("converged_tol", "must be positive".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            issue("sigma", "must be finite and non-negative".into());
        }
        if self.metrics.is_empty() {
            issue("metrics", Error::NoMetrics.to_string());
        }
        if let Some(s) = &self.schedule {
            if let Err(e) = s.validate() {
                issue("schedule", e.to_string());
            }
        }
        let problem = match self.problem.build() {
            Ok(p) if self.sigma > 0.0 => match p.with_gaussian_noise(self.sigma, self.base_seed) {
                Ok(p) => Some(p),
                Err(e) => {
                    issue("sigma", e.to_string());
                    None
                }
            },
            Ok(p) => Some(p),
            Err(e) => {
                issue("problem", e.to_string());
                None
            }
        };
        let mut series = Vec::new();
        let mut z0 = Vector::zeros(0);
        if let Some(problem) = &problem {
            z0 = match &self.z0 {
                None => Vector::filled(problem.dim(), 1.0),
                Some(v) => match Vector::new(v.clone()).and_then(|z| z.check_dim(problem.dim()).map(|_| z)) {
                    Ok(z) => z,
                    Err(e) => {
                        issue("z0", e.to_string());
                        Vector::filled(problem.dim(), 1.0)
                    }
                },
            };
            for (i, m) in self.metrics.iter().enumerate() {
                if *m == MetricKind::Dist && problem.constants.z_star.is_none() {
                    issue(&format!("metrics[{i}]"), "dist needs a known solution".into());
                }
            }
            let default_gamma = self.gamma.unwrap_or(0.5 / problem.constants.l_f);
            if self.algorithms.is_empty() {
                issue("algorithms", "must list at least one algorithm".into());
            }
            let mut labels = BTreeSet::new();
            for (i, entry) in self.algorithms.iter().enumerate() {
                let c = entry.config();
                let path = format!("algorithms[{i}]");
                let gamma = c.gamma.unwrap_or(default_gamma);
                let schedule = match (c.schedule, c.algorithm.fixed_alpha()) {
                    (Some(s), _) => s,
                    (None, true) => Schedule::constant(c.alpha.or(self.fixed_alpha).unwrap_or(DEFAULT_FIXED_ALPHA)),
                    (None, false) => self.schedule.unwrap_or_else(default_schedule),
                };
                let mut method = Method::new(c.algorithm, gamma, schedule);
                if let Some(init) = c.init {
                    method = method.with_init(init);
                }
                if let Some(cfg) = c.pdhg {
                    if c.algorithm != AlgorithmId::NpPdeg {
                        issue(&format!("{path}.pdhg"), "only np-pdeg takes a pdhg block".into());
                    }
                    method = method.with_pdhg(cfg);
                }
                if let Err(e) = method.check_applicable(problem) {
                    issue(&path, e.to_string());
                }
                if c.algorithm == AlgorithmId::NpPdeg {
                    match method.pdhg_config(problem) {
                        Ok(cfg) if cfg.nx() + cfg.ny() != problem.dim() => {
                            issue(&format!("{path}.pdhg"), "block sizes do not match the problem".into())
                        }
                        Err(e) => issue(&format!("{path}.pdhg"), e.to_string()),
                        _ => {}
                    }
                }
                let label = c.label.clone().unwrap_or_else(|| c.algorithm.as_str().to_string());
                if !labels.insert(label.clone()) {
                    issue(&format!("{path}.label"), format!("duplicate label `{label}`"));
                }
                series.push((label, method));
            }
        }
        match problem {
            Some(problem) if issues.is_empty() => Ok(Resolved { problem, z0, series }),
            _ => Err(Error::Config(issues)),
        }
    }
}

/// Summary statistics over seeds at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggRow {
    pub k: u64,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Linear interpolation between order statistics, `q ∈ [0, 1]`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl AggRow {
    /// Statistics of `values`, which must be non-empty. The result does not
    /// depend on the order of `values`.
    pub fn from_values(k: u64, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        AggRow {
            k,
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            median: quantile(&sorted, 0.5),
            p10: quantile(&sorted, 0.1),
            p90: quantile(&sorted, 0.9),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesResult {
    pub label: String,
    pub algorithm: AlgorithmId,
    pub gamma: f64,
    pub status: Status,
    pub converged_seeds: usize,
    pub diverged_seeds: usize,
    /// Rows stop before `n_iters`; they end at the last iteration reached by
    /// every seed.
    pub truncated: bool,
    pub metrics: BTreeMap<MetricKind, Vec<AggRow>>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

impl SeriesResult {
    /// Mean over seeds at the last aggregated iteration.
    pub fn terminal(&self, metric: MetricKind) -> Option<f64> {
        self.metrics.get(&metric)?.last().map(|r| r.mean)
    }

    pub fn rows(&self, metric: MetricKind) -> &[AggRow] {
        self.metrics.get(&metric).map_or(&[], Vec::as_slice)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AggregateResult {
    pub name: String,
    pub title: Option<String>,
    pub n_iters: u64,
    pub n_seeds: u32,
    pub metrics: Vec<MetricKind>,
    pub series: Vec<SeriesResult>,
}

impl AggregateResult {
    pub fn series(&self, label: &str) -> Option<&SeriesResult> {
        self.series.iter().find(|s| s.label == label)
    }

    /// Whether any series ended with most of its seeds diverged.
    pub fn any_diverged(&self) -> bool {
        self.series.iter().any(|s| s.status == Status::Diverged)
    }
}

/// Runs every series for seeds `base_seed..base_seed + n_seeds` in parallel
/// and aggregates per iteration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult> {
    let resolved = cfg.resolve()?;
    let plan = geometric_indices(cfg.n_iters, cfg.max_rows);
    let opts = RunOptions {
        record: RecordPlan::Indices(plan),
        converged_tol: cfg.converged_tol,
        weighted: false,
    };
    let jobs: Vec<(usize, u64)> = (0..resolved.series.len())
        .flat_map(|s| (0..cfg.n_seeds as u64).map(move |i| (s, cfg.base_seed.wrapping_add(i))))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, seed)| {
            let (_, method) = &resolved.series[s];
            run_with(&resolved.problem, method, resolved.z0.clone(), cfg.n_iters, seed, &opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut runs = runs.into_iter();
    let series = resolved
        .series
        .iter()
        .map(|(label, method)| {
            let trajectories: Vec<Trajectory> = runs.by_ref().take(cfg.n_seeds as usize).collect();
            aggregate(label, method, &cfg.metrics, cfg.n_iters, trajectories)
        })
        .collect();
    Ok(AggregateResult {
        name: cfg.name.clone(),
        title: cfg.title.clone(),
        n_iters: cfg.n_iters,
        n_seeds: cfg.n_seeds,
        metrics: cfg.metrics.clone(),
        series,
    })
}

/// Aggregates trajectories of one series. Only iterations recorded by every
/// trajectory are kept.
pub fn aggregate(
    label: &str,
    method: &Method,
    metrics: &[MetricKind],
    n_iters: u64,
    trajectories: Vec<Trajectory>,
) -> SeriesResult {
    let n = trajectories.len();
    let count = |s: Status| trajectories.iter().filter(|t| t.status == s).count();
    let (converged, diverged) = (count(Status::Converged), count(Status::Diverged));
    let status = if 2 * diverged > n {
        Status::Diverged
    } else if 2 * converged > n {
        Status::Converged
    } else {
        Status::Running
    };
    let mut by_k: BTreeMap<u64, Vec<&Record>> = BTreeMap::new();
    for t in &trajectories {
        for r in &t.records {
            by_k.entry(r.k).or_default().push(r);
        }
    }
    let full: Vec<(u64, Vec<&Record>)> = by_k.into_iter().filter(|(_, v)| v.len() == n).collect();
    let mut out = BTreeMap::new();
    for &m in metrics {
        let rows = full
            .iter()
            .map_while(|(k, recs)| {
                let values: Option<Vec<f64>> = recs.iter().map(|r| m.value(r)).collect();
                let values = values?;
                values
                    .iter()
                    .all(|v| v.is_finite())
                    .then(|| AggRow::from_values(*k, &values))
            })
            .collect();
        out.insert(m, rows);
    }
    SeriesResult {
        label: label.to_string(),
        algorithm: method.id,
        gamma: method.gamma,
        status,
        converged_seeds: converged,
        diverged_seeds: diverged,
        truncated: full.last().is_none_or(|(k, _)| *k < n_iters),
        metrics: out,
        trajectories,
    }
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "+-.=".contains(c) { c } else { '_' })
        .collect()
}

/// One CSV per series and metric under `dir`, named `<label>_<metric>.csv`,
/// with header `k,mean,median,p10,p90`.
pub fn write_csv(result: &AggregateResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.metrics.is_empty() {
        return Err(Error::NoMetrics);
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in &result.series {
        for &m in &result.metrics {
            let path = dir.join(format!("{}_{}.csv", file_stem(&s.label), m.as_str()));
            let csv_err = |source| Error::Csv {
                path: path.clone(),
                source,
            };
            let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
            w.write_record(["k", "mean", "median", "p10", "p90"]).map_err(csv_err)?;
            for r in s.rows(m) {
                w.write_record([
                    r.k.to_string(),
                    format!("{:.16e}", r.mean),
                    format!("{:.16e}", r.median),
                    format!("{:.16e}", r.p10),
                    format!("{:.16e}", r.p90),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads back a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<AggRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::invalid(path.display().to_string(), format!("bad number `{}`", &rec[i])))
        };
        rows.push(AggRow {
            k: rec[0]
                .parse()
                .map_err(|_| Error::invalid(path.display().to_string(), format!("bad index `{}`", &rec[0])))?,
            mean: num(1)?,
            median: num(2)?,
            p10: num(3)?,
            p90: num(4)?,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct SeriesSummary<'a> {
    label: &'a str,
    algorithm: AlgorithmId,
    gamma: f64,
    status: Status,
    converged_seeds: usize,
    diverged_seeds: usize,
    truncated: bool,
    terminal_mean: BTreeMap<MetricKind, f64>,
}

/// `summary.json` with the status and terminal means of every series.
pub fn write_summary(result: &AggregateResult, path: &Path) -> Result<()> {
    let series: Vec<SeriesSummary> = result
        .series
        .iter()
        .map(|s| SeriesSummary {
            label: &s.label,
            algorithm: s.algorithm,
            gamma: s.gamma,
            status: s.status,
            converged_seeds: s.converged_seeds,
            diverged_seeds: s.diverged_seeds,
            truncated: s.truncated,
            terminal_mean: result.metrics.iter().filter_map(|&m| Some((m, s.terminal(m)?))).collect(),
        })
        .collect();
    let doc = serde_json::json!({
        "name": result.name,
        "n_iters": result.n_iters,
        "n_seeds": result.n_seeds,
        "series": series,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

/// Log-scale chart of `metric`: the mean of each series with its p10–p90
/// band. A cross marks the end of a series cut short by divergence.
pub fn render_svg(result: &AggregateResult, metric: MetricKind, path: &Path) -> Result<()> {
    let plot_err = |e: String| Error::io(path, std::io::Error::other(e));
    let floor = 1e-300;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in &result.series {
        for r in s.rows(metric) {
            for v in [r.p10, r.mean, r.p90] {
                if v > floor {
                    lo = lo.min(v);
                }
                hi = hi.max(v);
            }
        }
    }
    if !(hi > floor) {
        lo = 1e-3;
        hi = 1.0;
    }
    lo = lo.max(hi * 1e-16);
    let (lo, hi) = (lo / 1.5, hi * 1.5);
    let clamp = |v: f64| v.clamp(lo, hi);
    let title = result
        .title
        .clone()
        .unwrap_or_else(|| format!("{} ({})", result.name, metric.as_str()));

    let root = SVGBackend::new(path, (960, 640)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(0f64..result.n_iters.max(1) as f64, (lo..hi).log_scale())
        .map_err(|e| plot_err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("iteration k")
        .y_desc(metric.as_str())
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;

    for (i, s) in result.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let rows = s.rows(metric);
        if rows.is_empty() {
            continue;
        }
        let band: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.k as f64, clamp(r.p90)))
            .chain(rows.iter().rev().map(|r| (r.k as f64, clamp(r.p10))))
            .collect();
        chart
            .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))
            .map_err(|e| plot_err(e.to_string()))?;
        chart
            .draw_series(LineSeries::new(
                rows.iter().map(|r| (r.k as f64, clamp(r.mean))),
                color.stroke_width(2),
            ))
            .map_err(|e| plot_err(e.to_string()))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        if s.truncated {
            let last = rows.last().unwrap();
            chart
                .draw_series(std::iter::once(Cross::new(
                    (last.k as f64, clamp(last.mean)),
                    8,
                    color.stroke_width(3),
                )))
                .map_err(|e| plot_err(e.to_string()))?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;
    root.present().map_err(|e| plot_err(e.to_string()))?;
    Ok(())
}

/// Output formats selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

/// Writes the CSVs and/or the chart of the first metric, plus
/// `summary.json`, under `dir/<name>/`. Returns the files written.
pub fn write_outputs(result: &AggregateResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.join(&result.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        written.extend(write_csv(result, &dir)?);
    }
    if matches!(format, OutputFormat::Svg | OutputFormat::Both) {
        let metric = *result.metrics.first().ok_or(Error::NoMetrics)?;
        let path = dir.join(format!("{}.svg", result.name));
        render_svg(result, metric, &path)?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    write_summary(result, &path)?;
    written.push(path);
    Ok(written)
}

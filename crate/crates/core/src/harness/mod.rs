//! Experiment runner: single runs, paired strategy comparisons and parameter
//! sweeps, plus their CSV/JSON artifacts.

pub mod stats;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig, Strategy, SWEEPABLE};
use crate::sim::{
    run_scenario, DropCounts, EnergyLedger, MetricsSeries, PacketCounts, ScenarioOutcome, SimError,
    CSV_HEADER,
};
use stats::{paired_sign_test, Better, MeanStd, SignTest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl HarnessError {
    /// Invalid input as opposed to a failure while running or writing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_) | HarnessError::Usage(_) | HarnessError::Sim(SimError::Config(_))
        )
    }
}

/// Which artifact files to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        self != OutputFormat::Json
    }

    pub fn json(self) -> bool {
        self != OutputFormat::Csv
    }
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(HarnessError::Usage(format!("unknown format `{other}` (expected csv, json or both)"))),
        }
    }
}

/// Headline numbers of one run. Totals equal the final CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub seed: u64,
    pub node_count: usize,
    pub duration_s: f64,
    /// First battery death, or the run duration when none died.
    pub network_lifetime_s: f64,
    pub lifetime_censored: bool,
    /// First sample after traffic began with cumulative delivery ratio below 0.9.
    pub delivery_lifetime_s: Option<f64>,
    pub energy_per_delivered_report_j: Option<f64>,
    pub final_delivery_ratio: f64,
    pub total_energy_j: f64,
    pub active_nodes: usize,
    pub reports_sent: u64,
    pub reports_delivered: u64,
    pub ch_count: usize,
    pub gw_count: usize,
    pub dgw_count: usize,
    pub sources: usize,
    pub deaths: usize,
    pub terminated_early_at: Option<f64>,
    pub packets: PacketCounts,
    pub drops: DropCounts,
    pub energy_ledger: EnergyLedger,
    pub conservation_error: f64,
    pub warnings: Vec<String>,
}

/// Cumulative delivery ratio threshold for the secondary lifetime.
pub const DELIVERY_LIFETIME_RATIO: f64 = 0.9;

impl RunSummary {
    pub fn from_outcome(out: &ScenarioOutcome) -> Self {
        let cfg = &out.config;
        let last = *out.series.last().expect("a run always has a final row");
        let first_death = out.first_death();
        Self {
            strategy: cfg.strategy,
            seed: cfg.seed,
            node_count: cfg.node_count,
            duration_s: cfg.duration,
            network_lifetime_s: first_death.unwrap_or(cfg.duration),
            lifetime_censored: first_death.is_none(),
            delivery_lifetime_s: out
                .series
                .rows
                .iter()
                .find(|r| r.reports_sent > 0 && r.delivery_ratio < DELIVERY_LIFETIME_RATIO)
                .map(|r| r.time_s),
            energy_per_delivered_report_j: (last.reports_delivered > 0)
                .then(|| last.total_energy_j / last.reports_delivered as f64),
            final_delivery_ratio: last.delivery_ratio,
            total_energy_j: last.total_energy_j,
            active_nodes: last.active_nodes,
            reports_sent: last.reports_sent,
            reports_delivered: last.reports_delivered,
            ch_count: last.ch_count,
            gw_count: last.gw_count,
            dgw_count: last.dgw_count,
            sources: out.sources.len(),
            deaths: out.deaths(),
            terminated_early_at: out.terminated_early_at,
            packets: out.packets,
            drops: out.drops,
            energy_ledger: out.ledger,
            conservation_error: out.conservation_error(),
            warnings: out.warnings.clone(),
        }
    }
}

/// Outputs of one run.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ScenarioConfig,
    pub series: MetricsSeries,
    pub summary: RunSummary,
}

pub fn run(config: &ScenarioConfig) -> Result<RunArtifact, HarnessError> {
    let out = run_scenario(config)?;
    Ok(RunArtifact {
        summary: RunSummary::from_outcome(&out),
        series: out.series,
        config: out.config,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<PathBuf, HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s.into_bytes()
}

impl RunArtifact {
    /// Writes `<stem>.csv`, `<stem>.json` and the config echo `<stem>.toml`.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<Vec<PathBuf>, HarnessError> {
        ensure_dir(dir)?;
        let mut written = Vec::new();
        if format.csv() {
            written.push(write_file(&dir.join(format!("{stem}.csv")), self.series.to_csv_string().as_bytes())?);
        }
        if format.json() {
            written.push(write_file(&dir.join(format!("{stem}.json")), &json(&self.summary))?);
        }
        written.push(write_file(&dir.join(format!("{stem}.toml")), self.config.to_toml_string().as_bytes())?);
        Ok(written)
    }
}

/// Per-strategy aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyAggregate {
    pub strategy: Strategy,
    pub runs: usize,
    pub network_lifetime_s: MeanStd,
    /// Over runs that delivered at least one report.
    pub energy_per_delivered_report_j: Option<MeanStd>,
    pub final_active_nodes: MeanStd,
    pub final_delivery_ratio: MeanStd,
}

/// Paired comparison of one strategy against the first listed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub candidate: Strategy,
    pub reference: Strategy,
    pub lifetime: SignTest,
    /// Seeds where either side delivered nothing are left out.
    pub energy_per_report: SignTest,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub aggregates: Vec<StrategyAggregate>,
    pub paired: Vec<PairedComparison>,
    /// Row-major: one entry per strategy, each listing runs in seed order.
    pub runs: Vec<Vec<RunSummary>>,
}

pub const COMPARISON_CSV_HEADER: [&str; 11] = [
    "strategy",
    "runs",
    "network_lifetime_s_mean",
    "network_lifetime_s_std",
    "energy_per_delivered_report_j_mean",
    "energy_per_delivered_report_j_std",
    "final_active_nodes_mean",
    "final_active_nodes_std",
    "final_delivery_ratio_mean",
    "final_delivery_ratio_std",
    "runs_with_deliveries",
];

impl Comparison {
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(COMPARISON_CSV_HEADER).expect("in memory");
        for a in &self.aggregates {
            let (em, es, en) = a
                .energy_per_delivered_report_j
                .map_or((String::new(), String::new(), 0), |e| (e.mean.to_string(), e.std.to_string(), e.n));
            w.write_record([
                a.strategy.to_string(),
                a.runs.to_string(),
                a.network_lifetime_s.mean.to_string(),
                a.network_lifetime_s.std.to_string(),
                em,
                es,
                a.final_active_nodes.mean.to_string(),
                a.final_active_nodes.std.to_string(),
                a.final_delivery_ratio.mean.to_string(),
                a.final_delivery_ratio.std.to_string(),
                en.to_string(),
            ])
            .expect("in memory");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("UTF-8")
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, HarnessError> {
        ensure_dir(dir)?;
        let mut written = Vec::new();
        if format.csv() {
            written.push(write_file(&dir.join("comparison.csv"), self.to_csv_string().as_bytes())?);
        }
        if format.json() {
            written.push(write_file(&dir.join("comparison.json"), &json(self))?);
        }
        Ok(written)
    }
}

fn aggregate(strategy: Strategy, runs: &[RunSummary]) -> StrategyAggregate {
    let col = |f: &dyn Fn(&RunSummary) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let epr: Vec<f64> = runs.iter().filter_map(|r| r.energy_per_delivered_report_j).collect();
    StrategyAggregate {
        strategy,
        runs: runs.len(),
        network_lifetime_s: MeanStd::of(&col(&|r| r.network_lifetime_s)).expect("at least one seed"),
        energy_per_delivered_report_j: MeanStd::of(&epr),
        final_active_nodes: MeanStd::of(&col(&|r| r.active_nodes as f64)).expect("at least one seed"),
        final_delivery_ratio: MeanStd::of(&col(&|r| r.final_delivery_ratio)).expect("at least one seed"),
    }
}

fn paired(candidate: &[RunSummary], reference: &[RunSummary]) -> PairedComparison {
    let life = |v: &[RunSummary]| v.iter().map(|r| r.network_lifetime_s).collect::<Vec<_>>();
    let (ce, re): (Vec<f64>, Vec<f64>) = candidate
        .iter()
        .zip(reference)
        .filter_map(|(c, r)| Some((c.energy_per_delivered_report_j?, r.energy_per_delivered_report_j?)))
        .unzip();
    PairedComparison {
        candidate: candidate[0].strategy,
        reference: reference[0].strategy,
        lifetime: paired_sign_test(&life(candidate), &life(reference), Better::Higher),
        energy_per_report: paired_sign_test(&ce, &re, Better::Lower),
    }
}

/// Runs every strategy on every seed, in parallel. A given seed yields the
/// same placement and true links for all strategies.
pub fn compare(config: &ScenarioConfig, strategies: &[Strategy], seeds: &[u64]) -> Result<Comparison, HarnessError> {
    if strategies.len() < 2 {
        return Err(HarnessError::Usage("compare needs at least two strategies".into()));
    }
    if seeds.is_empty() {
        return Err(HarnessError::Usage("compare needs at least one seed".into()));
    }
    config.validate()?;
    let jobs: Vec<(usize, ScenarioConfig)> = strategies
        .iter()
        .enumerate()
        .flat_map(|(k, &strategy)| {
            seeds.iter().map(move |&seed| {
                let mut c = config.clone();
                c.strategy = strategy;
                c.seed = seed;
                (k, c)
            })
        })
        .collect();
    let results: Vec<Result<RunSummary, HarnessError>> = jobs
        .par_iter()
        .map(|(_, c)| Ok(RunSummary::from_outcome(&run_scenario(c)?)))
        .collect();
    let mut runs: Vec<Vec<RunSummary>> = vec![Vec::with_capacity(seeds.len()); strategies.len()];
    for ((k, _), r) in jobs.iter().zip(results) {
        runs[*k].push(r?);
    }
    let aggregates = strategies.iter().zip(&runs).map(|(&s, r)| aggregate(s, r)).collect();
    let paired = runs[1..].iter().map(|r| paired(r, &runs[0])).collect();
    Ok(Comparison {
        seeds: seeds.to_vec(),
        aggregates,
        paired,
        runs,
    })
}

/// One artifact per swept value, in input order.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub param: String,
    pub points: Vec<(String, RunArtifact)>,
}

impl Sweep {
    /// All series stacked, keyed by the swept value in the first column.
    pub fn combined_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec![self.param.as_str()];
        header.extend(CSV_HEADER);
        w.write_record(&header).expect("in memory");
        for (value, art) in &self.points {
            let body = art.series.to_csv_string();
            let mut rdr = csv::Reader::from_reader(body.as_bytes());
            for rec in rdr.records() {
                let rec = rec.expect("own CSV parses");
                let mut row = vec![value.as_str()];
                row.extend(rec.iter());
                w.write_record(&row).expect("in memory");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("UTF-8")
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, HarnessError> {
        ensure_dir(dir)?;
        let mut written = Vec::new();
        for (value, art) in &self.points {
            written.extend(art.write(dir, &format!("{}_{}", self.param, value), format)?);
        }
        if format.csv() {
            written.push(write_file(&dir.join(format!("sweep_{}.csv", self.param)), self.combined_csv().as_bytes())?);
        }
        if format.json() {
            let summaries: Vec<_> = self
                .points
                .iter()
                .map(|(v, a)| serde_json::json!({ "value": v, "summary": a.summary }))
                .collect();
            written.push(write_file(&dir.join(format!("sweep_{}.json", self.param)), &json(&summaries))?);
        }
        Ok(written)
    }
}

/// Runs the config once per value of `param`, in parallel.
pub fn sweep(config: &ScenarioConfig, param: &str, values: &[String]) -> Result<Sweep, HarnessError> {
    if !SWEEPABLE.contains(&param) {
        return Err(ConfigError::NotSweepable(param.to_string()).into());
    }
    if values.is_empty() {
        return Err(HarnessError::Usage("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| config.with_param(param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let arts: Vec<Result<RunArtifact, HarnessError>> = configs.par_iter().map(run).collect();
    let points = values
        .iter()
        .map(|v| v.trim().to_string())
        .zip(arts)
        .map(|(v, a)| a.map(|a| (v, a)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sweep {
        param: param.to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(strategy: Strategy) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(25, 3, strategy);
        c.field_width = 80.0;
        c.field_height = 80.0;
        c.duration = 20.0;
        c.query_start = 2.0;
        c
    }

    #[test]
    fn summary_matches_final_row() {
        let a = run(&small(Strategy::LinkPtx)).unwrap();
        let last = a.series.last().unwrap();
        assert_eq!(a.summary.total_energy_j, last.total_energy_j);
        assert_eq!(a.summary.reports_delivered, last.reports_delivered);
        assert_eq!(a.summary.active_nodes, last.active_nodes);
        assert_eq!(a.summary.final_delivery_ratio, last.delivery_ratio);
        assert_eq!(a.series.len(), 21);
    }

    #[test]
    fn compare_shapes_and_duplicates() {
        let c = small(Strategy::LinkPtx);
        let cmp = compare(&c, &[Strategy::Lic, Strategy::Lic], &[1, 2]).unwrap();
        assert_eq!(cmp.aggregates.len(), 2);
        assert_eq!(cmp.aggregates[0].network_lifetime_s, cmp.aggregates[1].network_lifetime_s);
        assert_eq!(cmp.paired[0].lifetime.ties, 2);
        assert_eq!(cmp.to_csv_string().lines().count(), 3);
        assert!(compare(&c, &[Strategy::Lic], &[1]).is_err());
        assert!(compare(&c, &[Strategy::Lic, Strategy::Hcc], &[]).is_err());
    }

    #[test]
    fn sweep_validation() {
        let c = small(Strategy::Hcc);
        assert!(sweep(&c, "node_count", &[]).is_err());
        assert!(matches!(
            sweep(&c, "strategy", &["lic".into()]),
            Err(HarnessError::Config(ConfigError::NotSweepable(_)))
        ));
        let s = sweep(&c, "seed", &["1".into(), "2".into()]).unwrap();
        let combined = s.combined_csv();
        assert!(combined.starts_with("seed,time_s,"));
        assert_eq!(combined.lines().count(), 1 + 2 * 21);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
        assert!(OutputFormat::Both.csv() && OutputFormat::Both.json());
    }
}

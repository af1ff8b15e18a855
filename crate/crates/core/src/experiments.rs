//! Monte-Carlo campaigns behind each figure, written as plot-ready CSV.
//!
//! Every figure produces `<figure>_raw.csv` (one row per realization, or per
//! realization and iteration for the convergence figure) and
//! `<figure>_aggregate.csv` (mean and population standard deviation per series and
//! grid point). Realizations run in parallel; rows are written in a fixed order so
//! output is byte-identical for a given seed.
//!
//! Raw columns: `series,x,realization,iteration,feasible,coverage,swath,b,b_perp,h_amb,dh_90,mean_velocity,energy_1,energy_2,min_margin`.
//!
//! Aggregate columns: `series,x,iteration,runs,feasible_runs`, then `<metric>_mean` and
//! `<metric>_sd` for coverage, b, b_perp, h_amb, dh_90 and mean_velocity.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::ao::{init_f1, init_f2, psi_grid, run_scheme, search_psi, Scheme, Solution};
use crate::constraints::DecisionState;
use crate::error::{PlanError, Result};
use crate::scenario::{db_to_linear, Scenario};

pub const RAW_HEADER: [&str; 15] = [
    "series",
    "x",
    "realization",
    "iteration",
    "feasible",
    "coverage",
    "swath",
    "b",
    "b_perp",
    "h_amb",
    "dh_90",
    "mean_velocity",
    "energy_1",
    "energy_2",
    "min_margin",
];

/// Metrics summarised in the aggregate file.
pub const AGGREGATED: [&str; 6] = ["coverage", "b", "b_perp", "h_amb", "dh_90", "mean_velocity"];

/// SNR-decorrelation grid of the coverage figure.
pub const SNR_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
/// Maximum transmit powers of the coverage figure, dBW.
pub const SNR_FIGURE_POWERS_DB: [f64; 2] = [10.0, 16.0];
/// Power sweep shared by the baseline and velocity figures, dBW.
pub const POWER_GRID_DB: [f64; 6] = [6.0, 8.0, 10.0, 12.0, 14.0, 16.0];
/// SNR-decorrelation levels of the velocity figure.
pub const VELOCITY_FIGURE_GAMMAS: [f64; 3] = [0.6, 0.7, 0.8];
/// Channel gain of the baseline figure, dB.
pub const BASELINE_BETA_DB: f64 = 19.3;
/// Channel gain of the velocity figure, dB.
pub const VELOCITY_BETA_DB: f64 = 20.91;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Convergence,
    StepSize,
    BaselineVsPcom,
    CoverageVsSnrMin,
    VelocityVsPcom,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Convergence,
        Figure::StepSize,
        Figure::BaselineVsPcom,
        Figure::CoverageVsSnrMin,
        Figure::VelocityVsPcom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Convergence => "convergence",
            Figure::StepSize => "step_size",
            Figure::BaselineVsPcom => "baseline_vs_pcom",
            Figure::CoverageVsSnrMin => "coverage_vs_snr_min",
            Figure::VelocityVsPcom => "velocity_vs_pcom",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown figure `{s}`"))
    }
}

/// Step size: fixed, or searched on the base scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiChoice {
    Fixed(f64),
    Auto,
}

impl FromStr for PsiChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(PsiChoice::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is neither `auto` nor a number"))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("step size {v} is outside [0, 1]"));
        }
        Ok(PsiChoice::Fixed(v))
    }
}

/// Which schemes a figure runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    All,
    Only(Scheme),
}

impl SchemeSelection {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeSelection::All => Scheme::ALL.to_vec(),
            SchemeSelection::Only(s) => vec![s],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub figure: Figure,
    pub scenario: Scenario,
    pub realizations: usize,
    pub seed: u64,
    pub psi: PsiChoice,
    pub schemes: SchemeSelection,
    pub out: PathBuf,
}

/// CSV text of a number; negative zero is written as `0`.
fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

/// One CSV row of the raw file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub series: String,
    pub x: f64,
    pub realization: usize,
    pub iteration: usize,
    pub feasible: bool,
    pub coverage: f64,
    pub swath: f64,
    pub b: f64,
    pub b_perp: f64,
    pub h_amb: f64,
    pub dh_90: f64,
    pub mean_velocity: f64,
    pub energy: [f64; 2],
    pub min_margin: f64,
}

impl RunRecord {
    fn failed(series: &str, x: f64, realization: usize) -> Self {
        RunRecord {
            series: series.to_string(),
            x,
            realization,
            iteration: 0,
            feasible: false,
            coverage: f64::NAN,
            swath: f64::NAN,
            b: f64::NAN,
            b_perp: f64::NAN,
            h_amb: f64::NAN,
            dh_90: f64::NAN,
            mean_velocity: f64::NAN,
            energy: [f64::NAN; 2],
            min_margin: f64::NAN,
        }
    }

    fn from_solution(series: &str, x: f64, realization: usize, s: &Solution) -> Self {
        let a = &s.audit;
        RunRecord {
            series: series.to_string(),
            x,
            realization,
            iteration: s.history.len(),
            feasible: true,
            coverage: a.coverage,
            swath: a.swath,
            b: a.b,
            b_perp: a.b_perp,
            h_amb: a.h_amb,
            dh_90: a.dh_90,
            mean_velocity: a.mean_velocity,
            energy: a.energy,
            min_margin: s.report.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn fields(&self) -> Vec<String> {
        let mut out = vec![
            self.series.clone(),
            num(self.x),
            self.realization.to_string(),
            self.iteration.to_string(),
            u8::from(self.feasible).to_string(),
        ];
        out.extend(
            [
                self.coverage,
                self.swath,
                self.b,
                self.b_perp,
                self.h_amb,
                self.dh_90,
                self.mean_velocity,
                self.energy[0],
                self.energy[1],
                self.min_margin,
            ]
            .map(num),
        );
        out
    }

    pub fn metric(&self, name: &str) -> f64 {
        match name {
            "coverage" => self.coverage,
            "b" => self.b,
            "b_perp" => self.b_perp,
            "h_amb" => self.h_amb,
            "dh_90" => self.dh_90,
            "mean_velocity" => self.mean_velocity,
            _ => f64::NAN,
        }
    }
}

/// Mean and population standard deviation; `(NaN, NaN)` for an empty slice.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Relative gain of `a` over `b`, percent.
pub fn gain_percent(a: f64, b: f64) -> f64 {
    (a - b) / b * 100.0
}

/// Seed of realization `r`.
pub fn realization_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

/// Output of one campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub raw: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
    /// Step size used per series label.
    pub psi: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub series: String,
    pub x: f64,
    pub iteration: usize,
    pub runs: usize,
    pub feasible_runs: usize,
    /// `(mean, sd)` per entry of [`AGGREGATED`].
    pub stats: Vec<(f64, f64)>,
}

impl AggregateRow {
    pub fn mean(&self, metric: &str) -> f64 {
        AGGREGATED.iter().position(|m| *m == metric).map_or(f64::NAN, |i| self.stats[i].0)
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.series.clone(),
            num(self.x),
            self.iteration.to_string(),
            self.runs.to_string(),
            self.feasible_runs.to_string(),
        ];
        for (m, s) in &self.stats {
            f.push(num(*m));
            f.push(num(*s));
        }
        f
    }
}

pub fn aggregate_header() -> Vec<String> {
    let mut h: Vec<String> = ["series", "x", "iteration", "runs", "feasible_runs"].iter().map(|s| s.to_string()).collect();
    for m in AGGREGATED {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_sd"));
    }
    h
}

/// Groups raw rows by `(series, x)`, and by iteration when `by_iteration` is set,
/// in first-appearance order. Without it the aggregate iteration column is 0.
pub fn aggregate(raw: &[RunRecord], by_iteration: bool) -> Vec<AggregateRow> {
    let mut order: Vec<(String, u64, usize)> = Vec::new();
    let mut groups: BTreeMap<(String, u64, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in raw {
        let it = if by_iteration && r.feasible { r.iteration } else { 0 };
        let key = (r.series.clone(), r.x.to_bits(), it);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let ok: Vec<&&RunRecord> = rows.iter().filter(|r| r.feasible).collect();
            let stats = AGGREGATED
                .iter()
                .map(|m| mean_sd(&ok.iter().map(|r| r.metric(m)).collect::<Vec<_>>()))
                .collect();
            AggregateRow {
                series: key.0,
                x: f64::from_bits(key.1),
                iteration: key.2,
                runs: rows.len(),
                feasible_runs: ok.len(),
                stats,
            }
        })
        .collect()
}

fn seeds(spec: &ExperimentSpec) -> Vec<u64> {
    (0..spec.realizations).map(|r| realization_seed(spec.seed, r)).collect()
}

fn resolve_psi(spec: &ExperimentSpec, sc: &Scenario, scheme: Scheme, init: &DecisionState) -> f64 {
    match spec.psi {
        PsiChoice::Fixed(p) => p,
        PsiChoice::Auto if scheme.uses_psi() => search_psi(sc, scheme, init, sc.algo.eps[4], &seeds(spec)).psi,
        PsiChoice::Auto => 1.0,
    }
}

/// Runs `realizations` seeds in parallel and returns one final record each.
fn final_records(sc: &Scenario, scheme: Scheme, psi: f64, init: &DecisionState, series: &str, x: f64, seeds: &[u64]) -> Vec<RunRecord> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| match run_scheme(sc, scheme, psi, init, seed) {
            Ok(s) => RunRecord::from_solution(series, x, r, &s),
            Err(e) => {
                log::debug!("{series} x={x} realization {r}: {e}");
                RunRecord::failed(series, x, r)
            }
        })
        .collect()
}

fn convergence(spec: &ExperimentSpec, psi_used: &mut BTreeMap<String, f64>) -> Vec<RunRecord> {
    let sc = &spec.scenario;
    let seeds = seeds(spec);
    let mut raw = Vec::new();
    for (tag, init) in [("F1", init_f1(sc)), ("F2", init_f2(sc))] {
        for scheme in spec.schemes.schemes() {
            let series = format!("{}_{tag}", scheme.label());
            let psi = resolve_psi(spec, sc, scheme, &init);
            psi_used.insert(series.clone(), psi);
            let runs: Vec<Result<Solution>> = seeds.par_iter().map(|&s| run_scheme(sc, scheme, psi, &init, s)).collect();
            let longest = runs.iter().filter_map(|r| r.as_ref().ok()).map(|s| s.history.len()).max().unwrap_or(0);
            for (r, run) in runs.iter().enumerate() {
                match run {
                    Ok(s) => {
                        // converged runs are held at their final value
                        for it in 0..longest {
                            let mut rec = RunRecord::from_solution(&series, psi, r, s);
                            rec.iteration = it + 1;
                            rec.coverage = s.history[it.min(s.history.len() - 1)];
                            raw.push(rec);
                        }
                    }
                    Err(_) => raw.push(RunRecord::failed(&series, psi, r)),
                }
            }
        }
    }
    raw
}

fn step_size(spec: &ExperimentSpec) -> Vec<RunRecord> {
    let sc = &spec.scenario;
    let seeds = seeds(spec);
    let mut raw = Vec::new();
    for (tag, init) in [("F1", init_f1(sc)), ("F2", init_f2(sc))] {
        let series = format!("psi_{tag}");
        for psi in psi_grid(sc.algo.eps[4]) {
            raw.extend(final_records(sc, Scheme::Proposed, psi, &init, &series, psi, &seeds));
        }
    }
    raw
}

fn power_sweep(spec: &ExperimentSpec, beta_db: f64, gammas: &[f64], psi_used: &mut BTreeMap<String, f64>) -> Vec<RunRecord> {
    let mut base = spec.scenario.clone();
    base.beta_c = [db_to_linear(beta_db); 2];
    let init = init_f1(&base);
    let psi = resolve_psi(spec, &base, Scheme::Proposed, &init);
    let seeds = seeds(spec);
    let mut raw = Vec::new();
    for &g in gammas {
        let series = format!("gamma_{g}");
        psi_used.insert(series.clone(), psi);
        for p_db in POWER_GRID_DB {
            let mut sc = base.clone();
            sc.gamma_snr_min = g;
            sc.p_com_max = db_to_linear(p_db);
            raw.extend(final_records(&sc, Scheme::Proposed, psi, &init, &series, p_db, &seeds));
        }
    }
    raw
}

fn snr_sweep(spec: &ExperimentSpec, psi_used: &mut BTreeMap<String, f64>) -> Vec<RunRecord> {
    let base = &spec.scenario;
    let init = init_f1(base);
    let psi = resolve_psi(spec, base, Scheme::Proposed, &init);
    let seeds = seeds(spec);
    let mut raw = Vec::new();
    for p_db in SNR_FIGURE_POWERS_DB {
        let series = format!("pcom_{p_db}dB");
        psi_used.insert(series.clone(), psi);
        for g in SNR_GRID {
            let mut sc = base.clone();
            sc.gamma_snr_min = g;
            sc.p_com_max = db_to_linear(p_db);
            raw.extend(final_records(&sc, Scheme::Proposed, psi, &init, &series, g, &seeds));
        }
    }
    raw
}

/// Runs the campaign of `spec.figure` without touching the file system.
pub fn run_campaign(spec: &ExperimentSpec) -> Result<Campaign> {
    if spec.realizations == 0 {
        return Err(PlanError::Invalid { key: "realizations".into(), msg: "at least one realization is needed".into() });
    }
    spec.scenario.validate()?;
    let mut psi = BTreeMap::new();
    let raw = match spec.figure {
        Figure::Convergence => convergence(spec, &mut psi),
        Figure::StepSize => step_size(spec),
        Figure::BaselineVsPcom => power_sweep(spec, BASELINE_BETA_DB, &[spec.scenario.gamma_snr_min], &mut psi),
        Figure::CoverageVsSnrMin => snr_sweep(spec, &mut psi),
        Figure::VelocityVsPcom => power_sweep(spec, VELOCITY_BETA_DB, &VELOCITY_FIGURE_GAMMAS, &mut psi),
    };
    let aggregate = aggregate(&raw, spec.figure == Figure::Convergence);
    Ok(Campaign { raw, aggregate, psi })
}

fn csv_err(path: &Path, e: impl fmt::Display) -> PlanError {
    PlanError::Csv(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| PlanError::Io { path: path.display().to_string(), source: e })
}

/// Runs a campaign and writes its CSV files; returns the paths written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&spec.out).map_err(|e| PlanError::Io { path: spec.out.display().to_string(), source: e })?;
    let c = run_campaign(spec)?;
    let name = spec.figure.name();
    let raw_path = spec.out.join(format!("{name}_raw.csv"));
    let agg_path = spec.out.join(format!("{name}_aggregate.csv"));
    let header: Vec<String> = RAW_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(&raw_path, &header, c.raw.iter().map(RunRecord::fields))?;
    write_rows(&agg_path, &aggregate_header(), c.aggregate.iter().map(AggregateRow::fields))?;
    let mut paths = vec![raw_path, agg_path];
    if !c.psi.is_empty() {
        let p = spec.out.join(format!("{name}_psi.csv"));
        write_rows(
            &p,
            &["series".to_string(), "psi".to_string()],
            c.psi.iter().map(|(k, v)| vec![k.clone(), num(*v)]),
        )?;
        paths.push(p);
    }
    Ok(paths)
}

/// Final mean coverage of one scheme in the convergence aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub series: String,
    pub coverage: f64,
    /// Gain over each benchmark with the same initial point, percent.
    pub gains: Vec<(String, f64)>,
}

/// Reads `convergence_aggregate.csv` from `dir` and compares final coverages.
pub fn summarize(dir: &Path) -> Result<Vec<SchemeSummary>> {
    let path = dir.join("convergence_aggregate.csv");
    let mut rd = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let headers = rd.headers().map_err(|e| csv_err(&path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlanError::Csv(format!("{}: missing column `{name}`", path.display())))
    };
    let (ci, cs, cc) = (col("iteration")?, col("series")?, col("coverage_mean")?);
    let mut last: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| csv_err(&path, e))?;
        let it: usize = rec[ci].parse().map_err(|e| csv_err(&path, e))?;
        let c: f64 = rec[cc].parse().map_err(|e| csv_err(&path, e))?;
        let e = last.entry(rec[cs].to_string()).or_insert((it, c));
        if it >= e.0 {
            *e = (it, c);
        }
    }
    Ok(summarize_final(&last.into_iter().map(|(k, (_, c))| (k, c)).collect::<Vec<_>>()))
}

/// Gains of every series over the benchmarks sharing its initial-point suffix.
pub fn summarize_final(finals: &[(String, f64)]) -> Vec<SchemeSummary> {
    let suffix = |s: &str| s.rsplit_once('_').map_or(String::new(), |(_, t)| t.to_string());
    finals
        .iter()
        .map(|(s, c)| SchemeSummary {
            series: s.clone(),
            coverage: *c,
            gains: finals
                .iter()
                .filter(|(o, _)| o != s && o.starts_with("benchmark") && suffix(o) == suffix(s))
                .map(|(o, oc)| (o.clone(), gain_percent(*c, *oc)))
                .collect(),
        })
        .collect()
}

/// Writes `summary.csv` next to the aggregates.
pub fn write_summary(dir: &Path, rows: &[SchemeSummary]) -> Result<PathBuf> {
    let p = dir.join("summary.csv");
    write_rows(
        &p,
        &["series", "coverage_mean", "versus", "gain_percent"].map(String::from),
        rows.iter().flat_map(|r| {
            let base = vec![vec![r.series.clone(), num(r.coverage), String::new(), String::new()]];
            base.into_iter().chain(
                r.gains.iter().map(|(o, g)| vec![r.series.clone(), num(r.coverage), o.clone(), num(*g)]),
            )
        }),
    )?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_hand_values() {
        assert!((gain_percent(4.9e4, 4.3e4) - 13.953_488_372_093_023).abs() < 1e-9);
        assert_eq!(gain_percent(3.0, 3.0), 0.0);
    }

    #[test]
    fn single_realization_has_zero_sd() {
        let (m, s) = mean_sd(&[2.5]);
        assert_eq!((m, s), (2.5, 0.0));
    }

    #[test]
    fn figure_and_psi_parse() {
        assert_eq!("step_size".parse::<Figure>().unwrap(), Figure::StepSize);
        assert!("fig9".parse::<Figure>().is_err());
        assert_eq!("auto".parse::<PsiChoice>().unwrap(), PsiChoice::Auto);
        assert_eq!("0.4".parse::<PsiChoice>().unwrap(), PsiChoice::Fixed(0.4));
        assert!("1.5".parse::<PsiChoice>().is_err());
    }

    #[test]
    fn summary_pairs_by_initial_point() {
        let rows = summarize_final(&[
            ("proposed_F1".into(), 4.9e4),
            ("benchmark1_F1".into(), 4.3e4),
            ("benchmark1_F2".into(), 1.0),
        ]);
        assert_eq!(rows[0].gains.len(), 1);
        assert!((rows[0].gains[0].1 - 13.953_488_372_093_023).abs() < 1e-9);
    }
}

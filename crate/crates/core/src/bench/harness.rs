//! Timing scenarios and their line-delimited JSON reports.
//!
//! A report is a `header` record, one `row` per timed configuration and a
//! closing `summary` with derived metrics and the equality checks that ran
//! before timing.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::synth::{pick_team, subsample_edges};
use crate::error::{Error, Result};
use crate::network::LabeledNetwork;
use crate::replacement::{
    recommend_approx_refactored, recommend_basic, recommend_basic_unpruned, recommend_fast_approx,
    recommend_fast_exact, Algorithm, RecommendationSet, ReplacementQuery, DEFAULT_RANK_CAP,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Timed runs per configuration; the median is reported.
    pub runs: usize,
    /// Untimed runs before the timed ones.
    pub warmup: usize,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            runs: 5,
            warmup: 1,
            parallel: false,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub r: Option<usize>,
    /// Median over the timed runs.
    pub wall_ms: f64,
    pub runs_ms: Vec<f64>,
    pub candidates_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum BenchRecord {
    Header {
        schema_version: u32,
        scenario: String,
        environment: String,
        config: BenchConfig,
    },
    Row(BenchRow),
    Summary {
        metrics: BTreeMap<String, f64>,
        checks: BTreeMap<String, bool>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scenario: String,
    pub environment: String,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
}

impl BenchReport {
    fn new(scenario: &str, config: &BenchConfig) -> Self {
        Self {
            scenario: scenario.into(),
            environment: environment_note(config),
            config: config.clone(),
            rows: Vec::new(),
            metrics: BTreeMap::new(),
            checks: BTreeMap::new(),
        }
    }

    pub fn records(&self) -> Vec<BenchRecord> {
        let mut out = vec![BenchRecord::Header {
            schema_version: SCHEMA_VERSION,
            scenario: self.scenario.clone(),
            environment: self.environment.clone(),
            config: self.config.clone(),
        }];
        out.extend(self.rows.iter().cloned().map(BenchRecord::Row));
        out.push(BenchRecord::Summary {
            metrics: self.metrics.clone(),
            checks: self.checks.clone(),
        });
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("bench records serialize") + "\n")
            .collect()
    }

    /// Parses every report in a JSONL stream, in order.
    pub fn parse_jsonl(text: &str) -> Result<Vec<BenchReport>> {
        let mut reports: Vec<BenchReport> = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |message: String| Error::Parse {
                path: "<bench report>".into(),
                line: i + 1,
                message,
            };
            let record: BenchRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            match record {
                BenchRecord::Header {
                    schema_version,
                    scenario,
                    environment,
                    config,
                } => {
                    if schema_version != SCHEMA_VERSION {
                        return Err(bad(format!("unsupported schema version {schema_version}")));
                    }
                    reports.push(BenchReport {
                        scenario,
                        environment,
                        config,
                        rows: Vec::new(),
                        metrics: BTreeMap::new(),
                        checks: BTreeMap::new(),
                    });
                }
                BenchRecord::Row(row) => reports
                    .last_mut()
                    .ok_or_else(|| bad("row before any header".into()))?
                    .rows
                    .push(row),
                BenchRecord::Summary { metrics, checks } => {
                    let report = reports
                        .last_mut()
                        .ok_or_else(|| bad("summary before any header".into()))?;
                    report.metrics = metrics;
                    report.checks = checks;
                }
            }
        }
        Ok(reports)
    }

    /// Appends this report to a JSONL file, creating it if needed.
    pub fn append_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)
    }

    /// Human-readable table.
    pub fn render_text(&self) -> String {
        let mut out = format!("# {} ({})\n", self.scenario, self.environment);
        out.push_str(&format!(
            "{:<22} {:>7} {:>8} {:>4} {:>4} {:>11} {:>10}\n",
            "algorithm", "n", "m", "t", "r", "median_ms", "candidates"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<22} {:>7} {:>8} {:>4} {:>4} {:>11.3} {:>10}\n",
                row.algorithm,
                row.n,
                row.m,
                row.t,
                row.r.map_or("-".to_string(), |r| r.to_string()),
                row.wall_ms,
                row.candidates_evaluated
            ));
        }
        for (k, v) in &self.metrics {
            out.push_str(&format!("{k} = {v:.4}\n"));
        }
        for (k, v) in &self.checks {
            out.push_str(&format!("{k}: {}\n", if *v { "ok" } else { "FAILED" }));
        }
        out
    }
}

fn environment_note(config: &BenchConfig) -> String {
    format!(
        "{}-{}, {} threads available, {}, {} runs after {} warm-up",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        if config.parallel {
            "parallel scoring"
        } else {
            "single-threaded scoring"
        },
        config.runs,
        config.warmup
    )
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Runs `f` `warmup + runs` times and returns the timed milliseconds and the last output.
pub fn time_runs<T>(config: &BenchConfig, mut f: impl FnMut() -> Result<T>) -> Result<(Vec<f64>, T)> {
    if config.runs == 0 {
        return Err(Error::Argument("benchmarks need at least one timed run".into()));
    }
    for _ in 0..config.warmup {
        f()?;
    }
    let mut times = Vec::with_capacity(config.runs);
    let mut last = None;
    for _ in 0..config.runs {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    Ok((times, last.expect("at least one run")))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn ids(set: &RecommendationSet) -> Vec<usize> {
    set.recommendations.iter().map(|r| r.candidate).collect()
}

fn row(
    algorithm: &str,
    net: &LabeledNetwork,
    t: usize,
    r: Option<usize>,
    times: Vec<f64>,
    set: &RecommendationSet,
) -> BenchRow {
    BenchRow {
        algorithm: algorithm.into(),
        n: net.n(),
        m: net.m(),
        t,
        r,
        wall_ms: median(&times),
        runs_ms: times,
        candidates_evaluated: set.candidates_evaluated,
    }
}

fn base_query(team: &[usize], leaver: usize, config: &BenchConfig) -> ReplacementQuery {
    let mut q = ReplacementQuery::new(team.to_vec(), leaver).with_top_k(10);
    q.parallel = config.parallel;
    q
}

/// Basic scoring with and without pruning, per team.
///
/// Pruning ignores skills, so the two top-k lists can differ; whether they
/// agree is recorded as a check rather than enforced.
pub fn bench_pruning(net: &LabeledNetwork, teams: &[(Vec<usize>, usize)], config: &BenchConfig) -> Result<BenchReport> {
    let mut report = BenchReport::new("pruning", config);
    let mut all_agree = true;
    for (i, (team, leaver)) in teams.iter().enumerate() {
        let t = team.len();
        let q = base_query(team, *leaver, config);
        let (pt, pruned) = time_runs(config, || recommend_basic(net, &q))?;
        let (ut, unpruned) = time_runs(config, || recommend_basic_unpruned(net, &q))?;
        all_agree &= ids(&pruned) == ids(&unpruned);
        let ratio = unpruned.candidates_evaluated as f64 / pruned.candidates_evaluated.max(1) as f64;
        report.metrics.insert(format!("team{i}.candidate_ratio"), ratio);
        report
            .metrics
            .insert(format!("team{i}.speedup"), median(&ut) / median(&pt));
        report.rows.push(row("basic_pruned", net, t, None, pt, &pruned));
        report.rows.push(row("basic_unpruned", net, t, None, ut, &unpruned));
    }
    report.checks.insert("pruned_top_k_matches_unpruned".into(), all_agree);
    Ok(report)
}

/// Basic vs fast exact and refactored vs shared approximation for each team size.
///
/// Fails if the exact pair or the approximate pair disagree on the ranked list.
pub fn bench_team_size_sweep(
    net: &LabeledNetwork,
    sizes: &[usize],
    rank_r: Option<usize>,
    config: &BenchConfig,
) -> Result<BenchReport> {
    let mut report = BenchReport::new("team_size_sweep", config);
    for &t in sizes {
        let (team, leaver) = pick_team(net, t, config.seed ^ t as u64)
            .ok_or_else(|| Error::Argument(format!("no connected team of size {t} found")))?;
        let mut q = base_query(&team, leaver, config);
        q.rank_r = Some(rank_r.unwrap_or(DEFAULT_RANK_CAP).min(t - 1));

        let (bt, basic) = time_runs(config, || recommend_basic(net, &q))?;
        let (et, exact) = time_runs(config, || recommend_fast_exact(net, &q))?;
        if ids(&basic) != ids(&exact) {
            return Err(Error::Validation(format!(
                "t = {t}: basic and fast_exact rankings differ"
            )));
        }
        let (rt, refac) = time_runs(config, || recommend_approx_refactored(net, &q))?;
        let (at, approx) = time_runs(config, || recommend_fast_approx(net, &q))?;
        if ids(&refac) != ids(&approx) {
            return Err(Error::Validation(format!(
                "t = {t}: approximate rankings differ between evaluators"
            )));
        }
        report
            .metrics
            .insert(format!("t{t}.speedup_fast_exact"), median(&bt) / median(&et));
        report
            .metrics
            .insert(format!("t{t}.speedup_fast_approx"), median(&rt) / median(&at));
        report
            .rows
            .push(row(Algorithm::Basic.as_str(), net, t, None, bt, &basic));
        report
            .rows
            .push(row(Algorithm::FastExact.as_str(), net, t, None, et, &exact));
        report.rows.push(row("approx_refactored", net, t, q.rank_r, rt, &refac));
        report
            .rows
            .push(row(Algorithm::FastApprox.as_str(), net, t, q.rank_r, at, &approx));
    }
    report.checks.insert("rankings_agree".into(), true);
    Ok(report)
}

/// Fast exact and fast approx on nested edge samples of `net` for a fixed team.
pub fn bench_scalability(
    net: &LabeledNetwork,
    team: &[usize],
    leaver: usize,
    fractions: &[f64],
    rank_r: Option<usize>,
    config: &BenchConfig,
) -> Result<BenchReport> {
    let mut report = BenchReport::new("scalability", config);
    let t = team.len();
    let mut q = base_query(team, leaver, config);
    q.rank_r = Some(rank_r.unwrap_or(DEFAULT_RANK_CAP).min(t - 1));
    let samples = fractions
        .iter()
        .map(|&f| subsample_edges(net, f, config.seed))
        .collect::<Result<Vec<_>>>()?;
    // Runs are interleaved across samples so slow drift in machine speed
    // lands on every point alike instead of tilting the fit.
    let jobs: Vec<(&LabeledNetwork, Algorithm)> = samples
        .iter()
        .flat_map(|s| [(s, Algorithm::FastExact), (s, Algorithm::FastApprox)])
        .collect();
    let run = |(sample, algorithm): (&LabeledNetwork, Algorithm)| match algorithm {
        Algorithm::FastExact => recommend_fast_exact(sample, &q),
        _ => recommend_fast_approx(sample, &q),
    };
    if config.runs == 0 {
        return Err(Error::Argument("benchmarks need at least one timed run".into()));
    }
    for _ in 0..config.warmup {
        for &job in &jobs {
            run(job)?;
        }
    }
    let mut times = vec![Vec::with_capacity(config.runs); jobs.len()];
    let mut last = vec![None; jobs.len()];
    for _ in 0..config.runs {
        for (i, &job) in jobs.iter().enumerate() {
            let start = Instant::now();
            let out = run(job)?;
            times[i].push(start.elapsed().as_secs_f64() * 1e3);
            last[i] = Some(out);
        }
    }
    let (mut ms, mut exact_ms, mut approx_ms) = (Vec::new(), Vec::new(), Vec::new());
    for (((sample, algorithm), runs_ms), set) in jobs.into_iter().zip(times).zip(last) {
        let set = set.expect("at least one run");
        if algorithm == Algorithm::FastExact {
            ms.push(sample.m() as f64);
            exact_ms.push(median(&runs_ms));
            report
                .rows
                .push(row(algorithm.as_str(), sample, t, None, runs_ms, &set));
        } else {
            approx_ms.push(median(&runs_ms));
            report
                .rows
                .push(row(algorithm.as_str(), sample, t, q.rank_r, runs_ms, &set));
        }
    }
    report
        .metrics
        .insert("slope_fast_exact".into(), log_log_slope(&ms, &exact_ms));
    report
        .metrics
        .insert("slope_fast_approx".into(), log_log_slope(&ms, &approx_ms));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::{generate_network, SyntheticSpec};

    fn quick() -> BenchConfig {
        BenchConfig {
            runs: 1,
            warmup: 0,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn slope_of_power_laws() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        assert!(log_log_slope(&xs, &[3.0; 4]).abs() < 1e-12);
        let lin: Vec<f64> = xs.iter().map(|x| 5.0 * x).collect();
        assert!((log_log_slope(&xs, &lin) - 1.0).abs() < 1e-12);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((log_log_slope(&xs, &sq) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn median_of_runs() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn report_round_trips() {
        let net = generate_network(&SyntheticSpec::erdos_renyi(200, 800, 1)).unwrap();
        let report = bench_team_size_sweep(&net, &[3, 5], Some(2), &quick()).unwrap();
        assert_eq!(report.rows.len(), 8);
        let text = report.to_jsonl();
        let parsed = BenchReport::parse_jsonl(&(text.clone() + &text)).unwrap();
        assert_eq!(parsed, vec![report.clone(), report]);
    }

    #[test]
    fn edgeless_network_has_no_candidates() {
        let net = generate_network(&SyntheticSpec::erdos_renyi(20, 0, 1)).unwrap();
        let report = bench_pruning(&net, &[(vec![0, 1, 2], 2)], &quick()).unwrap();
        assert_eq!(report.rows[0].candidates_evaluated, 0);
        assert_eq!(report.rows[1].candidates_evaluated, 17);
    }

    #[test]
    fn complete_graph_prunes_nothing() {
        let net = generate_network(&SyntheticSpec::erdos_renyi(12, 66, 1)).unwrap();
        let report = bench_pruning(&net, &[(vec![0, 1, 2], 2)], &quick()).unwrap();
        assert_eq!(report.rows[0].candidates_evaluated, 9);
        assert_eq!(report.rows[1].candidates_evaluated, 9);
        assert_eq!(report.metrics["team0.candidate_ratio"], 1.0);
    }

    #[test]
    fn non_timing_fields_are_deterministic() {
        let net = generate_network(&SyntheticSpec::erdos_renyi(300, 1200, 2)).unwrap();
        let strip = |r: BenchReport| -> Vec<(String, usize, usize, usize)> {
            r.rows
                .into_iter()
                .map(|row| (row.algorithm, row.m, row.t, row.candidates_evaluated))
                .collect()
        };
        let (team, leaver) = pick_team(&net, 6, 1).unwrap();
        let a = bench_scalability(&net, &team, leaver, &[0.5, 1.0], None, &quick()).unwrap();
        let b = bench_scalability(&net, &team, leaver, &[0.5, 1.0], None, &quick()).unwrap();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn parse_rejects_orphan_rows() {
        let line = r#"{"record":"summary","metrics":{},"checks":{}}"#;
        assert!(BenchReport::parse_jsonl(line).is_err());
    }
}

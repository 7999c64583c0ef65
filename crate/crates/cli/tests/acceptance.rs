//! Acceptance suite. One test per criterion; each prints a single
//! `PASS`/`FAIL` line with the measured figures (visible with
//! `--nocapture`) and fails when the criterion is not met.
//!
//! Tests hold a shared lock so timing measurements never overlap.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamrep_client::Client;
use teamrep_core::bench::{
    bench_scalability, bench_team_size_sweep, generate_network, pick_team, BenchConfig, SyntheticSpec,
};
use teamrep_core::error::Error;
use teamrep_core::kernel::{
    auto_decay, build_lowrank_factors, build_precompute_cache, kernel_direct, kernel_fast_approx, kernel_fast_exact,
    kernel_series, pair_guard_bound, KernelParams,
};
use teamrep_core::network::{LabeledNetwork, TeamCatalog};
use teamrep_core::replacement::{
    prune_candidates, recommend, recommend_basic, recommend_fast_exact, team_guard_bound, Algorithm, ReplacementQuery,
};
use teamrep_core::team::{replace_member, team_subgraph, TeamGraph};
use teamrep_core::wire::RecommendRequest;
use teamrep_service::{serve, AppState, ServiceConfig};

const EXACT_REL_TOL: f64 = 1e-10;
const EXACT_INSTANCES: u64 = 240;
const EXACT_TIME_LIMIT: Duration = Duration::from_secs(30);
const PRUNING_INSTANCES: u64 = 120;
/// Slack for comparing two direct scores that may be equal in exact arithmetic.
const ORDER_SLACK: f64 = 1e-12;
const APPROX_REL_TOL: f64 = 1e-8;
const RANK_K_INSTANCES: u64 = 60;
const SERIES_TOL_FACTOR: f64 = 10.0;
const MONOTONE_INSTANCES: u64 = 50;
const MONOTONE_BUMPS: [f64; 3] = [0.5, 1.0, 2.0];
const PERF_N: usize = 5000;
const PERF_M: usize = 50_000;
const PERF_SEED: u64 = 2024;
const PERF_T: usize = 20;
const PERF_RANK: usize = 10;
const PERF_MIN_SPEEDUP: f64 = 2.0;
const PERF_TIME_LIMIT: Duration = Duration::from_secs(300);
const SCALING_T: usize = 15;
const SCALING_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const SCALING_MAX_SLOPE: f64 = 1.1;
const TIMED_RUNS: usize = 5;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, name: &str, ok: bool, detail: String) {
    println!("{} C{id:02} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "C{id:02} {name}: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    let den = a.abs().max(b.abs());
    if den == 0.0 {
        0.0
    } else {
        (a - b).abs() / den
    }
}

/// Random instance: n ≤ 30, t in 3..=6, l in 1..=4, integer weights 0..=3,
/// binary skills.
struct Instance {
    net: LabeledNetwork,
    team: Vec<usize>,
    leaver: usize,
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let n = rng.gen_range(8..=30);
    let t = rng.gen_range(3..=6);
    let l = rng.gen_range(1..=4);
    let density = rng.gen_range(0.15..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                // Weight 0 registers no edge.
                edges.push((u, v, rng.gen_range(0..=3) as f64));
            }
        }
    }
    let skills: Vec<f64> = (0..n * l).map(|_| rng.gen_range(0..=1) as f64).collect();
    let net = LabeledNetwork::from_parts(
        (0..n).map(|i| format!("v{i}")).collect(),
        edges,
        skills,
        (0..l).map(|k| format!("s{k}")).collect(),
    )
    .unwrap();
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    let team = nodes[..t].to_vec();
    let leaver = team[rng.gen_range(0..t)];
    Instance { net, team, leaver }
}

/// Team graph and its auto decay.
fn setup(inst: &Instance) -> (TeamGraph, KernelParams) {
    let g1 = team_subgraph(&inst.net, &inst.team, inst.leaver).unwrap();
    let c = auto_decay(team_guard_bound(&inst.net, &g1).unwrap());
    (g1, KernelParams::with_decay(c))
}

fn outside(inst: &Instance) -> Vec<usize> {
    (0..inst.net.n()).filter(|q| !inst.team.contains(q)).collect()
}

fn slot_edges(net: &LabeledNetwork, g1: &TeamGraph, q: usize) -> Vec<f64> {
    g1.retained().iter().map(|&r| net.weight(q, r)).collect()
}

fn direct(net: &LabeledNetwork, g1: &TeamGraph, q: usize, params: &KernelParams) -> f64 {
    let g2 = replace_member(net, g1, q).unwrap();
    kernel_direct(g1, &g2, params).unwrap().value
}

#[test]
fn c01_fast_exact_matches_direct() {
    let _g = serial();
    let start = Instant::now();
    let (mut worst, mut pairs) = (0.0f64, 0usize);
    for seed in 0..EXACT_INSTANCES {
        let inst = instance(seed);
        let (g1, params) = setup(&inst);
        let cache = build_precompute_cache(&g1, &params).unwrap();
        for q in outside(&inst) {
            let edges = slot_edges(&inst.net, &g1, q);
            let fast = kernel_fast_exact(&g1, &cache, &edges, inst.net.skill_row(q), &params)
                .unwrap()
                .value;
            worst = worst.max(rel(fast, direct(&inst.net, &g1, q, &params)));
            pairs += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "fast exact vs direct oracle",
        worst < EXACT_REL_TOL && elapsed < EXACT_TIME_LIMIT,
        format!(
            "max rel diff {worst:.2e} (< {EXACT_REL_TOL:.0e}) over {EXACT_INSTANCES} instances / {pairs} pairs in {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c02_basic_and_fast_exact_rank_identically() {
    let _g = serial();
    let mut mismatches = Vec::new();
    for seed in 0..EXACT_INSTANCES {
        let inst = instance(seed);
        for k in [1, 3, usize::MAX] {
            let q = ReplacementQuery::new(inst.team.clone(), inst.leaver).with_top_k(k);
            let ids = |set: teamrep_core::replacement::RecommendationSet| {
                set.recommendations.iter().map(|r| r.candidate).collect::<Vec<_>>()
            };
            let basic = ids(recommend_basic(&inst.net, &q).unwrap());
            let exact = ids(recommend_fast_exact(&inst.net, &q).unwrap());
            if basic != exact {
                mismatches.push((seed, k));
            }
        }
    }
    verdict(
        2,
        "basic and fast_exact ranked lists",
        mismatches.is_empty(),
        format!(
            "{} of {} (instance, k) lists differ, k in {{1, 3, all}}; first: {:?}",
            mismatches.len(),
            EXACT_INSTANCES * 3,
            mismatches.first()
        ),
    );
}

#[test]
fn c03_pruning_safety() {
    let _g = serial();
    let (mut violating_pairs, mut total_pairs, mut violating_instances, mut oracle_mismatch) = (0usize, 0usize, 0, 0);
    let mut worst = 0.0f64;
    for seed in 0..PRUNING_INSTANCES {
        let inst = instance(seed);
        let (g1, params) = setup(&inst);
        let mut union = BTreeSet::new();
        for &i in g1.retained() {
            union.extend(inst.net.neighbors(i).map(|(j, _)| j));
        }
        for i in &inst.team {
            union.remove(i);
        }
        let survivors: BTreeSet<usize> = prune_candidates(&inst.net, &inst.team, inst.leaver)
            .into_iter()
            .collect();
        if survivors != union {
            oracle_mismatch += 1;
        }
        let scores: Vec<(usize, f64)> = outside(&inst)
            .into_iter()
            .map(|q| (q, direct(&inst.net, &g1, q, &params)))
            .collect();
        let mut bad = false;
        for &(_, si) in scores.iter().filter(|(q, _)| union.contains(q)) {
            for &(_, sj) in scores.iter().filter(|(q, _)| !union.contains(q)) {
                total_pairs += 1;
                if si < sj * (1.0 - ORDER_SLACK) {
                    violating_pairs += 1;
                    worst = worst.max((sj - si) / sj);
                    bad = true;
                }
            }
        }
        violating_instances += bad as usize;
    }
    verdict(
        3,
        "connected candidates outscore unconnected ones; survivors equal neighborhood union",
        violating_pairs == 0 && oracle_mismatch == 0,
        format!(
            "{violating_pairs} of {total_pairs} (connected, unconnected) pairs out of order in {violating_instances} of \
             {PRUNING_INSTANCES} instances (worst shortfall {:.1}%); survivor set mismatches: {oracle_mismatch}",
            100.0 * worst
        ),
    );
}

/// A team whose retained block has exactly rank `k`, built from a uniform
/// clique (rank = size) and a bipartite block with rank-one weights (rank 2).
fn rank_k_instance(seed: u64) -> (LabeledNetwork, Vec<usize>, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0004);
    let kept = rng.gen_range(3..=7);
    let leaver = kept;
    let extra = rng.gen_range(4..=10);
    let n = kept + 1 + extra;
    let mut edges = Vec::new();
    let clique = rng.gen_range(0..=kept).min(kept);
    let clique = if clique == 1 { 2 } else { clique };
    let w = rng.gen_range(1..=3) as f64;
    for u in 0..clique {
        for v in u + 1..clique {
            edges.push((u, v, w));
        }
    }
    let mut rank = clique;
    let room = kept - clique;
    if room >= 2 && rng.gen_bool(0.7) {
        let a = rng.gen_range(1..room);
        let b = rng.gen_range(1..=room - a);
        let left: Vec<f64> = (0..a).map(|_| rng.gen_range(1..=3) as f64).collect();
        let right: Vec<f64> = (0..b).map(|_| rng.gen_range(1..=3) as f64).collect();
        for (i, x) in left.iter().enumerate() {
            for (j, y) in right.iter().enumerate() {
                edges.push((clique + i, clique + a + j, x * y));
            }
        }
        rank += 2;
    }
    for (q, tries) in [(leaver, 3)].into_iter().chain((kept + 1..n).map(|q| (q, 2))) {
        for _ in 0..tries {
            let r = rng.gen_range(0..kept);
            edges.push((r.min(q), r.max(q), rng.gen_range(1..=3) as f64));
        }
    }
    let l = rng.gen_range(1..=3);
    let skills: Vec<f64> = (0..n * l).map(|_| rng.gen_range(0..=1) as f64).collect();
    let net = LabeledNetwork::from_parts(
        (0..n).map(|i| format!("v{i}")).collect(),
        edges,
        skills,
        (0..l).map(|k| format!("s{k}")).collect(),
    )
    .unwrap();
    (net, (0..=kept).collect(), leaver, rank.max(1))
}

#[test]
fn c04_low_rank_evaluator_is_exact_at_full_rank() {
    let _g = serial();
    let mut worst_full = 0.0f64;
    for seed in 0..EXACT_INSTANCES {
        let inst = instance(seed);
        let (g1, params) = setup(&inst);
        let factors = build_lowrank_factors(&g1, g1.t()).unwrap();
        for q in outside(&inst) {
            let edges = slot_edges(&inst.net, &g1, q);
            let approx = kernel_fast_approx(&g1, &factors, &edges, inst.net.skill_row(q), &params)
                .unwrap()
                .value;
            worst_full = worst_full.max(rel(approx, direct(&inst.net, &g1, q, &params)));
        }
    }
    let mut worst_k = 0.0f64;
    let mut ranks = BTreeSet::new();
    for seed in 0..RANK_K_INSTANCES {
        let (net, team, leaver, k) = rank_k_instance(seed);
        let g1 = team_subgraph(&net, &team, leaver).unwrap();
        let params = KernelParams::with_decay(auto_decay(team_guard_bound(&net, &g1).unwrap()));
        let factors = build_lowrank_factors(&g1, k).unwrap();
        assert!(
            factors.approximation_error() < 1e-9,
            "seed {seed}: retained block is not rank {k}"
        );
        ranks.insert(k);
        for q in (0..net.n()).filter(|q| !team.contains(q)) {
            let edges = slot_edges(&net, &g1, q);
            let approx = kernel_fast_approx(&g1, &factors, &edges, net.skill_row(q), &params)
                .unwrap()
                .value;
            worst_k = worst_k.max(rel(approx, direct(&net, &g1, q, &params)));
        }
    }
    verdict(
        4,
        "fast_approx exact at r = t and at r = rank",
        worst_full < APPROX_REL_TOL && worst_k < APPROX_REL_TOL,
        format!(
            "max rel diff {worst_full:.2e} at r = t over {EXACT_INSTANCES} instances, {worst_k:.2e} at r = k over \
             {RANK_K_INSTANCES} rank-k teams (k in {ranks:?}); tol {APPROX_REL_TOL:.0e}"
        ),
    );
}

#[test]
fn c05_series_agrees_and_flags_divergence() {
    let _g = serial();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..EXACT_INSTANCES {
        let inst = instance(seed);
        let (g1, params) = setup(&inst);
        for q in outside(&inst).into_iter().take(5) {
            let g2 = replace_member(&inst.net, &g1, q).unwrap();
            let d = kernel_direct(&g1, &g2, &params).unwrap().value;
            let s = kernel_series(&g1, &g2, &params).unwrap();
            let err = (s.value - d).abs() / (params.series_tol * d.abs().max(f64::MIN_POSITIVE));
            worst = worst.max(err);
            if !s.converged || (s.value - d).abs() > SERIES_TOL_FACTOR * params.series_tol * d.abs() {
                failures += 1;
            }
        }
    }
    // Two-node unit edge, one shared skill: guard bound 1, so c = 1.5 violates it.
    let net = LabeledNetwork::from_parts(
        vec!["u".into(), "v".into()],
        [(0, 1, 1.0)],
        vec![1.0, 1.0],
        vec!["s".into()],
    )
    .unwrap();
    let g = teamrep_core::team::induced_subgraph(&net, vec![0, 1]).unwrap();
    let bound = pair_guard_bound(&g, &g).unwrap();
    let violation = KernelParams::with_decay(1.5);
    let series = kernel_series(&g, &g, &violation).unwrap();
    let direct_refuses = matches!(kernel_direct(&g, &g, &violation), Err(Error::NonConvergence { .. }));
    let ok = failures == 0 && !series.converged && direct_refuses;
    verdict(
        5,
        "series vs direct and divergence flag",
        ok,
        format!(
            "{failures} disagreements, worst |series - direct| = {worst:.2} x tol·|direct| (limit {SERIES_TOL_FACTOR}); \
             c·bound = {:.1}: series converged {}, direct refuses {direct_refuses}",
            1.5 * bound,
            series.converged
        ),
    );
}

#[test]
fn c06_monotone_in_candidate_edges() {
    let _g = serial();
    let (mut checks, mut violations) = (0usize, 0usize);
    for seed in 0..MONOTONE_INSTANCES {
        let inst = instance(seed);
        let (g1, _) = setup(&inst);
        let t = g1.t();
        let mut candidates = outside(&inst);
        candidates.truncate(6);
        for q in candidates {
            let base_edges = slot_edges(&inst.net, &g1, q);
            let skills = inst.net.skill_row(q);
            for slot in 0..t - 1 {
                // One decay for the whole grid, valid for the largest bump.
                let mut top = base_edges.clone();
                top[slot] += MONOTONE_BUMPS[2];
                let g_top = g1.with_slot(q, &top, skills).unwrap();
                let params = KernelParams::with_decay(auto_decay(pair_guard_bound(&g1, &g_top).unwrap()));
                let g_base = g1.with_slot(q, &base_edges, skills).unwrap();
                let base = kernel_direct(&g1, &g_base, &params).unwrap().value;
                for bump in MONOTONE_BUMPS {
                    let mut e = base_edges.clone();
                    e[slot] += bump;
                    let bumped = kernel_direct(&g1, &g1.with_slot(q, &e, skills).unwrap(), &params)
                        .unwrap()
                        .value;
                    checks += 1;
                    violations += (bumped < base) as usize;
                }
            }
        }
    }
    verdict(
        6,
        "direct kernel monotone in candidate edge weights",
        violations == 0 && checks > 0,
        format!("{violations} violations in {checks} perturbations (+0.5, +1, +2) over {MONOTONE_INSTANCES} instances"),
    );
}

fn perf_network() -> &'static LabeledNetwork {
    static NET: OnceLock<LabeledNetwork> = OnceLock::new();
    NET.get_or_init(|| generate_network(&SyntheticSpec::erdos_renyi(PERF_N, PERF_M, PERF_SEED)).unwrap())
}

fn timing_config() -> BenchConfig {
    BenchConfig {
        runs: TIMED_RUNS,
        warmup: 1,
        parallel: false,
        seed: PERF_SEED,
    }
}

#[test]
fn c07_fast_evaluators_beat_baselines() {
    let _g = serial();
    let start = Instant::now();
    let net = perf_network();
    let report = bench_team_size_sweep(net, &[PERF_T], Some(PERF_RANK), &timing_config()).unwrap();
    let exact = report.metrics[&format!("t{PERF_T}.speedup_fast_exact")];
    let approx = report.metrics[&format!("t{PERF_T}.speedup_fast_approx")];
    let ms = |name: &str| report.rows.iter().find(|r| r.algorithm == name).unwrap().wall_ms;
    let elapsed = start.elapsed();
    verdict(
        7,
        "speedups at n = 5000, m = 50000, t = 20",
        exact >= PERF_MIN_SPEEDUP && approx >= PERF_MIN_SPEEDUP && elapsed < PERF_TIME_LIMIT,
        format!(
            "fast_exact {exact:.1}x over basic ({:.1} vs {:.1} ms), fast_approx r = {PERF_RANK} {approx:.1}x over \
             refactoring ({:.1} vs {:.1} ms), {} candidates, {:.0}s total; need >= {PERF_MIN_SPEEDUP}x",
            ms("fast_exact"),
            ms("basic"),
            ms("fast_approx"),
            ms("approx_refactored"),
            report.rows[0].candidates_evaluated,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c08_runtime_sublinear_in_edges() {
    let _g = serial();
    let net = perf_network();
    let (team, leaver) = pick_team(net, SCALING_T, PERF_SEED).unwrap();
    let report = bench_scalability(
        net,
        &team,
        leaver,
        &SCALING_FRACTIONS,
        Some(PERF_RANK),
        &timing_config(),
    )
    .unwrap();
    let exact = report.metrics["slope_fast_exact"];
    let approx = report.metrics["slope_fast_approx"];
    verdict(
        8,
        "log-log runtime slope vs m at t = 15",
        exact < SCALING_MAX_SLOPE && approx < SCALING_MAX_SLOPE,
        format!("fast_exact {exact:.3}, fast_approx {approx:.3} (limit {SCALING_MAX_SLOPE}) over edge fractions {SCALING_FRACTIONS:?}"),
    );
}

#[test]
fn c09_candidate_counts_match_neighborhood_union() {
    let _g = serial();
    let mut mismatches = 0;
    let mut ratios = Vec::new();
    let mut cases: Vec<(LabeledNetwork, Vec<usize>, usize)> = (0..EXACT_INSTANCES)
        .map(instance)
        .map(|i| (i.net, i.team, i.leaver))
        .collect();
    for seed in 0..5 {
        let net = generate_network(&SyntheticSpec::erdos_renyi(1000, 5000, seed)).unwrap();
        for t in [5, 10, 20] {
            if let Some((team, leaver)) = pick_team(&net, t, seed) {
                cases.push((net.clone(), team, leaver));
            }
        }
    }
    for (net, team, leaver) in &cases {
        let mut union = BTreeSet::new();
        for &i in team.iter().filter(|&&i| i != *leaver) {
            union.extend(net.neighbors(i).map(|(j, _)| j));
        }
        for i in team {
            union.remove(i);
        }
        for algorithm in [Algorithm::Basic, Algorithm::FastExact, Algorithm::FastApprox] {
            let q = ReplacementQuery::new(team.clone(), *leaver).with_algorithm(algorithm);
            if recommend(net, &q).unwrap().candidates_evaluated != union.len() {
                mismatches += 1;
            }
        }
        if !union.is_empty() {
            ratios.push((net.n() - team.len()) as f64 / union.len() as f64);
        }
    }
    ratios.sort_by(f64::total_cmp);
    verdict(
        9,
        "evaluated candidates equal the retained neighborhood union",
        mismatches == 0,
        format!(
            "{mismatches} mismatches over {} instances x 3 algorithms; (n - t)/survivors median {:.2}, max {:.2}",
            cases.len(),
            ratios[ratios.len() / 2],
            ratios[ratios.len() - 1]
        ),
    );
}

#[test]
fn c10_cli_and_service_bodies_identical() {
    let _g = serial();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let queries: &[(&str, &[&str])] = &[
        ("toy", &["--team-id", "core", "--leaving", "p"]),
        ("toy", &["--team", "a,b,p", "--leaving", "p", "--algo", "basic"]),
        (
            "toy",
            &["--team", "p,a,b", "--leaving", "p", "--algo", "approx", "--top-k", "1"],
        ),
        ("toy", &["--team", "a,x", "--leaving", "x", "--decay", "0.01"]),
        ("small", &["--team-id", "team0", "--leaving", "n4"]),
        (
            "small",
            &[
                "--team-id",
                "team1",
                "--leaving",
                "n39",
                "--algo",
                "approx",
                "--rank-r",
                "2",
            ],
        ),
        (
            "small",
            &[
                "--team-id",
                "team2",
                "--leaving",
                "n8",
                "--algo",
                "basic",
                "--top-k",
                "3",
            ],
        ),
        (
            "small",
            &["--team", "n8,n4,n16,n32,n7", "--leaving", "n32", "--decay", "0.005"],
        ),
    ];
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for fixture in ["toy", "small"] {
        let dir = root.join(fixture);
        let net = LabeledNetwork::load(dir.join("edges.tsv"), dir.join("skills.tsv")).unwrap();
        let catalog = TeamCatalog::load(dir.join("teams.tsv"), &net).unwrap();
        let state = Arc::new(AppState { net, catalog });
        let (client, stop) = runtime.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            let addr = listener.local_addr().unwrap();
            let (tx, rx) = tokio::sync::oneshot::channel::<()>();
            tokio::spawn(async move {
                serve(listener, state, &ServiceConfig::default(), async {
                    let _ = rx.await;
                })
                .await
                .unwrap();
            });
            (Client::new(format!("http://{addr}")), tx)
        });
        for (_, args) in queries.iter().filter(|(f, _)| *f == fixture) {
            let mut cli = Command::new(env!("CARGO_BIN_EXE_teamrep"));
            cli.args(["--format", "json", "recommend"])
                .arg("--network")
                .arg(dir.join("edges.tsv"))
                .arg("--skills")
                .arg(dir.join("skills.tsv"))
                .arg("--teams")
                .arg(dir.join("teams.tsv"))
                .args(*args);
            let out = cli.output().unwrap();
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let req = request_from_flags(args);
            let body = runtime.block_on(client.recommend_raw(&req)).unwrap();
            compared += 1;
            if body.as_bytes() != out.stdout.as_slice() {
                differing.push(format!("{fixture} {args:?}"));
            }
        }
        let _ = stop.send(());
    }
    verdict(
        10,
        "CLI and POST /v1/recommend bodies byte-identical",
        differing.is_empty() && compared == queries.len(),
        format!("{} of {compared} fixture queries differ {differing:?}", differing.len()),
    );
}

/// The JSON request equivalent to a set of CLI flags.
fn request_from_flags(args: &[&str]) -> RecommendRequest {
    let mut v = serde_json::json!({});
    for pair in args.chunks(2) {
        let value = pair[1];
        match pair[0] {
            "--team" => v["team"] = serde_json::json!(value.split(',').collect::<Vec<_>>()),
            "--team-id" => v["team"] = serde_json::json!(value),
            "--leaving" => v["leaving"] = serde_json::json!(value),
            "--algo" => v["algo"] = serde_json::json!(value),
            "--top-k" => v["top_k"] = serde_json::json!(value.parse::<usize>().unwrap()),
            "--rank-r" => v["rank_r"] = serde_json::json!(value.parse::<usize>().unwrap()),
            "--decay" => v["decay"] = serde_json::json!(value.parse::<f64>().unwrap()),
            other => panic!("unmapped flag {other}"),
        }
    }
    serde_json::from_value(v).unwrap()
}

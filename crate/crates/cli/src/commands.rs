use std::fmt::Write as _;
use std::fs;
use std::sync::Arc;

use teamrep_client::{Client, ClientError};
use teamrep_core::bench::{
    bench_pruning, bench_scalability, bench_team_size_sweep, generate_network, pick_team, BenchConfig, BenchReport,
    SyntheticSpec,
};
use teamrep_core::error::Error;
use teamrep_core::kernel::{auto_decay, kernel_direct, kernel_series, pair_guard_bound, KernelParams};
use teamrep_core::network::{LabeledNetwork, TeamCatalog};
use teamrep_core::replacement::Decay;
use teamrep_core::team::induced_subgraph;
use teamrep_core::wire::{
    execute_recommend, execute_whatif, network_stats, render_json, ApiError, DecayParam, RecommendRequest,
    RecommendResponse, TeamRef, WhatIfRequest, WhatIfResponse,
};
use teamrep_service::{serve, AppState, ServiceConfig};

use crate::args::{
    BenchArgs, Format, GenerateArgs, KernelArgs, KernelEval, NetworkArgs, QueryArgs, RecommendArgs, ReportArgs,
    Scenario, ServeArgs, SourceArgs, SynthArgs, WhatIfArgs,
};

/// A failed command: message for stderr plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Self {
            code: e.exit_code(),
            message: e.message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        ApiError::from(e).into()
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Self {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

pub type Outcome = Result<String, Failure>;

fn load(args: &NetworkArgs) -> Result<(LabeledNetwork, TeamCatalog), Failure> {
    let net = LabeledNetwork::load(&args.network, &args.skills)?;
    let catalog = match &args.teams {
        Some(path) => TeamCatalog::load(path, &net)?,
        None => TeamCatalog::new(),
    };
    tracing::info!(
        n = net.n(),
        m = net.m(),
        l = net.l(),
        teams = catalog.len(),
        "network loaded"
    );
    Ok((net, catalog))
}

fn local_source(source: &SourceArgs) -> Option<NetworkArgs> {
    Some(NetworkArgs {
        network: source.network.clone()?,
        skills: source.skills.clone()?,
        teams: source.teams.clone(),
    })
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().map_err(|e| Failure::input(format!("cannot start async runtime: {e}")))
}

fn team_ref(q: &QueryArgs) -> TeamRef {
    match &q.team_id {
        Some(id) => TeamRef::Catalog(id.clone()),
        None => TeamRef::Members(q.team.clone()),
    }
}

fn recommend_request(q: &QueryArgs) -> RecommendRequest {
    RecommendRequest {
        team: team_ref(q),
        leaving: q.leaving.clone(),
        algo: q.algo.as_str().to_owned(),
        top_k: q.top_k as usize,
        rank_r: q.rank_r,
        decay: Some(DecayParam::Text(q.decay.text.clone())),
    }
}

fn report_auto_decay(q: &QueryArgs, decay: f64) {
    if q.decay.value == Decay::Auto {
        eprintln!("auto decay: c = {decay}");
    }
}

pub fn ingest(args: &NetworkArgs, format: Format) -> Outcome {
    let (net, catalog) = load(args)?;
    let stats = network_stats(&net, &catalog);
    Ok(match format {
        Format::Json => render_json(&stats),
        Format::Text => format!(
            "nodes {}\nedges {}\nskills {}\nteams {}\n",
            stats.n, stats.m, stats.l, stats.team_count
        ),
    })
}

pub fn recommend(args: &RecommendArgs, format: Format) -> Outcome {
    let req = recommend_request(&args.query);
    let (resp, body) = match local_source(&args.source) {
        Some(files) => {
            let (net, catalog) = load(&files)?;
            let resp = execute_recommend(&net, &catalog, &req)?;
            let body = render_json(&resp);
            (resp, body)
        }
        None => {
            let client = Client::new(args.source.server.clone().unwrap_or_default());
            let body = runtime()?.block_on(client.recommend_raw(&req))?;
            let resp: RecommendResponse = serde_json::from_str(&body)
                .map_err(|e| Failure::input(format!("unexpected response from {}: {e}", client.base())))?;
            (resp, body)
        }
    };
    report_auto_decay(&args.query, resp.decay);
    Ok(match format {
        Format::Json => body,
        Format::Text => recommend_text(&resp),
    })
}

fn recommend_text(resp: &RecommendResponse) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "team: {} (leaving {})", resp.team.join(", "), resp.leaving);
    let _ = write!(out, "algorithm {}, decay c = {}", resp.algorithm, resp.decay);
    if let Some(r) = resp.rank_r {
        let _ = write!(out, ", rank r = {r}");
    }
    let _ = writeln!(out, ", {} candidates evaluated", resp.candidates_evaluated);
    let width = resp
        .recommendations
        .iter()
        .map(|r| r.candidate.len())
        .max()
        .unwrap_or(0)
        .max(9);
    let _ = writeln!(out, "{:>4}  {:<width$}  score", "rank", "candidate");
    for r in &resp.recommendations {
        let _ = writeln!(out, "{:>4}  {:<width$}  {:.9e}", r.rank, r.candidate, r.score);
    }
    out
}

pub fn whatif(args: &WhatIfArgs, format: Format) -> Outcome {
    let base = recommend_request(&args.query);
    let req = WhatIfRequest {
        team: base.team,
        leaving: base.leaving,
        candidate: args.candidate.clone(),
        algo: base.algo,
        top_k: base.top_k,
        rank_r: base.rank_r,
        decay: base.decay,
    };
    let (resp, body) = match local_source(&args.source) {
        Some(files) => {
            let (net, catalog) = load(&files)?;
            let resp = execute_whatif(&net, &catalog, &req)?;
            let body = render_json(&resp);
            (resp, body)
        }
        None => {
            let client = Client::new(args.source.server.clone().unwrap_or_default());
            let body = runtime()?.block_on(client.whatif_raw(&req))?;
            let resp: WhatIfResponse = serde_json::from_str(&body)
                .map_err(|e| Failure::input(format!("unexpected response from {}: {e}", client.base())))?;
            (resp, body)
        }
    };
    report_auto_decay(&args.query, resp.decay);
    Ok(match format {
        Format::Json => body,
        Format::Text => whatif_text(&resp),
    })
}

fn whatif_text(resp: &WhatIfResponse) -> String {
    let mut out = format!(
        "replace {} with {}: kernel score {:.9e} ({}, c = {})\n",
        resp.leaving, resp.candidate, resp.kernel_score, resp.algorithm, resp.decay
    );
    for (label, graph) in [("before", &resp.original_subgraph), ("after", &resp.modified_subgraph)] {
        let _ = writeln!(out, "{label}:");
        for e in &graph.edges {
            let _ = writeln!(out, "  {} -- {}  {}", e.source, e.target, e.weight);
        }
    }
    out
}

pub fn kernel(args: &KernelArgs, format: Format) -> Outcome {
    let (net, _) = load(&args.network)?;
    let resolve = |ids: &[String]| ids.iter().map(|id| net.resolve(id)).collect::<Result<Vec<_>, _>>();
    let (a, b) = (resolve(&args.team_a)?, resolve(&args.team_b)?);
    if a.len() != b.len() {
        return Err(Failure::input(format!(
            "teams must have equal size, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let g1 = induced_subgraph(&net, a)?;
    let g2 = induced_subgraph(&net, b)?;
    let bound = pair_guard_bound(&g1, &g2)?;
    let decay = match args.decay.value {
        Decay::Auto => {
            let c = auto_decay(bound);
            eprintln!("auto decay: c = {c}");
            c
        }
        Decay::Fixed(c) => c,
    };
    let params = KernelParams::with_decay(decay);
    let value = match args.method {
        KernelEval::Direct => kernel_direct(&g1, &g2, &params)?,
        KernelEval::Series => kernel_series(&g1, &g2, &params)?,
    };
    let body = match format {
        Format::Json => render_json(&serde_json::json!({
            "method": value.method,
            "decay": decay,
            "guard_bound": bound,
            "value": value.value,
            "converged": value.converged,
        })),
        Format::Text => format!(
            "{}{}\n",
            value.value,
            if value.converged {
                ""
            } else {
                "  (series did not converge)"
            }
        ),
    };
    if !value.converged {
        print!("{body}");
        return Err(Failure {
            code: 3,
            message: "series did not converge within the iteration limit".into(),
        });
    }
    Ok(body)
}

fn synthetic(s: &SynthArgs) -> Result<LabeledNetwork, Failure> {
    let spec = SyntheticSpec {
        n: s.n,
        target_m: s.m,
        model: s.model.into(),
        l: s.l,
        skills_per_node: s.skills_per_node,
        seed: s.seed,
    };
    Ok(generate_network(&spec)?)
}

pub fn bench(args: &BenchArgs, format: Format) -> Outcome {
    if args.warmup > 100 {
        return Err(Failure::input("at most 100 warm-up runs"));
    }
    let net = match (&args.network, &args.skills) {
        (Some(e), Some(s)) => LabeledNetwork::load(e, s)?,
        _ => synthetic(&args.synth)?,
    };
    let config = BenchConfig {
        runs: args.runs as usize,
        warmup: args.warmup,
        parallel: args.parallel,
        seed: args.synth.seed,
    };
    let pick = |t: usize, seed: u64| {
        pick_team(&net, t, seed).ok_or_else(|| Failure::input(format!("no connected team of size {t} in the network")))
    };
    let report = match args.scenario {
        Scenario::Pruning => {
            let teams = (0..args.teams_count as u64)
                .map(|i| pick(args.team_size, config.seed.wrapping_add(i)))
                .collect::<Result<Vec<_>, _>>()?;
            bench_pruning(&net, &teams, &config)?
        }
        Scenario::TeamSizeSweep => bench_team_size_sweep(&net, &args.sizes, args.rank_r, &config)?,
        Scenario::Scalability => {
            let (team, leaver) = pick(args.team_size, config.seed)?;
            bench_scalability(&net, &team, leaver, &args.fractions, args.rank_r, &config)?
        }
    };
    if let Some(path) = &args.out {
        report.append_to(path)?;
    }
    Ok(match format {
        Format::Json => report.to_jsonl(),
        Format::Text => report.render_text(),
    })
}

pub fn report(args: &ReportArgs, format: Format) -> Outcome {
    let mut out = String::new();
    for path in &args.files {
        let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let reports =
            BenchReport::parse_jsonl(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        for r in reports {
            match format {
                Format::Json => out.push_str(&r.to_jsonl()),
                Format::Text => {
                    out.push_str(&r.render_text());
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

pub fn generate(args: &GenerateArgs, format: Format) -> Outcome {
    let net = synthetic(&args.synth)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::input(format!("{}: {e}", args.out_dir.display())))?;
    net.write(args.out_dir.join("edges.tsv"), args.out_dir.join("skills.tsv"))?;
    let mut teams = String::new();
    for i in 0..args.teams_count as u64 {
        // The leaver comes first in a picked team.
        if let Some((members, _)) = pick_team(&net, args.team_size, args.synth.seed.wrapping_add(i)) {
            let ids: Vec<&str> = members.iter().map(|&m| net.node_id(m)).collect();
            let _ = writeln!(teams, "team{i}\t{}", ids.join(","));
        }
    }
    let teams_path = args.out_dir.join("teams.tsv");
    fs::write(&teams_path, &teams).map_err(|e| Failure::input(format!("{}: {e}", teams_path.display())))?;
    let catalog = TeamCatalog::load(&teams_path, &net)?;
    let stats = network_stats(&net, &catalog);
    Ok(match format {
        Format::Json => render_json(&stats),
        Format::Text => format!(
            "wrote {} nodes, {} edges, {} teams to {}\n",
            stats.n,
            stats.m,
            stats.team_count,
            args.out_dir.display()
        ),
    })
}

pub fn serve_command(args: &ServeArgs) -> Outcome {
    let (net, catalog) = load(&args.network)?;
    let state = Arc::new(AppState { net, catalog });
    let config = ServiceConfig {
        cors_origins: args.cors_origin.clone(),
        static_dir: args.static_dir.clone(),
    };
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.serve_port))
            .await
            .map_err(|e| Failure::input(format!("cannot bind {}:{}: {e}", args.bind, args.serve_port)))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Failure::input(format!("cannot read bound address: {e}")))?;
        eprintln!("listening on http://{addr}");
        serve(listener, state, &config, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::input(format!("server error: {e}")))
    })?;
    Ok(String::new())
}

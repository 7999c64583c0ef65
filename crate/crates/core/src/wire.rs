//! JSON request and response bodies shared by the HTTP service and the CLI.
//!
//! Both front ends call [`execute_recommend`] / [`execute_whatif`] and
//! serialize with [`render_json`], so the same query yields the same bytes
//! whichever way it arrives. Payloads carry external node ids only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::kernel::{build_lowrank_factors, build_precompute_cache, kernel_direct, kernel_fast_exact, ApproxCache};
use crate::network::{LabeledNetwork, TeamCatalog};
use crate::replacement::{
    rank_key, recommend, resolve_decay, Algorithm, Decay, RecommendationSet, ReplacementQuery, DEFAULT_RANK_CAP,
};
use crate::team::{replace_member, team_subgraph, TeamGraph};

pub const DEFAULT_ALGORITHM: &str = "fast_exact";
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub team_count: usize,
}

pub fn network_stats(net: &LabeledNetwork, catalog: &TeamCatalog) -> NetworkStats {
    NetworkStats {
        n: net.n(),
        m: net.m(),
        l: net.l(),
        team_count: catalog.len(),
    }
}

/// A team given inline as member ids or by its catalog id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TeamRef {
    Members(Vec<String>),
    Catalog(String),
}

/// `"auto"` or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecayParam {
    Value(f64),
    Text(String),
}

impl DecayParam {
    fn resolve(&self) -> Result<Decay, ApiError> {
        match self {
            DecayParam::Value(c) => DecayParam::Text(c.to_string()).resolve(),
            DecayParam::Text(s) => s.parse().map_err(ApiError::from),
        }
    }
}

fn default_algo() -> String {
    DEFAULT_ALGORITHM.into()
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    pub team: TeamRef,
    pub leaving: String,
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub rank: usize,
    pub candidate: String,
    /// Rounded to ten significant digits.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub algorithm: Algorithm,
    pub decay: f64,
    pub rank_r: Option<usize>,
    /// Team member ids, leaver last.
    pub team: Vec<String>,
    pub leaving: String,
    pub candidates_evaluated: usize,
    pub recommendations: Vec<RankedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub team: TeamRef,
    pub leaving: String,
    pub candidate: String,
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayParam>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Member,
    Leaver,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphNode {
    pub id: String,
    pub role: NodeRole,
    /// Nonzero skill weights by skill name.
    pub skills: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphPayload {
    pub nodes: Vec<SubgraphNode>,
    pub edges: Vec<SubgraphEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub algorithm: Algorithm,
    pub decay: f64,
    pub rank_r: Option<usize>,
    pub leaving: String,
    pub candidate: String,
    pub original_subgraph: SubgraphPayload,
    pub modified_subgraph: SubgraphPayload,
    /// Same rounding and evaluator as the recommendation scores.
    pub kernel_score: f64,
    pub recommendations: Vec<RankedCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

/// A failed query with its HTTP status and CLI exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "bad_request", message)
    }

    /// 0 ok, 1 input error, 2 empty result, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            409 => 2,
            503 => 3,
            _ => 1,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.code.into(),
            message: self.message.clone(),
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Reference { .. } => ApiError::new(400, "unknown_id", message),
            Error::Argument(_) | Error::Validation(_) | Error::Parse { .. } => ApiError::bad_request(message),
            Error::NonConvergence { .. } | Error::Numeric(_) => ApiError::new(503, "non_convergence", message),
            Error::CacheMismatch(_) | Error::Io { .. } => ApiError::new(500, "internal", message),
        }
    }
}

/// Pretty JSON with a trailing newline; the one serializer both front ends use.
pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("wire types serialize");
    s.push('\n');
    s
}

struct Resolved {
    members: Vec<usize>,
    leaver: usize,
    query: ReplacementQuery,
}

/// The query fields shared by both request bodies.
struct QueryParts<'a> {
    team: &'a TeamRef,
    leaving: &'a str,
    algo: &'a str,
    top_k: usize,
    rank_r: Option<usize>,
    decay: Option<&'a DecayParam>,
}

impl<'a> From<&'a RecommendRequest> for QueryParts<'a> {
    fn from(r: &'a RecommendRequest) -> Self {
        Self {
            team: &r.team,
            leaving: &r.leaving,
            algo: &r.algo,
            top_k: r.top_k,
            rank_r: r.rank_r,
            decay: r.decay.as_ref(),
        }
    }
}

impl<'a> From<&'a WhatIfRequest> for QueryParts<'a> {
    fn from(r: &'a WhatIfRequest) -> Self {
        Self {
            team: &r.team,
            leaving: &r.leaving,
            algo: &r.algo,
            top_k: r.top_k,
            rank_r: r.rank_r,
            decay: r.decay.as_ref(),
        }
    }
}

fn resolve_query(net: &LabeledNetwork, catalog: &TeamCatalog, parts: QueryParts<'_>) -> Result<Resolved, ApiError> {
    let QueryParts {
        team,
        leaving,
        algo,
        top_k,
        rank_r,
        decay,
    } = parts;
    let algorithm: Algorithm = algo.parse()?;
    if top_k == 0 {
        return Err(ApiError::bad_request("top_k must be at least 1"));
    }
    let members = match team {
        TeamRef::Members(ids) => ids.iter().map(|id| net.resolve(id)).collect::<Result<Vec<_>, _>>()?,
        TeamRef::Catalog(id) => catalog
            .get(id)
            .ok_or_else(|| Error::Reference {
                kind: "team",
                id: id.clone(),
            })?
            .to_vec(),
    };
    let leaver = net.resolve(leaving)?;
    if !members.contains(&leaver) {
        return Err(ApiError::new(
            422,
            "leaver_not_in_team",
            format!("`{leaving}` is not a member of the team"),
        ));
    }
    let mut query = ReplacementQuery::new(members.clone(), leaver)
        .with_algorithm(algorithm)
        .with_top_k(top_k);
    query.rank_r = rank_r;
    if let Some(d) = decay {
        query.decay = d.resolve()?;
    }
    Ok(Resolved { members, leaver, query })
}

fn ranked(net: &LabeledNetwork, set: &RecommendationSet) -> Vec<RankedCandidate> {
    set.recommendations
        .iter()
        .map(|r| RankedCandidate {
            rank: r.rank,
            candidate: net.node_id(r.candidate).to_string(),
            score: rank_key(r.score),
        })
        .collect()
}

fn run_recommend(net: &LabeledNetwork, resolved: &Resolved) -> Result<RecommendationSet, ApiError> {
    let set = recommend(net, &resolved.query)?;
    if set.no_connected_candidates() {
        return Err(ApiError::new(
            409,
            "no_candidates",
            "no connected candidates: nobody outside the team is linked to a remaining member",
        ));
    }
    Ok(set)
}

pub fn execute_recommend(
    net: &LabeledNetwork,
    catalog: &TeamCatalog,
    req: &RecommendRequest,
) -> Result<RecommendResponse, ApiError> {
    let resolved = resolve_query(net, catalog, req.into())?;
    let set = run_recommend(net, &resolved)?;
    Ok(RecommendResponse {
        algorithm: set.algorithm,
        decay: set.decay,
        rank_r: set.rank_r,
        team: set.team.iter().map(|&i| net.node_id(i).to_string()).collect(),
        leaving: req.leaving.clone(),
        candidates_evaluated: set.candidates_evaluated,
        recommendations: ranked(net, &set),
    })
}

fn payload(net: &LabeledNetwork, team: &TeamGraph, slot_role: NodeRole) -> SubgraphPayload {
    let t = team.t();
    let members = team.members();
    let nodes = members
        .iter()
        .enumerate()
        .map(|(i, &node)| SubgraphNode {
            id: net.node_id(node).to_string(),
            role: if i + 1 == t {
                slot_role.clone()
            } else {
                NodeRole::Member
            },
            skills: net
                .skill_names()
                .iter()
                .zip(team.skills().row(i).iter())
                .filter(|(_, &w)| w != 0.0)
                .map(|(name, &w)| (name.clone(), w))
                .collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..t {
        for j in i + 1..t {
            let w = team.adjacency()[(i, j)];
            if w != 0.0 {
                edges.push(SubgraphEdge {
                    source: net.node_id(members[i]).to_string(),
                    target: net.node_id(members[j]).to_string(),
                    weight: w,
                });
            }
        }
    }
    SubgraphPayload { nodes, edges }
}

pub fn execute_whatif(
    net: &LabeledNetwork,
    catalog: &TeamCatalog,
    req: &WhatIfRequest,
) -> Result<WhatIfResponse, ApiError> {
    let resolved = resolve_query(net, catalog, req.into())?;
    let candidate = net.resolve(&req.candidate)?;
    if resolved.members.contains(&candidate) {
        return Err(ApiError::new(
            422,
            "candidate_in_team",
            format!("`{}` is already on the team", req.candidate),
        ));
    }
    let set = run_recommend(net, &resolved)?;

    let original = team_subgraph(net, &resolved.members, resolved.leaver)?;
    let modified = replace_member(net, &original, candidate)?;
    let mut params = resolved.query.params.clone();
    params.decay = resolve_decay(net, &original, resolved.query.decay)?;
    let edges: Vec<f64> = original.retained().iter().map(|&r| net.weight(candidate, r)).collect();
    let skills = net.skill_row(candidate);
    let score = match set.algorithm {
        Algorithm::Basic => kernel_direct(&original, &modified, &params)?.value,
        Algorithm::FastExact => {
            let cache = build_precompute_cache(&original, &params)?;
            kernel_fast_exact(&original, &cache, &edges, skills, &params)?.value
        }
        Algorithm::FastApprox => {
            let r = set.rank_r.unwrap_or_else(|| (original.t() - 1).min(DEFAULT_RANK_CAP));
            let factors = build_lowrank_factors(&original, r)?;
            ApproxCache::build(&original, &factors, &params)?
                .score(&edges, skills)?
                .value
        }
    };

    Ok(WhatIfResponse {
        algorithm: set.algorithm,
        decay: set.decay,
        rank_r: set.rank_r,
        leaving: req.leaving.clone(),
        candidate: req.candidate.clone(),
        original_subgraph: payload(net, &original, NodeRole::Leaver),
        modified_subgraph: payload(net, &modified, NodeRole::Candidate),
        kernel_score: rank_key(score),
        recommendations: ranked(net, &set),
    })
}

//! Ranking replacement candidates for a departing team member.
//!
//! A candidate `q` is scored by the kernel between the original team graph
//! and the team with `q` in the leaver's slot. Only nodes with an edge to a
//! retained member are scored.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    auto_decay, build_lowrank_factors, build_precompute_cache, kernel_approx_unshared, kernel_direct,
    kernel_fast_exact, label_product, max_row_sum, ApproxCache, KernelParams,
};
use crate::network::LabeledNetwork;
use crate::team::{team_subgraph, TeamGraph};

/// Rank used by `fast_approx` when none is given: `min(t - 1, DEFAULT_RANK_CAP)`.
pub const DEFAULT_RANK_CAP: usize = 10;

/// Significant digits kept when ordering scores.
pub const RANK_DIGITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Basic,
    FastExact,
    FastApprox,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Basic => "basic",
            Algorithm::FastExact => "fast_exact",
            Algorithm::FastApprox => "fast_approx",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Algorithm::Basic),
            "exact" | "fast_exact" => Ok(Algorithm::FastExact),
            "approx" | "fast_approx" => Ok(Algorithm::FastApprox),
            other => Err(Error::Argument(format!(
                "unknown algorithm `{other}` (expected basic, exact or approx)"
            ))),
        }
    }
}

/// The decay factor, either given or derived from the team.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Auto,
    Fixed(f64),
}

impl FromStr for Decay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Decay::Auto);
        }
        match s.parse::<f64>() {
            Ok(c) if c.is_finite() && c >= 0.0 => Ok(Decay::Fixed(c)),
            _ => Err(Error::Argument(format!(
                "decay must be a nonnegative number or `auto`, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReplacementQuery {
    pub team_members: Vec<usize>,
    pub leaver: usize,
    pub top_k: usize,
    pub algorithm: Algorithm,
    /// Only used by `fast_approx`.
    pub rank_r: Option<usize>,
    pub decay: Decay,
    /// Start/stop weights and series settings. Its `decay` field is replaced
    /// by the resolved [`Decay`].
    pub params: KernelParams,
    /// Score candidates on the rayon pool.
    pub parallel: bool,
    /// Also score the leaver as their own replacement.
    pub include_leaver: bool,
}

impl ReplacementQuery {
    pub fn new(team_members: Vec<usize>, leaver: usize) -> Self {
        Self {
            team_members,
            leaver,
            top_k: 10,
            algorithm: Algorithm::Basic,
            rank_r: None,
            decay: Decay::Auto,
            params: KernelParams::default(),
            parallel: false,
            include_leaver: false,
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_top_k(mut self, top_k: usize) -> Self {
        self.top_k = top_k;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub candidate: usize,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
    pub method: Algorithm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationSet {
    pub algorithm: Algorithm,
    pub decay: f64,
    pub rank_r: Option<usize>,
    /// Team member indices with the leaver last.
    pub team: Vec<usize>,
    pub candidates_evaluated: usize,
    pub recommendations: Vec<Recommendation>,
}

impl RecommendationSet {
    /// True when no candidate was connected to the retained members.
    pub fn no_connected_candidates(&self) -> bool {
        self.candidates_evaluated == 0
    }
}

/// A candidate's weights to the retained members (team order) and its skills.
#[derive(Debug, Clone)]
pub struct CandidateProfile<'a> {
    pub node: usize,
    pub edges: Vec<f64>,
    pub skills: &'a [f64],
}

/// Nodes outside the team with a positive edge to some retained member, ascending.
pub fn prune_candidates(net: &LabeledNetwork, team_members: &[usize], leaver: usize) -> Vec<usize> {
    let on_team: HashSet<usize> = team_members.iter().copied().collect();
    let mut out: Vec<usize> = team_members
        .iter()
        .filter(|&&i| i != leaver)
        .flat_map(|&i| net.neighbors(i))
        .filter(|&(q, w)| w > 0.0 && !on_team.contains(&q))
        .map(|(q, _)| q)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Profiles of the connected candidates, ascending by node index, with the
/// leaver appended when `include_leaver` is set.
pub fn candidate_profiles<'a>(
    net: &'a LabeledNetwork,
    team: &TeamGraph,
    include_leaver: bool,
) -> Vec<CandidateProfile<'a>> {
    let retained = team.retained();
    let on_team: HashSet<usize> = team.members().iter().copied().collect();
    let mut edges: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (i, &member) in retained.iter().enumerate() {
        for (q, w) in net.neighbors(member) {
            if w > 0.0 && !on_team.contains(&q) {
                edges.entry(q).or_insert_with(|| vec![0.0; retained.len()])[i] = w;
            }
        }
    }
    let mut out: Vec<CandidateProfile<'a>> = edges
        .into_iter()
        .map(|(node, edges)| CandidateProfile {
            node,
            edges,
            skills: net.skill_row(node),
        })
        .collect();
    if include_leaver {
        out.push(leaver_profile(net, team));
    }
    out
}

fn leaver_profile<'a>(net: &'a LabeledNetwork, team: &TeamGraph) -> CandidateProfile<'a> {
    let t = team.t();
    CandidateProfile {
        node: team.slot_member(),
        edges: team.slot_edges().rows(0, t - 1).iter().copied().collect(),
        skills: net.skill_row(team.slot_member()),
    }
}

/// Every node outside the team, connected or not.
fn all_profiles<'a>(net: &'a LabeledNetwork, team: &TeamGraph, include_leaver: bool) -> Vec<CandidateProfile<'a>> {
    let on_team: HashSet<usize> = team.members().iter().copied().collect();
    let mut out: Vec<CandidateProfile<'a>> = (0..net.n())
        .filter(|q| !on_team.contains(q))
        .map(|q| CandidateProfile {
            node: q,
            edges: team.retained().iter().map(|&r| net.weight(q, r)).collect(),
            skills: net.skill_row(q),
        })
        .collect();
    if include_leaver {
        out.push(leaver_profile(net, team));
    }
    out
}

/// Guard bound that holds for the original team against any replacement
/// drawn from `net`, so one decay serves every candidate.
///
/// Row sums of the replaced team are bounded by the retained row sums plus
/// the heaviest edge from each retained member to a non-member, and by the
/// heaviest non-member connection to the retained set. Label products are
/// bounded by the retained pairs and by each member's skills against the
/// column maxima of the whole skill matrix.
pub fn team_guard_bound(net: &LabeledNetwork, team: &TeamGraph) -> Result<f64> {
    let t = team.t();
    let retained = team.retained();
    let on_team: HashSet<usize> = team.members().iter().copied().collect();
    let a_c = team.adjacency_without_slot();

    let mut a2_max = max_row_sum(team.adjacency());
    let mut slot_sums: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, &member) in retained.iter().enumerate() {
        let mut heaviest = 0.0_f64;
        for (q, w) in net.neighbors(member) {
            if !on_team.contains(&q) {
                heaviest = heaviest.max(w);
                *slot_sums.entry(q).or_default() += w;
            }
        }
        a2_max = a2_max.max(a_c.row(i).sum() + heaviest);
    }
    a2_max = slot_sums.values().copied().fold(a2_max, f64::max);

    let mut l_c = team.skills().clone();
    l_c.row_mut(t - 1).fill(0.0);
    let mut label_max = label_product(team.skills(), &l_c)?.iter().copied().fold(0.0, f64::max);
    let col_max = net.skill_col_max();
    for i in 0..t {
        let dot: f64 = team.skills().row(i).iter().zip(col_max).map(|(a, b)| a * b).sum();
        label_max = label_max.max(dot);
    }
    Ok(max_row_sum(team.adjacency()) * a2_max * label_max)
}

/// The decay a query will use on `team`.
pub fn resolve_decay(net: &LabeledNetwork, team: &TeamGraph, decay: Decay) -> Result<f64> {
    match decay {
        Decay::Fixed(c) => Ok(c),
        Decay::Auto => Ok(auto_decay(team_guard_bound(net, team)?)),
    }
}

struct Prepared {
    team: TeamGraph,
    params: KernelParams,
    rank_r: Option<usize>,
}

fn prepare(net: &LabeledNetwork, query: &ReplacementQuery, method: Algorithm) -> Result<Prepared> {
    if query.top_k == 0 {
        return Err(Error::Argument("top_k must be at least 1".into()));
    }
    let team = team_subgraph(net, &query.team_members, query.leaver)?;
    let t = team.t();
    let rank_r = match (method, query.rank_r) {
        (Algorithm::FastApprox, Some(r)) if r > t => {
            return Err(Error::Argument(format!("rank_r = {r} exceeds team size {t}")));
        }
        (Algorithm::FastApprox, Some(r)) => Some(r),
        (Algorithm::FastApprox, None) => Some((t - 1).min(DEFAULT_RANK_CAP)),
        _ => None,
    };
    let mut params = query.params.clone();
    params.decay = resolve_decay(net, &team, query.decay)?;
    params.validate(t)?;
    Ok(Prepared { team, params, rank_r })
}

fn score_all<F>(profiles: &[CandidateProfile<'_>], parallel: bool, score: F) -> Result<Vec<(usize, f64)>>
where
    F: Fn(&CandidateProfile<'_>) -> Result<f64> + Sync,
{
    let one = |p: &CandidateProfile<'_>| score(p).map(|s| (p.node, s));
    if parallel {
        profiles.par_iter().map(one).collect()
    } else {
        profiles.iter().map(one).collect()
    }
}

/// `score` rounded to [`RANK_DIGITS`] significant digits, so that the
/// ordering does not depend on round-off between evaluators.
pub fn rank_key(score: f64) -> f64 {
    format!("{:.*e}", RANK_DIGITS - 1, score).parse().unwrap_or(score)
}

/// Sorts by rounded score descending, then node index ascending, and keeps `top_k`.
pub fn rank_scores(mut scored: Vec<(usize, f64)>, top_k: usize, method: Algorithm) -> Vec<Recommendation> {
    scored.sort_by(|a, b| rank_key(b.1).total_cmp(&rank_key(a.1)).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, (candidate, score))| Recommendation {
            candidate,
            score,
            rank: i + 1,
            method,
        })
        .collect()
}

fn assemble(
    prep: Prepared,
    query: &ReplacementQuery,
    method: Algorithm,
    scored: Vec<(usize, f64)>,
) -> RecommendationSet {
    RecommendationSet {
        algorithm: method,
        decay: prep.params.decay,
        rank_r: prep.rank_r,
        team: prep.team.members().to_vec(),
        candidates_evaluated: scored.len(),
        recommendations: rank_scores(scored, query.top_k, method),
    }
}

fn direct_scores(prep: &Prepared, profiles: &[CandidateProfile<'_>], parallel: bool) -> Result<Vec<(usize, f64)>> {
    score_all(profiles, parallel, |p| {
        let modified = prep.team.with_slot(p.node, &p.edges, p.skills)?;
        kernel_direct(&prep.team, &modified, &prep.params).map(|k| k.value)
    })
}

/// Runs the algorithm named in the query.
pub fn recommend(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    match query.algorithm {
        Algorithm::Basic => recommend_basic(net, query),
        Algorithm::FastExact => recommend_fast_exact(net, query),
        Algorithm::FastApprox => recommend_fast_approx(net, query),
    }
}

/// One dense kernel solve per connected candidate.
pub fn recommend_basic(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    let prep = prepare(net, query, Algorithm::Basic)?;
    let profiles = candidate_profiles(net, &prep.team, query.include_leaver);
    let scored = direct_scores(&prep, &profiles, query.parallel)?;
    Ok(assemble(prep, query, Algorithm::Basic, scored))
}

/// Like [`recommend_basic`] but scores every node outside the team.
pub fn recommend_basic_unpruned(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    let prep = prepare(net, query, Algorithm::Basic)?;
    let profiles = all_profiles(net, &prep.team, query.include_leaver);
    let scored = direct_scores(&prep, &profiles, query.parallel)?;
    Ok(assemble(prep, query, Algorithm::Basic, scored))
}

/// Shares `Z⁻¹` across candidates.
pub fn recommend_fast_exact(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    let prep = prepare(net, query, Algorithm::FastExact)?;
    let cache = build_precompute_cache(&prep.team, &prep.params)?;
    let profiles = candidate_profiles(net, &prep.team, query.include_leaver);
    let scored = score_all(&profiles, query.parallel, |p| {
        kernel_fast_exact(&prep.team, &cache, &p.edges, p.skills, &prep.params).map(|k| k.value)
    })?;
    Ok(assemble(prep, query, Algorithm::FastExact, scored))
}

/// Shares one rank-`r` factorization of `A_c` across candidates.
pub fn recommend_fast_approx(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    let prep = prepare(net, query, Algorithm::FastApprox)?;
    let rank_r = prep.rank_r.expect("approx queries carry a rank");
    let factors = build_lowrank_factors(&prep.team, rank_r)?;
    let cache = ApproxCache::build(&prep.team, &factors, &prep.params)?;
    let profiles = candidate_profiles(net, &prep.team, query.include_leaver);
    let scored = score_all(&profiles, query.parallel, |p| {
        cache.score(&p.edges, p.skills).map(|k| k.value)
    })?;
    Ok(assemble(prep, query, Algorithm::FastApprox, scored))
}

/// The approximate scorer with a fresh factorization and a full inner solve
/// per candidate. Same values as [`recommend_fast_approx`]; used as its
/// timing baseline.
pub fn recommend_approx_refactored(net: &LabeledNetwork, query: &ReplacementQuery) -> Result<RecommendationSet> {
    let prep = prepare(net, query, Algorithm::FastApprox)?;
    let rank_r = prep.rank_r.expect("approx queries carry a rank");
    let profiles = candidate_profiles(net, &prep.team, query.include_leaver);
    let scored = score_all(&profiles, query.parallel, |p| {
        kernel_approx_unshared(&prep.team, rank_r, &p.edges, p.skills, &prep.params).map(|k| k.value)
    })?;
    Ok(assemble(prep, query, Algorithm::FastApprox, scored))
}

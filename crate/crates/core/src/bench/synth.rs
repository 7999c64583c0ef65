//! Seeded synthetic labeled networks.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::LabeledNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentModel {
    /// Uniformly random edges, `G(n, m)`.
    ErdosRenyi,
    /// Each new node links to existing nodes with probability growing in their degree.
    Preferential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub target_m: usize,
    pub model: AttachmentModel,
    pub l: usize,
    /// Mean number of skills per node, at least 1.
    pub skills_per_node: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn erdos_renyi(n: usize, target_m: usize, seed: u64) -> Self {
        Self {
            n,
            target_m,
            model: AttachmentModel::ErdosRenyi,
            l: 20,
            skills_per_node: 3.0,
            seed,
        }
    }
}

/// Weight of a generated edge: 1 plus a geometric number of extra
/// collaborations, capped at 10.
fn edge_weight(rng: &mut ChaCha8Rng) -> f64 {
    let mut w = 1.0;
    while w < 10.0 && rng.gen_bool(0.3) {
        w += 1.0;
    }
    w
}

pub fn generate_network(spec: &SyntheticSpec) -> Result<LabeledNetwork> {
    let n = spec.n;
    let max_m = n.saturating_mul(n.saturating_sub(1)) / 2;
    if spec.target_m > max_m {
        return Err(Error::Argument(format!(
            "{} edges do not fit in a simple graph on {n} nodes (max {max_m})",
            spec.target_m
        )));
    }
    if spec.l == 0 {
        return Err(Error::Argument("synthetic networks need at least one skill".into()));
    }
    if !(spec.skills_per_node >= 1.0 && spec.skills_per_node <= spec.l as f64) {
        return Err(Error::Argument(format!(
            "skills_per_node must lie in [1, {}], got {}",
            spec.l, spec.skills_per_node
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs = match spec.model {
        AttachmentModel::ErdosRenyi => erdos_renyi(n, spec.target_m, &mut rng),
        AttachmentModel::Preferential => preferential(n, spec.target_m, &mut rng),
    };
    let edges: Vec<(usize, usize, f64)> = pairs.into_iter().map(|(u, v)| (u, v, edge_weight(&mut rng))).collect();

    let l = spec.l;
    let extra = if l > 1 {
        (spec.skills_per_node - 1.0) / (l - 1) as f64
    } else {
        0.0
    };
    let mut skills = vec![0.0; n * l];
    for i in 0..n {
        let own = rng.gen_range(0..l);
        for k in 0..l {
            if k == own || rng.gen_bool(extra.clamp(0.0, 1.0)) {
                skills[i * l + k] = 1.0;
            }
        }
    }
    LabeledNetwork::from_parts(
        (0..n).map(|i| format!("n{i}")).collect(),
        edges,
        skills,
        (0..l).map(|k| format!("s{k}")).collect(),
    )
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

fn erdos_renyi(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let max_m = n * n.saturating_sub(1) / 2;
    if m * 3 > max_m {
        let mut all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let (chosen, _) = all.partial_shuffle(rng, m);
        return chosen.to_vec();
    }
    let mut seen = HashSet::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && seen.insert(ordered(u, v)) {
            out.push(ordered(u, v));
        }
    }
    out
}

/// Growth with degree-biased targets. Each arriving node brings about
/// `m / n` edges; whatever the early nodes could not place is added at the
/// end between degree-biased endpoints, so the edge count is exact.
fn preferential(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut seen = HashSet::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    // Every node appears once plus once per incident edge.
    let mut urn: Vec<usize> = Vec::with_capacity(n + 2 * m);
    let per_node = if n > 1 { m as f64 / (n - 1) as f64 } else { 0.0 };
    let mut owed = 0.0;
    for v in 0..n {
        if v > 0 {
            owed += per_node;
            let want = (owed.floor() as usize).min(v).min(m - out.len());
            owed -= want as f64;
            let mut placed = 0;
            let mut tries = 0;
            while placed < want && tries < 50 * want {
                tries += 1;
                let u = urn[rng.gen_range(0..urn.len())];
                if u != v && seen.insert(ordered(u, v)) {
                    out.push(ordered(u, v));
                    urn.push(u);
                    urn.push(v);
                    placed += 1;
                }
            }
        }
        urn.push(v);
    }
    let mut tries = 0;
    while out.len() < m && tries < 100 * m {
        tries += 1;
        let (u, v) = (urn[rng.gen_range(0..urn.len())], urn[rng.gen_range(0..urn.len())]);
        if u != v && seen.insert(ordered(u, v)) {
            out.push(ordered(u, v));
            urn.push(u);
            urn.push(v);
        }
    }
    if out.len() < m {
        let mut rest: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|p| !seen.contains(p))
            .collect();
        rest.shuffle(rng);
        out.extend(rest.into_iter().take(m - out.len()));
    }
    out
}

/// The first `fraction` of the edges in a seeded random order. Samples for
/// increasing fractions with the same seed are nested.
pub fn subsample_edges(net: &LabeledNetwork, fraction: f64, seed: u64) -> Result<LabeledNetwork> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Argument(format!(
            "edge fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let mut edges: Vec<(usize, usize, f64)> = net.edges().collect();
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let keep = (fraction * edges.len() as f64).round() as usize;
    edges.truncate(keep);
    net.with_edges(edges)
}

/// A connected team of `t` nodes grown breadth-first from a seeded start
/// node, which is returned as the leaver. Returns `None` when no component
/// has `t` nodes reachable within a few attempts.
pub fn pick_team(net: &LabeledNetwork, t: usize, seed: u64) -> Option<(Vec<usize>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<usize> = (0..net.n()).filter(|&i| net.degree(i) > 0).collect();
    for _ in 0..64 {
        let &start = starts.choose(&mut rng)?;
        let mut team = vec![start];
        let mut seen: HashSet<usize> = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for (v, _) in net.neighbors(u) {
                if team.len() < t && seen.insert(v) {
                    team.push(v);
                    queue.push_back(v);
                }
            }
            if team.len() == t {
                return Some((team, start));
            }
        }
    }
    None
}

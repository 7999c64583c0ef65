//! Team graphs `G(T)` and the candidate-modified graphs `G(T_{p→q})`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::LabeledNetwork;

/// A team's induced labeled subgraph. The replaceable slot is always last.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamGraph {
    members: Vec<usize>,
    adjacency: DMatrix<f64>,
    skills: DMatrix<f64>,
}

impl TeamGraph {
    /// Builds a team graph from explicit matrices, e.g. for kernel
    /// evaluation between arbitrary small graphs. Single-node graphs are
    /// accepted here; `team_subgraph` requires two or more members.
    pub fn from_parts(members: Vec<usize>, adjacency: DMatrix<f64>, skills: DMatrix<f64>) -> Result<Self> {
        let t = members.len();
        if t == 0 {
            return Err(Error::Argument("a team graph needs at least one node".into()));
        }
        if adjacency.shape() != (t, t) || skills.nrows() != t {
            return Err(Error::Argument(format!(
                "shape mismatch: {t} members, adjacency {:?}, skills {:?}",
                adjacency.shape(),
                skills.shape()
            )));
        }
        let mut seen = members.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("team members must be distinct".into()));
        }
        for i in 0..t {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("adjacency has a nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if adjacency[(i, j)] != adjacency[(j, i)] {
                    return Err(Error::Validation(format!("adjacency is not symmetric at ({i}, {j})")));
                }
            }
        }
        if adjacency
            .iter()
            .chain(skills.iter())
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        Ok(Self {
            members,
            adjacency,
            skills,
        })
    }

    /// Team size `t`.
    pub fn t(&self) -> usize {
        self.members.len()
    }

    pub fn l(&self) -> usize {
        self.skills.ncols()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Members that stay, i.e. everyone but the last slot.
    pub fn retained(&self) -> &[usize] {
        &self.members[..self.t() - 1]
    }

    /// The member in the replaceable (last) slot.
    pub fn slot_member(&self) -> usize {
        self.members[self.t() - 1]
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn skills(&self) -> &DMatrix<f64> {
        &self.skills
    }

    /// `A_c`: the adjacency with the last row and column zeroed.
    pub fn adjacency_without_slot(&self) -> DMatrix<f64> {
        let t = self.t();
        let mut a = self.adjacency.clone();
        a.row_mut(t - 1).fill(0.0);
        a.column_mut(t - 1).fill(0.0);
        a
    }

    /// `w`: weights from the slot member to every member (length t, last entry 0).
    pub fn slot_edges(&self) -> DVector<f64> {
        self.adjacency.column(self.t() - 1).into_owned()
    }

    /// The team with `node` in the slot, given its weights to the retained
    /// members (in order) and its skill row.
    pub fn with_slot(&self, node: usize, edges: &[f64], skills: &[f64]) -> Result<TeamGraph> {
        let t = self.t();
        if edges.len() != t - 1 || skills.len() != self.l() {
            return Err(Error::Argument(format!(
                "slot profile has {} edges and {} skills, expected {} and {}",
                edges.len(),
                skills.len(),
                t - 1,
                self.l()
            )));
        }
        let mut members = self.retained().to_vec();
        members.push(node);
        let mut adjacency = self.adjacency_without_slot();
        for (i, &w) in edges.iter().enumerate() {
            adjacency[(i, t - 1)] = w;
            adjacency[(t - 1, i)] = w;
        }
        let mut skills_m = self.skills.clone();
        skills_m.row_mut(t - 1).copy_from_slice(skills);
        TeamGraph::from_parts(members, adjacency, skills_m)
    }
}

/// `G(T)` with the leaver moved to the last slot; other members keep their order.
pub fn team_subgraph(net: &LabeledNetwork, members: &[usize], leaver: usize) -> Result<TeamGraph> {
    if members.len() < 2 {
        return Err(Error::Argument(format!(
            "a team needs at least 2 members, got {}",
            members.len()
        )));
    }
    if let Some(&bad) = members.iter().find(|&&i| i >= net.n()) {
        return Err(Error::Argument(format!("member index {bad} out of range")));
    }
    if !members.contains(&leaver) {
        return Err(Error::Argument(format!(
            "leaver `{}` is not a team member",
            net.node_id(leaver.min(net.n().saturating_sub(1)))
        )));
    }
    let mut ordered: Vec<usize> = members.iter().copied().filter(|&i| i != leaver).collect();
    if ordered.len() != members.len() - 1 {
        return Err(Error::Argument("team members must be distinct".into()));
    }
    ordered.push(leaver);
    induced_subgraph(net, ordered)
}

/// `G(T_{p→q})`: the same member order with `candidate` in the last slot.
pub fn replace_member(net: &LabeledNetwork, team: &TeamGraph, candidate: usize) -> Result<TeamGraph> {
    if candidate >= net.n() {
        return Err(Error::Argument(format!("candidate index {candidate} out of range")));
    }
    if team.members().contains(&candidate) {
        return Err(Error::Argument(format!(
            "candidate `{}` is already on the team",
            net.node_id(candidate)
        )));
    }
    let edges: Vec<f64> = team.retained().iter().map(|&r| net.weight(candidate, r)).collect();
    team.with_slot(candidate, &edges, net.skill_row(candidate))
}

/// The labeled subgraph induced by `members`, in the given order. Unlike
/// [`team_subgraph`] this accepts a single node.
pub fn induced_subgraph(net: &LabeledNetwork, members: Vec<usize>) -> Result<TeamGraph> {
    if let Some(&bad) = members.iter().find(|&&i| i >= net.n()) {
        return Err(Error::Argument(format!("member index {bad} out of range")));
    }
    let t = members.len();
    let l = net.l();
    let adjacency = DMatrix::from_fn(t, t, |i, j| net.weight(members[i], members[j]));
    let skills = DMatrix::from_fn(t, l, |i, k| net.skill_row(members[i])[k]);
    TeamGraph::from_parts(members, adjacency, skills)
}

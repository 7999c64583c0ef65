//! The global labeled social network and its on-disk formats.
//!
//! Edges file: one undirected edge per line, `src<TAB>dst<TAB>weight`.
//! Skills file: `node<TAB>skill<TAB>weight` triples, absent pairs are 0.
//! Teams file: `team_id<TAB>member1,member2,...`.
//!
//! Lines starting with `#` and blank lines are ignored in all three. Fields
//! are tab separated; lines without a tab are split on whitespace.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// `G = {A, L}`: sparse symmetric weighted adjacency plus an `n × l` skill matrix.
///
/// Immutable once built. Node ids are opaque strings externally and dense
/// indices (first-appearance order) internally.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledNetwork {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    // CSR, rows sorted by column; both directions stored.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    // n × l, row-major.
    skills: Vec<f64>,
    skill_names: Vec<String>,
    skill_col_max: Vec<f64>,
}

impl LabeledNetwork {
    /// Builds a network from undirected `(u, v, weight)` triples.
    ///
    /// Duplicate pairs (in either orientation) are summed. Zero-weight
    /// triples register nothing; a `(u, u, 0)` triple is allowed and ignored.
    pub fn from_parts(
        node_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        skills: Vec<f64>,
        skill_names: Vec<String>,
    ) -> Result<Self> {
        let n = node_ids.len();
        let l = skill_names.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in node_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate node id `{id}`")));
            }
        }
        if skills.len() != n * l {
            return Err(Error::Validation(format!(
                "skill matrix has {} entries, expected {n} × {l}",
                skills.len()
            )));
        }
        if let Some(bad) = skills.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation(format!(
                "skill weight {} for node `{}` is negative or not finite",
                skills[bad],
                node_ids[bad / l.max(1)]
            )));
        }

        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Validation(format!(
                    "edge `{}`-`{}` has negative or non-finite weight {w}",
                    node_ids[u], node_ids[v]
                )));
            }
            if w == 0.0 {
                continue;
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on `{}`", node_ids[u])));
            }
            *merged.entry((u.min(v), u.max(v))).or_insert(0.0) += w;
        }

        let mut degree = vec![0usize; n];
        for &(u, v) in merged.keys() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let mut fill = row_ptr.clone();
        let mut cols = vec![0usize; row_ptr[n]];
        let mut weights = vec![0.0; row_ptr[n]];
        // Keys arrive sorted by (min, max), so every row is filled in
        // ascending column order.
        for (&(u, v), &w) in &merged {
            cols[fill[u]] = v;
            weights[fill[u]] = w;
            fill[u] += 1;
            cols[fill[v]] = u;
            weights[fill[v]] = w;
            fill[v] += 1;
        }
        let mut skill_col_max = vec![0.0f64; l];
        for row in skills.chunks(l.max(1)).take(n) {
            for (k, &w) in row.iter().enumerate().take(l) {
                skill_col_max[k] = skill_col_max[k].max(w);
            }
        }

        Ok(Self {
            node_ids,
            index,
            row_ptr,
            cols,
            weights,
            skills,
            skill_names,
            skill_col_max,
        })
    }

    /// Loads a network from an edges file and a skills file.
    pub fn load(edges_path: impl AsRef<Path>, skills_path: impl AsRef<Path>) -> Result<Self> {
        let edges_path = edges_path.as_ref();
        let skills_path = skills_path.as_ref();
        let edges_text = read(edges_path)?;
        let skills_text = read(skills_path)?;

        let mut node_ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |id: &str| -> usize {
            if let Some(&i) = index.get(id) {
                return i;
            }
            index.insert(id.to_owned(), node_ids.len());
            node_ids.push(id.to_owned());
            node_ids.len() - 1
        };

        let mut edges = Vec::new();
        for (line_no, fields) in records(&edges_text) {
            let [src, dst, weight] = three_fields(edges_path, line_no, &fields)?;
            let w = parse_weight(edges_path, line_no, weight)?;
            if src == dst && w > 0.0 {
                return Err(Error::Parse {
                    path: edges_path.to_owned(),
                    line: line_no,
                    message: format!("self-loop on `{src}`"),
                });
            }
            let u = intern(src);
            let v = intern(dst);
            edges.push((u, v, w));
        }

        let n = node_ids.len();
        let node_index: HashMap<&str, usize> = node_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut skill_names: Vec<String> = Vec::new();
        let mut skill_index: HashMap<String, usize> = HashMap::new();
        let mut triples = Vec::new();
        let mut has_row = vec![false; n];
        for (line_no, fields) in records(&skills_text) {
            let [node, skill, weight] = three_fields(skills_path, line_no, &fields)?;
            let w = parse_weight(skills_path, line_no, weight)?;
            let &i = node_index.get(node).ok_or_else(|| Error::unknown_node(node))?;
            let k = *skill_index.entry(skill.to_owned()).or_insert_with(|| {
                skill_names.push(skill.to_owned());
                skill_names.len() - 1
            });
            has_row[i] = true;
            triples.push((i, k, w));
        }
        if let Some(missing) = has_row.iter().position(|h| !h) {
            return Err(Error::Validation(format!(
                "every node needs ≥1 skill row or an explicit zero row; `{}` has none",
                node_ids[missing]
            )));
        }
        if n == 0 {
            return Err(Error::Validation("edges file declares no nodes".into()));
        }

        let l = skill_names.len();
        let mut skills = vec![0.0; n * l];
        for (i, k, w) in triples {
            skills[i * l + k] += w;
        }
        Self::from_parts(node_ids, edges, skills, skill_names)
    }

    /// Writes the network in the edges/skills text formats. Reloading the
    /// output reproduces the network up to node order.
    pub fn write(&self, edges_path: impl AsRef<Path>, skills_path: impl AsRef<Path>) -> Result<()> {
        if self.l() == 0 {
            return Err(Error::Validation("cannot write a network without skills".into()));
        }
        let mut edges = String::new();
        for i in 0..self.n() {
            if self.degree(i) == 0 {
                let _ = writeln!(edges, "{id}\t{id}\t0", id = self.node_ids[i]);
            }
            for (j, w) in self.neighbors(i) {
                if i < j {
                    let _ = writeln!(edges, "{}\t{}\t{w}", self.node_ids[i], self.node_ids[j]);
                }
            }
        }
        let mut skills = String::new();
        for i in 0..self.n() {
            let row = self.skill_row(i);
            if row.iter().all(|&w| w == 0.0) {
                let _ = writeln!(skills, "{}\t{}\t0", self.node_ids[i], self.skill_names[0]);
                continue;
            }
            for (k, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    let _ = writeln!(skills, "{}\t{}\t{w}", self.node_ids[i], self.skill_names[k]);
                }
            }
        }
        write(edges_path.as_ref(), &edges)?;
        write(skills_path.as_ref(), &skills)
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of undirected edges with positive weight.
    pub fn m(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn l(&self) -> usize {
        self.skill_names.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn resolve(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::unknown_node(id))
    }

    pub fn skill_names(&self) -> &[String] {
        &self.skill_names
    }

    pub fn skill_row(&self, i: usize) -> &[f64] {
        let l = self.l();
        &self.skills[i * l..(i + 1) * l]
    }

    /// Largest weight any node carries for skill `k`.
    pub fn skill_col_max(&self) -> &[f64] {
        &self.skill_col_max
    }

    /// Neighbors of `i` with their edge weights, in ascending index order.
    pub fn neighbors(&self, i: usize) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[s..e].iter().copied().zip(self.weights[s..e].iter().copied())
    }

    /// `A(i, j)`, zero when there is no edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[s..e].binary_search(&j) {
            Ok(k) => self.weights[s + k],
            Err(_) => 0.0,
        }
    }

    /// `d_i`: number of neighbors.
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.neighbors(i).map(|(_, w)| w).sum()
    }

    /// Every undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| i < j)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// A copy of this network keeping only the given edges; nodes and skills are unchanged.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::from_parts(
            self.node_ids.clone(),
            edges,
            self.skills.clone(),
            self.skill_names.clone(),
        )
    }
}

/// Named teams, each a list of member node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TeamCatalog {
    teams: BTreeMap<String, Vec<usize>>,
}

impl TeamCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: impl AsRef<Path>, net: &LabeledNetwork) -> Result<Self> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut catalog = Self::new();
        for (line_no, fields) in records(&text) {
            if fields.len() != 2 {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message: format!("expected `team_id<TAB>members`, got {} fields", fields.len()),
                });
            }
            let members = fields[1]
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|id| net.resolve(id))
                .collect::<Result<Vec<_>>>()?;
            catalog.insert(fields[0], members).map_err(|e| match e {
                Error::Validation(message) => Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message,
                },
                other => other,
            })?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, id: &str, members: Vec<usize>) -> Result<()> {
        if self.teams.contains_key(id) {
            return Err(Error::Validation(format!("duplicate team id `{id}`")));
        }
        self.teams.insert(id.to_owned(), members);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[usize]> {
        self.teams.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.teams.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers, split into fields.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            return None;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        Some((i + 1, fields))
    })
}

fn three_fields<'a>(path: &Path, line: usize, fields: &[&'a str]) -> Result<[&'a str; 3]> {
    match fields {
        [a, b, c] if !a.is_empty() && !b.is_empty() => Ok([a, b, c]),
        _ => Err(Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("expected 3 fields, got {}", fields.len()),
        }),
    }
}

fn parse_weight(path: &Path, line: usize, field: &str) -> Result<f64> {
    let w: f64 = field.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("`{field}` is not a number"),
    })?;
    if !w.is_finite() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("weight `{field}` is not finite"),
        });
    }
    if w < 0.0 {
        return Err(Error::Validation(format!(
            "{}:{line}: negative weight {w}",
            path.display()
        )));
    }
    Ok(w)
}

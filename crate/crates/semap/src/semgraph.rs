//! Thresholded semantic graphs over the word similarity matrix.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::lexicon::VocabEntry;
use crate::vsm::{Measure, SimilarityMatrix};

/// Discourse organization regime; picks the default cosine threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscourseMode {
    /// A single tightly organized document: dense relations.
    Restricted,
    /// A loosely organized document set: sparse relations.
    Elaborate,
}

impl DiscourseMode {
    pub fn parse(s: &str) -> Option<DiscourseMode> {
        match s.to_ascii_lowercase().as_str() {
            "restricted" => Some(DiscourseMode::Restricted),
            "elaborate" => Some(DiscourseMode::Elaborate),
            _ => None,
        }
    }
}

impl fmt::Display for DiscourseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscourseMode::Restricted => write!(f, "restricted"),
            DiscourseMode::Elaborate => write!(f, "elaborate"),
        }
    }
}

/// Default inclusion threshold per discourse mode. An explicit user
/// threshold always overrides this.
pub fn default_threshold(mode: DiscourseMode) -> f64 {
    match mode {
        DiscourseMode::Restricted => 0.5,
        DiscourseMode::Elaborate => 0.1,
    }
}

/// A word node carried into the graph with its frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub word_id: usize,
    pub surface: String,
    pub total_freq: u32,
    pub unit_freq: u32,
}

/// An undirected edge between two word ids, `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Words as nodes, similarity-weighted edges at or above the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGraph {
    /// Nodes in ascending word-id order.
    pub nodes: Vec<GraphNode>,
    /// Edges with `a < b`, sorted by (a, b).
    pub edges: Vec<GraphEdge>,
    pub threshold: f64,
    /// Absent when the graph was parsed from a file that does not carry it.
    pub measure: Option<Measure>,
}

impl SemanticGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edge density over unordered node pairs; 0 for fewer than two nodes.
    pub fn density(&self) -> f64 {
        let n = self.nodes.len();
        if n < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Degree per word id.
    pub fn degrees(&self) -> HashMap<usize, usize> {
        let mut degrees: HashMap<usize, usize> =
            self.nodes.iter().map(|n| (n.word_id, 0)).collect();
        for e in &self.edges {
            *degrees.get_mut(&e.a).unwrap() += 1;
            *degrees.get_mut(&e.b).unwrap() += 1;
        }
        degrees
    }

    /// Adjacency (word id -> neighbours with weights), neighbours ascending.
    pub fn adjacency(&self) -> BTreeMap<usize, Vec<(usize, f64)>> {
        let mut adj: BTreeMap<usize, Vec<(usize, f64)>> =
            self.nodes.iter().map(|n| (n.word_id, Vec::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.a).unwrap().push((e.b, e.weight));
            adj.get_mut(&e.b).unwrap().push((e.a, e.weight));
        }
        for neighbours in adj.values_mut() {
            neighbours.sort_by_key(|&(id, _)| id);
        }
        adj
    }
}

/// Build the graph from a similarity matrix: every selected word becomes a
/// node, and an edge (i, j), i < j, exists iff similarity ≥ threshold.
/// Isolated nodes are removed by the separate [`prune_isolated`] step.
pub fn build_graph(
    similarity: &SimilarityMatrix,
    words: &[VocabEntry],
    threshold: f64,
) -> Result<SemanticGraph> {
    if similarity.n() != words.len() {
        return Err(Error::Config(format!(
            "similarity matrix covers {} words but {} were given",
            similarity.n(),
            words.len()
        )));
    }
    if similarity.measure == Measure::Cosine && !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "cosine threshold {threshold} outside [0, 1]"
        )));
    }
    let nodes: Vec<GraphNode> = words
        .iter()
        .map(|w| GraphNode {
            word_id: w.word_id,
            surface: w.surface.clone(),
            total_freq: w.total_freq,
            unit_freq: w.unit_freq,
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            let s = similarity.get(i, j);
            if s >= threshold {
                let (a, b) = if words[i].word_id < words[j].word_id {
                    (words[i].word_id, words[j].word_id)
                } else {
                    (words[j].word_id, words[i].word_id)
                };
                edges.push(GraphEdge { a, b, weight: s });
            }
        }
    }
    edges.sort_by_key(|x| (x.a, x.b));
    Ok(SemanticGraph {
        nodes,
        edges,
        threshold,
        measure: Some(similarity.measure),
    })
}

/// What pruning removed, for the run report.
#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub graph: SemanticGraph,
    /// Surfaces of the removed degree-0 nodes, in word-id order.
    pub removed: Vec<String>,
}

/// Remove exactly the degree-0 nodes; the edge set is unchanged.
pub fn prune_isolated(g: &SemanticGraph) -> PruneOutcome {
    let degrees = g.degrees();
    let (kept, removed): (Vec<GraphNode>, Vec<GraphNode>) = g
        .nodes
        .iter()
        .cloned()
        .partition(|n| degrees[&n.word_id] > 0);
    if kept.is_empty() && !g.nodes.is_empty() {
        log::warn!(
            "threshold {} leaves every node unconnected; graph is empty",
            g.threshold
        );
    }
    PruneOutcome {
        graph: SemanticGraph {
            nodes: kept,
            edges: g.edges.clone(),
            threshold: g.threshold,
            measure: g.measure,
        },
        removed: removed.into_iter().map(|n| n.surface).collect(),
    }
}

/// Connected components by edge reachability. Components are ordered by
/// their smallest word id, and each component's ids are ascending.
pub fn components(g: &SemanticGraph) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut visited: BTreeMap<usize, bool> =
        g.nodes.iter().map(|n| (n.word_id, false)).collect();
    let mut result = Vec::new();
    for node in &g.nodes {
        if visited[&node.word_id] {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = std::collections::VecDeque::from([node.word_id]);
        visited.insert(node.word_id, true);
        while let Some(id) = queue.pop_front() {
            component.push(id);
            for &(next, _) in &adj[&id] {
                if !visited[&next] {
                    visited.insert(next, true);
                    queue.push_back(next);
                }
            }
        }
        component.sort_unstable();
        result.push(component);
    }
    result.sort_by_key(|c| c[0]);
    result
}

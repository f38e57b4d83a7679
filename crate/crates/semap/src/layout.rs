//! Plane embedding of the semantic graph by spring-energy minimization.
//!
//! The network is a system of springs between every node pair of a
//! component, with relaxed length l_ij = L·d_ij proportional to the graph
//! distance and stiffness k_ij = K/d_ij². Nodes are repositioned by a
//! steepest-descent procedure: the node with the largest gradient is
//! relaxed by damped descent until its local gradient falls under the
//! tolerance. Unconnected components are laid out separately and packed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::semgraph::{components, SemanticGraph};

/// Spring stiffness scale (K in k_ij = K/d_ij²).
pub const STIFFNESS: f64 = 1.0;

/// How edge lengths enter the graph distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLengthMode {
    /// Every edge counts 1 hop.
    Unit,
    /// Edge length (1 − weight) + 0.01; strong ties pull nodes closer.
    InverseWeight,
}

impl EdgeLengthMode {
    pub fn parse(s: &str) -> Option<EdgeLengthMode> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Some(EdgeLengthMode::Unit),
            "inverse-weight" | "inverse_weight" => Some(EdgeLengthMode::InverseWeight),
            _ => None,
        }
    }
}

impl std::fmt::Display for EdgeLengthMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeLengthMode::Unit => write!(f, "unit"),
            EdgeLengthMode::InverseWeight => write!(f, "inverse-weight"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayoutConfig {
    pub edge_length_mode: EdgeLengthMode,
    /// Side of the abstract square canvas the components share.
    pub canvas_side: f64,
    /// Gradient-norm stop criterion, relative to the spring length unit L.
    pub tolerance: f64,
    /// Cap on outer iterations per component; `None` means 100·|component|.
    pub max_outer_iterations: Option<usize>,
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            edge_length_mode: EdgeLengthMode::Unit,
            canvas_side: 1.0,
            tolerance: 1e-4,
            max_outer_iterations: None,
            seed: 42,
        }
    }
}

/// Square matrix of pairwise graph distances within one component.
#[derive(Debug, Clone)]
pub struct Distances {
    n: usize,
    values: Vec<f64>,
}

impl Distances {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n);
        Distances { n, values }
    }
}

/// Distances for one connected component, keyed by its word ids.
#[derive(Debug, Clone)]
pub struct ComponentDistances {
    /// Ascending word ids; row/column order of `dist`.
    pub word_ids: Vec<usize>,
    pub dist: Distances,
}

/// Pairwise shortest-path distances within each component.
pub fn graph_distances(g: &SemanticGraph, mode: EdgeLengthMode) -> Vec<ComponentDistances> {
    let adjacency = g.adjacency();
    components(g)
        .into_iter()
        .map(|word_ids| {
            let index_of: std::collections::HashMap<usize, usize> = word_ids
                .iter()
                .enumerate()
                .map(|(i, &id)| (id, i))
                .collect();
            let n = word_ids.len();
            let mut values = vec![f64::INFINITY; n * n];
            for (src_local, &src) in word_ids.iter().enumerate() {
                let row = shortest_paths(src, &word_ids, &index_of, &adjacency, mode);
                values[src_local * n..(src_local + 1) * n].copy_from_slice(&row);
            }
            debug_assert!(values.iter().all(|v| v.is_finite()));
            ComponentDistances {
                word_ids,
                dist: Distances { n, values },
            }
        })
        .collect()
}

/// Single-source shortest paths within a component. Unit mode uses BFS hop
/// counts; inverse-weight mode runs Dijkstra with length (1 − w) + 0.01.
fn shortest_paths(
    src: usize,
    word_ids: &[usize],
    index_of: &std::collections::HashMap<usize, usize>,
    adjacency: &std::collections::BTreeMap<usize, Vec<(usize, f64)>>,
    mode: EdgeLengthMode,
) -> Vec<f64> {
    let n = word_ids.len();
    let mut dist = vec![f64::INFINITY; n];
    dist[index_of[&src]] = 0.0;
    match mode {
        EdgeLengthMode::Unit => {
            let mut queue = std::collections::VecDeque::from([src]);
            while let Some(id) = queue.pop_front() {
                let base = dist[index_of[&id]];
                for &(next, _) in &adjacency[&id] {
                    let slot = &mut dist[index_of[&next]];
                    if slot.is_infinite() {
                        *slot = base + 1.0;
                        queue.push_back(next);
                    }
                }
            }
        }
        EdgeLengthMode::InverseWeight => {
            let mut done = vec![false; n];
            loop {
                // deterministic: smallest tentative distance, lowest index
                let mut best: Option<usize> = None;
                for i in 0..n {
                    if !done[i]
                        && dist[i].is_finite()
                        && best.is_none_or(|b| dist[i] < dist[b])
                    {
                        best = Some(i);
                    }
                }
                let Some(u) = best else { break };
                done[u] = true;
                for &(next, w) in &adjacency[&word_ids[u]] {
                    let v = index_of[&next];
                    let length = (1.0 - w) + 0.01;
                    if dist[u] + length < dist[v] {
                        dist[v] = dist[u] + length;
                    }
                }
            }
        }
    }
    dist
}

/// Total spring energy: Σ_{i<j} k_ij (‖p_i − p_j‖ − l_ij)² / 2 with
/// l_ij = l_scale·d_ij and k_ij = stiffness/d_ij².
pub fn kk_energy(
    positions: &[(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
) -> f64 {
    let n = positions.len();
    let mut energy = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist.get(i, j);
            let l = l_scale * d;
            let k = stiffness / (d * d);
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            let r = (dx * dx + dy * dy).sqrt();
            energy += k * (r - l) * (r - l) / 2.0;
        }
    }
    energy
}

fn node_gradient(
    m: usize,
    positions: &[(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
) -> (f64, f64) {
    let (mut gx, mut gy) = (0.0, 0.0);
    let (xm, ym) = positions[m];
    for (j, other) in positions.iter().enumerate() {
        if j == m {
            continue;
        }
        let d = dist.get(m, j);
        let l = l_scale * d;
        let k = stiffness / (d * d);
        let dx = xm - other.0;
        let dy = ym - other.1;
        let r = (dx * dx + dy * dy).sqrt();
        if r > 0.0 {
            let factor = k * (r - l) / r;
            gx += factor * dx;
            gy += factor * dy;
        } else {
            // coincident nodes: push along a fixed axis
            gx += k * (0.0 - l);
        }
    }
    (gx, gy)
}

fn node_local_energy(
    m: usize,
    at: (f64, f64),
    positions: &[(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
) -> f64 {
    let mut energy = 0.0;
    for (j, other) in positions.iter().enumerate() {
        if j == m {
            continue;
        }
        let d = dist.get(m, j);
        let l = l_scale * d;
        let k = stiffness / (d * d);
        let dx = at.0 - other.0;
        let dy = at.1 - other.1;
        let r = (dx * dx + dy * dy).sqrt();
        energy += k * (r - l) * (r - l) / 2.0;
    }
    energy
}

/// Largest node gradient magnitude; the optimizer's stop criterion.
pub fn max_gradient_norm(
    positions: &[(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
) -> f64 {
    (0..positions.len())
        .map(|m| {
            let (gx, gy) = node_gradient(m, positions, dist, l_scale, stiffness);
            (gx * gx + gy * gy).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Result of relaxing one component.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    /// Total energy after initialization and after each outer iteration.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_energy: f64,
}

const MAX_INNER_STEPS: usize = 100;
const MAX_HALVINGS: usize = 60;

/// Steepest-descent relaxation: repeatedly pick the node with the largest
/// gradient (ties to the lowest index) and descend on its two coordinates
/// with step halving, until the largest gradient drops under `tol` or the
/// iteration budget runs out. Accepted moves never increase the energy.
pub fn relax_component(
    positions: &mut [(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
    tol: f64,
    max_outer: usize,
) -> RelaxOutcome {
    let n = positions.len();
    let mut energy = kk_energy(positions, dist, l_scale, stiffness);
    let mut trace = vec![energy];
    if n < 2 {
        return RelaxOutcome {
            energy_trace: trace,
            iterations: 0,
            converged: true,
            final_energy: energy,
        };
    }
    // natural step scale per node: the inverse of its total stiffness
    let base_step: Vec<f64> = (0..n)
        .map(|m| {
            let total: f64 = (0..n)
                .filter(|&j| j != m)
                .map(|j| {
                    let d = dist.get(m, j);
                    stiffness / (d * d)
                })
                .sum();
            1.0 / total
        })
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_outer {
        let mut worst = 0usize;
        let mut worst_norm = -1.0;
        for m in 0..n {
            let (gx, gy) = node_gradient(m, positions, dist, l_scale, stiffness);
            let norm = (gx * gx + gy * gy).sqrt();
            if norm > worst_norm {
                worst_norm = norm;
                worst = m;
            }
        }
        if worst_norm < tol {
            converged = true;
            break;
        }
        let before = node_local_energy(
            worst,
            positions[worst],
            positions,
            dist,
            l_scale,
            stiffness,
        );
        let moved = relax_node(worst, positions, dist, l_scale, stiffness, tol, &base_step);
        let after = node_local_energy(
            worst,
            positions[worst],
            positions,
            dist,
            l_scale,
            stiffness,
        );
        energy += after - before;
        iterations += 1;
        trace.push(energy);
        if !moved {
            // descent cannot make progress at float precision
            break;
        }
    }
    let final_energy = kk_energy(positions, dist, l_scale, stiffness);
    RelaxOutcome {
        energy_trace: trace,
        iterations,
        converged,
        final_energy,
    }
}

/// Damped descent of one node until its own gradient is below `tol`.
/// Returns whether the node moved at all.
fn relax_node(
    m: usize,
    positions: &mut [(f64, f64)],
    dist: &Distances,
    l_scale: f64,
    stiffness: f64,
    tol: f64,
    base_step: &[f64],
) -> bool {
    let mut moved = false;
    for _ in 0..MAX_INNER_STEPS {
        let (gx, gy) = node_gradient(m, positions, dist, l_scale, stiffness);
        if (gx * gx + gy * gy).sqrt() < tol {
            break;
        }
        let current = node_local_energy(m, positions[m], positions, dist, l_scale, stiffness);
        let mut step = base_step[m];
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = (positions[m].0 - step * gx, positions[m].1 - step * gy);
            let energy = node_local_energy(m, trial, positions, dist, l_scale, stiffness);
            if energy <= current {
                if trial != positions[m] {
                    moved = true;
                }
                positions[m] = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    moved
}

/// One node's final map position.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePosition {
    pub word_id: usize,
    pub x: f64,
    pub y: f64,
}

/// Per-component layout detail.
#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub word_ids: Vec<usize>,
    /// Bounding box (min_x, min_y, max_x, max_y) in final [0,1]² space.
    pub bbox: (f64, f64, f64, f64),
    /// Spring length unit L used for this component.
    pub spring_length: f64,
    /// Node positions before packing and normalization, in `word_ids` order.
    pub raw_positions: Vec<(f64, f64)>,
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_energy: f64,
}

/// 2-D positions per node plus convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// In graph node order (ascending word id); coordinates in [0,1]².
    pub positions: Vec<NodePosition>,
    pub components: Vec<ComponentReport>,
    pub converged: bool,
    /// Summed final spring energy over components (pre-normalization units).
    pub final_energy: f64,
    /// Summed outer iterations over components.
    pub iterations: usize,
}

impl Embedding {
    pub fn position_of(&self, word_id: usize) -> Option<(f64, f64)> {
        self.positions
            .iter()
            .find(|p| p.word_id == word_id)
            .map(|p| (p.x, p.y))
    }
}

/// Embed a pruned, non-empty graph. Components are laid out independently
/// (seeded per component, so the result is schedule-independent), packed on
/// a row-major grid by descending size, and normalized into [0,1]².
pub fn kk_layout(g: &SemanticGraph, config: &LayoutConfig) -> Result<Embedding> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let total_nodes = g.n_nodes() as f64;
    let per_component = graph_distances(g, config.edge_length_mode);

    struct Laid {
        word_ids: Vec<usize>,
        positions: Vec<(f64, f64)>,
        outcome: RelaxOutcome,
        spring_length: f64,
    }

    let laid: Vec<Laid> = per_component
        .into_par_iter()
        .enumerate()
        .map(|(ci, comp)| {
            let n = comp.word_ids.len();
            let side = config.canvas_side * (n as f64 / total_nodes).sqrt();
            let dmax = comp.dist.max();
            let spring_length = if dmax > 0.0 { side / dmax } else { side };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(ci as u64 + 1);
            let jitter: f64 = rng.gen();
            let radius = side * (0.25 + 0.1 * jitter);
            let mut positions: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let angle = TAU * i as f64 / n as f64;
                    (
                        side / 2.0 + radius * angle.cos(),
                        side / 2.0 + radius * angle.sin(),
                    )
                })
                .collect();
            let tol = config.tolerance * spring_length;
            let max_outer = config.max_outer_iterations.unwrap_or(100 * n);
            let outcome = relax_component(
                &mut positions,
                &comp.dist,
                spring_length,
                STIFFNESS,
                tol,
                max_outer,
            );
            Laid {
                word_ids: comp.word_ids,
                positions,
                outcome,
                spring_length,
            }
        })
        .collect();

    // Pack bounding boxes row-major, largest component first.
    let k = laid.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(laid[i].word_ids.len()), i));
    let gap = 0.05 * config.canvas_side;
    let n_cols = (k as f64).sqrt().ceil() as usize;
    let mut offsets = vec![(0.0f64, 0.0f64); k];
    let (mut x, mut y, mut row_height) = (0.0f64, 0.0f64, 0.0f64);
    for (slot, &ci) in order.iter().enumerate() {
        if slot > 0 && slot % n_cols == 0 {
            x = 0.0;
            y += row_height + gap;
            row_height = 0.0;
        }
        let (min_x, min_y, max_x, max_y) = bbox(&laid[ci].positions);
        offsets[ci] = (x - min_x, y - min_y);
        x += (max_x - min_x) + gap;
        row_height = row_height.max(max_y - min_y);
    }

    // Normalize uniformly into [0,1]², centred on the smaller axis.
    let mut global: Vec<(f64, f64)> = Vec::new();
    for (ci, l) in laid.iter().enumerate() {
        for &(px, py) in &l.positions {
            global.push((px + offsets[ci].0, py + offsets[ci].1));
        }
    }
    let (min_x, min_y, max_x, max_y) = bbox(&global);
    let width = max_x - min_x;
    let height = max_y - min_y;
    let extent = width.max(height);
    let scale = if extent > 0.0 { 1.0 / extent } else { 1.0 };
    let off_x = (1.0 - width * scale) / 2.0;
    let off_y = (1.0 - height * scale) / 2.0;
    let map = |p: (f64, f64), off: (f64, f64)| -> (f64, f64) {
        let gx = p.0 + off.0;
        let gy = p.1 + off.1;
        (
            ((gx - min_x) * scale + off_x).clamp(0.0, 1.0),
            ((gy - min_y) * scale + off_y).clamp(0.0, 1.0),
        )
    };

    let mut by_word: Vec<(usize, f64, f64)> = Vec::with_capacity(g.n_nodes());
    let mut reports = Vec::with_capacity(k);
    for (ci, l) in laid.iter().enumerate() {
        let mut comp_box = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (local, &word_id) in l.word_ids.iter().enumerate() {
            let (nx, ny) = map(l.positions[local], offsets[ci]);
            by_word.push((word_id, nx, ny));
            comp_box.0 = comp_box.0.min(nx);
            comp_box.1 = comp_box.1.min(ny);
            comp_box.2 = comp_box.2.max(nx);
            comp_box.3 = comp_box.3.max(ny);
        }
        reports.push(ComponentReport {
            word_ids: l.word_ids.clone(),
            bbox: comp_box,
            spring_length: l.spring_length,
            raw_positions: l.positions.clone(),
            energy_trace: l.outcome.energy_trace.clone(),
            iterations: l.outcome.iterations,
            converged: l.outcome.converged,
            final_energy: l.outcome.final_energy,
        });
    }
    by_word.sort_by_key(|&(id, _, _)| id);
    let positions = by_word
        .into_iter()
        .map(|(word_id, x, y)| NodePosition { word_id, x, y })
        .collect();

    Ok(Embedding {
        positions,
        converged: reports.iter().all(|r| r.converged),
        final_energy: reports.iter().map(|r| r.final_energy).sum(),
        iterations: reports.iter().map(|r| r.iterations).sum(),
        components: reports,
    })
}

fn bbox(points: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semgraph::{GraphEdge, GraphNode};
    use crate::vsm::Measure;
    use approx::assert_abs_diff_eq;

    pub(crate) fn graph_of(n: usize, edges: &[(usize, usize, f64)]) -> SemanticGraph {
        let nodes = (0..n)
            .map(|i| GraphNode {
                word_id: i,
                surface: format!("w{i}"),
                total_freq: 2,
                unit_freq: 1,
            })
            .collect();
        let mut es: Vec<GraphEdge> = edges
            .iter()
            .map(|&(a, b, weight)| GraphEdge {
                a: a.min(b),
                b: a.max(b),
                weight,
            })
            .collect();
        es.sort_by_key(|x| (x.a, x.b));
        SemanticGraph {
            nodes,
            edges: es,
            threshold: 0.0,
            measure: Some(Measure::Cosine),
        }
    }

    #[test]
    fn unit_distances_are_hop_counts() {
        let g = graph_of(3, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let comps = graph_distances(&g, EdgeLengthMode::Unit);
        assert_eq!(comps.len(), 1);
        let d = &comps[0].dist;
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(0, 1), 1.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn inverse_weight_distance_follows_rule() {
        let g = graph_of(2, &[(0, 1, 0.6)]);
        let comps = graph_distances(&g, EdgeLengthMode::InverseWeight);
        assert_abs_diff_eq!(comps[0].dist.get(0, 1), 0.41, epsilon = 1e-12);
    }

    #[test]
    fn triangle_distances_all_one() {
        let g = graph_of(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.9)]);
        let comps = graph_distances(&g, EdgeLengthMode::Unit);
        let d = &comps[0].dist;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 1.0 };
                assert_eq!(d.get(i, j), expect);
            }
        }
    }

    #[test]
    fn energy_of_relaxed_and_coincident_springs() {
        let d = Distances::from_values(2, vec![0.0, 1.0, 1.0, 0.0]);
        // two nodes exactly l apart
        assert_abs_diff_eq!(
            kk_energy(&[(0.0, 0.0), (1.0, 0.0)], &d, 1.0, 1.0),
            0.0,
            epsilon = 1e-15
        );
        // coincident nodes, l = 1, k = 1
        assert_abs_diff_eq!(
            kk_energy(&[(0.0, 0.0), (0.0, 0.0)], &d, 1.0, 1.0),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn equilateral_triangle_is_zero_energy() {
        let mut values = vec![1.0; 9];
        for i in 0..3 {
            values[i * 3 + i] = 0.0;
        }
        let d = Distances::from_values(3, values);
        let l = 0.7;
        let h = l * 3f64.sqrt() / 2.0;
        let positions = [(0.0, 0.0), (l, 0.0), (l / 2.0, h)];
        assert_abs_diff_eq!(kk_energy(&positions, &d, 0.7, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_edge_relaxes_to_spring_length() {
        let d = Distances::from_values(2, vec![0.0, 1.0, 1.0, 0.0]);
        let l = 0.5;
        let mut positions = vec![(0.1, 0.2), (0.15, 0.3)];
        let outcome = relax_component(&mut positions, &d, l, 1.0, 1e-4 * l, 200);
        assert!(outcome.converged);
        let dx = positions[0].0 - positions[1].0;
        let dy = positions[0].1 - positions[1].1;
        let r = (dx * dx + dy * dy).sqrt();
        assert!((r - l).abs() < 1e-3 * l, "distance {r} vs {l}");
        assert!(outcome.final_energy < 1e-6);
    }

    #[test]
    fn path_of_three_reaches_zero_energy() {
        let g = graph_of(3, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let embedding = kk_layout(&g, &LayoutConfig::default()).unwrap();
        assert!(embedding.converged);
        assert!(
            embedding.final_energy < 1e-6 * STIFFNESS,
            "final energy {}",
            embedding.final_energy
        );
    }

    #[test]
    fn triangle_layout_is_equilateral() {
        let g = graph_of(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.9)]);
        let embedding = kk_layout(&g, &LayoutConfig::default()).unwrap();
        let raw = &embedding.components[0].raw_positions;
        let mut sides = Vec::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let dx = raw[i].0 - raw[j].0;
                let dy = raw[i].1 - raw[j].1;
                sides.push((dx * dx + dy * dy).sqrt());
            }
        }
        let mean = sides.iter().sum::<f64>() / 3.0;
        for s in sides {
            assert!((s - mean).abs() / mean < 1e-3, "side {s} vs mean {mean}");
        }
    }

    #[test]
    fn gradients_below_tolerance_on_convergence() {
        let g = graph_of(4, &[(0, 1, 0.9), (1, 2, 0.8), (2, 3, 0.7), (0, 3, 0.6)]);
        let config = LayoutConfig::default();
        let embedding = kk_layout(&g, &config).unwrap();
        assert!(embedding.converged);
        let comps = graph_distances(&g, config.edge_length_mode);
        for (report, comp) in embedding.components.iter().zip(&comps) {
            let tol = config.tolerance * report.spring_length;
            let gmax = max_gradient_norm(
                &report.raw_positions,
                &comp.dist,
                report.spring_length,
                STIFFNESS,
            );
            assert!(gmax < tol, "gradient {gmax} ≥ tol {tol}");
        }
    }

    #[test]
    fn energy_never_increases() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let n = rng.gen_range(2..12);
            let mut edges = Vec::new();
            for i in 1..n {
                let j = rng.gen_range(0..i);
                edges.push((j, i, rng.gen_range(0.1..1.0)));
            }
            let g = graph_of(n, &edges);
            let embedding = kk_layout(&g, &LayoutConfig::default()).unwrap();
            for report in &embedding.components {
                for w in report.energy_trace.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-12,
                        "energy increased: {} -> {}",
                        w[0],
                        w[1]
                    );
                }
            }
        }
    }

    #[test]
    fn layout_is_deterministic() {
        let g = graph_of(5, &[(0, 1, 0.9), (1, 2, 0.8), (2, 3, 0.7), (3, 4, 0.6)]);
        let config = LayoutConfig::default();
        let a = kk_layout(&g, &config).unwrap();
        let b = kk_layout(&g, &config).unwrap();
        assert_eq!(a.positions, b.positions);
        // and a different seed moves things
        let other = kk_layout(
            &g,
            &LayoutConfig {
                seed: 43,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.positions, other.positions);
    }

    #[test]
    fn relabeled_isomorph_reaches_equal_energy() {
        // path 0-1-2 vs relabeled path 2-0-1 (0-2, 2-1 edges)
        let a = graph_of(3, &[(0, 1, 0.9), (1, 2, 0.9)]);
        let b = graph_of(3, &[(0, 2, 0.9), (2, 1, 0.9)]);
        let ea = kk_layout(&a, &LayoutConfig::default()).unwrap();
        let eb = kk_layout(&b, &LayoutConfig::default()).unwrap();
        assert!((ea.final_energy - eb.final_energy).abs() < 1e-9);
    }

    #[test]
    fn components_are_packed_disjointly() {
        let g = graph_of(6, &[(0, 1, 0.9), (1, 2, 0.9), (3, 4, 0.8), (4, 5, 0.8)]);
        let embedding = kk_layout(&g, &LayoutConfig::default()).unwrap();
        assert_eq!(embedding.components.len(), 2);
        let (a, b) = (&embedding.components[0].bbox, &embedding.components[1].bbox);
        let disjoint_x = a.2 < b.0 || b.2 < a.0;
        let disjoint_y = a.3 < b.1 || b.3 < a.1;
        assert!(disjoint_x || disjoint_y, "boxes overlap: {a:?} {b:?}");
        for p in &embedding.positions {
            assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
        }
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = graph_of(0, &[]);
        assert!(matches!(
            kk_layout(&g, &LayoutConfig::default()),
            Err(Error::EmptyGraph)
        ));
    }
}

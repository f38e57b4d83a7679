//! Serialization of pipeline artifacts: Pajek networks, CSV matrices,
//! frequency lists, SVG maps, and the JSON run report.
//!
//! Every writer is deterministic byte-for-byte: fixed decimal formatting,
//! locale-independent, LF line endings.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factors::FactorModel;
use crate::layout::{Embedding, NodePosition};
use crate::lexicon::Vocabulary;
use crate::semgraph::{GraphEdge, GraphNode, SemanticGraph};
use crate::vsm::{CooccurrenceMatrix, OccurrenceMatrix, SimilarityMatrix};

/// The 6-decimal quantization applied by the text formats.
pub fn quantize(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_embedding(g: &SemanticGraph, e: &Embedding) -> Result<()> {
    if g.n_nodes() != e.positions.len() {
        return Err(Error::NodeCountMismatch {
            graph: g.n_nodes(),
            embedding: e.positions.len(),
        });
    }
    for (node, pos) in g.nodes.iter().zip(&e.positions) {
        if node.word_id != pos.word_id {
            return Err(Error::Config(format!(
                "embedding does not cover graph node '{}'",
                node.surface
            )));
        }
    }
    Ok(())
}

/// Render the fixed Pajek dialect: `*Vertices N`, vertex lines
/// `i "surface" x y` with 1-based ids in word-id order, `*Edges`, then
/// `i j w` with i < j sorted by (i, j); 6 decimals, LF endings.
pub fn pajek_string(g: &SemanticGraph, e: &Embedding) -> Result<String> {
    if g.is_empty() {
        return Err(Error::PajekEmptyGraph);
    }
    check_embedding(g, e)?;
    let index_of: HashMap<usize, usize> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.word_id, i + 1))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "*Vertices {}", g.n_nodes());
    for (node, pos) in g.nodes.iter().zip(&e.positions) {
        let _ = writeln!(
            out,
            "{} \"{}\" {:.6} {:.6}",
            index_of[&node.word_id], node.surface, pos.x, pos.y
        );
    }
    let _ = writeln!(out, "*Edges");
    for edge in &g.edges {
        let _ = writeln!(
            out,
            "{} {} {:.6}",
            index_of[&edge.a], index_of[&edge.b], edge.weight
        );
    }
    Ok(out)
}

pub fn write_pajek(g: &SemanticGraph, e: &Embedding, path: &Path) -> Result<()> {
    write_bytes(path, pajek_string(g, e)?.as_bytes())
}

/// Parse the dialect written by [`write_pajek`]; the inverse of the writer
/// on its own output. Word frequencies, threshold, and measure tag are not
/// carried by the format and come back as zero/absent.
pub fn read_pajek(path: &Path) -> Result<(SemanticGraph, Embedding)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_pajek(&text, path)
}

pub fn parse_pajek(text: &str, path: &Path) -> Result<(SemanticGraph, Embedding)> {
    let fail = |line: usize, message: String| Error::PajekParse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| fail(1, "empty file".into()))?;
    let header = header.trim();
    let n: usize = header
        .strip_prefix("*Vertices ")
        .or_else(|| header.strip_prefix("*vertices "))
        .ok_or_else(|| fail(line_no + 1, format!("expected `*Vertices N`, got '{header}'")))?
        .trim()
        .parse()
        .map_err(|_| fail(line_no + 1, "bad vertex count".into()))?;
    if n == 0 {
        return Err(fail(line_no + 1, "zero vertices".into()));
    }

    let mut nodes = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for expected in 1..=n {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| fail(expected + 1, "missing vertex line".into()))?;
        let line_no = line_no + 1;
        let line = line.trim();
        let (idx_str, rest) = line
            .split_once(' ')
            .ok_or_else(|| fail(line_no, "malformed vertex line".into()))?;
        let idx: usize = idx_str
            .parse()
            .map_err(|_| fail(line_no, format!("bad vertex id '{idx_str}'")))?;
        if idx != expected {
            return Err(fail(
                line_no,
                format!("vertex id {idx} out of order (expected {expected})"),
            ));
        }
        let open = rest
            .find('"')
            .ok_or_else(|| fail(line_no, "missing quoted label".into()))?;
        let close = rest[open + 1..]
            .find('"')
            .ok_or_else(|| fail(line_no, "unterminated label".into()))?;
        let surface = rest[open + 1..open + 1 + close].to_owned();
        let coords: Vec<&str> = rest[open + close + 2..].split_whitespace().collect();
        if coords.len() != 2 {
            return Err(fail(line_no, "expected two coordinates".into()));
        }
        let x: f64 = coords[0]
            .parse()
            .map_err(|_| fail(line_no, "bad x coordinate".into()))?;
        let y: f64 = coords[1]
            .parse()
            .map_err(|_| fail(line_no, "bad y coordinate".into()))?;
        nodes.push(GraphNode {
            word_id: expected - 1,
            surface,
            total_freq: 0,
            unit_freq: 0,
        });
        positions.push(NodePosition {
            word_id: expected - 1,
            x,
            y,
        });
    }

    let (line_no, section) = lines
        .next()
        .ok_or_else(|| fail(n + 2, "missing *Edges section".into()))?;
    let section = section.trim();
    if !section.eq_ignore_ascii_case("*Edges") {
        return Err(fail(
            line_no + 1,
            format!("unsupported section '{section}' (only *Edges is understood)"),
        ));
    }

    let mut edges = Vec::new();
    for (line_no, line) in lines {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('*') {
            return Err(fail(
                line_no,
                format!("unsupported section '{line}' (only *Edges is understood)"),
            ));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(fail(line_no, "expected `i j w` edge line".into()));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| fail(line_no, "bad edge endpoint".into()))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| fail(line_no, "bad edge endpoint".into()))?;
        let w: f64 = parts[2]
            .parse()
            .map_err(|_| fail(line_no, "bad edge weight".into()))?;
        if i < 1 || j < 1 || i > n || j > n || i == j {
            return Err(fail(line_no, format!("edge {i}-{j} out of range")));
        }
        edges.push(GraphEdge {
            a: i.min(j) - 1,
            b: i.max(j) - 1,
            weight: w,
        });
    }
    edges.sort_by_key(|x| (x.a, x.b));

    let graph = SemanticGraph {
        nodes,
        edges,
        threshold: 0.0,
        measure: None,
    };
    let embedding = Embedding {
        positions,
        components: Vec::new(),
        converged: true,
        final_energy: 0.0,
        iterations: 0,
    };
    Ok((graph, embedding))
}

/// SVG emission options.
#[derive(Debug, Clone, Copy, Default)]
pub struct SvgOptions {
    /// Scale node radius with sqrt(unit_freq) instead of a uniform size.
    pub size_by_unit_freq: bool,
}

const SVG_SIDE: f64 = 800.0;
const SVG_MARGIN: f64 = 60.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Deterministic SVG: one line per edge (stroke width linear in weight),
/// one circle and one text label per node.
pub fn svg_string(g: &SemanticGraph, e: &Embedding, options: SvgOptions) -> Result<String> {
    if g.is_empty() {
        return Err(Error::PajekEmptyGraph);
    }
    check_embedding(g, e)?;
    let place = |v: f64| SVG_MARGIN + v * (SVG_SIDE - 2.0 * SVG_MARGIN);
    let pos_of: HashMap<usize, (f64, f64)> = e
        .positions
        .iter()
        .map(|p| (p.word_id, (place(p.x), place(p.y))))
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIDE}\" height=\"{SVG_SIDE}\" viewBox=\"0 0 {SVG_SIDE} {SVG_SIDE}\">"
    );
    match g.measure {
        Some(measure) => {
            let _ = writeln!(
                out,
                "<desc>semantic map, {} threshold {:.6}</desc>",
                measure, g.threshold
            );
        }
        None => {
            let _ = writeln!(out, "<desc>semantic map</desc>");
        }
    }
    for edge in &g.edges {
        let (x1, y1) = pos_of[&edge.a];
        let (x2, y2) = pos_of[&edge.b];
        let width = (0.5 + 2.0 * edge.weight).max(0.1);
        let _ = writeln!(
            out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#8a8a8a\" stroke-width=\"{width:.2}\"/>"
        );
    }
    for node in &g.nodes {
        let (cx, cy) = pos_of[&node.word_id];
        let r = if options.size_by_unit_freq {
            4.0 * f64::from(node.unit_freq).sqrt()
        } else {
            5.0
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" fill=\"#3b6ea5\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            cx + r + 2.0,
            cy + 3.0,
            xml_escape(&node.surface)
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

pub fn write_svg(g: &SemanticGraph, e: &Embedding, options: SvgOptions, path: &Path) -> Result<()> {
    write_bytes(path, svg_string(g, e, options)?.as_bytes())
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// CSV with a header row and a leading label column.
pub fn write_matrix_csv(
    cells: &[Vec<String>],
    row_labels: &[String],
    col_labels: &[String],
    path: &Path,
) -> Result<()> {
    if cells.len() != row_labels.len()
        || cells.iter().any(|row| row.len() != col_labels.len())
    {
        return Err(Error::LabelMismatch {
            labels: row_labels.len(),
            dim: cells.len(),
        });
    }
    let mut out = String::new();
    let header: Vec<String> = std::iter::once(String::new())
        .chain(col_labels.iter().map(|l| csv_escape(l)))
        .collect();
    let _ = writeln!(out, "{}", header.join(","));
    for (label, row) in row_labels.iter().zip(cells) {
        let line: Vec<String> = std::iter::once(csv_escape(label))
            .chain(row.iter().cloned())
            .collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    write_bytes(path, out.as_bytes())
}

pub fn write_occurrence_csv(m: &OccurrenceMatrix, path: &Path) -> Result<()> {
    let col_labels: Vec<String> = m.words.iter().map(|w| w.surface.clone()).collect();
    let cells: Vec<Vec<String>> = (0..m.n_rows())
        .map(|r| (0..m.n_cols()).map(|c| m.cell(r, c).to_string()).collect())
        .collect();
    write_matrix_csv(&cells, &m.rows, &col_labels, path)
}

pub fn write_cooccurrence_csv(c: &CooccurrenceMatrix, path: &Path) -> Result<()> {
    let n = c.n();
    let cells: Vec<Vec<String>> = (0..n)
        .map(|i| (0..n).map(|j| c.get(i, j).to_string()).collect())
        .collect();
    write_matrix_csv(&cells, &c.labels, &c.labels, path)
}

pub fn write_similarity_csv(s: &SimilarityMatrix, path: &Path) -> Result<()> {
    let n = s.n();
    let cells: Vec<Vec<String>> = (0..n)
        .map(|i| (0..n).map(|j| format!("{:.6}", s.get(i, j))).collect())
        .collect();
    write_matrix_csv(&cells, s.labels(), s.labels(), path)
}

/// TSV `word<TAB>total_freq<TAB>unit_freq`, descending total frequency with
/// lexicographic tie-break (the vocabulary's id order).
pub fn write_freqlist(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in vocab.entries() {
        let _ = writeln!(out, "{}\t{}\t{}", e.surface, e.total_freq, e.unit_freq);
    }
    write_bytes(path, out.as_bytes())
}

/// Loadings table: words × retained factors, preceded by eigenvalue and
/// variance rows.
pub fn write_loadings_csv(model: &FactorModel, path: &Path) -> Result<()> {
    let k = model.k;
    let mut out = String::new();
    let header: Vec<String> = std::iter::once("word".to_owned())
        .chain((1..=k).map(|f| format!("factor_{f}")))
        .collect();
    let _ = writeln!(out, "{}", header.join(","));
    let eig_row: Vec<String> = std::iter::once("eigenvalue".to_owned())
        .chain((0..k).map(|f| format!("{:.6}", model.eigenvalues[f])))
        .collect();
    let _ = writeln!(out, "{}", eig_row.join(","));
    let var_row: Vec<String> = std::iter::once("variance_explained".to_owned())
        .chain((0..k).map(|f| format!("{:.6}", model.variance_explained[f])))
        .collect();
    let _ = writeln!(out, "{}", var_row.join(","));
    for (w, label) in model.labels.iter().enumerate() {
        let row: Vec<String> = std::iter::once(csv_escape(label))
            .chain((0..k).map(|f| format!("{:.6}", model.loadings[w][f])))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    write_bytes(path, out.as_bytes())
}

/// Reproducibility envelope written at the end of every run. Field order is
/// the canonical key order of the JSON.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub config: ConfigEcho,
    pub corpus: CorpusStats,
    pub graph: GraphStats,
    pub layout: Option<LayoutStats>,
    pub factors: Option<FactorStats>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConfigEcho {
    pub manifest: String,
    pub granularity: String,
    pub mode: String,
    pub measure: String,
    pub matrix_mode: String,
    pub min_freq: u32,
    pub max_words: usize,
    pub threshold: f64,
    pub edge_length: String,
    pub seed: u64,
    pub stopwords: String,
    pub retention: String,
    pub size_nodes: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CorpusStats {
    pub documents: usize,
    pub units: usize,
    pub tokens_raw: u64,
    pub tokens_kept: u64,
    pub vocabulary_size: usize,
    pub selected_words: usize,
    pub effective_min_freq: u32,
    pub tie_break_fallback: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub density: f64,
    pub pruned_words: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LayoutStats {
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FactorStats {
    pub retained: usize,
    pub dropped_constant_words: Vec<String>,
}

/// Canonical-key-order JSON, pretty-printed, trailing newline.
pub fn report_string(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    write_bytes(path, report_string(report).as_bytes())
}

/// Lenient JSON load for report comparison.
pub fn read_report_value(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Report {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

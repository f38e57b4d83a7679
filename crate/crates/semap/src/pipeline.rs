//! End-to-end orchestration: corpus → lexicon → vsm → semgraph → layout →
//! factors → export, plus run-report comparison.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{extract_text, load_corpus, segment, Granularity, TextUnit};
use crate::error::{Error, Result};
use crate::export::{
    read_report_value, write_cooccurrence_csv, write_freqlist, write_loadings_csv,
    write_occurrence_csv, write_pajek, write_report, write_similarity_csv, write_svg,
    ConfigEcho, CorpusStats, FactorStats, GraphStats, LayoutStats, RunReport, SvgOptions,
    ToolInfo,
};
use crate::factors::{correlation_matrix, factor_analysis, Retention};
use crate::layout::{kk_layout, LayoutConfig};
use crate::lexicon::{build_vocabulary, select_words, StopWordList};
use crate::semgraph::{build_graph, components, default_threshold, prune_isolated, DiscourseMode};
use crate::vsm::{
    build_occurrence_matrix, cooccurrence, cosine_similarity, pearson_similarity, MatrixMode,
    Measure, OccurrenceMatrix,
};

/// Resolved settings for one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub granularity: Granularity,
    pub mode: DiscourseMode,
    pub min_freq: u32,
    pub max_words: usize,
    /// Explicit threshold; `None` resolves to the mode default.
    pub threshold: Option<f64>,
    pub measure: Measure,
    pub matrix_mode: MatrixMode,
    pub layout: LayoutConfig,
    pub retention: Retention,
    /// Scale map vertices with sqrt(unit_freq).
    pub size_nodes: bool,
    pub stopwords: Option<PathBuf>,
    /// Worker threads; `None` uses the default pool. Not echoed in the
    /// report: outputs are identical for any thread count.
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn new(manifest: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            manifest: manifest.into(),
            out_dir: out_dir.into(),
            granularity: Granularity::Paragraph,
            mode: DiscourseMode::Elaborate,
            min_freq: 2,
            max_words: 100,
            threshold: None,
            measure: Measure::Cosine,
            matrix_mode: MatrixMode::Counts,
            layout: LayoutConfig::default(),
            retention: Retention::Kaiser,
            size_nodes: false,
            stopwords: None,
            threads: None,
        }
    }

    /// The threshold a run will actually apply.
    pub fn effective_threshold(&self) -> f64 {
        self.threshold.unwrap_or_else(|| default_threshold(self.mode))
    }
}

/// Run the full pipeline and write every artifact into the output
/// directory: occurrence.csv, cooc.csv, {measure}.csv, freq.tsv, map.net,
/// map.svg, loadings.csv, report.json.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    match config.threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_pipeline_inner(config))
        }
        _ => run_pipeline_inner(config),
    }
}

fn run_pipeline_inner(config: &PipelineConfig) -> Result<RunReport> {
    let mut warnings: Vec<String> = Vec::new();
    let threshold = config.effective_threshold();
    let stoplist = match &config.stopwords {
        Some(path) => StopWordList::from_file(path).map_err(|e| e.in_stage("lexicon"))?,
        None => StopWordList::bundled(),
    };

    // corpus_io
    let docs = load_corpus(&config.manifest).map_err(|e| e.in_stage("corpus_io"))?;
    if docs.is_empty() {
        warnings.push("manifest names no documents".to_owned());
    }
    let extracted: Vec<_> = docs.par_iter().map(extract_text).collect();
    let mut units: Vec<TextUnit> = Vec::new();
    for (doc, (clean, notes)) in docs.iter().zip(&extracted) {
        if notes.replaced > 0 {
            warnings.push(format!(
                "document {} ({}): {} undecodable byte sequence(s) replaced",
                doc.doc_id,
                doc.path.display(),
                notes.replaced
            ));
        }
        if clean.body.is_empty() {
            warnings.push(format!(
                "document {} ({}) is empty after extraction",
                doc.doc_id,
                doc.path.display()
            ));
            continue;
        }
        if config.granularity == Granularity::Title && clean.title.trim().is_empty() {
            warnings.push(format!(
                "document {} has no title; no unit in title mode",
                doc.doc_id
            ));
        }
        units.extend(segment(clean, config.granularity));
    }

    // lexicon
    let vocab = build_vocabulary(&units, &stoplist);
    if vocab.is_empty() {
        warnings.push("corpus yields an empty vocabulary".to_owned());
    }
    let selection =
        select_words(&vocab, config.min_freq, config.max_words).map_err(|e| e.in_stage("lexicon"))?;
    if selection.is_empty() {
        warnings.push(format!(
            "no word reaches min_freq {}; selection is empty",
            config.min_freq
        ));
    }
    if selection.tie_break_fallback {
        warnings.push(format!(
            "top frequency tier exceeds the {}-word cap; lexicographic tie-break applied",
            config.max_words
        ));
    }

    // vsm
    let matrix = build_occurrence_matrix(&units, &selection, config.matrix_mode)
        .map_err(|e| e.in_stage("vsm"))?;
    let cooc = cooccurrence(&matrix);
    let similarity = match config.measure {
        Measure::Cosine => cosine_similarity(&matrix),
        Measure::Pearson => pearson_similarity(&matrix),
    }
    .map_err(|e| e.in_stage("vsm"))?;

    // semgraph
    let graph =
        build_graph(&similarity, &matrix.words, threshold).map_err(|e| e.in_stage("semgraph"))?;
    let pruned = prune_isolated(&graph);
    if !pruned.removed.is_empty() {
        warnings.push(format!(
            "pruned {} unconnected word(s): {}",
            pruned.removed.len(),
            pruned.removed.join(", ")
        ));
    }
    let component_list = components(&pruned.graph);

    // layout
    let (embedding, layout_stats) = if pruned.graph.is_empty() {
        warnings.push(format!(
            "graph is empty at threshold {threshold}; skipping layout, map.net, and map.svg"
        ));
        (None, None)
    } else {
        let embedding = kk_layout(&pruned.graph, &config.layout).map_err(|e| e.in_stage("layout"))?;
        if !embedding.converged {
            warnings.push("layout hit the iteration cap before convergence".to_owned());
        }
        let stats = LayoutStats {
            energy: embedding.final_energy,
            iterations: embedding.iterations,
            converged: embedding.converged,
        };
        (Some(embedding), Some(stats))
    };

    // factors: constant columns are dropped and reported, not hidden
    let (factor_model, factor_stats) = {
        let n_rows = matrix.n_rows();
        let mut kept_words = Vec::new();
        let mut kept_columns = Vec::new();
        let mut dropped = Vec::new();
        for (j, word) in matrix.words.iter().enumerate() {
            let col = matrix.column(j);
            let constant =
                col.len() == n_rows && col.iter().all(|&(_, v)| v == col[0].1);
            if constant {
                dropped.push(word.surface.clone());
            } else {
                kept_words.push(word.clone());
                kept_columns.push(col.to_vec());
            }
        }
        if !dropped.is_empty() {
            warnings.push(format!(
                "factor analysis dropped constant word column(s): {}",
                dropped.join(", ")
            ));
        }
        if kept_words.is_empty() || n_rows < 2 {
            warnings.push("factor analysis skipped: no non-constant word columns".to_owned());
            (None, None)
        } else {
            let reduced = OccurrenceMatrix::from_columns(
                matrix.rows.clone(),
                kept_words,
                matrix.mode,
                kept_columns,
            );
            let corr = correlation_matrix(&reduced).map_err(|e| e.in_stage("factors"))?;
            let model =
                factor_analysis(&corr, config.retention).map_err(|e| e.in_stage("factors"))?;
            let stats = FactorStats {
                retained: model.k,
                dropped_constant_words: dropped,
            };
            (Some(model), Some(stats))
        }
    };

    // export_io
    std::fs::create_dir_all(&config.out_dir).map_err(|source| Error::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let out = |name: &str| config.out_dir.join(name);
    write_occurrence_csv(&matrix, &out("occurrence.csv")).map_err(|e| e.in_stage("export_io"))?;
    write_cooccurrence_csv(&cooc, &out("cooc.csv")).map_err(|e| e.in_stage("export_io"))?;
    let similarity_file = format!("{}.csv", config.measure);
    write_similarity_csv(&similarity, &out(&similarity_file))
        .map_err(|e| e.in_stage("export_io"))?;
    write_freqlist(&vocab, &out("freq.tsv")).map_err(|e| e.in_stage("export_io"))?;
    if let Some(embedding) = &embedding {
        write_pajek(&pruned.graph, embedding, &out("map.net"))
            .map_err(|e| e.in_stage("export_io"))?;
        write_svg(
            &pruned.graph,
            embedding,
            SvgOptions {
                size_by_unit_freq: config.size_nodes,
            },
            &out("map.svg"),
        )
        .map_err(|e| e.in_stage("export_io"))?;
    }
    if let Some(model) = &factor_model {
        write_loadings_csv(model, &out("loadings.csv")).map_err(|e| e.in_stage("export_io"))?;
    }

    let report = RunReport {
        tool: ToolInfo::default(),
        config: ConfigEcho {
            manifest: config.manifest.display().to_string(),
            granularity: config.granularity.to_string(),
            mode: config.mode.to_string(),
            measure: config.measure.to_string(),
            matrix_mode: config.matrix_mode.to_string(),
            min_freq: config.min_freq,
            max_words: config.max_words,
            threshold,
            edge_length: config.layout.edge_length_mode.to_string(),
            seed: config.layout.seed,
            stopwords: stoplist.origin().to_string(),
            retention: config.retention.to_string(),
            size_nodes: config.size_nodes,
        },
        corpus: CorpusStats {
            documents: docs.len(),
            units: units.len(),
            tokens_raw: vocab.raw_token_count,
            tokens_kept: vocab.token_count,
            vocabulary_size: vocab.len(),
            selected_words: selection.len(),
            effective_min_freq: selection.min_freq,
            tie_break_fallback: selection.tie_break_fallback,
        },
        graph: GraphStats {
            nodes: pruned.graph.n_nodes(),
            edges: pruned.graph.n_edges(),
            components: component_list.len(),
            density: pruned.graph.density(),
            pruned_words: pruned.removed.clone(),
        },
        layout: layout_stats,
        factors: factor_stats,
        warnings,
    };
    write_report(&report, &out("report.json")).map_err(|e| e.in_stage("export_io"))?;
    Ok(report)
}

fn int_at(value: &serde_json::Value, pointer: &str) -> Option<i64> {
    value.pointer(pointer).and_then(serde_json::Value::as_i64)
}

fn float_at(value: &serde_json::Value, pointer: &str) -> Option<f64> {
    value.pointer(pointer).and_then(serde_json::Value::as_f64)
}

/// Tabulate graph-stat deltas between two run reports; best effort when a
/// field is missing or versions differ.
pub fn compare_runs(path_a: &Path, path_b: &Path) -> Result<String> {
    let a = read_report_value(path_a)?;
    let b = read_report_value(path_b)?;
    let mut out = String::new();
    let _ = writeln!(out, "run comparison");
    let _ = writeln!(out, "  a: {}", path_a.display());
    let _ = writeln!(out, "  b: {}", path_b.display());
    let version_a = a.pointer("/tool/version").and_then(|v| v.as_str());
    let version_b = b.pointer("/tool/version").and_then(|v| v.as_str());
    if version_a != version_b {
        let _ = writeln!(
            out,
            "  warning: tool versions differ ({} vs {}); best-effort diff",
            version_a.unwrap_or("n/a"),
            version_b.unwrap_or("n/a")
        );
    }
    let _ = writeln!(
        out,
        "  {:<16} {:>12} {:>12} {:>12}",
        "field", "a", "b", "delta"
    );
    let int_fields = [
        ("nodes", "/graph/nodes"),
        ("edges", "/graph/edges"),
        ("components", "/graph/components"),
        ("selected words", "/corpus/selected_words"),
        ("units", "/corpus/units"),
    ];
    for (name, pointer) in int_fields {
        match (int_at(&a, pointer), int_at(&b, pointer)) {
            (Some(va), Some(vb)) => {
                let _ = writeln!(
                    out,
                    "  {:<16} {:>12} {:>12} {:>+12}",
                    name,
                    va,
                    vb,
                    vb - va
                );
            }
            (va, vb) => {
                let _ = writeln!(
                    out,
                    "  {:<16} {:>12} {:>12} {:>12}",
                    name,
                    va.map_or("n/a".to_owned(), |v| v.to_string()),
                    vb.map_or("n/a".to_owned(), |v| v.to_string()),
                    "n/a"
                );
            }
        }
    }
    match (float_at(&a, "/graph/density"), float_at(&b, "/graph/density")) {
        (Some(da), Some(db)) => {
            let _ = writeln!(
                out,
                "  {:<16} {:>12.4} {:>12.4} {:>+12.4}",
                "density", da, db, db - da
            );
        }
        (da, db) => {
            let _ = writeln!(
                out,
                "  {:<16} {:>12} {:>12} {:>12}",
                "density",
                da.map_or("n/a".to_owned(), |v| format!("{v:.4}")),
                db.map_or("n/a".to_owned(), |v| format!("{v:.4}")),
                "n/a"
            );
        }
    }
    Ok(out)
}

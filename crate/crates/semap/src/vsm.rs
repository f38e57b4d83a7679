//! The vector-space model: asymmetric unit×word matrices and the
//! co-occurrence and similarity matrices derived from them.
//!
//! Words are the variables; every similarity is computed between word
//! columns. Per-pair accumulation order is fixed (ascending row index) so
//! results are independent of the parallel schedule.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::corpus::TextUnit;
use crate::error::{Error, Result};
use crate::lexicon::{normalize, tokenize, VocabEntry, WordSelection};

/// Whether matrix cells hold raw counts or 1/0 incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    Counts,
    Binary,
}

impl MatrixMode {
    pub fn parse(s: &str) -> Option<MatrixMode> {
        match s.to_ascii_lowercase().as_str() {
            "counts" => Some(MatrixMode::Counts),
            "binary" => Some(MatrixMode::Binary),
            _ => None,
        }
    }
}

impl fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixMode::Counts => write!(f, "counts"),
            MatrixMode::Binary => write!(f, "binary"),
        }
    }
}

/// Similarity measure tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Cosine,
    Pearson,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Measure> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Some(Measure::Cosine),
            "pearson" => Some(Measure::Pearson),
            _ => None,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Cosine => write!(f, "cosine"),
            Measure::Pearson => write!(f, "pearson"),
        }
    }
}

/// Sparse asymmetric units×words count matrix, stored column-major: each
/// word column is a sorted (row, count) list.
#[derive(Debug, Clone)]
pub struct OccurrenceMatrix {
    /// Unit ids, in unit order (the cases).
    pub rows: Vec<String>,
    /// Selected words, in word-id order (the variables).
    pub words: Vec<VocabEntry>,
    pub mode: MatrixMode,
    columns: Vec<Vec<(u32, u32)>>,
}

impl OccurrenceMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.words.len()
    }

    pub fn column(&self, j: usize) -> &[(u32, u32)] {
        &self.columns[j]
    }

    /// Cell (row, col) as a count; zero when absent.
    pub fn cell(&self, row: usize, col: usize) -> u32 {
        self.columns[col]
            .binary_search_by_key(&(row as u32), |&(r, _)| r)
            .map(|i| self.columns[col][i].1)
            .unwrap_or(0)
    }

    /// Build directly from columns; rows ascending within each column.
    /// Intended for tests and adapters; the pipeline uses
    /// [`build_occurrence_matrix`].
    pub fn from_columns(
        rows: Vec<String>,
        words: Vec<VocabEntry>,
        mode: MatrixMode,
        columns: Vec<Vec<(u32, u32)>>,
    ) -> Self {
        debug_assert_eq!(words.len(), columns.len());
        debug_assert!(columns
            .iter()
            .all(|c| c.windows(2).all(|w| w[0].0 < w[1].0)));
        OccurrenceMatrix {
            rows,
            words,
            mode,
            columns,
        }
    }
}

/// Count selected words per unit into the asymmetric matrix. Columns that
/// end up all-zero are removed with a warning (cannot happen when the
/// selection was derived from the same units).
pub fn build_occurrence_matrix(
    units: &[TextUnit],
    selection: &WordSelection,
    mode: MatrixMode,
) -> Result<OccurrenceMatrix> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let col_of: HashMap<&str, usize> = selection
        .selected
        .iter()
        .enumerate()
        .map(|(j, e)| (e.surface.as_str(), j))
        .collect();

    // Per-unit counting is pure; the merge below follows unit order.
    let per_unit: Vec<HashMap<usize, u32>> = units
        .par_iter()
        .map(|unit| {
            let mut counts: HashMap<usize, u32> = HashMap::new();
            for token in tokenize(&unit.text) {
                let word = normalize(&token);
                if let Some(&j) = col_of.get(word.as_str()) {
                    *counts.entry(j).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect();

    let mut columns: Vec<Vec<(u32, u32)>> = vec![Vec::new(); selection.len()];
    for (row, counts) in per_unit.iter().enumerate() {
        let mut cols: Vec<(&usize, &u32)> = counts.iter().collect();
        cols.sort_unstable_by_key(|(j, _)| **j);
        for (&j, &c) in cols {
            let value = match mode {
                MatrixMode::Counts => c,
                MatrixMode::Binary => 1,
            };
            columns[j].push((row as u32, value));
        }
    }

    let mut rows_out = Vec::with_capacity(units.len());
    for unit in units {
        rows_out.push(unit.unit_id.clone());
    }

    let mut words = Vec::new();
    let mut kept_columns = Vec::new();
    for (j, col) in columns.into_iter().enumerate() {
        if col.is_empty() {
            log::warn!(
                "word '{}' occurs in no unit; dropping its column",
                selection.selected[j].surface
            );
            continue;
        }
        words.push(selection.selected[j].clone());
        kept_columns.push(col);
    }

    Ok(OccurrenceMatrix {
        rows: rows_out,
        words,
        mode,
        columns: kept_columns,
    })
}

/// Dense square word×word matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    pub labels: Vec<String>,
    values: Vec<T>,
}

impl<T: Copy> SquareMatrix<T> {
    pub fn new(labels: Vec<String>, values: Vec<T>) -> Self {
        assert_eq!(labels.len() * labels.len(), values.len());
        SquareMatrix { labels, values }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.labels.len() + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Symmetric word×word co-occurrence counts, diagonal included.
pub type CooccurrenceMatrix = SquareMatrix<u64>;

/// Symmetric word×word similarities.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub measure: Measure,
    pub matrix: SquareMatrix<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn labels(&self) -> &[String] {
        &self.matrix.labels
    }
}

fn sparse_dot(a: &[(u32, u32)], b: &[(u32, u32)]) -> u64 {
    let mut sum = 0u64;
    let mut ia = 0;
    let mut ib = 0;
    while ia < a.len() && ib < b.len() {
        match a[ia].0.cmp(&b[ib].0) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                sum += u64::from(a[ia].1) * u64::from(b[ib].1);
                ia += 1;
                ib += 1;
            }
        }
    }
    sum
}

/// The transpose product: cell (i, j) = Σ_u m[u,i]·m[u,j]. In binary mode
/// the off-diagonal is the number of units containing both words.
pub fn cooccurrence(m: &OccurrenceMatrix) -> CooccurrenceMatrix {
    let n = m.n_cols();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect();
    let dots: Vec<u64> = pairs
        .par_iter()
        .map(|&(i, j)| sparse_dot(m.column(i), m.column(j)))
        .collect();
    let mut values = vec![0u64; n * n];
    for (&(i, j), &d) in pairs.iter().zip(&dots) {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    SquareMatrix::new(m.words.iter().map(|w| w.surface.clone()).collect(), values)
}

/// Salton's cosine between word columns:
/// dot(x, y) / (‖x‖·‖y‖), accumulated in ascending row order.
pub fn cosine_similarity(m: &OccurrenceMatrix) -> Result<SimilarityMatrix> {
    let n = m.n_cols();
    let norms: Vec<f64> = (0..n)
        .map(|j| {
            m.column(j)
                .iter()
                .map(|&(_, v)| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    for (j, &norm) in norms.iter().enumerate() {
        if norm == 0.0 {
            return Err(Error::ZeroColumn {
                word: m.words[j].surface.clone(),
            });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let sims: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| sparse_dot(m.column(i), m.column(j)) as f64 / (norms[i] * norms[j]))
        .collect();
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    for (&(i, j), &s) in pairs.iter().zip(&sims) {
        values[i * n + j] = s;
        values[j * n + i] = s;
    }
    Ok(SimilarityMatrix {
        measure: Measure::Cosine,
        matrix: SquareMatrix::new(m.words.iter().map(|w| w.surface.clone()).collect(), values),
    })
}

/// Pearson correlation between word columns: the cosine computed after
/// normalizing each column to its mean over all units.
pub fn pearson_similarity(m: &OccurrenceMatrix) -> Result<SimilarityMatrix> {
    let n = m.n_cols();
    let n_rows = m.n_rows();
    // Densify columns once; correlations need the zero cells.
    let dense: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut col = vec![0.0f64; n_rows];
            for &(r, v) in m.column(j) {
                col[r as usize] = f64::from(v);
            }
            col
        })
        .collect();
    let centered: Vec<Vec<f64>> = dense
        .iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / n_rows as f64;
            col.iter().map(|&v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|col| col.iter().map(|&v| v * v).sum::<f64>().sqrt())
        .collect();
    for (j, &norm) in norms.iter().enumerate() {
        if norm == 0.0 {
            return Err(Error::ConstantColumn {
                word: m.words[j].surface.clone(),
            });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let sims: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let num: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(&a, &b)| a * b)
                .sum();
            num / (norms[i] * norms[j])
        })
        .collect();
    let mut values = vec![0.0f64; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    for (&(i, j), &s) in pairs.iter().zip(&sims) {
        values[i * n + j] = s;
        values[j * n + i] = s;
    }
    Ok(SimilarityMatrix {
        measure: Measure::Pearson,
        matrix: SquareMatrix::new(m.words.iter().map(|w| w.surface.clone()).collect(), values),
    })
}

/// Direct test-only construction from dense cells.
#[cfg(test)]
pub(crate) fn matrix_from_dense(cells: &[Vec<u32>], mode: MatrixMode) -> OccurrenceMatrix {
    let n_rows = cells.len();
    let n_cols = cells.first().map_or(0, Vec::len);
    let rows = (0..n_rows).map(|r| format!("u{r}")).collect();
    let words = (0..n_cols)
        .map(|j| VocabEntry {
            word_id: j,
            surface: format!("w{j:03}q"),
            total_freq: 1,
            unit_freq: 1,
        })
        .collect();
    let columns = (0..n_cols)
        .map(|j| {
            (0..n_rows)
                .filter(|&r| cells[r][j] != 0)
                .map(|r| {
                    let v = match mode {
                        MatrixMode::Counts => cells[r][j],
                        MatrixMode::Binary => 1,
                    };
                    (r as u32, v)
                })
                .collect()
        })
        .collect();
    OccurrenceMatrix::from_columns(rows, words, mode, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Granularity, TextUnit};
    use crate::lexicon::{build_vocabulary, select_words, StopWordList};
    use approx::assert_abs_diff_eq;

    fn units_of(texts: &[&str]) -> Vec<TextUnit> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| TextUnit {
                unit_id: format!("d0:p{i}"),
                doc_id: 0,
                granularity: Granularity::Paragraph,
                ordinal: i,
                text: (*t).to_owned(),
            })
            .collect()
    }

    fn matrix_from(texts: &[&str], min_freq: u32, mode: MatrixMode) -> OccurrenceMatrix {
        let units = units_of(texts);
        let list = StopWordList::bundled();
        let vocab = build_vocabulary(&units, &list);
        let selection = select_words(&vocab, min_freq, 100).unwrap();
        build_occurrence_matrix(&units, &selection, mode).unwrap()
    }

    use super::matrix_from_dense;

    #[test]
    fn counts_and_binary_cells() {
        let m = matrix_from(&["cell gene cell", "gene"], 1, MatrixMode::Counts);
        // word_id order: cell(total 2) then gene(total 2): lexicographic tie
        assert_eq!(m.words[0].surface, "cell");
        assert_eq!(m.words[1].surface, "gene");
        assert_eq!(
            [m.cell(0, 0), m.cell(0, 1), m.cell(1, 0), m.cell(1, 1)],
            [2, 1, 0, 1]
        );

        let b = matrix_from(&["cell gene cell", "gene"], 1, MatrixMode::Binary);
        assert_eq!(
            [b.cell(0, 0), b.cell(0, 1), b.cell(1, 0), b.cell(1, 1)],
            [1, 1, 0, 1]
        );
    }

    #[test]
    fn empty_selection_is_an_error() {
        let units = units_of(&["alpha beta"]);
        let list = StopWordList::bundled();
        let vocab = build_vocabulary(&units, &list);
        let selection = select_words(&vocab, 5, 100).unwrap();
        assert!(selection.is_empty());
        assert!(matches!(
            build_occurrence_matrix(&units, &selection, MatrixMode::Counts),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn selection_word_absent_from_units_is_dropped_with_its_column() {
        // selection built over one corpus, applied to another
        let vocab_units = units_of(&["pollen corn pollen corn", "monarch monarch"]);
        let list = StopWordList::bundled();
        let vocab = build_vocabulary(&vocab_units, &list);
        let selection = select_words(&vocab, 2, 100).unwrap();
        assert_eq!(selection.len(), 3);
        let other_units = units_of(&["pollen corn", "corn pollen"]);
        let m = build_occurrence_matrix(&other_units, &selection, MatrixMode::Counts).unwrap();
        let surfaces: Vec<&str> = m.words.iter().map(|w| w.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["corn", "pollen"]);
        assert!(m.columns.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn cosine_names_the_zero_column_word() {
        let rows = vec!["u0".to_owned(), "u1".to_owned()];
        let words = vec![
            VocabEntry {
                word_id: 0,
                surface: "alive".into(),
                total_freq: 2,
                unit_freq: 2,
            },
            VocabEntry {
                word_id: 1,
                surface: "ghost".into(),
                total_freq: 2,
                unit_freq: 2,
            },
        ];
        let m = OccurrenceMatrix::from_columns(
            rows,
            words,
            MatrixMode::Counts,
            vec![vec![(0, 1), (1, 1)], vec![]],
        );
        match cosine_similarity(&m) {
            Err(Error::ZeroColumn { word }) => assert_eq!(word, "ghost"),
            other => panic!("expected zero-column error, got {other:?}"),
        }
    }

    #[test]
    fn transpose_product_matches_hand_count() {
        let m = matrix_from_dense(&[vec![1, 1], vec![1, 0]], MatrixMode::Binary);
        let c = cooccurrence(&m);
        assert_eq!(
            [c.get(0, 0), c.get(0, 1), c.get(1, 0), c.get(1, 1)],
            [2, 1, 1, 1]
        );
    }

    #[test]
    fn single_column_cooccurrence_is_sum_of_squares() {
        let m = matrix_from_dense(&[vec![3], vec![2]], MatrixMode::Counts);
        let c = cooccurrence(&m);
        assert_eq!(c.n(), 1);
        assert_eq!(c.get(0, 0), 13);
    }

    #[test]
    fn orthogonal_columns_never_cooccur() {
        let m = matrix_from_dense(&[vec![2, 0], vec![0, 5]], MatrixMode::Counts);
        let c = cooccurrence(&m);
        assert_eq!(c.get(0, 1), 0);
        assert_eq!(c.get(1, 0), 0);
    }

    #[test]
    fn cosine_identity_orthogonality_and_half() {
        let m = matrix_from_dense(
            &[vec![1, 1, 1], vec![1, 1, 0], vec![0, 0, 1]],
            MatrixMode::Counts,
        );
        let s = cosine_similarity(&m).unwrap();
        // identical columns 0 and 1
        assert_abs_diff_eq!(s.get(0, 1), 1.0, epsilon = 1e-15);
        // cols [1,1,0] and [1,0,1]: 1/(sqrt2*sqrt2)
        assert_abs_diff_eq!(s.get(1, 2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(0, 0), 1.0, epsilon = 0.0);
    }

    #[test]
    fn cosine_of_disjoint_columns_is_zero() {
        let m = matrix_from_dense(&[vec![1, 0], vec![0, 2]], MatrixMode::Counts);
        let s = cosine_similarity(&m).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn cosine_is_scale_invariant() {
        let base = matrix_from_dense(
            &[vec![1, 2, 0], vec![3, 0, 1], vec![0, 1, 4]],
            MatrixMode::Counts,
        );
        let scaled = matrix_from_dense(
            &[vec![5, 2, 0], vec![15, 0, 1], vec![0, 1, 4]],
            MatrixMode::Counts,
        );
        let s1 = cosine_similarity(&base).unwrap();
        let s2 = cosine_similarity(&scaled).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(s1.get(i, j), s2.get(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pearson_matches_centered_cosine() {
        let m = matrix_from_dense(
            &[
                vec![1, 2, 0, 1],
                vec![3, 0, 1, 1],
                vec![0, 1, 4, 2],
                vec![2, 2, 2, 0],
                vec![0, 0, 1, 3],
            ],
            MatrixMode::Counts,
        );
        let p = pearson_similarity(&m).unwrap();
        // oracle: center columns, then apply the cosine formula directly
        let dense: Vec<Vec<f64>> = (0..m.n_cols())
            .map(|j| (0..m.n_rows()).map(|r| f64::from(m.cell(r, j))).collect())
            .collect();
        for i in 0..m.n_cols() {
            for j in 0..m.n_cols() {
                let mi = dense[i].iter().sum::<f64>() / dense[i].len() as f64;
                let mj = dense[j].iter().sum::<f64>() / dense[j].len() as f64;
                let ci: Vec<f64> = dense[i].iter().map(|v| v - mi).collect();
                let cj: Vec<f64> = dense[j].iter().map(|v| v - mj).collect();
                let num: f64 = ci.iter().zip(&cj).map(|(a, b)| a * b).sum();
                let den = ci.iter().map(|v| v * v).sum::<f64>().sqrt()
                    * cj.iter().map(|v| v * v).sum::<f64>().sqrt();
                let expect = if i == j { 1.0 } else { num / den };
                assert_abs_diff_eq!(p.get(i, j), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pearson_extremes() {
        let m = matrix_from_dense(
            &[vec![1, 1, 5], vec![2, 2, 3], vec![3, 3, 1]],
            MatrixMode::Counts,
        );
        let p = pearson_similarity(&m).unwrap();
        assert_abs_diff_eq!(p.get(0, 1), 1.0, epsilon = 1e-12);
        // column 2 = -2*column 0 + 7: perfect anticorrelation
        assert_abs_diff_eq!(p.get(0, 2), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_rejects_constant_column() {
        let m = matrix_from_dense(&[vec![1, 2], vec![1, 3]], MatrixMode::Counts);
        match pearson_similarity(&m) {
            Err(Error::ConstantColumn { word }) => assert_eq!(word, "w000q"),
            other => panic!("expected constant-column error, got {other:?}"),
        }
    }

    #[test]
    fn cooccurrence_is_psd_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n_rows = rng.gen_range(2..8);
            let n_cols = rng.gen_range(1..6);
            let cells: Vec<Vec<u32>> = (0..n_rows)
                .map(|_| (0..n_cols).map(|_| rng.gen_range(0..4)).collect())
                .collect();
            // ensure no zero column
            let mut cells = cells;
            for j in 0..n_cols {
                if (0..n_rows).all(|r| cells[r][j] == 0) {
                    cells[0][j] = 1;
                }
            }
            let m = matrix_from_dense(&cells, MatrixMode::Counts);
            let c = cooccurrence(&m);
            let n = c.n();
            let a = nalgebra::DMatrix::from_fn(n, n, |i, j| c.get(i, j) as f64);
            let eig = nalgebra::SymmetricEigen::new(a);
            for &ev in eig.eigenvalues.iter() {
                assert!(ev >= -1e-9, "eigenvalue {ev} < -1e-9");
            }
        }
    }
}

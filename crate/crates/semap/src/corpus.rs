//! Corpus loading, markup stripping, and unit segmentation.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Media hint for a source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Media {
    Html,
    Plain,
}

impl Media {
    fn parse(s: &str) -> Option<Media> {
        match s.to_ascii_lowercase().as_str() {
            "html" => Some(Media::Html),
            "plain" | "txt" | "text" => Some(Media::Plain),
            _ => None,
        }
    }
}

/// One raw input file, as named by a manifest line.
#[derive(Debug, Clone)]
pub struct SourceDocument {
    /// Dense id assigned from manifest record order.
    pub doc_id: usize,
    pub path: PathBuf,
    pub media: Media,
    /// Free-form tag carried through to reports (e.g. source/year).
    pub label: String,
    pub raw: Vec<u8>,
}

/// A document reduced to body text, markup gone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanDocument {
    pub doc_id: usize,
    pub title: String,
    pub body: String,
}

/// Side facts of text extraction the pipeline reports on.
#[derive(Debug, Clone, Default)]
pub struct ExtractionNotes {
    /// Number of undecodable byte sequences replaced with U+FFFD.
    pub replaced: usize,
}

/// The row granularity of the analysis matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Document,
    Paragraph,
    Sentence,
    Title,
}

impl Granularity {
    pub fn parse(s: &str) -> Option<Granularity> {
        match s.to_ascii_lowercase().as_str() {
            "document" => Some(Granularity::Document),
            "paragraph" => Some(Granularity::Paragraph),
            "sentence" => Some(Granularity::Sentence),
            "title" => Some(Granularity::Title),
            _ => None,
        }
    }

    fn short(self) -> char {
        match self {
            Granularity::Document => 'd',
            Granularity::Paragraph => 'p',
            Granularity::Sentence => 's',
            Granularity::Title => 't',
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Granularity::Document => "document",
            Granularity::Paragraph => "paragraph",
            Granularity::Sentence => "sentence",
            Granularity::Title => "title",
        };
        write!(f, "{s}")
    }
}

/// One row of the analysis: a document, paragraph, sentence, or title.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextUnit {
    pub unit_id: String,
    pub doc_id: usize,
    pub granularity: Granularity,
    /// 0-based position within the parent document.
    pub ordinal: usize,
    pub text: String,
}

/// Load a corpus manifest: one record per line, `path<TAB>media<TAB>label`,
/// `#` lines ignored. Paths are resolved relative to the manifest location.
/// Documents come back in manifest order with ids assigned from that order.
pub fn load_corpus(manifest: &Path) -> Result<Vec<SourceDocument>> {
    let text = std::fs::read_to_string(manifest).map_err(|source| Error::Io {
        path: manifest.to_path_buf(),
        source,
    })?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut docs = Vec::new();
    let mut seen_paths: HashSet<PathBuf> = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let path_field = fields.next().unwrap_or("").trim();
        let media_field = fields.next().unwrap_or("").trim();
        let label = fields.next().unwrap_or("").trim().to_owned();
        if path_field.is_empty() || media_field.is_empty() {
            return Err(Error::Manifest {
                path: manifest.to_path_buf(),
                line: line_no,
                message: "expected `path<TAB>media<TAB>label`".into(),
            });
        }
        let media = Media::parse(media_field).ok_or_else(|| Error::Manifest {
            path: manifest.to_path_buf(),
            line: line_no,
            message: format!("unknown media '{media_field}' (expected html or plain)"),
        })?;
        let doc_path = base.join(path_field);
        if !seen_paths.insert(doc_path.clone()) {
            return Err(Error::Manifest {
                path: manifest.to_path_buf(),
                line: line_no,
                message: format!("duplicate path '{path_field}'"),
            });
        }
        let raw = std::fs::read(&doc_path).map_err(|_| Error::Manifest {
            path: manifest.to_path_buf(),
            line: line_no,
            message: format!("cannot read '{}'", doc_path.display()),
        })?;
        docs.push(SourceDocument {
            doc_id: docs.len(),
            path: doc_path,
            media,
            label,
            raw,
        });
    }
    if docs.is_empty() {
        log::warn!("manifest {} names no documents", manifest.display());
    }
    Ok(docs)
}

/// Strip a source document down to title and body text.
///
/// For html, script/style and head metadata are removed, the title element
/// is captured, and block-element boundaries become paragraph breaks. For
/// plain text the body is the decoded text and the title its first line.
/// Undecodable bytes are replaced and counted in the returned notes; a body
/// that is empty after stripping is the caller's empty-document signal.
pub fn extract_text(doc: &SourceDocument) -> (CleanDocument, ExtractionNotes) {
    let decoded = String::from_utf8_lossy(&doc.raw);
    let replaced = decoded.matches('\u{FFFD}').count()
        - count_fffd_bytes(&doc.raw);
    let text = decoded.replace("\r\n", "\n").replace('\r', "\n");
    let (title, body) = match doc.media {
        Media::Plain => {
            let title = text.lines().next().unwrap_or("").trim().to_owned();
            (title, text.trim().to_owned())
        }
        Media::Html => strip_html(&text),
    };
    if body.is_empty() {
        log::warn!("document {} ({}) has no body text", doc.doc_id, doc.path.display());
    }
    (
        CleanDocument {
            doc_id: doc.doc_id,
            title,
            body,
        },
        ExtractionNotes { replaced },
    )
}

/// Literal U+FFFD already present in the input should not be counted as a
/// replacement.
fn count_fffd_bytes(raw: &[u8]) -> usize {
    raw.windows(3).filter(|w| *w == [0xEF, 0xBF, 0xBD]).count()
}

const BLOCK_TAGS: &[&str] = &[
    "p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "li", "ul", "ol", "dl", "dt", "dd",
    "table", "tr", "td", "th", "blockquote", "pre", "section", "article", "header",
    "footer", "nav", "aside", "form", "hr", "body", "html", "figure", "figcaption",
];

/// Tags whose entire content is dropped.
const SKIP_TAGS: &[&str] = &["script", "style", "noscript", "head", "title", "meta", "link"];

/// Minimal html dismantling: tags are scanned, skip-content elements are
/// dropped, entities decoded, and block boundaries recorded as paragraph
/// breaks. The first `<title>` element is captured separately.
fn strip_html(html: &str) -> (String, String) {
    let mut title = String::new();
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut skip_until: Option<String> = None;
    let mut in_title = false;

    let close_paragraph = |paragraphs: &mut Vec<String>, current: &mut String| {
        let text = collapse_ws(current);
        if !text.is_empty() {
            paragraphs.push(text);
        }
        current.clear();
    };

    let mut rest = html;
    while !rest.is_empty() {
        if let Some(skip_tag) = skip_until.clone() {
            // Look for the matching close tag; drop everything before it.
            let needle = format!("</{skip_tag}");
            match find_ascii_ci(rest, &needle) {
                Some(pos) => {
                    if skip_tag == "title" && title.is_empty() && in_title {
                        title = collapse_ws(&decode_entities(&rest[..pos]));
                    }
                    let after = &rest[pos..];
                    let end = after.find('>').map(|i| pos + i + 1).unwrap_or(rest.len());
                    rest = &rest[end..];
                    skip_until = None;
                    in_title = false;
                }
                None => {
                    if skip_tag == "title" && title.is_empty() && in_title {
                        title = collapse_ws(&decode_entities(rest));
                    }
                    rest = "";
                }
            }
            continue;
        }
        match rest.find('<') {
            None => {
                current.push_str(&decode_entities(rest));
                rest = "";
            }
            Some(lt) => {
                current.push_str(&decode_entities(&rest[..lt]));
                rest = &rest[lt..];
                if rest.starts_with("<!--") {
                    match rest.find("-->") {
                        Some(end) => rest = &rest[end + 3..],
                        None => rest = "",
                    }
                    continue;
                }
                let Some(gt) = rest.find('>') else {
                    // Unterminated tag: drop the remainder.
                    rest = "";
                    continue;
                };
                let inner = &rest[1..gt];
                rest = &rest[gt + 1..];
                let name: String = inner
                    .trim_start_matches('/')
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                if name.is_empty() {
                    continue;
                }
                let is_close = inner.starts_with('/');
                let self_closing = inner.ends_with('/');
                if name == "br" {
                    current.push('\n');
                    continue;
                }
                if !is_close && SKIP_TAGS.contains(&name.as_str()) {
                    if name == "title" {
                        in_title = true;
                        skip_until = Some(name);
                    } else if name == "meta" || name == "link" {
                        // void elements: nothing to skip
                    } else if name == "head" {
                        // Do not skip the whole head wholesale; title lives
                        // there. Head metadata elements are dropped
                        // individually and stray head text is discarded by
                        // tag-level handling of meta/link/script/style.
                    } else if !self_closing {
                        skip_until = Some(name);
                    }
                    continue;
                }
                if BLOCK_TAGS.contains(&name.as_str()) {
                    close_paragraph(&mut paragraphs, &mut current);
                }
            }
        }
    }
    close_paragraph(&mut paragraphs, &mut current);
    (title, paragraphs.join("\n\n"))
}

/// ASCII case-insensitive substring search. The needle starts with `<`, so
/// any match begins on a char boundary of the haystack.
fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

/// Collapse internal whitespace runs to single spaces, preserving single
/// newlines inserted for `<br>`, and trim the edges.
fn collapse_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut run_has_newline = false;
    let mut in_run = false;
    for c in s.chars() {
        if c.is_whitespace() {
            in_run = true;
            if c == '\n' {
                run_has_newline = true;
            }
        } else {
            if in_run && !out.is_empty() {
                out.push(if run_has_newline { '\n' } else { ' ' });
            }
            in_run = false;
            run_has_newline = false;
            out.push(c);
        }
    }
    out
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest.char_indices().take(10).find(|&(_, c)| c == ';');
        match semi {
            Some((end, _)) => {
                let entity = &rest[1..end];
                let decoded = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => entity
                        .strip_prefix("#x")
                        .or_else(|| entity.strip_prefix("#X"))
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                        .and_then(char::from_u32),
                };
                match decoded {
                    Some(c) => {
                        out.push(c);
                        rest = &rest[end + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &rest[1..];
                    }
                }
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Sentence-terminator abbreviations that must not split.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "dr.", "u.s.", "mr.", "mrs.", "ms.", "prof.", "vs.", "etc.", "fig.",
    "cf.", "st.", "no.",
];

/// Break a clean document into analysis units at the requested granularity.
/// Empty fragments are dropped; ordinals are contiguous from 0.
pub fn segment(doc: &CleanDocument, granularity: Granularity) -> Vec<TextUnit> {
    let texts: Vec<String> = match granularity {
        Granularity::Document => {
            let body = doc.body.trim();
            if body.is_empty() {
                Vec::new()
            } else {
                vec![body.to_owned()]
            }
        }
        Granularity::Paragraph => split_paragraphs(&doc.body),
        Granularity::Sentence => split_sentences(&doc.body),
        Granularity::Title => {
            let title = doc.title.trim();
            if title.is_empty() {
                log::warn!("document {} has no title; title mode yields no units", doc.doc_id);
                Vec::new()
            } else {
                vec![title.to_owned()]
            }
        }
    };
    texts
        .into_iter()
        .enumerate()
        .map(|(ordinal, text)| TextUnit {
            unit_id: format!("d{}:{}{}", doc.doc_id, granularity.short(), ordinal),
            doc_id: doc.doc_id,
            granularity,
            ordinal,
            text,
        })
        .collect()
}

/// Paragraphs are separated by one or more blank lines.
fn split_paragraphs(body: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    paragraphs
        .into_iter()
        .map(|p| p.trim().to_owned())
        .filter(|p| !p.is_empty())
        .collect()
}

/// Sentences end at `.`, `!`, or `?` followed by whitespace and a capital,
/// unless the terminator closes a guarded abbreviation.
fn split_sentences(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c == '!' || c == '?' {
            // absorb a run of terminators
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '!' | '?') {
                end += 1;
            }
            let followed = {
                let mut j = end;
                let mut saw_ws = false;
                while j < chars.len() && chars[j].is_whitespace() {
                    saw_ws = true;
                    j += 1;
                }
                saw_ws && j < chars.len() && chars[j].is_uppercase()
            };
            if followed && !(c == '.' && ends_with_abbreviation(&chars[start..end])) {
                let sentence: String = chars[start..end].iter().collect();
                let sentence = sentence.trim().to_owned();
                if !sentence.is_empty() {
                    sentences.push(sentence);
                }
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim().to_owned();
    if !tail.is_empty() {
        sentences.push(tail);
    }
    sentences
}

fn ends_with_abbreviation(chars: &[char]) -> bool {
    let text: String = chars.iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.iter().any(|a| {
        // the abbreviation must start at a word boundary ("st." guards
        // "St." but not "crust.")
        text.ends_with(a)
            && text[..text.len() - a.len()]
                .chars()
                .last()
                .is_none_or(|c| !c.is_alphabetic())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(body: &str) -> CleanDocument {
        CleanDocument {
            doc_id: 0,
            title: "T".into(),
            body: body.into(),
        }
    }

    fn html_doc(html: &str) -> SourceDocument {
        SourceDocument {
            doc_id: 0,
            path: PathBuf::from("mem.html"),
            media: Media::Html,
            label: String::new(),
            raw: html.as_bytes().to_vec(),
        }
    }

    #[test]
    fn html_stripping_keeps_title_and_block_breaks() {
        let src = html_doc(
            "<html><head><title>T</title><script>x()</script></head>\
             <body><p>a</p><p>b</p></body>",
        );
        let (clean, notes) = extract_text(&src);
        assert_eq!(clean.title, "T");
        assert_eq!(clean.body, "a\n\nb");
        assert_eq!(notes.replaced, 0);
    }

    #[test]
    fn html_with_only_script_is_empty() {
        let src = html_doc("<html><body><script>var x = 1;</script></body></html>");
        let (clean, _) = extract_text(&src);
        assert!(clean.body.is_empty());
    }

    #[test]
    fn html_entities_and_comments() {
        let src = html_doc("<p>a &amp; b</p><!-- hidden --><p>&#65;&lt;ok&gt;</p>");
        let (clean, _) = extract_text(&src);
        assert_eq!(clean.body, "a & b\n\nA<ok>");
    }

    #[test]
    fn plain_text_first_line_is_title() {
        let src = SourceDocument {
            doc_id: 3,
            path: PathBuf::from("mem.txt"),
            media: Media::Plain,
            label: String::new(),
            raw: b"Line1\nLine2".to_vec(),
        };
        let (clean, _) = extract_text(&src);
        assert_eq!(clean.title, "Line1");
        assert_eq!(clean.body, "Line1\nLine2");
        assert_eq!(clean.doc_id, 3);
    }

    #[test]
    fn undecodable_bytes_are_replaced_and_counted() {
        let src = SourceDocument {
            doc_id: 0,
            path: PathBuf::from("mem.txt"),
            media: Media::Plain,
            label: String::new(),
            raw: vec![b'a', 0xFF, b'b'],
        };
        let (clean, notes) = extract_text(&src);
        assert_eq!(notes.replaced, 1);
        assert!(clean.body.contains('\u{FFFD}'));
    }

    #[test]
    fn document_mode_is_identity() {
        let units = segment(&doc("one paragraph"), Granularity::Document);
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].text, "one paragraph");
        assert_eq!(units[0].ordinal, 0);
        assert_eq!(units[0].unit_id, "d0:d0");
    }

    #[test]
    fn paragraph_mode_splits_on_blank_lines() {
        let body = "para one\nstill one\n\npara two\n\n\n\npara three";
        let units = segment(&doc(body), Granularity::Paragraph);
        let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
        assert_eq!(texts, vec!["para one\nstill one", "para two", "para three"]);
        let ordinals: Vec<usize> = units.iter().map(|u| u.ordinal).collect();
        assert_eq!(ordinals, vec![0, 1, 2]);
    }

    #[test]
    fn twelve_paragraph_document_yields_twelve_units() {
        let body = (0..12)
            .map(|i| format!("paragraph number {i} with words"))
            .collect::<Vec<_>>()
            .join("\n\n");
        let units = segment(&doc(&body), Granularity::Paragraph);
        assert_eq!(units.len(), 12);
    }

    #[test]
    fn paragraph_concatenation_reproduces_body() {
        let body = "alpha beta\n\ngamma\n\ndelta eps";
        let units = segment(&doc(body), Granularity::Paragraph);
        let joined = units
            .iter()
            .map(|u| u.text.clone())
            .collect::<Vec<_>>()
            .join("\n\n");
        assert_eq!(joined, body);
    }

    #[test]
    fn sentence_mode_splits_at_terminators_before_capitals() {
        let units = segment(&doc("A b. C d."), Granularity::Sentence);
        let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
        assert_eq!(texts, vec!["A b.", "C d."]);
    }

    #[test]
    fn sentence_mode_honours_abbreviation_guard() {
        let units = segment(
            &doc("The U.S. Department replied. Dr. Smith agreed! Done?"),
            Granularity::Sentence,
        );
        let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
        assert_eq!(
            texts,
            vec!["The U.S. Department replied.", "Dr. Smith agreed!", "Done?"]
        );
    }

    #[test]
    fn abbreviation_guard_needs_a_word_boundary() {
        let units = segment(
            &doc("Flour fell on the crust. The oven near St. Mary opened."),
            Granularity::Sentence,
        );
        let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "Flour fell on the crust.",
                "The oven near St. Mary opened."
            ]
        );
    }

    #[test]
    fn title_mode_uses_title_only() {
        let d = CleanDocument {
            doc_id: 1,
            title: "Heading".into(),
            body: "text".into(),
        };
        let units = segment(&d, Granularity::Title);
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].text, "Heading");
        assert_eq!(units[0].unit_id, "d1:t0");

        let empty = CleanDocument {
            doc_id: 2,
            title: "".into(),
            body: "text".into(),
        };
        assert!(segment(&empty, Granularity::Title).is_empty());
    }

    #[test]
    fn segmentation_is_deterministic() {
        let d = doc("One two. Three four!\n\nFive six.");
        for g in [
            Granularity::Document,
            Granularity::Paragraph,
            Granularity::Sentence,
        ] {
            assert_eq!(segment(&d, g), segment(&d, g));
        }
    }

    #[test]
    fn manifest_loading_orders_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let releases = [
            ("letter.txt", "transgenic pollen"),
            ("cornell.txt", "engineered corn"),
            ("ucs.txt", "toxic pollen"),
            ("greenpeace.txt", "maize ban"),
            ("bio.txt", "industry response"),
        ];
        for (name, content) in releases {
            std::fs::write(dir.path().join(name), content).unwrap();
        }
        let manifest = dir.path().join("corpus.tsv");
        let mut f = std::fs::File::create(&manifest).unwrap();
        writeln!(f, "# press releases, 1999").unwrap();
        for (name, _) in releases {
            writeln!(f, "{name}\tplain\t1999").unwrap();
        }
        drop(f);

        let docs = load_corpus(&manifest).unwrap();
        assert_eq!(docs.len(), 5);
        for (i, doc) in docs.iter().enumerate() {
            assert_eq!(doc.doc_id, i);
            assert_eq!(doc.raw, releases[i].1.as_bytes());
            assert_eq!(doc.label, "1999");
        }
    }

    #[test]
    fn manifest_errors_name_line_and_path() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("corpus.tsv");
        std::fs::write(&manifest, "missing.txt\tplain\tx\n").unwrap();
        let err = load_corpus(&manifest).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(msg.contains("missing.txt"), "{msg}");
    }

    #[test]
    fn manifest_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "alpha").unwrap();
        let manifest = dir.path().join("corpus.tsv");
        std::fs::write(&manifest, "a.txt\tplain\tx\na.txt\tplain\ty\n").unwrap();
        let err = load_corpus(&manifest).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn empty_manifest_is_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("corpus.tsv");
        std::fs::write(&manifest, "# nothing here\n").unwrap();
        assert!(load_corpus(&manifest).unwrap().is_empty());
    }
}

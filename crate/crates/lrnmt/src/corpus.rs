//! Corpus ingestion, validation, language tagging, and pooling.
//!
//! Everything downstream (language models, selection, translation training)
//! consumes the types defined here. Ingestion is strict: blank lines, invalid
//! UTF-8, and mismatched bitext sides are hard errors so that selection
//! accounting stays exact.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("{path}: file is empty")]
    EmptyFile { path: PathBuf },
    #[error("{path}: blank segment at line {line}")]
    BlankLine { path: PathBuf, line: usize },
    #[error("line count mismatch: {src_path} has {src_lines} lines, {tgt_path} has {tgt_lines}")]
    LineCountMismatch {
        src_path: PathBuf,
        src_lines: usize,
        tgt_path: PathBuf,
        tgt_lines: usize,
    },
    #[error("invalid language tag {0:?}: must be non-empty lowercase ASCII letters/digits")]
    InvalidLangTag(String),
    #[error("source and target language are both {0}")]
    SameLanguage(LangTag),
    #[error("segment {index} already contains reserved token {token}")]
    ReservedTokenCollision { index: usize, token: String },
    #[error("segment {index} does not start with expected tag {token}")]
    MissingTag { index: usize, token: String },
    #[error("empty pool list")]
    EmptyPoolList,
    #[error("pool {lang} is oriented with {found} on the {expected} side, expected pivot {pivot}")]
    DirectionMismatch {
        lang: LangTag,
        found: String,
        expected: String,
        pivot: LangTag,
    },
    #[error("duplicate language {0} in pool set")]
    DuplicateLanguage(LangTag),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Short language identifier: non-empty, lowercase ASCII letters and digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangTag(String);

impl LangTag {
    pub fn new(code: &str) -> Result<Self, CorpusError> {
        if code.is_empty()
            || !code
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
        {
            return Err(CorpusError::InvalidLangTag(code.to_string()));
        }
        Ok(LangTag(code.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The `<2xx>` control token that directs a universal model to translate
    /// into this language.
    pub fn control_token(&self) -> String {
        format!("<2{}>", self.0)
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for LangTag {
    type Error = CorpusError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        LangTag::new(&value)
    }
}

impl From<LangTag> for String {
    fn from(tag: LangTag) -> String {
        tag.0
    }
}

/// A monolingual corpus: ordered UTF-8 segments, one per source line.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoCorpus {
    pub lang: LangTag,
    pub segments: Vec<String>,
}

impl MonoCorpus {
    pub fn new(lang: LangTag, segments: Vec<String>) -> Self {
        MonoCorpus { lang, segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Writes one segment per line, LF-terminated.
    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        write_lines(path, &self.segments)
    }
}

/// A sentence-aligned parallel corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitext {
    pub src_lang: LangTag,
    pub tgt_lang: LangTag,
    pub pairs: Vec<(String, String)>,
}

impl Bitext {
    pub fn new(
        src_lang: LangTag,
        tgt_lang: LangTag,
        pairs: Vec<(String, String)>,
    ) -> Result<Self, CorpusError> {
        if src_lang == tgt_lang {
            return Err(CorpusError::SameLanguage(src_lang));
        }
        Ok(Bitext {
            src_lang,
            tgt_lang,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_segments(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(s, _)| s.as_str())
    }

    /// A bitext with source and target sides swapped.
    pub fn flipped(&self) -> Bitext {
        Bitext {
            src_lang: self.tgt_lang.clone(),
            tgt_lang: self.src_lang.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|(s, t)| (t.clone(), s.clone()))
                .collect(),
        }
    }

    /// Writes the two sides as paired text files.
    pub fn write(&self, src_path: &Path, tgt_path: &Path) -> Result<(), CorpusError> {
        let src: Vec<String> = self.pairs.iter().map(|(s, _)| s.clone()).collect();
        let tgt: Vec<String> = self.pairs.iter().map(|(_, t)| t.clone()).collect();
        write_lines(src_path, &src)?;
        write_lines(tgt_path, &tgt)
    }
}

/// Several bitexts sharing one pivot side (English in the original setting),
/// keyed by the non-pivot language. Order follows the manifest.
#[derive(Debug, Clone)]
pub struct MultiParallelPool {
    pub pivot_lang: LangTag,
    entries: Vec<(LangTag, Bitext)>,
}

impl MultiParallelPool {
    pub fn new(pivot_lang: LangTag) -> Self {
        MultiParallelPool {
            pivot_lang,
            entries: Vec::new(),
        }
    }

    /// Adds a pool. The bitext must have the pivot on its target side
    /// (the canonical to-pivot orientation).
    pub fn insert(&mut self, bitext: Bitext) -> Result<(), CorpusError> {
        if bitext.tgt_lang != self.pivot_lang {
            return Err(CorpusError::DirectionMismatch {
                lang: bitext.src_lang,
                found: bitext.tgt_lang.to_string(),
                expected: "target".to_string(),
                pivot: self.pivot_lang.clone(),
            });
        }
        if self.entries.iter().any(|(l, _)| *l == bitext.src_lang) {
            return Err(CorpusError::DuplicateLanguage(bitext.src_lang));
        }
        self.entries.push((bitext.src_lang.clone(), bitext));
        Ok(())
    }

    pub fn get(&self, lang: &LangTag) -> Option<&Bitext> {
        self.entries.iter().find(|(l, _)| l == lang).map(|(_, b)| b)
    }

    pub fn languages(&self) -> Vec<LangTag> {
        self.entries.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(LangTag, Bitext)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Orientation of a pooled training stream relative to the pivot language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ToPivot,
    FromPivot,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::ToPivot => f.write_str("to-pivot"),
            Direction::FromPivot => f.write_str("from-pivot"),
        }
    }
}

/// One training pair in a mixed-language stream; `lang` is the non-pivot side.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub lang: LangTag,
    pub source: String,
    pub target: String,
}

/// A deterministic concatenation of pools with per-language accounting.
#[derive(Debug, Clone)]
pub struct PooledCorpus {
    pub pivot_lang: LangTag,
    pub direction: Direction,
    pub pairs: Vec<TrainPair>,
    pub per_lang_counts: Vec<(LangTag, usize)>,
}

impl PooledCorpus {
    pub fn total(&self) -> usize {
        self.pairs.len()
    }
}

/// Loads a monolingual corpus: one segment per line, trailing whitespace
/// stripped, order preserved. Blank lines and invalid UTF-8 are errors.
pub fn load_mono(path: &Path, lang: LangTag) -> Result<MonoCorpus, CorpusError> {
    let segments = read_lines(path)?;
    Ok(MonoCorpus { lang, segments })
}

/// Loads a parallel corpus from two line-aligned files.
pub fn load_bitext(
    src_path: &Path,
    tgt_path: &Path,
    src_lang: LangTag,
    tgt_lang: LangTag,
) -> Result<Bitext, CorpusError> {
    let src = read_lines(src_path)?;
    let tgt = read_lines(tgt_path)?;
    if src.len() != tgt.len() {
        return Err(CorpusError::LineCountMismatch {
            src_path: src_path.to_path_buf(),
            src_lines: src.len(),
            tgt_path: tgt_path.to_path_buf(),
            tgt_lines: tgt.len(),
        });
    }
    let pairs = src.into_iter().zip(tgt).collect();
    Bitext::new(src_lang, tgt_lang, pairs)
}

/// Prefixes every source segment with the `<2xx>` control token for the
/// target language, separated by one space. Errors if any segment already
/// contains the token.
pub fn tag_for_universal(bitext: &Bitext) -> Result<Bitext, CorpusError> {
    let token = bitext.tgt_lang.control_token();
    for (i, (src, tgt)) in bitext.pairs.iter().enumerate() {
        if src.contains(&token) || tgt.contains(&token) {
            return Err(CorpusError::ReservedTokenCollision {
                index: i,
                token: token.clone(),
            });
        }
    }
    let pairs = bitext
        .pairs
        .iter()
        .map(|(src, tgt)| (format!("{token} {src}"), tgt.clone()))
        .collect();
    Ok(Bitext {
        src_lang: bitext.src_lang.clone(),
        tgt_lang: bitext.tgt_lang.clone(),
        pairs,
    })
}

/// Inverse of [`tag_for_universal`]; errors if a segment lacks the tag.
pub fn strip_tag(bitext: &Bitext) -> Result<Bitext, CorpusError> {
    let token = bitext.tgt_lang.control_token();
    let prefix = format!("{token} ");
    let mut pairs = Vec::with_capacity(bitext.pairs.len());
    for (i, (src, tgt)) in bitext.pairs.iter().enumerate() {
        match src.strip_prefix(&prefix) {
            Some(rest) => pairs.push((rest.to_string(), tgt.clone())),
            None => {
                return Err(CorpusError::MissingTag {
                    index: i,
                    token: token.clone(),
                })
            }
        }
    }
    Ok(Bitext {
        src_lang: bitext.src_lang.clone(),
        tgt_lang: bitext.tgt_lang.clone(),
        pairs,
    })
}

/// Concatenates pools in the given order into one mixed-language stream.
///
/// For `ToPivot` every bitext must have the pivot on its target side; for
/// `FromPivot` the pairs are flipped so the pivot becomes the source.
pub fn concat_pools(
    pools: &[&Bitext],
    direction: Direction,
    pivot: &LangTag,
) -> Result<PooledCorpus, CorpusError> {
    if pools.is_empty() {
        return Err(CorpusError::EmptyPoolList);
    }
    let mut seen: BTreeSet<LangTag> = BTreeSet::new();
    let mut pairs = Vec::new();
    let mut per_lang_counts = Vec::new();
    for bitext in pools {
        if bitext.tgt_lang != *pivot {
            return Err(CorpusError::DirectionMismatch {
                lang: bitext.src_lang.clone(),
                found: bitext.tgt_lang.to_string(),
                expected: "target".to_string(),
                pivot: pivot.clone(),
            });
        }
        let lang = bitext.src_lang.clone();
        if !seen.insert(lang.clone()) {
            return Err(CorpusError::DuplicateLanguage(lang));
        }
        per_lang_counts.push((lang.clone(), bitext.pairs.len()));
        for (src, tgt) in &bitext.pairs {
            let (source, target) = match direction {
                Direction::ToPivot => (src.clone(), tgt.clone()),
                Direction::FromPivot => (tgt.clone(), src.clone()),
            };
            pairs.push(TrainPair {
                lang: lang.clone(),
                source,
                target,
            });
        }
    }
    Ok(PooledCorpus {
        pivot_lang: pivot.clone(),
        direction,
        pairs,
        per_lang_counts,
    })
}

/// Role of a corpus within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Dev,
    Test,
}

/// One manifest entry; paths are relative to the manifest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub key: String,
    pub lang: LangTag,
    pub role: Role,
    /// Monolingual file, if this entry is a mono corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Paired files, if this entry is a bitext aligned to the pivot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt_path: Option<PathBuf>,
}

/// JSON manifest naming every corpus an experiment may reference.
/// All reports refer to corpora by manifest key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub pivot_lang: LangTag,
    pub entries: Vec<ManifestEntry>,
    /// Directory the relative paths resolve against; set on load.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(pivot_lang: LangTag) -> Self {
        CorpusManifest {
            version: 1,
            pivot_lang,
            entries: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: CorpusManifest = serde_json::from_str(&text)?;
        manifest.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        self.validate()?;
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut keys = BTreeSet::new();
        for entry in &self.entries {
            if !keys.insert(&entry.key) {
                return Err(CorpusError::Manifest(format!(
                    "duplicate manifest key {:?}",
                    entry.key
                )));
            }
            let is_mono = entry.path.is_some();
            let is_bitext = entry.src_path.is_some() && entry.tgt_path.is_some();
            if is_mono == is_bitext {
                return Err(CorpusError::Manifest(format!(
                    "entry {:?} must have either `path` or both `src_path` and `tgt_path`",
                    entry.key
                )));
            }
        }
        Ok(())
    }

    pub fn entry(&self, key: &str) -> Result<&ManifestEntry, CorpusError> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .ok_or_else(|| CorpusError::Manifest(format!("unknown manifest key {key:?}")))
    }

    pub fn load_mono_entry(&self, key: &str) -> Result<MonoCorpus, CorpusError> {
        let entry = self.entry(key)?;
        let rel = entry
            .path
            .as_ref()
            .ok_or_else(|| CorpusError::Manifest(format!("entry {key:?} is not monolingual")))?;
        load_mono(&self.base_dir.join(rel), entry.lang.clone())
    }

    /// Loads a bitext entry in canonical to-pivot orientation.
    pub fn load_bitext_entry(&self, key: &str) -> Result<Bitext, CorpusError> {
        let entry = self.entry(key)?;
        let (src, tgt) = match (&entry.src_path, &entry.tgt_path) {
            (Some(s), Some(t)) => (s, t),
            _ => {
                return Err(CorpusError::Manifest(format!(
                    "entry {key:?} is not a bitext"
                )))
            }
        };
        load_bitext(
            &self.base_dir.join(src),
            &self.base_dir.join(tgt),
            entry.lang.clone(),
            self.pivot_lang.clone(),
        )
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|e| CorpusError::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    if text.is_empty() {
        return Err(CorpusError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut lines: Vec<&str> = text.split('\n').collect();
    // A trailing newline produces one final empty chunk, not a blank segment.
    if let Some(last) = lines.last() {
        if last.is_empty() {
            lines.pop();
        }
    }
    let mut segments = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let seg = line.trim_end();
        if seg.is_empty() {
            return Err(CorpusError::BlankLine {
                path: path.to_path_buf(),
                line: i + 1,
            });
        }
        segments.push(seg.to_string());
    }
    if segments.is_empty() {
        return Err(CorpusError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(segments)
}

pub(crate) fn write_lines(path: &Path, lines: &[String]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tag(s: &str) -> LangTag {
        LangTag::new(s).unwrap()
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn lang_tag_validation() {
        assert!(LangTag::new("gl").is_ok());
        assert!(LangTag::new("d1").is_ok());
        assert!(LangTag::new("").is_err());
        assert!(LangTag::new("EN").is_err());
        assert!(LangTag::new("p t").is_err());
    }

    #[test]
    fn load_mono_three_lines_in_order() {
        let f = write_tmp("uno\ndos\ntres\n");
        let corpus = load_mono(f.path(), tag("es")).unwrap();
        assert_eq!(corpus.segments, vec!["uno", "dos", "tres"]);
    }

    #[test]
    fn load_mono_blank_line_reports_line_number() {
        let f = write_tmp("uno\n\ntres\n");
        let err = load_mono(f.path(), tag("es")).unwrap_err();
        match err {
            CorpusError::BlankLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_mono_empty_file_is_error() {
        let f = write_tmp("");
        assert!(matches!(
            load_mono(f.path(), tag("es")),
            Err(CorpusError::EmptyFile { .. })
        ));
    }

    #[test]
    fn load_mono_invalid_utf8_reports_offset() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"ok\nxy\xffz\n").unwrap();
        let err = load_mono(f.path(), tag("es")).unwrap_err();
        match err {
            CorpusError::InvalidUtf8 { offset, .. } => assert_eq!(offset, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_mono_strips_trailing_whitespace_only() {
        let f = write_tmp("a b \n c\t\n");
        let corpus = load_mono(f.path(), tag("es")).unwrap();
        assert_eq!(corpus.segments, vec!["a b", " c"]);
    }

    #[test]
    fn roundtrip_reproduces_normalized_bytes() {
        let f = write_tmp("a b\nc d\n");
        let corpus = load_mono(f.path(), tag("es")).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        corpus.write(out.path()).unwrap();
        assert_eq!(std::fs::read(out.path()).unwrap(), b"a b\nc d\n");
    }

    #[test]
    fn load_bitext_zips_pairs() {
        let src = write_tmp("a\nb\nc\nd\ne\n");
        let tgt = write_tmp("1\n2\n3\n4\n5\n");
        let bt = load_bitext(src.path(), tgt.path(), tag("pt"), tag("en")).unwrap();
        assert_eq!(bt.pairs.len(), 5);
        assert_eq!(bt.pairs[2], ("c".to_string(), "3".to_string()));
    }

    #[test]
    fn load_bitext_mismatch_reports_both_counts() {
        let src = write_tmp("a\nb\nc\nd\ne\n");
        let tgt = write_tmp("1\n2\n3\n4\n5\n6\n");
        let err = load_bitext(src.path(), tgt.path(), tag("pt"), tag("en")).unwrap_err();
        match err {
            CorpusError::LineCountMismatch {
                src_lines,
                tgt_lines,
                ..
            } => {
                assert_eq!((src_lines, tgt_lines), (5, 6));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bitext_same_language_rejected() {
        assert!(Bitext::new(tag("en"), tag("en"), vec![]).is_err());
    }

    #[test]
    fn tagging_prefixes_source_with_control_token() {
        let bt = Bitext::new(
            tag("gl"),
            tag("en"),
            vec![("ola mundo".into(), "hello world".into())],
        )
        .unwrap();
        let tagged = tag_for_universal(&bt).unwrap();
        assert_eq!(tagged.pairs[0].0, "<2en> ola mundo");
        assert_eq!(tagged.pairs[0].1, "hello world");
    }

    #[test]
    fn tagging_roundtrip_is_identity() {
        let bt = Bitext::new(
            tag("gl"),
            tag("en"),
            vec![
                ("ola mundo".into(), "hello world".into()),
                ("bos dias".into(), "good morning".into()),
            ],
        )
        .unwrap();
        let back = strip_tag(&tag_for_universal(&bt).unwrap()).unwrap();
        assert_eq!(back, bt);
    }

    #[test]
    fn tagging_detects_collision() {
        let bt = Bitext::new(
            tag("gl"),
            tag("en"),
            vec![("texto con <2en> dentro".into(), "x".into())],
        )
        .unwrap();
        assert!(matches!(
            tag_for_universal(&bt),
            Err(CorpusError::ReservedTokenCollision { index: 0, .. })
        ));
    }

    #[test]
    fn concat_pools_counts_and_order() {
        let a = Bitext::new(
            tag("pt"),
            tag("en"),
            (0..10).map(|i| (format!("p{i}"), format!("e{i}"))).collect(),
        )
        .unwrap();
        let b = Bitext::new(
            tag("es"),
            tag("en"),
            (0..20).map(|i| (format!("s{i}"), format!("t{i}"))).collect(),
        )
        .unwrap();
        let pooled = concat_pools(&[&a, &b], Direction::ToPivot, &tag("en")).unwrap();
        assert_eq!(pooled.total(), 30);
        assert_eq!(
            pooled.per_lang_counts,
            vec![(tag("pt"), 10), (tag("es"), 20)]
        );
        assert_eq!(pooled.pairs[0].source, "p0");
        assert_eq!(pooled.pairs[10].source, "s0");
        let sum: usize = pooled.per_lang_counts.iter().map(|(_, n)| n).sum();
        assert_eq!(sum, pooled.total());
    }

    #[test]
    fn concat_pools_empty_list_is_error() {
        assert!(matches!(
            concat_pools(&[], Direction::ToPivot, &tag("en")),
            Err(CorpusError::EmptyPoolList)
        ));
    }

    #[test]
    fn concat_pools_direction_flip() {
        let a = Bitext::new(tag("pt"), tag("en"), vec![("ola".into(), "hi".into())]).unwrap();
        let pooled = concat_pools(&[&a], Direction::FromPivot, &tag("en")).unwrap();
        assert_eq!(pooled.pairs[0].source, "hi");
        assert_eq!(pooled.pairs[0].target, "ola");
    }

    #[test]
    fn concat_pools_wrong_orientation_is_error() {
        let a = Bitext::new(tag("en"), tag("pt"), vec![("hi".into(), "ola".into())]).unwrap();
        assert!(matches!(
            concat_pools(&[&a], Direction::ToPivot, &tag("en")),
            Err(CorpusError::DirectionMismatch { .. })
        ));
    }

    #[test]
    fn manifest_roundtrip_and_lookup() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.txt"), "hello\nworld\n").unwrap();
        let mut manifest = CorpusManifest::new(tag("en"));
        manifest.entries.push(ManifestEntry {
            key: "x-train".into(),
            lang: tag("gl"),
            role: Role::Train,
            path: Some("x.txt".into()),
            src_path: None,
            tgt_path: None,
        });
        let mpath = dir.path().join("manifest.json");
        manifest.save(&mpath).unwrap();
        let loaded = CorpusManifest::load(&mpath).unwrap();
        let corpus = loaded.load_mono_entry("x-train").unwrap();
        assert_eq!(corpus.segments, vec!["hello", "world"]);
        assert!(loaded.load_mono_entry("missing").is_err());
    }

    #[test]
    fn manifest_duplicate_key_rejected() {
        let mut manifest = CorpusManifest::new(tag("en"));
        for _ in 0..2 {
            manifest.entries.push(ManifestEntry {
                key: "same".into(),
                lang: tag("gl"),
                role: Role::Train,
                path: Some("x.txt".into()),
                src_path: None,
                tgt_path: None,
            });
        }
        assert!(manifest.validate().is_err());
    }
}

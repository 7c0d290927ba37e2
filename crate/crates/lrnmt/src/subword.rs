//! Subword segmentation: greedy pairwise merge learning, application, and
//! vocabulary overlap measurement.
//!
//! Words are whitespace-delimited; the word-final symbol carries a boundary
//! marker (`▁` appended to the last character) so that whitespace can be
//! reconstructed exactly at decode time. Merges are learned by highest pair
//! frequency with ties broken lexicographically by the merged piece, which
//! makes training deterministic for a fixed corpus and merge budget.
//!
//! Unknown characters never break segmentation: they surface as single-char
//! pieces and are only mapped to `<unk>` when converting pieces to ids.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MonoCorpus;

/// Word-boundary marker appended to the final symbol of each word.
pub const BOUNDARY: char = '\u{2581}';

/// Reserved tokens in their fixed id order.
pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Identifier of the only normalization policy this implementation applies:
/// words are split on Unicode whitespace and rejoined with single spaces.
pub const NORMALIZATION_WS_V1: &str = "ws-v1";

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary limit {limit} below minimum feasible size {minimum} (reserved + characters)")]
    VocabLimitTooSmall { limit: usize, minimum: usize },
    #[error("input contains the boundary marker {BOUNDARY:?} (byte offset {offset})")]
    BoundaryMarkerInInput { offset: usize },
    #[error("unknown piece id {0}")]
    UnknownPieceId(u32),
    #[error("duplicate reserved token {0:?}")]
    DuplicateReserved(String),
    #[error("reserved token {0:?} produced by a merge rule")]
    ReservedMergeOutput(String),
    #[error("candidate size list is empty")]
    EmptyCandidateList,
    #[error("model file {path}: {message}")]
    BadModelFile { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One merge rule: adjacent symbols `left` + `right` fuse into their
/// concatenation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
}

impl MergeRule {
    pub fn merged(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

/// A trained segmentation model: reserved tokens, the atomic symbol
/// alphabet observed at training time, and the ordered merge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubwordModel {
    pub version: u32,
    pub normalization: String,
    pub reserved: Vec<String>,
    pub alphabet: Vec<String>,
    pub merges: Vec<MergeRule>,
    pub requested_ops: usize,
}

impl SubwordModel {
    /// Number of merge operations actually learned (≤ requested).
    pub fn learned_ops(&self) -> usize {
        self.merges.len()
    }

    pub fn save(&self, path: &Path) -> Result<(), SubwordError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|source| SubwordError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SubwordError> {
        let text = fs::read_to_string(path).map_err(|source| SubwordError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: SubwordModel = serde_json::from_str(&text)?;
        if model.version != 1 {
            return Err(SubwordError::BadModelFile {
                path: path.to_path_buf(),
                message: format!("unsupported version {}", model.version),
            });
        }
        Ok(model)
    }

    /// Stateful encoder with a per-word cache; cheap to create.
    pub fn encoder(&self) -> Encoder<'_> {
        Encoder::new(self)
    }

    /// Segments one text line into pieces. Convenience wrapper that builds a
    /// throwaway encoder; use [`SubwordModel::encoder`] for corpus-scale work.
    pub fn encode(&self, text: &str) -> Result<Vec<String>, SubwordError> {
        self.encoder().encode(text)
    }

    /// Reconstructs text from pieces: boundary markers end words, reserved
    /// tokens stand alone, words are joined with single spaces.
    pub fn decode(&self, pieces: &[String]) -> String {
        decode_pieces(&self.reserved, pieces)
    }
}

/// Dense piece-to-id map. Reserved tokens occupy the lowest ids in their
/// fixed order, then alphabet symbols (sorted), then merge outputs in merge
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pieces: Vec<String>,
    ids: HashMap<String, u32>,
    reserved_len: usize,
}

impl Vocabulary {
    pub fn from_model(model: &SubwordModel) -> Self {
        let mut pieces: Vec<String> = Vec::new();
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut push = |piece: &str, pieces: &mut Vec<String>, ids: &mut HashMap<String, u32>| {
            if !ids.contains_key(piece) {
                ids.insert(piece.to_string(), pieces.len() as u32);
                pieces.push(piece.to_string());
            }
        };
        for r in &model.reserved {
            push(r, &mut pieces, &mut ids);
        }
        let reserved_len = pieces.len();
        let mut alphabet = model.alphabet.clone();
        alphabet.sort();
        for a in &alphabet {
            push(a, &mut pieces, &mut ids);
        }
        for m in &model.merges {
            push(&m.merged(), &mut pieces, &mut ids);
        }
        Vocabulary {
            pieces,
            ids,
            reserved_len,
        }
    }

    pub fn size(&self) -> usize {
        self.pieces.len()
    }

    pub fn reserved_len(&self) -> usize {
        self.reserved_len
    }

    pub fn reserved(&self) -> &[String] {
        &self.pieces[..self.reserved_len]
    }

    pub fn id(&self, piece: &str) -> Option<u32> {
        self.ids.get(piece).copied()
    }

    /// Id for a piece, falling back to `<unk>`.
    pub fn id_or_unk(&self, piece: &str) -> u32 {
        self.ids
            .get(piece)
            .copied()
            .unwrap_or_else(|| self.unk_id())
    }

    pub fn unk_id(&self) -> u32 {
        self.ids[UNK]
    }

    pub fn bos_id(&self) -> u32 {
        self.ids[BOS]
    }

    pub fn eos_id(&self) -> u32 {
        self.ids[EOS]
    }

    pub fn pad_id(&self) -> u32 {
        self.ids[PAD]
    }

    pub fn piece(&self, id: u32) -> Result<&str, SubwordError> {
        self.pieces
            .get(id as usize)
            .map(String::as_str)
            .ok_or(SubwordError::UnknownPieceId(id))
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Non-reserved piece strings, the set vocabulary overlap is measured on.
    pub fn content_pieces(&self) -> impl Iterator<Item = &str> {
        self.pieces[self.reserved_len..].iter().map(String::as_str)
    }

    pub fn encode_ids(&self, pieces: &[String]) -> Vec<u32> {
        pieces.iter().map(|p| self.id_or_unk(p)).collect()
    }

    pub fn decode_ids(&self, ids: &[u32]) -> Result<Vec<String>, SubwordError> {
        ids.iter()
            .map(|&id| self.piece(id).map(str::to_string))
            .collect()
    }

    /// Renames a reserved token in place (id unchanged). Used to assign a
    /// spare control-token slot to a new language without resizing tensors.
    pub fn rename_reserved(&mut self, from: &str, to: &str) -> Result<(), SubwordError> {
        if self.ids.contains_key(to) {
            return Err(SubwordError::DuplicateReserved(to.to_string()));
        }
        let id = self
            .ids
            .remove(from)
            .ok_or_else(|| SubwordError::BadModelFile {
                path: PathBuf::new(),
                message: format!("no reserved token {from:?}"),
            })?;
        if id as usize >= self.reserved_len {
            self.ids.insert(from.to_string(), id);
            return Err(SubwordError::BadModelFile {
                path: PathBuf::new(),
                message: format!("{from:?} is not reserved"),
            });
        }
        self.ids.insert(to.to_string(), id);
        self.pieces[id as usize] = to.to_string();
        Ok(())
    }

    /// Writes the vocabulary as TSV `piece<TAB>id`, one entry per line.
    pub fn save_tsv(&self, path: &Path) -> Result<(), SubwordError> {
        let mut out = String::new();
        for (i, piece) in self.pieces.iter().enumerate() {
            out.push_str(piece);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| SubwordError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_tsv(path: &Path, reserved_len: usize) -> Result<Self, SubwordError> {
        let text = fs::read_to_string(path).map_err(|source| SubwordError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut pieces = Vec::new();
        let mut ids = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let (piece, id_str) =
                line.split_once('\t')
                    .ok_or_else(|| SubwordError::BadModelFile {
                        path: path.to_path_buf(),
                        message: format!("line {}: missing tab", lineno + 1),
                    })?;
            let id: u32 = id_str.parse().map_err(|_| SubwordError::BadModelFile {
                path: path.to_path_buf(),
                message: format!("line {}: bad id {id_str:?}", lineno + 1),
            })?;
            if id as usize != pieces.len() {
                return Err(SubwordError::BadModelFile {
                    path: path.to_path_buf(),
                    message: format!("line {}: ids must be dense and ascending", lineno + 1),
                });
            }
            ids.insert(piece.to_string(), id);
            pieces.push(piece.to_string());
        }
        if ids.len() != pieces.len() {
            return Err(SubwordError::BadModelFile {
                path: path.to_path_buf(),
                message: "duplicate piece".to_string(),
            });
        }
        Ok(Vocabulary {
            pieces,
            ids,
            reserved_len,
        })
    }
}

/// Options for [`train_subword`].
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Merge operations to learn ("segmentation rules").
    pub target_ops: usize,
    /// Extra reserved tokens (control tokens and spare slots), appended
    /// after the four standard ones.
    pub control_tokens: Vec<String>,
    /// Optional cap on final vocabulary size. Must be at least
    /// reserved + alphabet; merge outputs beyond the cap are dropped.
    pub vocab_limit: Option<usize>,
}

impl TrainOptions {
    pub fn new(target_ops: usize) -> Self {
        TrainOptions {
            target_ops,
            control_tokens: Vec::new(),
            vocab_limit: None,
        }
    }

    pub fn with_control_tokens(mut self, tokens: Vec<String>) -> Self {
        self.control_tokens = tokens;
        self
    }

    pub fn with_vocab_limit(mut self, limit: usize) -> Self {
        self.vocab_limit = Some(limit);
        self
    }
}

/// Learns merge rules from one or more corpora.
///
/// Greedy frequency-ordered learning: at every step the most frequent
/// adjacent symbol pair is merged; ties break toward the lexicographically
/// smallest merged piece, then smallest left symbol. Stops early when no
/// adjacent pair remains.
pub fn train_subword(
    corpora: &[&MonoCorpus],
    opts: &TrainOptions,
) -> Result<(SubwordModel, Vocabulary), SubwordError> {
    let mut reserved: Vec<String> = vec![
        PAD.to_string(),
        UNK.to_string(),
        BOS.to_string(),
        EOS.to_string(),
    ];
    for t in &opts.control_tokens {
        if reserved.contains(t) {
            return Err(SubwordError::DuplicateReserved(t.clone()));
        }
        reserved.push(t.clone());
    }
    let reserved_set: HashSet<&str> = reserved.iter().map(String::as_str).collect();

    // Word frequency table over all corpora; reserved tokens are atomic and
    // contribute no pairs.
    let mut word_counts: HashMap<String, u64> = HashMap::new();
    for corpus in corpora {
        for segment in &corpus.segments {
            for word in segment.split_whitespace() {
                if reserved_set.contains(word) {
                    continue;
                }
                if let Some(pos) = word.find(BOUNDARY) {
                    return Err(SubwordError::BoundaryMarkerInInput { offset: pos });
                }
                *word_counts.entry(word.to_string()).or_insert(0) += 1;
            }
        }
    }
    if word_counts.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }

    let mut trainer = MergeTrainer::new(&word_counts);
    let merges = trainer.run(opts.target_ops);
    let mut alphabet: Vec<String> = trainer.alphabet.into_iter().collect();
    alphabet.sort();

    for m in &merges {
        if reserved_set.contains(m.merged().as_str()) {
            return Err(SubwordError::ReservedMergeOutput(m.merged()));
        }
    }

    let mut model = SubwordModel {
        version: 1,
        normalization: NORMALIZATION_WS_V1.to_string(),
        reserved,
        alphabet,
        merges,
        requested_ops: opts.target_ops,
    };

    if let Some(limit) = opts.vocab_limit {
        let minimum = model.reserved.len() + model.alphabet.len();
        if limit < minimum {
            return Err(SubwordError::VocabLimitTooSmall { limit, minimum });
        }
        // Merge outputs can collide with earlier entries, so trim against
        // the realized vocabulary, not the raw merge count.
        while Vocabulary::from_model(&model).size() > limit {
            let over = Vocabulary::from_model(&model).size() - limit;
            let keep = model.merges.len().saturating_sub(over);
            model.merges.truncate(keep);
        }
    }

    let vocab = Vocabulary::from_model(&model);
    Ok((model, vocab))
}

/// Incremental BPE trainer: pair counts plus an occurrence index, updated
/// only for words touched by each merge, with a lazy max-heap for selection.
struct MergeTrainer {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), u64>,
    pair_words: HashMap<(u32, u32), HashSet<usize>>,
    heap: BinaryHeap<HeapEntry>,
    alphabet: HashSet<String>,
}

#[derive(PartialEq, Eq)]
struct HeapEntry {
    count: u64,
    merged: Reverse<String>,
    left: Reverse<String>,
    pair: (u32, u32),
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.count, &self.merged, &self.left)
            .cmp(&(other.count, &other.merged, &other.left))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl MergeTrainer {
    fn new(word_counts: &HashMap<String, u64>) -> Self {
        let mut trainer = MergeTrainer {
            symbols: Vec::new(),
            symbol_ids: HashMap::new(),
            words: Vec::new(),
            pair_counts: HashMap::new(),
            pair_words: HashMap::new(),
            heap: BinaryHeap::new(),
            alphabet: HashSet::new(),
        };
        // Sort for determinism: word iteration order must not depend on the
        // hash map.
        let mut sorted: Vec<(&String, &u64)> = word_counts.iter().collect();
        sorted.sort();
        for (word, &count) in sorted {
            let syms = word_symbols(word);
            for s in &syms {
                trainer.alphabet.insert(s.clone());
            }
            let ids: Vec<u32> = syms.iter().map(|s| trainer.intern(s)).collect();
            let word_idx = trainer.words.len();
            for w in ids.windows(2) {
                let pair = (w[0], w[1]);
                *trainer.pair_counts.entry(pair).or_insert(0) += count;
                trainer.pair_words.entry(pair).or_default().insert(word_idx);
            }
            trainer.words.push((ids, count));
        }
        let pairs: Vec<((u32, u32), u64)> =
            trainer.pair_counts.iter().map(|(&p, &c)| (p, c)).collect();
        for (pair, count) in pairs {
            trainer.push_heap(pair, count);
        }
        trainer
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.symbol_ids.insert(s.to_string(), id);
        id
    }

    fn push_heap(&mut self, pair: (u32, u32), count: u64) {
        if count == 0 {
            return;
        }
        let left = self.symbols[pair.0 as usize].clone();
        let merged = format!("{left}{}", self.symbols[pair.1 as usize]);
        self.heap.push(HeapEntry {
            count,
            merged: Reverse(merged),
            left: Reverse(left),
            pair,
        });
    }

    fn run(&mut self, target_ops: usize) -> Vec<MergeRule> {
        let mut merges = Vec::with_capacity(target_ops.min(1 << 16));
        while merges.len() < target_ops {
            let Some(best) = self.pop_valid() else {
                break;
            };
            let (a, b) = best;
            let rule = MergeRule {
                left: self.symbols[a as usize].clone(),
                right: self.symbols[b as usize].clone(),
            };
            let new_id = self.intern(&rule.merged());
            self.apply_merge(a, b, new_id);
            merges.push(rule);
        }
        merges
    }

    /// Pops heap entries until one matches the live pair-count table.
    fn pop_valid(&mut self) -> Option<(u32, u32)> {
        while let Some(top) = self.heap.pop() {
            match self.pair_counts.get(&top.pair) {
                Some(&c) if c == top.count && c > 0 => return Some(top.pair),
                _ => continue, // stale entry
            }
        }
        None
    }

    fn apply_merge(&mut self, a: u32, b: u32, new_id: u32) {
        let affected: Vec<usize> = match self.pair_words.remove(&(a, b)) {
            Some(set) => {
                let mut v: Vec<usize> = set.into_iter().collect();
                v.sort_unstable();
                v
            }
            None => return,
        };
        self.pair_counts.remove(&(a, b));
        let mut touched: HashMap<(u32, u32), i64> = HashMap::new();
        for word_idx in affected {
            let (ref mut ids, count) = self.words[word_idx];
            // Remove the word's current pair contributions, rewrite, re-add.
            for w in ids.windows(2) {
                *touched.entry((w[0], w[1])).or_insert(0) -= count as i64;
            }
            let mut rewritten = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == a && ids[i + 1] == b {
                    rewritten.push(new_id);
                    i += 2;
                } else {
                    rewritten.push(ids[i]);
                    i += 1;
                }
            }
            for w in rewritten.windows(2) {
                let pair = (w[0], w[1]);
                *touched.entry(pair).or_insert(0) += count as i64;
                self.pair_words.entry(pair).or_default().insert(word_idx);
            }
            *ids = rewritten;
        }
        let mut changed: Vec<((u32, u32), i64)> = touched
            .into_iter()
            .filter(|&(_, delta)| delta != 0)
            .collect();
        changed.sort_unstable();
        for (pair, delta) in changed {
            if pair == (a, b) {
                continue; // fully consumed by this merge
            }
            let entry = self.pair_counts.entry(pair).or_insert(0);
            let updated = (*entry as i64 + delta).max(0) as u64;
            *entry = updated;
            if updated == 0 {
                self.pair_counts.remove(&pair);
                self.pair_words.remove(&pair);
            } else {
                self.push_heap(pair, updated);
            }
        }
    }
}

/// Splits a word into its atomic symbols: one per character, with the
/// boundary marker fused onto the final character.
fn word_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == n {
                format!("{c}{BOUNDARY}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Applies a model's merges to text. Caches per-word segmentations, which
/// matters when encoding whole corpora.
pub struct Encoder<'a> {
    model: &'a SubwordModel,
    ranks: HashMap<(String, String), usize>,
    reserved: HashSet<&'a str>,
    cache: RefCell<HashMap<String, Vec<String>>>,
}

impl<'a> Encoder<'a> {
    fn new(model: &'a SubwordModel) -> Self {
        let mut ranks = HashMap::with_capacity(model.merges.len());
        for (i, m) in model.merges.iter().enumerate() {
            ranks.entry((m.left.clone(), m.right.clone())).or_insert(i);
        }
        Encoder {
            model,
            ranks,
            reserved: model.reserved.iter().map(String::as_str).collect(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn encode(&self, text: &str) -> Result<Vec<String>, SubwordError> {
        if let Some(pos) = text.find(BOUNDARY) {
            return Err(SubwordError::BoundaryMarkerInInput { offset: pos });
        }
        let mut pieces = Vec::new();
        for word in text.split_whitespace() {
            if self.reserved.contains(word) {
                pieces.push(word.to_string());
                continue;
            }
            if let Some(cached) = self.cache.borrow().get(word) {
                pieces.extend(cached.iter().cloned());
                continue;
            }
            let segmented = self.segment_word(word);
            pieces.extend(segmented.iter().cloned());
            self.cache
                .borrow_mut()
                .insert(word.to_string(), segmented);
        }
        Ok(pieces)
    }

    /// Repeatedly fuses the adjacent pair with the lowest merge rank, which
    /// is equivalent to replaying the merge list in order.
    fn segment_word(&self, word: &str) -> Vec<String> {
        let mut syms = word_symbols(word);
        loop {
            let mut best: Option<(usize, usize)> = None; // (rank, position)
            for i in 0..syms.len().saturating_sub(1) {
                if let Some(&rank) = self
                    .ranks
                    .get(&(syms[i].clone(), syms[i + 1].clone()))
                {
                    if best.map_or(true, |(r, _)| rank < r) {
                        best = Some((rank, i));
                    }
                }
            }
            let Some((_, pos)) = best else {
                return syms;
            };
            let fused = format!("{}{}", syms[pos], syms[pos + 1]);
            syms.splice(pos..=pos + 1, [fused]);
        }
    }

    pub fn decode(&self, pieces: &[String]) -> String {
        decode_pieces(&self.model.reserved, pieces)
    }
}

fn decode_pieces(reserved: &[String], pieces: &[String]) -> String {
    let reserved_set: HashSet<&str> = reserved.iter().map(String::as_str).collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for piece in pieces {
        if reserved_set.contains(piece.as_str()) {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            words.push(piece.clone());
            continue;
        }
        if let Some(stripped) = piece.strip_suffix(BOUNDARY) {
            current.push_str(stripped);
            words.push(std::mem::take(&mut current));
        } else {
            current.push_str(piece);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ")
}

/// |pieces(a) ∩ pieces(b)| / |pieces(a)|, reserved tokens excluded from both
/// sides. Measures how much of the *new* vocabulary `a` is already covered
/// by `b`.
pub fn vocab_overlap(a: &Vocabulary, b: &Vocabulary) -> f64 {
    let a_set: HashSet<&str> = a.content_pieces().collect();
    if a_set.is_empty() {
        return 0.0;
    }
    let b_set: HashSet<&str> = b.content_pieces().collect();
    let shared = a_set.iter().filter(|p| b_set.contains(**p)).count();
    shared as f64 / a_set.len() as f64
}

/// One row of the overlap search table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub candidate_ops: usize,
    pub learned_ops: usize,
    pub vocab_size: usize,
    pub overlap: f64,
}

/// Result of [`search_overlap_size`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapSearch {
    pub best_ops: usize,
    pub table: Vec<OverlapEntry>,
}

/// Trains one model per candidate merge budget and returns the size whose
/// vocabulary overlaps the pretrained vocabulary most; ties break toward
/// the smaller size.
pub fn search_overlap_size(
    corpora: &[&MonoCorpus],
    pretrained: &Vocabulary,
    candidate_ops: &[usize],
    control_tokens: &[String],
) -> Result<(OverlapSearch, SubwordModel, Vocabulary), SubwordError> {
    if candidate_ops.is_empty() {
        return Err(SubwordError::EmptyCandidateList);
    }
    let mut table = Vec::with_capacity(candidate_ops.len());
    let mut best: Option<(usize, f64, SubwordModel, Vocabulary)> = None;
    let mut sorted = candidate_ops.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &ops in &sorted {
        let opts =
            TrainOptions::new(ops).with_control_tokens(control_tokens.to_vec());
        let (model, vocab) = train_subword(corpora, &opts)?;
        let overlap = vocab_overlap(&vocab, pretrained);
        table.push(OverlapEntry {
            candidate_ops: ops,
            learned_ops: model.learned_ops(),
            vocab_size: vocab.size(),
            overlap,
        });
        // Strictly-greater keeps the smaller size on ties (ascending scan).
        if best.as_ref().map_or(true, |(_, b, _, _)| overlap > *b) {
            best = Some((ops, overlap, model, vocab));
        }
    }
    let (best_ops, _, model, vocab) = best.expect("candidate list is non-empty");
    Ok((OverlapSearch { best_ops, table }, model, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LangTag;
    use proptest::prelude::*;

    fn mono(lines: &[&str]) -> MonoCorpus {
        MonoCorpus::new(
            LangTag::new("xx").unwrap(),
            lines.iter().map(|s| s.to_string()).collect(),
        )
    }

    #[test]
    fn zero_ops_gives_character_vocabulary() {
        let corpus = mono(&["ab ba"]);
        let (model, vocab) = train_subword(&[&corpus], &TrainOptions::new(0)).unwrap();
        assert!(model.merges.is_empty());
        // a, b, a▁, b▁ plus the four reserved tokens.
        assert_eq!(vocab.size(), 4 + 4);
    }

    // Greedy counter hand-run on "aaab aaab" (frozen oracle):
    //   symbols per word: [a, a, a, b▁]
    //   (a,a) count 4 → merge 1: (a,a)→aa
    //   then (aa,a) and (a,b▁) both count 2; "aaa" < "ab▁" → merge 2: (aa,a)→aaa
    #[test]
    fn two_merge_hand_case() {
        let corpus = mono(&["aaab aaab"]);
        let (model, _) = train_subword(&[&corpus], &TrainOptions::new(2)).unwrap();
        assert_eq!(
            model.merges,
            vec![
                MergeRule {
                    left: "a".into(),
                    right: "a".into()
                },
                MergeRule {
                    left: "aa".into(),
                    right: "a".into()
                },
            ]
        );
        // Encoding "aaab" under this model: ["aaa", "b▁"].
        let pieces = model.encode("aaab").unwrap();
        assert_eq!(pieces, vec!["aaa".to_string(), format!("b{BOUNDARY}")]);
    }

    #[test]
    fn roundtrip_on_fixture_lines() {
        let corpus = mono(&["ola mundo", "bos dias amigo", "a b c"]);
        let (model, _) = train_subword(&[&corpus], &TrainOptions::new(10)).unwrap();
        let enc = model.encoder();
        for line in &corpus.segments {
            let pieces = enc.encode(line).unwrap();
            assert_eq!(enc.decode(&pieces), *line);
        }
    }

    #[test]
    fn unseen_characters_stay_pieces_until_id_mapping() {
        let corpus = mono(&["ola mundo"]);
        let (model, vocab) = train_subword(&[&corpus], &TrainOptions::new(5)).unwrap();
        let pieces = model.encode("zzz").unwrap();
        // No <unk> at piece time.
        assert!(pieces.iter().all(|p| p != UNK));
        // Unknown pieces map to <unk> at id time.
        let ids = vocab.encode_ids(&pieces);
        assert!(ids.iter().any(|&i| i == vocab.unk_id()));
    }

    #[test]
    fn reserved_tokens_pass_through_atomically() {
        let corpus = mono(&["ola mundo"]);
        let opts = TrainOptions::new(5).with_control_tokens(vec!["<2en>".into()]);
        let (model, vocab) = train_subword(&[&corpus], &opts).unwrap();
        let pieces = model.encode("<2en> ola mundo").unwrap();
        assert_eq!(pieces[0], "<2en>");
        assert_eq!(model.decode(&pieces), "<2en> ola mundo");
        assert!(vocab.id("<2en>").unwrap() < vocab.reserved_len() as u32);
    }

    #[test]
    fn determinism_byte_identical_serialization() {
        let corpus = mono(&["ola mundo bos dias", "mundo ola", "dias bos"]);
        let opts = TrainOptions::new(12);
        let (m1, _) = train_subword(&[&corpus], &opts).unwrap();
        let (m2, _) = train_subword(&[&corpus], &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&m1).unwrap(),
            serde_json::to_string(&m2).unwrap()
        );
    }

    #[test]
    fn vocab_limit_below_characters_errors_with_minimum() {
        let corpus = mono(&["abcdef"]);
        let opts = TrainOptions::new(3).with_vocab_limit(5);
        match train_subword(&[&corpus], &opts) {
            Err(SubwordError::VocabLimitTooSmall { limit, minimum }) => {
                assert_eq!(limit, 5);
                assert_eq!(minimum, 4 + 6); // reserved + a,b,c,d,e,f▁... six symbols
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vocab_limit_truncates_merges() {
        // Alphabet of "aaab" is {a, b▁}: reserved(4) + alphabet(2) = 6, so a
        // limit of 7 leaves room for exactly one merge output.
        let corpus = mono(&["aaab aaab"]);
        let opts = TrainOptions::new(2).with_vocab_limit(7);
        let (model, vocab) = train_subword(&[&corpus], &opts).unwrap();
        assert_eq!(model.merges.len(), 1);
        assert_eq!(vocab.size(), 7);
    }

    #[test]
    fn overlap_identity_disjoint_and_subset() {
        let c1 = mono(&["ola mundo"]);
        let c2 = mono(&["xyz qrs"]);
        let (_, v1) = train_subword(&[&c1], &TrainOptions::new(4)).unwrap();
        let (_, v1b) = train_subword(&[&c1], &TrainOptions::new(4)).unwrap();
        let (_, v2) = train_subword(&[&c2], &TrainOptions::new(4)).unwrap();
        assert_eq!(vocab_overlap(&v1, &v1b), 1.0);
        assert_eq!(vocab_overlap(&v1, &v2), 0.0);
        // a ⊂ b: fewer merges from the same corpus yield a piece subset.
        let (_, v_small) = train_subword(&[&c1], &TrainOptions::new(2)).unwrap();
        assert_eq!(vocab_overlap(&v_small, &v1), 1.0);
    }

    #[test]
    fn overlap_search_self_consistency_and_ties() {
        let corpus = mono(&["ola mundo bos dias", "ola dias", "mundo bos"]);
        let (_, pretrained) = train_subword(&[&corpus], &TrainOptions::new(6)).unwrap();
        let (search, _, _) =
            search_overlap_size(&[&corpus], &pretrained, &[6], &[]).unwrap();
        assert_eq!(search.best_ops, 6);
        assert_eq!(search.table[0].overlap, 1.0);

        // Candidates [0] return the character model.
        let (search0, model0, _) =
            search_overlap_size(&[&corpus], &pretrained, &[0], &[]).unwrap();
        assert_eq!(search0.best_ops, 0);
        assert!(model0.merges.is_empty());
    }

    #[test]
    fn model_file_roundtrip() {
        let corpus = mono(&["ola mundo"]);
        let (model, _) = train_subword(&[&corpus], &TrainOptions::new(3)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        model.save(f.path()).unwrap();
        let loaded = SubwordModel::load(f.path()).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn vocab_tsv_roundtrip() {
        let corpus = mono(&["ola mundo"]);
        let (_, vocab) = train_subword(&[&corpus], &TrainOptions::new(3)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        vocab.save_tsv(f.path()).unwrap();
        let loaded = Vocabulary::load_tsv(f.path(), vocab.reserved_len()).unwrap();
        assert_eq!(vocab, loaded);
    }

    #[test]
    fn pieces_per_word_grows_as_ops_shrink() {
        let lines = [
            "o gato branco mira o rio",
            "a casa grande do amigo",
            "os gatos miran os rios",
            "a amiga branca da casa",
        ];
        let corpus = mono(&lines);
        let mut last = f64::NEG_INFINITY;
        for ops in [24usize, 12, 4, 0] {
            let (model, _) = train_subword(&[&corpus], &TrainOptions::new(ops)).unwrap();
            let enc = model.encoder();
            let mut pieces = 0usize;
            let mut words = 0usize;
            for line in &lines {
                pieces += enc.encode(line).unwrap().len();
                words += line.split_whitespace().count();
            }
            let per_word = pieces as f64 / words as f64;
            assert!(
                per_word >= last,
                "pieces-per-word must not shrink as ops drop: {per_word} < {last}"
            );
            last = per_word;
        }
    }

    proptest! {
        // Round trip on whitespace-normalized text drawn from a small
        // alphabet, encoded with a model trained on unrelated text.
        #[test]
        fn roundtrip_random_normalized_text(words in proptest::collection::vec("[abcdexyz]{1,8}", 1..8)) {
            let corpus = mono(&["abc xbz", "dex yza"]);
            let (model, _) = train_subword(&[&corpus], &TrainOptions::new(6)).unwrap();
            let text = words.join(" ");
            let enc = model.encoder();
            let pieces = enc.encode(&text).unwrap();
            prop_assert_eq!(enc.decode(&pieces), text);
        }

        // Overlap is insensitive to id permutation because it is computed
        // on piece sets; exercised by comparing models trained with extra
        // reserved tokens (which shift all content ids).
        #[test]
        fn overlap_invariant_under_id_shift(ops in 0usize..8) {
            let corpus = mono(&["ola mundo bos dias"]);
            let (_, v1) = train_subword(&[&corpus], &TrainOptions::new(ops)).unwrap();
            let opts = TrainOptions::new(ops).with_control_tokens(vec!["<2en>".into(), "<2pt>".into()]);
            let (_, v2) = train_subword(&[&corpus], &opts).unwrap();
            prop_assert_eq!(vocab_overlap(&v1, &v2), 1.0);
            prop_assert_eq!(vocab_overlap(&v2, &v1), 1.0);
        }
    }
}

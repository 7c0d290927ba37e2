//! Synthetic language family generator.
//!
//! Produces a controlled stand-in for a real low-resource setting: a base
//! language sampled from a seeded stochastic grammar, related "dialects" at
//! parameterized transform intensities, and a pivot language reachable by a
//! deterministic invertible token mapping (the reference "translation").
//!
//! The construction is nested so that distance grows strictly with the
//! intensity ε: a dialect at higher ε substitutes a superset of the lemmas
//! substituted at lower ε (with identical replacements), and character
//! rewrites trigger on a superset of positions. The generator self-checks
//! that mean token edit distance from the base is strictly increasing in ε.

use std::collections::HashSet;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    Bitext, CorpusError, CorpusManifest, LangTag, ManifestEntry, Role,
};
use crate::ngram::NGramModel;
use crate::seeding::{rng_for, stable_hash};
use crate::subword::SubwordModel;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("duplicate language tag {0}")]
    DuplicateLang(LangTag),
    #[error("dialect intensities must be distinct and sorted ascending")]
    UnsortedIntensities,
    #[error("intensity {0} outside [0, 1]")]
    IntensityOutOfRange(f64),
    #[error("all corpus sizes must be at least 1")]
    ZeroSize,
    #[error(
        "edit-distance self-check failed: dialect {lang} (ε={eps}) at {dist:.4} \
         does not exceed the previous dialect's {prev:.4}"
    )]
    DistanceNotMonotone {
        lang: LangTag,
        eps: f64,
        dist: f64,
        prev: f64,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// One related language: tag, transform intensity, training-pool size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialectSpec {
    pub lang: LangTag,
    pub intensity: f64,
    pub train_size: usize,
}

/// Sizes of the base-language corpora per role.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoleSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Full description of a synthetic family; same spec, same bytes out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub base_lang: LangTag,
    pub pivot_lang: LangTag,
    /// Seed of the base grammar, lexicon, and dialect transforms.
    pub family_seed: u64,
    /// Seed of the invertible base-to-pivot token mapping.
    pub pivot_seed: u64,
    pub dialects: Vec<DialectSpec>,
    pub base_sizes: RoleSizes,
}

impl FamilySpec {
    /// The default harness family: pool sizes follow the 184k/196k/204k
    /// ratio divided by `scale`, the base keeps its fixed 10k/682/1007
    /// train/dev/test split.
    pub fn harness(family_seed: u64, scale: usize) -> Self {
        let scale = scale.max(1);
        FamilySpec {
            base_lang: LangTag::new("d0").unwrap(),
            pivot_lang: LangTag::new("en").unwrap(),
            family_seed,
            pivot_seed: family_seed.wrapping_add(1),
            dialects: vec![
                DialectSpec {
                    lang: LangTag::new("d1").unwrap(),
                    intensity: 0.1,
                    train_size: 184_000 / scale,
                },
                DialectSpec {
                    lang: LangTag::new("d2").unwrap(),
                    intensity: 0.3,
                    train_size: 196_000 / scale,
                },
                DialectSpec {
                    lang: LangTag::new("d3").unwrap(),
                    intensity: 0.6,
                    train_size: 204_000 / scale,
                },
            ],
            base_sizes: RoleSizes {
                train: 10_000,
                dev: 682,
                test: 1007,
            },
        }
    }

    /// A small family for fast tests.
    pub fn tiny(family_seed: u64) -> Self {
        let mut spec = FamilySpec::harness(family_seed, 1);
        for (d, size) in spec.dialects.iter_mut().zip([1200usize, 1300, 1400]) {
            d.train_size = size;
        }
        spec.base_sizes = RoleSizes {
            train: 900,
            dev: 120,
            test: 150,
        };
        spec
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let mut langs: HashSet<&LangTag> = HashSet::new();
        for lang in std::iter::once(&self.base_lang)
            .chain(std::iter::once(&self.pivot_lang))
            .chain(self.dialects.iter().map(|d| &d.lang))
        {
            if !langs.insert(lang) {
                return Err(SynthError::DuplicateLang(lang.clone()));
            }
        }
        for w in self.dialects.windows(2) {
            if w[0].intensity >= w[1].intensity {
                return Err(SynthError::UnsortedIntensities);
            }
        }
        for d in &self.dialects {
            if !(0.0..=1.0).contains(&d.intensity) {
                return Err(SynthError::IntensityOutOfRange(d.intensity));
            }
            if d.train_size == 0 {
                return Err(SynthError::ZeroSize);
            }
        }
        if self.base_sizes.train == 0 || self.base_sizes.dev == 0 || self.base_sizes.test == 0 {
            return Err(SynthError::ZeroSize);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Det,
    Pron,
    Prep,
    Conj,
    Noun,
    Verb,
    Adj,
    Adv,
}

/// Class sizes; roughly 610 lemmas overall.
const CLASS_SIZES: [(Pos, usize); 8] = [
    (Pos::Det, 6),
    (Pos::Pron, 8),
    (Pos::Prep, 10),
    (Pos::Conj, 4),
    (Pos::Noun, 340),
    (Pos::Verb, 170),
    (Pos::Adj, 90),
    (Pos::Adv, 32),
];

fn forms_for(pos: Pos) -> usize {
    match pos {
        Pos::Noun => 7,
        Pos::Verb => 9,
        Pos::Adj => 6,
        _ => 1,
    }
}

/// A token as generated by the grammar, before any surface realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lexeme {
    lemma: usize,
    form: usize,
}

struct Lexicon {
    /// surfaces[lemma][form]
    surfaces: Vec<Vec<String>>,
    lemma_pos: Vec<Pos>,
    by_pos: Vec<(Pos, Vec<usize>)>,
}

const ONSETS: [&str; 26] = [
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "x", "z",
    "br", "tr", "pl", "gr", "st", "fr", "cl", "dr",
];
const NUCLEI: [&str; 11] = ["a", "e", "i", "o", "u", "ai", "ei", "ou", "ia", "ua", "ie"];
const CODAS: [&str; 10] = ["", "", "n", "r", "s", "l", "m", "x", "t", "p"];

fn gen_syllable(rng: &mut ChaCha8Rng) -> String {
    let onset = ONSETS[rng.gen_range(0..ONSETS.len())];
    let nucleus = NUCLEI[rng.gen_range(0..NUCLEI.len())];
    let coda = CODAS[rng.gen_range(0..CODAS.len())];
    format!("{onset}{nucleus}{coda}")
}

fn gen_stem(rng: &mut ChaCha8Rng, min_syll: usize, max_syll: usize) -> String {
    let n = rng.gen_range(min_syll..=max_syll);
    (0..n).map(|_| gen_syllable(rng)).collect()
}

fn gen_unique_stem(
    rng: &mut ChaCha8Rng,
    taken: &mut HashSet<String>,
    min_syll: usize,
    max_syll: usize,
) -> String {
    loop {
        let stem = gen_stem(rng, min_syll, max_syll);
        if taken.insert(stem.clone()) {
            return stem;
        }
    }
}

impl Lexicon {
    /// Builds a lexicon: unique stems per lemma, a per-class suffix paradigm
    /// realizing the forms, all surfaces unique.
    fn generate(rng: &mut ChaCha8Rng, long_stems: bool) -> Lexicon {
        let (min_syll, max_syll) = if long_stems { (3, 5) } else { (1, 3) };
        let mut taken_surfaces: HashSet<String> = HashSet::new();
        let mut surfaces = Vec::new();
        let mut lemma_pos = Vec::new();
        let mut by_pos = Vec::new();
        // One suffix set per (pos, form>0); the zero form is the bare stem.
        let mut suffixes: Vec<Vec<String>> = Vec::new();
        for (pos, _) in CLASS_SIZES {
            let n_forms = forms_for(pos);
            let mut forms = vec![String::new()];
            let mut seen = HashSet::new();
            seen.insert(String::new());
            while forms.len() < n_forms {
                let len = rng.gen_range(1..=3);
                let suffix: String = (0..len)
                    .map(|_| {
                        let chars = b"aeiounrstm";
                        chars[rng.gen_range(0..chars.len())] as char
                    })
                    .collect();
                if seen.insert(suffix.clone()) {
                    forms.push(suffix);
                }
            }
            suffixes.push(forms);
        }
        let mut stems_taken = HashSet::new();
        for (class_idx, (pos, count)) in CLASS_SIZES.iter().enumerate() {
            let mut ids = Vec::with_capacity(*count);
            for _ in 0..*count {
                // Function words stay short; content words carry 2-4 syllables.
                let (lo, hi) = match pos {
                    Pos::Det | Pos::Pron | Pos::Prep | Pos::Conj => (1, 1),
                    _ => (min_syll, max_syll),
                };
                loop {
                    let stem = gen_unique_stem(rng, &mut stems_taken, lo, hi);
                    let forms: Vec<String> = suffixes[class_idx]
                        .iter()
                        .map(|suf| format!("{stem}{suf}"))
                        .collect();
                    if forms.iter().all(|f| !taken_surfaces.contains(f)) {
                        for f in &forms {
                            taken_surfaces.insert(f.clone());
                        }
                        ids.push(surfaces.len());
                        surfaces.push(forms);
                        lemma_pos.push(*pos);
                        break;
                    }
                }
            }
            by_pos.push((*pos, ids));
        }
        Lexicon {
            surfaces,
            lemma_pos,
            by_pos,
        }
    }

    fn lemma_count(&self) -> usize {
        self.surfaces.len()
    }

    fn surface(&self, lex: Lexeme) -> &str {
        &self.surfaces[lex.lemma][lex.form]
    }

    fn ids(&self, pos: Pos) -> &[usize] {
        &self
            .by_pos
            .iter()
            .find(|(p, _)| *p == pos)
            .expect("every class is populated")
            .1
    }
}

/// Zipf-weighted samplers per POS class.
struct ZipfSamplers {
    samplers: Vec<(Pos, WeightedIndex<f64>)>,
}

impl ZipfSamplers {
    fn new(lexicon: &Lexicon) -> Self {
        let samplers = lexicon
            .by_pos
            .iter()
            .map(|(pos, ids)| {
                let weights: Vec<f64> =
                    (0..ids.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();
                (*pos, WeightedIndex::new(weights).expect("non-empty class"))
            })
            .collect();
        ZipfSamplers { samplers }
    }

    fn sample(&self, lexicon: &Lexicon, pos: Pos, rng: &mut ChaCha8Rng) -> usize {
        let (_, sampler) = self
            .samplers
            .iter()
            .find(|(p, _)| *p == pos)
            .expect("every class has a sampler");
        lexicon.ids(pos)[sampler.sample(rng)]
    }
}

struct Grammar<'a> {
    lexicon: &'a Lexicon,
    zipf: ZipfSamplers,
}

impl<'a> Grammar<'a> {
    fn new(lexicon: &'a Lexicon) -> Self {
        Grammar {
            lexicon,
            zipf: ZipfSamplers::new(lexicon),
        }
    }

    fn lex(&self, pos: Pos, rng: &mut ChaCha8Rng) -> Lexeme {
        let lemma = self.zipf.sample(self.lexicon, pos, rng);
        let form = rng.gen_range(0..forms_for(self.lexicon.lemma_pos[lemma]));
        Lexeme { lemma, form }
    }

    fn noun_phrase(&self, out: &mut Vec<Lexeme>, rng: &mut ChaCha8Rng) {
        out.push(self.lex(Pos::Det, rng));
        if rng.gen_bool(0.35) {
            out.push(self.lex(Pos::Adj, rng));
        }
        out.push(self.lex(Pos::Noun, rng));
    }

    fn prep_phrase(&self, out: &mut Vec<Lexeme>, rng: &mut ChaCha8Rng) {
        out.push(self.lex(Pos::Prep, rng));
        self.noun_phrase(out, rng);
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> Vec<Lexeme> {
        let mut out = Vec::with_capacity(12);
        match rng.gen_range(0..10u32) {
            0..=2 => {
                // NP V NP
                self.noun_phrase(&mut out, rng);
                out.push(self.lex(Pos::Verb, rng));
                self.noun_phrase(&mut out, rng);
            }
            3..=4 => {
                // NP V
                self.noun_phrase(&mut out, rng);
                out.push(self.lex(Pos::Verb, rng));
                if rng.gen_bool(0.4) {
                    out.push(self.lex(Pos::Adv, rng));
                }
            }
            5..=6 => {
                // NP V NP PP
                self.noun_phrase(&mut out, rng);
                out.push(self.lex(Pos::Verb, rng));
                self.noun_phrase(&mut out, rng);
                self.prep_phrase(&mut out, rng);
            }
            7 => {
                // Pron V NP
                out.push(self.lex(Pos::Pron, rng));
                out.push(self.lex(Pos::Verb, rng));
                self.noun_phrase(&mut out, rng);
            }
            8 => {
                // NP V PP
                self.noun_phrase(&mut out, rng);
                out.push(self.lex(Pos::Verb, rng));
                self.prep_phrase(&mut out, rng);
            }
            _ => {
                // NP V Conj Pron V Adv?
                self.noun_phrase(&mut out, rng);
                out.push(self.lex(Pos::Verb, rng));
                out.push(self.lex(Pos::Conj, rng));
                out.push(self.lex(Pos::Pron, rng));
                out.push(self.lex(Pos::Verb, rng));
                if rng.gen_bool(0.3) {
                    out.push(self.lex(Pos::Adv, rng));
                }
            }
        }
        out
    }
}

/// Character rewrites available to dialect transforms; targets never occur
/// in base surfaces, so a rewrite can only move a word away from the base.
const REWRITES: [(char, char); 8] = [
    ('a', 'á'),
    ('e', 'è'),
    ('i', 'í'),
    ('o', 'ô'),
    ('u', 'ü'),
    ('n', 'ñ'),
    ('s', 'ş'),
    ('r', 'ŕ'),
];

/// Fraction of rewritable positions flipped at ε = 1.
const REWRITE_RATE: f64 = 0.5;

/// Deterministic dialect transform: nested lexical substitution plus nested
/// character rewrites, density governed by the intensity ε.
pub struct Transform {
    intensity: f64,
    family_seed: u64,
    /// lemma -> replacement surfaces, populated for substituted lemmas.
    substitutions: Vec<Option<Vec<String>>>,
}

impl Transform {
    fn identity_len(lexicon: &Lexicon) -> Vec<Option<Vec<String>>> {
        vec![None; lexicon.lemma_count()]
    }

    /// Applies the transform to the surface of a lexeme.
    fn apply(&self, lexicon: &Lexicon, lex: Lexeme) -> String {
        let word = match &self.substitutions[lex.lemma] {
            Some(forms) => forms[lex.form].clone(),
            None => lexicon.surface(lex).to_string(),
        };
        if self.intensity == 0.0 {
            return word;
        }
        let threshold = (self.intensity * REWRITE_RATE * 1000.0) as u64;
        word.chars()
            .enumerate()
            .map(|(i, c)| {
                match REWRITES.iter().find(|(from, _)| *from == c) {
                    Some((_, to)) => {
                        let h = stable_hash(&[
                            &self.family_seed.to_le_bytes(),
                            word.as_bytes(),
                            &(i as u64).to_le_bytes(),
                        ]);
                        if h % 1000 < threshold {
                            *to
                        } else {
                            c
                        }
                    }
                    None => c,
                }
            })
            .collect()
    }
}

/// Everything generated for one family, in memory.
pub struct FamilyData {
    pub spec: FamilySpec,
    /// Base-language parallel data (base → pivot), train/dev/test.
    pub base_train: Bitext,
    pub base_dev: Bitext,
    pub base_test: Bitext,
    /// Per-dialect training pools (dialect → pivot), in spec order.
    pub pools: Vec<(LangTag, f64, Bitext)>,
    /// Self-check record: (lang, ε, mean token edit distance from base).
    pub edit_distances: Vec<(LangTag, f64, f64)>,
}

/// Generates the family described by `spec`. Deterministic: the same spec
/// yields byte-identical corpora.
pub fn generate_family(spec: &FamilySpec) -> Result<FamilyData, SynthError> {
    spec.validate()?;
    let mut lex_rng = rng_for(spec.family_seed, "lexicon");
    let lexicon = Lexicon::generate(&mut lex_rng, true);
    let grammar = Grammar::new(&lexicon);

    // Pivot lexicon: unique pivot surface per (lemma, form) — an invertible
    // token mapping standing in for the reference translation.
    let mut pivot_rng = rng_for(spec.pivot_seed, "pivot-lexicon");
    let pivot_lexicon = Lexicon::generate(&mut pivot_rng, false);

    // Shared substitution machinery: one permutation of lemmas and one
    // replacement table for the whole family, so dialect substitution sets
    // are nested and replacements agree across dialects.
    let mut subst_rng = rng_for(spec.family_seed, "substitution");
    let mut order: Vec<usize> = (0..lexicon.lemma_count()).collect();
    for i in (1..order.len()).rev() {
        let j = subst_rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut replacement_stems = HashSet::new();
    let replacements: Vec<Vec<String>> = (0..lexicon.lemma_count())
        .map(|rank| {
            let lemma = order[rank];
            let pos = lexicon.lemma_pos[lemma];
            let stem = gen_unique_stem(&mut subst_rng, &mut replacement_stems, 2, 4);
            (0..forms_for(pos))
                .map(|form| format!("{stem}{}", suffix_of(&lexicon, lemma, form)))
                .collect()
        })
        .collect();

    let transforms: Vec<Transform> = spec
        .dialects
        .iter()
        .map(|d| {
            let substituted = (d.intensity * lexicon.lemma_count() as f64).floor() as usize;
            let mut substitutions = Transform::identity_len(&lexicon);
            for rank in 0..substituted {
                substitutions[order[rank]] = Some(replacements[rank].clone());
            }
            Transform {
                intensity: d.intensity,
                family_seed: spec.family_seed,
                substitutions,
            }
        })
        .collect();

    let render_base = |sent: &[Lexeme]| -> String {
        sent.iter()
            .map(|&l| lexicon.surface(l))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let render_pivot = |sent: &[Lexeme]| -> String {
        sent.iter()
            .map(|&l| pivot_lexicon.surface(l))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let sample_base = |label: &str, n: usize| -> Vec<Vec<Lexeme>> {
        let mut rng = rng_for(spec.family_seed, label);
        (0..n).map(|_| grammar.sentence(&mut rng)).collect()
    };

    let to_bitext = |lang: &LangTag, sents: &[Vec<Lexeme>]| -> Result<Bitext, SynthError> {
        let pairs = sents
            .iter()
            .map(|s| (render_base(s), render_pivot(s)))
            .collect();
        Ok(Bitext::new(lang.clone(), spec.pivot_lang.clone(), pairs)?)
    };

    let base_train_sents = sample_base("base-train", spec.base_sizes.train);
    let base_dev_sents = sample_base("base-dev", spec.base_sizes.dev);
    let base_test_sents = sample_base("base-test", spec.base_sizes.test);
    let base_train = to_bitext(&spec.base_lang, &base_train_sents)?;
    let base_dev = to_bitext(&spec.base_lang, &base_dev_sents)?;
    let base_test = to_bitext(&spec.base_lang, &base_test_sents)?;

    // Dialect pools: disjoint samples per dialect (own RNG stream), source
    // side transformed, pivot side rendered from the same lexeme sequence.
    let mut pools = Vec::new();
    let mut edit_distances = Vec::new();
    let mut prev_dist = f64::NEG_INFINITY;
    for (d, transform) in spec.dialects.iter().zip(&transforms) {
        let sents = {
            let mut rng = rng_for(spec.family_seed, &format!("dialect-{}", d.lang));
            (0..d.train_size)
                .map(|_| grammar.sentence(&mut rng))
                .collect::<Vec<_>>()
        };
        let pairs: Vec<(String, String)> = sents
            .iter()
            .map(|s| {
                let src = s
                    .iter()
                    .map(|&l| transform.apply(&lexicon, l))
                    .collect::<Vec<_>>()
                    .join(" ");
                (src, render_pivot(s))
            })
            .collect();
        let bitext = Bitext::new(d.lang.clone(), spec.pivot_lang.clone(), pairs)?;

        // Self-check sample: transform the base-train prefix and measure
        // mean normalized token edit distance against the base surfaces.
        let sample = &base_train_sents[..base_train_sents.len().min(300)];
        let mut total = 0.0f64;
        let mut tokens = 0usize;
        for sent in sample {
            for &l in sent {
                let base_w = lexicon.surface(l);
                let dial_w = transform.apply(&lexicon, l);
                let denom = base_w.chars().count().max(dial_w.chars().count());
                total += levenshtein(base_w, &dial_w) as f64 / denom as f64;
                tokens += 1;
            }
        }
        let mean_dist = total / tokens as f64;
        if mean_dist <= prev_dist {
            return Err(SynthError::DistanceNotMonotone {
                lang: d.lang.clone(),
                eps: d.intensity,
                dist: mean_dist,
                prev: prev_dist,
            });
        }
        prev_dist = mean_dist;
        edit_distances.push((d.lang.clone(), d.intensity, mean_dist));
        pools.push((d.lang.clone(), d.intensity, bitext));
    }

    Ok(FamilyData {
        spec: spec.clone(),
        base_train,
        base_dev,
        base_test,
        pools,
        edit_distances,
    })
}

fn suffix_of(lexicon: &Lexicon, lemma: usize, form: usize) -> String {
    let bare = &lexicon.surfaces[lemma][0];
    let formed = &lexicon.surfaces[lemma][form];
    formed[bare.len()..].to_string()
}

/// Writes a generated family to disk and returns the corpus manifest.
pub fn write_family(data: &FamilyData, dir: &Path) -> Result<CorpusManifest, SynthError> {
    std::fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let spec = &data.spec;
    let base = spec.base_lang.as_str();
    let pivot = spec.pivot_lang.as_str();
    let mut manifest = CorpusManifest::new(spec.pivot_lang.clone());
    manifest.base_dir = dir.to_path_buf();

    let mut write_bitext = |bt: &Bitext, stem: &str, key: &str, role: Role| -> Result<(), SynthError> {
        let src_name = format!("{stem}.{}.txt", bt.src_lang);
        let tgt_name = format!("{stem}.{pivot}.txt");
        bt.write(&dir.join(&src_name), &dir.join(&tgt_name))?;
        manifest.entries.push(ManifestEntry {
            key: key.to_string(),
            lang: bt.src_lang.clone(),
            role,
            path: None,
            src_path: Some(src_name.into()),
            tgt_path: Some(tgt_name.into()),
        });
        Ok(())
    };

    write_bitext(&data.base_train, &format!("{base}.train"), "base-train", Role::Train)?;
    write_bitext(&data.base_dev, &format!("{base}.dev"), "base-dev", Role::Dev)?;
    write_bitext(&data.base_test, &format!("{base}.test"), "base-test", Role::Test)?;
    for (lang, _, bitext) in &data.pools {
        write_bitext(
            bitext,
            &format!("{lang}.train"),
            &format!("pool-{lang}"),
            Role::Train,
        )?;
    }
    // The base train source doubles as the language-model corpus.
    manifest.entries.push(ManifestEntry {
        key: "base-train-mono".to_string(),
        lang: spec.base_lang.clone(),
        role: Role::Train,
        path: Some(format!("{base}.train.{base}.txt").into()),
        src_path: None,
        tgt_path: None,
    });
    let spec_json = serde_json::to_string_pretty(spec).expect("spec serializes");
    std::fs::write(dir.join("family.json"), spec_json + "\n").map_err(|source| {
        CorpusError::Io {
            path: dir.join("family.json"),
            source,
        }
    })?;
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Ranking of dialects by mean perplexity under the base-language model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceReport {
    /// (lang, mean perplexity), ascending by perplexity.
    pub ranked: Vec<(String, f64)>,
    /// Languages in ascending intensity order, for comparison.
    pub intensity_order: Vec<String>,
    pub rank_matches_intensity: bool,
}

/// Scores each dialect's source segments with the base-language LM (through
/// the base subword model) and checks that the perplexity ranking equals the
/// intensity ranking.
pub fn family_distance_check(
    model: &NGramModel,
    subword: &SubwordModel,
    dialects: &[(LangTag, f64, Vec<String>)],
) -> DistanceReport {
    let encoder = subword.encoder();
    let mut by_intensity: Vec<&(LangTag, f64, Vec<String>)> = dialects.iter().collect();
    by_intensity.sort_by(|a, b| a.1.total_cmp(&b.1));
    let intensity_order: Vec<String> = by_intensity.iter().map(|d| d.0.to_string()).collect();

    let mut ranked: Vec<(String, f64)> = dialects
        .iter()
        .map(|(lang, _, segments)| {
            let mut total_pp = 0.0;
            let mut n = 0usize;
            for seg in segments {
                let pieces = encoder.encode(seg).expect("corpus text is marker-free");
                if pieces.is_empty() {
                    continue;
                }
                let scored = model
                    .perplexity(lang.as_str(), n, &pieces)
                    .expect("non-empty piece sequence");
                total_pp += scored.perplexity;
                n += 1;
            }
            (lang.to_string(), total_pp / n.max(1) as f64)
        })
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let rank_matches_intensity =
        ranked.iter().map(|(l, _)| l).eq(intensity_order.iter());
    DistanceReport {
        ranked,
        intensity_order,
        rank_matches_intensity,
    }
}

/// Levenshtein distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

//! Related-language data selection and adaptation toolkit for low-resource
//! machine translation, with a synthetic language family harness for
//! desk-scale experiments.
//!
//! The pipeline: generate or ingest corpora ([`corpus`], [`synth`]), learn
//! subword segmentation ([`subword`]), train an n-gram language model on the
//! low-resource language and score high-resource pools by perplexity
//! ([`ngram`]), select adaptation data ([`selection`]), pretrain and adapt a
//! small encoder-decoder translation model ([`nmt`], [`adapt`]), and measure
//! BLEU with bootstrap significance ([`eval`]). [`pipeline`] wires the stages
//! together behind content-hash caching.

pub mod corpus;
pub mod seeding;
pub mod selection;
pub mod eval;
pub mod ngram;
pub mod subword;
pub mod synth;

//! Translation diagnostics that need the hidden provenance: POS BLEU,
//! round-trip BLEU, per-word translation tables, lexical-field metrics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::bleu::bleu;
use super::stats::entropy_bits;
use crate::corpus::{LanguageSpec, ParallelCorpus, Sentence, PERIOD};
use crate::error::Result;
use crate::grammar::{linearize_leaves, Pos};

/// Tag given to hypothesis tokens absent from the target lexicon.
pub const UNK_POS: &str = "UNK";

pub fn pos_sequence<S: AsRef<str>>(tokens: &[S], tag: &impl Fn(&str) -> Option<String>) -> Vec<String> {
    tokens
        .iter()
        .map(|t| tag(t.as_ref()).unwrap_or_else(|| UNK_POS.to_string()))
        .collect()
}

/// BLEU over POS label sequences.
pub fn pos_bleu<S: AsRef<str>, T: AsRef<str>>(
    hypotheses: &[Vec<S>],
    references: &[Vec<T>],
    tag: impl Fn(&str) -> Option<String>,
) -> Result<f64> {
    let h: Vec<Vec<String>> = hypotheses.iter().map(|s| pos_sequence(s, &tag)).collect();
    let r: Vec<Vec<String>> = references.iter().map(|s| pos_sequence(s, &tag)).collect();
    bleu(&h, &r)
}

/// BLEU of `back(forward(x))` against `x`.
pub fn roundtrip_bleu<F, G>(sentences: &[Vec<String>], forward: F, back: G) -> Result<f64>
where
    F: FnOnce(&[Vec<String>]) -> Vec<Vec<String>>,
    G: FnOnce(&[Vec<String>]) -> Vec<Vec<String>>,
{
    let there = forward(sentences);
    let again = back(&there);
    bleu(&again, sentences)
}

/// For each source position, the position of the same leaf in the target
/// linearization. The final period maps to the final period.
pub fn oracle_alignment(src: &Sentence, src_lang: &LanguageSpec, tgt_lang: &LanguageSpec) -> Option<Vec<usize>> {
    let prov = src.provenance.as_ref()?;
    let s = linearize_leaves(&prov.structure, &src_lang.switches);
    let t = linearize_leaves(&prov.structure, &tgt_lang.switches);
    let mut where_in_t = vec![0; t.len()];
    for (q, &leaf) in t.iter().enumerate() {
        where_in_t[leaf] = q;
    }
    let mut a: Vec<usize> = s.iter().map(|&leaf| where_in_t[leaf]).collect();
    a.push(t.len());
    Some(a)
}

/// Whether each hypothesis has exactly the reference's POS sequence.
pub fn syntactically_correct(outputs: &[Vec<String>], pc: &ParallelCorpus, tgt: &LanguageSpec) -> Vec<bool> {
    let tag = |w: &str| tgt.pos_tag(w);
    outputs
        .iter()
        .zip(&pc.pairs)
        .map(|(o, (_, r))| pos_sequence(o, &tag) == pos_sequence(&r.tokens, &tag))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxSummary {
    pub fraction_correct: f64,
    pub mean_length_correct: Option<f64>,
    pub mean_length_all: f64,
}

pub fn syntax_summary(outputs: &[Vec<String>], pc: &ParallelCorpus, tgt: &LanguageSpec) -> SyntaxSummary {
    let ok = syntactically_correct(outputs, pc, tgt);
    let n_ok = ok.iter().filter(|&&b| b).count();
    let len_ok: usize = pc
        .pairs
        .iter()
        .zip(&ok)
        .filter(|(_, &b)| b)
        .map(|(p, _)| p.1.tokens.len())
        .sum();
    let len_all: usize = pc.pairs.iter().map(|p| p.1.tokens.len()).sum();
    SyntaxSummary {
        fraction_correct: if pc.is_empty() { 0.0 } else { n_ok as f64 / pc.len() as f64 },
        mean_length_correct: (n_ok > 0).then(|| len_ok as f64 / n_ok as f64),
        mean_length_all: if pc.is_empty() { 0.0 } else { len_all as f64 / pc.len() as f64 },
    }
}

/// Translation behaviour of one source word form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRow {
    pub word: String,
    pub tag: String,
    pub pos: Pos,
    /// Frequency rank within the word's (POS, field) cell.
    pub rank: u32,
    pub field: Option<u16>,
    pub translation: String,
    pub anchor: bool,
    pub count: u64,
    pub correct: u64,
    /// Times the model produced `translation` anywhere in the restricted set.
    pub output_count: u64,
    pub entropy: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub top_output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosSummary {
    pub pos: Pos,
    pub types: usize,
    pub tokens: u64,
    pub entropy_by_type: f64,
    pub entropy_by_token: f64,
    pub accuracy_by_type: f64,
    pub accuracy_by_token: f64,
    /// Entropy of a uniformly random same-POS choice, log2 of the POS size.
    pub random_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordStatsReport {
    pub restricted_sentences: usize,
    pub restricted_tokens: u64,
    pub rows: Vec<WordRow>,
    pub by_pos: Vec<PosSummary>,
    /// Means over content word types.
    pub mean_entropy: f64,
    pub mean_accuracy: f64,
    /// Among words with non-zero accuracy and recall, the share that are
    /// anchors (identical surface in both languages).
    pub anchor_share_of_translated: Option<f64>,
}

impl WordStatsReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("word\ttag\trank\tfield\ttranslation\tanchor\tcount\tcorrect\toutput_count\tentropy\taccuracy\trecall\ttop_output\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                r.word,
                r.tag,
                r.rank,
                r.field.map(|f| f.to_string()).unwrap_or_default(),
                r.translation,
                u8::from(r.anchor),
                r.count,
                r.correct,
                r.output_count,
                r.entropy,
                r.accuracy,
                r.recall,
                r.top_output
            ));
        }
        s
    }
}

#[derive(Default)]
struct Tally {
    outputs: HashMap<String, u64>,
    translation: String,
    count: u64,
    correct: u64,
}

/// Word-by-word analysis over the sentences whose output POS sequence equals
/// the reference's. Returns `None` when no sentence qualifies.
pub fn word_translation_stats(
    pc: &ParallelCorpus,
    outputs: &[Vec<String>],
    src: &LanguageSpec,
    tgt: &LanguageSpec,
) -> Option<WordStatsReport> {
    let ok = syntactically_correct(outputs, pc, tgt);
    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    let mut emitted: HashMap<&str, u64> = HashMap::new();
    let mut restricted_sentences = 0;
    let mut restricted_tokens = 0;
    for (((s, r), out), _) in pc.pairs.iter().zip(outputs).zip(&ok).filter(|(_, &b)| b) {
        let Some(align) = oracle_alignment(s, src, tgt) else {
            continue;
        };
        restricted_sentences += 1;
        for w in out {
            *emitted.entry(w.as_str()).or_insert(0) += 1;
        }
        for (p, w) in s.tokens.iter().enumerate() {
            if w == PERIOD {
                continue;
            }
            restricted_tokens += 1;
            let q = align[p];
            let t = tallies.entry(w.clone()).or_default();
            t.translation = r.tokens[q].clone();
            t.count += 1;
            *t.outputs.entry(out[q].clone()).or_insert(0) += 1;
            if out[q] == r.tokens[q] {
                t.correct += 1;
            }
        }
    }
    if restricted_sentences == 0 {
        return None;
    }

    let mut rows = Vec::with_capacity(tallies.len());
    for (word, t) in tallies {
        let (id, slot) = src.lexicon.lookup(&word)?;
        let pos = src.lexicon.lemma(id).pos;
        let output_count = emitted.get(t.translation.as_str()).copied().unwrap_or(0);
        let top_output = t
            .outputs
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(w, _)| w.clone())
            .unwrap_or_default();
        rows.push(WordRow {
            tag: crate::corpus::slot_tag(pos, slot),
            pos,
            rank: src.fields.rank(id),
            field: src.fields.field(id),
            anchor: word == t.translation,
            entropy: entropy_bits(t.outputs.values().copied()),
            accuracy: t.correct as f64 / t.count as f64,
            recall: if output_count == 0 {
                0.0
            } else {
                t.correct as f64 / output_count as f64
            },
            word,
            translation: t.translation,
            count: t.count,
            correct: t.correct,
            output_count,
            top_output,
        });
    }

    let by_pos: Vec<PosSummary> = Pos::ALL
        .iter()
        .filter_map(|&pos| {
            let group: Vec<&WordRow> = rows.iter().filter(|r| r.pos == pos).collect();
            if group.is_empty() {
                return None;
            }
            let types = group.len();
            let tokens: u64 = group.iter().map(|r| r.count).sum();
            let by_type = |f: fn(&WordRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / types as f64;
            let by_token =
                |f: fn(&WordRow) -> f64| group.iter().map(|r| f(r) * r.count as f64).sum::<f64>() / tokens as f64;
            Some(PosSummary {
                pos,
                types,
                tokens,
                entropy_by_type: by_type(|r| r.entropy),
                entropy_by_token: by_token(|r| r.entropy),
                accuracy_by_type: by_type(|r| r.accuracy),
                accuracy_by_token: by_token(|r| r.accuracy),
                random_entropy: (tgt.lexicon.of_pos(pos).len() as f64).log2(),
            })
        })
        .collect();

    let content: Vec<&WordRow> = rows.iter().filter(|r| r.pos.is_content()).collect();
    let mean = |f: fn(&WordRow) -> f64| {
        if content.is_empty() {
            0.0
        } else {
            content.iter().map(|r| f(r)).sum::<f64>() / content.len() as f64
        }
    };
    let translated: Vec<&WordRow> = rows.iter().filter(|r| r.accuracy > 0.0 && r.recall > 0.0).collect();
    Some(WordStatsReport {
        restricted_sentences,
        restricted_tokens,
        mean_entropy: mean(|r| r.entropy),
        mean_accuracy: mean(|r| r.accuracy),
        anchor_share_of_translated: (!translated.is_empty())
            .then(|| translated.iter().filter(|r| r.anchor).count() as f64 / translated.len() as f64),
        by_pos,
        rows,
    })
}

fn content_fields(tokens: &[String], lang: &LanguageSpec) -> Vec<u16> {
    tokens
        .iter()
        .filter_map(|w| lang.lexicon.lookup(w))
        .filter_map(|(id, _)| lang.fields.field(id))
        .collect()
}

/// Share of sentences whose content words all come from one lexical field.
pub fn mono_context_proportion(sentences: &[Vec<String>], lang: &LanguageSpec) -> f64 {
    if sentences.is_empty() {
        return 1.0;
    }
    let mono = sentences
        .iter()
        .filter(|s| {
            let f = content_fields(s, lang);
            f.windows(2).all(|w| w[0] == w[1])
        })
        .count();
    mono as f64 / sentences.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextMetrics {
    pub mono_context: f64,
    /// Share of content words, in POS-correct sentences, whose field is the
    /// reference sentence's field. `None` when no sentence is POS-correct.
    pub context_accuracy: Option<f64>,
}

pub fn context_metrics(outputs: &[Vec<String>], pc: &ParallelCorpus, tgt: &LanguageSpec) -> ContextMetrics {
    let ok = syntactically_correct(outputs, pc, tgt);
    let mut right = 0u64;
    let mut total = 0u64;
    for ((out, (_, r)), _) in outputs.iter().zip(&pc.pairs).zip(&ok).filter(|(_, &b)| b) {
        let Some(field) = r.provenance.as_ref().map(|p| p.field) else {
            continue;
        };
        for f in content_fields(out, tgt) {
            total += 1;
            right += u64::from(f == field);
        }
    }
    ContextMetrics {
        mono_context: mono_context_proportion(outputs, tgt),
        context_accuracy: (total > 0).then(|| right as f64 / total as f64),
    }
}

/// Per-tag series ordered by frequency rank, for accuracy/recall plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSeries {
    pub tag: String,
    pub ranks: Vec<u32>,
    pub words: Vec<String>,
    pub accuracy: Vec<f64>,
    pub recall: Vec<f64>,
    pub test_counts: Vec<u64>,
    pub output_counts: Vec<u64>,
}

impl RankSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,word,accuracy,recall,test_count,output_count\n");
        for i in 0..self.ranks.len() {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{},{}\n",
                self.ranks[i],
                self.words[i],
                self.accuracy[i],
                self.recall[i],
                self.test_counts[i],
                self.output_counts[i]
            ));
        }
        s
    }
}

pub fn frequency_rank_report(report: &WordStatsReport) -> Vec<RankSeries> {
    let mut groups: BTreeMap<&str, Vec<&WordRow>> = BTreeMap::new();
    for r in &report.rows {
        groups.entry(r.tag.as_str()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(tag, mut rows)| {
            rows.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.word.cmp(&b.word)));
            RankSeries {
                tag: tag.to_string(),
                ranks: rows.iter().map(|r| r.rank).collect(),
                words: rows.iter().map(|r| r.word.clone()).collect(),
                accuracy: rows.iter().map(|r| r.accuracy).collect(),
                recall: rows.iter().map(|r| r.recall).collect(),
                test_counts: rows.iter().map(|r| r.count).collect(),
                output_counts: rows.iter().map(|r| r.output_count).collect(),
            }
        })
        .collect()
}

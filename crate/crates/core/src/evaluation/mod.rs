//! Metrics and statistical analyses of translation outputs.

mod bleu;
mod diagnostics;
mod stats;

pub use bleu::{bleu, bleu_lines, bleu_stats, BleuStats, MAX_ORDER};
pub use diagnostics::{
    context_metrics, frequency_rank_report, mono_context_proportion, oracle_alignment, pos_bleu, pos_sequence,
    roundtrip_bleu, syntactically_correct, syntax_summary, word_translation_stats, ContextMetrics, PosSummary,
    RankSeries, SyntaxSummary, WordRow, WordStatsReport, UNK_POS,
};
pub use stats::{chi_square_gof, entropy_bits, ols_fit, relative_distance, round_to, spearman, RegressionFit};

use serde::{Deserialize, Serialize};

/// Everything measured on one trained system's test outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    pub bleu_ab: f64,
    pub bleu_ba: f64,
    pub bleu: f64,
    pub pos_bleu_ab: f64,
    pub pos_bleu_ba: f64,
    pub pos_bleu: f64,
    pub roundtrip_bleu: Option<f64>,
    pub copy_baseline: f64,
    pub relative_distance: Option<f64>,
    pub syntax: Option<SyntaxSummary>,
    pub context: Option<ContextMetrics>,
    pub words: Option<WordStatsReport>,
}

impl EvalReport {
    /// Flat `metric<TAB>value` listing of the scalar fields.
    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NA".into());
        let mut rows = vec![
            ("bleu_ab", format!("{:.4}", self.bleu_ab)),
            ("bleu_ba", format!("{:.4}", self.bleu_ba)),
            ("bleu", format!("{:.4}", self.bleu)),
            ("pos_bleu_ab", format!("{:.4}", self.pos_bleu_ab)),
            ("pos_bleu_ba", format!("{:.4}", self.pos_bleu_ba)),
            ("pos_bleu", format!("{:.4}", self.pos_bleu)),
            ("roundtrip_bleu", opt(self.roundtrip_bleu)),
            ("copy_baseline", format!("{:.4}", self.copy_baseline)),
            ("relative_distance", opt(self.relative_distance)),
        ];
        if let Some(s) = &self.syntax {
            rows.push(("syntax_correct_fraction", format!("{:.4}", s.fraction_correct)));
            rows.push(("syntax_correct_mean_length", opt(s.mean_length_correct)));
            rows.push(("mean_length", format!("{:.4}", s.mean_length_all)));
        }
        if let Some(c) = &self.context {
            rows.push(("mono_context", format!("{:.4}", c.mono_context)));
            rows.push(("context_accuracy", opt(c.context_accuracy)));
        }
        if let Some(w) = &self.words {
            rows.push(("word_mean_entropy", format!("{:.4}", w.mean_entropy)));
            rows.push(("word_mean_accuracy", format!("{:.4}", w.mean_accuracy)));
            rows.push(("word_anchor_share", opt(w.anchor_share_of_translated)));
        }
        let mut s = String::from("metric\tvalue\n");
        for (k, v) in rows {
            s.push_str(&format!("{k}\t{v}\n"));
        }
        s
    }
}

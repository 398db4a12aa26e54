//! Corpus-level BLEU, matching the counting rules of Moses `multi-bleu.perl`
//! on pre-tokenized text with a single reference.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics of a corpus BLEU computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BleuStats {
    pub correct: [u64; MAX_ORDER],
    pub total: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts
                .entry(w.iter().map(AsRef::as_ref).collect())
                .or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn add<S: AsRef<str>, T: AsRef<str>>(&mut self, hyp: &[S], reference: &[T]) {
        self.hyp_len += hyp.len() as u64;
        self.ref_len += reference.len() as u64;
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            for (gram, &c) in &h {
                self.total[n - 1] += c;
                if let Some(&rc) = r.get(gram) {
                    self.correct[n - 1] += c.min(rc);
                }
            }
        }
    }

    pub fn precision(&self, n: usize) -> f64 {
        if self.total[n - 1] == 0 {
            0.0
        } else {
            self.correct[n - 1] as f64 / self.total[n - 1] as f64
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        }
    }

    /// Score in [0, 100]. A zero n-gram precision contributes a log of
    /// -9999999999, which drives the score to 0 exactly as the Perl script does.
    pub fn score(&self) -> f64 {
        if self.ref_len == 0 || self.hyp_len == 0 {
            return 0.0;
        }
        let log_sum: f64 = (1..=MAX_ORDER)
            .map(|n| {
                let p = self.precision(n);
                if p == 0.0 {
                    -9_999_999_999.0
                } else {
                    p.ln()
                }
            })
            .sum();
        100.0 * self.brevity_penalty() * (log_sum / MAX_ORDER as f64).exp()
    }
}

impl fmt::Display for BleuStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BLEU = {:.2}, {:.1}/{:.1}/{:.1}/{:.1} (BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
            self.score(),
            100.0 * self.precision(1),
            100.0 * self.precision(2),
            100.0 * self.precision(3),
            100.0 * self.precision(4),
            self.brevity_penalty(),
            if self.ref_len == 0 {
                0.0
            } else {
                self.hyp_len as f64 / self.ref_len as f64
            },
            self.hyp_len,
            self.ref_len
        )
    }
}

pub fn bleu_stats<S: AsRef<str>, T: AsRef<str>>(
    hypotheses: &[Vec<S>],
    references: &[Vec<T>],
) -> Result<BleuStats> {
    if hypotheses.len() != references.len() {
        return Err(Error::SizeMismatch(format!(
            "{} hypotheses vs {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    let mut stats = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        stats.add(h, r);
    }
    Ok(stats)
}

/// Corpus BLEU of tokenized hypotheses against one reference each.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(hypotheses: &[Vec<S>], references: &[Vec<T>]) -> Result<f64> {
    Ok(bleu_stats(hypotheses, references)?.score())
}

/// Convenience wrapper for whitespace-separated lines.
pub fn bleu_lines(hypotheses: &[&str], references: &[&str]) -> Result<f64> {
    let split = |lines: &[&str]| -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect()
    };
    bleu(&split(hypotheses), &split(references))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identical_is_100_and_empty_is_0() {
        let r = vec![toks("a b c d e ."), toks("f g h i .")];
        assert!((bleu(&r, &r).unwrap() - 100.0).abs() < 1e-9);
        let empty: Vec<Vec<String>> = vec![vec![], vec![]];
        assert_eq!(bleu(&empty, &r).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let r = vec![toks("a b")];
        let h: Vec<Vec<String>> = vec![];
        assert!(matches!(bleu(&h, &r), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn clipping_and_brevity_by_hand() {
        // hyp "the the the the" vs ref "the cat is on the mat":
        // p1 = 2/4, no bigram matches -> score 0.
        let s = bleu_stats(&[toks("the the the the")], &[toks("the cat is on the mat")]).unwrap();
        assert_eq!(s.correct[0], 2);
        assert_eq!(s.total[0], 4);
        assert_eq!(s.score(), 0.0);

        // hyp is a 5-token prefix of a 6-token ref: all precisions 1, BP = e^(1-6/5).
        let s = bleu_stats(&[toks("a b c d e")], &[toks("a b c d e f")]).unwrap();
        let expected = 100.0 * (1.0f64 - 6.0 / 5.0).exp();
        assert!((s.score() - expected).abs() < 1e-9);
    }

    #[test]
    fn longer_hypothesis_has_no_brevity_penalty() {
        let s = bleu_stats(&[toks("a b c d e f")], &[toks("a b c d e")]).unwrap();
        assert_eq!(s.brevity_penalty(), 1.0);
        // precisions 5/6, 4/5, 3/4, 2/3 -> geometric mean
        let g = (5.0f64 / 6.0 * 4.0 / 5.0 * 3.0 / 4.0 * 2.0 / 3.0).powf(0.25);
        assert!((s.score() - 100.0 * g).abs() < 1e-9);
    }
}

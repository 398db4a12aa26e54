//! Word-internal byte-pair encoding shared by both languages.
//!
//! Words are split into characters with an end-of-word marker on the last
//! one, then the most frequent adjacent pair is merged repeatedly. Special
//! tokens occupy the first ids and count against the vocabulary budget.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const MASK: u32 = 3;
pub const END_OF_WORD: &str = "</w>";
const SPECIALS: [&str; 4] = ["<pad>", "<s>", "</s>", "<mask>"];
const FORMAT_VERSION: u32 = 1;

pub fn lang_token(language: &str) -> String {
    format!("<lang:{language}>")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    languages: Vec<String>,
    alphabet: Vec<String>,
    merges: Vec<(String, String)>,
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    ranks: HashMap<(String, String), usize>,
}

fn initial_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == chars.len() {
                format!("{c}{END_OF_WORD}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Learns merges over the word types of all corpora until the table holds
/// `vocab_size` entries or no pair remains.
pub fn train_bpe<S: AsRef<str>>(corpora: &[&[Vec<S>]], languages: &[&str], vocab_size: usize) -> Result<BpeModel> {
    let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for corpus in corpora {
        for sentence in corpus.iter() {
            for w in sentence {
                *word_counts.entry(w.as_ref()).or_insert(0) += 1;
            }
        }
    }
    if word_counts.is_empty() {
        return Err(Error::Validation("cannot train BPE on empty corpora".into()));
    }
    let mut words: Vec<(Vec<String>, u64)> = word_counts
        .iter()
        .map(|(w, &c)| (initial_symbols(w), c))
        .collect();
    let alphabet: BTreeSet<String> = words.iter().flat_map(|(s, _)| s.iter().cloned()).collect();
    let reserved = SPECIALS.len() + languages.len() + alphabet.len();
    if vocab_size < reserved {
        return Err(Error::Validation(format!(
            "vocabulary size {vocab_size} is smaller than the {reserved} special and character symbols"
        )));
    }

    let mut merges = Vec::new();
    while reserved + merges.len() < vocab_size {
        let mut pairs: HashMap<(&str, &str), u64> = HashMap::new();
        for (syms, c) in &words {
            for w in syms.windows(2) {
                *pairs.entry((w[0].as_str(), w[1].as_str())).or_insert(0) += c;
            }
        }
        let Some((best, _)) = pairs
            .into_iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
        else {
            break;
        };
        let best = (best.0.to_string(), best.1.to_string());
        let joined = format!("{}{}", best.0, best.1);
        for (syms, _) in &mut words {
            *syms = apply_merge(syms, &best, &joined);
        }
        merges.push(best);
    }
    Ok(BpeModel::build(
        languages.iter().map(|s| s.to_string()).collect(),
        alphabet.into_iter().collect(),
        merges,
    ))
}

fn apply_merge(syms: &[String], pair: &(String, String), joined: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
            out.push(joined.to_string());
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

impl BpeModel {
    fn build(languages: Vec<String>, alphabet: Vec<String>, merges: Vec<(String, String)>) -> BpeModel {
        let mut symbols: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        symbols.extend(languages.iter().map(|l| lang_token(l)));
        symbols.extend(alphabet.iter().cloned());
        let mut ranks = HashMap::new();
        for (r, (a, b)) in merges.iter().enumerate() {
            let joined = format!("{a}{b}");
            if !symbols.contains(&joined) {
                symbols.push(joined);
            }
            ranks.insert((a.clone(), b.clone()), r);
        }
        let ids = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        BpeModel {
            languages,
            alphabet,
            merges,
            symbols,
            ids,
            ranks,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.symbols.len()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, symbol: &str) -> Option<u32> {
        self.ids.get(symbol).copied()
    }

    pub fn lang_id(&self, language: &str) -> Option<u32> {
        self.id(&lang_token(language))
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < SPECIALS.len() + self.languages.len()
    }

    /// Subword segmentation of one word.
    pub fn segment(&self, word: &str) -> Result<Vec<String>> {
        let mut syms = initial_symbols(word);
        for s in &syms {
            if !self.ids.contains_key(s) {
                let c = s.chars().next().unwrap_or(' ');
                return Err(Error::UnknownCharacter(c, word.to_string()));
            }
        }
        loop {
            let best = syms
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.ranks.get(&(w[0].clone(), w[1].clone())).map(|&r| (r, i)))
                .min();
            let Some((r, _)) = best else { break };
            let pair = &self.merges[r];
            let joined = format!("{}{}", pair.0, pair.1);
            syms = apply_merge(&syms, pair, &joined);
        }
        Ok(syms)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for t in tokens {
            for s in self.segment(t.as_ref())? {
                out.push(self.ids[&s]);
            }
        }
        Ok(out)
    }

    /// Joins subwords back into words. Special ids are skipped and a
    /// trailing unfinished word is kept as is.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        let mut words = Vec::new();
        let mut current = String::new();
        for &id in ids {
            if self.is_special(id) {
                continue;
            }
            let Some(sym) = self.symbol(id) else { continue };
            match sym.strip_suffix(END_OF_WORD) {
                Some(stem) => {
                    current.push_str(stem);
                    words.push(std::mem::take(&mut current));
                }
                None => current.push_str(sym),
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        words
    }

    /// Text form: header lines, then one merge per line in application order.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "#version: {FORMAT_VERSION}\n#languages: {}\n#alphabet: {}\n",
            self.languages.join(" "),
            self.alphabet.join(" ")
        );
        for (a, b) in &self.merges {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<BpeModel> {
        let mut languages = None;
        let mut alphabet = None;
        let mut merges = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(v) = line.strip_prefix("#version: ") {
                if v.trim() != FORMAT_VERSION.to_string() {
                    return Err(Error::Parse(format!("unsupported merges version {v}")));
                }
            } else if let Some(v) = line.strip_prefix("#languages:") {
                languages = Some(v.split_whitespace().map(str::to_string).collect::<Vec<_>>());
            } else if let Some(v) = line.strip_prefix("#alphabet:") {
                alphabet = Some(v.split_whitespace().map(str::to_string).collect::<Vec<_>>());
            } else if !line.is_empty() {
                let mut parts = line.split(' ');
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(a), Some(b), None) => merges.push((a.to_string(), b.to_string())),
                    _ => return Err(Error::Parse(format!("merges line {}: {line:?}", n + 1))),
                }
            }
        }
        let languages = languages.ok_or_else(|| Error::Parse("missing #languages header".into()))?;
        let alphabet = alphabet.ok_or_else(|| Error::Parse("missing #alphabet header".into()))?;
        Ok(BpeModel::build(languages, alphabet, merges))
    }
}

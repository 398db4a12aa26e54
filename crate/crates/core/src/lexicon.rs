//! Synthetic lexica, bilingual dictionaries, lexical fields and intra-cell
//! word frequencies.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LemmaId(pub u32);

impl LemmaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma {
    pub id: LemmaId,
    pub pos: Pos,
    /// One surface form per inflection slot, see [`crate::grammar::Leaf::slot`].
    pub forms: Vec<String>,
}

/// Number of lemmas per POS category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconSizes {
    pub noun: usize,
    pub adj: usize,
    pub tverb: usize,
    pub iverb: usize,
    pub verb_comp: usize,
    pub prep: usize,
    pub subj: usize,
    pub comp: usize,
    pub rel: usize,
}

impl Default for LexiconSizes {
    /// 1,374 surface forms in total.
    fn default() -> Self {
        LexiconSizes {
            noun: 158,
            adj: 42,
            tverb: 84,
            iverb: 111,
            verb_comp: 23,
            prep: 141,
            subj: 1,
            comp: 1,
            rel: 1,
        }
    }
}

impl LexiconSizes {
    pub fn get(&self, pos: Pos) -> usize {
        match pos {
            Pos::Noun => self.noun,
            Pos::Adj => self.adj,
            Pos::TVerb => self.tverb,
            Pos::IVerb => self.iverb,
            Pos::VerbComp => self.verb_comp,
            Pos::Prep => self.prep,
            Pos::Subj => self.subj,
            Pos::Comp => self.comp,
            Pos::Rel => self.rel,
        }
    }

    pub fn lemma_count(&self) -> usize {
        Pos::ALL.iter().map(|&p| self.get(p)).sum()
    }

    pub fn surface_count(&self) -> usize {
        Pos::ALL.iter().map(|&p| self.get(p) * p.slot_count()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for p in Pos::ALL {
            if self.get(p) == 0 {
                return Err(Error::Validation(format!("lexicon size for {} is 0", p.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    seed: u64,
    lemmas: Vec<Lemma>,
    by_pos: BTreeMap<Pos, Vec<LemmaId>>,
    index: HashMap<String, (LemmaId, usize)>,
}

impl Lexicon {
    /// Builds a lexicon from explicit lemmas; ids must be `0..n` in order.
    pub fn from_lemmas(seed: u64, lemmas: Vec<Lemma>) -> Result<Lexicon> {
        let mut by_pos: BTreeMap<Pos, Vec<LemmaId>> = BTreeMap::new();
        for (i, l) in lemmas.iter().enumerate() {
            if l.id.index() != i {
                return Err(Error::Validation(format!("lemma {} stored at index {i}", l.id.0)));
            }
            if l.forms.len() != l.pos.slot_count() {
                return Err(Error::Validation(format!(
                    "lemma {} has {} forms, {} needs {}",
                    i,
                    l.forms.len(),
                    l.pos.name(),
                    l.pos.slot_count()
                )));
            }
            by_pos.entry(l.pos).or_default().push(l.id);
        }
        let mut lex = Lexicon {
            seed,
            lemmas,
            by_pos,
            index: HashMap::new(),
        };
        lex.rebuild_index()?;
        Ok(lex)
    }

    fn rebuild_index(&mut self) -> Result<()> {
        self.index.clear();
        for l in &self.lemmas {
            for (slot, f) in l.forms.iter().enumerate() {
                if f.is_empty() || !f.chars().all(|c| c.is_ascii_lowercase()) {
                    return Err(Error::Validation(format!("bad surface form {f:?}")));
                }
                if self.index.insert(f.clone(), (l.id, slot)).is_some() {
                    return Err(Error::Validation(format!("duplicate surface form {f:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lemmas(&self) -> &[Lemma] {
        &self.lemmas
    }

    pub fn lemma(&self, id: LemmaId) -> &Lemma {
        &self.lemmas[id.index()]
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    /// Lemma ids of one POS, in id order.
    pub fn of_pos(&self, pos: Pos) -> &[LemmaId] {
        self.by_pos.get(&pos).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sizes(&self) -> LexiconSizes {
        let n = |p| self.of_pos(p).len();
        LexiconSizes {
            noun: n(Pos::Noun),
            adj: n(Pos::Adj),
            tverb: n(Pos::TVerb),
            iverb: n(Pos::IVerb),
            verb_comp: n(Pos::VerbComp),
            prep: n(Pos::Prep),
            subj: n(Pos::Subj),
            comp: n(Pos::Comp),
            rel: n(Pos::Rel),
        }
    }

    /// Finds the lemma and inflection slot of a surface form.
    pub fn lookup(&self, surface: &str) -> Option<(LemmaId, usize)> {
        self.index.get(surface).copied()
    }

    pub fn surface_count(&self) -> usize {
        self.index.len()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().flat_map(|l| l.forms.iter().map(String::as_str))
    }
}

const ONSETS: &[&str] = &[
    "", "b", "bl", "br", "c", "ch", "cl", "cr", "d", "dr", "f", "fl", "fr", "g", "gl", "gr", "h",
    "j", "k", "kn", "l", "m", "n", "p", "pl", "pr", "qu", "r", "rh", "s", "sh", "sk", "sl", "sn",
    "sp", "st", "sw", "t", "th", "tr", "v", "w", "wh", "wr", "y", "z",
];
const NUCLEI: &[&str] = &[
    "a", "e", "i", "o", "u", "ai", "ea", "ee", "ie", "oo", "ou", "oa", "au", "y",
];
const CODAS: &[&str] = &[
    "", "", "", "b", "ck", "d", "f", "g", "k", "l", "lk", "ll", "lt", "m", "mp", "n", "nd", "ng",
    "nk", "nt", "p", "r", "rch", "rf", "rk", "rn", "rp", "rs", "sk", "sp", "st", "t", "th", "v",
    "x",
];
const NOUN_SUFFIXES: &[&str] = &["", "", "", "er", "se", "on"];
const VERB_SUFFIXES: &[&str] = &["", "", "", "ify", "ate", "en"];

fn syllable<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut s = String::new();
    s.push_str(ONSETS[rng.random_range(0..ONSETS.len())]);
    s.push_str(NUCLEI[rng.random_range(0..NUCLEI.len())]);
    s.push_str(CODAS[rng.random_range(0..CODAS.len())]);
    s
}

fn stem<R: Rng + ?Sized>(pos: Pos, rng: &mut R) -> String {
    let syllables = match pos {
        Pos::Subj | Pos::Comp | Pos::Rel => 1,
        _ => {
            if rng.random_bool(0.25) {
                3
            } else {
                2
            }
        }
    };
    let mut s: String = (0..syllables).map(|_| syllable(rng)).collect();
    let suffixes = match pos {
        Pos::Noun => NOUN_SUFFIXES,
        p if p.is_verb() => VERB_SUFFIXES,
        _ => &[""],
    };
    s.push_str(suffixes[rng.random_range(0..suffixes.len())]);
    s
}

fn sibilant(s: &str) -> bool {
    ["s", "x", "z", "sh", "ch"].iter().any(|e| s.ends_with(e))
}

fn consonant_y(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 2 && b[b.len() - 1] == b'y' && !b"aeiou".contains(&b[b.len() - 2])
}

/// Inflection table of a stem, one entry per slot.
pub fn inflect(pos: Pos, stem: &str) -> Vec<String> {
    let plural_s = |s: &str| {
        if consonant_y(s) {
            format!("{}ies", &s[..s.len() - 1])
        } else if sibilant(s) {
            format!("{s}es")
        } else {
            format!("{s}s")
        }
    };
    match pos {
        Pos::Noun => vec![stem.to_string(), plural_s(stem)],
        p if p.is_verb() => {
            let (past_s, past_p) = if stem.ends_with('e') {
                (format!("{stem}d"), format!("{stem}da"))
            } else {
                (format!("{stem}ed"), format!("{stem}eda"))
            };
            vec![plural_s(stem), stem.to_string(), past_s, past_p]
        }
        _ => vec![stem.to_string()],
    }
}

const MAX_ATTEMPTS: usize = 5_000;

/// Generates a lexicon with English-looking words.
pub fn generate_lexicon(seed: u64, sizes: &LexiconSizes) -> Result<Lexicon> {
    generate_lexicon_avoiding(seed, sizes, &HashSet::new())
}

/// Like [`generate_lexicon`] but never produces a surface form in `avoid`.
pub fn generate_lexicon_avoiding(
    seed: u64,
    sizes: &LexiconSizes,
    avoid: &HashSet<String>,
) -> Result<Lexicon> {
    sizes.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used: HashSet<String> = HashSet::new();
    let mut lemmas = Vec::with_capacity(sizes.lemma_count());
    for pos in Pos::ALL {
        for k in 0..sizes.get(pos) {
            let mut attempts = 0;
            let forms = loop {
                attempts += 1;
                if attempts > MAX_ATTEMPTS {
                    return Err(Error::Capacity(format!(
                        "could not create {} distinct {} words (stuck at {k})",
                        sizes.get(pos),
                        pos.name()
                    )));
                }
                let forms = inflect(pos, &stem(pos, &mut rng));
                let distinct: HashSet<&String> = forms.iter().collect();
                if distinct.len() == forms.len()
                    && forms.iter().all(|f| !used.contains(f) && !avoid.contains(f))
                {
                    break forms;
                }
            };
            used.extend(forms.iter().cloned());
            lemmas.push(Lemma {
                id: LemmaId(lemmas.len() as u32),
                pos,
                forms,
            });
        }
    }
    Lexicon::from_lemmas(seed, lemmas)
}

/// POS-preserving bijection between two lexica.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BilingualDictionary {
    forward: Vec<LemmaId>,
    backward: Vec<LemmaId>,
    /// Source-side ids of lemmas whose forms are identical in both lexica.
    anchors: BTreeSet<LemmaId>,
}

impl BilingualDictionary {
    /// Maps every lemma to itself; every lemma is an anchor.
    pub fn identity(lex: &Lexicon) -> BilingualDictionary {
        let ids: Vec<LemmaId> = (0..lex.len() as u32).map(LemmaId).collect();
        BilingualDictionary {
            forward: ids.clone(),
            backward: ids.clone(),
            anchors: ids.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn translate(&self, id: LemmaId) -> Option<LemmaId> {
        self.forward.get(id.index()).copied()
    }

    pub fn inverse(&self) -> BilingualDictionary {
        BilingualDictionary {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            anchors: self.anchors.iter().map(|&a| self.forward[a.index()]).collect(),
        }
    }

    pub fn anchors(&self) -> &BTreeSet<LemmaId> {
        &self.anchors
    }

    pub fn is_anchor(&self, id: LemmaId) -> bool {
        self.anchors.contains(&id)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (LemmaId, LemmaId)> + '_ {
        self.forward
            .iter()
            .enumerate()
            .map(|(i, &b)| (LemmaId(i as u32), b))
    }

    /// Rows `source_id \t target_id \t anchor`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("source\ttarget\tanchor\n");
        for (a, b) in self.pairs() {
            let _ = writeln!(s, "{}\t{}\t{}", a.0, b.0, u8::from(self.is_anchor(a)));
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<BilingualDictionary> {
        let mut forward = Vec::new();
        let mut anchors = BTreeSet::new();
        for (i, line) in text.lines().skip(1).enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            let parse = |c: &str| {
                c.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("dictionary row {i}: bad field {c:?}")))
            };
            if cols.len() != 3 || parse(cols[0])? as usize != i {
                return Err(Error::Parse(format!("dictionary row {i}: malformed {line:?}")));
            }
            forward.push(LemmaId(parse(cols[1])?));
            if cols[2] == "1" {
                anchors.insert(LemmaId(i as u32));
            }
        }
        let mut backward = vec![LemmaId(u32::MAX); forward.len()];
        for (i, b) in forward.iter().enumerate() {
            let slot = backward
                .get_mut(b.index())
                .ok_or_else(|| Error::Parse(format!("dictionary target {} out of range", b.0)))?;
            if slot.0 != u32::MAX {
                return Err(Error::Parse(format!("dictionary target {} used twice", b.0)));
            }
            *slot = LemmaId(i as u32);
        }
        Ok(BilingualDictionary {
            forward,
            backward,
            anchors,
        })
    }
}

/// Splits `total` anchors over POS categories in proportion to their sizes
/// (largest remainder).
fn anchor_quota(sizes: &[(Pos, usize)], fraction: f64) -> Vec<usize> {
    let lemma_total: usize = sizes.iter().map(|s| s.1).sum();
    let total = (fraction * lemma_total as f64).floor() as usize;
    let exact: Vec<f64> = sizes.iter().map(|s| fraction * s.1 as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut missing = total - quota.iter().sum::<usize>();
    for i in order {
        if missing == 0 {
            break;
        }
        if quota[i] < sizes[i].1 {
            quota[i] += 1;
            missing -= 1;
        }
    }
    quota
}

/// Pairs the lemmas of `lex_a` and `lex_b` by a random POS-preserving
/// bijection and turns `⌊anchor_fraction · |lemmas|⌋` pairs into anchors by
/// copying the source forms into `lex_b`.
pub fn build_dictionary<R: Rng + ?Sized>(
    lex_a: &Lexicon,
    lex_b: &mut Lexicon,
    anchor_fraction: f64,
    rng: &mut R,
) -> Result<BilingualDictionary> {
    if !(0.0..=1.0).contains(&anchor_fraction) {
        return Err(Error::Validation(format!(
            "anchor fraction {anchor_fraction} is not in [0, 1]"
        )));
    }
    if lex_a.sizes() != lex_b.sizes() {
        return Err(Error::SizeMismatch(format!(
            "per-POS sizes differ: {:?} vs {:?}",
            lex_a.sizes(),
            lex_b.sizes()
        )));
    }
    let n = lex_a.len();
    let mut forward = vec![LemmaId(0); n];
    let mut backward = vec![LemmaId(0); n];
    for pos in Pos::ALL {
        let mut targets = lex_b.of_pos(pos).to_vec();
        targets.shuffle(rng);
        for (&a, &b) in lex_a.of_pos(pos).iter().zip(&targets) {
            forward[a.index()] = b;
            backward[b.index()] = a;
        }
    }
    let sizes: Vec<(Pos, usize)> = Pos::ALL.iter().map(|&p| (p, lex_a.of_pos(p).len())).collect();
    let quota = anchor_quota(&sizes, anchor_fraction);
    let mut anchors = BTreeSet::new();
    for (&(pos, _), &q) in sizes.iter().zip(&quota) {
        let chosen: Vec<LemmaId> = lex_a.of_pos(pos).choose_multiple(rng, q).copied().collect();
        anchors.extend(chosen);
    }
    for &a in &anchors {
        let b = forward[a.index()];
        lex_b.lemmas[b.index()].forms = lex_a.lemma(a).forms.clone();
    }
    lex_b
        .rebuild_index()
        .map_err(|e| Error::Generation(format!("anchor forms collide with target lexicon: {e}")))?;
    Ok(BilingualDictionary {
        forward,
        backward,
        anchors,
    })
}

/// Word frequency law inside one (POS, field) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyModel {
    #[default]
    Uniform,
    PowerLaw {
        exponent: f64,
    },
}

impl FrequencyModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FrequencyModel::PowerLaw { exponent } if !(exponent > 0.0) => Err(Error::Validation(
                format!("power-law exponent must be > 0, got {exponent}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Normalized weights of the words of a cell of size `n`, by rank.
pub fn word_weights(n: usize, model: &FrequencyModel) -> Vec<f64> {
    assert!(n > 0, "word_weights on an empty cell");
    let raw: Vec<f64> = match *model {
        FrequencyModel::Uniform => vec![1.0; n],
        FrequencyModel::PowerLaw { exponent } => {
            (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
        }
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// How sentences are distributed over lexical fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldDistribution {
    #[default]
    Balanced,
    Proportions {
        weights: Vec<f64>,
    },
    PowerLaw {
        exponent: f64,
    },
}

/// Lexical fields of content lemmas and the rank of every lemma inside its
/// (POS, field) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAssignment {
    n_fields: usize,
    field_of: Vec<Option<u16>>,
    rank_of: Vec<u32>,
    distribution: FieldDistribution,
    sentence_weights: Vec<f64>,
}

impl FieldAssignment {
    /// A single field; ranks follow lemma ids.
    pub fn single(lex: &Lexicon) -> FieldAssignment {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assign_fields(lex, 1, &FieldDistribution::Balanced, &mut rng)
            .expect("one field always fits")
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    /// Field of a content lemma; `None` for function words.
    pub fn field(&self, id: LemmaId) -> Option<u16> {
        self.field_of.get(id.index()).copied().flatten()
    }

    /// 1-based frequency rank of a lemma inside its cell.
    pub fn rank(&self, id: LemmaId) -> u32 {
        self.rank_of[id.index()]
    }

    pub fn distribution(&self) -> &FieldDistribution {
        &self.distribution
    }

    /// Probability of each field being chosen for a sentence.
    pub fn sentence_weights(&self) -> &[f64] {
        &self.sentence_weights
    }

    pub fn covers(&self, lex: &Lexicon) -> bool {
        self.field_of.len() == lex.len()
    }

    /// Same fields and ranks on the other side of a dictionary.
    pub fn transfer(&self, dict: &BilingualDictionary) -> FieldAssignment {
        let n = self.field_of.len();
        let mut field_of = vec![None; n];
        let mut rank_of = vec![0; n];
        for (a, b) in dict.pairs() {
            field_of[b.index()] = self.field_of[a.index()];
            rank_of[b.index()] = self.rank_of[a.index()];
        }
        FieldAssignment {
            n_fields: self.n_fields,
            field_of,
            rank_of,
            distribution: self.distribution.clone(),
            sentence_weights: self.sentence_weights.clone(),
        }
    }
}

fn field_weights(n_fields: usize, dist: &FieldDistribution) -> Result<Vec<f64>> {
    let raw = match dist {
        FieldDistribution::Balanced => vec![1.0; n_fields],
        FieldDistribution::Proportions { weights } => {
            if weights.len() != n_fields {
                return Err(Error::Validation(format!(
                    "{} field proportions for {n_fields} fields",
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Validation(format!("bad field proportions {weights:?}")));
            }
            weights.clone()
        }
        FieldDistribution::PowerLaw { exponent } => {
            let m = FrequencyModel::PowerLaw {
                exponent: *exponent,
            };
            m.validate()?;
            return Ok(word_weights(n_fields, &m));
        }
    };
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Splits every content POS into `n_fields` non-empty, near-equal fields.
pub fn assign_fields<R: Rng + ?Sized>(
    lex: &Lexicon,
    n_fields: usize,
    dist: &FieldDistribution,
    rng: &mut R,
) -> Result<FieldAssignment> {
    if n_fields == 0 || n_fields > u16::MAX as usize {
        return Err(Error::Validation(format!("invalid field count {n_fields}")));
    }
    let smallest = Pos::CONTENT
        .iter()
        .map(|&p| lex.of_pos(p).len())
        .min()
        .unwrap_or(0);
    if n_fields > smallest {
        return Err(Error::Validation(format!(
            "{n_fields} fields but the smallest content POS has {smallest} lemmas"
        )));
    }
    let sentence_weights = field_weights(n_fields, dist)?;
    let mut field_of = vec![None; lex.len()];
    let mut rank_of = vec![0u32; lex.len()];
    for pos in Pos::ALL {
        let ids = lex.of_pos(pos);
        if pos.is_content() {
            let mut shuffled = ids.to_vec();
            if n_fields > 1 {
                shuffled.shuffle(rng);
            }
            let mut cells: Vec<Vec<LemmaId>> = vec![Vec::new(); n_fields];
            for (i, id) in shuffled.into_iter().enumerate() {
                cells[i % n_fields].push(id);
            }
            for (f, mut cell) in cells.into_iter().enumerate() {
                cell.sort();
                for (r, id) in cell.into_iter().enumerate() {
                    field_of[id.index()] = Some(f as u16);
                    rank_of[id.index()] = r as u32 + 1;
                }
            }
        } else {
            for (r, id) in ids.iter().enumerate() {
                rank_of[id.index()] = r as u32 + 1;
            }
        }
    }
    Ok(FieldAssignment {
        n_fields,
        field_of,
        rank_of,
        distribution: dist.clone(),
        sentence_weights,
    })
}

/// Rows `id \t POS \t field \t rank \t forms` (forms comma-separated).
pub fn lexicon_tsv(lex: &Lexicon, fields: &FieldAssignment) -> String {
    let mut s = String::from("id\tpos\tfield\trank\tforms\n");
    for l in lex.lemmas() {
        let field = fields.field(l.id).map(|f| f.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            l.id.0,
            l.pos.name(),
            field,
            fields.rank(l.id),
            l.forms.join(",")
        );
    }
    s
}

/// Reads a lexicon and its field assignment back from [`lexicon_tsv`] output.
pub fn parse_lexicon_tsv(
    text: &str,
    seed: u64,
    distribution: FieldDistribution,
    n_fields: usize,
) -> Result<(Lexicon, FieldAssignment)> {
    let mut lemmas = Vec::new();
    let mut field_of = Vec::new();
    let mut rank_of = Vec::new();
    for (i, line) in text.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::Parse(format!("lexicon row {i}: expected 5 columns")));
        }
        let pos = Pos::from_name(cols[1])
            .ok_or_else(|| Error::Parse(format!("lexicon row {i}: unknown POS {:?}", cols[1])))?;
        let bad = |what: &str| Error::Parse(format!("lexicon row {i}: bad {what}"));
        let id: u32 = cols[0].parse().map_err(|_| bad("id"))?;
        field_of.push(match cols[2] {
            "-" => None,
            f => Some(f.parse::<u16>().map_err(|_| bad("field"))?),
        });
        rank_of.push(cols[3].parse::<u32>().map_err(|_| bad("rank"))?);
        lemmas.push(Lemma {
            id: LemmaId(id),
            pos,
            forms: cols[4].split(',').map(str::to_string).collect(),
        });
    }
    let lex = Lexicon::from_lemmas(seed, lemmas)?;
    let sentence_weights = field_weights(n_fields, &distribution)?;
    Ok((
        lex,
        FieldAssignment {
            n_fields,
            field_of,
            rank_of,
            distribution,
            sentence_weights,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LexiconSizes {
        LexiconSizes {
            noun: 12,
            adj: 6,
            tverb: 8,
            iverb: 8,
            verb_comp: 4,
            prep: 4,
            subj: 1,
            comp: 1,
            rel: 1,
        }
    }

    #[test]
    fn default_sizes_total_1374_surfaces() {
        let s = LexiconSizes::default();
        assert_eq!(s.surface_count(), 1374);
        let lex = generate_lexicon(1, &s).unwrap();
        assert_eq!(lex.surface_count(), 1374);
        assert_eq!(lex.of_pos(Pos::Noun).len(), 158);
        assert_eq!(lex.of_pos(Pos::VerbComp).len(), 23);
    }

    #[test]
    fn same_seed_same_lexicon() {
        assert_eq!(generate_lexicon(9, &small()).unwrap(), generate_lexicon(9, &small()).unwrap());
    }

    #[test]
    fn forms_are_complete_lowercase_and_unique() {
        let lex = generate_lexicon(3, &LexiconSizes::default()).unwrap();
        let mut seen = HashSet::new();
        for l in lex.lemmas() {
            assert_eq!(l.forms.len(), l.pos.slot_count());
            for f in &l.forms {
                assert!(!f.is_empty() && f.chars().all(|c| c.is_ascii_lowercase()), "{f}");
                assert!(seen.insert(f.clone()), "duplicate {f}");
            }
        }
    }

    #[test]
    fn different_seeds_give_disjoint_surfaces() {
        let a = generate_lexicon(1, &LexiconSizes::default()).unwrap();
        for seed in 2..6 {
            let b = generate_lexicon(seed, &LexiconSizes::default()).unwrap();
            let common: Vec<&str> = a.surfaces().filter(|s| b.lookup(s).is_some()).collect();
            assert!(common.is_empty(), "seed {seed}: {common:?}");
        }
    }

    #[test]
    fn inflection_patterns() {
        assert_eq!(inflect(Pos::VerbComp, "lurchify")[0], "lurchifies");
        assert_eq!(inflect(Pos::IVerb, "rolv")[3], "rolveda");
        assert_eq!(inflect(Pos::IVerb, "rheleate"), ["rheleates", "rheleate", "rheleated", "rheleateda"]);
        assert_eq!(inflect(Pos::Noun, "autoner"), ["autoner", "autoners"]);
        assert_eq!(inflect(Pos::Noun, "brush"), ["brush", "brushes"]);
        assert_eq!(inflect(Pos::Adj, "prask"), ["prask"]);
    }

    #[test]
    fn capacity_error_when_too_many_short_words() {
        let sizes = LexiconSizes {
            subj: 100_000,
            ..small()
        };
        match generate_lexicon(1, &sizes) {
            Err(Error::Capacity(msg)) => assert!(msg.contains("Subj"), "{msg}"),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn zero_size_is_rejected() {
        let sizes = LexiconSizes { adj: 0, ..small() };
        assert!(generate_lexicon(1, &sizes).is_err());
    }

    #[test]
    fn dictionary_anchor_counts() {
        let a = generate_lexicon(1, &LexiconSizes::default()).unwrap();
        for (fraction, expected) in [(0.0, 0), (0.3, 168), (1.0, 562)] {
            let mut b = generate_lexicon(2, &LexiconSizes::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let d = build_dictionary(&a, &mut b, fraction, &mut rng).unwrap();
            assert_eq!(d.anchors().len(), expected, "fraction {fraction}");
            for (x, y) in d.pairs() {
                assert_eq!(a.lemma(x).pos, b.lemma(y).pos);
                let same = a.lemma(x).forms == b.lemma(y).forms;
                assert_eq!(same, d.is_anchor(x));
            }
        }
    }

    #[test]
    fn full_anchor_dictionary_is_identity_on_surfaces() {
        let a = generate_lexicon(1, &small()).unwrap();
        let mut b = generate_lexicon(2, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = build_dictionary(&a, &mut b, 1.0, &mut rng).unwrap();
        let sa: BTreeSet<&str> = a.surfaces().collect();
        let sb: BTreeSet<&str> = b.surfaces().collect();
        assert_eq!(sa, sb);
        for (x, y) in d.pairs() {
            assert_eq!(a.lemma(x).forms, b.lemma(y).forms);
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = generate_lexicon(1, &small()).unwrap();
        let mut b = generate_lexicon(2, &LexiconSizes { noun: 13, ..small() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            build_dictionary(&a, &mut b, 0.0, &mut rng),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn dictionary_tsv_round_trip() {
        let a = generate_lexicon(1, &small()).unwrap();
        let mut b = generate_lexicon(2, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = build_dictionary(&a, &mut b, 0.3, &mut rng).unwrap();
        assert_eq!(BilingualDictionary::from_tsv(&d.to_tsv()).unwrap(), d);
    }

    #[test]
    fn word_weight_examples() {
        assert_eq!(word_weights(4, &FrequencyModel::Uniform), vec![0.25; 4]);
        let w = word_weights(158, &FrequencyModel::PowerLaw { exponent: 1.1 });
        assert!((w[0] / w[1] - 2f64.powf(1.1)).abs() < 1e-12);
        assert!((w[0] / w[1] - 2.1435).abs() < 1e-3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(FrequencyModel::PowerLaw { exponent: 0.0 }.validate().is_err());
    }

    #[test]
    fn field_assignment_examples() {
        let lex = generate_lexicon(5, &LexiconSizes::default()).unwrap();
        let one = FieldAssignment::single(&lex);
        for l in lex.lemmas() {
            if l.pos.is_content() {
                assert_eq!(one.field(l.id), Some(0));
            } else {
                assert_eq!(one.field(l.id), None);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let two = assign_fields(&lex, 2, &FieldDistribution::Balanced, &mut rng).unwrap();
        for pos in Pos::CONTENT {
            let ids = lex.of_pos(pos);
            let in0 = ids.iter().filter(|&&i| two.field(i) == Some(0)).count();
            assert!(in0 > 0 && in0 < ids.len());
            assert!(in0.abs_diff(ids.len() - in0) <= 1);
        }
        let ten = assign_fields(
            &lex,
            10,
            &FieldDistribution::PowerLaw { exponent: 1.1 },
            &mut rng,
        )
        .unwrap();
        let w = ten.sentence_weights();
        assert!(w.iter().skip(1).all(|x| *x < w[0]));
        assert!(assign_fields(&lex, 24, &FieldDistribution::Balanced, &mut rng).is_err());
        assert!(assign_fields(&lex, 0, &FieldDistribution::Balanced, &mut rng).is_err());
    }

    #[test]
    fn explicit_proportions_are_normalized() {
        let lex = generate_lexicon(5, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fa = assign_fields(
            &lex,
            2,
            &FieldDistribution::Proportions {
                weights: vec![3.0, 7.0],
            },
            &mut rng,
        )
        .unwrap();
        assert!((fa.sentence_weights()[0] - 0.3).abs() < 1e-12);
        assert!(assign_fields(
            &lex,
            2,
            &FieldDistribution::Proportions { weights: vec![1.0] },
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn lexicon_tsv_round_trip() {
        let lex = generate_lexicon(5, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fa = assign_fields(&lex, 2, &FieldDistribution::Balanced, &mut rng).unwrap();
        let (lex2, fa2) =
            parse_lexicon_tsv(&lexicon_tsv(&lex, &fa), 5, FieldDistribution::Balanced, 2).unwrap();
        assert_eq!(lex, lex2);
        assert_eq!(fa, fa2);
    }
}

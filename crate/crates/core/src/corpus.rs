//! Sentence realization, monolingual and parallel corpora, and their file
//! formats.
//!
//! Surface files hold one sentence per line (space-separated tokens ending
//! in `.`). Provenance lives in a JSON-Lines sidecar so that training never
//! sees it.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::bleu;
use crate::grammar::{linearize_leaves, sample_structure, GrammarConfig, Pos, Structure, SwitchVector};
use crate::lexicon::{word_weights, BilingualDictionary, FieldAssignment, FrequencyModel, LemmaId, Lexicon};
use crate::seed;

pub const PERIOD: &str = ".";

struct Cell {
    ids: Vec<LemmaId>,
    sampler: Option<WeightedIndex<f64>>,
}

/// A grammar plus a lexicon with its frequency law and lexical fields.
pub struct LanguageSpec {
    pub language: String,
    pub switches: SwitchVector,
    pub lexicon: Arc<Lexicon>,
    pub frequency: FrequencyModel,
    pub fields: FieldAssignment,
    field_sampler: WeightedIndex<f64>,
    cells: HashMap<(Pos, Option<u16>), Cell>,
}

impl std::fmt::Debug for LanguageSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LanguageSpec")
            .field("language", &self.language)
            .field("switches", &self.switches.to_string())
            .field("lemmas", &self.lexicon.len())
            .field("frequency", &self.frequency)
            .field("fields", &self.fields.n_fields())
            .finish()
    }
}

impl LanguageSpec {
    pub fn new(
        language: impl Into<String>,
        switches: SwitchVector,
        lexicon: Arc<Lexicon>,
        frequency: FrequencyModel,
        fields: FieldAssignment,
    ) -> Result<LanguageSpec> {
        frequency.validate()?;
        if !fields.covers(&lexicon) {
            return Err(Error::Validation(
                "field assignment does not match the lexicon".into(),
            ));
        }
        let field_sampler = WeightedIndex::new(fields.sentence_weights().iter().copied())
            .map_err(|e| Error::Validation(format!("field weights: {e}")))?;
        let mut groups: HashMap<(Pos, Option<u16>), Vec<LemmaId>> = HashMap::new();
        for l in lexicon.lemmas() {
            groups.entry((l.pos, fields.field(l.id))).or_default().push(l.id);
        }
        let mut cells = HashMap::new();
        for (key, mut ids) in groups {
            ids.sort_by_key(|&id| (fields.rank(id), id));
            let weights = word_weights(ids.len(), &frequency);
            let sampler = Some(WeightedIndex::new(weights).expect("non-empty normalized weights"));
            cells.insert(key, Cell { ids, sampler });
        }
        for pos in Pos::CONTENT {
            for f in 0..fields.n_fields() as u16 {
                cells.entry((pos, Some(f))).or_insert(Cell {
                    ids: Vec::new(),
                    sampler: None,
                });
            }
        }
        Ok(LanguageSpec {
            language: language.into(),
            switches,
            lexicon,
            frequency,
            fields,
            field_sampler,
            cells,
        })
    }

    /// Lemmas of a (POS, field) cell ordered by frequency rank. Function
    /// words use `field = None`.
    pub fn cell(&self, pos: Pos, field: Option<u16>) -> &[LemmaId] {
        let key = (pos, if pos.is_content() { field } else { None });
        self.cells.get(&key).map(|c| c.ids.as_slice()).unwrap_or(&[])
    }

    fn sample_lemma<R: Rng + ?Sized>(&self, pos: Pos, field: u16, rng: &mut R) -> Result<LemmaId> {
        let key = (pos, pos.is_content().then_some(field));
        match self.cells.get(&key) {
            Some(Cell {
                ids,
                sampler: Some(s),
            }) => Ok(ids[s.sample(rng)]),
            _ => Err(Error::Generation(format!(
                "no {} word in field {field} of language {}",
                pos.name(),
                self.language
            ))),
        }
    }

    /// Surface form of a lemma at an inflection slot.
    pub fn surface(&self, id: LemmaId, slot: usize) -> &str {
        &self.lexicon.lemma(id).forms[slot]
    }

    /// POS label of a surface form, or `None` when the word is not in this
    /// language's lexicon.
    pub fn pos_tag(&self, surface: &str) -> Option<String> {
        if surface == PERIOD {
            return Some(PERIOD.to_string());
        }
        let (id, slot) = self.lexicon.lookup(surface)?;
        Some(slot_tag(self.lexicon.lemma(id).pos, slot))
    }
}

/// POS label for a category and inflection slot (inverse of `Leaf::slot`).
pub fn slot_tag(pos: Pos, slot: usize) -> String {
    let mut s = pos.name().to_string();
    if pos.is_verb() {
        s.push_str(if slot >= 2 { "Past" } else { "Pres" });
    }
    if pos == Pos::Noun || pos.is_verb() {
        s.push_str(if slot.is_multiple_of(2) { "S" } else { "P" });
    }
    s
}

/// Hidden ground truth of a generated sentence. Lemmas follow the
/// structure's canonical leaf order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub structure: Structure,
    pub lemmas: Vec<LemmaId>,
    pub field: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub provenance: Option<Provenance>,
}

impl Sentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn from_text(line: &str) -> Sentence {
        Sentence {
            tokens: line.split_whitespace().map(str::to_string).collect(),
            provenance: None,
        }
    }
}

fn surface_tokens(
    structure: &Structure,
    lemmas: &[LemmaId],
    spec: &LanguageSpec,
) -> Vec<String> {
    let leaves = structure.leaves();
    let mut tokens: Vec<String> = linearize_leaves(structure, &spec.switches)
        .into_iter()
        .map(|i| spec.surface(lemmas[i], leaves[i].slot()).to_string())
        .collect();
    tokens.push(PERIOD.to_string());
    tokens
}

/// Fills the leaves of `st` with words of `lang` and linearizes it.
pub fn realize<R: Rng + ?Sized>(st: &Structure, lang: &LanguageSpec, rng: &mut R) -> Result<Sentence> {
    let field = lang.field_sampler.sample(rng) as u16;
    let lemmas = st
        .leaves()
        .iter()
        .map(|leaf| lang.sample_lemma(leaf.pos, field, rng))
        .collect::<Result<Vec<_>>>()?;
    let tokens = surface_tokens(st, &lemmas, lang);
    Ok(Sentence {
        tokens,
        provenance: Some(Provenance {
            structure: st.clone(),
            lemmas,
            field,
        }),
    })
}

/// Translates a sentence with known provenance: lemmas go through the
/// dictionary, features are kept, and the target grammar re-orders leaves.
pub fn oracle_translate(
    s: &Sentence,
    dict: &BilingualDictionary,
    target: &LanguageSpec,
) -> Result<Sentence> {
    let prov = s.provenance.as_ref().ok_or(Error::MissingProvenance)?;
    let lemmas = prov
        .lemmas
        .iter()
        .map(|&id| {
            dict.translate(id)
                .filter(|t| t.index() < target.lexicon.len())
                .ok_or(Error::Coverage(id.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let tokens = surface_tokens(&prov.structure, &lemmas, target);
    Ok(Sentence {
        tokens,
        provenance: Some(Provenance {
            structure: prov.structure.clone(),
            lemmas,
            field: prov.field,
        }),
    })
}

const STRUCTURE_STREAM: u64 = 0x5354;

fn sentence_rng(seed: u64, index: usize) -> rand_chacha::ChaCha8Rng {
    seed::rng(&[STRUCTURE_STREAM, seed, index as u64])
}

/// `n` sentences of one language. Line `i` depends only on `(seed, i)`.
pub fn generate_monolingual(
    spec: &LanguageSpec,
    cfg: &GrammarConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<Sentence>> {
    cfg.validate()?;
    (0..n)
        .map(|i| {
            let mut rng = sentence_rng(seed, i);
            let st = sample_structure(cfg, &mut rng);
            realize(&st, spec, &mut rng)
        })
        .collect()
}

/// Two unaligned monolingual corpora from independent structure streams.
pub fn generate_training_sets(
    spec_a: &LanguageSpec,
    spec_b: &LanguageSpec,
    cfg: &GrammarConfig,
    n: usize,
    seed_a: u64,
    seed_b: u64,
) -> Result<(Vec<Sentence>, Vec<Sentence>)> {
    if seed_a == seed_b {
        log::warn!(
            "both training sides use structure seed {seed_a}; the corpora will be accidentally aligned"
        );
    }
    Ok((
        generate_monolingual(spec_a, cfg, n, seed_a)?,
        generate_monolingual(spec_b, cfg, n, seed_b)?,
    ))
}

/// Source sentences with their oracle translations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParallelCorpus {
    pub pairs: Vec<(Sentence, Sentence)>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> Vec<Vec<String>> {
        self.pairs.iter().map(|p| p.0.tokens.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<String>> {
        self.pairs.iter().map(|p| p.1.tokens.clone()).collect()
    }

    /// Same pairs in the other direction.
    pub fn reversed(&self) -> ParallelCorpus {
        ParallelCorpus {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// Re-derives every target from its source's provenance; returns the
    /// index of the first pair that does not match.
    pub fn check_oracle_consistency(
        &self,
        dict: &BilingualDictionary,
        target: &LanguageSpec,
    ) -> std::result::Result<(), usize> {
        for (i, (src, tgt)) in self.pairs.iter().enumerate() {
            match oracle_translate(src, dict, target) {
                Ok(t) if &t == tgt => {}
                _ => return Err(i),
            }
        }
        Ok(())
    }
}

/// `n` source sentences of `src` with oracle translations into `tgt`.
pub fn generate_parallel(
    src: &LanguageSpec,
    tgt: &LanguageSpec,
    dict: &BilingualDictionary,
    cfg: &GrammarConfig,
    n: usize,
    seed: u64,
) -> Result<ParallelCorpus> {
    if let Some(missing) = src
        .lexicon
        .lemmas()
        .iter()
        .find(|l| dict.translate(l.id).is_none_or(|t| t.index() >= tgt.lexicon.len()))
    {
        return Err(Error::Coverage(missing.id.0));
    }
    let sources = generate_monolingual(src, cfg, n, seed)?;
    let pairs = sources
        .into_iter()
        .map(|s| {
            let t = oracle_translate(&s, dict, tgt)?;
            Ok((s, t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParallelCorpus { pairs })
}

/// BLEU of a system that outputs its input unchanged.
pub fn copy_baseline(pc: &ParallelCorpus) -> f64 {
    bleu(&pc.sources(), &pc.targets()).expect("pairs have equal counts")
}

#[derive(Serialize, Deserialize)]
struct SidecarRecord {
    structure: String,
    lemmas: Vec<u32>,
    field: u16,
}

pub fn write_corpus(path: &Path, sentences: &[Sentence]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in sentences {
        writeln!(w, "{}", s.text())?;
    }
    w.flush()?;
    Ok(())
}

/// JSON-Lines provenance, one record per sentence.
pub fn write_sidecar(path: &Path, sentences: &[Sentence]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in sentences {
        let prov = s.provenance.as_ref().ok_or(Error::MissingProvenance)?;
        let rec = SidecarRecord {
            structure: prov.structure.to_sexpr(),
            lemmas: prov.lemmas.iter().map(|l| l.0).collect(),
            field: prov.field,
        };
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corpus file, attaching provenance when a sidecar is given.
pub fn read_corpus(path: &Path, sidecar: Option<&Path>) -> Result<Vec<Sentence>> {
    let mut sentences: Vec<Sentence> = BufReader::new(fs::File::open(path)?)
        .lines()
        .map(|l| l.map(|l| Sentence::from_text(&l)))
        .collect::<std::io::Result<_>>()?;
    if let Some(sc) = sidecar {
        let records: Vec<SidecarRecord> = BufReader::new(fs::File::open(sc)?)
            .lines()
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect::<Result<_>>()?;
        if records.len() != sentences.len() {
            return Err(Error::Parse(format!(
                "sidecar has {} records for {} sentences",
                records.len(),
                sentences.len()
            )));
        }
        for (s, r) in sentences.iter_mut().zip(records) {
            s.provenance = Some(Provenance {
                structure: Structure::from_sexpr(&r.structure)?,
                lemmas: r.lemmas.into_iter().map(LemmaId).collect(),
                field: r.field,
            });
        }
    }
    Ok(sentences)
}

/// Writes `<stem>.src`, `<stem>.tgt` and their `.jsonl` sidecars.
pub fn write_parallel(dir: &Path, stem: &str, pc: &ParallelCorpus) -> Result<()> {
    let (src, tgt): (Vec<Sentence>, Vec<Sentence>) = pc.pairs.iter().cloned().unzip();
    write_corpus(&dir.join(format!("{stem}.src")), &src)?;
    write_corpus(&dir.join(format!("{stem}.tgt")), &tgt)?;
    write_sidecar(&dir.join(format!("{stem}.src.jsonl")), &src)?;
    write_sidecar(&dir.join(format!("{stem}.tgt.jsonl")), &tgt)?;
    Ok(())
}

pub fn read_parallel(dir: &Path, stem: &str) -> Result<ParallelCorpus> {
    let src = read_corpus(
        &dir.join(format!("{stem}.src")),
        Some(&dir.join(format!("{stem}.src.jsonl"))),
    )?;
    let tgt = read_corpus(
        &dir.join(format!("{stem}.tgt")),
        Some(&dir.join(format!("{stem}.tgt.jsonl"))),
    )?;
    if src.len() != tgt.len() {
        return Err(Error::Parse(format!(
            "parallel corpus {stem}: {} sources vs {} targets",
            src.len(),
            tgt.len()
        )));
    }
    Ok(ParallelCorpus {
        pairs: src.into_iter().zip(tgt).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse_switches, Leaf, Node, Number, Rule, Tense};
    use crate::lexicon::{build_dictionary, generate_lexicon, Lemma, LexiconSizes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    /// One-lemma-per-POS lexica carrying the example words.
    fn example_lexicon(noun: &str, subj: &str, verb: &str, seed: u64) -> Lexicon {
        let mut lemmas = Vec::new();
        for pos in Pos::ALL {
            let forms: Vec<String> = match pos {
                Pos::Noun => vec![noun.into(), format!("{noun}s")],
                Pos::Subj => vec![subj.into()],
                Pos::VerbComp => vec![verb.into(), format!("{verb}x"), format!("{verb}xd"), format!("{verb}xda")],
                p => (0..p.slot_count())
                    .map(|k| format!("{}{}{}", p.name().to_lowercase(), seed_letter(seed), "abcd".as_bytes()[k] as char))
                    .collect(),
            };
            lemmas.push(Lemma {
                id: LemmaId(lemmas.len() as u32),
                pos,
                forms,
            });
        }
        Lexicon::from_lemmas(seed, lemmas).unwrap()
    }

    fn seed_letter(seed: u64) -> char {
        (b'a' + seed as u8) as char
    }

    fn spec(lex: Lexicon, sw: &str) -> LanguageSpec {
        let fields = FieldAssignment::single(&lex);
        LanguageSpec::new("l", parse_switches(sw).unwrap(), Arc::new(lex), FrequencyModel::Uniform, fields).unwrap()
    }

    fn example_structure() -> Structure {
        Structure::new(Node::phrase(
            Rule::Sentence,
            vec![
                Node::phrase(
                    Rule::NpBase,
                    vec![Node::Leaf(Leaf::noun(Number::S)), Node::Leaf(Leaf::plain(Pos::Subj))],
                ),
                Node::phrase(
                    Rule::VpIntrans,
                    vec![Node::Leaf(Leaf::verb(Pos::VerbComp, Tense::Pres, Number::S))],
                ),
            ],
        ))
    }

    #[test]
    fn realizes_table_examples() {
        let lex0 = example_lexicon("burse", "sub", "lurchifies", 0);
        let lex1 = example_lexicon("swopceer", "bus", "rheleates", 1);
        let l0 = spec(lex0.clone(), "000000");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = realize(&example_structure(), &l0, &mut rng).unwrap();
        assert_eq!(s.text(), "burse sub lurchifies .");

        let ident = BilingualDictionary::identity(&lex0);
        let l0_s = spec(lex0.clone(), "100000");
        assert_eq!(oracle_translate(&s, &ident, &l0_s).unwrap().text(), "lurchifies burse sub .");

        let l1 = spec(lex1, "000000");
        assert_eq!(oracle_translate(&s, &ident, &l1).unwrap().text(), "swopceer bus rheleates .");
    }

    fn pair_specs(anchor: f64) -> (LanguageSpec, LanguageSpec, BilingualDictionary) {
        let a = generate_lexicon(1, &small()).unwrap();
        let mut b = generate_lexicon(2, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = build_dictionary(&a, &mut b, anchor, &mut rng).unwrap();
        let fa = FieldAssignment::single(&a);
        let fb = fa.transfer(&d);
        let sa = LanguageSpec::new("a", parse_switches("000000").unwrap(), Arc::new(a), FrequencyModel::Uniform, fa).unwrap();
        let sb = LanguageSpec::new("b", parse_switches("110101").unwrap(), Arc::new(b), FrequencyModel::Uniform, fb).unwrap();
        (sa, sb, d)
    }

    #[test]
    fn oracle_round_trip_is_identity() {
        let (sa, sb, d) = pair_specs(0.3);
        let inv = d.inverse();
        let cfg = GrammarConfig::default();
        for s in generate_monolingual(&sa, &cfg, 500, 9).unwrap() {
            let t = oracle_translate(&s, &d, &sb).unwrap();
            assert_eq!(t.tokens.len(), s.tokens.len());
            let back = oracle_translate(&t, &inv, &sa).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn parallel_pairs_are_oracle_consistent() {
        let (sa, sb, d) = pair_specs(0.0);
        let pc = generate_parallel(&sa, &sb, &d, &GrammarConfig::default(), 200, 4).unwrap();
        assert_eq!(pc.len(), 200);
        assert_eq!(pc.check_oracle_consistency(&d, &sb), Ok(()));
        let mut broken = pc.clone();
        broken.pairs[17].1.tokens.swap(0, 1);
        assert_eq!(broken.check_oracle_consistency(&d, &sb), Err(17));
    }

    #[test]
    fn identical_spec_identity_dictionary_gives_equal_pairs() {
        let lex = generate_lexicon(1, &small()).unwrap();
        let d = BilingualDictionary::identity(&lex);
        let s = spec(lex, "010110");
        let pc = generate_parallel(&s, &s, &d, &GrammarConfig::default(), 100, 2).unwrap();
        assert!(pc.pairs.iter().all(|(a, b)| a.tokens == b.tokens));
        assert!((copy_baseline(&pc) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn training_sets_are_deterministic_and_differ_across_seeds() {
        let lex = generate_lexicon(1, &small()).unwrap();
        let s = spec(lex, "000000");
        let cfg = GrammarConfig::default();
        let (a1, b1) = generate_training_sets(&s, &s, &cfg, 10, 1, 2).unwrap();
        let (a2, b2) = generate_training_sets(&s, &s, &cfg, 10, 1, 2).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let differing = a1.iter().zip(&b1).filter(|(x, y)| x.tokens != y.tokens).count();
        assert!(differing >= 8, "only {differing} of 10 lines differ");
    }

    #[test]
    fn line_generation_is_order_independent() {
        let lex = generate_lexicon(1, &small()).unwrap();
        let s = spec(lex, "000000");
        let cfg = GrammarConfig::default();
        let long = generate_monolingual(&s, &cfg, 30, 5).unwrap();
        let short = generate_monolingual(&s, &cfg, 10, 5).unwrap();
        assert_eq!(&long[..10], &short[..]);
    }

    #[test]
    fn missing_provenance_and_coverage_errors() {
        let (sa, sb, d) = pair_specs(0.0);
        let bare = Sentence::from_text("a b .");
        assert!(matches!(oracle_translate(&bare, &d, &sb), Err(Error::MissingProvenance)));
        let small_lex = example_lexicon("burse", "sub", "lurch", 0);
        let tiny = spec(small_lex, "000000");
        assert!(matches!(
            generate_parallel(&sa, &tiny, &d, &GrammarConfig::default(), 5, 1),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn empty_cell_is_a_generation_error() {
        // Five fields over one-lemma-per-POS lexicon cannot be assigned, so
        // build an assignment on a bigger lexicon and apply it to a language
        // whose lexicon lacks words in field 1.
        let lex = generate_lexicon(1, &small()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fa = crate::lexicon::assign_fields(
            &lex,
            2,
            &crate::lexicon::FieldDistribution::Proportions { weights: vec![0.0, 1.0] },
            &mut rng,
        )
        .unwrap();
        let text = crate::lexicon::lexicon_tsv(&lex, &fa).replace("\t1\t", "\t0\t");
        let (lex2, fa2) = crate::lexicon::parse_lexicon_tsv(
            &text,
            1,
            crate::lexicon::FieldDistribution::Proportions { weights: vec![0.0, 1.0] },
            2,
        )
        .unwrap();
        let s = LanguageSpec::new("x", SwitchVector::default(), Arc::new(lex2), FrequencyModel::Uniform, fa2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(realize(&example_structure(), &s, &mut rng), Err(Error::Generation(_))));
    }

    #[test]
    fn files_round_trip() {
        let (sa, sb, d) = pair_specs(0.3);
        let pc = generate_parallel(&sa, &sb, &d, &GrammarConfig::default(), 25, 4).unwrap();
        let dir = std::env::temp_dir().join(format!("btlab-corpus-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        write_parallel(&dir, "test", &pc).unwrap();
        assert_eq!(read_parallel(&dir, "test").unwrap(), pc);
        let text = fs::read_to_string(dir.join("test.src")).unwrap();
        assert_eq!(text.lines().count(), 25);
        assert!(text.lines().all(|l| l.ends_with(" .")));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn slot_tags_match_leaf_tags() {
        for pos in Pos::ALL {
            for slot in 0..pos.slot_count() {
                let tag = slot_tag(pos, slot);
                assert_eq!(Leaf::parse_tag(&tag).unwrap().slot(), slot, "{tag}");
            }
        }
    }
}

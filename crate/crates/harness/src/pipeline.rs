//! One run: languages, corpora, tokenizer, training, evaluation. Each stage
//! is recorded in the manifest; with an output directory every artifact is
//! written as soon as it exists, so a failure keeps what came before it.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use btlab_core::corpus::{
    copy_baseline, generate_parallel, generate_training_sets, write_corpus, write_parallel, write_sidecar,
    LanguageSpec, ParallelCorpus, Sentence,
};
use btlab_core::evaluation::{
    bleu, context_metrics, frequency_rank_report, pos_bleu, relative_distance, syntax_summary,
    word_translation_stats, EvalReport,
};
use btlab_core::grammar::parse_switches;
use btlab_core::lexicon::{
    assign_fields, build_dictionary, generate_lexicon, generate_lexicon_avoiding, lexicon_tsv, BilingualDictionary,
};
use btlab_core::seed;
use btlab_core::tokenizer::{train_bpe, BpeModel};
use btlab_nmt::checkpoint;
use btlab_nmt::model::{Model, Pair};
use btlab_nmt::train::{train, translate, ParallelIds, TrainData, TrainLog};

use crate::config::RunConfig;
use crate::manifest::{RunManifest, StageRecord, StageStatus};
use crate::{write_file, Error, Result};

pub const LANGUAGES: [&str; 2] = ["a", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Languages,
    Corpora,
    Tokenizer,
    Train,
    Eval,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Languages => "languages",
            Stage::Corpora => "corpora",
            Stage::Tokenizer => "tokenizer",
            Stage::Train => "train",
            Stage::Eval => "eval",
        }
    }
}

pub struct Languages {
    pub a: LanguageSpec,
    pub b: LanguageSpec,
    pub dict: BilingualDictionary,
}

impl Languages {
    pub fn spec(&self, lang: usize) -> &LanguageSpec {
        if lang == 0 {
            &self.a
        } else {
            &self.b
        }
    }
}

pub struct Corpora {
    pub mono: [Vec<Sentence>; 2],
    pub valid: ParallelCorpus,
    pub test: ParallelCorpus,
    pub aligned: ParallelCorpus,
}

fn stream(data_seed: u64, name: &str) -> u64 {
    seed::derive(&[data_seed, seed::label(name)])
}

pub fn build_languages(cfg: &RunConfig) -> Result<Languages> {
    let l = &cfg.languages;
    let s = cfg.data.seed;
    let lex_a = generate_lexicon(stream(s, "lexicon-a"), &l.lexicon)?;
    let fields_a = assign_fields(
        &lex_a,
        l.fields,
        &l.field_distribution,
        &mut seed::rng(&[stream(s, "fields")]),
    )?;
    let (lex_b, dict) = if l.shared_lexicon {
        let dict = BilingualDictionary::identity(&lex_a);
        (lex_a.clone(), dict)
    } else {
        let avoid: HashSet<String> = lex_a.surfaces().map(str::to_string).collect();
        let mut lex_b = generate_lexicon_avoiding(stream(s, "lexicon-b"), &l.lexicon, &avoid)?;
        let dict = build_dictionary(
            &lex_a,
            &mut lex_b,
            l.anchor_fraction,
            &mut seed::rng(&[stream(s, "dictionary")]),
        )?;
        (lex_b, dict)
    };
    let fields_b = fields_a.transfer(&dict);
    let a = LanguageSpec::new(
        LANGUAGES[0],
        parse_switches(&l.a)?,
        Arc::new(lex_a),
        l.frequency,
        fields_a,
    )?;
    let b = LanguageSpec::new(
        LANGUAGES[1],
        parse_switches(&l.b)?,
        Arc::new(lex_b),
        l.frequency,
        fields_b,
    )?;
    Ok(Languages { a, b, dict })
}

/// Monolingual sides come from independent structure streams; validation,
/// test and aligned sets from three further streams.
pub fn build_corpora(cfg: &RunConfig, langs: &Languages) -> Result<Corpora> {
    let s = cfg.data.seed;
    let d = &cfg.data;
    let (ma, mb) = generate_training_sets(
        &langs.a,
        &langs.b,
        &cfg.grammar,
        d.train_sentences,
        stream(s, "mono-a"),
        stream(s, "mono-b"),
    )?;
    let par = |n, name| generate_parallel(&langs.a, &langs.b, &langs.dict, &cfg.grammar, n, stream(s, name));
    Ok(Corpora {
        mono: [ma, mb],
        valid: par(d.valid_pairs, "valid")?,
        test: par(d.test_pairs, "test")?,
        aligned: par(d.aligned_sentences, "aligned")?,
    })
}

fn tokens(sentences: &[Sentence]) -> Vec<Vec<String>> {
    sentences.iter().map(|s| s.tokens.clone()).collect()
}

/// Subword vocabulary learned on the two monolingual training corpora.
pub fn build_tokenizer(cfg: &RunConfig, corpora: &Corpora) -> Result<BpeModel> {
    let a = tokens(&corpora.mono[0]);
    let b = tokens(&corpora.mono[1]);
    Ok(train_bpe(&[&a, &b], &LANGUAGES, cfg.tokenizer.vocab_size)?)
}

/// Aligned sentence pairs followed by every dictionary surface pair as a
/// one-word sentence without a period.
pub fn supervised_pairs(cfg: &RunConfig, langs: &Languages, corpora: &Corpora, bpe: &BpeModel) -> Result<Vec<Pair>> {
    let mut out = Vec::new();
    for (a, b) in &corpora.aligned.pairs {
        out.push((bpe.encode(&a.tokens)?, bpe.encode(&b.tokens)?));
    }
    if cfg.data.dictionary_supervision {
        for (la, lb) in langs.dict.pairs() {
            let fa = &langs.a.lexicon.lemma(la).forms;
            let fb = &langs.b.lexicon.lemma(lb).forms;
            for (x, y) in fa.iter().zip(fb) {
                out.push((bpe.encode(&[x])?, bpe.encode(&[y])?));
            }
        }
    }
    Ok(out)
}

/// Test outputs in both directions.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub ab: Vec<Vec<String>>,
    pub ba: Vec<Vec<String>>,
}

fn encode_all(bpe: &BpeModel, sentences: &[Vec<String>]) -> Vec<Vec<u32>> {
    // Outputs are decoded from the same vocabulary, so encoding cannot fail;
    // fall back to an empty sentence rather than abort an evaluation.
    sentences.iter().map(|s| bpe.encode(s).unwrap_or_default()).collect()
}

pub fn evaluate(
    cfg: &RunConfig,
    model: &Model<f32>,
    bpe: &BpeModel,
    langs: &Languages,
    test: &ParallelCorpus,
) -> Result<(EvalReport, Outputs)> {
    let batch = cfg.train.eval_batch;
    let src_a = test.sources();
    let src_b = test.targets();
    let ab = translate(model, bpe, &encode_all(bpe, &src_a), 0, 1, batch);
    let ba = translate(model, bpe, &encode_all(bpe, &src_b), 1, 0, batch);
    let bleu_ab = bleu(&ab, &src_b)?;
    let bleu_ba = bleu(&ba, &src_a)?;
    let pos_bleu_ab = pos_bleu(&ab, &src_b, |w| langs.b.pos_tag(w))?;
    let pos_bleu_ba = pos_bleu(&ba, &src_a, |w| langs.a.pos_tag(w))?;
    let roundtrip_bleu = if cfg.eval.roundtrip {
        let aba = translate(model, bpe, &encode_all(bpe, &ab), 1, 0, batch);
        let bab = translate(model, bpe, &encode_all(bpe, &ba), 0, 1, batch);
        Some((bleu(&aba, &src_a)? + bleu(&bab, &src_b)?) / 2.0)
    } else {
        None
    };
    let copy = (copy_baseline(test) + copy_baseline(&test.reversed())) / 2.0;
    let mean = (bleu_ab + bleu_ba) / 2.0;
    let report = EvalReport {
        bleu_ab,
        bleu_ba,
        bleu: mean,
        pos_bleu_ab,
        pos_bleu_ba,
        pos_bleu: (pos_bleu_ab + pos_bleu_ba) / 2.0,
        roundtrip_bleu,
        copy_baseline: copy,
        relative_distance: relative_distance(mean, copy),
        syntax: Some(syntax_summary(&ab, test, &langs.b)),
        context: cfg.eval.context.then(|| context_metrics(&ab, test, &langs.b)),
        words: if cfg.eval.word_stats {
            word_translation_stats(test, &ab, &langs.a, &langs.b)
        } else {
            None
        },
    };
    Ok((report, Outputs { ab, ba }))
}

/// Everything a run produced, as far as it got.
pub struct RunOutput {
    pub manifest: RunManifest,
    pub languages: Option<Languages>,
    pub corpora: Option<Corpora>,
    pub tokenizer: Option<BpeModel>,
    pub model: Option<Model<f32>>,
    pub log: Option<TrainLog>,
    pub report: Option<EvalReport>,
    pub outputs: Option<Outputs>,
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    out: Option<PathBuf>,
    manifest: RunManifest,
    started: Instant,
}

impl Runner<'_> {
    fn path(&self, rel: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|d| d.join(rel))
    }

    fn write(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        match self.path(rel) {
            Some(p) => write_file(&p, contents),
            None => Ok(()),
        }
    }

    fn save_manifest(&mut self) -> Result<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&self.manifest)?;
        self.write("manifest.json", json + "\n")
    }

    fn stage<T>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        log::info!("{}: {}", self.cfg.name, stage.name());
        let result = f(self);
        let status = match &result {
            Ok(_) => StageStatus::Done,
            Err(e) => {
                self.manifest.failed_stage = Some(stage.name().to_string());
                StageStatus::Failed { error: e.to_string() }
            }
        };
        self.manifest.stages.push(StageRecord {
            stage: stage.name().to_string(),
            status,
            seconds: t.elapsed().as_secs_f64(),
        });
        self.save_manifest()?;
        result
    }

    fn hash_corpus(&mut self, name: &str, sentences: &[Sentence]) {
        let text: String = sentences.iter().map(|s| s.text() + "\n").collect();
        self.manifest
            .corpus_sha256
            .insert(name.to_string(), checkpoint::sha256_hex(text.as_bytes()));
    }
}

fn write_parallel_opt(dir: Option<PathBuf>, stem: &str, pc: &ParallelCorpus) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_parallel(&dir, stem, pc)?;
    }
    Ok(())
}

/// Runs the pipeline up to and including `until`.
pub fn execute(cfg: &RunConfig, out: Option<&Path>, until: Stage) -> Result<RunOutput> {
    cfg.validate()?;
    let mut r = Runner {
        cfg,
        out: out.map(Path::to_path_buf),
        manifest: RunManifest::new(cfg),
        started: Instant::now(),
    };
    r.write("config.toml", cfg.to_toml()?)?;
    let mut result = RunOutput {
        manifest: r.manifest.clone(),
        languages: None,
        corpora: None,
        tokenizer: None,
        model: None,
        log: None,
        report: None,
        outputs: None,
    };

    let langs = r.stage(Stage::Languages, |r| {
        let langs = build_languages(cfg)?;
        r.write("lexicon_a.tsv", lexicon_tsv(&langs.a.lexicon, &langs.a.fields))?;
        r.write("lexicon_b.tsv", lexicon_tsv(&langs.b.lexicon, &langs.b.fields))?;
        r.write("dictionary.tsv", langs.dict.to_tsv())?;
        Ok(langs)
    })?;
    if until == Stage::Languages {
        result.manifest = r.manifest;
        result.languages = Some(langs);
        return Ok(result);
    }

    let corpora = r.stage(Stage::Corpora, |r| {
        let c = build_corpora(cfg, &langs)?;
        for (i, l) in LANGUAGES.iter().enumerate() {
            r.hash_corpus(&format!("train.{l}"), &c.mono[i]);
        }
        for (name, pc) in [("valid", &c.valid), ("test", &c.test), ("aligned", &c.aligned)] {
            let (src, tgt): (Vec<Sentence>, Vec<Sentence>) = pc.pairs.iter().cloned().unzip();
            r.hash_corpus(&format!("{name}.src"), &src);
            r.hash_corpus(&format!("{name}.tgt"), &tgt);
        }
        if let Some(dir) = r.path("corpus") {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (i, l) in LANGUAGES.iter().enumerate() {
                write_corpus(&dir.join(format!("train.{l}")), &c.mono[i])?;
                write_sidecar(&dir.join(format!("train.{l}.jsonl")), &c.mono[i])?;
            }
        }
        write_parallel_opt(r.path("corpus"), "valid", &c.valid)?;
        write_parallel_opt(r.path("corpus"), "test", &c.test)?;
        if !c.aligned.is_empty() {
            write_parallel_opt(r.path("corpus"), "aligned", &c.aligned)?;
        }
        Ok(c)
    })?;

    let bpe = r.stage(Stage::Tokenizer, |r| {
        let bpe = build_tokenizer(cfg, &corpora)?;
        let text = bpe.to_text();
        r.manifest.tokenizer_sha256 = Some(checkpoint::sha256_hex(text.as_bytes()));
        r.write("tokenizer.merges", text)?;
        Ok(bpe)
    })?;
    if until <= Stage::Tokenizer {
        result.manifest = r.manifest;
        result.languages = Some(langs);
        result.corpora = Some(corpora);
        result.tokenizer = Some(bpe);
        return Ok(result);
    }

    let (model, log) = r.stage(Stage::Train, |r| {
        let enc = |s: &[Sentence]| s.iter().map(|x| bpe.encode(&x.tokens)).collect::<btlab_core::Result<Vec<_>>>();
        let data = TrainData {
            bpe: &bpe,
            mono: [enc(&corpora.mono[0])?, enc(&corpora.mono[1])?],
            supervised: supervised_pairs(cfg, &langs, &corpora, &bpe)?,
            valid: ParallelIds::new(&bpe, &corpora.valid.sources(), &corpora.valid.targets())?,
        };
        let lang_tokens = LANGUAGES
            .iter()
            .map(|l| bpe.lang_id(l).expect("tokenizer has both language tokens"))
            .collect();
        let model_cfg = cfg.model.resolve(bpe.vocab_size(), lang_tokens);
        if let Some(dir) = &r.out {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let outcome = train(model_cfg, &cfg.train, &data, r.out.as_deref())?;
        r.write("trainlog.tsv", outcome.log.to_tsv())?;
        if let Some(p) = r.path("model.ckpt") {
            let hash = r.manifest.tokenizer_sha256.clone().unwrap_or_default();
            checkpoint::save(&p, &outcome.model, &hash)?;
        }
        Ok((outcome.model, outcome.log))
    })?;
    if until == Stage::Train {
        write_summary(&r, &log, None)?;
        result.manifest = r.manifest;
        result.languages = Some(langs);
        result.corpora = Some(corpora);
        result.tokenizer = Some(bpe);
        result.model = Some(model);
        result.log = Some(log);
        return Ok(result);
    }

    let (report, outputs) = r.stage(Stage::Eval, |r| {
        let (report, outputs) = evaluate(cfg, &model, &bpe, &langs, &corpora.test)?;
        write_eval(r.out.as_deref(), &report, &outputs)?;
        Ok((report, outputs))
    })?;
    write_summary(&r, &log, Some(&report))?;
    result.manifest = r.manifest;
    result.languages = Some(langs);
    result.corpora = Some(corpora);
    result.tokenizer = Some(bpe);
    result.model = Some(model);
    result.log = Some(log);
    result.report = Some(report);
    result.outputs = Some(outputs);
    Ok(result)
}

fn write_summary(r: &Runner<'_>, log: &TrainLog, report: Option<&EvalReport>) -> Result<()> {
    let summary = serde_json::json!({
        "config": r.cfg.train,
        "best_epoch": log.best_epoch,
        "epochs": log.epochs,
        "updates": log.counts(),
        "skipped_bt_pairs": log.skipped_bt_pairs,
        "final": report.map(|e| serde_json::json!({
            "bleu": e.bleu,
            "bleu_ab": e.bleu_ab,
            "bleu_ba": e.bleu_ba,
            "pos_bleu": e.pos_bleu,
            "roundtrip_bleu": e.roundtrip_bleu,
        })),
    });
    r.write("train_summary.json", serde_json::to_string_pretty(&summary)? + "\n")
}

fn lines(sentences: &[Vec<String>]) -> String {
    sentences.iter().map(|s| s.join(" ") + "\n").collect()
}

pub fn write_eval(dir: Option<&Path>, report: &EvalReport, outputs: &Outputs) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    write_file(&dir.join("eval.json"), serde_json::to_string_pretty(report)? + "\n")?;
    write_file(&dir.join("eval.tsv"), report.to_tsv())?;
    write_file(&dir.join("outputs/test.ab.hyp"), lines(&outputs.ab))?;
    write_file(&dir.join("outputs/test.ba.hyp"), lines(&outputs.ba))?;
    if let Some(w) = &report.words {
        write_file(&dir.join("words.tsv"), w.to_tsv())?;
        for series in frequency_rank_report(w) {
            write_file(&dir.join(format!("ranks/{}.csv", series.tag)), series.to_csv())?;
        }
    }
    Ok(())
}

/// Re-evaluates a finished run directory from its config and checkpoint.
/// Corpora are regenerated and must hash to the values in the manifest.
pub fn evaluate_run_dir(dir: &Path) -> Result<EvalReport> {
    let read = |name: &str| {
        let p = dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let cfg: RunConfig = toml::from_str(&read("config.toml")?)?;
    let manifest: RunManifest = serde_json::from_str(&read("manifest.json")?)?;
    let prepared = execute(&cfg, None, Stage::Tokenizer)?;
    if prepared.manifest.corpus_sha256 != manifest.corpus_sha256 {
        return Err(Error::Config(format!(
            "{}: regenerated corpora differ from the manifest",
            dir.display()
        )));
    }
    let bpe = prepared.tokenizer.expect("tokenizer stage ran");
    let hash = checkpoint::sha256_hex(bpe.to_text().as_bytes());
    let model = checkpoint::load(&dir.join("model.ckpt"), &hash)?;
    let langs = prepared.languages.expect("languages stage ran");
    let corpora = prepared.corpora.expect("corpora stage ran");
    let (report, outputs) = evaluate(&cfg, &model, &bpe, &langs, &corpora.test)?;
    write_eval(Some(dir), &report, &outputs)?;
    Ok(report)
}

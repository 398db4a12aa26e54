//! The training schedule: per iteration a denoising step per language, an
//! optional supervised step per direction, then a back-translation step per
//! direction. Validation BLEU after every epoch selects the returned
//! parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use btlab_core::evaluation::bleu;
use btlab_core::tokenizer::{BpeModel, MASK};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed_init::{init_embeddings, SkipGramConfig};
use crate::model::{DecodeMode, Model, ModelConfig, Pair};
use crate::noise::{noise, NoiseConfig};
use crate::params::{Adam, AdamConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub dae: bool,
    pub supervised: bool,
    pub bt: bool,
    pub noise: NoiseConfig,
    pub bt_mode: DecodeMode,
    /// Skip-gram pretraining of the embeddings; `None` keeps random init.
    pub embed_init: Option<SkipGramConfig>,
    /// Overrides the default of one pass over the larger monolingual corpus.
    pub iterations_per_epoch: Option<usize>,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 16,
            adam: AdamConfig::default(),
            seed: 0,
            dae: true,
            supervised: false,
            bt: true,
            noise: NoiseConfig::default(),
            bt_mode: DecodeMode::Greedy,
            embed_init: Some(SkipGramConfig::default()),
            iterations_per_epoch: None,
            eval_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dae || self.supervised || self.bt) {
            return Err(Error::Config("at least one objective must be enabled".into()));
        }
        if !(self.adam.lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {} must be non-negative", self.adam.lr)));
        }
        if self.batch_size == 0 || self.eval_batch == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Objective {
    Dae(usize),
    Supervised(usize, usize),
    BackTranslation(usize, usize),
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Dae(l) => write!(f, "dae{l}"),
            Objective::Supervised(a, b) => write!(f, "sup{a}{b}"),
            Objective::BackTranslation(a, b) => write!(f, "bt{a}{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub objective: Objective,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub bleu_01: f64,
    pub bleu_10: f64,
    pub bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (maximum validation BLEU).
    pub best_epoch: Option<usize>,
    pub skipped_bt_pairs: u64,
}

impl TrainLog {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("step\tepoch\tobjective\tloss\n");
        for r in &self.steps {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.step, r.epoch, r.objective, r.loss));
        }
        s
    }

    pub fn counts(&self) -> BTreeMap<String, u64> {
        let mut c = BTreeMap::new();
        for r in &self.steps {
            *c.entry(r.objective.to_string()).or_insert(0) += 1;
        }
        c
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.best_epoch.and_then(|e| self.epochs.iter().find(|r| r.epoch == e))
    }
}

/// Encoded parallel sentences with their word-level forms for BLEU.
#[derive(Debug, Clone, Default)]
pub struct ParallelIds {
    pub ids: [Vec<Vec<u32>>; 2],
    pub words: [Vec<Vec<String>>; 2],
}

impl ParallelIds {
    pub fn new(bpe: &BpeModel, lang0: &[Vec<String>], lang1: &[Vec<String>]) -> Result<ParallelIds> {
        let enc = |c: &[Vec<String>]| c.iter().map(|s| bpe.encode(s)).collect::<btlab_core::Result<Vec<_>>>();
        Ok(ParallelIds {
            ids: [enc(lang0)?, enc(lang1)?],
            words: [lang0.to_vec(), lang1.to_vec()],
        })
    }

    pub fn len(&self) -> usize {
        self.ids[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct TrainData<'a> {
    pub bpe: &'a BpeModel,
    pub mono: [Vec<Vec<u32>>; 2],
    /// Gold pairs, language 0 source and language 1 target.
    pub supervised: Vec<Pair>,
    pub valid: ParallelIds,
}

pub struct TrainOutcome {
    pub model: Model<f32>,
    pub log: TrainLog,
}

/// Translates id sequences and decodes them to words.
pub fn translate(
    model: &Model<f32>,
    bpe: &BpeModel,
    src: &[Vec<u32>],
    src_lang: usize,
    tgt_lang: usize,
    batch: usize,
) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(src.len());
    for chunk in src.chunks(batch.max(1)) {
        let max = chunk.iter().map(Vec::len).max().unwrap_or(0) * 2 + 5;
        for ids in model.generate(chunk, src_lang, tgt_lang, DecodeMode::Greedy, max, &mut rng) {
            out.push(bpe.decode(&ids));
        }
    }
    out
}

/// Direction-wise validation BLEU (0→1, 1→0).
pub fn validation_bleu(model: &Model<f32>, bpe: &BpeModel, valid: &ParallelIds, batch: usize) -> (f64, f64) {
    if valid.is_empty() {
        return (0.0, 0.0);
    }
    let h01 = translate(model, bpe, &valid.ids[0], 0, 1, batch);
    let h10 = translate(model, bpe, &valid.ids[1], 1, 0, batch);
    (
        bleu(&h01, &valid.words[1]).unwrap_or(0.0),
        bleu(&h10, &valid.words[0]).unwrap_or(0.0),
    )
}

struct Cursor {
    order: Vec<usize>,
    pos: usize,
}

impl Cursor {
    fn new(n: usize) -> Cursor {
        Cursor {
            order: (0..n).collect(),
            pos: n,
        }
    }

    fn next_batch<R: Rng + ?Sized>(&mut self, size: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        if self.order.is_empty() {
            return out;
        }
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

struct Trainer<'a> {
    cfg: &'a TrainConfig,
    model: Model<f32>,
    adam: Adam,
    grads: Vec<f32>,
    log: TrainLog,
    step: u64,
    epoch: usize,
    dropout_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    gen_rng: ChaCha8Rng,
    dump_dir: Option<&'a Path>,
}

impl Trainer<'_> {
    fn update(&mut self, batch: &[Pair], src: usize, tgt: usize, objective: Objective) -> Result<f64> {
        self.grads.fill(0.0);
        let loss = self
            .model
            .loss_and_grad(batch, src, tgt, Some(&mut self.dropout_rng), &mut self.grads);
        self.step += 1;
        self.log.steps.push(StepRecord {
            step: self.step,
            epoch: self.epoch,
            objective,
            loss,
        });
        if !loss.is_finite() || self.grads.iter().any(|g| !g.is_finite()) {
            if let Some(dir) = self.dump_dir {
                let _ = std::fs::write(dir.join("diverged_trainlog.tsv"), self.log.to_tsv());
                let dump = serde_json::json!({
                    "step": self.step,
                    "objective": objective.to_string(),
                    "loss": loss,
                    "batch": batch,
                    "param_abs_max": self.model.params.data.iter().fold(0f32, |m, x| m.max(x.abs())),
                });
                let _ = std::fs::write(dir.join("diverged_state.json"), dump.to_string());
            }
            return Err(Error::Diverged {
                step: self.step,
                objective: objective.to_string(),
                loss,
            });
        }
        self.adam.step(&mut self.model.params.data, &self.grads);
        Ok(loss)
    }

    fn dae_step(&mut self, sentences: &[Vec<u32>], lang: usize) -> Result<f64> {
        let vocab = self.model.cfg.vocab_size as u32;
        let first_word = self.model.cfg.lang_tokens.iter().max().map_or(4, |&t| t + 1);
        let batch: Vec<Pair> = sentences
            .iter()
            .map(|s| {
                let noisy = noise(s, &self.cfg.noise, MASK, first_word, vocab, &mut self.noise_rng);
                (noisy, s.clone())
            })
            .collect();
        self.update(&batch, lang, lang, Objective::Dae(lang))
    }

    /// Generates synthetic sources for `sentences` (language `lang`) with the
    /// current model, then trains the reverse direction on them. Generation
    /// is outside the tape, so no gradient reaches it.
    fn bt_step(&mut self, sentences: &[Vec<u32>], lang: usize) -> Result<Option<f64>> {
        let other = 1 - lang;
        let max = sentences.iter().map(Vec::len).max().unwrap_or(0) * 2 + 5;
        let synthetic = self
            .model
            .generate(sentences, lang, other, self.cfg.bt_mode, max, &mut self.gen_rng);
        let batch: Vec<Pair> = synthetic
            .into_iter()
            .zip(sentences)
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, t)| (s, t.clone()))
            .collect();
        self.log.skipped_bt_pairs += (sentences.len() - batch.len()) as u64;
        if batch.is_empty() {
            return Ok(None);
        }
        self.update(&batch, other, lang, Objective::BackTranslation(other, lang))
            .map(Some)
    }
}

/// Initializes a model from `seed`, optionally pretrains its embeddings,
/// and runs the schedule. The returned model holds the parameters of the
/// best validation epoch.
pub fn train(
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    data: &TrainData<'_>,
    dump_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.supervised && data.supervised.is_empty() {
        return Err(Error::Config("supervised step enabled without aligned data".into()));
    }
    if (cfg.dae || cfg.bt) && (data.mono[0].is_empty() || data.mono[1].is_empty()) {
        return Err(Error::Config("monolingual corpora are empty".into()));
    }
    let base = btlab_core::seed::derive(&[cfg.seed]);
    let stream = |label: &str| btlab_core::seed::rng(&[base, btlab_core::seed::label(label)]);
    let mut model = Model::<f32>::new(model_cfg)?;
    model.params.initialize(&mut stream("init"));
    if let Some(sg) = &cfg.embed_init {
        let corpus: Vec<Vec<u32>> = data.mono[0].iter().chain(&data.mono[1]).cloned().collect();
        let id = model.embedding_id();
        let (v, d) = (model.cfg.vocab_size, model.cfg.d_model);
        let table = init_embeddings(&corpus, v, d, model.params.get(id), sg, &mut stream("skipgram"));
        model.params.get_mut(id).copy_from_slice(&table);
    }
    let n = model.params.len();
    let mut t = Trainer {
        cfg,
        adam: Adam::new(cfg.adam, n),
        grads: vec![0.0; n],
        model,
        log: TrainLog::default(),
        step: 0,
        epoch: 0,
        dropout_rng: stream("dropout"),
        noise_rng: stream("noise"),
        gen_rng: stream("generate"),
        dump_dir,
    };
    let mut data_rng = stream("data");
    let mut cursors = [Cursor::new(data.mono[0].len()), Cursor::new(data.mono[1].len())];
    let mut sup_cursor = Cursor::new(data.supervised.len());
    let larger = data.mono[0].len().max(data.mono[1].len());
    let iterations = cfg.iterations_per_epoch.unwrap_or_else(|| {
        let n = if larger > 0 { larger } else { data.supervised.len() };
        n.div_ceil(cfg.batch_size)
    });

    let mut best: Option<(f64, Vec<f32>)> = None;
    for epoch in 1..=cfg.epochs {
        t.epoch = epoch;
        for _ in 0..iterations {
            let picks = [
                cursors[0].next_batch(cfg.batch_size, &mut data_rng),
                cursors[1].next_batch(cfg.batch_size, &mut data_rng),
            ];
            let mono: [Vec<Vec<u32>>; 2] = [0, 1].map(|l| picks[l].iter().map(|&i| data.mono[l][i].clone()).collect());
            if cfg.dae {
                t.dae_step(&mono[0], 0)?;
                t.dae_step(&mono[1], 1)?;
            }
            if cfg.supervised {
                let idx = sup_cursor.next_batch(cfg.batch_size, &mut data_rng);
                let fwd: Vec<Pair> = idx.iter().map(|&i| data.supervised[i].clone()).collect();
                let back: Vec<Pair> = fwd.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
                t.update(&fwd, 0, 1, Objective::Supervised(0, 1))?;
                t.update(&back, 1, 0, Objective::Supervised(1, 0))?;
            }
            if cfg.bt {
                t.bt_step(&mono[0], 0)?;
                t.bt_step(&mono[1], 1)?;
            }
        }
        let (b01, b10) = validation_bleu(&t.model, data.bpe, &data.valid, cfg.eval_batch);
        let avg = (b01 + b10) / 2.0;
        log::info!("epoch {epoch}: validation BLEU {b01:.2} / {b10:.2} (mean {avg:.2})");
        t.log.epochs.push(EpochRecord {
            epoch,
            bleu_01: b01,
            bleu_10: b10,
            bleu: avg,
        });
        if best.as_ref().is_none_or(|(b, _)| avg > *b) {
            best = Some((avg, t.model.params.data.clone()));
            t.log.best_epoch = Some(epoch);
        }
    }
    if let Some((_, params)) = best {
        t.model.params.data = params;
    }
    Ok(TrainOutcome {
        model: t.model,
        log: t.log,
    })
}

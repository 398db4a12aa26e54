//! The six experiments as run plans, and their analyses.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use btlab_core::evaluation::{ols_fit, relative_distance, EvalReport, RegressionFit};
use btlab_core::grammar::{hamming, parse_switches, Switch, SwitchVector};
use btlab_core::lexicon::{FieldDistribution, FrequencyModel};
use btlab_nmt::train::TrainLog;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::{execute, Stage};
use crate::plot::{self, Series, Style};
use crate::report::{self, RunSummary};
use crate::{write_file, Error, Result};

pub const EXP1_GRAMMARS: [&str; 8] = [
    "000000", "011101", "011111", "000001", "100000", "000101", "111111", "111110",
];
pub const EXP3_GRAMMARS: [&str; 5] = ["000000", "011101", "000001", "100000", "111111"];
pub const EXP5_TARGETS: [&str; 4] = ["000000", "011101", "100000", "111111"];
pub const DEFAULT_SEEDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Preset {
    Exp1,
    Exp2Grid,
    Exp2Switch,
    Exp3,
    Exp4a,
    Exp4b,
    Exp5a,
    Exp5b,
    Exp6a,
    Exp6b,
    Exp6c,
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Exp1,
        Preset::Exp2Grid,
        Preset::Exp2Switch,
        Preset::Exp3,
        Preset::Exp4a,
        Preset::Exp4b,
        Preset::Exp5a,
        Preset::Exp5b,
        Preset::Exp6a,
        Preset::Exp6b,
        Preset::Exp6c,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Exp1 => "exp1",
            Preset::Exp2Grid => "exp2-grid",
            Preset::Exp2Switch => "exp2-switch",
            Preset::Exp3 => "exp3",
            Preset::Exp4a => "exp4a",
            Preset::Exp4b => "exp4b",
            Preset::Exp5a => "exp5a",
            Preset::Exp5b => "exp5b",
            Preset::Exp6a => "exp6a",
            Preset::Exp6b => "exp6b",
            Preset::Exp6c => "exp6c",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub preset: Preset,
    /// Profile defaults with any file and CLI overrides already applied.
    pub base: RunConfig,
    /// Training seeds; corpora stay fixed across seeds.
    pub seeds: Vec<u64>,
    /// Replaces the preset's grammar list (exp1, exp2-grid, exp3, exp4, exp6).
    pub grammars: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

fn lexical_change(c: &mut RunConfig) {
    c.languages.shared_lexicon = false;
    c.languages.anchor_fraction = 0.0;
}

fn zipf(c: &mut RunConfig) {
    c.languages.frequency = FrequencyModel::PowerLaw { exponent: 1.1 };
}

/// All runs of an experiment, seeds innermost.
pub fn plan(spec: &ExperimentSpec) -> Result<Vec<RunConfig>> {
    let grammars = |default: &[&str]| -> Vec<String> {
        spec.grammars
            .clone()
            .unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect())
    };
    let mut variants: Vec<(String, String, String, RunConfig)> = Vec::new();
    let mut push = |a: &str, b: &str, suffix: &str, f: &dyn Fn(&mut RunConfig)| {
        let mut c = spec.base.clone();
        c.languages.a = a.to_string();
        c.languages.b = b.to_string();
        f(&mut c);
        variants.push((a.to_string(), b.to_string(), suffix.to_string(), c));
    };
    let same_lexicon = |c: &mut RunConfig| {
        c.languages.shared_lexicon = true;
        c.languages.anchor_fraction = 0.0;
    };
    match spec.preset {
        Preset::Exp1 => {
            for g in grammars(&EXP1_GRAMMARS) {
                push(&g, &g, "", &same_lexicon);
            }
        }
        Preset::Exp2Grid => {
            let gs = grammars(&EXP1_GRAMMARS);
            for a in &gs {
                for b in &gs {
                    push(a, b, "", &same_lexicon);
                }
            }
        }
        Preset::Exp2Switch => {
            for src in ["000000", "111111"] {
                let sv = parse_switches(src)?;
                for s in Switch::ALL {
                    push(src, &sv.flipped(s).to_string(), "", &same_lexicon);
                }
            }
        }
        Preset::Exp3 => {
            for g in grammars(&EXP3_GRAMMARS) {
                push(&g, &g, "", &lexical_change);
            }
        }
        Preset::Exp4a => {
            for g in grammars(&["000000"]) {
                push(&g, &g, "", &|c| {
                    lexical_change(c);
                    c.languages.anchor_fraction = 0.3;
                });
            }
        }
        Preset::Exp4b => {
            for g in grammars(&["000000"]) {
                push(&g, &g, "", &|c| {
                    lexical_change(c);
                    zipf(c);
                });
            }
        }
        Preset::Exp5a => {
            for t in EXP5_TARGETS {
                let aligned = |c: &mut RunConfig| {
                    lexical_change(c);
                    c.data.aligned_sentences = (c.data.train_sentences / 100).max(1);
                    c.train.supervised = true;
                };
                push("000000", t, "", &aligned);
                push("000000", t, "-aligned-only", &|c| {
                    aligned(c);
                    c.train.dae = false;
                    c.train.bt = false;
                });
            }
        }
        Preset::Exp5b => {
            for t in EXP5_TARGETS {
                push("000000", t, "", &|c| {
                    lexical_change(c);
                    c.data.dictionary_supervision = true;
                    c.train.supervised = true;
                });
            }
        }
        Preset::Exp6a | Preset::Exp6b | Preset::Exp6c => {
            let (n, dist) = match spec.preset {
                Preset::Exp6a => (2, FieldDistribution::Balanced),
                Preset::Exp6b => (2, FieldDistribution::Proportions { weights: vec![0.3, 0.7] }),
                _ => (10, FieldDistribution::PowerLaw { exponent: 1.1 }),
            };
            for g in grammars(&["000000"]) {
                push(&g, &g, "", &|c| {
                    lexical_change(c);
                    zipf(c);
                    c.languages.fields = n;
                    c.languages.field_distribution = dist.clone();
                    c.eval.context = true;
                });
            }
        }
    }
    let mut runs = Vec::new();
    for (a, b, suffix, c) in variants {
        for &seed in &spec.seeds {
            let mut c = c.clone();
            c.train.seed = seed;
            c.name = format!("{}-{a}-{b}{suffix}-s{seed}", spec.preset);
            c.validate()?;
            runs.push(c);
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: RunConfig,
    pub report: Option<EvalReport>,
    pub log: Option<TrainLog>,
    pub error: Option<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridAnalysis {
    pub hamming: RegressionFit,
    /// BLEU on one indicator per switch that varies in the grid.
    pub switches: Option<RegressionFit>,
}

/// OLS of BLEU on Hamming distance and on per-switch difference indicators.
pub fn grid_regression(points: &[(SwitchVector, SwitchVector, f64)]) -> Result<GridAnalysis> {
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let xh: Vec<Vec<f64>> = points.iter().map(|(a, b, _)| vec![hamming(a, b) as f64]).collect();
    let fit = ols_fit(&xh, &y, &["hamming"], true)?;
    let diff = |a: &SwitchVector, b: &SwitchVector, s: Switch| f64::from(u8::from(a.get(s) != b.get(s)));
    let varying: Vec<Switch> = Switch::ALL
        .into_iter()
        .filter(|&s| points.iter().any(|(a, b, _)| a.get(s) != b.get(s)))
        .collect();
    let names: Vec<String> = varying.iter().map(|s| format!("S{}", *s as usize + 1)).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let xs: Vec<Vec<f64>> = points
        .iter()
        .map(|(a, b, _)| varying.iter().map(|&s| diff(a, b, s)).collect())
        .collect();
    let switches = if varying.is_empty() {
        None
    } else {
        ols_fit(&xs, &y, &name_refs, true).ok()
    };
    Ok(GridAnalysis { hamming: fit, switches })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Mean BLEU per (A, B) grammar pair over seeds, in first-seen order.
fn by_pair(records: &[RunRecord]) -> Vec<((String, String), Vec<&EvalReport>)> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut map: BTreeMap<(String, String), Vec<&EvalReport>> = BTreeMap::new();
    for r in records {
        let Some(rep) = &r.report else { continue };
        if r.config.name.contains("-aligned-only") {
            continue;
        }
        let key = (r.config.languages.a.clone(), r.config.languages.b.clone());
        if !map.contains_key(&key) {
            order.push(key.clone());
        }
        map.entry(key).or_default().push(rep);
    }
    order
        .into_iter()
        .map(|k| {
            let v = map.remove(&k).unwrap_or_default();
            (k, v)
        })
        .collect()
}

/// Preset-specific tables, as `(file name, contents)`, plus a JSON summary.
pub fn analyze(preset: Preset, records: &[RunRecord]) -> Result<(Vec<(String, String)>, serde_json::Value)> {
    let mut files = Vec::new();
    let mut json = serde_json::Map::new();
    let done: Vec<RunSummary> = records
        .iter()
        .filter_map(|r| {
            r.report.clone().map(|report| RunSummary {
                name: r.config.name.clone(),
                config: r.config.clone(),
                report,
            })
        })
        .collect();
    if !done.is_empty() {
        files.push(("summary.tsv".to_string(), report::table(&done, None)?));
    }
    match preset {
        Preset::Exp2Grid => {
            let points: Vec<(SwitchVector, SwitchVector, f64)> = done
                .iter()
                .map(|r| {
                    Ok((
                        parse_switches(&r.config.languages.a)?,
                        parse_switches(&r.config.languages.b)?,
                        r.report.bleu,
                    ))
                })
                .collect::<Result<_>>()?;
            if points.len() >= 3 {
                let g = grid_regression(&points)?;
                json.insert("regression".into(), serde_json::to_value(&g)?);
            }
            let pairs = by_pair(records);
            let mut rows: Vec<String> = pairs.iter().map(|((a, _), _)| a.clone()).collect();
            rows.dedup();
            let mut cols: Vec<String> = pairs.iter().map(|((_, b), _)| b.clone()).collect();
            cols.sort();
            cols.dedup();
            let cell: BTreeMap<(&str, &str), f64> = pairs
                .iter()
                .map(|((a, b), v)| ((a.as_str(), b.as_str()), mean(&v.iter().map(|r| r.bleu).collect::<Vec<_>>())))
                .collect();
            let mut t = format!("source\\target\t{}\n", cols.join("\t"));
            for a in &rows {
                let vals: Vec<String> = cols
                    .iter()
                    .map(|b| cell.get(&(a.as_str(), b.as_str())).map(|v| format!("{v:.2}")).unwrap_or_default())
                    .collect();
                t.push_str(&format!("{a}\t{}\n", vals.join("\t")));
            }
            files.push(("grid.tsv".into(), t));
        }
        Preset::Exp2Switch => {
            let mut t = String::from("grammars\tbleu\tcopy_baseline\trelative_distance\n");
            for ((a, b), reps) in by_pair(records) {
                let bleu = mean(&reps.iter().map(|r| r.bleu).collect::<Vec<_>>());
                let copy = mean(&reps.iter().map(|r| r.copy_baseline).collect::<Vec<_>>());
                let rd = relative_distance(bleu, copy).map(|x| format!("{x:.2}")).unwrap_or_default();
                t.push_str(&format!("{a}-{b}\t{bleu:.2}\t{copy:.2}\t{rd}\n"));
            }
            files.push(("switch_table.tsv".into(), t));
        }
        Preset::Exp3 | Preset::Exp4a | Preset::Exp4b => {
            let mut acc: BTreeMap<String, (Vec<f64>, f64)> = BTreeMap::new();
            for r in &done {
                if let Some(w) = &r.report.words {
                    for p in &w.by_pos {
                        let e = acc.entry(p.pos.name().to_string()).or_insert((Vec::new(), p.random_entropy));
                        e.0.push(p.entropy_by_type);
                    }
                }
            }
            let mut t = String::from("pos\tentropy\trandom\n");
            for (pos, (v, random)) in &acc {
                t.push_str(&format!("{pos}\t{:.2}\t{random:.2}\n", mean(v)));
            }
            files.push(("entropy.tsv".into(), t));
            let anchors: Vec<Option<f64>> = done
                .iter()
                .map(|r| r.report.words.as_ref().and_then(|w| w.anchor_share_of_translated))
                .collect();
            json.insert("anchor_share_of_translated".into(), serde_json::to_value(anchors)?);
        }
        Preset::Exp6a | Preset::Exp6b | Preset::Exp6c => {
            let acc: Vec<Option<f64>> = done
                .iter()
                .map(|r| r.report.context.as_ref().and_then(|c| c.context_accuracy))
                .collect();
            let mono: Vec<f64> = done
                .iter()
                .filter_map(|r| r.report.context.as_ref().map(|c| c.mono_context))
                .collect();
            json.insert("context_accuracy".into(), serde_json::to_value(acc)?);
            json.insert("mono_context".into(), serde_json::to_value(mono)?);
        }
        Preset::Exp1 | Preset::Exp5a | Preset::Exp5b => {}
    }
    let bleus: Vec<(String, f64)> = done.iter().map(|r| (r.name.clone(), r.report.bleu)).collect();
    json.insert("bleu".into(), serde_json::to_value(bleus)?);
    let failed: Vec<(&str, &str)> = records
        .iter()
        .filter_map(|r| r.error.as_deref().map(|e| (r.config.name.as_str(), e)))
        .collect();
    json.insert("failed".into(), serde_json::to_value(failed)?);
    Ok((files, serde_json::Value::Object(json)))
}

fn plots(preset: Preset, records: &[RunRecord]) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let curves: Vec<Series> = records
        .iter()
        .filter_map(|r| {
            r.log.as_ref().map(|l| Series {
                name: r.config.name.clone(),
                points: l.epochs.iter().map(|e| (e.epoch as f64, e.bleu)).collect(),
                style: Style::Line,
            })
        })
        .collect();
    if !curves.is_empty() {
        files.push(("validation.svg".into(), plot::chart("Validation BLEU", "epoch", "BLEU", &curves)));
        files.push(("validation.csv".into(), plot::csv(&curves)));
    }
    if preset == Preset::Exp2Grid {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| {
                let a = parse_switches(&r.config.languages.a).ok()?;
                let b = parse_switches(&r.config.languages.b).ok()?;
                Some((hamming(&a, &b) as f64, r.report.as_ref()?.bleu))
            })
            .collect();
        let series = vec![Series {
            name: "runs".into(),
            points: pts,
            style: Style::Points,
        }];
        files.push(("hamming.svg".into(), plot::chart("BLEU by Hamming distance", "Hamming distance", "BLEU", &series)));
        files.push(("hamming.csv".into(), plot::csv(&series)));
    }
    if preset == Preset::Exp4b {
        if let Some(words) = records.iter().find_map(|r| r.report.as_ref()?.words.as_ref()) {
            for s in btlab_core::evaluation::frequency_rank_report(words) {
                let rank = |v: &[f64]| -> Vec<(f64, f64)> { s.ranks.iter().zip(v).map(|(&r, &y)| (r as f64, y)).collect() };
                let series = vec![
                    Series {
                        name: "accuracy".into(),
                        points: rank(&s.accuracy),
                        style: Style::Line,
                    },
                    Series {
                        name: "recall".into(),
                        points: rank(&s.recall),
                        style: Style::Line,
                    },
                ];
                files.push((
                    format!("rank_{}.svg", s.tag),
                    plot::chart(&format!("{} by frequency rank", s.tag), "rank", "score", &series),
                ));
            }
        }
    }
    files
}

pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub analysis: serde_json::Value,
}

impl ExperimentResult {
    /// Exit code of the first failed run, or 0.
    pub fn exit_code(&self) -> i32 {
        self.records.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0)
    }
}

/// Runs every planned configuration in turn. A failing run is recorded and
/// the rest continue.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let configs = plan(spec)?;
    let mut records = Vec::new();
    for cfg in configs {
        let dir = spec.out.as_ref().map(|d| d.join(&cfg.name));
        let rec = match execute(&cfg, dir.as_deref(), Stage::Eval) {
            Ok(out) => RunRecord {
                config: cfg,
                report: out.report,
                log: out.log,
                error: None,
                exit_code: 0,
            },
            Err(e) => {
                log::error!("{}: {e}", cfg.name);
                RunRecord {
                    config: cfg,
                    report: None,
                    log: None,
                    error: Some(e.to_string()),
                    exit_code: e.exit_code(),
                }
            }
        };
        records.push(rec);
    }
    let (files, analysis) = analyze(spec.preset, &records)?;
    if let Some(out) = &spec.out {
        for (name, contents) in &files {
            write_file(&out.join(name), contents)?;
        }
        write_file(&out.join("analysis.json"), serde_json::to_string_pretty(&analysis)? + "\n")?;
        if spec.plot {
            for (name, contents) in plots(spec.preset, &records) {
                write_file(&out.join("plots").join(name), contents)?;
            }
        }
    }
    Ok(ExperimentResult { records, analysis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Profile;

    fn spec(preset: Preset) -> ExperimentSpec {
        ExperimentSpec {
            preset,
            base: RunConfig::for_profile(Profile::Desk),
            seeds: vec![0, 1],
            grammars: None,
            out: None,
            plot: false,
        }
    }

    #[test]
    fn exp1_uses_the_eight_table_grammars() {
        let runs = plan(&spec(Preset::Exp1)).unwrap();
        assert_eq!(runs.len(), 16);
        let gs: Vec<&str> = runs.iter().step_by(2).map(|c| c.languages.a.as_str()).collect();
        assert_eq!(gs, EXP1_GRAMMARS);
        assert!(runs.iter().all(|c| c.languages.a == c.languages.b && c.languages.shared_lexicon));
    }

    #[test]
    fn switch_preset_flips_one_switch_of_each_source() {
        let runs = plan(&ExperimentSpec { seeds: vec![0], ..spec(Preset::Exp2Switch) }).unwrap();
        let targets: Vec<&str> = runs.iter().map(|c| c.languages.b.as_str()).collect();
        assert_eq!(
            targets,
            [
                "100000", "010000", "001000", "000100", "000010", "000001", "011111", "101111", "110111", "111011",
                "111101", "111110"
            ]
        );
    }

    #[test]
    fn presets_fix_their_manipulated_variable() {
        let one = |p| plan(&ExperimentSpec { seeds: vec![0], ..spec(p) }).unwrap();
        assert_eq!(one(Preset::Exp4a)[0].languages.anchor_fraction, 0.3);
        assert!(!one(Preset::Exp4a)[0].languages.shared_lexicon);
        assert_eq!(one(Preset::Exp4b)[0].languages.frequency, FrequencyModel::PowerLaw { exponent: 1.1 });
        let b = &one(Preset::Exp6b)[0];
        assert_eq!(b.languages.fields, 2);
        assert_eq!(b.languages.field_distribution, FieldDistribution::Proportions { weights: vec![0.3, 0.7] });
        assert_eq!(one(Preset::Exp6c)[0].languages.fields, 10);
        let a = one(Preset::Exp5a);
        assert_eq!(a.len(), 8);
        assert_eq!(a[0].data.aligned_sentences, 200);
        assert!(a[1].name.ends_with("-aligned-only-s0") && !a[1].train.bt && !a[1].train.dae);
        assert!(one(Preset::Exp5b).iter().all(|c| c.data.dictionary_supervision && c.train.supervised));
        assert_eq!(one(Preset::Exp3).len(), 5);
        assert_eq!(one(Preset::Exp2Grid).len(), 64);
    }

    #[test]
    fn seeds_only_change_training() {
        let runs = plan(&spec(Preset::Exp6b)).unwrap();
        assert_eq!(runs[0].data, runs[1].data);
        assert_ne!(runs[0].train.seed, runs[1].train.seed);
        assert_ne!(runs[0].name, runs[1].name);
    }

    #[test]
    fn grid_regression_recovers_planted_effects() {
        // BLEU = 90 - 40 * S1 - 5 * S5 exactly.
        let gs = ["000000", "100000", "000010", "100010"].map(|g| parse_switches(g).unwrap());
        let mut pts = Vec::new();
        for a in &gs {
            for b in &gs {
                let s1 = f64::from(u8::from(a.get(Switch::ALL[0]) != b.get(Switch::ALL[0])));
                let s5 = f64::from(u8::from(a.get(Switch::ALL[4]) != b.get(Switch::ALL[4])));
                pts.push((*a, *b, 90.0 - 40.0 * s1 - 5.0 * s5));
            }
        }
        let g = grid_regression(&pts).unwrap();
        assert!(g.hamming.coefficients[0] < 0.0);
        let s = g.switches.unwrap();
        assert_eq!(s.names, ["S1", "S5"]);
        assert!((s.coefficients[0] + 40.0).abs() < 1e-9 && (s.coefficients[1] + 5.0).abs() < 1e-9);
    }
}

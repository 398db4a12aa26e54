//! Comparative tables over finished runs.

use std::fmt::Write;
use std::path::Path;

use btlab_core::evaluation::EvalReport;
use btlab_core::grammar::{hamming, parse_switches};

use crate::config::RunConfig;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub name: String,
    pub config: RunConfig,
    pub report: EvalReport,
}

impl RunSummary {
    pub fn load(dir: &Path) -> Result<RunSummary> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        let config: RunConfig = toml::from_str(&read("config.toml")?)?;
        let report: EvalReport = serde_json::from_str(&read("eval.json")?)?;
        Ok(RunSummary {
            name: config.name.clone(),
            config,
            report,
        })
    }

    pub fn hamming(&self) -> Option<u32> {
        let a = parse_switches(&self.config.languages.a).ok()?;
        let b = parse_switches(&self.config.languages.b).ok()?;
        Some(hamming(&a, &b))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

/// One row per run; `delta` is BLEU minus the baseline run's BLEU. Mixed
/// scale profiles are flagged in a leading comment line.
pub fn table(runs: &[RunSummary], baseline: Option<&str>) -> Result<String> {
    if runs.is_empty() {
        return Err(Error::Config("report needs at least one run".into()));
    }
    let base = match baseline {
        Some(name) => Some(
            runs.iter()
                .find(|r| r.name == name)
                .ok_or_else(|| Error::Config(format!("baseline run {name:?} is not among the reported runs")))?
                .report
                .bleu,
        ),
        None => None,
    };
    let mut out = String::new();
    let mut profiles: Vec<&str> = runs.iter().map(|r| r.config.profile.name()).collect();
    profiles.sort_unstable();
    profiles.dedup();
    if profiles.len() > 1 {
        let _ = writeln!(out, "# warning: runs mix scale profiles ({})", profiles.join(", "));
    }
    out.push_str("run\tprofile\tgrammars\tbleu\tdelta\tpos_bleu\troundtrip_bleu\tcopy_baseline\trelative_distance\n");
    for r in runs {
        let l = &r.config.languages;
        let delta = base.map(|b| format!("{:+.2}", r.report.bleu - b)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{}\t{}\t{}-{}\t{:.2}\t{}\t{:.2}\t{}\t{:.2}\t{}",
            r.name,
            r.config.profile,
            l.a,
            l.b,
            r.report.bleu,
            delta,
            r.report.pos_bleu,
            fmt_opt(r.report.roundtrip_bleu),
            r.report.copy_baseline,
            r.report.relative_distance.map(|x| format!("{x:.2}")).unwrap_or_default(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Profile;

    fn run(name: &str, bleu: f64, profile: Profile) -> RunSummary {
        let mut config = RunConfig::for_profile(profile);
        config.name = name.into();
        RunSummary {
            name: name.into(),
            config,
            report: EvalReport {
                bleu,
                copy_baseline: 50.0,
                ..Default::default()
            },
        }
    }

    #[test]
    fn single_run_has_blank_delta() {
        let t = table(&[run("x", 10.0, Profile::Mini)], None).unwrap();
        let row = t.lines().nth(1).unwrap();
        assert_eq!(row.split('\t').nth(4), Some(""));
    }

    #[test]
    fn delta_is_difference_to_the_named_baseline() {
        let runs = [run("exp3", 2.5, Profile::Desk), run("exp4a", 23.04, Profile::Desk)];
        let t = table(&runs, Some("exp3")).unwrap();
        assert_eq!(t, table(&runs, Some("exp3")).unwrap());
        let delta: Vec<&str> = t.lines().skip(1).map(|l| l.split('\t').nth(4).unwrap()).collect();
        assert_eq!(delta, ["+0.00", "+20.54"]);
        assert!(table(&runs, Some("nope")).is_err());
    }

    #[test]
    fn mixed_profiles_are_annotated() {
        let t = table(&[run("a", 1.0, Profile::Desk), run("b", 2.0, Profile::Paper)], None).unwrap();
        assert!(t.starts_with("# warning: runs mix scale profiles (desk, paper)"));
    }
}

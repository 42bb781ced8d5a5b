//! Trial lists (`target <TAB> utterance <TAB> 0|1`), score files (the same
//! plus a score column) and DET curve CSV.

use std::fmt::Write as _;
use std::path::Path;

use spkver_core::eval::{DetCurve, ScoreRecord, ScoreSet, Trial};

use super::{malformed, read_file, write_file, Result};

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r'))).filter(|(_, l)| !l.trim().is_empty())
}

fn parse_trial(what: &'static str, n: usize, fields: &[&str]) -> Result<Trial> {
    let is_target = match fields[2] {
        "1" => true,
        "0" => false,
        other => return Err(malformed(what, format!("line {n}: target flag {other:?} is not 0 or 1"))),
    };
    if fields[0].is_empty() || fields[1].is_empty() {
        return Err(malformed(what, format!("line {n}: empty identifier")));
    }
    Ok(Trial { target_speaker: fields[0].into(), test_utterance: fields[1].into(), is_target })
}

pub fn parse_trials(text: &str) -> Result<Vec<Trial>> {
    lines(text)
        .map(|(n, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 3 {
                return Err(malformed("trial list", format!("line {n}: expected 3 tab-separated fields")));
            }
            parse_trial("trial list", n, &f)
        })
        .collect()
}

pub fn format_trials(trials: &[Trial]) -> String {
    let mut out = String::new();
    for t in trials {
        writeln!(out, "{}\t{}\t{}", t.target_speaker, t.test_utterance, u8::from(t.is_target)).expect("string write");
    }
    out
}

pub fn parse_scores(text: &str) -> Result<ScoreSet> {
    let records = lines(text)
        .map(|(n, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 4 {
                return Err(malformed("score file", format!("line {n}: expected 4 tab-separated fields")));
            }
            let trial = parse_trial("score file", n, &f)?;
            let score: f64 =
                f[3].parse().map_err(|_| malformed("score file", format!("line {n}: bad score {:?}", f[3])))?;
            Ok(ScoreRecord { trial, score })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSet::new(records)?)
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

pub fn format_scores(scores: &ScoreSet) -> String {
    let mut out = String::new();
    for r in scores.records() {
        let t = &r.trial;
        writeln!(out, "{}\t{}\t{}\t{}", t.target_speaker, t.test_utterance, u8::from(t.is_target), fmt_f64(r.score))
            .expect("string write");
    }
    out
}

pub fn format_det(curve: &DetCurve) -> String {
    let mut out = String::from("threshold,far,frr,probit_far,probit_frr\n");
    for p in &curve.points {
        writeln!(out, "{},{},{},{},{}", p.threshold, p.far, p.frr, p.probit_far(), p.probit_frr()).expect("string write");
    }
    out
}

pub fn read_trials_file(path: &Path) -> Result<Vec<Trial>> {
    parse_trials(&String::from_utf8_lossy(&read_file(path)?))
}

pub fn write_trials_file(path: &Path, trials: &[Trial]) -> Result<()> {
    write_file(path, format_trials(trials).as_bytes())
}

pub fn read_scores_file(path: &Path) -> Result<ScoreSet> {
    parse_scores(&String::from_utf8_lossy(&read_file(path)?))
}

pub fn write_scores_file(path: &Path, scores: &ScoreSet) -> Result<()> {
    write_file(path, format_scores(scores).as_bytes())
}

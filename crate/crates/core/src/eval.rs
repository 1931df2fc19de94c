//! Character accuracy and word-level precision, recall and F1.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::Hash;

use crate::corpus::{Bies, Token};
use crate::error::{Error, Result};

/// Fraction of positions whose tags agree.
pub fn char_accuracy<T: PartialEq>(gold: &[Vec<T>], pred: &[Vec<T>]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::Mismatch(format!("{} gold sentences but {} predicted", gold.len(), pred.len())));
    }
    let mut total = 0usize;
    let mut same = 0usize;
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Mismatch(format!(
                "sentence {}: {} gold tags but {} predicted",
                i + 1,
                g.len(),
                p.len()
            )));
        }
        total += g.len();
        same += g.iter().zip(p).filter(|(a, b)| a == b).count();
    }
    if total == 0 {
        return Err(Error::Invalid("no positions to score".into()));
    }
    Ok(same as f64 / total as f64)
}

/// Word counts and the ratios derived from them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Prf {
    pub gold: usize,
    pub pred: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(gold: usize, pred: usize, correct: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, pred);
        let recall = ratio(correct, gold);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { gold, pred, correct, precision, recall, f1 }
    }
}

fn count_matches<T: Eq + Hash>(gold: &[T], pred: &[T]) -> usize {
    let mut bag: HashMap<&T, usize> = HashMap::new();
    for g in gold {
        *bag.entry(g).or_default() += 1;
    }
    pred.iter()
        .filter(|p| match bag.get_mut(p) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

/// Micro-averaged P/R/F1 over aligned sentences. Items are spans, or
/// `(span, label)` pairs when labels must match too.
pub fn word_prf<T: Eq + Hash>(gold: &[Vec<T>], pred: &[Vec<T>]) -> Result<Prf> {
    if gold.len() != pred.len() {
        return Err(Error::Mismatch(format!("{} gold sentences but {} predicted", gold.len(), pred.len())));
    }
    let (mut g, mut p, mut c) = (0, 0, 0);
    for (gs, ps) in gold.iter().zip(pred) {
        g += gs.len();
        p += ps.len();
        c += count_matches(gs, ps);
    }
    Ok(Prf::from_counts(g, p, c))
}

/// One segmented line viewed as characters, spans and per-character tags.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ScoredLine {
    chars: Vec<char>,
    words: Vec<((usize, usize), Option<String>)>,
    tags: Vec<(Bies, Option<String>)>,
}

fn read_line(line: &str, labels: bool) -> std::result::Result<ScoredLine, String> {
    let mut out = ScoredLine { chars: Vec::new(), words: Vec::new(), tags: Vec::new() };
    for token in line.split_ascii_whitespace() {
        let Token { word, pos } = if labels {
            match token.rsplit_once('_') {
                Some((w, p)) if !w.is_empty() && !p.is_empty() => Token { word: w, pos: Some(p) },
                _ => return Err(format!("token {token:?} is not word_POS")),
            }
        } else {
            Token { word: token, pos: None }
        };
        let start = out.chars.len();
        out.chars.extend(word.chars());
        let end = out.chars.len();
        let pos = pos.map(str::to_string);
        for k in start..end {
            let b = match (end - start, k - start) {
                (1, _) => Bies::S,
                (_, 0) => Bies::B,
                (l, j) if j + 1 == l => Bies::E,
                _ => Bies::I,
            };
            out.tags.push((b, pos.clone()));
        }
        out.words.push(((start, end), pos));
    }
    Ok(out)
}

/// Scores of a predicted segmented corpus against a gold one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub sentences: Vec<Prf>,
    pub total: Prf,
    pub char_accuracy: f64,
    /// Whether POS labels had to match.
    pub labeled: bool,
}

/// Compares two segmented corpora line by line. Blank lines are ignored on
/// both sides; the remaining lines must spell identical characters.
pub fn score_segmented(gold: &str, pred: &str, labeled: bool) -> Result<ScoreReport> {
    let load = |text: &str, origin: &str| -> Result<Vec<ScoredLine>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| read_line(l, labeled).map_err(|m| Error::parse(origin, i + 1, m)))
            .collect()
    };
    let g = load(gold, "gold")?;
    let p = load(pred, "pred")?;
    if g.len() != p.len() {
        return Err(Error::Mismatch(format!("{} gold sentences but {} predicted", g.len(), p.len())));
    }
    let mut sentences = Vec::with_capacity(g.len());
    for (i, (gl, pl)) in g.iter().zip(&p).enumerate() {
        if gl.chars != pl.chars {
            return Err(Error::Mismatch(format!("sentence {}: gold and predicted characters differ", i + 1)));
        }
        let c = count_matches(&gl.words, &pl.words);
        sentences.push(Prf::from_counts(gl.words.len(), pl.words.len(), c));
    }
    let (gw, pw, cw) = sentences.iter().fold((0, 0, 0), |(a, b, c), s| (a + s.gold, b + s.pred, c + s.correct));
    let gold_tags: Vec<_> = g.into_iter().map(|l| l.tags).collect();
    let pred_tags: Vec<_> = p.into_iter().map(|l| l.tags).collect();
    Ok(ScoreReport {
        sentences,
        total: Prf::from_counts(gw, pw, cw),
        char_accuracy: char_accuracy(&gold_tags, &pred_tags)?,
        labeled,
    })
}

impl ScoreReport {
    /// Plain-text report. `per_sentence` adds one line per sentence.
    pub fn render(&self, per_sentence: bool) -> String {
        let t = &self.total;
        let mut out = String::new();
        if per_sentence {
            for (i, s) in self.sentences.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "sentence {}\tgold {}\tpred {}\tcorrect {}\tF {:.2}",
                    i + 1,
                    s.gold,
                    s.pred,
                    s.correct,
                    100.0 * s.f1
                );
            }
        }
        let _ = writeln!(out, "sentences\t{}", self.sentences.len());
        let _ = writeln!(out, "gold words\t{}", t.gold);
        let _ = writeln!(out, "predicted words\t{}", t.pred);
        let _ = writeln!(out, "correct words\t{}", t.correct);
        let _ = writeln!(out, "P\t{:.2}", 100.0 * t.precision);
        let _ = writeln!(out, "R\t{:.2}", 100.0 * t.recall);
        let _ = writeln!(out, "F\t{:.2}", 100.0 * t.f1);
        let _ = writeln!(out, "char accuracy\t{:.2}", 100.0 * self.char_accuracy);
        let _ = writeln!(
            out,
            "score labeled={} gold={} pred={} correct={} p={} r={} f1={} acc={}",
            self.labeled, t.gold, t.pred, t.correct, t.precision, t.recall, t.f1, self.char_accuracy
        );
        out
    }
}

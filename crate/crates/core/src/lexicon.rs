//! External word dictionary and its maximum-length span queries.
//!
//! Positions are 0-based character offsets. A query answers 0 when no
//! dictionary word qualifies.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{read_utf8, Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<Box<[char]>>,
    max_len: usize,
}

/// Longest dictionary words beginning at, strictly containing, and ending at one character.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexiconMatch {
    pub begin: usize,
    pub inside: usize,
    pub end: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a word, returning false for duplicates. Words may not be empty or contain whitespace.
    pub fn insert(&mut self, word: &str) -> Result<bool> {
        let chars: Box<[char]> = word.chars().collect();
        if chars.is_empty() || chars.iter().any(|c| c.is_whitespace()) {
            return Err(Error::Invalid(format!("invalid lexicon entry {word:?}")));
        }
        self.max_len = self.max_len.max(chars.len());
        Ok(self.words.insert(chars))
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (lineno, line) in text.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() {
                continue;
            }
            lex.insert(word)
                .map_err(|_| Error::parse(origin, lineno + 1, format!("entry {word:?} contains whitespace")))?;
        }
        Ok(lex)
    }

    /// Loads a one-word-per-line file; blank lines and duplicates are dropped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_utf8(path)?, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn contains(&self, word: &[char]) -> bool {
        self.words.contains(word)
    }

    pub fn contains_str(&self, word: &str) -> bool {
        let chars: Vec<char> = word.chars().collect();
        self.contains(&chars)
    }

    fn check(x: &[char], i: usize) -> Result<()> {
        if i >= x.len() {
            return Err(Error::Position { position: i, len: x.len() });
        }
        Ok(())
    }

    /// Length of the longest word starting at `i`.
    pub fn longest_beginning_at(&self, x: &[char], i: usize) -> Result<usize> {
        Self::check(x, i)?;
        let limit = self.max_len.min(x.len() - i);
        Ok((1..=limit).rev().find(|&m| self.contains(&x[i..i + m])).unwrap_or(0))
    }

    /// Length of the longest word ending at `i`.
    pub fn longest_ending_at(&self, x: &[char], i: usize) -> Result<usize> {
        Self::check(x, i)?;
        let limit = self.max_len.min(i + 1);
        Ok((1..=limit).rev().find(|&m| self.contains(&x[i + 1 - m..=i])).unwrap_or(0))
    }

    /// Length of the longest word (at least 3 characters) in which `i` is
    /// neither the first nor the last character.
    pub fn longest_containing(&self, x: &[char], i: usize) -> Result<usize> {
        Self::check(x, i)?;
        let mut best = 0;
        for start in i.saturating_sub(self.max_len)..i {
            for end in (i + 1)..x.len().min(start + self.max_len) {
                let m = end - start + 1;
                if m > best && self.contains(&x[start..=end]) {
                    best = m;
                }
            }
        }
        Ok(best)
    }

    /// All three queries for every position, from one sweep of the words
    /// occurring in `x`.
    pub fn annotate(&self, x: &[char]) -> Vec<LexiconMatch> {
        let n = x.len();
        let mut out = vec![LexiconMatch::default(); n];
        for start in 0..n {
            for m in 1..=self.max_len.min(n - start) {
                if !self.contains(&x[start..start + m]) {
                    continue;
                }
                let end = start + m - 1;
                out[start].begin = out[start].begin.max(m);
                out[end].end = out[end].end.max(m);
                for cell in &mut out[start + 1..end.max(start + 1)] {
                    cell.inside = cell.inside.max(m);
                }
            }
        }
        out
    }
}

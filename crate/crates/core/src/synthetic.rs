//! Synthetic segmented corpora drawn from a Zipf-distributed vocabulary.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{parse_segmented_line, Dataset, TagScheme};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub vocab_size: usize,
    pub min_word_len: usize,
    pub max_word_len: usize,
    /// Distinct characters words are spelled from.
    pub alphabet_size: usize,
    pub zipf_exponent: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            vocab_size: 300,
            min_word_len: 1,
            max_word_len: 4,
            alphabet_size: 400,
            zipf_exponent: 1.0,
            min_words: 5,
            max_words: 15,
            seed: 1,
        }
    }
}

/// A vocabulary ranked by frequency (rank 1 first) and a sentence sampler over it.
#[derive(Debug, Clone)]
pub struct SyntheticLanguage {
    config: SyntheticConfig,
    words: Vec<String>,
}

const CJK_START: u32 = 0x4E00;

impl SyntheticLanguage {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        let c = &config;
        if c.vocab_size == 0
            || c.min_word_len == 0
            || c.min_word_len > c.max_word_len
            || c.min_words == 0
            || c.min_words > c.max_words
        {
            return Err(Error::Invalid("invalid synthetic corpus configuration".into()));
        }
        let possible: f64 = (c.min_word_len..=c.max_word_len).map(|l| (c.alphabet_size as f64).powi(l as i32)).sum();
        if possible < 2.0 * c.vocab_size as f64 {
            return Err(Error::Invalid("alphabet too small for the vocabulary".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let mut seen = HashSet::new();
        let mut words = Vec::with_capacity(c.vocab_size);
        while words.len() < c.vocab_size {
            let len = rng.random_range(c.min_word_len..=c.max_word_len);
            let w: String = (0..len)
                .map(|_| char::from_u32(CJK_START + rng.random_range(0..c.alphabet_size as u32)).expect("CJK block"))
                .collect();
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        Ok(SyntheticLanguage { config, words })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    pub fn lexicon(&self) -> Lexicon {
        let mut lex = Lexicon::new();
        for w in &self.words {
            lex.insert(w).expect("generated words are non-empty");
        }
        lex
    }

    /// Samples `count` sentences as word lists; `stream` separates independent draws.
    pub fn sentences(&self, count: usize, stream: u64) -> Vec<Vec<String>> {
        let c = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        rng.set_stream(stream + 1);
        let zipf = Zipf::new(self.words.len() as f64, c.zipf_exponent).expect("valid Zipf parameters");
        (0..count)
            .map(|_| {
                let n = rng.random_range(c.min_words..=c.max_words);
                (0..n)
                    .map(|_| {
                        let rank = zipf.sample(&mut rng) as usize;
                        self.words[rank.clamp(1, self.words.len()) - 1].clone()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Joins each maximal run of adjacent one-character words into a single word.
pub fn merge_single_char_runs(words: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(words.len());
    let mut prev_single = false;
    for w in words {
        let single = w.chars().count() == 1;
        match out.last_mut() {
            Some(last) if single && prev_single => last.push_str(w),
            _ => out.push(w.clone()),
        }
        prev_single = single;
    }
    out
}

/// Renders word lists as segmented corpus text.
pub fn to_corpus_text(sentences: &[Vec<String>]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    out
}

/// Labels word lists under the BIES scheme.
pub fn to_dataset(name: &str, sentences: &[Vec<String>]) -> Result<Dataset> {
    let scheme = TagScheme::bies();
    let labeled = sentences
        .iter()
        .map(|s| parse_segmented_line(&s.join(" "), &scheme).map_err(Error::Invalid))
        .collect::<Result<_>>()?;
    Ok(Dataset::new(name, scheme, labeled))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_shape() {
        let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
        let v = lang.vocabulary();
        assert_eq!(v.len(), 300);
        assert_eq!(v.iter().collect::<HashSet<_>>().len(), 300);
        assert!(v.iter().all(|w| (1..=4).contains(&w.chars().count())));
        assert_eq!(lang.lexicon().len(), 300);
    }

    #[test]
    fn sampling_is_deterministic_and_skewed() {
        let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
        let a = lang.sentences(500, 0);
        assert_eq!(a, lang.sentences(500, 0));
        assert_ne!(a, lang.sentences(500, 1));
        let top = a.iter().flatten().filter(|w| **w == lang.vocabulary()[0]).count();
        let tail = a.iter().flatten().filter(|w| **w == lang.vocabulary()[299]).count();
        assert!(top > 10 * tail.max(1));
    }

    #[test]
    fn merging_single_character_runs() {
        let w = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
        assert_eq!(merge_single_char_runs(&w("a b cd e f g hi j")), w("ab cd efg hi j"));
        assert_eq!(merge_single_char_runs(&w("ab")), w("ab"));
    }

    #[test]
    fn dataset_conversion() {
        let ds = to_dataset("t", &[vec!["一二".into(), "三".into()]]).unwrap();
        assert_eq!(ds.sentences[0].gold_tags().unwrap(), vec![0, 2, 3]);
    }
}

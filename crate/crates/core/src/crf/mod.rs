//! First-order linear-chain CRF over character tags.
//!
//! The score of a tag sequence sums feature weights over positions `0..=n`,
//! where position `n` is the end pseudo position carrying the single end tag.
//! Training maximizes the log of the probability mass of all paths consistent
//! with per-position allowed tag sets, which reduces to the usual CRF
//! likelihood when every set is a singleton.

mod io;
mod lattice;
mod train;

use std::collections::BTreeMap;

pub use lattice::{log_sum_exp, Lattice, Posteriors};
pub use train::{train, DevSet, Instance, IterationStats, Sampler, ShuffleSampler, TrainConfig, TrainLog};

use crate::corpus::{LabeledSentence, Sentence, TagScheme};
use crate::error::{Error, Result};
use crate::features::{
    bigram_attributes, unigram_attributes, FeatureIndex, LabelSpace, SentenceContext, TemplateConfig,
};
use crate::lexicon::Lexicon;

/// Inputs beyond the characters that some template sets need.
#[derive(Debug, Clone, Copy, Default)]
pub struct Extras<'a> {
    pub lexicon: Option<&'a Lexicon>,
    /// Source-model tag names, one per character.
    pub guide: Option<&'a [String]>,
}

impl<'a> Extras<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_lexicon(lexicon: Option<&'a Lexicon>) -> Self {
        Extras { lexicon, guide: None }
    }
}

/// Attribute ids present in the model's index, per position `0..=n`.
#[derive(Debug, Clone)]
pub struct EncodedSentence {
    n: usize,
    unigram: Vec<Vec<u32>>,
    bigram: Vec<Vec<u32>>,
}

impl EncodedSentence {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Where one feature occurrence lands in the lattice.
#[derive(Debug, Clone, Copy)]
enum Site {
    Unigram(usize, usize),
    Boundary,
    Start(usize),
    Transition(usize, usize, usize),
    End(usize),
}

/// Maps index label ids to the tags (or tag pairs) they condition on.
/// Slot `k` means the end tag (current) or the begin tag (previous).
#[derive(Debug, Clone)]
struct LabelTable {
    unigram: Vec<Vec<usize>>,
    bigram: Vec<Vec<(usize, usize)>>,
}

impl LabelTable {
    fn new(scheme: &TagScheme, index: &FeatureIndex) -> Self {
        let k = scheme.len();
        let space = LabelSpace::new(scheme);
        let mut unigram = vec![Vec::new(); index.num_labels()];
        let mut bigram = vec![Vec::new(); index.num_labels()];
        for t in 0..=k {
            for key in space.unigram(t) {
                if let Some(id) = index.label_id(key) {
                    unigram[id as usize].push(t);
                }
            }
        }
        for p in 0..=k {
            for t in 0..=k {
                for key in space.bigram(p, t) {
                    if let Some(id) = index.label_id(key) {
                        bigram[id as usize].push((p, t));
                    }
                }
            }
        }
        LabelTable { unigram, bigram }
    }
}

#[derive(Debug, Clone)]
pub struct CrfModel {
    scheme: TagScheme,
    config: TemplateConfig,
    index: FeatureIndex,
    weights: Vec<f64>,
    table: LabelTable,
    /// Free-form key/value annotations stored with the model.
    pub meta: BTreeMap<String, String>,
}

impl CrfModel {
    /// A model with all weights zero.
    pub fn new(scheme: TagScheme, config: TemplateConfig, index: FeatureIndex) -> Self {
        let weights = vec![0.0; index.len()];
        Self::with_weights(scheme, config, index, weights).expect("lengths agree")
    }

    pub fn with_weights(
        scheme: TagScheme,
        config: TemplateConfig,
        index: FeatureIndex,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != index.len() {
            return Err(Error::Model(format!("{} weights for {} features", weights.len(), index.len())));
        }
        let table = LabelTable::new(&scheme, &index);
        Ok(CrfModel { scheme, config, index, weights, table, meta: BTreeMap::new() })
    }

    pub fn scheme(&self) -> &TagScheme {
        &self.scheme
    }

    pub fn config(&self) -> &TemplateConfig {
        &self.config
    }

    pub fn index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Builds the template context for `chars`, checking that the extras the
    /// configuration needs are present.
    pub fn context<'a>(&self, chars: &'a [char], extras: &Extras<'a>) -> Result<SentenceContext<'a>> {
        if self.config.lexicon && extras.lexicon.is_none() {
            return Err(Error::Invalid("model uses lexicon features but no lexicon was given".into()));
        }
        if self.config.guide && extras.guide.is_none() {
            return Err(Error::Invalid("model uses guide features but no source annotations were given".into()));
        }
        let lex = if self.config.lexicon { extras.lexicon } else { None };
        let guide = if self.config.guide { extras.guide } else { None };
        SentenceContext::new(chars, lex, guide)
    }

    pub fn encode_context(&self, ctx: &SentenceContext<'_>) -> Result<EncodedSentence> {
        let n = ctx.len();
        let mut unigram = Vec::with_capacity(n + 1);
        let mut bigram = Vec::with_capacity(n + 1);
        let mut buf = Vec::new();
        for i in 0..=n {
            buf.clear();
            unigram_attributes(ctx, i, &self.config, &mut buf)?;
            unigram.push(buf.iter().filter_map(|a| self.index.attribute_id(a)).collect());
            buf.clear();
            bigram_attributes(ctx, i, &self.config, &mut buf)?;
            bigram.push(buf.iter().filter_map(|a| self.index.attribute_id(a)).collect());
        }
        Ok(EncodedSentence { n, unigram, bigram })
    }

    pub fn encode(&self, x: &Sentence, extras: &Extras<'_>) -> Result<EncodedSentence> {
        let ctx = self.context(x.chars(), extras)?;
        self.encode_context(&ctx)
    }

    fn for_each_feature(&self, enc: &EncodedSentence, mut visit: impl FnMut(u32, Site)) {
        let (n, k) = (enc.n, self.scheme.len());
        for i in 0..=n {
            for &a in &enc.unigram[i] {
                for &(label, fid) in self.index.features_of(a) {
                    for &t in &self.table.unigram[label as usize] {
                        match (i == n, t == k) {
                            (false, false) => visit(fid, Site::Unigram(i, t)),
                            (true, true) => visit(fid, Site::Boundary),
                            _ => {}
                        }
                    }
                }
            }
            for &a in &enc.bigram[i] {
                for &(label, fid) in self.index.features_of(a) {
                    for &(p, t) in &self.table.bigram[label as usize] {
                        let site = if i == 0 {
                            (p == k && t < k && n > 0).then_some(Site::Start(t))
                        } else if i < n {
                            (p < k && t < k).then_some(Site::Transition(i, p, t))
                        } else {
                            (p < k && t == k).then_some(Site::End(p))
                        };
                        if let Some(site) = site {
                            visit(fid, site);
                        }
                    }
                }
            }
        }
    }

    /// Lattice with weights multiplied by `scale` (used by lazily-scaled training).
    pub(crate) fn lattice_scaled(&self, enc: &EncodedSentence, weights: &[f64], scale: f64) -> Lattice {
        let mut lat = Lattice::new(enc.n, self.scheme.len());
        self.for_each_feature(enc, |fid, site| {
            let w = weights[fid as usize];
            if w == 0.0 {
                return;
            }
            let w = w * scale;
            match site {
                Site::Unigram(i, t) => *lat.unigram_mut(i, t) += w,
                Site::Boundary => lat.boundary += w,
                Site::Start(t) => *lat.start_mut(t) += w,
                Site::Transition(i, p, t) => *lat.transition_mut(i, p, t) += w,
                Site::End(p) => *lat.end_mut(p) += w,
            }
        });
        lat
    }

    /// Scores an encoded sentence; `constraints` (if any) become the allowed sets.
    pub fn lattice(&self, enc: &EncodedSentence, constraints: Option<&[Vec<usize>]>) -> Result<Lattice> {
        let mut lat = self.lattice_scaled(enc, &self.weights, 1.0);
        if let Some(c) = constraints {
            lat.restrict(c)?;
        }
        Ok(lat)
    }

    /// Scores a sentence under the enabled template sets.
    pub fn build_lattice(
        &self,
        x: &Sentence,
        extras: &Extras<'_>,
        constraints: Option<&[Vec<usize>]>,
    ) -> Result<Lattice> {
        let enc = self.encode(x, extras)?;
        self.lattice(&enc, constraints)
    }

    /// Adds `scale ×` posterior feature counts to `acc`.
    pub(crate) fn expectations(&self, enc: &EncodedSentence, post: &Posteriors, mut acc: impl FnMut(u32, f64)) {
        let n = enc.n;
        self.for_each_feature(enc, |fid, site| {
            let p = match site {
                Site::Unigram(i, t) => post.node(i, t),
                Site::Boundary => 1.0,
                Site::Start(t) => post.node(0, t),
                Site::Transition(i, p, t) => post.edge(i, p, t),
                Site::End(p) => post.node(n - 1, p),
            };
            if p != 0.0 {
                acc(fid, p);
            }
        });
    }

    fn check_labels(&self, labeled: &LabeledSentence) -> Result<()> {
        if let Some(bad) = labeled.labels().iter().flatten().find(|&&t| t >= self.scheme.len()) {
            return Err(Error::Mismatch(format!(
                "tag index {bad} is outside the model's scheme of {} tags",
                self.scheme.len()
            )));
        }
        Ok(())
    }

    /// Log-probability of the label sets: `log Z(constrained) - log Z(all)`.
    pub fn log_likelihood(&self, labeled: &LabeledSentence, extras: &Extras<'_>) -> Result<f64> {
        self.check_labels(labeled)?;
        let enc = self.encode(&labeled.sentence, extras)?;
        let mut lat = self.lattice(&enc, None)?;
        let log_z = lat.log_partition();
        lat.restrict(labeled.labels())?;
        Ok(lat.log_partition() - log_z)
    }

    /// Gradient of [`Self::log_likelihood`] as sorted `(feature id, value)` pairs.
    pub fn gradient(&self, labeled: &LabeledSentence, extras: &Extras<'_>) -> Result<Vec<(u32, f64)>> {
        self.check_labels(labeled)?;
        let enc = self.encode(&labeled.sentence, extras)?;
        let mut lat = self.lattice(&enc, None)?;
        let mut free = BTreeMap::new();
        self.expectations(&enc, &lat.forward_backward(), |f, v| *free.entry(f).or_insert(0.0) += v);
        lat.restrict(labeled.labels())?;
        let mut clamped = BTreeMap::new();
        self.expectations(&enc, &lat.forward_backward(), |f, v| *clamped.entry(f).or_insert(0.0) += v);
        for (f, v) in free {
            *clamped.entry(f).or_insert(0.0) -= v;
        }
        Ok(clamped.into_iter().collect())
    }

    /// Best tag sequence, optionally restricted to per-position tag sets.
    pub fn tag_constrained(
        &self,
        x: &Sentence,
        extras: &Extras<'_>,
        constraints: Option<&[Vec<usize>]>,
    ) -> Result<Vec<usize>> {
        Ok(self.build_lattice(x, extras, constraints)?.viterbi().0)
    }

    pub fn tag(&self, x: &Sentence, extras: &Extras<'_>) -> Result<Vec<usize>> {
        self.tag_constrained(x, extras, None)
    }

    pub fn tag_encoded(&self, enc: &EncodedSentence) -> Vec<usize> {
        self.lattice_scaled(enc, &self.weights, 1.0).viterbi().0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_segmented_line;
    use crate::features::{build_index, extract_baseline, extract_lexicon, TagRef};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model_for(
        lines: &[&str],
        config: TemplateConfig,
        lexicon: Option<&Lexicon>,
    ) -> (CrfModel, Vec<LabeledSentence>) {
        let scheme = TagScheme::bies();
        let data: Vec<LabeledSentence> = lines.iter().map(|l| parse_segmented_line(l, &scheme).unwrap()).collect();
        let ctxs: Vec<SentenceContext> =
            data.iter().map(|s| SentenceContext::new(s.sentence.chars(), lexicon, None).unwrap()).collect();
        let index = build_index(&scheme, config, ctxs.iter().zip(&data).map(|(c, s)| (c, s.labels()))).unwrap();
        (CrfModel::new(scheme, config, index), data)
    }

    #[test]
    fn zero_weights_score_zero() {
        let (model, data) = model_for(&["AB C"], TemplateConfig::default(), None);
        let lat = model.build_lattice(&data[0].sentence, &Extras::none(), None).unwrap();
        assert_eq!(lat.path_score(&[0, 2, 3]), 0.0);
        assert_eq!(lat.path_score(&[1, 1, 1]), 0.0);
        let ll = model.log_likelihood(&data[0], &Extras::none()).unwrap();
        assert!((ll + 64f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_char_uniform_likelihood() {
        let (model, data) = model_for(&["AB"], TemplateConfig::default(), None);
        let ll = model.log_likelihood(&data[0], &Extras::none()).unwrap();
        assert!((ll + 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lattice_equals_sum_of_feature_weights() {
        let (mut model, data) = model_for(&["AB C", "CA B"], TemplateConfig::default(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in model.weights_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        let x = &data[0].sentence;
        let tags = [0usize, 2, 3];
        let lat = model.build_lattice(x, &Extras::none(), None).unwrap();
        let mut direct = 0.0;
        for i in 0..=x.len() {
            let prev = if i == 0 { TagRef::Start } else { TagRef::Tag(tags[i - 1]) };
            let cur = if i == x.len() { TagRef::End } else { TagRef::Tag(tags[i]) };
            for f in extract_baseline(model.scheme(), x, i, prev, cur).unwrap() {
                if let Some(id) = model.index().feature_id(&f) {
                    direct += model.weights()[id as usize];
                }
            }
        }
        assert!((lat.path_score(&tags) - direct).abs() < 1e-12);
    }

    #[test]
    fn lexicon_composition() {
        let mut lex = Lexicon::new();
        lex.insert("AB").unwrap();
        let mut cfg = TemplateConfig::default();
        cfg.lexicon = true;
        let (mut model, data) = model_for(&["AB C"], cfg, Some(&lex));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = &data[0].sentence;
        // zero lexicon weights: same scores as the baseline configuration
        for id in 0..model.index().len() {
            let f = model.index().feature_string(id as u32);
            model.weights_mut()[id] = if f.contains("|L0") { 0.0 } else { rng.random_range(-1.0..1.0) };
        }
        let base_weights = model.weights().to_vec();
        let with = model.build_lattice(x, &Extras::with_lexicon(Some(&lex)), None).unwrap();
        let tags = [0, 2, 3];
        let s0 = with.path_score(&tags);
        // nonzero lexicon weights add exactly the lexicon feature weights
        for id in 0..model.index().len() {
            if model.index().feature_string(id as u32).contains("|L0") {
                model.weights_mut()[id] = rng.random_range(-1.0..1.0);
            }
        }
        let s1 = model.build_lattice(x, &Extras::with_lexicon(Some(&lex)), None).unwrap().path_score(&tags);
        let mut extra = 0.0;
        for i in 0..x.len() {
            for f in extract_lexicon(model.scheme(), x, i, TagRef::Tag(tags[i]), &lex, 6).unwrap() {
                extra += model.index().feature_id(&f).map_or(0.0, |id| model.weights()[id as usize]);
            }
        }
        for f in extract_lexicon(model.scheme(), x, x.len(), TagRef::End, &lex, 6).unwrap() {
            extra += model.index().feature_id(&f).map_or(0.0, |id| model.weights()[id as usize]);
        }
        assert!((s1 - s0 - extra).abs() < 1e-12);
        let _ = base_weights;
        assert!(model.build_lattice(x, &Extras::none(), None).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (mut model, data) = model_for(&["AB C", "C AB"], TemplateConfig::default(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in model.weights_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        let labeled =
            LabeledSentence::new(data[0].sentence.clone(), vec![vec![0], vec![1, 2], vec![3]], model.scheme()).unwrap();
        let grad: BTreeMap<u32, f64> = model.gradient(&labeled, &Extras::none()).unwrap().into_iter().collect();
        let eps = 1e-4;
        for id in 0..model.index().len() {
            let w0 = model.weights()[id];
            model.weights_mut()[id] = w0 + eps;
            let up = model.log_likelihood(&labeled, &Extras::none()).unwrap();
            model.weights_mut()[id] = w0 - eps;
            let down = model.log_likelihood(&labeled, &Extras::none()).unwrap();
            model.weights_mut()[id] = w0;
            let fd = (up - down) / (2.0 * eps);
            let g = grad.get(&(id as u32)).copied().unwrap_or(0.0);
            assert!((g - fd).abs() <= 1e-5 * g.abs().max(fd.abs()).max(1.0), "{id}: {g} vs {fd}");
        }
    }

    #[test]
    fn degenerate_label_sets() {
        let (mut model, data) = model_for(&["AB C"], TemplateConfig::default(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for w in model.weights_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        let x = data[0].sentence.clone();
        let full = LabeledSentence::new(x.clone(), vec![vec![0, 1, 2, 3]; 3], model.scheme()).unwrap();
        assert_eq!(model.log_likelihood(&full, &Extras::none()).unwrap(), 0.0);
        assert!(model.gradient(&full, &Extras::none()).unwrap().iter().all(|&(_, g)| g == 0.0));

        let gold = &data[0];
        let lat = model.build_lattice(&x, &Extras::none(), None).unwrap();
        let standard = lat.path_score(&gold.gold_tags().unwrap()) - lat.log_partition();
        assert_eq!(model.log_likelihood(gold, &Extras::none()).unwrap(), standard);

        let bad = LabeledSentence::new(
            x,
            vec![vec![5]; 3],
            &TagScheme::cross(&TagScheme::bies(), &["A".into(), "B".into()]).unwrap(),
        )
        .unwrap();
        assert!(model.log_likelihood(&bad, &Extras::none()).is_err());
    }

    #[test]
    fn absent_features_have_zero_gradient() {
        let (model, data) = model_for(&["AB C", "DE"], TemplateConfig::default(), None);
        let grad = model.gradient(&data[0], &Extras::none()).unwrap();
        let de = model.index().feature_id("B|01:0=D").unwrap();
        assert!(grad.iter().all(|&(f, _)| f != de));
    }
}

//! Training recipes: single-scheme, guide-feature and coupled models, plus the
//! per-corpus sampler used when several corpora are trained together.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{Dataset, LabeledSentence, SchemeKind, Sentence, Side, TagScheme};
use crate::coupled::{bundle, expand_dataset, project_tags, TagMapping};
use crate::crf::{train, CrfModel, DevSet, Extras, Instance, Sampler, ShuffleSampler, TrainConfig, TrainLog};
use crate::error::{Error, Result};
use crate::features::{build_index, SentenceContext, TemplateConfig};
use crate::lexicon::Lexicon;

pub const DEFAULT_SAMPLE_COUNT: usize = 5000;

/// Draws `count` sentences from each corpus per iteration, then shuffles the
/// union. Corpora smaller than `count` are sampled with replacement.
/// Indices address the corpora laid end to end.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    sizes: Vec<usize>,
    count: usize,
    seed: u64,
}

impl WeightedSampler {
    pub fn new(sizes: Vec<usize>, count: usize, seed: u64) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::Invalid("no corpora to sample from".into()));
        }
        if count == 0 {
            return Err(Error::Invalid("sample count must be at least 1".into()));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Invalid(format!("corpus {} is empty", i + 1)));
        }
        Ok(WeightedSampler { sizes, count, seed })
    }
}

impl Sampler for WeightedSampler {
    fn draw(&self, iteration: usize) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration as u64);
        let mut out = Vec::with_capacity(self.count * self.sizes.len());
        let mut offset = 0;
        for &size in &self.sizes {
            if size >= self.count {
                out.extend(index::sample(&mut rng, size, self.count).into_iter().map(|i| offset + i));
            } else {
                out.extend((0..self.count).map(|_| offset + rng.random_range(0..size)));
            }
            offset += size;
        }
        out.shuffle(&mut rng);
        out
    }
}

/// Settings shared by every recipe.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    /// Template sets; the guide recipe switches `guide` on for the target model itself.
    pub templates: TemplateConfig,
    pub train: TrainConfig,
    /// Per-corpus sample size. `None` means one shuffled pass over a single
    /// corpus, or the default count when several corpora are combined.
    pub sample_count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: CrfModel,
    pub log: TrainLog,
}

/// Held-out data: gold sentences plus the source tags guide models need.
struct DevInput<'a> {
    dataset: &'a Dataset,
    guide: Option<&'a [Vec<String>]>,
    projection: Option<Side>,
}

fn sampler_for(corpora: &[&Dataset], config: &PipelineConfig) -> Result<Box<dyn Sampler + Sync>> {
    let sizes: Vec<usize> = corpora.iter().map(|d| d.len()).collect();
    let seed = config.train.seed;
    match (sizes.len(), config.sample_count) {
        (1, None) => {
            if sizes[0] == 0 {
                return Err(Error::Invalid(format!("corpus {:?} is empty", corpora[0].name)));
            }
            Ok(Box::new(ShuffleSampler { len: sizes[0], seed }))
        }
        (_, count) => Ok(Box::new(WeightedSampler::new(sizes, count.unwrap_or(DEFAULT_SAMPLE_COUNT), seed)?)),
    }
}

fn contexts<'a>(
    sentences: &[&'a LabeledSentence],
    lexicon: Option<&Lexicon>,
    guide: Option<&'a [Vec<String>]>,
) -> Result<Vec<SentenceContext<'a>>> {
    sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| SentenceContext::new(s.sentence.chars(), lexicon, guide.map(|g| g[i].as_slice())))
        .collect()
}

/// Builds the index over `corpora`, encodes them and trains.
fn fit(
    scheme: &TagScheme,
    templates: TemplateConfig,
    corpora: &[&Dataset],
    guide: Option<&[Vec<String>]>,
    lexicon: Option<&Lexicon>,
    dev: Option<DevInput<'_>>,
    config: &PipelineConfig,
) -> Result<Trained> {
    if let Some(d) = corpora.iter().find(|d| d.scheme != *scheme) {
        return Err(Error::Mismatch(format!("corpus {:?} uses a different tag scheme", d.name)));
    }
    if templates.lexicon && lexicon.is_none() {
        return Err(Error::Config("lexicon features are enabled but no lexicon was given".into()));
    }
    let sampler = sampler_for(corpora, config)?;
    let sentences: Vec<&LabeledSentence> = corpora.iter().flat_map(|d| &d.sentences).collect();
    if let Some(g) = guide {
        if g.len() != sentences.len() {
            return Err(Error::Mismatch("source annotations do not cover the training data".into()));
        }
    }
    let lex = if templates.lexicon { lexicon } else { None };
    let ctxs = contexts(&sentences, lex, guide)?;
    let index = build_index(scheme, templates, ctxs.iter().zip(&sentences).map(|(c, s)| (c, s.labels())))?;
    let model = CrfModel::new(scheme.clone(), templates, index);
    let instances: Vec<Instance> = ctxs
        .par_iter()
        .zip(&sentences)
        .map(|(c, s)| Ok(Instance { encoded: model.encode_context(c)?, labels: s.labels().to_vec() }))
        .collect::<Result<_>>()?;
    drop(ctxs);

    let dev_set = match dev {
        Some(d) => {
            let dev_sentences: Vec<&LabeledSentence> = d.dataset.sentences.iter().collect();
            let dctx = contexts(&dev_sentences, lex, d.guide)?;
            let encoded = dctx.par_iter().map(|c| model.encode_context(c)).collect::<Result<_>>()?;
            let gold = dev_sentences
                .iter()
                .map(|s| s.gold_tags().ok_or_else(|| Error::Invalid("dev sentences must be fully labeled".into())))
                .collect::<Result<_>>()?;
            Some(DevSet { encoded, gold, scheme: d.dataset.scheme.clone(), projection: d.projection })
        }
        None => None,
    };
    let (model, log) = train(model, &instances, sampler.as_ref(), dev_set.as_ref(), &config.train)?;
    Ok(Trained { model, log })
}

/// A plain model over one or more corpora labeled in the same scheme.
pub fn train_single(
    corpora: &[Dataset],
    dev: Option<&Dataset>,
    lexicon: Option<&Lexicon>,
    config: &PipelineConfig,
) -> Result<Trained> {
    let first = corpora.first().ok_or_else(|| Error::Invalid("no training corpora".into()))?;
    let refs: Vec<&Dataset> = corpora.iter().collect();
    let mut templates = config.templates;
    templates.guide = false;
    let dev = dev.map(|d| DevInput { dataset: d, guide: None, projection: None });
    fit(&first.scheme, templates, &refs, None, lexicon, dev, config)
}

/// Source-model tag names for each sentence, computed in parallel.
pub fn source_annotations(
    source: &CrfModel,
    sentences: &[&Sentence],
    lexicon: Option<&Lexicon>,
) -> Result<Vec<Vec<String>>> {
    let extras = Extras::with_lexicon(lexicon);
    sentences
        .par_iter()
        .map(|x| {
            let tags = source.tag(x, &extras)?;
            Ok(tags.iter().map(|&t| source.scheme().name(t).to_string()).collect())
        })
        .collect()
}

/// A target model whose features read a source model's output.
#[derive(Debug, Clone)]
pub struct GuideModel {
    pub source: CrfModel,
    pub target: CrfModel,
}

impl GuideModel {
    pub fn tag(&self, x: &Sentence, lexicon: Option<&Lexicon>) -> Result<Vec<usize>> {
        let guide = source_annotations(&self.source, &[x], lexicon)?.pop().expect("one sentence");
        self.target.tag(x, &Extras { lexicon, guide: Some(&guide) })
    }
}

#[derive(Debug, Clone)]
pub struct GuideTrained {
    pub model: GuideModel,
    pub source_log: TrainLog,
    pub target_log: TrainLog,
}

/// Trains a source model on `sources`, tags the target training and dev data
/// with it, then trains the target model with guide features over those tags.
pub fn guide_pipeline(
    sources: &[Dataset],
    target: &Dataset,
    target_dev: Option<&Dataset>,
    lexicon: Option<&Lexicon>,
    config: &PipelineConfig,
) -> Result<GuideTrained> {
    let source_config =
        PipelineConfig { sample_count: if sources.len() > 1 { config.sample_count } else { None }, ..config.clone() };
    let source = train_single(sources, None, lexicon, &source_config)?;
    let annotate = |ds: &Dataset| {
        let xs: Vec<&Sentence> = ds.sentences.iter().map(|s| &s.sentence).collect();
        source_annotations(&source.model, &xs, lexicon)
    };
    let train_guide = annotate(target)?;
    let dev_guide = target_dev.map(annotate).transpose()?;
    let mut templates = config.templates;
    templates.guide = true;
    let dev = target_dev.map(|d| DevInput { dataset: d, guide: dev_guide.as_deref(), projection: None });
    let target_config = PipelineConfig { sample_count: None, ..config.clone() };
    let trained = fit(&target.scheme, templates, &[target], Some(&train_guide), lexicon, dev, &target_config)?;
    Ok(GuideTrained {
        model: GuideModel { source: source.model, target: trained.model },
        source_log: source.log,
        target_log: trained.log,
    })
}

/// Trains one model over the bundled scheme of side A (`a`) and side B
/// (`bs`). One-side labels become ambiguity sets; dev data is side-A gold.
/// Without a mapping every pair of tags is allowed.
pub fn coupled_pipeline(
    a: &Dataset,
    bs: &[Dataset],
    mapping: Option<&TagMapping>,
    dev_a: Option<&Dataset>,
    lexicon: Option<&Lexicon>,
    config: &PipelineConfig,
) -> Result<Trained> {
    let b_scheme = &bs.first().ok_or_else(|| Error::Invalid("no side-B corpora".into()))?.scheme;
    let full;
    let mapping = match mapping {
        Some(m) => m,
        None => {
            full = TagMapping::full(&a.scheme, b_scheme);
            &full
        }
    };
    let bundled = bundle(&a.scheme, b_scheme, mapping)?;
    let mut expanded = vec![expand_dataset(a, Side::A, &bundled)?];
    for b in bs {
        expanded.push(expand_dataset(b, Side::B, &bundled)?);
    }
    let refs: Vec<&Dataset> = expanded.iter().collect();
    let mut templates = config.templates;
    templates.guide = false;
    let dev = dev_a.map(|d| DevInput { dataset: d, guide: None, projection: Some(Side::A) });
    let config =
        PipelineConfig { sample_count: Some(config.sample_count.unwrap_or(DEFAULT_SAMPLE_COUNT)), ..config.clone() };
    fit(&bundled, templates, &refs, None, lexicon, dev, &config)
}

/// Anything that turns a sentence into tags: a plain or coupled model, or a
/// guide pair.
#[derive(Debug, Clone)]
pub enum Tagger {
    Single(CrfModel),
    Guided(GuideModel),
}

impl Tagger {
    fn main_model(&self) -> &CrfModel {
        match self {
            Tagger::Single(m) => m,
            Tagger::Guided(g) => &g.target,
        }
    }

    /// The scheme of the emitted tags. Coupled models report one side (A by default).
    pub fn output_scheme(&self, side: Option<Side>) -> Result<&TagScheme> {
        let scheme = self.main_model().scheme();
        match (scheme.kind(), side) {
            (SchemeKind::Bundled, s) => Ok(scheme.side(s.unwrap_or(Side::A)).expect("bundled")),
            (_, None) => Ok(scheme),
            (_, Some(_)) => Err(Error::Mismatch("--side only applies to coupled models".into())),
        }
    }

    pub fn tag(&self, x: &Sentence, lexicon: Option<&Lexicon>, side: Option<Side>) -> Result<Vec<usize>> {
        self.output_scheme(side)?;
        match self {
            Tagger::Single(m) => {
                let tags = m.tag(x, &Extras::with_lexicon(lexicon))?;
                if m.scheme().kind() == SchemeKind::Bundled {
                    project_tags(m.scheme(), &tags, side.unwrap_or(Side::A))
                } else {
                    Ok(tags)
                }
            }
            Tagger::Guided(g) => g.tag(x, lexicon),
        }
    }

    /// Tags many sentences in parallel, keeping input order.
    pub fn tag_all(&self, xs: &[Sentence], lexicon: Option<&Lexicon>, side: Option<Side>) -> Result<Vec<Vec<usize>>> {
        xs.par_iter().map(|x| self.tag(x, lexicon, side)).collect()
    }
}

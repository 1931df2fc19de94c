//! Feature templates and the feature index.
//!
//! A feature is an *attribute* (template id plus the observed material,
//! independent of tags) conditioned on a *label key* rendered from the tag(s).
//! Its string form is `label|attribute`, e.g. `B|01:-1=中` or `B>E|09`.
//!
//! Positions are 0-based; position `n` is the end pseudo position, and
//! characters outside the sentence read as `<S>` (before) or `</S>` (after).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::{classify_char_type, CharType, Sentence, TagScheme};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconMatch};

pub const BOS: &str = "<S>";
pub const EOS: &str = "</S>";
/// Lexicon value for positions outside the sentence.
pub const EDGE: &str = "<edge>";
/// Source tag read outside the sentence.
pub const PSEUDO_SOURCE_TAG: &str = "<S>";

/// Which template sets are active, plus extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemplateConfig {
    pub baseline: bool,
    pub lexicon: bool,
    pub guide: bool,
    /// Lexicon lengths above this render as `{cap}+`.
    pub lexicon_cap: usize,
    /// Minimum occurrence count for a feature to enter the index.
    pub cutoff: usize,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig { baseline: true, lexicon: false, guide: false, lexicon_cap: 6, cutoff: 1 }
    }
}

/// A tag, or one of the two pseudo tags framing a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagRef {
    Start,
    Tag(usize),
    End,
}

#[derive(Clone, Copy)]
enum Unit {
    Char(char),
    Bos,
    Eos,
}

impl Unit {
    fn push(self, out: &mut String) {
        match self {
            Unit::Char(c) => out.push(c),
            Unit::Bos => out.push_str(BOS),
            Unit::Eos => out.push_str(EOS),
        }
    }

    fn same(self, other: Unit) -> bool {
        match (self, other) {
            (Unit::Char(a), Unit::Char(b)) => a == b,
            (Unit::Bos, Unit::Bos) | (Unit::Eos, Unit::Eos) => true,
            _ => false,
        }
    }
}

/// Per-sentence material shared by all templates: characters, their types,
/// lexicon matches, and source-model tags.
#[derive(Debug, Clone)]
pub struct SentenceContext<'a> {
    chars: &'a [char],
    types: Vec<CharType>,
    lexicon: Option<Vec<LexiconMatch>>,
    guide: Option<&'a [String]>,
}

impl<'a> SentenceContext<'a> {
    pub fn new(chars: &'a [char], lexicon: Option<&Lexicon>, guide: Option<&'a [String]>) -> Result<Self> {
        if let Some(g) = guide {
            if g.len() != chars.len() {
                return Err(Error::Mismatch(format!(
                    "{} source tags for a sentence of {} characters",
                    g.len(),
                    chars.len()
                )));
            }
        }
        Ok(SentenceContext {
            chars,
            types: chars.iter().map(|&c| classify_char_type(c)).collect(),
            lexicon: lexicon.map(|l| l.annotate(chars)),
            guide,
        })
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    fn unit(&self, k: isize) -> Unit {
        if k < 0 {
            Unit::Bos
        } else if k as usize >= self.chars.len() {
            Unit::Eos
        } else {
            Unit::Char(self.chars[k as usize])
        }
    }

    fn char_type(&self, k: isize) -> &'static str {
        if k < 0 {
            BOS
        } else if k as usize >= self.chars.len() {
            EOS
        } else {
            self.types[k as usize].as_str()
        }
    }

    fn source_tag(&self, k: isize) -> &str {
        match self.guide {
            Some(g) if k >= 0 && (k as usize) < g.len() => &g[k as usize],
            _ => PSEUDO_SOURCE_TAG,
        }
    }
}

fn lexicon_token(table: &[LexiconMatch], k: isize, pick: fn(&LexiconMatch) -> usize, cap: usize, out: &mut String) {
    if k < 0 || k as usize >= table.len() {
        out.push_str(EDGE);
        return;
    }
    let v = pick(&table[k as usize]);
    if v > cap {
        let _ = write!(out, "{cap}+");
    } else {
        let _ = write!(out, "{v}");
    }
}

/// Baseline unigram attributes (templates 01-08) at `i`.
fn baseline_unigram(ctx: &SentenceContext<'_>, i: isize, out: &mut Vec<String>) {
    let mut s = String::new();
    let emit = |s: &mut String, out: &mut Vec<String>| out.push(std::mem::take(s));
    for d in -2..=2 {
        let _ = write!(s, "01:{d}=");
        ctx.unit(i + d).push(&mut s);
        emit(&mut s, out);
    }
    for d in -1..=2 {
        let _ = write!(s, "02:{d}=");
        ctx.unit(i + d - 1).push(&mut s);
        ctx.unit(i + d).push(&mut s);
        emit(&mut s, out);
    }
    for d in -1..=1 {
        let _ = write!(s, "03:{d}=");
        ctx.unit(i + d - 1).push(&mut s);
        ctx.unit(i + d).push(&mut s);
        ctx.unit(i + d + 1).push(&mut s);
        emit(&mut s, out);
    }
    for d in -1..=1 {
        let _ = write!(s, "04:{d}={}", ctx.char_type(i + d));
        emit(&mut s, out);
    }
    for d in 0..=1 {
        let _ = write!(s, "05:{d}={},{}", ctx.char_type(i + d - 1), ctx.char_type(i + d));
        emit(&mut s, out);
    }
    let _ = write!(s, "06={},{},{}", ctx.char_type(i - 1), ctx.char_type(i), ctx.char_type(i + 1));
    emit(&mut s, out);
    let ci = ctx.unit(i);
    for d in [-2, -1, 1, 2] {
        let _ = write!(s, "07:{d}={}", u8::from(ci.same(ctx.unit(i + d))));
        emit(&mut s, out);
    }
    let _ = write!(s, "08={}", u8::from(ctx.unit(i - 1).same(ctx.unit(i + 1))));
    emit(&mut s, out);
}

/// Baseline bigram attributes (templates 09-11) at `i`; these pair with `y_prev>y` keys.
fn baseline_bigram(ctx: &SentenceContext<'_>, i: isize, out: &mut Vec<String>) {
    out.push("09".to_string());
    let mut s = String::from("10=");
    ctx.unit(i).push(&mut s);
    out.push(s);
    let mut s = String::from("11=");
    ctx.unit(i - 1).push(&mut s);
    ctx.unit(i).push(&mut s);
    out.push(s);
}

fn lexicon_unigram(ctx: &SentenceContext<'_>, i: isize, cap: usize, out: &mut Vec<String>) {
    let table = ctx.lexicon.as_deref().unwrap_or(&[]);
    let picks: [fn(&LexiconMatch) -> usize; 3] = [|m| m.begin, |m| m.inside, |m| m.end];
    let mut id = 1;
    for d in -1..=1 {
        for pick in picks {
            let mut s = format!("L0{id}=");
            lexicon_token(table, i + d, pick, cap, &mut s);
            out.push(s);
            id += 1;
        }
    }
}

fn guide_unigram(ctx: &SentenceContext<'_>, i: isize, out: &mut Vec<String>) {
    let (prev, cur, next) = (ctx.source_tag(i - 1), ctx.source_tag(i), ctx.source_tag(i + 1));
    let mut base = Vec::with_capacity(23);
    baseline_unigram(ctx, i, &mut base);
    out.extend(base.into_iter().map(|a| format!("G01/{cur}/{a}")));
    out.push(format!("G02={cur}"));
    out.push(format!("G03={next}"));
    out.push(format!("G04={prev}"));
    out.push(format!("G05={prev},{cur}"));
    out.push(format!("G06={cur},{next}"));
    out.push(format!("G07={prev},{next}"));
    out.push(format!("G08={prev},{cur},{next}"));
}

fn check_position(ctx: &SentenceContext<'_>, i: usize) -> Result<()> {
    if i > ctx.len() {
        return Err(Error::Position { position: i, len: ctx.len() });
    }
    Ok(())
}

/// Tag-independent attributes paired with the current tag at position `i` (`0..=n`).
pub fn unigram_attributes(
    ctx: &SentenceContext<'_>,
    i: usize,
    config: &TemplateConfig,
    out: &mut Vec<String>,
) -> Result<()> {
    check_position(ctx, i)?;
    let i = i as isize;
    if config.baseline {
        baseline_unigram(ctx, i, out);
    }
    if config.lexicon {
        if ctx.lexicon.is_none() {
            return Err(Error::Invalid("lexicon templates need a lexicon".into()));
        }
        lexicon_unigram(ctx, i, config.lexicon_cap, out);
    }
    if config.guide {
        if ctx.guide.is_none() {
            return Err(Error::Invalid("guide templates need source tags".into()));
        }
        guide_unigram(ctx, i, out);
    }
    Ok(())
}

/// Tag-independent attributes paired with the previous and current tag at `i`.
pub fn bigram_attributes(
    ctx: &SentenceContext<'_>,
    i: usize,
    config: &TemplateConfig,
    out: &mut Vec<String>,
) -> Result<()> {
    check_position(ctx, i)?;
    if config.baseline {
        baseline_bigram(ctx, i as isize, out);
    }
    Ok(())
}

/// Label keys for each rendering of a tag: the tag itself, and for bundled
/// schemes additionally its A-side and B-side projections.
fn renderings(scheme: &TagScheme, tag: TagRef) -> Vec<(&'static str, String)> {
    let pseudo = |name: &str| match scheme.bundle_parts() {
        Some(_) => vec![("", name.to_string()), ("A=", name.to_string()), ("B=", name.to_string())],
        None => vec![("", name.to_string())],
    };
    match tag {
        TagRef::Start => pseudo(BOS),
        TagRef::End => pseudo(EOS),
        TagRef::Tag(t) => match scheme.bundle_parts() {
            Some((a, b, pairs)) => vec![
                ("", scheme.name(t).to_string()),
                ("A=", a.name(pairs[t].0).to_string()),
                ("B=", b.name(pairs[t].1).to_string()),
            ],
            None => vec![("", scheme.name(t).to_string())],
        },
    }
}

pub fn unigram_label_keys(scheme: &TagScheme, tag: TagRef) -> Vec<String> {
    renderings(scheme, tag).into_iter().map(|(p, n)| format!("{p}{n}")).collect()
}

pub fn bigram_label_keys(scheme: &TagScheme, prev: TagRef, cur: TagRef) -> Vec<String> {
    renderings(scheme, prev)
        .into_iter()
        .zip(renderings(scheme, cur))
        .map(|((p, a), (_, b))| format!("{p}{a}>{b}"))
        .collect()
}

/// Every label key a scheme can produce, indexed for fast lookup.
/// Tag index `K` (the scheme size) stands for `End` in the current slot and
/// `Start` in the previous slot.
#[derive(Debug, Clone)]
pub struct LabelSpace {
    size: usize,
    unigram: Vec<Vec<String>>,
    bigram: Vec<Vec<String>>,
}

impl LabelSpace {
    pub fn new(scheme: &TagScheme) -> Self {
        let k = scheme.len();
        let cur = |t: usize| if t == k { TagRef::End } else { TagRef::Tag(t) };
        let prev = |t: usize| if t == k { TagRef::Start } else { TagRef::Tag(t) };
        let unigram = (0..=k).map(|t| unigram_label_keys(scheme, cur(t))).collect();
        let mut bigram = Vec::with_capacity((k + 1) * (k + 1));
        for p in 0..=k {
            for t in 0..=k {
                bigram.push(bigram_label_keys(scheme, prev(p), cur(t)));
            }
        }
        LabelSpace { size: k, unigram, bigram }
    }

    pub fn num_tags(&self) -> usize {
        self.size
    }

    pub fn unigram(&self, t: usize) -> &[String] {
        &self.unigram[t]
    }

    pub fn bigram(&self, p: usize, t: usize) -> &[String] {
        &self.bigram[p * (self.size + 1) + t]
    }
}

fn render(attrs: &[String], keys: &[String], out: &mut Vec<String>) {
    for a in attrs {
        for k in keys {
            out.push(format!("{k}|{a}"));
        }
    }
}

/// Baseline feature strings at `i` for the tag pair `(y_prev, y)`. For a
/// bundled scheme every template is rendered three times (coupled features).
pub fn extract_baseline(scheme: &TagScheme, x: &Sentence, i: usize, y_prev: TagRef, y: TagRef) -> Result<Vec<String>> {
    let ctx = SentenceContext::new(x.chars(), None, None)?;
    let config = TemplateConfig::default();
    let (mut uni, mut bi) = (Vec::new(), Vec::new());
    unigram_attributes(&ctx, i, &config, &mut uni)?;
    bigram_attributes(&ctx, i, &config, &mut bi)?;
    let mut out = Vec::new();
    render(&uni, &unigram_label_keys(scheme, y), &mut out);
    render(&bi, &bigram_label_keys(scheme, y_prev, y), &mut out);
    Ok(out)
}

/// Coupled feature strings: joint, A-side and B-side renderings of the baseline templates.
pub fn coupled_features(bundled: &TagScheme, x: &Sentence, i: usize, y_prev: TagRef, y: TagRef) -> Result<Vec<String>> {
    if bundled.bundle_parts().is_none() {
        return Err(Error::Scheme("coupled features need a bundled scheme".into()));
    }
    extract_baseline(bundled, x, i, y_prev, y)
}

/// The nine lexicon feature strings at `i`.
pub fn extract_lexicon(
    scheme: &TagScheme,
    x: &Sentence,
    i: usize,
    y: TagRef,
    lexicon: &Lexicon,
    cap: usize,
) -> Result<Vec<String>> {
    let ctx = SentenceContext::new(x.chars(), Some(lexicon), None)?;
    let config = TemplateConfig { baseline: false, lexicon: true, lexicon_cap: cap, ..TemplateConfig::default() };
    let mut attrs = Vec::new();
    unigram_attributes(&ctx, i, &config, &mut attrs)?;
    let mut out = Vec::new();
    render(&attrs, &unigram_label_keys(scheme, y), &mut out);
    Ok(out)
}

/// Guide feature strings at `i` given the source model's tags for the whole sentence.
pub fn extract_guide(
    scheme: &TagScheme,
    x: &Sentence,
    source_tags: &[String],
    i: usize,
    y: TagRef,
) -> Result<Vec<String>> {
    let ctx = SentenceContext::new(x.chars(), None, Some(source_tags))?;
    let config = TemplateConfig { baseline: false, guide: true, ..TemplateConfig::default() };
    let mut attrs = Vec::new();
    unigram_attributes(&ctx, i, &config, &mut attrs)?;
    let mut out = Vec::new();
    render(&attrs, &unigram_label_keys(scheme, y), &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }
}

/// Collects feature occurrences before the index is frozen.
#[derive(Debug, Clone)]
pub struct FeatureIndexBuilder {
    scheme: TagScheme,
    config: TemplateConfig,
    labels: LabelSpace,
    attrs: Interner,
    keys: Interner,
    counts: HashMap<(u32, u32), usize>,
    order: Vec<(u32, u32)>,
}

impl FeatureIndexBuilder {
    pub fn new(scheme: &TagScheme, config: TemplateConfig) -> Self {
        FeatureIndexBuilder {
            scheme: scheme.clone(),
            config,
            labels: LabelSpace::new(scheme),
            attrs: Interner::default(),
            keys: Interner::default(),
            counts: HashMap::new(),
            order: Vec::new(),
        }
    }

    fn bump(&mut self, attr: u32, key: &str) {
        let key = self.keys.intern(key);
        let c = self.counts.entry((attr, key)).or_insert(0);
        if *c == 0 {
            self.order.push((attr, key));
        }
        *c += 1;
    }

    /// Counts every feature of a sentence under every allowed tag (pair).
    pub fn add_sentence(&mut self, ctx: &SentenceContext<'_>, labels: &[Vec<usize>]) -> Result<()> {
        let n = ctx.len();
        if labels.len() != n {
            return Err(Error::Mismatch(format!("{} label sets for {n} characters", labels.len())));
        }
        let k = self.scheme.len();
        let end = [k];
        let allowed = |i: usize| -> &[usize] {
            if i == n {
                &end
            } else {
                &labels[i]
            }
        };
        let mut attrs = Vec::new();
        for i in 0..=n {
            attrs.clear();
            unigram_attributes(ctx, i, &self.config, &mut attrs)?;
            for a in &attrs {
                let aid = self.attrs.intern(a);
                for &t in allowed(i) {
                    for key in self.labels.unigram(t).to_vec() {
                        self.bump(aid, &key);
                    }
                }
            }
            attrs.clear();
            bigram_attributes(ctx, i, &self.config, &mut attrs)?;
            let prevs: &[usize] = if i == 0 { &end } else { &labels[i - 1] };
            for a in &attrs {
                let aid = self.attrs.intern(a);
                for &p in prevs {
                    for &t in allowed(i) {
                        for key in self.labels.bigram(p, t).to_vec() {
                            self.bump(aid, &key);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Assigns dense ids, in first-seen order, to features seen at least `cutoff` times.
    pub fn freeze(self) -> FeatureIndex {
        let mut index = FeatureIndex::empty(self.config.cutoff);
        for (attr, key) in self.order {
            if self.counts[&(attr, key)] >= self.config.cutoff {
                index.push(&self.attrs.names[attr as usize], &self.keys.names[key as usize]);
            }
        }
        index
    }
}

/// Frozen mapping from feature strings to dense ids.
#[derive(Debug, Clone)]
pub struct FeatureIndex {
    attrs: Interner,
    keys: Interner,
    by_attr: Vec<Vec<(u32, u32)>>,
    features: Vec<(u32, u32)>,
    cutoff: usize,
}

impl FeatureIndex {
    pub(crate) fn empty(cutoff: usize) -> Self {
        FeatureIndex {
            attrs: Interner::default(),
            keys: Interner::default(),
            by_attr: Vec::new(),
            features: Vec::new(),
            cutoff,
        }
    }

    /// Appends a feature; returns its id. Used while freezing and when loading models.
    pub(crate) fn push(&mut self, attr: &str, key: &str) -> u32 {
        let a = self.attrs.intern(attr);
        if a as usize == self.by_attr.len() {
            self.by_attr.push(Vec::new());
        }
        let k = self.keys.intern(key);
        let id = self.features.len() as u32;
        self.features.push((a, k));
        self.by_attr[a as usize].push((k, id));
        id
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn attribute_id(&self, attr: &str) -> Option<u32> {
        self.attrs.get(attr)
    }

    pub fn label_id(&self, key: &str) -> Option<u32> {
        self.keys.get(key)
    }

    pub fn num_labels(&self) -> usize {
        self.keys.names.len()
    }

    /// `(label id, feature id)` pairs of an attribute, in id order.
    pub fn features_of(&self, attr: u32) -> &[(u32, u32)] {
        &self.by_attr[attr as usize]
    }

    /// Looks up `label|attribute`; unseen strings are absent.
    pub fn feature_id(&self, feature: &str) -> Option<u32> {
        let (key, attr) = feature.split_once('|')?;
        let (a, k) = (self.attrs.get(attr)?, self.keys.get(key)?);
        self.by_attr[a as usize].iter().find(|f| f.0 == k).map(|f| f.1)
    }

    pub fn feature_string(&self, id: u32) -> String {
        let (a, k) = self.features[id as usize];
        format!("{}|{}", self.keys.names[k as usize], self.attrs.names[a as usize])
    }
}

/// One pass over labeled sentences; see [`FeatureIndexBuilder`].
pub fn build_index<'a, I>(scheme: &TagScheme, config: TemplateConfig, items: I) -> Result<FeatureIndex>
where
    I: IntoIterator<Item = (&'a SentenceContext<'a>, &'a [Vec<usize>])>,
{
    let mut b = FeatureIndexBuilder::new(scheme, config);
    for (ctx, labels) in items {
        b.add_sentence(ctx, labels)?;
    }
    Ok(b.freeze())
}

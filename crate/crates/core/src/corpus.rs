//! Sentences, tag schemes, segmentations and the plain-text corpus formats.
//!
//! A segmented corpus has one sentence per line with words separated by
//! spaces. Joint word/POS corpora write every token as `word_POS`, where the
//! last underscore separates the label.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{read_utf8, Error, Result};

/// Word-boundary component of a character tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bies {
    B,
    I,
    E,
    S,
}

impl Bies {
    pub const ALL: [Bies; 4] = [Bies::B, Bies::I, Bies::E, Bies::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Bies> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Bies::B => "B",
            Bies::I => "I",
            Bies::E => "E",
            Bies::S => "S",
        }
    }

    pub fn parse(s: &str) -> Option<Bies> {
        match s {
            "B" => Some(Bies::B),
            "I" => Some(Bies::I),
            "E" => Some(Bies::E),
            "S" => Some(Bies::S),
            _ => None,
        }
    }

    /// Reads the boundary component of a BIES or crossed (`B-NN`) tag name.
    pub fn from_tag_name(name: &str) -> Option<Bies> {
        let head = name.split_once('-').map_or(name, |(h, _)| h);
        Bies::parse(head)
    }
}

impl fmt::Display for Bies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which side of a bundled scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Bies,
    Crossed,
    Bundled,
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Bies,
    Crossed { pos: Vec<String> },
    Bundled { a: Box<TagScheme>, b: Box<TagScheme>, pairs: Vec<(usize, usize)> },
}

/// An ordered tag inventory.
#[derive(Debug, Clone)]
pub struct TagScheme {
    tags: Vec<String>,
    lookup: HashMap<String, usize>,
    layout: Layout,
}

impl PartialEq for TagScheme {
    fn eq(&self, other: &Self) -> bool {
        self.tags == other.tags && self.layout == other.layout
    }
}

/// Characters that are reserved inside tag names by the feature and file formats.
const RESERVED_IN_TAG: [char; 4] = ['|', '&', '>', '='];

fn check_tag_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Scheme("empty tag name".into()));
    }
    if name.chars().any(|c| c.is_whitespace() || RESERVED_IN_TAG.contains(&c)) {
        return Err(Error::Scheme(format!("tag name {name:?} contains a reserved character")));
    }
    Ok(())
}

impl TagScheme {
    fn build(tags: Vec<String>, layout: Layout) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(tags.len());
        for (i, t) in tags.iter().enumerate() {
            if lookup.insert(t.clone(), i).is_some() {
                return Err(Error::Scheme(format!("duplicate tag {t:?}")));
            }
        }
        Ok(TagScheme { tags, lookup, layout })
    }

    /// The four-tag `B I E S` scheme.
    pub fn bies() -> Self {
        let tags = Bies::ALL.iter().map(|b| b.as_str().to_string()).collect();
        Self::build(tags, Layout::Bies).expect("BIES tags are distinct")
    }

    /// Crosses `base` (which must be BIES) with a POS inventory. Tags are
    /// ordered BIES-major: `B-p1, B-p2, ..., I-p1, ...`.
    pub fn cross(base: &TagScheme, pos_inventory: &[String]) -> Result<Self> {
        if base.kind() != SchemeKind::Bies {
            return Err(Error::Scheme("only a BIES scheme can be crossed with POS labels".into()));
        }
        if pos_inventory.is_empty() {
            return Err(Error::Scheme("empty POS inventory".into()));
        }
        let mut seen = BTreeSet::new();
        for p in pos_inventory {
            check_tag_name(p)?;
            if p.contains('-') {
                // the first '-' separates the boundary part; labels may not contain it
                return Err(Error::Scheme(format!("POS label {p:?} contains '-'")));
            }
            if !seen.insert(p.as_str()) {
                return Err(Error::Scheme(format!("duplicate POS label {p:?}")));
            }
        }
        let tags = base.tags.iter().flat_map(|b| pos_inventory.iter().map(move |p| format!("{b}-{p}"))).collect();
        Self::build(tags, Layout::Crossed { pos: pos_inventory.to_vec() })
    }

    /// A product scheme over `pairs`, which must be sorted A-major.
    pub(crate) fn bundled(a: &TagScheme, b: &TagScheme, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if a.kind() == SchemeKind::Bundled || b.kind() == SchemeKind::Bundled {
            return Err(Error::Scheme("bundled schemes cannot be nested".into()));
        }
        let tags = pairs.iter().map(|&(x, y)| format!("{}&{}", a.name(x), b.name(y))).collect();
        Self::build(tags, Layout::Bundled { a: Box::new(a.clone()), b: Box::new(b.clone()), pairs })
    }

    /// A scheme read back from its tag names (used by the model format).
    pub(crate) fn from_parts(kind: SchemeKind, pos: Option<Vec<String>>) -> Result<Self> {
        match kind {
            SchemeKind::Bies => Ok(Self::bies()),
            SchemeKind::Crossed => Self::cross(&Self::bies(), &pos.unwrap_or_default()),
            SchemeKind::Bundled => Err(Error::Scheme("bundled schemes need both sides".into())),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self.layout {
            Layout::Bies => SchemeKind::Bies,
            Layout::Crossed { .. } => SchemeKind::Crossed,
            Layout::Bundled { .. } => SchemeKind::Bundled,
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn name(&self, tag: usize) -> &str {
        &self.tags[tag]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn pos_inventory(&self) -> Option<&[String]> {
        match &self.layout {
            Layout::Crossed { pos } => Some(pos),
            _ => None,
        }
    }

    /// Returns the side schemes and allowed pairs of a bundled scheme.
    pub fn bundle_parts(&self) -> Option<(&TagScheme, &TagScheme, &[(usize, usize)])> {
        match &self.layout {
            Layout::Bundled { a, b, pairs } => Some((a, b, pairs)),
            _ => None,
        }
    }

    pub fn side(&self, side: Side) -> Option<&TagScheme> {
        self.bundle_parts().map(|(a, b, _)| match side {
            Side::A => a,
            Side::B => b,
        })
    }

    /// Projects a bundled tag onto one side.
    pub fn project(&self, tag: usize, side: Side) -> Option<usize> {
        self.bundle_parts().map(|(_, _, pairs)| match side {
            Side::A => pairs[tag].0,
            Side::B => pairs[tag].1,
        })
    }

    /// The boundary component of a tag. Bundled tags use their A side.
    pub fn boundary(&self, tag: usize) -> Bies {
        match &self.layout {
            Layout::Bies => Bies::ALL[tag],
            Layout::Crossed { pos } => Bies::ALL[tag / pos.len()],
            Layout::Bundled { a, pairs, .. } => a.boundary(pairs[tag].0),
        }
    }

    /// The POS component of a crossed tag.
    pub fn pos_label(&self, tag: usize) -> Option<&str> {
        match &self.layout {
            Layout::Crossed { pos } => Some(&pos[tag % pos.len()]),
            Layout::Bundled { a, pairs, .. } => a.pos_label(pairs[tag].0),
            Layout::Bies => None,
        }
    }

    /// Finds the tag with the given boundary and (for crossed schemes) POS label.
    pub fn compose(&self, boundary: Bies, pos: Option<&str>) -> Option<usize> {
        match (&self.layout, pos) {
            (Layout::Bies, None) => Some(boundary.index()),
            (Layout::Crossed { pos: inv }, Some(p)) => {
                inv.iter().position(|x| x == p).map(|j| boundary.index() * inv.len() + j)
            }
            _ => None,
        }
    }

    pub fn boundaries(&self, tags: &[usize]) -> Vec<Bies> {
        tags.iter().map(|&t| self.boundary(t)).collect()
    }
}

/// Builds the crossed BIES × POS scheme.
pub fn cross_scheme(base: &TagScheme, pos_inventory: &[String]) -> Result<TagScheme> {
    TagScheme::cross(base, pos_inventory)
}

/// A non-empty sequence of non-whitespace characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence(Vec<char>);

impl Sentence {
    pub fn new(text: &str) -> Result<Self> {
        Self::from_chars(text.chars().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::Invalid("empty sentence".into()));
        }
        if let Some(c) = chars.iter().find(|c| c.is_whitespace()) {
            return Err(Error::Invalid(format!("sentence contains whitespace {c:?}")));
        }
        Ok(Sentence(chars))
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{c}"))
    }
}

/// A sentence with a non-empty set of allowed tags at every position.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    labels: Vec<Vec<usize>>,
}

impl LabeledSentence {
    /// Sets are sorted and deduplicated; every index must be valid in `scheme`.
    pub fn new(sentence: Sentence, labels: Vec<Vec<usize>>, scheme: &TagScheme) -> Result<Self> {
        if labels.len() != sentence.len() {
            return Err(Error::Mismatch(format!(
                "{} label sets for a sentence of {} characters",
                labels.len(),
                sentence.len()
            )));
        }
        let mut norm = Vec::with_capacity(labels.len());
        for (i, mut set) in labels.into_iter().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::Invalid(format!("empty label set at position {i}")));
            }
            if let Some(&bad) = set.iter().find(|&&t| t >= scheme.len()) {
                return Err(Error::Invalid(format!("tag index {bad} outside a scheme of {} tags", scheme.len())));
            }
            norm.push(set);
        }
        Ok(LabeledSentence { sentence, labels: norm })
    }

    pub fn from_tags(sentence: Sentence, tags: &[usize], scheme: &TagScheme) -> Result<Self> {
        Self::new(sentence, tags.iter().map(|&t| vec![t]).collect(), scheme)
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_fully_supervised(&self) -> bool {
        self.labels.iter().all(|s| s.len() == 1)
    }

    /// The gold tag sequence, if every set is a singleton.
    pub fn gold_tags(&self) -> Option<Vec<usize>> {
        self.labels.iter().map(|s| if s.len() == 1 { Some(s[0]) } else { None }).collect()
    }
}

/// Half-open character spans that tile `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanSegmentation {
    spans: Vec<(usize, usize)>,
}

impl SpanSegmentation {
    pub fn new(spans: Vec<(usize, usize)>, len: usize) -> Result<Self> {
        let mut cursor = 0;
        for &(s, e) in &spans {
            if s != cursor || e <= s {
                return Err(Error::Invalid(format!("span ({s},{e}) breaks the tiling at {cursor}")));
            }
            cursor = e;
        }
        if cursor != len {
            return Err(Error::Invalid(format!("spans cover {cursor} of {len} characters")));
        }
        Ok(SpanSegmentation { spans })
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.last().map_or(0, |s| s.1)
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn words(&self, sentence: &Sentence) -> Vec<String> {
        self.spans.iter().map(|&(s, e)| sentence.chars()[s..e].iter().collect()).collect()
    }
}

/// Decodes boundary tags into spans. Ill-formed input is repaired by closing
/// a word before every `B`/`S` and after every `E`/`S`.
pub fn tags_to_spans(tags: &[Bies]) -> SpanSegmentation {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, &t) in tags.iter().enumerate() {
        if matches!(t, Bies::B | Bies::S) && i > start {
            spans.push((start, i));
            start = i;
        }
        if matches!(t, Bies::E | Bies::S) {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < tags.len() {
        spans.push((start, tags.len()));
    }
    SpanSegmentation { spans }
}

pub fn spans_to_tags(seg: &SpanSegmentation) -> Vec<Bies> {
    let mut tags = Vec::with_capacity(seg.len());
    for &(s, e) in seg.spans() {
        match e - s {
            1 => tags.push(Bies::S),
            l => {
                tags.push(Bies::B);
                tags.extend(std::iter::repeat_n(Bies::I, l - 2));
                tags.push(Bies::E);
            }
        }
    }
    tags
}

/// True when decoding `tags` needs no repair.
pub fn is_well_formed(tags: &[Bies]) -> bool {
    let mut inside = false;
    for &t in tags {
        match (inside, t) {
            (false, Bies::B) | (true, Bies::E) => inside = !inside,
            (false, Bies::S) | (true, Bies::I) => {}
            _ => return false,
        }
    }
    !inside
}

/// Coarse character classes used by the type templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharType {
    Time,
    Number,
    Punctuation,
    Special,
    Else,
}

impl CharType {
    pub fn as_str(self) -> &'static str {
        match self {
            CharType::Time => "time",
            CharType::Number => "number",
            CharType::Punctuation => "punct",
            CharType::Special => "special",
            CharType::Else => "else",
        }
    }
}

const TIME_CHARS: &str = "年月日时分秒";
const CJK_NUMERALS: &str = "〇一二三四五六七八九十百千万亿两";

pub fn classify_char_type(c: char) -> CharType {
    use GeneralCategory::*;
    if TIME_CHARS.contains(c) {
        return CharType::Time;
    }
    if c.is_ascii_digit() || ('０'..='９').contains(&c) || CJK_NUMERALS.contains(c) {
        return CharType::Number;
    }
    if c == '@' || c == '#' {
        return CharType::Special;
    }
    match get_general_category(c) {
        ConnectorPunctuation | DashPunctuation | OpenPunctuation | ClosePunctuation | InitialPunctuation
        | FinalPunctuation | OtherPunctuation => CharType::Punctuation,
        MathSymbol | CurrencySymbol | ModifierSymbol | OtherSymbol => CharType::Special,
        _ => CharType::Else,
    }
}

/// A named collection of sentences labeled against one scheme.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub sentences: Vec<LabeledSentence>,
    pub scheme: TagScheme,
    /// Blank lines skipped while reading.
    pub skipped_lines: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, scheme: TagScheme, sentences: Vec<LabeledSentence>) -> Self {
        Dataset { name: name.into(), sentences, scheme, skipped_lines: 0 }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Keeps the first `n` sentences.
    pub fn truncated(&self, n: usize) -> Dataset {
        Dataset {
            name: self.name.clone(),
            sentences: self.sentences.iter().take(n).cloned().collect(),
            scheme: self.scheme.clone(),
            skipped_lines: self.skipped_lines,
        }
    }
}

/// A word with its optional POS label, as written in a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub word: &'a str,
    pub pos: Option<&'a str>,
}

fn split_token<'a>(token: &'a str, joint: bool) -> std::result::Result<Token<'a>, String> {
    if !joint {
        return Ok(Token { word: token, pos: None });
    }
    match token.rsplit_once('_') {
        Some((w, p)) if !w.is_empty() && !p.is_empty() => Ok(Token { word: w, pos: Some(p) }),
        Some(("", _)) => Err(format!("empty word in token {token:?}")),
        _ => Err(format!("missing POS label in token {token:?}")),
    }
}

/// Parses one segmented line against `scheme`.
pub fn parse_segmented_line(line: &str, scheme: &TagScheme) -> std::result::Result<LabeledSentence, String> {
    let joint = match scheme.kind() {
        SchemeKind::Bies => false,
        SchemeKind::Crossed => true,
        SchemeKind::Bundled => return Err("cannot read a corpus directly into a bundled scheme".into()),
    };
    let mut chars = Vec::new();
    let mut tags = Vec::new();
    for token in line.split_ascii_whitespace() {
        let Token { word, pos } = split_token(token, joint)?;
        let wchars: Vec<char> = word.chars().collect();
        if let Some(c) = wchars.iter().find(|c| c.is_whitespace()) {
            return Err(format!("word {word:?} contains whitespace {c:?}"));
        }
        let len = wchars.len();
        for k in 0..len {
            let b = match (len, k) {
                (1, _) => Bies::S,
                (_, 0) => Bies::B,
                (_, k) if k + 1 == len => Bies::E,
                _ => Bies::I,
            };
            let tag = scheme
                .compose(b, pos)
                .ok_or_else(|| format!("POS label {:?} is not in the inventory", pos.unwrap_or("")))?;
            tags.push(tag);
        }
        chars.extend(wchars);
    }
    let sentence = Sentence::from_chars(chars).map_err(|e| e.to_string())?;
    LabeledSentence::from_tags(sentence, &tags, scheme).map_err(|e| e.to_string())
}

/// Parses a whole segmented corpus. `origin` names the source in errors.
pub fn parse_segmented_corpus(text: &str, scheme: &TagScheme, origin: &str) -> Result<Dataset> {
    let mut sentences = Vec::new();
    let mut skipped = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            skipped += 1;
            continue;
        }
        let s = parse_segmented_line(line, scheme).map_err(|m| Error::parse(origin, lineno + 1, m))?;
        sentences.push(s);
    }
    Ok(Dataset { name: origin.to_string(), sentences, scheme: scheme.clone(), skipped_lines: skipped })
}

pub fn read_segmented_corpus(path: impl AsRef<Path>, scheme: &TagScheme) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_utf8(path)?;
    let mut ds = parse_segmented_corpus(&text, scheme, &path.display().to_string())?;
    ds.name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(ds)
}

/// Collects the sorted set of POS labels used in a joint corpus.
pub fn collect_pos_inventory(text: &str, origin: &str) -> Result<Vec<String>> {
    let mut inv = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        for token in line.split_ascii_whitespace() {
            let t = split_token(token, true).map_err(|m| Error::parse(origin, lineno + 1, m))?;
            inv.insert(t.pos.unwrap_or_default().to_string());
        }
    }
    Ok(inv.into_iter().collect())
}

/// Renders one sentence as a segmented line. Crossed schemes emit `word_POS`
/// using the POS of each word's first character.
pub fn format_segmented_line(sentence: &Sentence, tags: &[usize], scheme: &TagScheme) -> String {
    let seg = tags_to_spans(&scheme.boundaries(tags));
    let words = seg.words(sentence);
    let mut out = String::new();
    for (w, &(s, _)) in words.iter().zip(seg.spans()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
        if scheme.kind() == SchemeKind::Crossed {
            if let Some(p) = scheme.pos_label(tags[s]) {
                out.push('_');
                out.push_str(p);
            }
        }
    }
    out
}

/// Writes every fully supervised sentence of `ds`, one per line.
pub fn format_segmented_corpus(ds: &Dataset) -> Result<String> {
    let mut out = String::new();
    for (i, s) in ds.sentences.iter().enumerate() {
        let tags = s.gold_tags().ok_or_else(|| Error::Invalid(format!("sentence {} is ambiguously labeled", i + 1)))?;
        out.push_str(&format_segmented_line(&s.sentence, &tags, &ds.scheme));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_segmented_corpus(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_segmented_corpus(ds)?).map_err(|e| Error::io(path, e))
}

/// Parses the tag-file format: space-separated tag names, one sentence per line.
pub fn parse_tag_file(text: &str, scheme: &TagScheme, origin: &str) -> Result<Vec<Vec<usize>>> {
    text.lines()
        .enumerate()
        .map(|(lineno, line)| {
            line.split_ascii_whitespace()
                .map(|name| {
                    scheme
                        .index_of(name)
                        .ok_or_else(|| Error::parse(origin, lineno + 1, format!("unknown tag {name:?}")))
                })
                .collect()
        })
        .collect()
}

pub fn format_tag_line(tags: &[usize], scheme: &TagScheme) -> String {
    tags.iter().map(|&t| scheme.name(t)).collect::<Vec<_>>().join(" ")
}

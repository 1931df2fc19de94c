//! Bundled tag spaces over two annotation standards, one-side label expansion
//! and annotation conversion by constrained decoding.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Dataset, LabeledSentence, SchemeKind, Side, TagScheme};
use crate::crf::{CrfModel, Extras};
use crate::error::{read_utf8, Error, Result};
use crate::lexicon::Lexicon;

/// Allowed `(A tag, B tag)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMapping {
    a_len: usize,
    b_len: usize,
    pairs: BTreeSet<(usize, usize)>,
}

impl TagMapping {
    /// Every A tag paired with every B tag.
    pub fn full(a: &TagScheme, b: &TagScheme) -> Self {
        let pairs = (0..a.len()).flat_map(|x| (0..b.len()).map(move |y| (x, y))).collect();
        TagMapping { a_len: a.len(), b_len: b.len(), pairs }
    }

    /// Pairs tags with identical names.
    pub fn identity(a: &TagScheme, b: &TagScheme) -> Self {
        let pairs = a.tags().iter().enumerate().filter_map(|(x, name)| b.index_of(name).map(|y| (x, y))).collect();
        TagMapping { a_len: a.len(), b_len: b.len(), pairs }
    }

    pub fn from_pairs(a: &TagScheme, b: &TagScheme, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= a.len() || y >= b.len()) {
            return Err(Error::Invalid(format!("mapping pair ({x}, {y}) is out of range")));
        }
        Ok(TagMapping { a_len: a.len(), b_len: b.len(), pairs })
    }

    /// Parses `tagA<TAB>tagB` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, a: &TagScheme, b: &TagScheme, origin: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::parse(origin, lineno + 1, m);
            let (x, y) = line.split_once('\t').ok_or_else(|| err("expected tagA<TAB>tagB".into()))?;
            let x = a.index_of(x.trim()).ok_or_else(|| err(format!("unknown side-A tag {x:?}")))?;
            let y = b.index_of(y.trim()).ok_or_else(|| err(format!("unknown side-B tag {y:?}")))?;
            pairs.push((x, y));
        }
        Self::from_pairs(a, b, pairs)
    }

    pub fn load(path: impl AsRef<Path>, a: &TagScheme, b: &TagScheme) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_utf8(path)?, a, b, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }
}

/// Builds the bundled scheme over the mapping's pairs, ordered A-major.
pub fn bundle(a: &TagScheme, b: &TagScheme, mapping: &TagMapping) -> Result<TagScheme> {
    if mapping.a_len != a.len() || mapping.b_len != b.len() {
        return Err(Error::Mismatch(format!(
            "mapping is over {}x{} tags but the schemes have {}x{}",
            mapping.a_len,
            mapping.b_len,
            a.len(),
            b.len()
        )));
    }
    if let Some(x) = (0..a.len()).find(|&x| !mapping.pairs.iter().any(|p| p.0 == x)) {
        return Err(Error::Invalid(format!("side-A tag {:?} has no mapped side-B tag", a.name(x))));
    }
    if let Some(y) = (0..b.len()).find(|&y| !mapping.pairs.iter().any(|p| p.1 == y)) {
        return Err(Error::Invalid(format!("side-B tag {:?} has no mapped side-A tag", b.name(y))));
    }
    TagScheme::bundled(a, b, mapping.pairs.iter().copied().collect())
}

fn bundle_parts(bundled: &TagScheme) -> Result<(&TagScheme, &TagScheme, &[(usize, usize)])> {
    bundled.bundle_parts().ok_or_else(|| Error::Mismatch("expected a bundled tag scheme".into()))
}

/// Bundled tags whose projection onto `side` is `tag`.
pub fn preimage(bundled: &TagScheme, side: Side, tag: usize) -> Result<Vec<usize>> {
    let (a, b, pairs) = bundle_parts(bundled)?;
    let side_len = match side {
        Side::A => a.len(),
        Side::B => b.len(),
    };
    if tag >= side_len {
        return Err(Error::Invalid(format!("tag index {tag} is outside side {side:?}")));
    }
    Ok(pairs
        .iter()
        .enumerate()
        .filter(|(_, &(x, y))| match side {
            Side::A => x == tag,
            Side::B => y == tag,
        })
        .map(|(i, _)| i)
        .collect())
}

/// Turns one-side gold tags into allowed bundled-tag sets.
pub fn expand_one_side(tags: &[usize], side: Side, bundled: &TagScheme) -> Result<Vec<Vec<usize>>> {
    tags.iter().map(|&t| preimage(bundled, side, t)).collect()
}

/// Singleton bundled sets for a sentence annotated on both sides.
pub fn bundle_both_sides(a_tags: &[usize], b_tags: &[usize], bundled: &TagScheme) -> Result<Vec<Vec<usize>>> {
    let (a, b, pairs) = bundle_parts(bundled)?;
    if a_tags.len() != b_tags.len() {
        return Err(Error::Mismatch("side annotations differ in length".into()));
    }
    a_tags
        .iter()
        .zip(b_tags)
        .map(|(&x, &y)| {
            pairs.iter().position(|&p| p == (x, y)).map(|i| vec![i]).ok_or_else(|| {
                let name = |s: &TagScheme, t: usize| s.tags().get(t).cloned().unwrap_or_else(|| t.to_string());
                Error::Invalid(format!("pair {}&{} is not in the mapping", name(a, x), name(b, y)))
            })
        })
        .collect()
}

/// Relabels a one-side dataset into the bundled scheme with ambiguity sets.
/// Sentences that are already ambiguous take the union of preimages.
pub fn expand_dataset(ds: &Dataset, side: Side, bundled: &TagScheme) -> Result<Dataset> {
    let side_scheme = bundled.side(side).ok_or_else(|| Error::Mismatch("expected a bundled tag scheme".into()))?;
    if *side_scheme != ds.scheme {
        return Err(Error::Mismatch(format!("dataset {:?} is not labeled in the side-{side:?} scheme", ds.name)));
    }
    let mut sentences = Vec::with_capacity(ds.len());
    for s in &ds.sentences {
        let mut labels = Vec::with_capacity(s.len());
        for set in s.labels() {
            let mut out = Vec::new();
            for &t in set {
                out.extend(preimage(bundled, side, t)?);
            }
            labels.push(out);
        }
        sentences.push(LabeledSentence::new(s.sentence.clone(), labels, bundled)?);
    }
    let mut out = Dataset::new(ds.name.clone(), bundled.clone(), sentences);
    out.skipped_lines = ds.skipped_lines;
    Ok(out)
}

/// Projects bundled tags onto one side.
pub fn project_tags(bundled: &TagScheme, tags: &[usize], side: Side) -> Result<Vec<usize>> {
    tags.iter()
        .map(|&t| bundled.project(t, side).ok_or_else(|| Error::Mismatch("expected a bundled tag scheme".into())))
        .collect()
}

/// Outcome of converting a side-B dataset to side A.
#[derive(Debug, Clone)]
pub struct Conversion {
    /// Kept sentences, labeled in the side-A scheme.
    pub dataset: Dataset,
    /// Input indices of kept sentences, in order.
    pub kept: Vec<usize>,
    /// Input indices of dropped sentences, in order.
    pub dropped: Vec<usize>,
    /// Per input sentence, the lowest per-character best marginal.
    pub confidence: Vec<f64>,
}

impl Conversion {
    pub fn report(&self) -> String {
        format!(
            "kept {} dropped {} total {}\n",
            self.kept.len(),
            self.dropped.len(),
            self.kept.len() + self.dropped.len()
        )
    }
}

/// Decodes one sentence with side-B tags fixed. Returns the side-A tags and
/// the lowest over positions of the best constrained marginal.
pub fn convert_sentence(
    model: &CrfModel,
    sentence: &LabeledSentence,
    lexicon: Option<&Lexicon>,
) -> Result<(Vec<usize>, f64)> {
    let bundled = model.scheme();
    let mut constraints = Vec::with_capacity(sentence.len());
    for set in sentence.labels() {
        let mut out = Vec::new();
        for &t in set {
            out.extend(preimage(bundled, Side::B, t)?);
        }
        out.sort_unstable();
        constraints.push(out);
    }
    let lat = model.build_lattice(&sentence.sentence, &Extras::with_lexicon(lexicon), Some(&constraints))?;
    let confidence =
        lat.marginals().iter().map(|row| row.iter().copied().fold(0.0, f64::max)).fold(f64::INFINITY, f64::min);
    let (path, _) = lat.viterbi();
    Ok((project_tags(bundled, &path, Side::A)?, confidence))
}

/// Converts a side-B dataset into side A, dropping sentences whose confidence
/// falls below `threshold`. Runs on the current rayon pool; output order
/// follows the input.
pub fn convert_annotations(
    model: &CrfModel,
    ds: &Dataset,
    threshold: f64,
    lexicon: Option<&Lexicon>,
) -> Result<Conversion> {
    let bundled = model.scheme();
    if bundled.kind() != SchemeKind::Bundled {
        return Err(Error::Mismatch("annotation conversion needs a coupled model".into()));
    }
    let (a, b, _) = bundle_parts(bundled)?;
    if *b != ds.scheme {
        return Err(Error::Mismatch(format!("dataset {:?} is not labeled in the model's side-B scheme", ds.name)));
    }
    let results: Vec<(Vec<usize>, f64)> =
        ds.sentences.par_iter().map(|s| convert_sentence(model, s, lexicon)).collect::<Result<_>>()?;
    let mut sentences = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut confidence = Vec::with_capacity(results.len());
    for (i, (tags, conf)) in results.into_iter().enumerate() {
        confidence.push(conf);
        if conf < threshold {
            dropped.push(i);
        } else {
            kept.push(i);
            sentences.push(LabeledSentence::from_tags(ds.sentences[i].sentence.clone(), &tags, a)?);
        }
    }
    Ok(Conversion { dataset: Dataset::new(ds.name.clone(), a.clone(), sentences), kept, dropped, confidence })
}

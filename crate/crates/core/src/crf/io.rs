//! Text model format.
//!
//! ```text
//! SEGCRF 1
//! scheme <bies|crossed|bundled>
//! tags <count>
//! <tag name>...
//! [pos <count> / <label>...]            crossed schemes
//! [side a / <scheme block> / side b / <scheme block>]   bundled schemes
//! end
//! config
//! baseline <bool> / lexicon <bool> / guide <bool> / lexicon_cap <n> / cutoff <n>
//! [meta <key> <value>]...
//! end
//! features <count>
//! <label>|<attribute>\t<weight>...
//! ```
//!
//! Weights use Rust's shortest round-trip decimal formatting, so loading
//! reproduces every score bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::CrfModel;
use crate::corpus::{SchemeKind, TagScheme};
use crate::error::{read_utf8, Error, Result};
use crate::features::{FeatureIndex, TemplateConfig};

const HEADER: &str = "SEGCRF 1";

fn write_scheme(out: &mut String, scheme: &TagScheme) {
    let kind = match scheme.kind() {
        SchemeKind::Bies => "bies",
        SchemeKind::Crossed => "crossed",
        SchemeKind::Bundled => "bundled",
    };
    let _ = writeln!(out, "scheme {kind}");
    let _ = writeln!(out, "tags {}", scheme.len());
    for t in scheme.tags() {
        let _ = writeln!(out, "{t}");
    }
    if let Some(pos) = scheme.pos_inventory() {
        let _ = writeln!(out, "pos {}", pos.len());
        for p in pos {
            let _ = writeln!(out, "{p}");
        }
    }
    if let Some((a, b, _)) = scheme.bundle_parts() {
        out.push_str("side a\n");
        write_scheme(out, a);
        out.push_str("side b\n");
        write_scheme(out, b);
    }
    out.push_str("end\n");
}

impl CrfModel {
    /// Serializes the model; identical models produce identical bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        write_scheme(&mut out, self.scheme());
        let c = self.config();
        out.push_str("config\n");
        let _ = writeln!(out, "baseline {}", c.baseline);
        let _ = writeln!(out, "lexicon {}", c.lexicon);
        let _ = writeln!(out, "guide {}", c.guide);
        let _ = writeln!(out, "lexicon_cap {}", c.lexicon_cap);
        let _ = writeln!(out, "cutoff {}", c.cutoff);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        out.push_str("end\n");
        let _ = writeln!(out, "features {}", self.index().len());
        for (id, w) in self.weights().iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", self.index().feature_string(id as u32), w);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&read_utf8(path.as_ref())?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines { inner: text.lines().enumerate() };
        if lines.next()?.1 != HEADER {
            return Err(Error::Model(format!("missing {HEADER:?} header")));
        }
        let scheme = read_scheme(&mut lines)?;
        let (lineno, line) = lines.next()?;
        if line != "config" {
            return Err(bad(lineno, "expected config block"));
        }
        let mut config = TemplateConfig::default();
        let mut meta = BTreeMap::new();
        loop {
            let (lineno, line) = lines.next()?;
            if line == "end" {
                break;
            }
            let (key, value) = line.split_once(' ').ok_or_else(|| bad(lineno, "expected key and value"))?;
            let flag = || value.parse::<bool>().map_err(|_| bad(lineno, "expected true or false"));
            let num = || value.parse::<usize>().map_err(|_| bad(lineno, "expected an integer"));
            match key {
                "baseline" => config.baseline = flag()?,
                "lexicon" => config.lexicon = flag()?,
                "guide" => config.guide = flag()?,
                "lexicon_cap" => config.lexicon_cap = num()?,
                "cutoff" => config.cutoff = num()?,
                "meta" => {
                    let (k, v) = value.split_once(' ').unwrap_or((value, ""));
                    meta.insert(k.to_string(), v.to_string());
                }
                other => return Err(bad(lineno, &format!("unknown config key {other:?}"))),
            }
        }
        let (lineno, line) = lines.next()?;
        let count = line
            .strip_prefix("features ")
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| bad(lineno, "expected feature count"))?;
        let mut index = FeatureIndex::empty(config.cutoff);
        let mut weights = Vec::with_capacity(count);
        for _ in 0..count {
            let (lineno, line) = lines.next()?;
            let (feature, weight) = line.rsplit_once('\t').ok_or_else(|| bad(lineno, "expected feature<TAB>weight"))?;
            let (key, attr) = feature.split_once('|').ok_or_else(|| bad(lineno, "feature lacks a label"))?;
            let w: f64 = weight.parse().map_err(|_| bad(lineno, "invalid weight"))?;
            if index.push(attr, key) as usize != weights.len() {
                return Err(bad(lineno, "duplicate feature"));
            }
            weights.push(w);
        }
        if let Some((lineno, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
            return Err(bad(lineno, "trailing content after features"));
        }
        let mut model = CrfModel::with_weights(scheme, config, index, weights)?;
        model.meta = meta;
        Ok(model)
    }
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.inner.next().map(|(i, l)| (i + 1, l)).ok_or_else(|| Error::Model("unexpected end of file".into()))
    }
}

fn bad(lineno: usize, msg: &str) -> Error {
    Error::Model(format!("line {lineno}: {msg}"))
}

fn read_list<'a, I: Iterator<Item = (usize, &'a str)>>(lines: &mut Lines<'a, I>, prefix: &str) -> Result<Vec<String>> {
    let (lineno, line) = lines.next()?;
    let count = line
        .strip_prefix(prefix)
        .and_then(|c| c.trim().parse::<usize>().ok())
        .ok_or_else(|| bad(lineno, &format!("expected {prefix}<count>")))?;
    (0..count).map(|_| lines.next().map(|(_, l)| l.to_string())).collect()
}

fn read_scheme<'a, I: Iterator<Item = (usize, &'a str)>>(lines: &mut Lines<'a, I>) -> Result<TagScheme> {
    let (lineno, line) = lines.next()?;
    let kind = match line.strip_prefix("scheme ") {
        Some("bies") => SchemeKind::Bies,
        Some("crossed") => SchemeKind::Crossed,
        Some("bundled") => SchemeKind::Bundled,
        _ => return Err(bad(lineno, "expected scheme kind")),
    };
    let tags = read_list(lines, "tags ")?;
    let scheme = match kind {
        SchemeKind::Bies => TagScheme::from_parts(kind, None)?,
        SchemeKind::Crossed => TagScheme::from_parts(kind, Some(read_list(lines, "pos ")?))?,
        SchemeKind::Bundled => {
            let mut sides = Vec::new();
            for name in ["side a", "side b"] {
                let (lineno, line) = lines.next()?;
                if line != name {
                    return Err(bad(lineno, &format!("expected {name:?}")));
                }
                sides.push(read_scheme(lines)?);
            }
            let mut pairs = Vec::with_capacity(tags.len());
            for t in &tags {
                let (x, y) = t.split_once('&').ok_or_else(|| Error::Model(format!("bundled tag {t:?} lacks '&'")))?;
                let pair = sides[0].index_of(x).zip(sides[1].index_of(y));
                pairs.push(pair.ok_or_else(|| Error::Model(format!("bundled tag {t:?} names unknown tags")))?);
            }
            TagScheme::bundled(&sides[0], &sides[1], pairs)?
        }
    };
    if scheme.tags() != tags.as_slice() {
        return Err(Error::Model("tag list does not match the scheme".into()));
    }
    let (lineno, line) = lines.next()?;
    if line != "end" {
        return Err(bad(lineno, "expected end of scheme block"));
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_segmented_line, LabeledSentence};
    use crate::crf::Extras;
    use crate::features::{build_index, SentenceContext};

    fn trained_like(scheme: TagScheme, lines: &[&str]) -> CrfModel {
        let data: Vec<LabeledSentence> = lines.iter().map(|l| parse_segmented_line(l, &scheme).unwrap()).collect();
        let ctxs: Vec<SentenceContext> =
            data.iter().map(|s| SentenceContext::new(s.sentence.chars(), None, None).unwrap()).collect();
        let cfg = TemplateConfig::default();
        let index = build_index(&scheme, cfg, ctxs.iter().zip(&data).map(|(c, s)| (c, s.labels()))).unwrap();
        let mut m = CrfModel::new(scheme, cfg, index);
        for (i, w) in m.weights_mut().iter_mut().enumerate() {
            *w = ((i * 7919) % 1000) as f64 / 997.0 - 0.5 + 1e-17 * i as f64;
        }
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = trained_like(TagScheme::bies(), &["AB C", "C| A_B"]);
        let text = m.to_text();
        let back = CrfModel::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        let x = crate::corpus::Sentence::new("ABC|A_B").unwrap();
        let a = m.build_lattice(&x, &Extras::none(), None).unwrap();
        let b = back.build_lattice(&x, &Extras::none(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn crossed_scheme_round_trip() {
        let s = TagScheme::cross(&TagScheme::bies(), &["NN".into(), "VV".into()]).unwrap();
        let mut m = trained_like(s, &["A_NN BC_VV"]);
        m.meta.insert("source_model".into(), "x.source".into());
        let back = CrfModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back.scheme(), m.scheme());
        assert_eq!(back.meta, m.meta);
    }

    #[test]
    fn rejects_garbage() {
        assert!(CrfModel::from_text("").is_err());
        assert!(CrfModel::from_text("SEGCRF 2\n").is_err());
        let m = trained_like(TagScheme::bies(), &["AB"]);
        let text = m.to_text();
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(CrfModel::from_text(&truncated).is_err());
        assert!(CrfModel::from_text(&text.replace("lexicon_cap", "lexicon_max")).is_err());
    }
}

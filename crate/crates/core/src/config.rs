//! Training configuration files: flat `key = value` lines with `#` comments.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `pipeline` | `baseline` | `baseline`, `lexicon`, `guide` or `coupled` |
//! | `train` | required | training corpus (the target / side-A corpus for guide and coupled) |
//! | `format` | `ws` | `ws` (words) or `ws_pos` (`word_POS`) for `train` and `dev` |
//! | `dev` | none | held-out corpus used to pick the best iteration |
//! | `source` | required for guide/coupled | comma-separated source / side-B corpora |
//! | `source_format` | `ws` | format of the `source` corpora |
//! | `baseline` | `true` | character templates |
//! | `lexicon` | `false` (`true` for the lexicon pipeline) | lexicon templates |
//! | `guide` | set by the pipeline | guide templates; only valid with `pipeline = guide` |
//! | `lexicon_path` | none | word list, one word per line |
//! | `lexicon_cap` | `6` | lexicon lengths above this render as `<cap>+` |
//! | `cutoff` | `1` | minimum feature count |
//! | `mapping` | full product | `tagA<TAB>tagB` pairs for coupled models |
//! | `sample_count` | `5000` when corpora are combined | sentences drawn per corpus per iteration |
//! | `iterations`, `eta0`, `lambda`, `seed` | `20`, `0.1`, `1e-4`, `0` | optimizer settings |
//! | `output` | required | model path (guide pipelines also write `<output>.source`) |
//! | `log` | `<output>.log` | training log path |
//! | `threads` | `1` | worker threads |
//!
//! Relative paths are resolved against the configuration file's directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::crf::TrainConfig;
use crate::error::{read_utf8, Error, Result};
use crate::features::TemplateConfig;
use crate::pipelines::PipelineConfig;

const KEYS: &[&str] = &[
    "pipeline",
    "train",
    "format",
    "dev",
    "source",
    "source_format",
    "baseline",
    "lexicon",
    "guide",
    "lexicon_path",
    "lexicon_cap",
    "cutoff",
    "mapping",
    "sample_count",
    "iterations",
    "eta0",
    "lambda",
    "seed",
    "output",
    "log",
    "threads",
];

const PATH_KEYS: &[&str] = &["train", "dev", "source", "lexicon_path", "mapping", "output", "log"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Baseline,
    Lexicon,
    Guide,
    Coupled,
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(Pipeline::Baseline),
            "lexicon" => Ok(Pipeline::Lexicon),
            "guide" => Ok(Pipeline::Guide),
            "coupled" => Ok(Pipeline::Coupled),
            other => Err(format!("unknown pipeline {other:?}")),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Baseline => "baseline",
            Pipeline::Lexicon => "lexicon",
            Pipeline::Guide => "guide",
            Pipeline::Coupled => "coupled",
        })
    }
}

/// Corpus file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Words,
    WordsWithPos,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ws" => Ok(CorpusFormat::Words),
            "ws_pos" => Ok(CorpusFormat::WordsWithPos),
            other => Err(format!("unknown corpus format {other:?} (expected ws or ws_pos)")),
        }
    }
}

/// Key/value pairs as written, plus the directory relative paths resolve against.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg = RawConfig { entries: BTreeMap::new(), base_dir: base_dir.into() };
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Config(format!("{origin}:{}: {}", lineno + 1, strip(e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_utf8(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), dir)
    }

    /// Sets one key; unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown configuration key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override given on the command line. Relative
    /// paths in overrides are taken relative to the working directory.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) =
            spec.split_once('=').ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        if PATH_KEYS.contains(&k) {
            let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
            let joined = v.split(',').map(|p| cwd.join(p.trim()).display().to_string()).collect::<Vec<_>>().join(",");
            return self.set(k, &joined);
        }
        self.set(k, v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn typed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("{key}: invalid value {v:?}: {e}"))))
            .transpose()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base_dir.join(v))
    }

    fn paths(&self, key: &str) -> Vec<PathBuf> {
        self.get(key).map(|v| v.split(',').map(|p| self.base_dir.join(p.trim())).collect()).unwrap_or_default()
    }

    /// Renders the entries as `key = value` lines.
    pub fn echo(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// A validated training job.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    pub pipeline: Pipeline,
    pub train: PathBuf,
    pub format: CorpusFormat,
    pub dev: Option<PathBuf>,
    pub sources: Vec<PathBuf>,
    pub source_format: CorpusFormat,
    pub lexicon_path: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub settings: PipelineConfig,
    pub output: PathBuf,
    pub log: PathBuf,
    pub threads: usize,
}

impl TrainJob {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let pipeline: Pipeline = raw.typed("pipeline")?.unwrap_or(Pipeline::Baseline);
        let train = raw.path("train").ok_or_else(|| Error::Config("missing required key \"train\"".into()))?;
        let output = raw.path("output").ok_or_else(|| Error::Config("missing required key \"output\"".into()))?;
        let sources = raw.paths("source");
        if matches!(pipeline, Pipeline::Guide | Pipeline::Coupled) && sources.is_empty() {
            return Err(Error::Config(format!("pipeline {pipeline} needs \"source\" corpora")));
        }
        if matches!(pipeline, Pipeline::Baseline | Pipeline::Lexicon) && !sources.is_empty() {
            return Err(Error::Config(format!("pipeline {pipeline} does not use \"source\"")));
        }
        let guide: Option<bool> = raw.typed("guide")?;
        if guide.is_some_and(|g| g != (pipeline == Pipeline::Guide)) {
            return Err(Error::Config("\"guide\" templates are controlled by pipeline = guide".into()));
        }
        if pipeline != Pipeline::Coupled && raw.get("mapping").is_some() {
            return Err(Error::Config("\"mapping\" only applies to pipeline = coupled".into()));
        }
        let defaults = TemplateConfig::default();
        let templates = TemplateConfig {
            baseline: raw.typed("baseline")?.unwrap_or(defaults.baseline),
            lexicon: raw.typed("lexicon")?.unwrap_or(pipeline == Pipeline::Lexicon),
            guide: pipeline == Pipeline::Guide,
            lexicon_cap: raw.typed("lexicon_cap")?.unwrap_or(defaults.lexicon_cap),
            cutoff: raw.typed("cutoff")?.unwrap_or(defaults.cutoff),
        };
        if !templates.baseline && !templates.lexicon && !templates.guide {
            return Err(Error::Config("every template set is disabled".into()));
        }
        if templates.cutoff == 0 {
            return Err(Error::Config("cutoff must be at least 1".into()));
        }
        let lexicon_path = raw.path("lexicon_path");
        if templates.lexicon && lexicon_path.is_none() {
            return Err(Error::Config("lexicon features need \"lexicon_path\"".into()));
        }
        let td = TrainConfig::default();
        let train_cfg = TrainConfig {
            iterations: raw.typed("iterations")?.unwrap_or(td.iterations),
            eta0: raw.typed("eta0")?.unwrap_or(td.eta0),
            lambda: raw.typed("lambda")?.unwrap_or(td.lambda),
            seed: raw.typed("seed")?.unwrap_or(td.seed),
        };
        if train_cfg.iterations == 0 || !(train_cfg.eta0 > 0.0) || !(train_cfg.lambda >= 0.0) {
            return Err(Error::Config("iterations and eta0 must be positive, lambda non-negative".into()));
        }
        let sample_count: Option<usize> = raw.typed("sample_count")?;
        if sample_count == Some(0) {
            return Err(Error::Config("sample_count must be at least 1".into()));
        }
        let threads: usize = raw.typed("threads")?.unwrap_or(1);
        if threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let log = raw.path("log").unwrap_or_else(|| {
            let mut p = output.clone().into_os_string();
            p.push(".log");
            p.into()
        });
        Ok(TrainJob {
            pipeline,
            train,
            format: raw.typed("format")?.unwrap_or(CorpusFormat::Words),
            dev: raw.path("dev"),
            sources,
            source_format: raw.typed("source_format")?.unwrap_or(CorpusFormat::Words),
            lexicon_path,
            mapping: raw.path("mapping"),
            settings: PipelineConfig { templates, train: train_cfg, sample_count },
            output,
            log,
            threads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_defaults() {
        let raw = RawConfig::parse(
            "# demo\npipeline = lexicon\ntrain = a.txt # inline\nlexicon_path=words.txt\noutput = m\n",
            "cfg",
            "/data",
        )
        .unwrap();
        let job = TrainJob::from_raw(&raw).unwrap();
        assert_eq!(job.pipeline, Pipeline::Lexicon);
        assert_eq!(job.train, PathBuf::from("/data/a.txt"));
        assert!(job.settings.templates.lexicon);
        assert_eq!(job.settings.train, TrainConfig::default());
        assert_eq!(job.log, PathBuf::from("/data/m.log"));
        assert_eq!(job.threads, 1);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RawConfig::parse("train = a\nlearning_rate = 3\n", "cfg", "").unwrap_err().to_string();
        assert!(err.contains("learning_rate") && err.contains("cfg:2"), "{err}");
        let mut raw = RawConfig::default();
        assert!(raw.apply_override("bogus=1").unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn overrides_replace_values() {
        let mut raw = RawConfig::parse("train = a\noutput = m\nseed = 1\n", "cfg", "").unwrap();
        raw.apply_override("seed=7").unwrap();
        assert_eq!(TrainJob::from_raw(&raw).unwrap().settings.train.seed, 7);
    }

    #[test]
    fn inconsistent_jobs_are_rejected() {
        let job = |t: &str| TrainJob::from_raw(&RawConfig::parse(t, "cfg", "").unwrap());
        assert!(job("output = m\n").is_err());
        assert!(job("train = a\noutput = m\npipeline = coupled\n").is_err());
        assert!(job("train = a\noutput = m\nguide = true\n").is_err());
        assert!(job("train = a\noutput = m\nlexicon = true\n").is_err());
        assert!(job("train = a\noutput = m\niterations = x\n").is_err());
        assert!(job("train = a\noutput = m\npipeline = magic\n").is_err());
        assert!(job("train = a\noutput = m\npipeline = guide\nsource = b,c\n").unwrap().sources.len() == 2);
    }
}

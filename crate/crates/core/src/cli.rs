//! The `segcrf` command line: `train`, `tag`, `convert`, `ensemble`, `eval`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CorpusFormat, Pipeline, RawConfig, TrainJob};
use crate::corpus::{
    collect_pos_inventory, format_segmented_corpus, format_segmented_line, format_tag_line, parse_segmented_corpus,
    spans_to_tags, Bies, Dataset, Sentence, Side, SpanSegmentation, TagScheme,
};
use crate::coupled::{convert_annotations, TagMapping};
use crate::crf::{CrfModel, TrainLog};
use crate::ensemble::combine;
use crate::error::{read_utf8, Error, Result};
use crate::eval::score_segmented;
use crate::lexicon::Lexicon;
use crate::pipelines::{coupled_pipeline, guide_pipeline, train_single, GuideModel, Tagger};

#[derive(Debug, Parser)]
#[command(name = "segcrf", version, about = "CRF word segmentation: train, tag, convert, ensemble, eval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from a configuration file.
    Train(TrainArgs),
    /// Segment raw text, one sentence per line.
    Tag(TagArgs),
    /// Convert a side-B corpus to side A with a coupled model.
    Convert(ConvertArgs),
    /// Combine several outputs by voting and legal re-decoding.
    Ensemble(EnsembleArgs),
    /// Score a segmented corpus against gold.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set seed=7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    A,
    B,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::A => Side::A,
            SideArg::B => Side::B,
        }
    }
}

#[derive(Debug, Args)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Raw text; standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write space-separated tag names instead of words.
    #[arg(long)]
    emit_tags: bool,
    /// Which standard a coupled model reports.
    #[arg(long, value_enum)]
    side: Option<SideArg>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    model: PathBuf,
    /// Corpus segmented in the model's side-B standard.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the kept/dropped report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Outputs to combine; all must align line by line.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Inputs are tag files rather than segmented corpora.
    #[arg(long)]
    tags: bool,
    /// Segmented inputs use `word_POS` tokens.
    #[arg(long)]
    pos: bool,
    /// Raw text supplying the characters for tag-file inputs.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long)]
    emit_tags: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Words must also match on their POS label.
    #[arg(long)]
    pos: bool,
    #[arg(long)]
    per_sentence: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("segcrf: {e}");
            match e {
                Error::Config(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Tag(a) => with_threads(a.threads, || cmd_tag(&a)),
        Command::Convert(a) => with_threads(a.threads, || cmd_convert(&a)),
        Command::Ensemble(a) => with_threads(a.threads, || cmd_ensemble(&a)),
        Command::Eval(a) => with_threads(a.threads, || cmd_eval(&a)),
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker threads: {e}")))?;
    pool.install(f)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => read_utf8(p),
        None => {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf).map_err(|e| Error::io("<stdin>", e))?;
            String::from_utf8(buf)
                .map_err(|e| Error::Utf8 { path: "<stdin>".into(), offset: e.utf8_error().valid_up_to() })
        }
    }
}

/// Reads corpora that share one scheme; joint corpora pool their POS labels.
fn read_corpora(paths: &[&Path], format: CorpusFormat) -> Result<Vec<Dataset>> {
    let texts = paths.iter().map(|p| read_utf8(p)).collect::<Result<Vec<_>>>()?;
    let scheme = match format {
        CorpusFormat::Words => TagScheme::bies(),
        CorpusFormat::WordsWithPos => {
            let mut inventory = std::collections::BTreeSet::new();
            for (t, p) in texts.iter().zip(paths) {
                inventory.extend(collect_pos_inventory(t, &p.display().to_string())?);
            }
            TagScheme::cross(&TagScheme::bies(), &inventory.into_iter().collect::<Vec<_>>())?
        }
    };
    texts
        .iter()
        .zip(paths)
        .map(|(t, p)| {
            let mut ds = parse_segmented_corpus(t, &scheme, &p.display().to_string())?;
            ds.name = p.display().to_string();
            Ok(ds)
        })
        .collect()
}

fn render_log(raw: &RawConfig, sections: &[(&str, &TrainLog)]) -> String {
    let mut out = String::from("# configuration\n");
    out.push_str(&raw.echo());
    for (name, log) in sections {
        let _ = writeln!(out, "# {name}");
        for s in &log.iterations {
            let _ = write!(
                out,
                "iteration {} sentences {} eta {:.6} objective {:.6}",
                s.iteration, s.sentences, s.eta, s.objective
            );
            if let (Some(a), Some(f)) = (s.dev_accuracy, s.dev_f1) {
                let _ = write!(out, " dev_accuracy {a:.6} dev_f1 {f:.6}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "best iteration {}", log.best_iteration);
    }
    out
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(suffix);
    p.into()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut raw = RawConfig::load(&args.config).map_err(|e| match e {
        Error::Io { .. } | Error::Utf8 { .. } => Error::Config(e.to_string()),
        other => other,
    })?;
    for o in &args.overrides {
        raw.apply_override(o)?;
    }
    let job = TrainJob::from_raw(&raw)?;
    with_threads(job.threads, || train_job(&job, &raw))
}

fn train_job(job: &TrainJob, raw: &RawConfig) -> Result<()> {
    let lexicon = match (&job.lexicon_path, job.settings.templates.lexicon) {
        (Some(p), true) => {
            let lex = Lexicon::load(p)?;
            eprintln!("loaded {} lexicon words from {}", lex.len(), p.display());
            Some(lex)
        }
        _ => None,
    };
    let mut target_paths: Vec<&Path> = vec![&job.train];
    if let Some(d) = &job.dev {
        target_paths.push(d);
    }
    let mut target = read_corpora(&target_paths, job.format)?.into_iter();
    let train = target.next().expect("train corpus");
    let dev = target.next();
    let source_paths: Vec<&Path> = job.sources.iter().map(PathBuf::as_path).collect();
    let sources = if source_paths.is_empty() { Vec::new() } else { read_corpora(&source_paths, job.source_format)? };
    let mut log_sections = Vec::new();
    let pipeline_name = job.pipeline.to_string();
    match job.pipeline {
        Pipeline::Baseline | Pipeline::Lexicon => {
            let mut t = train_single(&[train], dev.as_ref(), lexicon.as_ref(), &job.settings)?;
            t.model.meta.insert("pipeline".into(), pipeline_name);
            t.model.save(&job.output)?;
            log_sections.push(("model".to_string(), t.log));
        }
        Pipeline::Guide => {
            let mut t = guide_pipeline(&sources, &train, dev.as_ref(), lexicon.as_ref(), &job.settings)?;
            let source_path = sibling(&job.output, ".source");
            let source_name = source_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Config("output must name a file".into()))?;
            t.model.source.meta.insert("pipeline".into(), "guide-source".into());
            t.model.target.meta.insert("pipeline".into(), pipeline_name);
            t.model.target.meta.insert("source_model".into(), source_name);
            t.model.source.save(&source_path)?;
            t.model.target.save(&job.output)?;
            log_sections.push(("source model".to_string(), t.source_log));
            log_sections.push(("target model".to_string(), t.target_log));
        }
        Pipeline::Coupled => {
            let mapping = match &job.mapping {
                Some(p) => Some(TagMapping::load(p, &train.scheme, &sources[0].scheme)?),
                None => None,
            };
            let mut t =
                coupled_pipeline(&train, &sources, mapping.as_ref(), dev.as_ref(), lexicon.as_ref(), &job.settings)?;
            t.model.meta.insert("pipeline".into(), pipeline_name);
            t.model.save(&job.output)?;
            log_sections.push(("model".to_string(), t.log));
        }
    }
    let sections: Vec<(&str, &TrainLog)> = log_sections.iter().map(|(n, l)| (n.as_str(), l)).collect();
    let log = render_log(raw, &sections);
    eprint!("{log}");
    std::fs::write(&job.log, log).map_err(|e| Error::io(&job.log, e))?;
    Ok(())
}

fn load_tagger(path: &Path) -> Result<Tagger> {
    let model = CrfModel::load(path)?;
    if let Some(name) = model.meta.get("source_model") {
        let source_path = path.parent().unwrap_or(Path::new("")).join(name);
        if !source_path.exists() {
            return Err(Error::Invalid(format!(
                "guide model {} needs its source model {}",
                path.display(),
                source_path.display()
            )));
        }
        let source = CrfModel::load(&source_path)?;
        return Ok(Tagger::Guided(GuideModel { source, target: model }));
    }
    if model.config().guide {
        return Err(Error::Invalid(format!("{} uses guide features but names no source model", path.display())));
    }
    Ok(Tagger::Single(model))
}

fn needs_lexicon(tagger: &Tagger) -> bool {
    match tagger {
        Tagger::Single(m) => m.config().lexicon,
        Tagger::Guided(g) => g.source.config().lexicon || g.target.config().lexicon,
    }
}

fn load_lexicon_for(needed: bool, path: Option<&Path>) -> Result<Option<Lexicon>> {
    match (needed, path) {
        (true, None) => Err(Error::Invalid("the model uses lexicon features; pass --lexicon".into())),
        (true, Some(p)) => Ok(Some(Lexicon::load(p)?)),
        (false, _) => Ok(None),
    }
}

fn cmd_tag(args: &TagArgs) -> Result<()> {
    let tagger = load_tagger(&args.model)?;
    let lexicon = load_lexicon_for(needs_lexicon(&tagger), args.lexicon.as_deref())?;
    let side = args.side.map(Side::from);
    let scheme = tagger.output_scheme(side)?.clone();
    let text = read_input(args.input.as_deref())?;
    let mut slots = Vec::new();
    let mut sentences = Vec::new();
    for line in text.lines() {
        let chars: Vec<char> = line.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            slots.push(None);
        } else {
            slots.push(Some(sentences.len()));
            sentences.push(Sentence::from_chars(chars)?);
        }
    }
    let tagged = tagger.tag_all(&sentences, lexicon.as_ref(), side)?;
    let mut out = String::new();
    for slot in slots {
        if let Some(i) = slot {
            if args.emit_tags {
                out.push_str(&format_tag_line(&tagged[i], &scheme));
            } else {
                out.push_str(&format_segmented_line(&sentences[i], &tagged[i], &scheme));
            }
        }
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let model = CrfModel::load(&args.model)?;
    let side_b = model
        .scheme()
        .side(Side::B)
        .ok_or_else(|| Error::Mismatch(format!("{} is not a coupled model", args.model.display())))?
        .clone();
    let lexicon = load_lexicon_for(model.config().lexicon, args.lexicon.as_deref())?;
    let text = read_utf8(&args.input)?;
    let input = parse_segmented_corpus(&text, &side_b, &args.input.display().to_string())?;
    let conv = convert_annotations(&model, &input, args.threshold, lexicon.as_ref())?;
    write_output(args.output.as_deref(), &format_segmented_corpus(&conv.dataset)?)?;
    let report = conv.report();
    eprint!("{report}");
    if let Some(p) = &args.report {
        std::fs::write(p, report).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

/// Reads one segmented line into characters and BIES tags.
fn segmented_to_bies(line: &str, pos: bool) -> std::result::Result<(Vec<char>, Vec<Bies>), String> {
    let mut chars = Vec::new();
    let mut spans = Vec::new();
    if line.trim().is_empty() {
        return Ok((chars, Vec::new()));
    }
    for token in line.split_ascii_whitespace() {
        let word = if pos {
            match token.rsplit_once('_') {
                Some((w, p)) if !w.is_empty() && !p.is_empty() => w,
                _ => return Err(format!("token {token:?} is not word_POS")),
            }
        } else {
            token
        };
        let start = chars.len();
        chars.extend(word.chars());
        spans.push((start, chars.len()));
    }
    let seg = SpanSegmentation::new(spans, chars.len()).map_err(|e| e.to_string())?;
    Ok((chars, spans_to_tags(&seg)))
}

fn cmd_ensemble(args: &EnsembleArgs) -> Result<()> {
    let texts = args.inputs.iter().map(|p| read_utf8(p)).collect::<Result<Vec<_>>>()?;
    let per_file: Vec<Vec<&str>> = texts.iter().map(|t| t.lines().collect()).collect();
    let lines = per_file[0].len();
    if let Some(k) = per_file.iter().position(|f| f.len() != lines) {
        return Err(Error::Mismatch(format!(
            "{} has {} lines but {} has {lines}",
            args.inputs[k].display(),
            per_file[k].len(),
            args.inputs[0].display()
        )));
    }
    let raw_text = args.text.as_deref().map(read_utf8).transpose()?;
    let raw_lines: Option<Vec<&str>> = raw_text.as_deref().map(|t| t.lines().collect());
    if raw_lines.as_ref().is_some_and(|r| r.len() != lines) {
        return Err(Error::Mismatch("--text and the inputs differ in line count".into()));
    }
    if args.tags && raw_lines.is_none() && !args.emit_tags {
        return Err(Error::Config("tag-file inputs need --text or --emit-tags".into()));
    }
    let bies = TagScheme::bies();
    let mut out = String::new();
    for i in 0..lines {
        let mut chars: Option<Vec<char>> =
            raw_lines.as_ref().map(|r| r[i].chars().filter(|c| !c.is_whitespace()).collect());
        let mut outputs = Vec::with_capacity(per_file.len());
        for (k, file) in per_file.iter().enumerate() {
            let origin = args.inputs[k].display().to_string();
            let tags = if args.tags {
                file[i]
                    .split_ascii_whitespace()
                    .map(|t| {
                        Bies::from_tag_name(t).ok_or_else(|| Error::parse(&origin, i + 1, format!("unknown tag {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                let (c, t) = segmented_to_bies(file[i], args.pos).map_err(|m| Error::parse(&origin, i + 1, m))?;
                match &chars {
                    Some(prev) if *prev != c => {
                        return Err(Error::Mismatch(format!("line {}: {origin} spells different characters", i + 1)));
                    }
                    Some(_) => {}
                    None => chars = Some(c),
                }
                t
            };
            outputs.push(tags);
        }
        if outputs.iter().all(|o| o.is_empty()) {
            out.push('\n');
            continue;
        }
        let merged = combine(&outputs)?;
        if let Some(c) = &chars {
            if c.len() != merged.len() {
                return Err(Error::Mismatch(format!("line {}: text and tags differ in length", i + 1)));
            }
        }
        let tags: Vec<usize> = merged.iter().map(|b| b.index()).collect();
        if args.emit_tags {
            out.push_str(&format_tag_line(&tags, &bies));
        } else {
            let sentence = Sentence::from_chars(chars.expect("characters are known"))?;
            out.push_str(&format_segmented_line(&sentence, &tags, &bies));
        }
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let gold = read_utf8(&args.gold)?;
    let pred = read_utf8(&args.pred)?;
    let report = score_segmented(&gold, &pred, args.pos)?;
    write_output(args.output.as_deref(), &report.render(args.per_sentence))
}

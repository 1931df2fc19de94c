//! Acceptance checks, one PASS/FAIL line each. Pass criterion numbers as
//! arguments to run a subset.

mod support;

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segcrf::corpus::{
    collect_pos_inventory, format_segmented_corpus, is_well_formed, parse_segmented_corpus, read_segmented_corpus,
    spans_to_tags, tags_to_spans, Bies, Dataset, LabeledSentence, Sentence, Side, SpanSegmentation, TagScheme,
};
use segcrf::coupled::{bundle, project_tags, TagMapping};
use segcrf::crf::{CrfModel, Extras, TrainConfig};
use segcrf::ensemble::{merge_votes, redecode, VoteLattice};
use segcrf::eval::word_prf;
use segcrf::features::{build_index, coupled_features, extract_baseline, SentenceContext, TagRef, TemplateConfig};
use segcrf::lexicon::Lexicon;
use segcrf::pipelines::{coupled_pipeline, guide_pipeline, train_single, PipelineConfig, Tagger};
use segcrf::synthetic::{merge_single_char_runs, to_corpus_text, to_dataset, SyntheticConfig, SyntheticLanguage};

use support::{best_legal_sequence, central_difference, close_rel, lexicon_by_substrings, RawChain};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let spent = start.elapsed();
    if spent > limit {
        return Err(format!("{what} took {:.1}s, limit {}s", spent.as_secs_f64(), limit.as_secs()));
    }
    Ok(())
}

fn inference_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut paths = 0usize;
    for case in 0..200 {
        let (k, n) = if case % 2 == 0 {
            (4, rng.random_range(1..=6))
        } else if case % 25 == 1 {
            (16, 6)
        } else {
            (16, rng.random_range(1..=5))
        };
        let restrict = if case % 3 == 0 { 0.5 } else { 0.0 };
        let raw = RawChain::random(&mut rng, n, k, restrict);
        paths += raw.allowed.iter().map(Vec::len).product::<usize>();
        let lat = raw.to_lattice();
        let oracle = raw.enumerate();

        let log_z = lat.log_partition();
        ensure!(close_rel(log_z, oracle.log_z, 1e-8), "case {case}: log Z {log_z} vs {}", oracle.log_z);
        for (i, (row, want)) in lat.marginals().iter().zip(&oracle.marginals).enumerate() {
            let sum: f64 = row.iter().sum();
            ensure!((sum - 1.0).abs() <= 1e-9, "case {case}: marginals at {i} sum to {sum}");
            for t in 0..k {
                ensure!(close_rel(row[t], want[t], 1e-8), "case {case}: marginal ({i},{t}) {} vs {}", row[t], want[t]);
            }
        }
        let (path, score) = lat.viterbi();
        ensure!(close_rel(score, oracle.best, 1e-10), "case {case}: Viterbi score {score} vs {}", oracle.best);
        ensure!(
            path.iter().zip(&raw.allowed).all(|(t, set)| set.contains(t)),
            "case {case}: Viterbi path leaves the allowed sets"
        );
        ensure!(close_rel(raw.score(&path), oracle.best, 1e-10), "case {case}: Viterbi path is not optimal");
    }
    within(start, Duration::from_secs(10), "inference oracle")?;
    Ok(format!("200 lattices, {paths} paths enumerated"))
}

const ALPHABET: [char; 5] = ['甲', '乙', '丙', '丁', '戊'];

fn random_chars(rng: &mut ChaCha8Rng, n: usize, alphabet: &[char]) -> Vec<char> {
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn schemes() -> Vec<TagScheme> {
    let bies = TagScheme::bies();
    let crossed = TagScheme::cross(&bies, &["NN".into(), "VV".into()]).unwrap();
    let bundled = bundle(&bies, &bies, &TagMapping::full(&bies, &bies)).unwrap();
    vec![bies, crossed, bundled]
}

/// A model whose index comes from a few random taggings of `x`, with
/// weights uniform in [-1, 1].
fn random_model(
    rng: &mut ChaCha8Rng,
    scheme: &TagScheme,
    config: TemplateConfig,
    x: &Sentence,
    lexicon: Option<&Lexicon>,
) -> CrfModel {
    let ctx = SentenceContext::new(x.chars(), if config.lexicon { lexicon } else { None }, None).unwrap();
    let taggings: Vec<Vec<Vec<usize>>> =
        (0..3).map(|_| (0..x.len()).map(|_| vec![rng.random_range(0..scheme.len())]).collect()).collect();
    let index = build_index(scheme, config, taggings.iter().map(|t| (&ctx, t.as_slice()))).unwrap();
    let weights = (0..index.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    CrfModel::with_weights(scheme.clone(), config, index, weights).unwrap()
}

fn random_lexicon(rng: &mut ChaCha8Rng, alphabet: &[char], size: usize) -> (Lexicon, Vec<String>) {
    let mut lex = Lexicon::new();
    let mut words = Vec::new();
    for _ in 0..size {
        let len = rng.random_range(1..=5);
        let w: String = random_chars(rng, len, alphabet).into_iter().collect();
        if lex.insert(&w).unwrap() {
            words.push(w);
        }
    }
    (lex, words)
}

fn gradient_check() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let schemes = schemes();
    let (lexicon, _) = random_lexicon(&mut rng, &ALPHABET, 12);
    let eps = 1e-4;
    let mut coords = 0usize;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let scheme = &schemes[case % 3];
        let max_len = if scheme.len() > 8 { 5 } else { 7 };
        let n = rng.random_range(1..=max_len);
        let x = Sentence::from_chars(random_chars(&mut rng, n, &ALPHABET)).unwrap();
        let config = TemplateConfig { lexicon: case % 2 == 0, ..TemplateConfig::default() };
        let mut model = random_model(&mut rng, scheme, config, &x, Some(&lexicon));
        let labels: Vec<Vec<usize>> = (0..n)
            .map(|_| match rng.random_range(0..3) {
                0 => vec![rng.random_range(0..scheme.len())],
                1 => {
                    let mut s: Vec<usize> = (0..scheme.len()).filter(|_| rng.random_bool(0.5)).collect();
                    if s.is_empty() {
                        s.push(0);
                    }
                    s
                }
                _ => (0..scheme.len()).collect(),
            })
            .collect();
        let labeled = LabeledSentence::new(x, labels, scheme).unwrap();
        let extras = Extras::with_lexicon(Some(&lexicon));
        let grad = model.gradient(&labeled, &extras).unwrap();
        let mut dense = vec![0.0; model.index().len()];
        for (f, g) in grad {
            dense[f as usize] = g;
        }
        for (f, &g) in dense.iter().enumerate() {
            let w0 = model.weights()[f];
            let fd = central_difference(w0, eps, |w| {
                model.weights_mut()[f] = w;
                model.log_likelihood(&labeled, &extras).unwrap()
            });
            let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1.0);
            worst = worst.max(err);
            ensure!(
                err <= 1e-5,
                "case {case}: feature {} gradient {g} vs finite difference {fd}",
                model.index().feature_string(f as u32)
            );
            coords += 1;
        }
    }
    within(start, Duration::from_secs(30), "gradient check")?;
    Ok(format!("{coords} coordinates, worst scaled error {worst:.2e}"))
}

/// Sum of the weights of every feature string firing along `tags`, built
/// straight from the template extractors.
fn score_from_feature_strings(model: &CrfModel, x: &Sentence, tags: &[usize]) -> f64 {
    let scheme = model.scheme();
    let n = x.len();
    let mut total = 0.0;
    for i in 0..=n {
        let prev = if i == 0 { TagRef::Start } else { TagRef::Tag(tags[i - 1]) };
        let cur = if i == n { TagRef::End } else { TagRef::Tag(tags[i]) };
        let feats = if scheme.bundle_parts().is_some() {
            coupled_features(scheme, x, i, prev, cur).unwrap()
        } else {
            extract_baseline(scheme, x, i, prev, cur).unwrap()
        };
        for f in feats {
            if let Some(id) = model.index().feature_id(&f) {
                total += model.weights()[id as usize];
            }
        }
    }
    total
}

fn degenerate_labelings() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let schemes = schemes();
    for case in 0..60 {
        let scheme = &schemes[case % 3];
        let n = rng.random_range(1..=6);
        let x = Sentence::from_chars(random_chars(&mut rng, n, &ALPHABET)).unwrap();
        let model = random_model(&mut rng, scheme, TemplateConfig::default(), &x, None);
        let extras = Extras::none();
        let lat = model.build_lattice(&x, &extras, None).unwrap();

        let tags: Vec<usize> = (0..n).map(|_| rng.random_range(0..scheme.len())).collect();
        let single = LabeledSentence::from_tags(x.clone(), &tags, scheme).unwrap();
        let ll = model.log_likelihood(&single, &extras).unwrap();
        let standard = lat.path_score(&tags) - lat.log_partition();
        ensure!(ll == standard, "case {case}: singleton likelihood {ll} vs {standard}");
        let by_strings = score_from_feature_strings(&model, &x, &tags);
        ensure!(
            close_rel(lat.path_score(&tags), by_strings, 1e-12),
            "case {case}: path score {} vs feature sum {by_strings}",
            lat.path_score(&tags)
        );

        let all = LabeledSentence::new(x.clone(), vec![(0..scheme.len()).collect(); n], scheme).unwrap();
        let ll = model.log_likelihood(&all, &extras).unwrap();
        ensure!(ll == 0.0, "case {case}: fully ambiguous likelihood {ll}");
        let grad = model.gradient(&all, &extras).unwrap();
        ensure!(grad.iter().all(|&(_, g)| g == 0.0), "case {case}: fully ambiguous gradient is not zero");
    }
    Ok("60 sentences over 4, 8 and 16 tags".into())
}

fn lexicon_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let alphabet = &ALPHABET[..4];
    for case in 0..1000 {
        let size = rng.random_range(0..=50);
        let (lex, words) = random_lexicon(&mut rng, alphabet, size);
        let n = rng.random_range(1..=12);
        let x = random_chars(&mut rng, n, alphabet);
        let want = lexicon_by_substrings(&words, &x);
        let sweep = lex.annotate(&x);
        for i in 0..n {
            let got = (
                lex.longest_beginning_at(&x, i).unwrap(),
                lex.longest_ending_at(&x, i).unwrap(),
                lex.longest_containing(&x, i).unwrap(),
            );
            ensure!(got == want[i], "case {case}, position {i}: queries {got:?} vs {:?}", want[i]);
            let m = sweep[i];
            ensure!((m.begin, m.end, m.inside) == want[i], "case {case}, position {i}: sweep {m:?} vs {:?}", want[i]);
        }
    }
    Ok("1000 sentences".into())
}

fn ensemble_redecoding() -> Check {
    use Bies::*;
    let v = merge_votes(&[vec![B], vec![B], vec![S], vec![B]]).map_err(|e| e.to_string())?;
    ensure!(v.row(0) == [3, 0, 0, 1], "vote example gave {:?}", v.row(0));
    let v = VoteLattice::from_counts(vec![[3, 0, 0, 1], [0, 1, 3, 0]], 4).map_err(|e| e.to_string())?;
    let got = redecode(&v);
    ensure!(got == (vec![B, E], 6), "two-character case gave {got:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for case in 0..500 {
        let n = rng.random_range(1..=5);
        let voters = rng.random_range(1..=6);
        let outputs: Vec<Vec<Bies>> =
            (0..voters).map(|_| (0..n).map(|_| Bies::ALL[rng.random_range(0..4)]).collect()).collect();
        let v = merge_votes(&outputs).map_err(|e| e.to_string())?;
        let got = redecode(&v);
        let rows: Vec<[u32; 4]> = (0..n).map(|i| v.row(i)).collect();
        let want = best_legal_sequence(&rows);
        ensure!(got == want, "case {case}: {got:?} vs brute force {want:?}");
        ensure!(is_well_formed(&got.0), "case {case}: ill-formed output {:?}", got.0);
    }
    Ok("vote example, two-character case, 500 lattices".into())
}

fn coupled_equivalence() -> Check {
    let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
    let a = to_dataset("a", &lang.sentences(300, 0)).unwrap();
    let b = to_dataset("b", &lang.sentences(300, 1)).unwrap();
    let test = to_dataset("test", &lang.sentences(200, 2)).unwrap();
    let coupled_train = TrainConfig { iterations: 10, eta0: 0.1, lambda: 1e-4, seed: 5 };
    // every feature of the identity-coupled model occurs three times, so the
    // single model sees a score of 3w for each coupled weight w
    let single_train =
        TrainConfig { eta0: coupled_train.eta0 * 3.0, lambda: coupled_train.lambda / 3.0, ..coupled_train };
    let cfg = |train| PipelineConfig { sample_count: Some(300), train, ..PipelineConfig::default() };
    let single = train_single(&[a.clone(), b.clone()], None, None, &cfg(single_train)).map_err(|e| e.to_string())?;
    let identity = TagMapping::identity(&a.scheme, &b.scheme);
    let coupled =
        coupled_pipeline(&a, &[b], Some(&identity), None, None, &cfg(coupled_train)).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for s in test.sentences.iter().chain(&a.sentences) {
        let x = &s.sentence;
        let want = single.model.tag(x, &Extras::none()).unwrap();
        let joint = coupled.model.tag(x, &Extras::none()).unwrap();
        for side in [Side::A, Side::B] {
            let got = project_tags(coupled.model.scheme(), &joint, side).unwrap();
            ensure!(got == want, "outputs differ on {:?}", x.chars().iter().collect::<String>());
        }
        compared += 1;
    }
    Ok(format!("{compared} sentences identical on both sides"))
}

fn word_f1(tagger: &Tagger, gold: &Dataset, lexicon: Option<&Lexicon>) -> f64 {
    let xs: Vec<Sentence> = gold.sentences.iter().map(|s| s.sentence.clone()).collect();
    let pred = tagger.tag_all(&xs, lexicon, None).unwrap();
    let spans = |tags: &[usize]| tags_to_spans(&gold.scheme.boundaries(tags)).spans().to_vec();
    let g: Vec<_> = gold.sentences.iter().map(|s| spans(&s.gold_tags().unwrap())).collect();
    let p: Vec<_> = pred.iter().map(|t| spans(t)).collect();
    word_prf(&g, &p).unwrap().f1
}

fn synthetic_benchmark() -> Check {
    let start = Instant::now();
    let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
    let train = to_dataset("train", &lang.sentences(2000, 0)).unwrap();
    let test = to_dataset("test", &lang.sentences(200, 1)).unwrap();
    let lexicon = lang.lexicon();
    let mut scores = Vec::new();
    for use_lexicon in [false, true] {
        let mut config = PipelineConfig::default();
        config.templates.lexicon = use_lexicon;
        let model = train_single(std::slice::from_ref(&train), None, Some(&lexicon), &config).unwrap().model;
        scores.push(word_f1(&Tagger::Single(model), &test, Some(&lexicon)));
    }
    within(start, Duration::from_secs(120), "synthetic benchmark")?;
    ensure!(scores[0] >= 0.95, "baseline F1 {:.4} below 0.95", scores[0]);
    ensure!(scores[1] >= scores[0], "lexicon F1 {:.4} below baseline {:.4}", scores[1], scores[0]);
    Ok(format!("baseline F1 {:.4}, lexicon F1 {:.4}", scores[0], scores[1]))
}

fn heterogeneous_benchmark() -> Check {
    let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
    let merged = |s: Vec<Vec<String>>| s.iter().map(|w| merge_single_char_runs(w)).collect::<Vec<_>>();
    let source = to_dataset("source", &lang.sentences(2000, 0)).unwrap();
    let target = to_dataset("target", &merged(lang.sentences(200, 1))).unwrap();
    let target_dev = to_dataset("target-dev", &merged(lang.sentences(200, 2))).unwrap();
    let source_dev = to_dataset("source-dev", &lang.sentences(200, 2)).unwrap();
    let config = PipelineConfig::default();

    let source_model = Tagger::Single(train_single(std::slice::from_ref(&source), None, None, &config).unwrap().model);
    let in_standard = word_f1(&source_model, &source_dev, None);
    let cross_standard = word_f1(&source_model, &target_dev, None);
    ensure!(
        in_standard - cross_standard >= 0.02,
        "cross-standard F1 {cross_standard:.4} is not 2 points below in-standard {in_standard:.4}"
    );

    let baseline =
        Tagger::Single(train_single(std::slice::from_ref(&target), Some(&target_dev), None, &config).unwrap().model);
    let base = word_f1(&baseline, &target_dev, None);
    let guide = guide_pipeline(std::slice::from_ref(&source), &target, Some(&target_dev), None, &config).unwrap();
    let guided = word_f1(&Tagger::Guided(guide.model), &target_dev, None);
    let coupled_config = PipelineConfig { sample_count: Some(1000), ..config };
    let coupled = coupled_pipeline(&target, &[source], None, Some(&target_dev), None, &coupled_config).unwrap();
    let coupled = word_f1(&Tagger::Single(coupled.model), &target_dev, None);
    ensure!(guided >= base, "guide F1 {guided:.4} below baseline {base:.4}");
    ensure!(coupled >= base, "coupled F1 {coupled:.4} below baseline {base:.4}");
    Ok(format!(
        "in-standard {in_standard:.4}, cross-standard {cross_standard:.4}; target baseline {base:.4}, guide {guided:.4}, coupled {coupled:.4}"
    ))
}

fn round_trips() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
    let bies = TagScheme::bies();

    let text = to_corpus_text(&lang.sentences(300, 0));
    let ds = parse_segmented_corpus(&text, &bies, "mem").unwrap();
    ensure!(format_segmented_corpus(&ds).unwrap() == text, "segmented corpus does not round-trip");
    let path = dir.path().join("train.txt");
    std::fs::write(&path, &text).unwrap();
    let reread = read_segmented_corpus(&path, &bies).unwrap();
    ensure!(reread.sentences == ds.sentences, "corpus file read differs from parsed text");

    let joint_text: String = lang
        .sentences(100, 1)
        .iter()
        .map(|s| s.iter().map(|w| format!("{w}_L{}", w.chars().count())).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    let crossed = TagScheme::cross(&bies, &collect_pos_inventory(&joint_text, "mem").unwrap()).unwrap();
    let joint = parse_segmented_corpus(&joint_text, &crossed, "mem").unwrap();
    ensure!(format_segmented_corpus(&joint).unwrap() == joint_text, "joint corpus does not round-trip");

    let lexicon = lang.lexicon();
    let mut config = PipelineConfig::default();
    config.templates.lexicon = true;
    config.train.iterations = 3;
    let model = train_single(&[ds.truncated(200)], None, Some(&lexicon), &config).unwrap().model;
    let small = to_dataset("a", &lang.sentences(60, 3)).unwrap();
    let coupled_config = PipelineConfig { sample_count: Some(60), ..config.clone() };
    let coupled =
        coupled_pipeline(&small, &[ds.truncated(60)], None, None, Some(&lexicon), &coupled_config).unwrap().model;
    let extras = Extras::with_lexicon(Some(&lexicon));
    let test = to_dataset("test", &lang.sentences(100, 4)).unwrap();
    for (name, m) in [("model", &model), ("coupled", &coupled)] {
        let path = dir.path().join(format!("{name}.txt"));
        m.save(&path).unwrap();
        let loaded = CrfModel::load(&path).unwrap();
        ensure!(loaded.to_text() == m.to_text(), "{name}: reloaded model serializes differently");
        for s in &test.sentences {
            let before = m.build_lattice(&s.sentence, &extras, None).unwrap();
            let after = loaded.build_lattice(&s.sentence, &extras, None).unwrap();
            let (p1, v1) = before.viterbi();
            let (p2, v2) = after.viterbi();
            ensure!(
                p1 == p2
                    && v1.to_bits() == v2.to_bits()
                    && before.log_partition().to_bits() == after.log_partition().to_bits(),
                "{name}: scores changed after reload"
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for case in 0..1000 {
        let n = rng.random_range(1..=20);
        let mut spans = Vec::new();
        let mut at = 0;
        while at < n {
            let len = rng.random_range(1..=(n - at).min(5));
            spans.push((at, at + len));
            at += len;
        }
        let seg = SpanSegmentation::new(spans, n).unwrap();
        let tags = spans_to_tags(&seg);
        ensure!(is_well_formed(&tags), "case {case}: spans gave ill-formed tags");
        ensure!(tags_to_spans(&tags) == seg, "case {case}: span round trip failed");
        ensure!(spans_to_tags(&tags_to_spans(&tags)) == tags, "case {case}: tag round trip failed");
    }
    Ok("corpus, joint corpus, 2 models x 100 sentences, 1000 segmentations".into())
}

fn cli_determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let lang = SyntheticLanguage::new(SyntheticConfig::default()).unwrap();
    std::fs::write(dir.path().join("train.txt"), to_corpus_text(&lang.sentences(300, 0))).unwrap();
    std::fs::write(dir.path().join("dev.txt"), to_corpus_text(&lang.sentences(50, 1))).unwrap();
    std::fs::write(
        dir.path().join("train.conf"),
        "train = train.txt\ndev = dev.txt\niterations = 5\nseed = 7\noutput = model.txt\n",
    )
    .unwrap();
    let run = |output: &str, threads: &str| -> Result<Vec<u8>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_segcrf"))
            .current_dir(dir.path())
            .args(["train", "--config", "train.conf", "--set"])
            .arg(format!("output={output}"))
            .arg("--set")
            .arg(format!("threads={threads}"))
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(dir.path().join(output)).map_err(|e| e.to_string())
    };
    let first = run("m1.txt", "1")?;
    let second = run("m2.txt", "1")?;
    let threaded = run("m3.txt", "4")?;
    ensure!(first == second, "two runs with the same seed wrote different models");
    ensure!(first == threaded, "a 4-thread run wrote a different model");
    Ok(format!("{} identical bytes across 3 runs", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("inference oracle", inference_oracle),
        ("gradient check", gradient_check),
        ("ambiguous-labeling degeneracies", degenerate_labelings),
        ("lexicon oracle", lexicon_oracle),
        ("ensemble re-decoding", ensemble_redecoding),
        ("coupled equivalence", coupled_equivalence),
        ("synthetic benchmark", synthetic_benchmark),
        ("heterogeneous benchmark", heterogeneous_benchmark),
        ("round trips and formats", round_trips),
        ("training determinism", cli_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {why} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

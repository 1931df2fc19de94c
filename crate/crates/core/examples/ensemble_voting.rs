//! Trains three differently configured taggers and combines their outputs by
//! per-character voting and legal re-decoding.

use segcrf::corpus::{tags_to_spans, Bies, Dataset};
use segcrf::ensemble::combine;
use segcrf::eval::word_prf;
use segcrf::pipelines::{train_single, PipelineConfig, Tagger};
use segcrf::synthetic::{to_dataset, SyntheticConfig, SyntheticLanguage};

fn f1(gold: &Dataset, pred: &[Vec<Bies>]) -> segcrf::Result<f64> {
    let g: Vec<_> = gold
        .sentences
        .iter()
        .map(|s| tags_to_spans(&gold.scheme.boundaries(&s.gold_tags().expect("gold"))).spans().to_vec())
        .collect();
    let p: Vec<_> = pred.iter().map(|t| tags_to_spans(t).spans().to_vec()).collect();
    Ok(word_prf(&g, &p)?.f1)
}

fn main() -> segcrf::Result<()> {
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let train = to_dataset("train", &lang.sentences(400, 0))?;
    let test = to_dataset("test", &lang.sentences(200, 1))?;
    let lexicon = lang.lexicon();
    let xs: Vec<_> = test.sentences.iter().map(|s| s.sentence.clone()).collect();

    let mut outputs: Vec<Vec<Vec<Bies>>> = Vec::new();
    for (seed, use_lexicon) in [(1, false), (2, false), (3, true)] {
        let mut config = PipelineConfig::default();
        config.train.iterations = 3;
        config.train.seed = seed;
        config.templates.lexicon = use_lexicon;
        let tagger = Tagger::Single(train_single(std::slice::from_ref(&train), None, Some(&lexicon), &config)?.model);
        let tagged: Vec<Vec<Bies>> =
            tagger.tag_all(&xs, Some(&lexicon), None)?.iter().map(|t| test.scheme.boundaries(t)).collect();
        println!("seed {seed} lexicon={use_lexicon}: F1 {:.4}", f1(&test, &tagged)?);
        outputs.push(tagged);
    }
    let combined: Vec<Vec<Bies>> = (0..xs.len())
        .map(|i| combine(&outputs.iter().map(|o| o[i].clone()).collect::<Vec<_>>()))
        .collect::<segcrf::Result<_>>()?;
    println!("ensemble: F1 {:.4}", f1(&test, &combined)?);
    Ok(())
}

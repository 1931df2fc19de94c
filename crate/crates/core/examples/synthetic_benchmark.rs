//! Trains on a synthetic Zipf corpus and reports held-out word F1, with and
//! without lexicon features.

use std::time::Instant;

use segcrf::corpus::tags_to_spans;
use segcrf::crf::Extras;
use segcrf::eval::word_prf;
use segcrf::pipelines::{train_single, PipelineConfig};
use segcrf::synthetic::{to_dataset, SyntheticConfig, SyntheticLanguage};

fn main() -> segcrf::Result<()> {
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let train = to_dataset("train", &lang.sentences(2000, 0))?;
    let test = to_dataset("test", &lang.sentences(200, 1))?;
    let lexicon = lang.lexicon();

    for use_lexicon in [false, true] {
        let mut config = PipelineConfig::default();
        config.templates.lexicon = use_lexicon;
        let start = Instant::now();
        let trained = train_single(std::slice::from_ref(&train), None, Some(&lexicon), &config)?;
        let extras = Extras::with_lexicon(Some(&lexicon));
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for s in &test.sentences {
            let tags = trained.model.tag(&s.sentence, &extras)?;
            pred.push(tags_to_spans(&test.scheme.boundaries(&tags)).spans().to_vec());
            let g = s.gold_tags().expect("gold");
            gold.push(tags_to_spans(&test.scheme.boundaries(&g)).spans().to_vec());
        }
        let prf = word_prf(&gold, &pred)?;
        println!(
            "lexicon={use_lexicon} features={} F1={:.4} ({:.1}s)",
            trained.model.index().len(),
            prf.f1,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

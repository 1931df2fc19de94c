//! Two annotation standards over the same synthetic text: a large corpus in
//! the fine-grained standard and a small one where runs of one-character
//! words are joined. Compares a small-data baseline with the guide-feature
//! and coupled recipes on the small standard.

use std::time::Instant;

use segcrf::corpus::{tags_to_spans, Dataset};
use segcrf::error::Result;
use segcrf::eval::word_prf;
use segcrf::pipelines::{coupled_pipeline, guide_pipeline, train_single, PipelineConfig, Tagger};
use segcrf::synthetic::{merge_single_char_runs, to_dataset, SyntheticConfig, SyntheticLanguage};

fn f1(tagger: &Tagger, gold: &Dataset) -> Result<f64> {
    let xs: Vec<_> = gold.sentences.iter().map(|s| s.sentence.clone()).collect();
    let pred = tagger.tag_all(&xs, None, None)?;
    let spans = |tags: &[usize]| tags_to_spans(&gold.scheme.boundaries(tags)).spans().to_vec();
    let g: Vec<_> = gold.sentences.iter().map(|s| spans(&s.gold_tags().expect("gold"))).collect();
    let p: Vec<_> = pred.iter().map(|t| spans(t)).collect();
    Ok(word_prf(&g, &p)?.f1)
}

fn main() -> Result<()> {
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let merged = |s: Vec<Vec<String>>| s.iter().map(|w| merge_single_char_runs(w)).collect::<Vec<_>>();
    let source = to_dataset("source", &lang.sentences(2000, 0))?;
    let target = to_dataset("target", &merged(lang.sentences(200, 1)))?;
    let target_dev = to_dataset("target-dev", &merged(lang.sentences(200, 2)))?;
    let source_dev = to_dataset("source-dev", &lang.sentences(200, 2))?;

    let config = PipelineConfig::default();
    let t = Instant::now();
    let source_model = Tagger::Single(train_single(std::slice::from_ref(&source), None, None, &config)?.model);
    println!(
        "source model: in-standard F1 {:.4}, cross-standard F1 {:.4}",
        f1(&source_model, &source_dev)?,
        f1(&source_model, &target_dev)?
    );

    let baseline = Tagger::Single(train_single(std::slice::from_ref(&target), Some(&target_dev), None, &config)?.model);
    println!("target baseline F1 {:.4}", f1(&baseline, &target_dev)?);

    let guide = guide_pipeline(std::slice::from_ref(&source), &target, Some(&target_dev), None, &config)?;
    println!("guide F1 {:.4}", f1(&Tagger::Guided(guide.model), &target_dev)?);

    let coupled_config = PipelineConfig { sample_count: Some(1000), ..config.clone() };
    let coupled = coupled_pipeline(&target, &[source], None, Some(&target_dev), None, &coupled_config)?;
    println!("coupled F1 {:.4}", f1(&Tagger::Single(coupled.model), &target_dev)?);
    println!("({:.1}s)", t.elapsed().as_secs_f64());
    Ok(())
}

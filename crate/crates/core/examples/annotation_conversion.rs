//! Converts a corpus from the fine-grained standard into the merged one with
//! a coupled model, keeping only confidently converted sentences.

use segcrf::corpus::{format_segmented_line, tags_to_spans};
use segcrf::coupled::convert_annotations;
use segcrf::eval::word_prf;
use segcrf::pipelines::{coupled_pipeline, PipelineConfig};
use segcrf::synthetic::{merge_single_char_runs, to_dataset, SyntheticConfig, SyntheticLanguage};

fn main() -> segcrf::Result<()> {
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let merged = |s: Vec<Vec<String>>| s.iter().map(|w| merge_single_char_runs(w)).collect::<Vec<_>>();
    let side_a = to_dataset("merged", &merged(lang.sentences(300, 1)))?;
    let side_b = to_dataset("fine", &lang.sentences(2000, 0))?;
    let mut config = PipelineConfig { sample_count: Some(1000), ..PipelineConfig::default() };
    config.train.iterations = 10;
    let model = coupled_pipeline(&side_a, &[side_b], None, None, None, &config)?.model;

    let fine = to_dataset("fine-test", &lang.sentences(200, 2))?;
    let truth = to_dataset("merged-test", &merged(lang.sentences(200, 2)))?;
    for threshold in [0.0, 0.8, 0.95] {
        let conv = convert_annotations(&model, &fine, threshold, None)?;
        let spans = |tags: &[usize]| tags_to_spans(&truth.scheme.boundaries(tags)).spans().to_vec();
        let gold: Vec<_> = conv.kept.iter().map(|&i| spans(&truth.sentences[i].gold_tags().expect("gold"))).collect();
        let pred: Vec<_> = conv.dataset.sentences.iter().map(|s| spans(&s.gold_tags().expect("converted"))).collect();
        print!("threshold {threshold}: {}", conv.report());
        if !gold.is_empty() {
            println!("  F1 of kept conversions {:.4}", word_prf(&gold, &pred)?.f1);
        }
    }
    let conv = convert_annotations(&model, &fine, 0.8, None)?;
    let s = &conv.dataset.sentences[0];
    println!(
        "\n{}\n-> {}",
        fine.sentences[conv.kept[0]].sentence.chars().iter().collect::<String>(),
        format_segmented_line(&s.sentence, &s.gold_tags().expect("converted"), &conv.dataset.scheme)
    );
    Ok(())
}

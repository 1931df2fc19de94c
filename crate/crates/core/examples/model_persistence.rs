//! Saves a trained model as text, loads it back and checks that it scores
//! sentences identically.

use segcrf::crf::{CrfModel, Extras};
use segcrf::pipelines::{train_single, PipelineConfig};
use segcrf::synthetic::{to_dataset, SyntheticConfig, SyntheticLanguage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let train = to_dataset("train", &lang.sentences(300, 0))?;
    let mut config = PipelineConfig::default();
    config.train.iterations = 3;
    let mut model = train_single(&[train], None, None, &config)?.model;
    model.meta.insert("corpus".into(), "synthetic".into());

    let path = std::env::temp_dir().join("segcrf-example.model");
    model.save(&path)?;
    let text = std::fs::read_to_string(&path)?;
    println!("{} ({} bytes); first lines:", path.display(), text.len());
    for line in text.lines().take(12) {
        println!("  {line}");
    }

    let loaded = CrfModel::load(&path)?;
    let test = to_dataset("test", &lang.sentences(50, 1))?;
    let same = test.sentences.iter().all(|s| {
        let a = model.build_lattice(&s.sentence, &Extras::none(), None).expect("encodes");
        let b = loaded.build_lattice(&s.sentence, &Extras::none(), None).expect("encodes");
        a.viterbi().1.to_bits() == b.viterbi().1.to_bits()
    });
    println!("reloaded model reproduces all scores: {same}");
    std::fs::remove_file(&path)?;
    Ok(())
}

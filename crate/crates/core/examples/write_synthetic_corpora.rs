//! Writes a synthetic two-standard data set to a directory, ready for the
//! `segcrf` command line:
//!
//! ```text
//! cargo run --example write_synthetic_corpora -- data/
//! ```
//!
//! Files: `train.txt`, `dev.txt`, `test.txt` (fine-grained standard),
//! `merged-train.txt`, `merged-dev.txt`, `merged-test.txt` (runs of
//! one-character words joined), `raw-test.txt` and `words.txt`.

use std::path::PathBuf;

use segcrf::synthetic::{merge_single_char_runs, to_corpus_text, SyntheticConfig, SyntheticLanguage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let lang = SyntheticLanguage::new(SyntheticConfig::default())?;
    let splits = [("train", 2000, 0), ("dev", 200, 1), ("test", 200, 2)];
    for (name, count, stream) in splits {
        let sentences = lang.sentences(count, stream);
        std::fs::write(dir.join(format!("{name}.txt")), to_corpus_text(&sentences))?;
        let merged: Vec<Vec<String>> = sentences.iter().map(|s| merge_single_char_runs(s)).collect();
        std::fs::write(dir.join(format!("merged-{name}.txt")), to_corpus_text(&merged))?;
        if name == "test" {
            let raw: String = sentences.iter().map(|s| s.concat() + "\n").collect();
            std::fs::write(dir.join("raw-test.txt"), raw)?;
        }
    }
    let words: String = lang.vocabulary().iter().map(|w| format!("{w}\n")).collect();
    std::fs::write(dir.join("words.txt"), words)?;
    println!("wrote synthetic corpora to {}", dir.display());
    Ok(())
}

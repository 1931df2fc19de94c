//! Dictionary queries behind the lexicon templates, and the feature strings
//! they produce for one character.

use segcrf::corpus::{Sentence, TagScheme};
use segcrf::features::{extract_lexicon, TagRef};
use segcrf::lexicon::Lexicon;

fn main() -> segcrf::Result<()> {
    let lexicon = Lexicon::parse("中国\n中国人\n国人\n人民\n人民银行\n银行\n", "inline")?;
    let text = "中国人民银行";
    let x = Sentence::new(text)?;
    println!("pos char begin inside end");
    for (i, (c, m)) in text.chars().zip(lexicon.annotate(x.chars())).enumerate() {
        println!("{i:>3} {c}    {:>5} {:>6} {:>3}", m.begin, m.inside, m.end);
    }
    let scheme = TagScheme::bies();
    let tag = scheme.index_of("B").expect("B is a BIES tag");
    println!("\nlexicon features at position 2 with tag B:");
    for f in extract_lexicon(&scheme, &x, 2, TagRef::Tag(tag), &lexicon, 6)? {
        println!("  {f}");
    }
    Ok(())
}

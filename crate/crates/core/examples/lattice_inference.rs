//! Inference on a hand-built lattice: partition function, marginals, best
//! path, and decoding restricted to allowed tag sets.

use segcrf::corpus::{tags_to_spans, Bies, TagScheme};
use segcrf::crf::Lattice;

fn main() -> segcrf::Result<()> {
    let scheme = TagScheme::bies();
    let chars: Vec<char> = "研究生命".chars().collect();
    let mut lat = Lattice::new(chars.len(), scheme.len());
    let (b, i, e, s) = (Bies::B.index(), Bies::I.index(), Bies::E.index(), Bies::S.index());
    // hand-set potentials that favour 研究 | 生命 but leave 研究生 | 命 close behind
    for (pos, tag, w) in [(0, b, 2.0), (1, e, 1.5), (1, i, 1.0), (2, b, 1.2), (2, e, 1.0), (3, e, 1.3), (3, s, 0.8)] {
        *lat.unigram_mut(pos, tag) += w;
    }
    for pos in 1..chars.len() {
        for p in [b, i] {
            for t in [b, s] {
                *lat.transition_mut(pos, p, t) = -5.0;
            }
        }
        for p in [e, s] {
            for t in [i, e] {
                *lat.transition_mut(pos, p, t) = -5.0;
            }
        }
    }
    println!("log Z = {:.4}", lat.log_partition());
    for (c, row) in chars.iter().zip(lat.marginals()) {
        let cells: Vec<String> = row.iter().enumerate().map(|(t, p)| format!("{}={p:.3}", scheme.name(t))).collect();
        println!("{c}  {}", cells.join(" "));
    }

    let show = |tags: &[usize]| {
        let seg = tags_to_spans(&scheme.boundaries(tags));
        seg.spans().iter().map(|&(a, z)| chars[a..z].iter().collect::<String>()).collect::<Vec<_>>().join(" | ")
    };
    let (best, score) = lat.viterbi();
    println!("best: {} (score {score:.3})", show(&best));

    // force the third character to end a word
    let mut sets: Vec<Vec<usize>> = vec![(0..4).collect(); chars.len()];
    sets[2] = vec![e];
    lat.restrict(&sets)?;
    let (forced, score) = lat.viterbi();
    println!("with 生 ending a word: {} (score {score:.3})", show(&forced));
    Ok(())
}

//! Merge-then-re-decode: sum per-character BIES votes from several taggers and
//! pick the best legal segmentation.

use crate::corpus::Bies;
use crate::error::{Error, Result};

/// Per-position vote counts over `B I E S` from `voters` taggers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteLattice {
    votes: Vec<[u32; 4]>,
    voters: u32,
}

impl VoteLattice {
    /// Builds a lattice from raw counts; every row must sum to `voters`.
    pub fn from_counts(votes: Vec<[u32; 4]>, voters: u32) -> Result<Self> {
        if votes.is_empty() {
            return Err(Error::Invalid("empty vote lattice".into()));
        }
        if let Some(i) = votes.iter().position(|r| r.iter().sum::<u32>() != voters) {
            return Err(Error::Invalid(format!("votes at position {i} do not sum to {voters}")));
        }
        Ok(VoteLattice { votes, voters })
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    pub fn voters(&self) -> u32 {
        self.voters
    }

    pub fn row(&self, i: usize) -> [u32; 4] {
        self.votes[i]
    }

    pub fn count(&self, i: usize, tag: Bies) -> u32 {
        self.votes[i][tag.index()]
    }

    /// Total votes collected by a tag sequence.
    pub fn score(&self, tags: &[Bies]) -> u64 {
        tags.iter().enumerate().map(|(i, &t)| self.count(i, t) as u64).sum()
    }
}

/// Counts votes from equally weighted tag sequences.
pub fn merge_votes(outputs: &[Vec<Bies>]) -> Result<VoteLattice> {
    let first = outputs.first().ok_or_else(|| Error::Invalid("no outputs to merge".into()))?;
    if first.is_empty() {
        return Err(Error::Invalid("cannot merge empty outputs".into()));
    }
    let mut votes = vec![[0u32; 4]; first.len()];
    for (k, out) in outputs.iter().enumerate() {
        if out.len() != first.len() {
            return Err(Error::Mismatch(format!(
                "output {} has {} tags but output 1 has {}",
                k + 1,
                out.len(),
                first.len()
            )));
        }
        for (row, &t) in votes.iter_mut().zip(out) {
            row[t.index()] += 1;
        }
    }
    Ok(VoteLattice { votes, voters: outputs.len() as u32 })
}

/// False exactly for the transitions that cannot occur in a segmentation.
pub fn legal_transition(a: Bies, b: Bies) -> bool {
    use Bies::*;
    !matches!((a, b), (B, S) | (B, B) | (I, B) | (I, S) | (E, I) | (E, E) | (S, I) | (S, E))
}

fn can_start(t: Bies) -> bool {
    matches!(t, Bies::B | Bies::S)
}

fn can_end(t: Bies) -> bool {
    matches!(t, Bies::E | Bies::S)
}

/// Highest-vote sequence with legal transitions that starts with `B`/`S` and
/// ends with `E`/`S`. Ties go to the lower tag index. Returns the sequence and
/// its vote total.
pub fn redecode(votes: &VoteLattice) -> (Vec<Bies>, u64) {
    let n = votes.len();
    let mut best: Vec<[Option<u64>; 4]> = vec![[None; 4]; n];
    let mut back = vec![[0usize; 4]; n];
    for t in Bies::ALL {
        if can_start(t) {
            best[0][t.index()] = Some(votes.count(0, t) as u64);
        }
    }
    for i in 1..n {
        for t in Bies::ALL {
            let mut arg: Option<(u64, usize)> = None;
            for p in Bies::ALL {
                let Some(s) = best[i - 1][p.index()] else { continue };
                if !legal_transition(p, t) {
                    continue;
                }
                if arg.is_none_or(|(b, _)| s > b) {
                    arg = Some((s, p.index()));
                }
            }
            if let Some((s, p)) = arg {
                best[i][t.index()] = Some(s + votes.count(i, t) as u64);
                back[i][t.index()] = p;
            }
        }
    }
    let mut last: Option<(u64, usize)> = None;
    for t in Bies::ALL {
        if let (true, Some(s)) = (can_end(t), best[n - 1][t.index()]) {
            if last.is_none_or(|(b, _)| s > b) {
                last = Some((s, t.index()));
            }
        }
    }
    let (score, mut t) = last.expect("the all-S path is always legal");
    let mut path = vec![Bies::S; n];
    for i in (0..n).rev() {
        path[i] = Bies::ALL[t];
        t = back[i][t];
    }
    (path, score)
}

/// Merges and re-decodes in one step.
pub fn combine(outputs: &[Vec<Bies>]) -> Result<Vec<Bies>> {
    Ok(redecode(&merge_votes(outputs)?).0)
}

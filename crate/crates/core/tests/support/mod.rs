//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use segcrf::corpus::Bies;
use segcrf::crf::Lattice;

/// Raw chain potentials kept outside any library type so the enumeration
/// below never touches the code it checks.
#[derive(Debug, Clone)]
pub struct RawChain {
    pub n: usize,
    pub k: usize,
    pub start: Vec<f64>,
    pub unigram: Vec<Vec<f64>>,
    /// `transition[i][p][t]` scores `p -> t` into position `i`; row 0 unused.
    pub transition: Vec<Vec<Vec<f64>>>,
    pub end: Vec<f64>,
    pub boundary: f64,
    pub allowed: Vec<Vec<usize>>,
}

impl RawChain {
    /// Weights uniform in [-1, 1]; with probability `restrict` a position gets a
    /// random non-empty subset of tags.
    pub fn random(rng: &mut impl Rng, n: usize, k: usize, restrict: f64) -> Self {
        let mut u = || rng.random_range(-1.0..=1.0);
        let start = (0..k).map(|_| u()).collect();
        let unigram = (0..n).map(|_| (0..k).map(|_| u()).collect()).collect();
        let transition = (0..n).map(|_| (0..k).map(|_| (0..k).map(|_| u()).collect()).collect()).collect();
        let end = (0..k).map(|_| u()).collect();
        let boundary = u();
        let allowed = (0..n)
            .map(|_| {
                if rng.random_bool(restrict) {
                    let mut set: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.4)).collect();
                    if set.is_empty() {
                        set.push(rng.random_range(0..k));
                    }
                    set
                } else {
                    (0..k).collect()
                }
            })
            .collect();
        RawChain { n, k, start, unigram, transition, end, boundary, allowed }
    }

    pub fn to_lattice(&self) -> Lattice {
        let mut lat = Lattice::new(self.n, self.k);
        for t in 0..self.k {
            *lat.start_mut(t) = self.start[t];
            *lat.end_mut(t) = self.end[t];
            for i in 0..self.n {
                *lat.unigram_mut(i, t) = self.unigram[i][t];
            }
            for i in 1..self.n {
                for p in 0..self.k {
                    *lat.transition_mut(i, p, t) = self.transition[i][p][t];
                }
            }
        }
        lat.boundary = self.boundary;
        lat.restrict(&self.allowed).unwrap();
        lat
    }

    pub fn score(&self, path: &[usize]) -> f64 {
        let mut s = self.start[path[0]] + self.boundary + self.end[path[self.n - 1]];
        for (i, &t) in path.iter().enumerate() {
            s += self.unigram[i][t];
            if i > 0 {
                s += self.transition[i][path[i - 1]][t];
            }
        }
        s
    }

    /// Visits every allowed path with its score.
    fn walk(&self, mut visit: impl FnMut(&[usize], f64)) {
        let mut path = vec![0; self.n];
        self.descend(0, 0.0, &mut path, &mut visit);
    }

    fn descend(&self, i: usize, acc: f64, path: &mut Vec<usize>, visit: &mut impl FnMut(&[usize], f64)) {
        if i == self.n {
            visit(path, acc + self.end[path[i - 1]] + self.boundary);
            return;
        }
        for &t in &self.allowed[i] {
            let step = if i == 0 { self.start[t] } else { self.transition[i][path[i - 1]][t] };
            path[i] = t;
            self.descend(i + 1, acc + step + self.unigram[i][t], path, visit);
        }
    }

    /// Exhaustive log partition, per-position marginals and best score.
    pub fn enumerate(&self) -> Enumerated {
        let mut best = f64::NEG_INFINITY;
        self.walk(|_, s| best = best.max(s));
        let mut total = 0.0;
        let mut marginals = vec![vec![0.0; self.k]; self.n];
        self.walk(|path, s| {
            let w = (s - best).exp();
            total += w;
            for (i, &t) in path.iter().enumerate() {
                marginals[i][t] += w;
            }
        });
        for row in &mut marginals {
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        Enumerated { log_z: best + total.ln(), marginals, best }
    }
}

pub struct Enumerated {
    pub log_z: f64,
    pub marginals: Vec<Vec<f64>>,
    pub best: f64,
}

/// `|a - b| <= tol * max(|a|, |b|)`.
pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Longest dictionary word beginning at, ending at, and strictly containing
/// each position, found by checking every substring.
pub fn lexicon_by_substrings(words: &[String], x: &[char]) -> Vec<(usize, usize, usize)> {
    let n = x.len();
    let mut out = vec![(0, 0, 0); n];
    for s in 0..n {
        for e in s..n {
            let sub: String = x[s..=e].iter().collect();
            if !words.contains(&sub) {
                continue;
            }
            let m = e - s + 1;
            out[s].0 = out[s].0.max(m);
            out[e].1 = out[e].1.max(m);
            for cell in out.iter_mut().take(e).skip(s + 1) {
                cell.2 = cell.2.max(m);
            }
        }
    }
    out
}

fn legal(a: Bies, b: Bies) -> bool {
    use Bies::*;
    matches!((a, b), (B, I) | (B, E) | (I, I) | (I, E) | (E, B) | (E, S) | (S, B) | (S, S))
}

/// Best-scoring legal BIES sequence under per-position vote rows, by
/// enumerating all `4^n` sequences. Among equal scores the sequence whose
/// reversed tag indices are lexicographically smallest wins.
pub fn best_legal_sequence(votes: &[[u32; 4]]) -> (Vec<Bies>, u64) {
    let n = votes.len();
    let mut best: Option<(Vec<Bies>, u64)> = None;
    for code in 0..4usize.pow(n as u32) {
        // digit i of `code` is the tag at position i
        let seq: Vec<Bies> = (0..n).map(|i| Bies::ALL[(code >> (2 * i)) & 3]).collect();
        let ok = matches!(seq[0], Bies::B | Bies::S)
            && matches!(seq[n - 1], Bies::E | Bies::S)
            && seq.windows(2).all(|w| legal(w[0], w[1]));
        if !ok {
            continue;
        }
        let s: u64 = seq.iter().enumerate().map(|(i, t)| votes[i][t.index()] as u64).sum();
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((seq, s));
        }
    }
    best.expect("all-S is legal")
}

/// Central difference of `f` around `x0`; `f` evaluates the objective with
/// the coordinate set to its argument.
pub fn central_difference(x0: f64, eps: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let up = f(x0 + eps);
    let down = f(x0 - eps);
    f(x0);
    (up - down) / (2.0 * eps)
}

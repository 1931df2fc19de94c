use crate::error::{Error, Result};

/// `ln(sum(exp(x)))` over a slice, exact for a single element.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Log-domain potentials of a first-order chain over `n` characters and `k` tags.
///
/// A path `y` scores
/// `start[y0] + Σ unigram[i][yi] + Σ transition[i][y(i-1)][yi] + end[y(n-1)] + boundary`,
/// where `start`/`end` are the transitions from the begin pseudo tag and into
/// the end pseudo position, and `boundary` holds features firing on the end
/// pseudo tag itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    n: usize,
    k: usize,
    allowed: Vec<Vec<usize>>,
    unigram: Vec<f64>,
    start: Vec<f64>,
    transition: Vec<f64>,
    end: Vec<f64>,
    pub boundary: f64,
}

impl Lattice {
    /// An all-zero lattice with every tag allowed.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n > 0 && k > 0, "lattice needs at least one position and one tag");
        Lattice {
            n,
            k,
            allowed: vec![(0..k).collect(); n],
            unigram: vec![0.0; n * k],
            start: vec![0.0; k],
            transition: vec![0.0; (n - 1) * k * k],
            end: vec![0.0; k],
            boundary: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_tags(&self) -> usize {
        self.k
    }

    pub fn allowed(&self, i: usize) -> &[usize] {
        &self.allowed[i]
    }

    /// Replaces the allowed tags at every position.
    pub fn restrict(&mut self, sets: &[Vec<usize>]) -> Result<()> {
        if sets.len() != self.n {
            return Err(Error::Mismatch(format!(
                "{} constraint sets for a lattice of {} positions",
                sets.len(),
                self.n
            )));
        }
        for (i, set) in sets.iter().enumerate() {
            self.restrict_at(i, set)?;
        }
        Ok(())
    }

    pub fn restrict_at(&mut self, i: usize, set: &[usize]) -> Result<()> {
        let mut set = set.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() || set.iter().any(|&t| t >= self.k) {
            return Err(Error::Invalid(format!("invalid constraint set at position {i}")));
        }
        self.allowed[i] = set;
        Ok(())
    }

    pub fn unigram(&self, i: usize, t: usize) -> f64 {
        self.unigram[i * self.k + t]
    }

    pub fn unigram_mut(&mut self, i: usize, t: usize) -> &mut f64 {
        &mut self.unigram[i * self.k + t]
    }

    pub fn start(&self, t: usize) -> f64 {
        self.start[t]
    }

    pub fn start_mut(&mut self, t: usize) -> &mut f64 {
        &mut self.start[t]
    }

    pub fn end(&self, t: usize) -> f64 {
        self.end[t]
    }

    pub fn end_mut(&mut self, t: usize) -> &mut f64 {
        &mut self.end[t]
    }

    /// Transition score into position `i` (`1 <= i < n`).
    pub fn transition(&self, i: usize, p: usize, t: usize) -> f64 {
        self.transition[((i - 1) * self.k + p) * self.k + t]
    }

    pub fn transition_mut(&mut self, i: usize, p: usize, t: usize) -> &mut f64 {
        &mut self.transition[((i - 1) * self.k + p) * self.k + t]
    }

    /// Multiplies every potential by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in self.unigram.iter_mut().chain(&mut self.start).chain(&mut self.transition).chain(&mut self.end) {
            *v *= factor;
        }
        self.boundary *= factor;
    }

    /// Score of one path; ignores the allowed sets. Summation order matches
    /// the forward recursion so a single-path lattice reproduces it exactly.
    pub fn path_score(&self, tags: &[usize]) -> f64 {
        assert_eq!(tags.len(), self.n);
        let mut acc = self.start[tags[0]] + self.unigram(0, tags[0]);
        for i in 1..self.n {
            acc = (acc + self.transition(i, tags[i - 1], tags[i])) + self.unigram(i, tags[i]);
        }
        (acc + self.end[tags[self.n - 1]]) + self.boundary
    }

    fn forward(&self) -> Vec<f64> {
        let (n, k) = (self.n, self.k);
        let mut alpha = vec![f64::NEG_INFINITY; n * k];
        for &t in &self.allowed[0] {
            alpha[t] = self.start[t] + self.unigram(0, t);
        }
        let mut buf = Vec::with_capacity(k);
        for i in 1..n {
            for &t in &self.allowed[i] {
                buf.clear();
                buf.extend(self.allowed[i - 1].iter().map(|&p| alpha[(i - 1) * k + p] + self.transition(i, p, t)));
                alpha[i * k + t] = log_sum_exp(&buf) + self.unigram(i, t);
            }
        }
        alpha
    }

    fn backward(&self) -> Vec<f64> {
        let (n, k) = (self.n, self.k);
        let mut beta = vec![f64::NEG_INFINITY; n * k];
        for &t in &self.allowed[n - 1] {
            beta[(n - 1) * k + t] = self.end[t] + self.boundary;
        }
        let mut buf = Vec::with_capacity(k);
        for i in (0..n - 1).rev() {
            for &p in &self.allowed[i] {
                buf.clear();
                buf.extend(
                    self.allowed[i + 1]
                        .iter()
                        .map(|&t| self.transition(i + 1, p, t) + self.unigram(i + 1, t) + beta[(i + 1) * k + t]),
                );
                beta[i * k + p] = log_sum_exp(&buf);
            }
        }
        beta
    }

    fn log_z_from_alpha(&self, alpha: &[f64]) -> f64 {
        let last = (self.n - 1) * self.k;
        let terms: Vec<f64> = self.allowed[self.n - 1].iter().map(|&t| alpha[last + t] + self.end[t]).collect();
        log_sum_exp(&terms) + self.boundary
    }

    /// Log of the summed exponentiated scores of all allowed paths.
    pub fn log_partition(&self) -> f64 {
        self.log_z_from_alpha(&self.forward())
    }

    pub fn forward_backward(&self) -> Posteriors {
        let alpha = self.forward();
        let beta = self.backward();
        let log_z = self.log_z_from_alpha(&alpha);
        let (n, k) = (self.n, self.k);
        let mut node = vec![0.0; n * k];
        for i in 0..n {
            for &t in &self.allowed[i] {
                node[i * k + t] = (alpha[i * k + t] + beta[i * k + t] - log_z).exp();
            }
        }
        let mut edge = vec![0.0; (n - 1) * k * k];
        for i in 1..n {
            for &p in &self.allowed[i - 1] {
                let a = alpha[(i - 1) * k + p];
                for &t in &self.allowed[i] {
                    let v = a + self.transition(i, p, t) + self.unigram(i, t) + beta[i * k + t] - log_z;
                    edge[((i - 1) * k + p) * k + t] = v.exp();
                }
            }
        }
        Posteriors { n, k, log_z, node, edge }
    }

    /// Per-position tag posteriors (rows of length `k`, zero outside the allowed sets).
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let post = self.forward_backward();
        (0..self.n).map(|i| (0..self.k).map(|t| post.node(i, t)).collect()).collect()
    }

    /// Highest-scoring allowed path. Ties go to the lower tag index at every
    /// backpointer and at the final position.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let (n, k) = (self.n, self.k);
        let mut delta = vec![f64::NEG_INFINITY; n * k];
        let mut back = vec![0usize; n * k];
        for &t in &self.allowed[0] {
            delta[t] = self.start[t] + self.unigram(0, t);
        }
        for i in 1..n {
            for &t in &self.allowed[i] {
                let mut best = f64::NEG_INFINITY;
                let mut arg = self.allowed[i - 1][0];
                for &p in &self.allowed[i - 1] {
                    let v = delta[(i - 1) * k + p] + self.transition(i, p, t);
                    if v > best {
                        best = v;
                        arg = p;
                    }
                }
                delta[i * k + t] = best + self.unigram(i, t);
                back[i * k + t] = arg;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut last = self.allowed[n - 1][0];
        for &t in &self.allowed[n - 1] {
            let v = delta[(n - 1) * k + t] + self.end[t];
            if v > best {
                best = v;
                last = t;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = last;
        for i in (1..n).rev() {
            path[i - 1] = back[i * k + path[i]];
        }
        (path, best + self.boundary)
    }
}

/// Forward-backward output: the log partition plus node and edge posteriors.
#[derive(Debug, Clone)]
pub struct Posteriors {
    n: usize,
    k: usize,
    pub log_z: f64,
    node: Vec<f64>,
    edge: Vec<f64>,
}

impl Posteriors {
    pub fn node(&self, i: usize, t: usize) -> f64 {
        self.node[i * self.k + t]
    }

    /// Posterior of the transition `p -> t` into position `i` (`1 <= i < n`).
    pub fn edge(&self, i: usize, p: usize, t: usize) -> f64 {
        self.edge[((i - 1) * self.k + p) * self.k + t]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

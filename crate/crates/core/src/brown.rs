//! Brown clustering: greedy agglomerative merging of word classes that loses the least
//! average mutual information (AMI) between adjacent classes.
//!
//! The windowed variant keeps `m` active clusters. Words are inserted one at a time in
//! frequency order; each insertion is followed by the single cheapest merge. Once every word
//! is in, the remaining clusters are merged down to one. The full merge history is a binary
//! tree over the vocabulary whose root-to-leaf paths are the words' bit-strings.

use std::collections::HashMap;
use std::io::Write;

use crate::{Error, Result};

pub const UNK: &str = "<UNK>";

/// Unigram and within-sentence bigram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusCounts {
    /// Sorted by count descending, ties broken lexicographically.
    pub vocab: Vec<(String, u64)>,
    /// Keyed by vocabulary indices.
    pub bigrams: HashMap<(usize, usize), u64>,
    pub total_tokens: u64,
    pub min_count: u64,
}

impl CorpusCounts {
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.vocab.iter().position(|(w, _)| w == word)
    }

    pub fn bigram(&self, a: &str, b: &str) -> u64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.bigrams.get(&(i, j)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn total_bigrams(&self) -> u64 {
        self.bigrams.values().sum()
    }
}

/// Counts words and bigrams; words seen fewer than `min_count` times become `<UNK>`.
pub fn collect_counts<S: AsRef<str>>(lines: &[Vec<S>], min_count: u64) -> Result<CorpusCounts> {
    let mut raw: HashMap<&str, u64> = HashMap::new();
    for line in lines {
        for w in line {
            *raw.entry(w.as_ref()).or_insert(0) += 1;
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut unigram: HashMap<&str, u64> = HashMap::new();
    for (&w, &c) in &raw {
        let key = if c < min_count { UNK } else { w };
        *unigram.entry(key).or_insert(0) += c;
    }
    let mut vocab: Vec<(String, u64)> = unigram.iter().map(|(w, c)| (w.to_string(), *c)).collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.as_str(), i))
        .collect();
    let id = |w: &str| -> usize {
        if raw[w] < min_count {
            index[UNK]
        } else {
            index[w]
        }
    };

    let mut bigrams = HashMap::new();
    for line in lines {
        for pair in line.windows(2) {
            let key = (id(pair[0].as_ref()), id(pair[1].as_ref()));
            *bigrams.entry(key).or_insert(0) += 1;
        }
    }
    let total_tokens = vocab.iter().map(|(_, c)| c).sum();
    Ok(CorpusCounts {
        vocab,
        bigrams,
        total_tokens,
        min_count,
    })
}

/// One step of the merge history. Node ids below the vocabulary size are words (by vocabulary
/// index); later ids are the merges in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Takes the `0` branch.
    pub left: usize,
    pub right: usize,
    pub loss: f64,
    pub ami_before: f64,
    pub ami_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub merges: Vec<Merge>,
    /// Bit-string per word, indexed like `words`.
    pub paths: Vec<String>,
    pub m: usize,
    pub min_count: u64,
}

impl ClusterTree {
    pub fn path_of(&self, word: &str) -> Option<&str> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.paths[i].as_str())
    }

    /// Writes `bitstring<TAB>word<TAB>count` lines sorted by bit-string, after a `#` header.
    pub fn write_paths<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# m={}", self.m)?;
        writeln!(out, "# min_count={}", self.min_count)?;
        writeln!(out, "# lowercase=0")?;
        writeln!(out, "# unk={UNK}")?;
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        order.sort_by(|&a, &b| {
            self.paths[a]
                .cmp(&self.paths[b])
                .then_with(|| self.words[a].cmp(&self.words[b]))
        });
        for i in order {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.paths[i], self.words[i], self.counts[i]
            )?;
        }
        Ok(())
    }
}

fn plogp(c: f64, left: f64, right: f64, n: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        c / n * (c * n / (left * right)).ln()
    }
}

/// Active clusters with their bigram count matrix and per-cell AMI terms.
struct State {
    n: f64,
    nodes: Vec<usize>,
    counts: Vec<Vec<f64>>,
    left: Vec<f64>,
    right: Vec<f64>,
    q: Vec<Vec<f64>>,
    row_q: Vec<f64>,
    col_q: Vec<f64>,
}

impl State {
    fn refresh(&mut self) {
        let k = self.nodes.len();
        self.left = self.counts.iter().map(|r| r.iter().sum()).collect();
        self.right = (0..k)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect();
        self.q = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| plogp(self.counts[i][j], self.left[i], self.right[j], self.n))
                    .collect()
            })
            .collect();
        self.row_q = self.q.iter().map(|r| r.iter().sum()).collect();
        self.col_q = (0..k).map(|j| self.q.iter().map(|r| r[j]).sum()).collect();
    }

    fn ami(&self) -> f64 {
        self.row_q.iter().sum()
    }

    fn merge_loss(&self, a: usize, b: usize) -> f64 {
        let c = &self.counts;
        let q = &self.q;
        let removed = self.row_q[a] + self.row_q[b] + self.col_q[a] + self.col_q[b]
            - q[a][a]
            - q[a][b]
            - q[b][a]
            - q[b][b];
        let lm = self.left[a] + self.left[b];
        let rm = self.right[a] + self.right[b];
        let mut added = plogp(c[a][a] + c[a][b] + c[b][a] + c[b][b], lm, rm, self.n);
        #[allow(clippy::needless_range_loop)]
        for j in 0..self.nodes.len() {
            if j == a || j == b {
                continue;
            }
            added += plogp(c[a][j] + c[b][j], lm, self.right[j], self.n);
            added += plogp(c[j][a] + c[j][b], self.left[j], rm, self.n);
        }
        removed - added
    }

    fn best_pair(&self) -> (usize, usize, f64) {
        let k = self.nodes.len();
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..k {
            for b in a + 1..k {
                let loss = self.merge_loss(a, b);
                // near-ties go to the earlier pair
                if loss < best.2 - 1e-12 * (1.0 + best.2.abs()) || best.2.is_infinite() {
                    best = (a, b, loss);
                }
            }
        }
        best
    }

    fn merge(&mut self, a: usize, b: usize, new_node: usize) {
        for row in &mut self.counts {
            row[a] += row[b];
            row.remove(b);
        }
        // row b already has its columns merged, so it lines up with row a
        let removed = self.counts.remove(b);
        for (x, y) in self.counts[a].iter_mut().zip(&removed) {
            *x += y;
        }
        self.nodes[a] = new_node;
        self.nodes.remove(b);
        self.refresh();
    }
}

/// Runs windowed Brown clustering with `m` active clusters.
pub fn brown_cluster(counts: &CorpusCounts, m: usize) -> Result<ClusterTree> {
    let v = counts.vocab.len();
    if m < 2 || v < 2 {
        return Err(Error::InvalidM { m });
    }
    let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); v];
    let mut in_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); v];
    let mut keys: Vec<_> = counts.bigrams.iter().collect();
    keys.sort();
    for (&(a, b), &c) in keys {
        out_edges[a].push((b, c as f64));
        in_edges[b].push((a, c as f64));
    }

    let n = counts.total_bigrams().max(1) as f64;
    // slot of each inserted word's current cluster, kept in sync through merges via node ids
    let mut cluster_of_word: Vec<Option<usize>> = vec![None; v];
    let mut node_members: Vec<Vec<usize>> = (0..v).map(|w| vec![w]).collect();

    let mut state = State {
        n,
        nodes: Vec::new(),
        counts: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        q: Vec::new(),
        row_q: Vec::new(),
        col_q: Vec::new(),
    };

    let mut merges = Vec::with_capacity(v - 1);
    let mut children: Vec<(usize, usize)> = Vec::with_capacity(v - 1);

    let insert = |state: &mut State, cluster_of_word: &mut Vec<Option<usize>>, w: usize| {
        let slot = state.nodes.len();
        state.nodes.push(w);
        for row in &mut state.counts {
            row.push(0.0);
        }
        state.counts.push(vec![0.0; slot + 1]);
        cluster_of_word[w] = Some(slot);
        for &(u, c) in &out_edges[w] {
            if let Some(s) = cluster_of_word[u] {
                state.counts[slot][s] += c;
            }
        }
        for &(u, c) in &in_edges[w] {
            if u == w {
                continue;
            }
            if let Some(s) = cluster_of_word[u] {
                state.counts[s][slot] += c;
            }
        }
    };

    let mut do_merge = |state: &mut State,
                        cluster_of_word: &mut Vec<Option<usize>>,
                        node_members: &mut Vec<Vec<usize>>| {
        let ami_before = state.ami();
        let (a, b, loss) = state.best_pair();
        let (na, nb) = (state.nodes[a], state.nodes[b]);
        let new_node = v + children.len();
        children.push((na, nb));
        let mut members = std::mem::take(&mut node_members[na]);
        members.extend(std::mem::take(&mut node_members[nb]));
        state.merge(a, b, new_node);
        for &w in &members {
            cluster_of_word[w] = Some(a);
        }
        // slots after b shifted down by one
        for slot in cluster_of_word.iter_mut().flatten() {
            if *slot > b {
                *slot -= 1;
            }
        }
        node_members.push(members);
        merges.push(Merge {
            left: na,
            right: nb,
            loss,
            ami_before,
            ami_after: state.ami(),
        });
    };

    for w in 0..v.min(m) {
        insert(&mut state, &mut cluster_of_word, w);
    }
    state.refresh();
    for w in m..v {
        insert(&mut state, &mut cluster_of_word, w);
        state.refresh();
        do_merge(&mut state, &mut cluster_of_word, &mut node_members);
    }
    while state.nodes.len() > 1 {
        do_merge(&mut state, &mut cluster_of_word, &mut node_members);
    }

    let mut paths = vec![String::new(); v];
    let root = state.nodes[0];
    let mut stack = vec![(root, String::new())];
    while let Some((node, path)) = stack.pop() {
        if node < v {
            paths[node] = path;
        } else {
            let (l, r) = children[node - v];
            stack.push((r, format!("{path}1")));
            stack.push((l, format!("{path}0")));
        }
    }

    Ok(ClusterTree {
        words: counts.vocab.iter().map(|(w, _)| w.clone()).collect(),
        counts: counts.vocab.iter().map(|(_, c)| *c).collect(),
        merges,
        paths,
        m,
        min_count: counts.min_count,
    })
}

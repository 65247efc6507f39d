//! Coreference evaluation: MUC, B³, CEAF_e and the CoNLL average.
//!
//! Mentions are matched by exact span. Corpus-level scores sum numerators
//! and denominators over documents before dividing.

use std::collections::HashMap;
use std::fmt;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub type Span = (usize, usize);

/// Disjoint, non-empty mention chains of one document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub chains: Vec<Vec<Span>>,
}

impl Partition {
    pub fn new(chains: Vec<Vec<Span>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &chains {
            if c.is_empty() {
                return Err(Error::Config("empty chain in partition".into()));
            }
            for s in c {
                if !seen.insert(*s) {
                    return Err(Error::Config(format!(
                        "mention {s:?} appears in two chains"
                    )));
                }
            }
        }
        Ok(Partition { chains })
    }

    /// Chains from the document's NP chain ids; unchained NPs are singletons.
    pub fn from_document(doc: &Document) -> Self {
        Partition {
            chains: doc
                .gold_chains()
                .into_iter()
                .map(|c| c.into_iter().map(|i| doc.nps[i].span()).collect())
                .collect(),
        }
    }

    fn chain_index(&self) -> HashMap<Span, usize> {
        self.chains
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |s| (*s, i)))
            .collect()
    }

    pub fn n_mentions(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }

    fn from_ratios(p_num: f64, p_den: f64, r_num: f64, r_den: f64) -> Self {
        let ratio = |n: f64, d: f64| if d > 0.0 { n / d } else { 0.0 };
        Prf::new(ratio(p_num, p_den), ratio(r_num, r_den))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricReport {
    pub muc: Prf,
    pub b3: Prf,
    pub ceafe: Prf,
    /// Mean of the three F1 scores, 0-100.
    pub conll: f64,
}

impl MetricReport {
    pub fn from_components(muc: Prf, b3: Prf, ceafe: Prf) -> Self {
        MetricReport {
            muc,
            b3,
            ceafe,
            conll: 100.0 * (muc.f1 + b3.f1 + ceafe.f1) / 3.0,
        }
    }

    /// Single-line `key=value` form.
    pub fn summary_line(&self) -> String {
        format!(
            "muc_p={:.4} muc_r={:.4} muc_f={:.4} b3_p={:.4} b3_r={:.4} b3_f={:.4} ceafe_p={:.4} ceafe_r={:.4} ceafe_f={:.4} conll={:.2}",
            self.muc.precision,
            self.muc.recall,
            self.muc.f1,
            self.b3.precision,
            self.b3.recall,
            self.b3.f1,
            self.ceafe.precision,
            self.ceafe.recall,
            self.ceafe.f1,
            self.conll
        )
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>10}{:>10}{:>10}", "metric", "P", "R", "F1")?;
        for (name, m) in [("MUC", self.muc), ("B3", self.b3), ("CEAFe", self.ceafe)] {
            writeln!(
                f,
                "{:<8}{:>10.2}{:>10.2}{:>10.2}",
                name,
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1
            )?;
        }
        write!(f, "{:<8}{:>30.2}", "CoNLL", self.conll)
    }
}

/// Raw sums from which corpus-level scores are computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricCounts {
    pub muc: [f64; 4],
    pub b3: [f64; 4],
    pub ceafe: [f64; 4],
}

impl MetricCounts {
    pub fn add(&mut self, other: &MetricCounts) {
        for (a, b) in [
            (&mut self.muc, &other.muc),
            (&mut self.b3, &other.b3),
            (&mut self.ceafe, &other.ceafe),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn report(&self) -> MetricReport {
        let prf = |c: &[f64; 4]| Prf::from_ratios(c[0], c[1], c[2], c[3]);
        MetricReport::from_components(prf(&self.muc), prf(&self.b3), prf(&self.ceafe))
    }
}

/// MUC link counts `(p_num, p_den, r_num, r_den)`.
fn muc_counts(key: &Partition, response: &Partition) -> [f64; 4] {
    // For each chain of `a`, the number of pieces `b` cuts it into; mentions
    // missing from `b` are pieces of their own.
    fn links(a: &Partition, b: &Partition) -> (f64, f64) {
        let idx = b.chain_index();
        let (mut num, mut den) = (0.0, 0.0);
        for chain in &a.chains {
            let mut parts = std::collections::HashSet::new();
            let mut unaligned = 0usize;
            for s in chain {
                match idx.get(s) {
                    Some(&c) => {
                        parts.insert(c);
                    }
                    None => unaligned += 1,
                }
            }
            num += (chain.len() - parts.len() - unaligned) as f64;
            den += (chain.len() - 1) as f64;
        }
        (num, den)
    }
    let (r_num, r_den) = links(key, response);
    let (p_num, p_den) = links(response, key);
    [p_num, p_den, r_num, r_den]
}

fn b3_counts(key: &Partition, response: &Partition) -> [f64; 4] {
    fn side(a: &Partition, b: &Partition) -> (f64, f64) {
        let idx = b.chain_index();
        let mut num = 0.0;
        for chain in &a.chains {
            for s in chain {
                let overlap = match idx.get(s) {
                    Some(&c) => b.chains[c].iter().filter(|m| chain.contains(m)).count(),
                    None => 1,
                };
                num += overlap as f64 / chain.len() as f64;
            }
        }
        (num, a.n_mentions() as f64)
    }
    let (r_num, r_den) = side(key, response);
    let (p_num, p_den) = side(response, key);
    [p_num, p_den, r_num, r_den]
}

pub fn phi4(k: &[Span], r: &[Span]) -> f64 {
    let common = k.iter().filter(|s| r.contains(s)).count();
    2.0 * common as f64 / (k.len() + r.len()) as f64
}

fn ceafe_counts(key: &Partition, response: &Partition) -> [f64; 4] {
    let sim: Vec<Vec<f64>> = key
        .chains
        .iter()
        .map(|k| response.chains.iter().map(|r| phi4(k, r)).collect())
        .collect();
    let total = max_weight_matching(&sim).1;
    [
        total,
        response.chains.len() as f64,
        total,
        key.chains.len() as f64,
    ]
}

pub fn counts(key: &Partition, response: &Partition) -> MetricCounts {
    MetricCounts {
        muc: muc_counts(key, response),
        b3: b3_counts(key, response),
        ceafe: ceafe_counts(key, response),
    }
}

pub fn muc(key: &Partition, response: &Partition) -> Prf {
    let c = muc_counts(key, response);
    Prf::from_ratios(c[0], c[1], c[2], c[3])
}

pub fn b_cubed(key: &Partition, response: &Partition) -> Prf {
    let c = b3_counts(key, response);
    Prf::from_ratios(c[0], c[1], c[2], c[3])
}

pub fn ceaf_e(key: &Partition, response: &Partition) -> Prf {
    let c = ceafe_counts(key, response);
    Prf::from_ratios(c[0], c[1], c[2], c[3])
}

pub fn conll(key: &Partition, response: &Partition) -> MetricReport {
    counts(key, response).report()
}

/// Corpus-level report over `(key, response)` document pairs.
pub fn conll_corpus<'a>(
    pairs: impl IntoIterator<Item = (&'a Partition, &'a Partition)>,
) -> MetricReport {
    let mut total = MetricCounts::default();
    for (k, r) in pairs {
        total.add(&counts(k, r));
    }
    total.report()
}

/// Pairs key and response documents by id and scores the corpus.
pub fn score_documents(key: &[Document], response: &[Document]) -> Result<MetricReport> {
    let by_id: HashMap<&str, &Document> = response.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut pairs = Vec::with_capacity(key.len());
    for k in key {
        let r = by_id
            .get(k.doc_id.as_str())
            .ok_or_else(|| Error::Config(format!("response lacks document {}", k.doc_id)))?;
        pairs.push((Partition::from_document(k), Partition::from_document(r)));
    }
    if response.len() != key.len() {
        return Err(Error::LengthMismatch(key.len(), response.len()));
    }
    Ok(conll_corpus(pairs.iter().map(|(a, b)| (a, b))))
}

/// Maximum-weight assignment of rows to columns (Kuhn-Munkres).
/// Returns the column assigned to each row (if any) and the total weight.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    let transpose = rows > cols;
    let (n, m) = if transpose {
        (cols, rows)
    } else {
        (rows, cols)
    };
    // cost[i][j] for i < n <= m; minimise negated weight
    let cost = |i: usize, j: usize| {
        if transpose {
            -weights[j][i]
        } else {
            -weights[i][j]
        }
    };

    // 1-indexed potentials; p[j] is the row matched to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=m {
        if p[j] == 0 {
            continue;
        }
        let (r, c) = if transpose {
            (j - 1, p[j] - 1)
        } else {
            (p[j] - 1, j - 1)
        };
        assignment[r] = Some(c);
        total += weights[r][c];
    }
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(chains: &[&[usize]]) -> Partition {
        Partition::new(
            chains
                .iter()
                .map(|c| c.iter().map(|&i| (i, i)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn muc_split_chain() {
        let m = muc(&part(&[&[0, 1, 2]]), &part(&[&[0, 1], &[2]]));
        assert!(close(m.recall, 0.5) && close(m.precision, 1.0) && close(m.f1, 2.0 / 3.0));
    }

    #[test]
    fn muc_all_singletons_is_zero() {
        let k = part(&[&[0], &[1], &[2]]);
        assert_eq!(muc(&k, &k), Prf::new(0.0, 0.0));
        assert_eq!(muc(&k, &k).f1, 0.0);
    }

    #[test]
    fn b3_pairs() {
        let b = b_cubed(&part(&[&[0, 1, 2, 3]]), &part(&[&[0, 1], &[2, 3]]));
        assert!(close(b.precision, 1.0) && close(b.recall, 0.5));
        let b = b_cubed(
            &part(&[&[0, 1, 2, 3, 4]]),
            &part(&[&[0], &[1], &[2], &[3], &[4]]),
        );
        assert!(close(b.recall, 0.2));
    }

    #[test]
    fn ceafe_merge() {
        let c = ceaf_e(&part(&[&[0, 1], &[2]]), &part(&[&[0, 1, 2]]));
        assert!(close(c.recall, 0.4) && close(c.precision, 0.8));
    }

    #[test]
    fn identity_scores_one() {
        let k = part(&[&[0, 3], &[1], &[2, 4, 5]]);
        let r = conll(&k, &k);
        for m in [r.muc, r.b3, r.ceafe] {
            assert!(close(m.precision, 1.0) && close(m.recall, 1.0) && close(m.f1, 1.0));
        }
        assert!(close(r.conll, 100.0));
    }

    #[test]
    fn conll_is_the_mean_f() {
        let f = |x: f64| Prf {
            precision: x,
            recall: x,
            f1: x,
        };
        assert!(close(
            MetricReport::from_components(f(0.6), f(0.7), f(0.8)).conll,
            70.0
        ));
    }

    #[test]
    fn missing_mentions_count_as_singletons() {
        let key = part(&[&[0, 1]]);
        let resp = part(&[&[0]]);
        let b = b_cubed(&key, &resp);
        assert!(close(b.recall, 0.5) && close(b.precision, 1.0));
        assert!(close(muc(&key, &resp).recall, 0.0));
    }

    #[test]
    fn matching_small_cases() {
        let w = vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![0.5, 0.5]];
        let (a, t) = max_weight_matching(&w);
        assert!(close(t, 5.0));
        assert_eq!(a, vec![Some(1), Some(0), None]);
        assert_eq!(max_weight_matching(&[]).1, 0.0);
    }

    #[test]
    fn partitions_reject_overlap() {
        assert!(Partition::new(vec![vec![(0, 0)], vec![(0, 0)]]).is_err());
        assert!(Partition::new(vec![vec![]]).is_err());
    }
}

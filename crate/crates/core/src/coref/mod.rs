//! Antecedent-tree coreference resolution with a latent structured perceptron.
//!
//! Every mention picks one antecedent among the earlier mentions or a
//! virtual ROOT (discourse-new). The chosen edges form a tree rooted at
//! ROOT whose subtrees are the coreference chains.

mod features;
mod io;
mod model;

use std::fmt;
use std::str::FromStr;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub use features::{pair_features, MentionInfo};
pub use io::{decode_coref_model, encode_coref_model, load_coref_model, save_coref_model};
pub use model::{decode, train_coref, CorefModel, CorefTrainReport, FeatureRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProsodyFeature {
    None,
    AccentPresence,
    NuclearPresence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    ShortNp,
    AllNp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureConfig {
    pub prosody_feature: ProsodyFeature,
    pub scope: Scope,
    pub label_source: crate::annotation::LabelSource,
}

impl FeatureConfig {
    pub fn baseline() -> Self {
        FeatureConfig {
            prosody_feature: ProsodyFeature::None,
            scope: Scope::ShortNp,
            label_source: crate::annotation::LabelSource::Gold,
        }
    }
}

impl fmt::Display for ProsodyFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProsodyFeature::None => "none",
            ProsodyFeature::AccentPresence => "accent",
            ProsodyFeature::NuclearPresence => "nuclear",
        })
    }
}

impl FromStr for ProsodyFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ProsodyFeature::None),
            "accent" => Ok(ProsodyFeature::AccentPresence),
            "nuclear" => Ok(ProsodyFeature::NuclearPresence),
            _ => Err(Error::Config(format!("unknown prosodic feature {s:?}"))),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::ShortNp => "short",
            Scope::AllNp => "all",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short" => Ok(Scope::ShortNp),
            "all" => Ok(Scope::AllNp),
            _ => Err(Error::Config(format!("unknown scope {s:?}"))),
        }
    }
}

/// A mention is an NP together with its position in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mention {
    pub np_index: usize,
    pub rank: usize,
}

/// Mentions ordered by start token, longer span first.
pub fn mentions(doc: &Document) -> Vec<Mention> {
    let mut idx: Vec<usize> = (0..doc.nps.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&doc.nps[a], &doc.nps[b]);
        x.start.cmp(&y.start).then(y.end.cmp(&x.end))
    });
    idx.into_iter()
        .enumerate()
        .map(|(rank, np_index)| Mention { np_index, rank })
        .collect()
}

/// `parent[i]` is the antecedent rank of mention `i`, `None` for ROOT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntecedentTree {
    pub parent: Vec<Option<usize>>,
}

impl AntecedentTree {
    pub fn is_valid(&self) -> bool {
        self.parent
            .iter()
            .enumerate()
            .all(|(i, p)| p.is_none_or(|p| p < i))
    }
}

/// Connected components of the tree once ROOT is removed, each sorted,
/// ordered by their first mention.
pub fn chains_from_tree(tree: &AntecedentTree) -> Vec<Vec<usize>> {
    let mut chain_of = vec![usize::MAX; tree.parent.len()];
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for (i, p) in tree.parent.iter().enumerate() {
        let c = match p {
            Some(p) if *p < i => chain_of[*p],
            _ => {
                chains.push(Vec::new());
                chains.len() - 1
            }
        };
        chain_of[i] = c;
        chains[c].push(i);
    }
    chains
}

/// Writes `chains` (over mention ranks) into the document's NP chain ids.
/// Chains of two or more mentions are numbered from 1 in order;
/// singletons get no id.
pub fn apply_chains(doc: &mut Document, chains: &[Vec<usize>]) {
    let ms = mentions(doc);
    for np in &mut doc.nps {
        np.chain_id = None;
    }
    let mut next = 1u32;
    for chain in chains {
        if chain.len() < 2 {
            continue;
        }
        for &rank in chain {
            doc.nps[ms[rank].np_index].chain_id = Some(next);
        }
        next += 1;
    }
}

/// Gold chain membership per mention rank: index of the chain in
/// `Document::gold_chains` order.
pub(crate) fn gold_chain_of_rank(doc: &Document, ms: &[Mention]) -> Vec<usize> {
    let mut chain_of_np = vec![0usize; doc.nps.len()];
    for (c, members) in doc.gold_chains().iter().enumerate() {
        for &np in members {
            chain_of_np[np] = c;
        }
    }
    ms.iter().map(|m| chain_of_np[m.np_index]).collect()
}

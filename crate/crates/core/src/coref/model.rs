use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{features_for, MentionInfo};
use super::{gold_chain_of_rank, mentions, AntecedentTree, FeatureConfig};
use crate::annotation::ProsodyView;
use crate::corpus::Document;
use crate::error::{Error, Result};

/// Interns feature strings; ids are assigned in first-seen order and never change.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureRegistry {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl FeatureRegistry {
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if ids.insert(n.clone(), i as u32).is_some() {
                return Err(Error::ModelFormat(format!("duplicate feature name {n:?}")));
            }
        }
        Ok(FeatureRegistry { names, ids })
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefModel {
    pub config: FeatureConfig,
    pub registry: FeatureRegistry,
    pub weights: Vec<f64>,
    pub averaged_weights: Vec<f64>,
}

impl CorefModel {
    pub fn new(config: FeatureConfig) -> Self {
        CorefModel {
            config,
            registry: FeatureRegistry::default(),
            weights: Vec::new(),
            averaged_weights: Vec::new(),
        }
    }

    /// Sets raw and averaged weight of a feature, registering it if needed.
    pub fn set_weight(&mut self, name: &str, w: f64) {
        let id = self.registry.intern(name) as usize;
        self.grow();
        self.weights[id] = w;
        self.averaged_weights[id] = w;
    }

    fn grow(&mut self) {
        self.weights.resize(self.registry.len(), 0.0);
        self.averaged_weights.resize(self.registry.len(), 0.0);
    }

    /// Score of a feature vector under the averaged weights; unknown
    /// features contribute nothing.
    pub fn score(&self, features: &[String]) -> f64 {
        features
            .iter()
            .filter_map(|f| self.registry.get(f))
            .map(|id| self.averaged_weights[id as usize])
            .sum()
    }

    /// Score under the raw (non-averaged) weights.
    pub fn score_raw(&self, features: &[String]) -> f64 {
        features
            .iter()
            .filter_map(|f| self.registry.get(f))
            .map(|id| self.weights[id as usize])
            .sum()
    }

    fn lookup(&self, features: &[String]) -> Vec<u32> {
        features
            .iter()
            .filter_map(|f| self.registry.get(f))
            .collect()
    }
}

/// Candidate feature ids for every mention: `cands[i][0]` is ROOT,
/// `cands[i][j + 1]` is antecedent `j`.
type Candidates = Vec<Vec<Vec<u32>>>;

fn doc_candidates(
    doc: &Document,
    view: Option<&ProsodyView>,
    cfg: &FeatureConfig,
    mut id_of: impl FnMut(&[String]) -> Vec<u32>,
) -> Candidates {
    let ms = mentions(doc);
    let infos = MentionInfo::collect(doc, &ms, view, cfg);
    (0..infos.len())
        .map(|i| {
            std::iter::once(None)
                .chain((0..i).map(Some))
                .map(|j| id_of(&features_for(&infos[i], j.map(|j| &infos[j]))))
                .collect()
        })
        .collect()
}

fn dot(w: &[f64], ids: &[u32]) -> f64 {
    ids.iter().map(|&i| w[i as usize]).sum()
}

/// Index of the best candidate among `allowed` (ascending); the first
/// maximum wins, so ROOT (0) beats ties, then the smaller rank.
fn best_candidate(w: &[f64], cands: &[Vec<u32>], allowed: impl Iterator<Item = usize>) -> usize {
    let mut best = usize::MAX;
    let mut best_score = f64::NEG_INFINITY;
    for c in allowed {
        let s = dot(w, &cands[c]);
        if best == usize::MAX || s > best_score {
            best = c;
            best_score = s;
        }
    }
    best
}

fn to_parent(c: usize) -> Option<usize> {
    c.checked_sub(1)
}

/// Greedy antecedent choice per mention under the averaged weights. Each
/// mention's choice is independent, so this is also the best-scoring tree.
pub fn decode(model: &CorefModel, doc: &Document, view: Option<&ProsodyView>) -> AntecedentTree {
    let cands = doc_candidates(doc, view, &model.config, |f| model.lookup(f));
    let parent = cands
        .iter()
        .map(|c| to_parent(best_candidate(&model.averaged_weights, c, 0..c.len())))
        .collect();
    AntecedentTree { parent }
}

#[derive(Debug, Clone)]
pub struct CorefTrainReport {
    pub model: CorefModel,
    /// Number of mention-level corrections made in each epoch.
    pub updates_per_epoch: Vec<usize>,
    /// Documents whose predicted tree disagreed with the latent gold tree.
    pub tree_errors_per_epoch: Vec<usize>,
}

/// Latent-tree structured perceptron with weight averaging.
///
/// For each document the current weights pick a tree; the gold tree is
/// the best-scoring tree among those consistent with the gold chains
/// (chain-initial mentions on ROOT, later ones on any earlier chain
/// member). On disagreement the weights move towards the gold tree.
pub fn train_coref(
    docs: &[Document],
    views: &[Option<ProsodyView>],
    cfg: &FeatureConfig,
    epochs: usize,
    seed: u64,
) -> Result<CorefTrainReport> {
    if epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if docs.len() != views.len() {
        return Err(Error::LengthMismatch(docs.len(), views.len()));
    }
    if !docs
        .iter()
        .any(|d| d.gold_chains().iter().any(|c| c.len() > 1))
    {
        return Err(Error::NoGoldChains);
    }

    let mut model = CorefModel::new(*cfg);
    let mut prepared: Vec<(Candidates, Vec<usize>)> = Vec::with_capacity(docs.len());
    for (doc, view) in docs.iter().zip(views) {
        let registry = &mut model.registry;
        let cands = doc_candidates(doc, view.as_ref(), cfg, |f| {
            f.iter().map(|s| registry.intern(s)).collect()
        });
        let chain_of = gold_chain_of_rank(doc, &mentions(doc));
        prepared.push((cands, chain_of));
    }
    model.grow();
    let n = model.registry.len();

    let mut w = vec![0.0; n];
    // sum of c * delta over updates, for averaging
    let mut u = vec![0.0; n];
    let mut c = 1.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut updates_per_epoch = Vec::with_capacity(epochs);
    let mut tree_errors_per_epoch = Vec::with_capacity(epochs);

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let mut updates = 0;
        let mut tree_errors = 0;
        for &d in &order {
            let (cands, chain_of) = &prepared[d];
            let mut moves: Vec<(usize, usize, usize)> = Vec::new();
            for (i, mc) in cands.iter().enumerate() {
                let pred = best_candidate(&w, mc, 0..mc.len());
                let earlier: Vec<usize> = (0..i)
                    .filter(|&j| chain_of[j] == chain_of[i])
                    .map(|j| j + 1)
                    .collect();
                let gold = if earlier.is_empty() {
                    0
                } else {
                    best_candidate(&w, mc, earlier.into_iter())
                };
                if pred != gold {
                    moves.push((i, gold, pred));
                }
            }
            if !moves.is_empty() {
                tree_errors += 1;
                updates += moves.len();
                for (i, gold, pred) in moves {
                    for &f in &cands[i][gold] {
                        w[f as usize] += 1.0;
                        u[f as usize] += c;
                    }
                    for &f in &cands[i][pred] {
                        w[f as usize] -= 1.0;
                        u[f as usize] -= c;
                    }
                }
            }
            c += 1.0;
        }
        updates_per_epoch.push(updates);
        tree_errors_per_epoch.push(tree_errors);
    }

    model.averaged_weights = w.iter().zip(&u).map(|(w, u)| w - u / c).collect();
    model.weights = w;
    Ok(CorefTrainReport {
        model,
        updates_per_epoch,
        tree_errors_per_epoch,
    })
}

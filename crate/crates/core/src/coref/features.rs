//! Sparse binary feature templates for (anaphor, antecedent) pairs.

use super::{FeatureConfig, Mention, ProsodyFeature, Scope};
use crate::annotation::{np_features, ProsodyView, SHORT_NP_MAX_LEN};
use crate::corpus::Document;

const DEFINITE: &[&str] = &[
    "the", "this", "that", "these", "those", "der", "die", "das", "den", "dem", "des", "dieser",
    "diese", "dieses",
];
const INDEFINITE: &[&str] = &[
    "a", "an", "some", "ein", "eine", "einen", "einem", "einer", "eines",
];

fn is_noun_tag(pos: &str) -> bool {
    pos.starts_with("NN") || pos == "NE"
}

fn is_pronoun_tag(pos: &str) -> bool {
    pos.starts_with("PRP") || pos.starts_with("PP") || pos == "PRF" || pos == "PDS" || pos == "WP"
}

/// Per-mention attributes the templates read.
#[derive(Debug, Clone)]
pub struct MentionInfo {
    pub rank: usize,
    pub sent_idx: usize,
    pub len: usize,
    pub surface: String,
    pub lower: String,
    pub head_lower: String,
    pub head_pos: String,
    pub is_pronoun: bool,
    pub definiteness: &'static str,
    /// The prosodic bit, `None` when prosody is off or gated out by scope.
    pub prosody: Option<bool>,
}

impl MentionInfo {
    pub fn collect(
        doc: &Document,
        mentions: &[Mention],
        view: Option<&ProsodyView>,
        cfg: &FeatureConfig,
    ) -> Vec<MentionInfo> {
        mentions
            .iter()
            .map(|m| MentionInfo::new(doc, m, view, cfg))
            .collect()
    }

    pub fn new(
        doc: &Document,
        m: &Mention,
        view: Option<&ProsodyView>,
        cfg: &FeatureConfig,
    ) -> MentionInfo {
        let np = &doc.nps[m.np_index];
        let toks = &doc.tokens[np.start..=np.end];
        let surface = toks
            .iter()
            .map(|t| t.form.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let head = toks
            .iter()
            .rev()
            .find(|t| is_noun_tag(&t.pos))
            .unwrap_or(&toks[toks.len() - 1]);
        let first = toks[0].form.to_lowercase();
        let is_pronoun = toks.len() == 1 && is_pronoun_tag(&toks[0].pos);
        let definiteness = if is_pronoun {
            "pron"
        } else if DEFINITE.contains(&first.as_str()) {
            "def"
        } else if INDEFINITE.contains(&first.as_str()) {
            "indef"
        } else {
            "other"
        };
        let prosody = match (cfg.prosody_feature, view) {
            (ProsodyFeature::None, _) | (_, None) => None,
            (kind, Some(view)) => {
                let f = np_features(np, view);
                let gated = cfg.scope == Scope::ShortNp && np.len() > SHORT_NP_MAX_LEN;
                if gated {
                    None
                } else if kind == ProsodyFeature::AccentPresence {
                    Some(f.accent_presence)
                } else {
                    Some(f.nuclear_presence)
                }
            }
        };
        MentionInfo {
            rank: m.rank,
            sent_idx: toks[0].sent_idx,
            len: toks.len(),
            lower: surface.to_lowercase(),
            surface,
            head_lower: head.form.to_lowercase(),
            head_pos: head.pos.clone(),
            is_pronoun,
            definiteness,
            prosody,
        }
    }
}

fn len_bucket(n: usize) -> &'static str {
    match n {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        _ => "4+",
    }
}

fn mention_distance_bucket(d: usize) -> &'static str {
    match d {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4..=7 => "4-7",
        _ => "8+",
    }
}

fn sentence_distance_bucket(d: usize) -> &'static str {
    match d {
        0 => "0",
        1 => "1",
        2 => "2",
        _ => "3+",
    }
}

fn bit(b: bool) -> u8 {
    b as u8
}

/// Feature strings for attaching `ana` to `ant`, or to ROOT when `ant` is `None`.
pub fn features_for(ana: &MentionInfo, ant: Option<&MentionInfo>) -> Vec<String> {
    let pron = bit(ana.is_pronoun);
    let mut base: Vec<String> = Vec::with_capacity(16);
    match ant {
        None => {
            base.push("ROOT".into());
            base.push(format!("ROOT&DEF={}", ana.definiteness));
            base.push(format!("ROOT&LEN={}", len_bucket(ana.len)));
            base.push(format!("ROOT&HPOS={}", ana.head_pos));
            let mut out = Vec::with_capacity(2 * base.len() + 1);
            for f in base {
                out.push(format!("PRON={pron}&{f}"));
                out.push(f);
            }
            if let Some(p) = ana.prosody {
                out.push(format!("ROOT&PROS={}", bit(p)));
            }
            out
        }
        Some(ant) => {
            let exact = bit(ana.surface == ant.surface);
            base.push("LINK".into());
            base.push(format!("EXACT={exact}"));
            base.push(format!("LOWER={}", bit(ana.lower == ant.lower)));
            base.push(format!("HEAD={}", bit(ana.head_lower == ant.head_lower)));
            base.push(format!("DEF={}", ana.definiteness));
            base.push(format!("LEN={}", len_bucket(ana.len)));
            base.push(format!("ANTLEN={}", len_bucket(ant.len)));
            base.push(format!("ANTPRON={}", bit(ant.is_pronoun)));
            base.push(format!(
                "MDIST={}",
                mention_distance_bucket(ana.rank - ant.rank)
            ));
            base.push(format!(
                "SDIST={}",
                sentence_distance_bucket(ana.sent_idx - ant.sent_idx)
            ));
            base.push(format!("HPOS={}_{}", ant.head_pos, ana.head_pos));
            let mut out = Vec::with_capacity(2 * base.len() + 2);
            for f in base {
                out.push(format!("PRON={pron}&{f}"));
                out.push(f);
            }
            if let Some(p) = ana.prosody {
                out.push(format!("PROS={}", bit(p)));
                out.push(format!("PROS={}&EXACT={exact}", bit(p)));
            }
            out
        }
    }
}

/// Features for attaching `anaphor` to `antecedent` (ROOT when `None`).
pub fn pair_features(
    doc: &Document,
    view: Option<&ProsodyView>,
    anaphor: &Mention,
    antecedent: Option<&Mention>,
    cfg: &FeatureConfig,
) -> Vec<String> {
    let ana = MentionInfo::new(doc, anaphor, view, cfg);
    let ant = antecedent.map(|m| MentionInfo::new(doc, m, view, cfg));
    features_for(&ana, ant.as_ref())
}

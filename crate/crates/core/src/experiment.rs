//! The prosodic-feature experiment grid: a text-only baseline plus every
//! combination of feature, NP scope and label setting, scored with CoNLL.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::annotation::{select_view, LabelSource, ProsodyView};
use crate::coref::{
    chains_from_tree, decode, mentions, train_coref, CorefModel, FeatureConfig, ProsodyFeature,
    Scope,
};
use crate::corpus::{parse_corpus, Document};
use crate::error::{Error, Result};
use crate::metrics::{conll, conll_corpus, Partition};
use crate::synth::key_values;

/// Which labels feed training and testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Manual labels in training and test.
    Gold,
    /// Manual labels in training, predicted labels in test.
    GoldAuto,
    /// Predicted labels in training and test.
    Auto,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Gold, Setting::GoldAuto, Setting::Auto];

    pub fn sources(self) -> (LabelSource, LabelSource) {
        match self {
            Setting::Gold => (LabelSource::Gold, LabelSource::Gold),
            Setting::GoldAuto => (LabelSource::Gold, LabelSource::Predicted),
            Setting::Auto => (LabelSource::Predicted, LabelSource::Predicted),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Gold => "gold",
            Setting::GoldAuto => "gold/auto",
            Setting::Auto => "auto",
        })
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(Setting::Gold),
            "gold/auto" => Ok(Setting::GoldAuto),
            "auto" => Ok(Setting::Auto),
            _ => Err(Error::Config(format!("unknown setting {s:?}"))),
        }
    }
}

/// One grid cell. The baseline has no prosodic feature, scope or setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub feature: ProsodyFeature,
    pub scope: Option<Scope>,
    pub setting: Option<Setting>,
}

impl Cell {
    pub const BASELINE: Cell = Cell {
        feature: ProsodyFeature::None,
        scope: None,
        setting: None,
    };

    pub fn new(feature: ProsodyFeature, scope: Scope, setting: Setting) -> Self {
        if feature == ProsodyFeature::None {
            return Cell::BASELINE;
        }
        Cell {
            feature,
            scope: Some(scope),
            setting: Some(setting),
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.feature == ProsodyFeature::None
    }

    fn feature_config(&self, source: LabelSource) -> FeatureConfig {
        FeatureConfig {
            prosody_feature: self.feature,
            scope: self.scope.unwrap_or(Scope::ShortNp),
            label_source: source,
        }
    }
}

/// CoNLL of one cell for one seed, corpus-level and per test document.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub conll: f64,
    pub per_doc: Vec<f64>,
}

fn views(
    docs: &[Document],
    feature: ProsodyFeature,
    source: LabelSource,
) -> Result<Vec<Option<ProsodyView>>> {
    docs.iter()
        .map(|d| match feature {
            ProsodyFeature::None => Ok(None),
            _ => select_view(d, source).map(Some),
        })
        .collect()
}

/// Chains predicted by `model` as a span partition.
pub fn response_partition(
    model: &CorefModel,
    doc: &Document,
    view: Option<&ProsodyView>,
) -> Partition {
    let ms = mentions(doc);
    let tree = decode(model, doc, view);
    Partition {
        chains: chains_from_tree(&tree)
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|r| doc.nps[ms[r].np_index].span())
                    .collect()
            })
            .collect(),
    }
}

/// Trains on `train`, decodes and scores `test`.
pub fn run_cell(
    train: &[Document],
    test: &[Document],
    cell: Cell,
    seed: u64,
    epochs: usize,
) -> Result<CellResult> {
    let (train_source, test_source) = cell
        .setting
        .map_or((LabelSource::Gold, LabelSource::Gold), Setting::sources);
    let cfg = cell.feature_config(train_source);
    let train_views = views(train, cell.feature, train_source)?;
    let test_views = views(test, cell.feature, test_source)?;
    let model = train_coref(train, &train_views, &cfg, epochs, seed)?.model;
    let pairs: Vec<(Partition, Partition)> = test
        .iter()
        .zip(&test_views)
        .map(|(d, v)| {
            (
                Partition::from_document(d),
                response_partition(&model, d, v.as_ref()),
            )
        })
        .collect();
    Ok(CellResult {
        conll: conll_corpus(pairs.iter().map(|(k, r)| (k, r))).conll,
        per_doc: pairs.iter().map(|(k, r)| conll(k, r).conll).collect(),
    })
}

/// Two-sided exact sign test on the signs of `deltas`; zeros are dropped.
pub fn sign_test(deltas: &[f64]) -> (usize, usize, f64) {
    let wins = deltas.iter().filter(|&&d| d > 0.0).count();
    let losses = deltas.iter().filter(|&&d| d < 0.0).count();
    let n = wins + losses;
    if n == 0 {
        return (0, 0, 1.0);
    }
    // P(X <= k) for X ~ Binomial(n, 1/2), accumulated in log space
    let k = wins.min(losses);
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_c = 0.0f64;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_c + ln_half_n).exp();
    }
    (wins, losses, (2.0 * tail).min(1.0))
}

/// Aggregated result of one cell over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub cell: Cell,
    pub conll_per_seed: Vec<f64>,
    pub mean_conll: f64,
    /// Documents (over all seeds) where the cell beats / loses to the baseline.
    pub wins: usize,
    pub losses: usize,
    pub sign_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: PathBuf,
    pub features: Vec<ProsodyFeature>,
    pub scopes: Vec<Scope>,
    pub settings: Vec<Setting>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
}

impl ExperimentSpec {
    /// The baseline followed by every requested cell.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = vec![Cell::BASELINE];
        for &f in self.features.iter().filter(|&&f| f != ProsodyFeature::None) {
            for &setting in &self.settings {
                for &scope in &self.scopes {
                    out.push(Cell::new(f, scope, setting));
                }
            }
        }
        out
    }

    /// Flat `key = value` file. Paths are relative to the file's directory;
    /// list values are comma-separated.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut train = None;
        let mut dev = None;
        let mut test = None;
        let mut spec = ExperimentSpec {
            train: PathBuf::new(),
            dev: None,
            test: PathBuf::new(),
            features: vec![
                ProsodyFeature::AccentPresence,
                ProsodyFeature::NuclearPresence,
            ],
            scopes: vec![Scope::ShortNp, Scope::AllNp],
            settings: Setting::ALL.to_vec(),
            seeds: vec![0],
            epochs: 10,
        };
        fn list<T: FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect()
        }
        for (key, value, line) in key_values(text)? {
            let path = || base.join(&value);
            let wrap = |e: Error| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            };
            match key.as_str() {
                "train" => train = Some(path()),
                "dev" => dev = Some(path()),
                "test" => test = Some(path()),
                "features" => spec.features = list(&value).map_err(wrap)?,
                "scopes" => spec.scopes = list(&value).map_err(wrap)?,
                "settings" => spec.settings = list(&value).map_err(wrap)?,
                "seeds" => {
                    spec.seeds = value
                        .split(',')
                        .map(|s| s.trim().parse::<u64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse {
                            line,
                            msg: format!("seeds: {e}"),
                        })?
                }
                "epochs" => {
                    spec.epochs = value.parse().map_err(|e| Error::Parse {
                        line,
                        msg: format!("epochs: {e}"),
                    })?
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        spec.train = train.ok_or_else(|| Error::Config("experiment spec needs `train`".into()))?;
        spec.test = test.ok_or_else(|| Error::Config("experiment spec needs `test`".into()))?;
        spec.dev = dev;
        if spec.seeds.is_empty() || spec.epochs == 0 {
            return Err(Error::Config(
                "experiment spec needs at least one seed and one epoch".into(),
            ));
        }
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentSpec::parse(&text, path.parent().unwrap_or_else(|| Path::new("")))
    }
}

/// Runs the grid on in-memory corpora. The training set is `train`
/// followed by `dev`.
pub fn run_grid(
    spec: &ExperimentSpec,
    train: &[Document],
    test: &[Document],
) -> Result<Vec<ResultRow>> {
    let cells = spec.cells();
    let mut results: Vec<Vec<CellResult>> = vec![Vec::new(); cells.len()];
    for &seed in &spec.seeds {
        for (i, &cell) in cells.iter().enumerate() {
            results[i].push(run_cell(train, test, cell, seed, spec.epochs)?);
        }
    }
    let baseline = results[0].clone();
    Ok(cells
        .iter()
        .zip(&results)
        .map(|(&cell, res)| {
            let deltas: Vec<f64> = res
                .iter()
                .zip(&baseline)
                .flat_map(|(r, b)| r.per_doc.iter().zip(&b.per_doc).map(|(x, y)| x - y))
                .collect();
            let (wins, losses, sign_p) = sign_test(&deltas);
            let per_seed: Vec<f64> = res.iter().map(|r| r.conll).collect();
            ResultRow {
                cell,
                mean_conll: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
                conll_per_seed: per_seed,
                wins,
                losses,
                sign_p,
            }
        })
        .collect())
}

/// Loads the spec's corpora and runs the grid.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut train = parse_corpus(&spec.train)?;
    if let Some(dev) = &spec.dev {
        train.extend(parse_corpus(dev)?);
    }
    let test = parse_corpus(&spec.test)?;
    run_grid(spec, &train, &test)
}

const ROW_HEADER: &str =
    "feature\tscope\tsetting\tmean_conll\tconll_per_seed\twins\tlosses\tsign_p";

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// One tab-separated line per row after a header line.
pub fn rows_to_tsv(rows: &[ResultRow]) -> String {
    let mut out = format!("{ROW_HEADER}\n");
    for r in rows {
        let seeds: Vec<String> = r.conll_per_seed.iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.cell.feature,
            opt(r.cell.scope),
            opt(r.cell.setting),
            r.mean_conll,
            seeds.join(","),
            r.wins,
            r.losses,
            r.sign_p
        )
        .unwrap();
    }
    out
}

pub fn rows_from_tsv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == ROW_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing result header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(bad(format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let count = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let feature: ProsodyFeature = f[0].parse()?;
        let cell = if feature == ProsodyFeature::None {
            Cell::BASELINE
        } else {
            Cell::new(feature, f[1].parse()?, f[2].parse()?)
        };
        rows.push(ResultRow {
            cell,
            mean_conll: num(f[3])?,
            conll_per_seed: f[4].split(',').map(num).collect::<Result<_>>()?,
            wins: count(f[5])?,
            losses: count(f[6])?,
            sign_p: num(f[7])?,
        });
    }
    Ok(rows)
}

/// Sign-test level below which a cell is marked `*` in the report.
pub const SIGNIFICANCE: f64 = 0.05;

/// Plain-text tables: the baseline line, then one block per prosodic
/// feature with settings as rows and NP scopes as columns.
pub fn report(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let find = |c: Cell| rows.iter().find(|r| r.cell == c);
    let cell_text = |r: Option<&ResultRow>| {
        r.map_or_else(
            || "-".to_string(),
            |r| {
                let mark = if !r.cell.is_baseline() && r.sign_p < SIGNIFICANCE {
                    "*"
                } else {
                    ""
                };
                format!("{:.2}{mark}", r.mean_conll)
            },
        )
    };
    writeln!(
        out,
        "{:<28}{:>12}",
        "Baseline",
        cell_text(find(Cell::BASELINE))
    )
    .unwrap();
    for (feature, title) in [
        (ProsodyFeature::AccentPresence, "+ Accent"),
        (ProsodyFeature::NuclearPresence, "+ Nuclear accent"),
    ] {
        if !rows.iter().any(|r| r.cell.feature == feature) {
            continue;
        }
        writeln!(out).unwrap();
        writeln!(out, "{:<28}{:>12}{:>12}", title, "short NPs", "all NPs").unwrap();
        for setting in Setting::ALL {
            let short = find(Cell::new(feature, Scope::ShortNp, setting));
            let all = find(Cell::new(feature, Scope::AllNp, setting));
            if short.is_none() && all.is_none() {
                continue;
            }
            writeln!(
                out,
                "{:<28}{:>12}{:>12}",
                format!("+ Presence {setting}"),
                cell_text(short),
                cell_text(all)
            )
            .unwrap();
        }
    }
    out
}

use std::io::Write;
use std::path::{Path, PathBuf};

use advertoscope::features::FeatureSchema;
use advertoscope::forest::{self, select_features, train_forest, Dataset, Hyperparams, LabeledSignals, TuneGrid};
use advertoscope::Forest;
use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use crate::settings::Settings;

#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Features tried per split (default: floor of the square root of the feature count).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_bootstrap: bool,
}

impl HyperArgs {
    fn resolve(&self, settings: &Settings) -> Hyperparams {
        let base = Hyperparams::default();
        Hyperparams {
            n_trees: self.trees.unwrap_or(base.n_trees),
            max_depth: self.max_depth.or(base.max_depth),
            min_leaf: self.min_leaf.unwrap_or(base.min_leaf),
            mtry: self.mtry.or(base.mtry),
            seed: self.seed.unwrap_or(settings.run.seed),
            bootstrap: !self.no_bootstrap,
        }
    }
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// JSON lines of `{domain, label, signals}`.
    pub data: PathBuf,
    /// Feature schema JSON (defaults to the built-in 45-feature layout).
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let schema = match &self.schema {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                FeatureSchema::from_json(&text).with_context(|| p.display().to_string())?
            }
            None => FeatureSchema::reconstructed(),
        };
        self.load_with(schema)
    }

    /// Imputation values are refitted on these rows.
    fn load_with(&self, schema: FeatureSchema) -> Result<Dataset> {
        let text = std::fs::read_to_string(&self.data).with_context(|| format!("reading {}", self.data.display()))?;
        let rows = LabeledSignals::parse_jsonl(&text).with_context(|| self.data.display().to_string())?;
        let ds = Dataset::from_signals(&schema, &rows).with_context(|| self.data.display().to_string())?;
        let [benign, suspicious] = ds.class_counts();
        log::info!("{} rows ({suspicious} suspicious, {benign} benign), {} features", ds.len(), ds.n_features());
        Ok(ds)
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn save(model: &Forest, path: &Path) -> Result<()> {
    model.save(path).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct Importance<'a> {
    feature: &'a str,
    importance: f64,
}

fn ranked(model: &Forest) -> Vec<Importance<'_>> {
    let mut v: Vec<Importance> = model
        .schema
        .features
        .iter()
        .zip(&model.importances)
        .map(|(f, &importance)| Importance { feature: &f.name, importance })
        .collect();
    v.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    v
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Where to write the model.
    #[arg(short, long)]
    pub out: PathBuf,
}

pub fn train(settings: &Settings, args: TrainArgs) -> Result<u8> {
    let ds = args.data.load()?;
    let model = train_forest(&ds, &args.hyper.resolve(settings))?;
    save(&model, &args.out)?;
    print_json(&ranked(&model))?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct CrossValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    /// Include per-iteration metrics.
    #[arg(long)]
    pub per_iteration: bool,
}

pub fn cross_validate(settings: &Settings, args: CrossValidateArgs) -> Result<u8> {
    let ds = args.data.load()?;
    let cv = forest::cross_validate(&ds, &args.hyper.resolve(settings), args.iterations)?;
    if args.per_iteration {
        print_json(&cv)?;
    } else {
        print_json(&cv.summary)?;
    }
    Ok(0)
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// A trained model.
    pub model: PathBuf,
    /// Cumulative importance to retain.
    #[arg(long, default_value_t = 0.96)]
    pub threshold: f64,
    /// Retrain on the selected features from this data file.
    #[arg(long, requires = "out")]
    pub retrain: Option<PathBuf>,
    /// Where to write the retrained model.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SelectionOut<'a> {
    kept: Vec<&'a str>,
    indices: &'a [usize],
    cumulative_importance: f64,
    schema: &'a FeatureSchema,
}

pub fn select(_settings: &Settings, args: SelectArgs) -> Result<u8> {
    if !(0.0..=1.0).contains(&args.threshold) {
        bail!("--threshold must lie in [0, 1]");
    }
    let model = Forest::load(&args.model).with_context(|| args.model.display().to_string())?;
    let sel = select_features(&model, args.threshold);
    print_json(&SelectionOut {
        kept: sel.schema.names(),
        indices: &sel.kept,
        cumulative_importance: sel.cumulative_importance,
        schema: &sel.schema,
    })?;
    if let (Some(data), Some(out)) = (&args.retrain, &args.out) {
        let ds = DataArgs { data: data.clone(), schema: None }.load_with(sel.schema.clone())?;
        let retrained = train_forest(&ds, &model.hyperparams)?;
        save(&retrained, out)?;
    }
    Ok(0)
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// TOML grid with `n_trees`, `max_depth`, `min_leaf` and `mtry` lists.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
}

/// `max_depth`/`mtry` lists use 0 for "unbounded" / "default" since TOML has no null.
#[derive(serde::Deserialize)]
#[serde(default)]
struct GridFile {
    n_trees: Vec<usize>,
    max_depth: Vec<usize>,
    min_leaf: Vec<usize>,
    mtry: Vec<usize>,
}

impl Default for GridFile {
    fn default() -> Self {
        let g = TuneGrid::default();
        Self {
            n_trees: g.n_trees,
            max_depth: g.max_depth.iter().map(|d| d.unwrap_or(0)).collect(),
            min_leaf: g.min_leaf,
            mtry: g.mtry.iter().map(|m| m.unwrap_or(0)).collect(),
        }
    }
}

fn nonzero(v: Vec<usize>) -> Vec<Option<usize>> {
    v.into_iter().map(|x| (x > 0).then_some(x)).collect()
}

pub fn tune(settings: &Settings, args: TuneArgs) -> Result<u8> {
    let grid = match &args.grid {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let g: GridFile = toml::from_str(&text).with_context(|| p.display().to_string())?;
            TuneGrid {
                n_trees: g.n_trees,
                max_depth: nonzero(g.max_depth),
                min_leaf: g.min_leaf,
                mtry: nonzero(g.mtry),
            }
        }
        None => TuneGrid::default(),
    };
    let ds = args.data.load()?;
    let rows = forest::tune(&ds, &args.hyper.resolve(settings), &grid, args.iterations)?;
    let mut out = std::io::stdout().lock();
    for r in rows {
        serde_json::to_writer(&mut out, &r)?;
        writeln!(out)?;
    }
    Ok(0)
}

//! Command definitions and their implementations.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use priorimax_core::es::{EsConfig, Hooks};
use priorimax_core::extraction::{
    correlation_from_data, principal_axis_factor, with_variable_names, AdequacyReport, PafConfig,
};
use priorimax_core::index::{build_pair_set, lowess_curve, v_index, loading_index, LowessConfig};
use priorimax_core::model::{default_factor_labels, FactorModel};
use priorimax_core::priors::{generate_grouper_prior, prior_from_semantic, validate_prior, PriorMatrix};
use priorimax_core::rotation::{classical_rotate, priorimax_rotate, GpaConfig, OptimizerConfig, RotationMethod, SearchMode};
use priorimax_core::similarity::{loading_matrix_similarity, semantic_matrix, SimilarityMatrix};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::exec::{ThreadedExecutor, WallClock};
use crate::io;
use crate::manifest::RunManifest;
use crate::svg;

pub const SEED_ENV: &str = "PRIORIMAX_SEED";

#[derive(Debug, Parser)]
#[command(name = "priorimax", version, about = "Prior-guided rotation and interpretability for exploratory factor analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bartlett sphericity and KMO sampling adequacy for a data set.
    Adequacy(AdequacyArgs),
    /// Extract and rotate a factor model.
    Fit(Box<FitArgs>),
    /// Interpretability index of a model against a prior.
    Index(IndexArgs),
    /// Build prior matrices.
    #[command(subcommand)]
    Prior(PriorCommand),
    /// Semantic or loading similarity matrix.
    Similarity(SimilarityArgs),
    /// Interpretability scatter plot with a LOWESS curve.
    Plot(PlotArgs),
    /// Variable-factor correlation heatmap.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct AdequacyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Every field is optional so a `--config` file can supply it; flags win.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// JSON file with the same keys as the long flags (snake_case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Raw observations (CSV with a header row).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Unrotated loadings (CSV) instead of raw data.
    #[arg(long)]
    pub loadings: Option<PathBuf>,
    #[arg(long)]
    pub factors: Option<usize>,
    #[arg(long, value_parser = ["none", "varimax", "quartimax", "equamax", "oblimax", "priorimax"])]
    pub rotation: Option<String>,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Falls back to the PRIORIMAX_SEED environment variable, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Wall-clock budget for the optimizer in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long, value_parser = ["reduced", "faithful"])]
    pub mode: Option<String>,
    /// Objective evaluation threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub skew_bound: Option<f64>,
    #[arg(long)]
    pub pf: Option<f64>,
    #[arg(long)]
    pub constraint_tol: Option<f64>,
    /// Optimizer trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time in the manifest (makes output bytes run-dependent).
    #[arg(long)]
    pub record_timing: bool,
}

impl FitArgs {
    fn merged_with(self, cfg: FitArgs) -> FitArgs {
        FitArgs {
            config: self.config,
            data: self.data.or(cfg.data),
            loadings: self.loadings.or(cfg.loadings),
            factors: self.factors.or(cfg.factors),
            rotation: self.rotation.or(cfg.rotation),
            prior: self.prior.or(cfg.prior),
            embeddings: self.embeddings.or(cfg.embeddings),
            seed: self.seed.or(cfg.seed),
            budget: self.budget.or(cfg.budget),
            max_evals: self.max_evals.or(cfg.max_evals),
            population: self.population.or(cfg.population),
            mode: self.mode.or(cfg.mode),
            workers: self.workers.or(cfg.workers),
            skew_bound: self.skew_bound.or(cfg.skew_bound),
            pf: self.pf.or(cfg.pf),
            constraint_tol: self.constraint_tol.or(cfg.constraint_tol),
            trace: self.trace.or(cfg.trace),
            out: self.out.or(cfg.out),
            record_timing: self.record_timing || cfg.record_timing,
        }
    }
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub prior: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PriorCommand {
    /// Group-structured partial prior from 1-based index groups.
    Grouper {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        groups: PathBuf,
        /// `.csv` writes CSV, anything else JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full prior from the semantic similarity of question embeddings.
    Semantic {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub prior: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// CSV with the raw points and the fitted curve.
    #[arg(long)]
    pub data_out: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub frac: f64,
    #[arg(long, default_value_t = 3)]
    pub robust_iters: usize,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Adequacy(a) => adequacy(a),
        Command::Fit(a) => fit(*a),
        Command::Index(a) => index(a),
        Command::Prior(p) => prior(p),
        Command::Similarity(a) => similarity(a),
        Command::Plot(a) => plot(a),
        Command::Heatmap(a) => heatmap(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => io::write_text(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

fn warn(message: impl std::fmt::Display) {
    eprintln!("warning: {message}");
}

/// Manifest sidecar for outputs that cannot carry one inline (CSV).
fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_with_sidecar(path: &Path, text: &str, manifest: &RunManifest) -> CliResult<()> {
    io::write_text(path, text)?;
    io::write_text(&sidecar_path(path), &io::to_json(manifest))
}

fn adequacy(args: AdequacyArgs) -> CliResult<()> {
    let data = io::read_data_csv(&args.data)?;
    let corr = correlation_from_data(&data)?;
    let report = AdequacyReport::compute(&corr)?;
    let manifest = RunManifest::new("adequacy").input("data", &args.data);
    emit(args.out.as_deref(), &io::to_json(&io::AdequacyFile::new(report, manifest)))
}

pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))),
        Err(_) => Ok(0),
    }
}

fn load_prior_source(prior: Option<&Path>, embeddings: Option<&Path>) -> CliResult<Option<PriorMatrix>> {
    match (prior, embeddings) {
        (Some(_), Some(_)) => Err(CliError::input("use either --prior or --embeddings, not both")),
        (Some(p), None) => io::read_prior(p).map(Some),
        (None, Some(e)) => {
            let es = io::read_embeddings(e)?;
            Ok(Some(prior_from_semantic(&semantic_matrix(&es)?)?))
        }
        (None, None) => Ok(None),
    }
}

fn fit(args: FitArgs) -> CliResult<()> {
    let args = match &args.config {
        Some(path) => {
            let cfg: FitArgs = serde_json::from_str(&io::read_text(path)?)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            args.merged_with(cfg)
        }
        None => args,
    };
    let method_name = args.rotation.clone().unwrap_or_else(|| "none".to_string());
    let method = RotationMethod::parse(&method_name)
        .ok_or_else(|| CliError::input(format!("unknown rotation `{method_name}`")))?;
    let mode = match args.mode.as_deref().unwrap_or("reduced") {
        "reduced" => SearchMode::Reduced,
        "faithful" => SearchMode::Faithful,
        other => return Err(CliError::input(format!("unknown mode `{other}`"))),
    };
    let seed = resolve_seed(args.seed)?;
    let mut manifest = RunManifest::new("fit");

    let base = match (&args.data, &args.loadings) {
        (Some(_), Some(_)) => return Err(CliError::input("use either --data or --loadings, not both")),
        (None, None) => return Err(CliError::input("one of --data or --loadings is required")),
        (Some(path), None) => {
            manifest = manifest.input("data", path);
            let factors = args.factors.ok_or_else(|| CliError::input("--factors is required with --data"))?;
            let data = io::read_data_csv(path)?;
            let corr = correlation_from_data(&data)?;
            let outcome = principal_axis_factor(&corr, factors, PafConfig::default())?;
            if !outcome.converged {
                warn(format!("principal-axis factoring stopped after {} iterations without converging", outcome.iterations));
            }
            if outcome.degenerate {
                warn("a retained factor has zero eigenvalue");
            }
            with_variable_names(outcome, data.names().to_vec())?.model
        }
        (None, Some(path)) => {
            manifest = manifest.input("loadings", path);
            let lm = io::read_loadings_csv(path)?;
            if let Some(t) = args.factors {
                if t != lm.factor_count() {
                    return Err(CliError::input(format!(
                        "--factors {t} disagrees with the {} columns in {}",
                        lm.factor_count(),
                        path.display()
                    )));
                }
            }
            let uniq = lm.communalities().iter().map(|h| (1.0 - h).max(0.0)).collect();
            FactorModel::new(lm, uniq)?
        }
    };
    if let Some(p) = &args.prior {
        manifest = manifest.input("prior", p);
    }
    if let Some(e) = &args.embeddings {
        manifest = manifest.input("embeddings", e);
    }
    let prior = load_prior_source(args.prior.as_deref(), args.embeddings.as_deref())?;
    if let Some(p) = &prior {
        validate_prior(p, base.n_variables())?;
    }

    let defaults = EsConfig::default();
    let opt = OptimizerConfig {
        es: EsConfig {
            population: args.population,
            max_evals: args.max_evals.unwrap_or(defaults.max_evals),
            time_budget_secs: args.budget,
            seed,
            pf: args.pf.unwrap_or(defaults.pf),
            constraint_tol: args.constraint_tol.unwrap_or(defaults.constraint_tol),
            ..defaults
        },
        mode,
        skew_bound: args.skew_bound.unwrap_or(1.0),
    };
    let mut config = json!({
        "factors": base.factor_count(),
        "rotation": method.name(),
        "extraction": if args.data.is_some() { json!({"method": "paf", "max_iter": PafConfig::default().max_iter, "tol": PafConfig::default().tol}) } else { json!(null) },
    });
    let clock = WallClock::start();

    let model = if method == RotationMethod::Priorimax {
        let prior = prior
            .as_ref()
            .ok_or_else(|| CliError::input("priorimax needs --prior or --embeddings"))?;
        config["optimizer"] = json!({
            "mode": args.mode.as_deref().unwrap_or("reduced"),
            "max_evals": opt.es.max_evals,
            "population": opt.es.population_for(priorimax_core::rotation::cayley::skew_len(base.factor_count())
                + if mode == SearchMode::Faithful { base.factor_count() } else { 0 }),
            "budget_seconds": opt.es.time_budget_secs,
            "pf": opt.es.pf,
            "constraint_tol": opt.es.constraint_tol,
            "skew_bound": opt.skew_bound,
        });
        manifest = manifest.seed(seed);
        let executor = args.workers.map_or_else(ThreadedExecutor::available, ThreadedExecutor::new);
        let mut hooks = Hooks { executor: &executor, clock: Some(&clock), on_generation: None };
        let (model, outcome) = priorimax_rotate(&base, prior, &opt, &mut hooks)?;
        if outcome.timed_out {
            warn(format!("time budget reached after {} evaluations", outcome.evaluations));
        }
        if let Some(trace) = &args.trace {
            let trace_manifest = manifest.clone().config(config.clone());
            write_with_sidecar(trace, &io::trace_csv(&outcome.trace), &trace_manifest)?;
        }
        model
    } else {
        let model = classical_rotate(&base, method, GpaConfig::default())?;
        match &prior {
            Some(p) => {
                let c = loading_index(model.loadings(), p)?;
                model.with_index(Some(c))
            }
            None => model,
        }
    };

    let mut manifest = manifest.config(config);
    if args.record_timing {
        manifest.wall_seconds = Some(priorimax_core::es::Clock::elapsed_secs(&clock));
    }
    emit(args.out.as_deref(), &io::to_json(&io::ModelFile::from_model(&model, manifest)))
}

fn index(args: IndexArgs) -> CliResult<()> {
    let model = io::read_model(&args.model)?;
    let prior = io::read_prior(&args.prior)?;
    validate_prior(&prior, model.n_variables())?;
    let pairs = build_pair_set(&prior, &loading_matrix_similarity(model.loadings()))?;
    let c = v_index(&pairs)?;
    let manifest = RunManifest::new("index").input("model", &args.model).input("prior", &args.prior);
    let file = io::IndexFile { tau: c.tau, theta: c.theta, v: c.v, pairs: pairs.len(), manifest };
    emit(args.out.as_deref(), &io::to_json(&file))
}

fn write_prior(prior: &PriorMatrix, out: Option<&Path>, manifest: RunManifest) -> CliResult<()> {
    match out {
        Some(path) if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
            write_with_sidecar(path, &io::prior_csv(prior), &manifest)
        }
        _ => emit(out, &io::to_json(&io::PriorFile::from_prior(prior, Some(manifest)))),
    }
}

fn prior(cmd: PriorCommand) -> CliResult<()> {
    match cmd {
        PriorCommand::Grouper { size, groups, out } => {
            let g = io::read_groups(&groups)?;
            let prior = generate_grouper_prior(size, &g)?;
            validate_prior(&prior, size)?;
            let manifest = RunManifest::new("prior grouper").input("groups", &groups).config(json!({"size": size}));
            write_prior(&prior, out.as_deref(), manifest)
        }
        PriorCommand::Semantic { embeddings, out } => {
            let es = io::read_embeddings(&embeddings)?;
            let prior = prior_from_semantic(&semantic_matrix(&es)?)?.with_labels(es.questions().to_vec())?;
            let manifest = RunManifest::new("prior semantic").input("embeddings", &embeddings);
            write_prior(&prior, out.as_deref(), manifest)
        }
    }
}

#[derive(Debug, Serialize)]
struct SimilarityFile {
    kind: &'static str,
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    manifest: RunManifest,
}

fn similarity(args: SimilarityArgs) -> CliResult<()> {
    let (kind, labels, matrix, manifest): (_, _, SimilarityMatrix, _) = match (&args.embeddings, &args.model) {
        (Some(e), _) => {
            let es = io::read_embeddings(e)?;
            ("semantic", es.questions().to_vec(), semantic_matrix(&es)?, RunManifest::new("similarity").input("embeddings", e))
        }
        (None, Some(m)) => {
            let model = io::read_model(m)?;
            let labels = model.loadings().variable_names().to_vec();
            ("loading", labels, loading_matrix_similarity(model.loadings()), RunManifest::new("similarity").input("model", m))
        }
        (None, None) => return Err(CliError::input("one of --embeddings or --model is required")),
    };
    let file = SimilarityFile { kind, labels, values: io::rows_of(matrix.values()), manifest };
    emit(args.out.as_deref(), &io::to_json(&file))
}

fn plot(args: PlotArgs) -> CliResult<()> {
    let model = io::read_model(&args.model)?;
    let prior = io::read_prior(&args.prior)?;
    validate_prior(&prior, model.n_variables())?;
    let pairs = build_pair_set(&prior, &loading_matrix_similarity(model.loadings()))?;
    let cfg = LowessConfig { frac: args.frac, robust_iters: args.robust_iters };
    let curve = if pairs.len() < 3 {
        warn(format!("only {} pairs; drawing the scatter without a LOWESS curve", pairs.len()));
        None
    } else {
        Some(lowess_curve(&pairs, cfg)?)
    };
    let index = v_index(&pairs).ok();
    let manifest = RunManifest::new("plot")
        .input("model", &args.model)
        .input("prior", &args.prior)
        .config(json!({"frac": args.frac, "robust_iters": args.robust_iters}));
    io::write_text(&args.out, &svg::scatter(&pairs, curve.as_deref(), index, &manifest))?;
    if let Some(path) = &args.data_out {
        write_with_sidecar(path, &io::plot_csv(&pairs, curve.as_deref()), &manifest)?;
    }
    Ok(())
}

fn heatmap(args: HeatmapArgs) -> CliResult<()> {
    let model = io::read_model(&args.model)?;
    let manifest = RunManifest::new("heatmap").input("model", &args.model);
    let text = svg::heatmap(
        &model.variable_factor_correlations(),
        model.loadings().variable_names(),
        &default_factor_labels(model.factor_count()),
        &manifest,
    );
    io::write_text(&args.out, &text)
}

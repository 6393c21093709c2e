//! mssw: score CWE weakness categories from CVE snapshots.

mod render;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mssw_core::analysis::{self, Equation, RankConfig, RankMetric};
use mssw_core::ingest::{self, Dataset};
use mssw_core::metrics::{self, ScoreRow};
use mssw_core::plot::{self, PlotKind, Series};
use mssw_core::synth::{self, SynthConfig};
use mssw_core::taxonomy::{self, AbstractionPartition, TaxonomyGraph};
use mssw_core::Error;
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "mssw", version, about = "Weakness scoring over CVE snapshots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse NVD JSON feeds into a normalized dataset file
    Ingest(IngestArgs),
    /// Score a dataset and emit the top list
    Rank(RankArgs),
    /// Diagnostic exports over a scored dataset
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Generate the seed-fixed synthetic dataset and taxonomy
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Set-difference curves against the frequency-only and severity-only lists
    SetDiff(CurveArgs),
    /// Correlation of both equations with raw frequency and mean severity
    Correlations(CorrelationArgs),
    /// Per-CWE severity/frequency factor pairs
    RiskMap(CurveArgs),
    /// Sorted frequency series under raw, log, and double-log transforms
    Distributions(DistributionArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// NVD feed file; repeat for several feeds
    #[arg(long, required = true)]
    feed: Vec<PathBuf>,
    /// Keep only CVE ids of this year
    #[arg(long)]
    year: u16,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Normalized dataset file
    #[arg(long)]
    dataset: PathBuf,
    /// Taxonomy export file
    #[arg(long)]
    taxonomy: PathBuf,
}

#[derive(Args)]
struct PropagationFlags {
    /// Count each CVE toward all taxonomy ancestors of its CWEs (default)
    #[arg(long, overrides_with = "no_propagate")]
    propagate: bool,
    /// Count only direct CWE mappings
    #[arg(long, overrides_with = "propagate")]
    no_propagate: bool,
}

impl PropagationFlags {
    fn enabled(&self) -> bool {
        !self.no_propagate
    }
}

#[derive(Args)]
struct RestrictFlags {
    /// Keep only view-1003 members in scope (default)
    #[arg(long, overrides_with = "no_restrict_1003")]
    restrict_1003: bool,
    #[arg(long, overrides_with = "restrict_1003")]
    no_restrict_1003: bool,
}

impl RestrictFlags {
    fn enabled(&self) -> bool {
        !self.no_restrict_1003
    }
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::Mssw)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = LevelArg::High)]
    level: LevelArg,
    #[command(flatten)]
    propagation: PropagationFlags,
    /// Comma-separated view ids; default is the available subset of 1000,1008
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<u32>>,
    #[command(flatten)]
    restrict: RestrictFlags,
    #[arg(long, default_value_t = 20)]
    top: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::Mssw)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = LevelArg::All)]
    level: LevelArg,
    #[command(flatten)]
    propagation: PropagationFlags,
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<u32>>,
    #[command(flatten)]
    restrict: RestrictFlags,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the plot next to --out, with .svg extension
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct CorrelationArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<u32>>,
    #[command(flatten)]
    restrict: RestrictFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistributionArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = LevelArg::All)]
    level: LevelArg,
    #[command(flatten)]
    propagation: PropagationFlags,
    #[arg(long, value_delimiter = ',')]
    views: Option<Vec<u32>>,
    #[command(flatten)]
    restrict: RestrictFlags,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = synth::DEFAULT_SEED)]
    seed: u64,
    /// Dataset output path
    #[arg(long)]
    out: PathBuf,
    /// Taxonomy output path
    #[arg(long)]
    taxonomy: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Mdse,
    Mssw,
}

impl MetricArg {
    fn name(self) -> &'static str {
        match self {
            MetricArg::Mdse => "mdse",
            MetricArg::Mssw => "mssw",
        }
    }

    fn equation(self) -> Equation {
        match self {
            MetricArg::Mdse => Equation::Mdse,
            MetricArg::Mssw => Equation::Mssw,
        }
    }

    fn rank_metric(self) -> RankMetric {
        match self {
            MetricArg::Mdse => RankMetric::Mdse,
            MetricArg::Mssw => RankMetric::Mssw,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    High,
    Low,
    All,
}

impl LevelArg {
    fn name(self) -> &'static str {
        match self {
            LevelArg::High => "high",
            LevelArg::Low => "low",
            LevelArg::All => "all",
        }
    }

    fn partition(self) -> AbstractionPartition {
        match self {
            LevelArg::High => AbstractionPartition::High,
            LevelArg::Low => AbstractionPartition::Low,
            LevelArg::All => AbstractionPartition::All,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

impl FormatArg {
    fn name(self) -> &'static str {
        match self {
            FormatArg::Table => "table",
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => e.exit_class(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Analyze(AnalyzeCommand::SetDiff(args)) => cmd_set_diff(args),
        Command::Analyze(AnalyzeCommand::Correlations(args)) => cmd_correlations(args),
        Command::Analyze(AnalyzeCommand::RiskMap(args)) => cmd_risk_map(args),
        Command::Analyze(AnalyzeCommand::Distributions(args)) => cmd_distributions(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

struct World {
    dataset: Dataset,
    graph: TaxonomyGraph,
    views: BTreeSet<u32>,
}

fn load_world(input: &InputArgs, views: &Option<Vec<u32>>) -> Result<World, CliError> {
    let dataset = ingest::load_dataset_file(&input.dataset)?;
    let doc = ingest::load_taxonomy_file(&input.taxonomy)?;
    let graph = TaxonomyGraph::from_document(&doc)?;
    let views = resolve_views(views.as_deref(), &graph)?;
    Ok(World {
        dataset,
        graph,
        views,
    })
}

fn resolve_views(explicit: Option<&[u32]>, graph: &TaxonomyGraph) -> Result<BTreeSet<u32>, CliError> {
    let present = graph.views_present();
    match explicit {
        Some(list) => {
            let set: BTreeSet<u32> = list.iter().copied().collect();
            if let Some(missing) = set.iter().find(|v| !present.contains(v)) {
                let have: Vec<String> = present.iter().map(|v| v.to_string()).collect();
                return Err(CliError::Usage(format!(
                    "view {missing} is not present in the taxonomy (available: {})",
                    have.join(",")
                )));
            }
            Ok(set)
        }
        None => Ok([1000, 1008]
            .iter()
            .copied()
            .filter(|v| present.contains(v))
            .collect()),
    }
}

fn scored_rows(
    world: &World,
    level: LevelArg,
    propagation: bool,
    restrict: bool,
    metric: MetricArg,
) -> Result<Vec<ScoreRow>, CliError> {
    let (pmap, warnings) = taxonomy::propagate(&world.dataset, &world.graph, &world.views, propagation);
    for w in &warnings {
        eprintln!("{w}");
    }
    let scope = taxonomy::partition_nodes(&world.graph, level.partition(), restrict);
    let aggregates = metrics::aggregate(&pmap, &world.dataset, &scope)?;
    let rows = match metric {
        MetricArg::Mdse => metrics::mdse_scores(&aggregates, &world.dataset)?.1,
        MetricArg::Mssw => metrics::mssw_scores(&aggregates)?.1,
    };
    Ok(rows)
}

fn base_fields(input: &InputArgs, views: &BTreeSet<u32>, restrict: bool) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("dataset".into(), input.dataset.display().to_string().into());
    m.insert(
        "taxonomy".into(),
        input.taxonomy.display().to_string().into(),
    );
    m.insert(
        "views".into(),
        Value::Array(views.iter().map(|&v| Value::from(v)).collect()),
    );
    m.insert("restrict_1003".into(), restrict.into());
    m
}

fn out_value(out: &Option<PathBuf>) -> Value {
    out.as_ref()
        .map(|p| Value::from(p.display().to_string()))
        .unwrap_or(Value::Null)
}

fn write_plot(
    out: &Path,
    header: &str,
    series: &[Series],
    kind: PlotKind,
) -> Result<(), CliError> {
    let svg = plot::render_plot(series, kind)?;
    fs::write(out.with_extension("svg"), format!("{header}{svg}"))?;
    Ok(())
}

fn require_out_for_plot(plot: bool, out: &Option<PathBuf>) -> Result<(), CliError> {
    if plot && out.is_none() {
        return Err(CliError::Usage("--plot requires --out".into()));
    }
    Ok(())
}

fn locate_feed_error(e: Error, path: &Path) -> CliError {
    let at = path.display();
    CliError::Core(match e {
        Error::Feed { item, msg } => Error::Feed {
            item,
            msg: format!("{msg} in {at}"),
        },
        Error::FeedDocument(msg) => Error::FeedDocument(format!("{msg} in {at}")),
        other => other,
    })
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let mut batches = Vec::new();
    let mut skipped = 0usize;
    for path in &args.feed {
        let text = fs::read_to_string(path)?;
        let (records, skip) =
            ingest::parse_nvd_feed(&text).map_err(|e| locate_feed_error(e, path))?;
        batches.push(records);
        skipped += skip;
    }
    let merged = ingest::merge_records(batches)?;
    let feeds: Vec<String> = args.feed.iter().map(|p| p.display().to_string()).collect();
    let cutoff = format!("{}-12-31", args.year);
    let ds = ingest::filter_year(merged, args.year, &feeds.join(","), &cutoff);
    let mut extra = Map::new();
    extra.insert("tool".into(), render::TOOL.into());
    extra.insert("command".into(), "ingest".into());
    extra.insert(
        "feeds".into(),
        Value::Array(feeds.iter().map(|f| Value::from(f.clone())).collect()),
    );
    extra.insert("year".into(), args.year.into());
    extra.insert("records".into(), ds.records.len().into());
    extra.insert("skipped".into(), skipped.into());
    fs::write(&args.out, ingest::write_dataset(&ds, &extra))?;
    println!("records: {}, skipped: {}", ds.records.len(), skipped);
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<(), CliError> {
    let world = load_world(&args.input, &args.views)?;
    let propagation = args.propagation.enabled();
    let restrict = args.restrict.enabled();
    let rows = scored_rows(&world, args.level, propagation, restrict, args.metric)?;
    let config = RankConfig {
        metric: args.metric.rank_metric(),
        partition: args.level.partition(),
        propagation,
        size: args.top,
    };
    let (list, warning) = analysis::top_list(&rows, config, &world.graph.names());
    if let Some(w) = warning {
        eprintln!("WARN {w}");
    }
    let mut fields = base_fields(&args.input, &world.views, restrict);
    fields.insert("metric".into(), args.metric.name().into());
    fields.insert("level".into(), args.level.name().into());
    fields.insert("propagation".into(), propagation.into());
    fields.insert("top".into(), (args.top as u64).into());
    fields.insert("format".into(), args.format.name().into());
    fields.insert("out".into(), out_value(&args.out));
    let header = render::header_line("rank", fields);
    let body = match args.format {
        FormatArg::Table => render::ranked_table(&list),
        FormatArg::Csv => analysis::ranked_list_csv(&list),
        FormatArg::Json => render::ranked_json(&list),
    };
    render::emit(args.out.as_deref(), &format!("{header}{body}"))?;
    Ok(())
}

fn cmd_set_diff(args: CurveArgs) -> Result<(), CliError> {
    require_out_for_plot(args.plot, &args.out)?;
    let world = load_world(&args.input, &args.views)?;
    let propagation = args.propagation.enabled();
    let restrict = args.restrict.enabled();
    let rows = scored_rows(&world, args.level, propagation, restrict, args.metric)?;
    let points = analysis::set_difference_curve(&rows, args.metric.equation());
    let mut fields = base_fields(&args.input, &world.views, restrict);
    fields.insert("metric".into(), args.metric.name().into());
    fields.insert("level".into(), args.level.name().into());
    fields.insert("propagation".into(), propagation.into());
    fields.insert("out".into(), out_value(&args.out));
    fields.insert("plot".into(), args.plot.into());
    let header = render::header_line("analyze set-diff", fields.clone());
    let body = analysis::set_difference_csv(&points);
    render::emit(args.out.as_deref(), &format!("{header}{body}"))?;
    if args.plot {
        let series = vec![
            Series {
                name: "vs frequency".into(),
                points: points
                    .iter()
                    .map(|p| (p.s as f64, p.diff_vs_frequency as f64))
                    .collect(),
            },
            Series {
                name: "vs severity".into(),
                points: points
                    .iter()
                    .map(|p| (p.s as f64, p.diff_vs_severity as f64))
                    .collect(),
            },
            Series {
                name: "theoretical max".into(),
                points: points
                    .iter()
                    .map(|p| (p.s as f64, p.theoretical_max as f64))
                    .collect(),
            },
        ];
        let svg_header = render::svg_header_line("analyze set-diff", fields);
        write_plot(
            args.out.as_ref().expect("checked above"),
            &svg_header,
            &series,
            PlotKind::Curve,
        )?;
    }
    Ok(())
}

fn cmd_correlations(args: CorrelationArgs) -> Result<(), CliError> {
    let world = load_world(&args.input, &args.views)?;
    let restrict = args.restrict.enabled();
    let (rows, warnings) =
        analysis::correlation_table(&world.dataset, &world.graph, &world.views, restrict)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    let mut fields = base_fields(&args.input, &world.views, restrict);
    fields.insert("out".into(), out_value(&args.out));
    let header = render::header_line("analyze correlations", fields);
    let body = analysis::correlation_csv(&rows);
    render::emit(args.out.as_deref(), &format!("{header}{body}"))?;
    Ok(())
}

fn cmd_risk_map(args: CurveArgs) -> Result<(), CliError> {
    require_out_for_plot(args.plot, &args.out)?;
    let world = load_world(&args.input, &args.views)?;
    let propagation = args.propagation.enabled();
    let restrict = args.restrict.enabled();
    let rows = scored_rows(&world, args.level, propagation, restrict, args.metric)?;
    let points = analysis::risk_map_export(&rows, args.metric.equation())?;
    let mut fields = base_fields(&args.input, &world.views, restrict);
    fields.insert("metric".into(), args.metric.name().into());
    fields.insert("level".into(), args.level.name().into());
    fields.insert("propagation".into(), propagation.into());
    fields.insert("out".into(), out_value(&args.out));
    fields.insert("plot".into(), args.plot.into());
    let header = render::header_line("analyze risk-map", fields.clone());
    let body = analysis::risk_map_csv(&points);
    render::emit(args.out.as_deref(), &format!("{header}{body}"))?;
    if args.plot {
        let series = vec![Series {
            name: args.metric.equation().label().to_string(),
            points: points.iter().map(|&(_, x, y)| (x, y)).collect(),
        }];
        let svg_header = render::svg_header_line("analyze risk-map", fields);
        write_plot(
            args.out.as_ref().expect("checked above"),
            &svg_header,
            &series,
            PlotKind::Scatter,
        )?;
    }
    Ok(())
}

fn cmd_distributions(args: DistributionArgs) -> Result<(), CliError> {
    require_out_for_plot(args.plot, &args.out)?;
    let world = load_world(&args.input, &args.views)?;
    let propagation = args.propagation.enabled();
    let restrict = args.restrict.enabled();
    let (pmap, warnings) =
        taxonomy::propagate(&world.dataset, &world.graph, &world.views, propagation);
    for w in &warnings {
        eprintln!("{w}");
    }
    let scope = taxonomy::partition_nodes(&world.graph, args.level.partition(), restrict);
    let aggregates = metrics::aggregate(&pmap, &world.dataset, &scope)?;
    let ns: Vec<u64> = aggregates.iter().map(|a| a.n).filter(|&n| n >= 1).collect();
    let series = metrics::frequency_transform_series(&ns)?;
    let mut fields = base_fields(&args.input, &world.views, restrict);
    fields.insert("level".into(), args.level.name().into());
    fields.insert("propagation".into(), propagation.into());
    fields.insert("out".into(), out_value(&args.out));
    fields.insert("plot".into(), args.plot.into());
    let header = render::header_line("analyze distributions", fields.clone());
    let body = analysis::frequency_series_csv(&series);
    render::emit(args.out.as_deref(), &format!("{header}{body}"))?;
    if args.plot {
        let indexed = |values: &[f64]| -> Vec<(f64, f64)> {
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64, v))
                .collect()
        };
        let plotted = vec![
            Series {
                name: "frequency".into(),
                points: indexed(&series.frequency),
            },
            Series {
                name: "log".into(),
                points: indexed(&series.log),
            },
            Series {
                name: "double log".into(),
                points: indexed(&series.double_log),
            },
        ];
        let svg_header = render::svg_header_line("analyze distributions", fields);
        write_plot(
            args.out.as_ref().expect("checked above"),
            &svg_header,
            &plotted,
            PlotKind::Curve,
        )?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        seed: args.seed,
        ..SynthConfig::default()
    };
    let world = synth::generate(&config);
    let mut fields = Map::new();
    fields.insert("seed".into(), args.seed.into());
    fields.insert("out".into(), args.out.display().to_string().into());
    fields.insert(
        "taxonomy".into(),
        args.taxonomy.display().to_string().into(),
    );
    let mut extra = fields.clone();
    extra.insert("tool".into(), render::TOOL.into());
    extra.insert("command".into(), "synth".into());
    fs::write(&args.out, ingest::write_dataset(&world.dataset, &extra))?;
    let header = render::header_line("synth", fields);
    let body = serde_json::to_string_pretty(&world.taxonomy).expect("taxonomy serializes");
    fs::write(&args.taxonomy, format!("{header}{body}\n"))?;
    println!(
        "dataset: {} records, taxonomy: {} nodes",
        world.dataset.records.len(),
        world.taxonomy.nodes.len()
    );
    Ok(())
}

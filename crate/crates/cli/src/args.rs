use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use traitleak::classify::{Penalty, Selection};
use traitleak::featurize::Encoding;
use traitleak::infodynamics::BinStrategy;
use traitleak::profile::ShareMode;
use traitleak::{CategoryScheme, TimeGrid, Trait};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "traitleak", version, about = "Audit how predictable private traits become from accumulating activity logs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with defaults for the flags; flags given on the command line win.
    #[arg(long, global = true)]
    pub settings: Option<PathBuf>,
    /// On failure, print the error as JSON on stderr.
    #[arg(long, global = true)]
    pub error_json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wiki dump or event CSV to event cache and ingest report.
    Ingest(IngestArgs),
    /// Population dynamics and per-class activity shares.
    Profile(ProfileArgs),
    /// Event cache to per-user activity cache and a feature matrix.
    Featurize(FeaturizeArgs),
    /// Per-frame trait prediction with repeated holdout.
    TrainEval(TrainArgs),
    /// Information transfer per frame and feature ranking.
    Infodyn(InfodynArgs),
    /// New Entry vs Fixed Population, exited users and coefficient trajectories.
    CohortEval(CohortArgs),
    /// Synthetic corpus with planted ground truth.
    Synth(SynthArgs),
    /// SVG chart from any CSV written by the other commands.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// First month of frame 1, as YYYY-MM.
    #[arg(long)]
    pub grid_origin: Option<String>,
    #[arg(long)]
    pub grid_frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// MediaWiki XML export (stub or full history).
    #[arg(long, conflicts_with = "events", required_unless_present = "events")]
    pub dump: Option<PathBuf>,
    /// Delimited `user_id,timestamp,category[,themes]` log.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// `page_id,theme` table for the extended scheme.
    #[arg(long)]
    pub themes: Option<PathBuf>,
    /// Usernames to drop, one per line.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Event cache or event CSV.
    #[arg(long)]
    pub events: PathBuf,
    /// First-edit side table; join frames otherwise come from the first event.
    #[arg(long)]
    pub first_edits: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long = "trait")]
    pub trait_: Option<String>,
    #[arg(long, value_enum, default_value_t = ShareArg::Unweighted)]
    pub share_mode: ShareArg,
    /// Also draw SVG charts.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Horizon of the exported matrix (1-based); defaults to the last frame.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value_t = EncodingArg::Incremental)]
    pub encoding: EncodingArg,
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Activity cache written by `featurize`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long = "trait")]
    pub trait_: Option<String>,
    /// Target class, predicted one-vs-all.
    #[arg(long)]
    pub class: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Args)]
pub struct QuantArgs {
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::EqualFrequency)]
    pub strategy: StrategyArg,
    /// Share bins between zero and nonzero counts.
    #[arg(long)]
    pub no_zero_bin: bool,
}

#[derive(Debug, Args)]
pub struct InfodynArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long = "trait")]
    pub trait_: Option<String>,
    /// Binary target instead of the full class variable.
    #[arg(long)]
    pub class: Option<String>,
    #[command(flatten)]
    pub quant: QuantArgs,
    /// Condition on at most this many preceding frames.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub miller_madow: bool,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub quant: QuantArgs,
    /// First frame (1-based) after which exited users are silent.
    #[arg(long)]
    pub cutoff_frame: Option<usize>,
    /// Columns for the coefficient trajectories; defaults to each category at frame 1.
    #[arg(long, value_delimiter = ',')]
    pub coef_features: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Reference config name or a JSON config file.
    #[arg(long)]
    pub config: String,
    /// Override the number of users.
    #[arg(long)]
    pub users: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    /// One or more value columns.
    #[arg(long, required = true, value_delimiter = ',')]
    pub y: Vec<String>,
    /// Split rows into one series per value of this column.
    #[arg(long)]
    pub group: Option<String>,
    /// Keep rows where COLUMN=VALUE.
    #[arg(long = "where", value_parser = parse_filter)]
    pub filter: Vec<(String, String)>,
    #[arg(long, value_enum, default_value_t = ChartKind::Line)]
    pub kind: ChartKind,
    #[arg(long)]
    pub title: Option<String>,
    /// File name of the chart inside the output directory.
    #[arg(long)]
    pub name: Option<String>,
}

fn parse_filter(s: &str) -> Result<(String, String), String> {
    s.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| format!("expected COLUMN=VALUE, got {s:?}"))
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Basic,
    Extended,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingArg {
    Incremental,
    Cumulative,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Incremental => Encoding::Incremental,
            EncodingArg::Cumulative => Encoding::Cumulative,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyArg {
    L1,
    L2,
}

impl From<PenaltyArg> for Penalty {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::L1 => Penalty::L1,
            PenaltyArg::L2 => Penalty::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionArg {
    OneSe,
    BestMean,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::OneSe => Selection::OneStandardError,
            SelectionArg::BestMean => Selection::BestMean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    EqualFrequency,
    EqualWidth,
}

impl From<StrategyArg> for BinStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::EqualFrequency => BinStrategy::EqualFrequency,
            StrategyArg::EqualWidth => BinStrategy::EqualWidth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShareArg {
    Unweighted,
    Pooled,
}

impl From<ShareArg> for ShareMode {
    fn from(s: ShareArg) -> Self {
        match s {
            ShareArg::Unweighted => ShareMode::Unweighted,
            ShareArg::Pooled => ShareMode::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Line,
    Bar,
}

/// Defaults read from `--settings`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub grid_origin: Option<String>,
    pub grid_frames: Option<usize>,
    pub scheme: Option<String>,
    #[serde(rename = "trait")]
    pub trait_: Option<String>,
    pub class: Option<String>,
    pub repeats: Option<usize>,
    pub folds: Option<usize>,
    pub bins: Option<usize>,
    pub cutoff_frame: Option<usize>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> CliResult<Settings> {
        let Some(path) = path else { return Ok(Settings::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn out(&self, flag: &Option<PathBuf>) -> CliResult<PathBuf> {
        flag.clone().or_else(|| self.out.clone()).ok_or_else(|| CliError::usage("--out is required"))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn grid(&self, g: &GridArgs) -> CliResult<TimeGrid> {
        let origin = g.grid_origin.clone().or_else(|| self.grid_origin.clone()).unwrap_or_else(|| "2007-01".into());
        let frames = g.grid_frames.or(self.grid_frames).unwrap_or(8);
        let (y, m) = origin
            .split_once('-')
            .and_then(|(y, m)| Some((y.parse::<i32>().ok()?, m.parse::<u32>().ok()?)))
            .ok_or_else(|| CliError::usage(format!("--grid-origin expects YYYY-MM, got {origin:?}")))?;
        Ok(TimeGrid::new(y, m, frames)?)
    }

    pub fn scheme(&self, flag: Option<SchemeArg>) -> CliResult<CategoryScheme> {
        match flag {
            Some(SchemeArg::Basic) => Ok(CategoryScheme::Basic),
            Some(SchemeArg::Extended) => Ok(CategoryScheme::Extended),
            None => match &self.scheme {
                Some(s) => Ok(s.parse()?),
                None => Ok(CategoryScheme::Basic),
            },
        }
    }

    pub fn trait_(&self, flag: &Option<String>) -> CliResult<Trait> {
        match flag.as_ref().or(self.trait_.as_ref()) {
            Some(s) => Ok(s.parse()?),
            None => Ok(Trait::Gender),
        }
    }

    /// Canonical class name; required when `needed`.
    pub fn class(&self, flag: &Option<String>, trait_: Trait, needed: bool) -> CliResult<Option<&'static str>> {
        match flag.as_ref().or(self.class.as_ref()) {
            Some(c) => trait_
                .canonical_class(c)
                .map(Some)
                .ok_or_else(|| traitleak::Error::UnknownClass { trait_, class: c.clone() }.into()),
            None if needed => Err(CliError::usage("--class is required")),
            None => Ok(None),
        }
    }
}

//! Batch command-line driver.
//!
//! Settings come from an optional `key = value` config file and are
//! overridden by flags. Exit codes: 0 success, 1 configuration error, 2 data
//! error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::activation::DecayParams;
use crate::analysis::{
    bin_reuse, compare_decay, curve_csv, decay_csv, reuse_observations, Dimension,
};
use crate::data::{chronological_split, parse_edges, parse_posts, parse_tweets};
use crate::error::Error;
use crate::evaluation::{
    evaluate, evaluate_hashtags, format_table, hashtag_report_csv, report_csv, EvalOptions,
    PrecisionDenominator,
};
use crate::hashtag::{HashtagAlgorithm, HashtagParams};
use crate::recommenders::{recommend, Algorithm, HybridParams, Query, RecParams};

#[derive(Debug, Parser)]
#[command(
    name = "tagrec",
    version,
    about = "Memory-activation tag and hashtag recommendation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// Config file with `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Post TSV file
    #[arg(long, global = true, value_name = "PATH")]
    posts: Option<PathBuf>,
    /// Tweet TSV file
    #[arg(long, global = true, value_name = "PATH")]
    tweets: Option<PathBuf>,
    /// Follow-edge TSV file
    #[arg(long, global = true, value_name = "PATH")]
    edges: Option<PathBuf>,
    /// Comma-separated algorithm ids
    #[arg(long, global = true, value_name = "LIST")]
    algorithms: Option<String>,
    /// Decay exponent
    #[arg(long, global = true, value_name = "FLOAT")]
    d: Option<f64>,
    /// Personal vs popularity (or individual vs social) weight
    #[arg(long, global = true, value_name = "FLOAT")]
    beta: Option<f64>,
    /// History vs content weight for hashtags
    #[arg(long, global = true, value_name = "FLOAT")]
    gamma: Option<f64>,
    /// Number of recommendations / extra evaluation cutoff
    #[arg(long, global = true, value_name = "INT")]
    k: Option<usize>,
    #[arg(long = "min-posts", global = true, value_name = "INT")]
    min_posts: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, value_name = "INT")]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Leave-newest-out evaluation of tag recommenders
    Evaluate,
    /// Print top-k tags for one user and resource
    Recommend {
        #[arg(long)]
        user: Option<String>,
        #[arg(long)]
        resource: Option<String>,
        /// Reference time (defaults to the newest post in the data)
        #[arg(long)]
        now: Option<i64>,
    },
    /// Tag reuse curves and decay-model comparison
    Analyze,
    /// Leave-newest-out evaluation of hashtag recommenders
    HashtagEvaluate,
}

/// Merged experiment settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub posts: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub algorithms: Option<Vec<String>>,
    pub hashtag_algorithms: Option<Vec<String>>,
    pub d: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub k: Option<usize>,
    pub min_posts: Option<usize>,
    pub cf_neighbors: Option<usize>,
    pub precision_denominator: Option<PrecisionDenominator>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Reserved; every component is deterministic.
    pub seed: Option<u64>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str, line: usize) -> CliResult<T> {
    raw.parse().map_err(|_| {
        config_err(format!(
            "config line {line}: invalid value `{raw}` for `{key}`"
        ))
    })
}

impl ExperimentConfig {
    /// Parses `key = value` lines. `#` starts a comment; values may be
    /// double-quoted. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        Self::parse_inner(text, base_dir).map_err(|e| e.message().to_string())
    }

    fn parse_inner(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(format!("config line {line}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            let path = || {
                let p = PathBuf::from(value);
                if p.is_relative() {
                    base_dir.join(p)
                } else {
                    p
                }
            };
            match key {
                "posts" => cfg.posts = Some(path()),
                "tweets" => cfg.tweets = Some(path()),
                "edges" => cfg.edges = Some(path()),
                "out" => cfg.out = Some(path()),
                "algorithms" => cfg.algorithms = Some(split_list(value)),
                "hashtag_algorithms" => cfg.hashtag_algorithms = Some(split_list(value)),
                "d" => cfg.d = Some(parse_value(key, value, line)?),
                "beta" => cfg.beta = Some(parse_value(key, value, line)?),
                "gamma" => cfg.gamma = Some(parse_value(key, value, line)?),
                "k" => cfg.k = Some(parse_value(key, value, line)?),
                "min_posts" => cfg.min_posts = Some(parse_value(key, value, line)?),
                "cf_neighbors" => cfg.cf_neighbors = Some(parse_value(key, value, line)?),
                "jobs" => cfg.jobs = Some(parse_value(key, value, line)?),
                "seed" => cfg.seed = Some(parse_value(key, value, line)?),
                "precision_denominator" => {
                    cfg.precision_denominator = Some(match value {
                        "returned" => PrecisionDenominator::Returned,
                        "k" => PrecisionDenominator::K,
                        other => {
                            return Err(config_err(format!(
                                "config line {line}: `precision_denominator` must be `returned` or `k`, got `{other}`"
                            )))
                        }
                    })
                }
                other => return Err(config_err(format!("config line {line}: unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    fn apply_flags(&mut self, flags: &CommonArgs, subcommand_is_hashtag: bool) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = flags.$field.clone() {
                    self.$field = Some(v);
                }
            };
        }
        take!(posts);
        take!(tweets);
        take!(edges);
        take!(d);
        take!(beta);
        take!(gamma);
        take!(k);
        take!(min_posts);
        take!(out);
        take!(jobs);
        if let Some(list) = &flags.algorithms {
            let list = Some(split_list(list));
            if subcommand_is_hashtag {
                self.hashtag_algorithms = list;
            } else {
                self.algorithms = list;
            }
        }
    }

    fn validate(&self) -> CliResult<()> {
        if let Some(d) = self.d {
            if !(d.is_finite() && d > 0.0) {
                return Err(config_err(format!("invalid `d`: must be > 0, got {d}")));
            }
        }
        for (name, w) in [("beta", self.beta), ("gamma", self.gamma)] {
            if let Some(w) = w {
                if !(0.0..=1.0).contains(&w) {
                    return Err(config_err(format!(
                        "invalid `{name}`: must lie in [0, 1], got {w}"
                    )));
                }
            }
        }
        for (name, v) in [
            ("k", self.k),
            ("jobs", self.jobs),
            ("cf_neighbors", self.cf_neighbors),
        ] {
            if v == Some(0) {
                return Err(config_err(format!("invalid `{name}`: must be >= 1")));
            }
        }
        if let Some(m) = self.min_posts {
            if m < 2 {
                return Err(config_err(format!(
                    "invalid `min_posts`: must be >= 2, got {m}"
                )));
            }
        }
        Ok(())
    }

    fn decay(&self) -> CliResult<DecayParams> {
        Ok(DecayParams::with_decay(
            self.d.unwrap_or(crate::activation::DEFAULT_DECAY),
        )?)
    }

    fn rec_params(&self) -> CliResult<RecParams> {
        let defaults = HybridParams::default();
        Ok(RecParams {
            decay: self.decay()?,
            hybrid: HybridParams {
                beta: self.beta.unwrap_or(defaults.beta),
                cf_neighbors: self.cf_neighbors.unwrap_or(defaults.cf_neighbors),
            },
        })
    }

    fn hashtag_params(&self) -> CliResult<HashtagParams> {
        let defaults = HashtagParams::default();
        Ok(HashtagParams {
            decay: self.decay()?,
            beta: self.beta.unwrap_or(defaults.beta),
            gamma: self.gamma.unwrap_or(defaults.gamma),
        })
    }

    fn min_posts(&self) -> usize {
        self.min_posts.unwrap_or(2)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn eval_options(&self) -> EvalOptions {
        let jobs = self
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        EvalOptions {
            extra_k: self.k,
            precision_denominator: self.precision_denominator.unwrap_or_default(),
            jobs: Some(jobs),
        }
    }

    fn algorithms(&self) -> CliResult<Vec<Algorithm>> {
        match &self.algorithms {
            None => Ok(Algorithm::ALL.to_vec()),
            Some(ids) if ids.is_empty() => Err(config_err("`algorithms` is empty")),
            Some(ids) => Ok(ids.iter().map(|s| s.parse()).collect::<Result<_, _>>()?),
        }
    }

    fn hashtag_algorithms(&self) -> CliResult<Vec<HashtagAlgorithm>> {
        match &self.hashtag_algorithms {
            None => Ok(HashtagAlgorithm::ALL.to_vec()),
            Some(ids) if ids.is_empty() => Err(config_err("`algorithms` is empty")),
            Some(ids) => Ok(ids.iter().map(|s| s.parse()).collect::<Result<_, _>>()?),
        }
    }
}

fn require<'a>(field: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
    field.as_deref().ok_or_else(|| {
        config_err(format!(
            "missing required setting `{name}` (path to the {name} file)"
        ))
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("output: {e}"))
}

fn cmd_evaluate(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    let posts = require(&cfg.posts, "posts")?;
    let algorithms = cfg.algorithms()?;
    let params = cfg.rec_params()?;
    let folksonomy = parse_posts(posts)?;
    let split = chronological_split(&folksonomy, cfg.min_posts())?;
    if split.test.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no user has at least {} posts to hold out",
            posts.display(),
            cfg.min_posts()
        )));
    }
    let report = evaluate(&split, &algorithms, &params, &cfg.eval_options())?;
    let path = write_file(&cfg.out_dir(), "eval_report.csv", &report_csv(&report))?;
    write!(out, "{}", format_table(&report)).map_err(io_err)?;
    writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    Ok(())
}

fn cmd_recommend(
    cfg: &ExperimentConfig,
    user: Option<&str>,
    resource: Option<&str>,
    now: Option<i64>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let posts = require(&cfg.posts, "posts")?;
    let user = user.ok_or_else(|| config_err("missing required flag `--user`"))?;
    let resource = resource.ok_or_else(|| config_err("missing required flag `--resource`"))?;
    let algorithm = match cfg.algorithms.as_deref() {
        Some([first, ..]) => first.parse()?,
        Some([]) => return Err(config_err("`algorithms` is empty")),
        None => Algorithm::BllAcMpR,
    };
    let k = cfg.k.unwrap_or(5);
    let params = cfg.rec_params()?;
    let train = parse_posts(posts)?;
    let now = now.or(train.max_timestamp()).unwrap_or(0);
    let list = recommend(
        algorithm,
        &train,
        &Query::new(user, resource, now),
        k,
        &params,
    )?;
    for (tag, score) in &list.items {
        writeln!(out, "{tag}\t{score:.6}").map_err(io_err)?;
    }
    Ok(())
}

fn cmd_analyze(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    let posts = require(&cfg.posts, "posts")?;
    let folksonomy = parse_posts(posts)?;
    let observations = reuse_observations(&folksonomy, cfg.min_posts())?;
    if observations.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no user has at least {} posts; nothing to analyze",
            posts.display(),
            cfg.min_posts()
        )));
    }
    let dir = cfg.out_dir();
    let mut recency = None;
    for dim in Dimension::ALL {
        let curve = bin_reuse(&observations, dim, &dim.default_edges())?;
        write_file(
            &dir,
            &format!("reuse_{}.csv", dim.name()),
            &curve_csv(&curve),
        )?;
        if dim == Dimension::Recency {
            recency = Some(curve);
        }
    }
    let cmp = compare_decay(&recency.expect("recency curve built"))?;
    write_file(&dir, "decay_fit.csv", &decay_csv(&cmp))?;
    writeln!(
        out,
        "{} observations; recency decay: power r2={:.4}, exponential r2={:.4}, winner={}",
        observations.len(),
        cmp.power.r_squared,
        cmp.exponential.r_squared,
        cmp.winner
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "wrote reuse_frequency.csv, reuse_recency.csv, reuse_context.csv, decay_fit.csv to {}",
        dir.display()
    )
    .map_err(io_err)?;
    Ok(())
}

fn cmd_hashtag_evaluate(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    let tweets_path = require(&cfg.tweets, "tweets")?;
    let edges_path = require(&cfg.edges, "edges")?;
    let algorithms = cfg.hashtag_algorithms()?;
    let params = cfg.hashtag_params()?;
    let tweets = parse_tweets(tweets_path)?;
    let graph = parse_edges(edges_path)?;
    let report = evaluate_hashtags(
        &tweets,
        &graph,
        &algorithms,
        &params,
        cfg.min_posts(),
        &cfg.eval_options(),
    )
    .map_err(|e| match e {
        Error::EmptyTestSet => CliError::Data(format!(
            "{}: no user has at least {} hashtagged tweets to hold out",
            tweets_path.display(),
            cfg.min_posts()
        )),
        other => other.into(),
    })?;
    let path = write_file(
        &cfg.out_dir(),
        "hashtag_report.csv",
        &hashtag_report_csv(&report),
    )?;
    write!(out, "{}", format_table(&report.eval)).map_err(io_err)?;
    let b = report.breakdown;
    writeln!(
        out,
        "hashtag assignments: {} (individual only {:.4}, social only {:.4}, both {:.4}, external {:.4})",
        b.assignments, b.individual_only, b.social_only, b.both, b.external
    )
    .map_err(io_err)?;
    writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    Ok(())
}

fn load_config(flags: &CommonArgs, hashtag: bool) -> CliResult<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("config {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("."));
            ExperimentConfig::parse_inner(&text, base)
                .map_err(|e| config_err(format!("{}: {}", path.display(), e.message())))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.apply_flags(flags, hashtag);
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the CLI with explicit arguments and output streams; returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let hashtag = matches!(cli.command, Command::HashtagEvaluate);
    let result = load_config(&cli.common, hashtag).and_then(|cfg| match &cli.command {
        Command::Evaluate => cmd_evaluate(&cfg, out),
        Command::Recommend {
            user,
            resource,
            now,
        } => cmd_recommend(&cfg, user.as_deref(), resource.as_deref(), *now, out),
        Command::Analyze => cmd_analyze(&cfg, out),
        Command::HashtagEvaluate => cmd_hashtag_evaluate(&cfg, out),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

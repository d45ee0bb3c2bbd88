//! `convergence` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convergence::corpus::panel::{read_panel_csv, write_panel_csv};
use convergence::driver::pipeline::{self, attach_scores, score_targets};
use convergence::driver::{report_from_panel, run_pipeline, OutputDir, RunConfig, SubsampleRule};
use convergence::embedding::read_store;
use convergence::hdfe::{fit_event_study, DofConvention, Inference};
use convergence::lexicon::flags::read_flags_csv;
use convergence::lexicon::flags_to_csv;
use convergence::similarity::{BenchmarkVariant, ScoreRun};
use convergence::synth::{self, DgpParams, ScenarioParams};
use convergence::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "convergence", version, about = "GenAI marker detection, benchmark similarity and event-study estimation")]
struct Cli {
    /// Log filter, e.g. `info` or `convergence=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage end to end.
    Run(RunArgs),
    /// Select marker stems and flag publications.
    Detect(RunArgs),
    /// Score publications against their benchmark centroids.
    Score {
        #[command(flatten)]
        run: RunArgs,
        /// Flags file from `detect`.
        #[arg(long)]
        flags: PathBuf,
    },
    /// Build the panel with flags and scores attached.
    Panel {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        flags: PathBuf,
        #[arg(long)]
        scores: PathBuf,
    },
    /// Fit the event study on a panel file.
    Fit {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        panel: PathBuf,
    },
    /// Fit every configured subsample of a panel file and write plot data.
    Report {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        panel: PathBuf,
    },
    /// Write a synthetic input set.
    Synth(SynthArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    countries: Option<PathBuf>,
    #[arg(long)]
    field_map: Option<PathBuf>,
    #[arg(long)]
    vocabulary: Option<PathBuf>,
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Recompute every stage.
    #[arg(long)]
    no_cache: bool,
    /// 3, 4 or 5.
    #[arg(long)]
    threshold_fold: Option<f64>,
    #[arg(long)]
    min_support: Option<u64>,
    /// 1 or 2.
    #[arg(long)]
    min_distinct: Option<u32>,
    /// AllUS, NonGenAI_US, Top10Journal_US or Fixed2021_US.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    min_benchmark: Option<usize>,
    #[arg(long)]
    reference_year: Option<i32>,
    /// Repeatable; e.g. `all`, `domestic_only`, `field:LifeSci`, or `standard`.
    #[arg(long = "subsample")]
    subsamples: Vec<String>,
    /// absorbed_levels or regressors_only.
    #[arg(long)]
    dof: Option<String>,
    /// normal or student_t.
    #[arg(long)]
    inference: Option<String>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    partitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let set = |dst: &mut PathBuf, src: &Option<PathBuf>| {
            if let Some(p) = src {
                *dst = p.clone();
            }
        };
        set(&mut c.corpus, &self.corpus);
        set(&mut c.countries, &self.countries);
        set(&mut c.vectors, &self.vectors);
        set(&mut c.output_dir, &self.out_dir);
        if self.field_map.is_some() {
            c.field_map = self.field_map.clone();
        }
        if self.vocabulary.is_some() {
            c.vocabulary = self.vocabulary.clone();
        }
        if self.cache_dir.is_some() {
            c.cache_dir = self.cache_dir.clone();
        }
        if self.no_cache {
            c.use_cache = false;
        }
        if let Some(v) = self.threshold_fold {
            c.threshold_fold = v;
        }
        if let Some(v) = self.min_support {
            c.min_support = v;
        }
        if let Some(v) = self.min_distinct {
            c.min_distinct = v;
        }
        if let Some(v) = &self.variant {
            c.variant = v.parse::<BenchmarkVariant>()?;
        }
        if let Some(v) = self.min_benchmark {
            c.min_benchmark = v;
        }
        if let Some(v) = self.reference_year {
            c.reference_year = v;
        }
        if !self.subsamples.is_empty() {
            c.subsamples = Vec::new();
            for s in &self.subsamples {
                if s == "standard" {
                    c.subsamples.extend(SubsampleRule::standard_set());
                } else {
                    c.subsamples.push(s.parse()?);
                }
            }
        }
        if let Some(v) = &self.dof {
            c.dof = v.parse::<DofConvention>()?;
        }
        if let Some(v) = &self.inference {
            c.inference = v.parse::<Inference>()?;
        }
        if self.strict {
            c.strict = true;
        }
        if let Some(v) = self.partitions {
            c.partitions = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate(false)?;
        Ok(c)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Records per field-year stratum.
    #[arg(long, default_value_t = 200)]
    per_stratum: usize,
    /// Vector dimension.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Also write a regression panel with this many rows from the panel generator.
    #[arg(long)]
    panel_rows: Option<usize>,
}

fn require(path: &Path, what: &str) -> Result<(), Error> {
    if path.as_os_str().is_empty() {
        return Err(Error::InvalidConfig(format!("--{what} is required")));
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run(a) => {
            let cfg = a.config()?;
            let summary = run_pipeline(&cfg)?;
            for s in &summary.manifest.subsamples {
                println!("{}\t{}\t{}", s.name, s.status, s.n_obs);
            }
            println!("manifest\t{}", cfg.output_dir.join("manifest.json").display());
        }
        Command::Detect(a) => {
            let cfg = a.config()?;
            require(&cfg.corpus, "corpus")?;
            let inputs = load_text_inputs(&cfg)?;
            let d = pipeline::detect(&cfg, &inputs).map_err(|e| e.in_stage("detect"))?;
            let mut out = OutputDir::create(&cfg.output_dir)?;
            out.write("markers.csv", d.markers_csv.as_bytes())?;
            out.write("flags.csv", flags_to_csv(&d.flags).as_bytes())?;
            let n = d.flags.iter().filter(|f| f.flagged_any_field).count();
            println!("flagged_any_field\t{n}\t{}", d.flags.len());
        }
        Command::Score { run, flags } => {
            let cfg = run.config()?;
            require(&cfg.vectors, "vectors")?;
            let inputs = load_text_inputs(&cfg)?;
            let flags = read_flags_csv(&flags)?;
            let cells = pipeline::panel(&cfg, &inputs, &flags).map_err(|e| e.in_stage("panel"))?;
            let targets = score_targets(&cells);
            let scores = pipeline::score(&cfg, &inputs, &flags, &targets, || read_store(&cfg.vectors))
                .map_err(|e| e.in_stage("score"))?;
            let mut out = OutputDir::create(&cfg.output_dir)?;
            out.write("scores.csv", scores.scores_csv().as_bytes())?;
            out.write("benchmarks.csv", scores.benchmarks_csv().as_bytes())?;
            println!("scored\t{}\tdropped\t{}", scores.scores.len(), scores.dropped.len());
        }
        Command::Panel { run, flags, scores } => {
            let cfg = run.config()?;
            let inputs = load_text_inputs(&cfg)?;
            let flags = read_flags_csv(&flags)?;
            let cells = pipeline::panel(&cfg, &inputs, &flags).map_err(|e| e.in_stage("panel"))?;
            let run = ScoreRun { scores: ScoreRun::read_scores_csv(&scores)?, ..ScoreRun::default() };
            let (cells, dropped) = attach_scores(cells, &run);
            let mut out = OutputDir::create(&cfg.output_dir)?;
            out.write("panel.csv", &write_panel_csv(&cells)?)?;
            println!("cells\t{}\tunscored\t{dropped}", cells.len());
        }
        Command::Fit { run, panel } => {
            let cfg = run.config()?;
            let cells = read_panel_csv(&panel).map_err(|e| e.in_stage("parse"))?;
            let es = pipeline::event_study_config(&cfg)?;
            let fit = fit_event_study(&cells, &es).map_err(|e| e.in_stage("fit"))?;
            let mut out = OutputDir::create(&cfg.output_dir)?;
            out.write("coefficients.csv", fit.coefficients_csv().as_bytes())?;
            out.write("fit.json", fit.manifest_json()?.as_bytes())?;
            print!("{}", fit.coefficients_csv());
        }
        Command::Report { run, panel } => {
            let cfg = run.config()?;
            require(&cfg.countries, "countries")?;
            let m = report_from_panel(&cfg, &panel)?;
            for s in &m.subsamples {
                println!("{}\t{}\t{}", s.name, s.status, s.n_obs);
            }
        }
        Command::Synth(a) => {
            let mut p = ScenarioParams { seed: a.seed, dim: a.dim, ..ScenarioParams::default() };
            p.text.seed = a.seed;
            p.text.per_stratum = a.per_stratum;
            let scenario = synth::gen_scenario(&p)?;
            let paths = synth::write_scenario(&scenario, &a.out_dir)?;
            println!("corpus\t{}", paths.corpus.display());
            println!("vectors\t{}", paths.vectors.display());
            if let Some(n) = a.panel_rows {
                let params = DgpParams { n_rows: n, seed: a.seed, ..DgpParams::default() };
                let (cells, truth) = synth::gen_panel(&params)?;
                let mut out = OutputDir::create(&a.out_dir)?;
                out.write("panel.csv", &write_panel_csv(&cells)?)?;
                let truth = serde_json_string(&truth)?;
                out.write("panel_truth.json", truth.as_bytes())?;
                println!("panel\t{}", a.out_dir.join("panel.csv").display());
            }
        }
    }
    Ok(())
}

fn serde_json_string<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn load_text_inputs(cfg: &RunConfig) -> Result<pipeline::Inputs, Error> {
    require(&cfg.corpus, "corpus")?;
    require(&cfg.countries, "countries")?;
    pipeline::load_inputs(cfg).map_err(|e| e.in_stage("parse"))
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numeric => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}

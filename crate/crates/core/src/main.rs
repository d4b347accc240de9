use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topicgraph::config::{format_clusters, parse_clusters, ExperimentConfig};
use topicgraph::experiment::{
    cluster_sweep_csv, edges_tsv, features_csv, run_in_session, topics_csv, topk_sweep_csv, write_all, Session,
    SweepRow,
};
use topicgraph::gcn::{gradcheck_instance, gradient_check};
use topicgraph::synthetic::{self, NoisySpec};
use topicgraph::{Error, Result};

const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "topicgraph",
    version,
    about = "Topic-conditioned multi-graph GCN for short-text classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set graph.top_k=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Dataset path (same as `--set data.path=...`).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        if let Some(d) = &self.data {
            cfg.data.path = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write metrics, history, checkpoint and topics.
    Run(ConfigArgs),
    /// One run per cluster combination; writes sweep_clusters.csv.
    SweepClusters {
        #[command(flatten)]
        config: ConfigArgs,
        /// Combination such as `8+16`; repeatable. Default: 8, 8+16, 8+16+32.
        #[arg(short = 'H', long = "combination")]
        combinations: Vec<String>,
    },
    /// One run per top-K value; writes sweep_topk.csv.
    SweepTopk {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated K values.
        #[arg(short, long, value_delimiter = ',', default_value = "1,2,5,10,20")]
        k: Vec<usize>,
    },
    /// Finite-difference check of the analytic gradients on a small instance.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Write the selected words of every topic as topics_c{c}.csv.
    DumpTopics(ConfigArgs),
    /// Write every topic graph's edges as graph_edges.tsv.
    DumpGraph {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write nonzero features as graph_features.csv.
        #[arg(long)]
        features: bool,
    },
    /// Write a seeded synthetic corpus as JSONL.
    GenSynthetic {
        #[arg(long, value_enum, default_value_t = Kind::Separable)]
        kind: Kind,
        #[arg(long, default_value_t = 200)]
        docs: usize,
        /// Tokens per document; kind-specific default when omitted.
        #[arg(long)]
        doc_len: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Disjoint,
    Separable,
    Noisy,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Invalid(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn finish_sweep(cfg: &ExperimentConfig, name: &str, csv: String, rows: &[SweepRow]) -> Result<ExitCode> {
    let written = write_all(&cfg.out_dir, &[(name.to_string(), csv.clone())])?;
    print!("{csv}");
    eprintln!("wrote {}", written[0].display());
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", rows.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let mut session = Session::load(&cfg)?;
            let report = run_in_session(&mut session, &cfg)?;
            let m = &report.outcome.metrics;
            println!(
                "graphs {}  accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  auc {}  train {:.2}s",
                report.outcome.graphs.len(),
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                m.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "n/a".into()),
                report.outcome.train_seconds()
            );
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepClusters { config, combinations } => {
            let cfg = config.resolve()?;
            let combos = if combinations.is_empty() {
                vec![vec![8], vec![8, 16], vec![8, 16, 32]]
            } else {
                combinations.iter().map(|c| parse_clusters(c)).collect::<Result<_>>()?
            };
            let mut session = Session::load(&cfg)?;
            let rows = session.sweep_clusters(&cfg, &combos)?;
            for (combo, row) in combos.iter().zip(&rows) {
                if let Err(e) = &row.result {
                    eprintln!("combination {}: {e}", format_clusters(combo));
                }
            }
            finish_sweep(&cfg, "sweep_clusters.csv", cluster_sweep_csv(&rows), &rows)
        }
        Command::SweepTopk { config, k } => {
            let cfg = config.resolve()?;
            let mut session = Session::load(&cfg)?;
            let rows = session.sweep_topk(&cfg, &k)?;
            for row in &rows {
                if let Err(e) = &row.result {
                    eprintln!("k = {}: {e}", row.key);
                }
            }
            finish_sweep(&cfg, "sweep_topk.csv", topk_sweep_csv(&rows), &rows)
        }
        Command::Gradcheck { seed, step, corrupt } => {
            let (model, graphs, labels, mask) = gradcheck_instance(seed);
            let report = gradient_check(&model, &graphs, &labels, &mask, step, corrupt)?;
            let pass = report.max_rel_error < GRADCHECK_TOLERANCE;
            println!(
                "{}, max rel err {:.3e} over {} parameters (tolerance {GRADCHECK_TOLERANCE:e})",
                if pass { "PASS" } else { "FAIL" },
                report.max_rel_error,
                report.checked
            );
            Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::DumpTopics(args) => {
            let cfg = args.resolve()?;
            let mut session = Session::load(&cfg)?;
            let sets = session.topic_sets(&cfg)?;
            let files: Vec<(String, String)> = sets
                .iter()
                .map(|s| (format!("topics_c{}.csv", s.num_topics), topics_csv(s)))
                .collect();
            for f in write_all(&cfg.out_dir, &files)? {
                eprintln!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpGraph { config, features } => {
            let cfg = config.resolve()?;
            let mut session = Session::load(&cfg)?;
            let (_, graphs) = session.build_graphs(&cfg)?;
            let mut files = vec![("graph_edges.tsv".to_string(), edges_tsv(&graphs))];
            if features {
                files.push(("graph_features.csv".to_string(), features_csv(&graphs)));
            }
            for f in write_all(&cfg.out_dir, &files)? {
                eprintln!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenSynthetic {
            kind,
            docs,
            doc_len,
            seed,
            output,
        } => {
            let posts = match kind {
                Kind::Disjoint => synthetic::disjoint_vocabularies(seed, docs, doc_len.unwrap_or(30)),
                Kind::Separable => synthetic::separable(seed, docs, doc_len.unwrap_or(20)),
                Kind::Noisy => {
                    let d = NoisySpec::default();
                    synthetic::noisy(
                        seed,
                        NoisySpec {
                            docs,
                            doc_len: doc_len.unwrap_or(d.doc_len),
                            ..d
                        },
                    )
                }
            };
            write_file(&output, &synthetic::to_jsonl(&posts))?;
            eprintln!("wrote {} posts to {}", posts.len(), output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

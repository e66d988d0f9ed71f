use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qa_core::index::{DEFAULT_B, DEFAULT_K1};
use qa_core::judgments::DEFAULT_THRESHOLD;
use qa_pipeline::pipeline::{DEFAULT_HITS, DEFAULT_K};

#[derive(Debug, Parser)]
#[command(
    name = "qa",
    version,
    about = "End-to-end factoid question answering: retrieval, reranking, evaluation and assessment",
    after_help = "Every flag may also be set in a --config file of `key=value` lines \
                  (key = flag name without dashes); flags on the command line win."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Configuration file of `key=value` lines mirroring the flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a BM25 index from a document collection.
    Index(IndexArgs),
    /// Retrieve documents (or their sentences) for each question.
    Retrieve(RetrieveArgs),
    /// Rerank candidate sentences by word overlap, idf overlap or the CNN.
    Rerank(RerankArgs),
    /// Train the answer-selection CNN.
    Train(TrainArgs),
    /// Compare analytic and numeric gradients on random small models.
    GradCheck(GradCheckArgs),
    /// Run the full question answering pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Label retrieved sentences from annotated dataset sentences.
    TransferJudgments(TransferArgs),
    /// Evaluate a run against judgments.
    Eval(EvalArgs),
    /// Recall of relevant dataset sentences at several retrieval depths.
    RecallCurve(RecallArgs),
    /// Significance tests over side-by-side preference counts.
    Stats(StatsArgs),
    /// Blinded side-by-side assessment.
    #[command(subcommand)]
    Assess(AssessCommand),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// JSONL or TREC SGML file or directory, optionally gzipped.
    #[arg(long, value_name = "PATH")]
    pub docs: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// BM25 term frequency saturation.
    #[arg(long, default_value_t = DEFAULT_K1)]
    pub k1: f64,
    /// BM25 length normalization.
    #[arg(long, default_value_t = DEFAULT_B)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long, value_name = "DIR")]
    pub index: PathBuf,
    /// `qid<TAB>question` per line.
    #[arg(long, value_name = "FILE")]
    pub questions: PathBuf,
    /// Documents retrieved per question (h).
    #[arg(long, default_value_t = DEFAULT_HITS)]
    pub hits: usize,
    /// Emit the sentences of the retrieved documents instead of the documents.
    #[arg(long)]
    pub segment: bool,
    /// With --segment: write sentence texts here.
    #[arg(long, value_name = "FILE", requires = "segment")]
    pub sidecar: Option<PathBuf>,
    /// Output run file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RerankMode {
    Overlap,
    Idf,
    Cnn,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long, value_enum, default_value_t = RerankMode::Idf)]
    pub mode: RerankMode,
    /// Answers kept per question [default: 5, or every candidate with --dataset].
    #[arg(long)]
    pub k: Option<usize>,
    /// Candidate run to rerank (with --sidecar and --questions).
    #[arg(long, value_name = "FILE", conflicts_with = "dataset", requires_all = ["sidecar", "questions"])]
    pub run: Option<PathBuf>,
    /// Sentence texts for the run's keys.
    #[arg(long, value_name = "FILE")]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub questions: Option<PathBuf>,
    /// Take idf from this index instead of the candidate sentences.
    #[arg(long, value_name = "DIR")]
    pub index: Option<PathBuf>,
    /// Rank the candidates of a labeled dataset split; keys are `qid/index`.
    #[arg(long, value_name = "PATH", required_unless_present = "run")]
    pub dataset: Option<PathBuf>,
    /// Further dataset splits whose candidates count toward idf.
    #[arg(long, value_name = "PATH")]
    pub idf_dataset: Vec<PathBuf>,
    /// Trained model directory (mode cnn).
    #[arg(long, value_name = "DIR", required_if_eq("mode", "cnn"))]
    pub model: Option<PathBuf>,
    /// Word vectors the model was trained with.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training split (JSONL file or parallel-file directory).
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,
    /// Development split used for early stopping.
    #[arg(long, value_name = "PATH")]
    pub dev: PathBuf,
    /// Word vectors; without them every word gets a seeded random vector.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Embedding dimension when no --embeddings are given.
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Epochs without a dev MAP gain before stopping.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Convolution filter width.
    #[arg(long, default_value_t = 5)]
    pub width: usize,
    /// Feature maps per arm.
    #[arg(long, default_value_t = 100)]
    pub maps: usize,
    /// Hidden layer size.
    #[arg(long, default_value_t = 204)]
    pub hidden: usize,
    /// Update word vectors during training.
    #[arg(long)]
    pub trainable_embeddings: bool,
    /// Further dataset splits whose candidates count toward idf.
    #[arg(long, value_name = "PATH")]
    pub idf_dataset: Vec<PathBuf>,
    /// Model output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Per-epoch JSONL log [default: OUT/train_log.jsonl].
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// Random small models to check.
    #[arg(long, default_value_t = 20)]
    pub models: u64,
    /// Central difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
pub enum PipelineCommand {
    /// Retrieve, segment and rerank for every question.
    Run(PipelineRunArgs),
    /// Write the synthetic desk-scale corpus.
    Synthetic(SyntheticArgs),
}

#[derive(Debug, Args)]
pub struct PipelineRunArgs {
    #[arg(long, value_name = "DIR")]
    pub index: PathBuf,
    /// `idf` or `idf+cnn`.
    #[arg(long, default_value = "idf")]
    pub condition: String,
    /// Documents retrieved per question.
    #[arg(long, default_value_t = DEFAULT_HITS)]
    pub h: usize,
    /// Answers returned per question.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Trained model directory (condition idf+cnn).
    #[arg(long, value_name = "DIR")]
    pub model: Option<PathBuf>,
    /// Word vectors the model was trained with.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub questions: PathBuf,
    /// Output run file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Sentence texts of the returned answers [default: OUT.sentences.tsv].
    #[arg(long, value_name = "FILE")]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub documents: usize,
    #[arg(long, default_value_t = 20)]
    pub test_questions: usize,
    #[arg(long, default_value_t = 60)]
    pub train_questions: usize,
    #[arg(long, default_value_t = 12)]
    pub dev_questions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiePrefer {
    Relevant,
    Nonrelevant,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub sidecar: PathBuf,
    /// Annotated dataset split.
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// A label transfers when Jaccard is strictly greater than this.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Label preferred when annotated sentences tie on Jaccard.
    #[arg(long, value_enum, default_value_t = TiePrefer::Relevant)]
    pub tie_prefer: TiePrefer,
    /// Output qrels file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// JSONL record of every match.
    #[arg(long, value_name = "FILE")]
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub run: PathBuf,
    #[arg(long, value_name = "FILE", required_unless_present = "dataset", conflicts_with = "dataset")]
    pub qrels: Option<PathBuf>,
    /// Judge `qid/index` keys by the labels of this dataset split.
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// Comma list of map, mrr, rbp[:p] (p defaults to 0.5), bpref.
    #[arg(long, default_value = "map,mrr,rbp:0.5,bpref")]
    pub metrics: String,
    /// Truncate RBP at this depth [default: whole list].
    #[arg(long)]
    pub rbp_depth: Option<usize>,
    /// Add one row per question.
    #[arg(long)]
    pub per_query: bool,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    #[arg(long, value_name = "DIR")]
    pub index: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub questions: PathBuf,
    /// Annotated dataset split.
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// Retrieval depths.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,200")]
    pub hits: Vec<usize>,
    /// A relevant sentence is recalled above this Jaccard.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sided {
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// `[judge=]A,B,BOTH,NEITHER` preference counts; repeatable.
    #[arg(long, value_name = "COUNTS", required_unless_present = "journal")]
    pub counts: Vec<String>,
    /// Assessment journal; reports every judge of --session.
    #[arg(long, value_name = "FILE", requires = "session", conflicts_with = "counts")]
    pub journal: Option<PathBuf>,
    #[arg(long)]
    pub session: Option<String>,
    /// Alternative hypothesis; `greater` means A is preferred.
    #[arg(long, value_enum, default_value_t = Sided::TwoSided)]
    pub sided: Sided,
}

#[derive(Debug, Subcommand)]
pub enum AssessCommand {
    /// Serve the assessment API over HTTP.
    Serve(ServeArgs),
    /// Create a session from two runs.
    Create(CreateArgs),
    /// Unblinded results of a session.
    Results(ResultsArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Append-only judgment journal.
    #[arg(long, value_name = "FILE")]
    pub journal: PathBuf,
}

#[derive(Debug, Args)]
pub struct CreateArgs {
    #[arg(long, value_name = "FILE")]
    pub journal: PathBuf,
    /// Run of condition A.
    #[arg(long, value_name = "FILE")]
    pub run_a: PathBuf,
    /// Run of condition B.
    #[arg(long, value_name = "FILE")]
    pub run_b: PathBuf,
    /// Sentence texts; repeatable, later files win.
    #[arg(long, value_name = "FILE", required = true)]
    pub sidecar: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub questions: PathBuf,
    /// Answers shown per side.
    #[arg(long, default_value_t = qa_assess::service::DEFAULT_K)]
    pub k: usize,
    /// Present questions in file order to every judge.
    #[arg(long)]
    pub no_shuffle: bool,
}

#[derive(Debug, Args)]
pub struct ResultsArgs {
    #[arg(long, value_name = "FILE")]
    pub journal: PathBuf,
    #[arg(long)]
    pub session: String,
}

fn override_self(cmd: clap::Command) -> clap::Command {
    cmd.args_override_self(true).mut_subcommands(override_self)
}

/// The full command tree; a repeated flag keeps its last value.
pub fn command() -> clap::Command {
    override_self(<Cli as clap::CommandFactory>::command())
}

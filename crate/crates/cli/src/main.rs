use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vqag::extract::{ExtractConfig, Gazetteer, SynonymTable};
use vqag::io::{group_records, read_captions, read_objects, read_qa, read_references, write_qa};
use vqag::metrics::{evaluate_corpus, parse_metric_list, Metric};
use vqag::pipeline::generate_corpus;
use vqag::question::{GenConfig, WhMapping, DEFAULT_MAX_QUESTION_TOKENS, MIN_QUESTION_TOKENS};
use vqag::report::{category_distribution, render_report};
use vqag::Error;

/// Generate visual question-answer pairs from parsed captions and object
/// detections, and score them against reference questions.
#[derive(Parser, Debug)]
#[command(name = "vqag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a QA JSONL file from CoNLL-U captions and detections.
    Generate(GenerateArgs),
    /// Score generated questions against references.
    Evaluate(EvaluateArgs),
    /// Print the question-word distribution of a QA file.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Dependency-parsed captions (CoNLL-U with NER in MISC).
    #[arg(long, value_name = "PATH")]
    captions: PathBuf,
    /// Object detections, one JSON object per image.
    #[arg(long, value_name = "PATH")]
    objects: PathBuf,
    /// Output QA JSONL.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Drop captions that mention none of the detected objects.
    #[arg(long)]
    filter_captions: bool,
    /// Ignore detections when choosing answers.
    #[arg(long)]
    no_objects_context: bool,
    /// Maximum question length in words.
    #[arg(
        long,
        value_name = "N",
        default_value_t = DEFAULT_MAX_QUESTION_TOKENS,
        value_parser = question_len
    )]
    max_question_len: usize,
    /// Extra synonyms, `label<TAB>word1,word2,...` per line.
    #[arg(long, value_name = "PATH")]
    synonyms: Option<PathBuf>,
    /// Animal labels, one per line (replaces the built-in list).
    #[arg(long, value_name = "PATH")]
    gazetteer: Option<PathBuf>,
    /// Category to question-word overrides, `CATEGORY<TAB>word` per line.
    #[arg(long, value_name = "PATH")]
    wh_map: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, value_name = "N", default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Generated QA JSONL.
    #[arg(long, value_name = "PATH")]
    qa: PathBuf,
    /// Reference questions JSONL.
    #[arg(long, value_name = "PATH")]
    references: PathBuf,
    /// Comma-separated subset of bleu,rouge-l,meteor.
    #[arg(long, value_name = "LIST", default_value = "bleu,rouge-l,meteor", value_parser = metric_list)]
    metrics: BTreeSet<Metric>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// QA JSONL to summarize.
    #[arg(long, value_name = "PATH")]
    qa: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn question_len(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < MIN_QUESTION_TOKENS {
        return Err(format!("must be at least {MIN_QUESTION_TOKENS}"));
    }
    Ok(n)
}

fn metric_list(s: &str) -> Result<BTreeSet<Metric>, String> {
    let set = parse_metric_list(s).map_err(|e| e.to_string())?;
    if set.is_empty() {
        return Err("no metrics given".into());
    }
    Ok(set)
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth reporting
            let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
            Ok(())
        }
    }
}

fn generate(args: &GenerateArgs) -> Result<(), Error> {
    let mut ecfg = ExtractConfig {
        use_objects_context: !args.no_objects_context,
        filter_captions: args.filter_captions,
        ..ExtractConfig::default()
    };
    if let Some(path) = &args.synonyms {
        let mut table = SynonymTable::default();
        table.extend_from_tsv(&read_text(path)?).map_err(|e| e.in_file(path))?;
        ecfg.synonyms = table;
    }
    if let Some(path) = &args.gazetteer {
        ecfg.animals = Gazetteer::parse(&read_text(path)?);
    }
    let mut wh = WhMapping::default();
    if let Some(path) = &args.wh_map {
        wh.override_from_tsv(&read_text(path)?).map_err(|e| e.in_file(path))?;
    }
    let gcfg = GenConfig::new(args.max_question_len, wh)?;

    let captions = read_captions(&args.captions)?;
    let objects = read_objects(&args.objects)?;
    let records = group_records(captions, &objects);
    let result = generate_corpus(&records, &ecfg, &gcfg, args.jobs)?;
    write_qa(&result.pairs, &args.out)?;

    let summary = format!(
        "images {}\ncaptions {}\nfiltered {}\nskipped {}\npairs {}\n\n{}",
        records.len(),
        result.captions,
        result.filtered,
        result.skipped,
        result.pairs.len(),
        render_report(&category_distribution(&result.pairs), None),
    );
    emit(&summary, None)
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Error> {
    let pairs = read_qa(&args.qa)?;
    let refs = read_references(&args.references)?;
    let report = evaluate_corpus(&pairs, &refs, &args.metrics);
    let text = render_report(&category_distribution(&pairs), Some(&report));
    emit(&text, args.out.as_deref())
}

fn stats(args: &StatsArgs) -> Result<(), Error> {
    let pairs = read_qa(&args.qa)?;
    emit(&render_report(&category_distribution(&pairs), None), args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vqag: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

//! Command-line workflows: `train`, `lemmatize`, `eval`.
//!
//! `lemmatize` streams: it reads, lemmatizes and writes in bounded chunks,
//! so memory stays flat no matter how long the input is. Malformed token
//! lines degrade to an identity lemma with a warning instead of aborting;
//! warnings never change the exit status.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::eval::{evaluate, read_gold, tag_accuracy, EvalReport, Flag, GoldToken, TokenRecord};
use crate::format::{load_model, serialize_model};
use crate::lexicon::parse_lexicon;
use crate::ruleset::{LemmatizeOptions, Model};
use crate::tagmap::TagMap;
use crate::trainer::{train, TrainConfig};

/// Lines per streaming chunk; bounds lemmatize memory.
const CHUNK_LINES: usize = 8_192;
/// Individually reported malformed lines before summarizing.
const MAX_REPORTED_WARNINGS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "nefnir", version, about = "Trainable suffix-substitution lemmatizer for tagged text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// More detail on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a model from a morphological lexicon of form/tag/lemma triples.
    Train(TrainArgs),
    /// Lemmatize a tagged token stream with a trained model.
    Lemmatize(LemmatizeArgs),
    /// Score a model or a predictions file against a gold corpus.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Lexicon TSV: form TAB tag TAB lemma, '+' compound markers in the form.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Extra form TAB tag pairs whose lemma is the form itself.
    #[arg(long)]
    pub uninflected: Option<PathBuf>,
    /// Tag translation TSV applied to lexicon tags before training.
    #[arg(long)]
    pub tagmap: Option<PathBuf>,
    /// Minimum correct applications a candidate rule needs.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_support: u64,
    /// Where to write the model.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LemmatizeArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Tag translation TSV applied to input tags before lookup.
    #[arg(long)]
    pub tagmap: Option<PathBuf>,
    /// Retry unmatched words with a lowercased initial before giving up.
    #[arg(long)]
    pub case_fallback: bool,
    /// Token TAB tag input; standard input when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = ArgGroup::new("predictions").required(true).multiple(false))]
pub struct EvalArgs {
    /// Gold corpus: form TAB tag TAB lemma, optional 4th auto-tag column.
    #[arg(long)]
    pub gold: PathBuf,
    /// Model to produce predictions from the gold corpus.
    #[arg(long, group = "predictions")]
    pub model: Option<PathBuf>,
    /// Ready-made predictions in lemmatize output format.
    #[arg(long, group = "predictions")]
    pub pred: Option<PathBuf>,
    /// Tag translation TSV applied before model lookups.
    #[arg(long)]
    pub tagmap: Option<PathBuf>,
    /// Write a TSV disagreement dump here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => run_train(args, cli.verbose),
        Command::Lemmatize(args) => run_lemmatize(args, cli.verbose),
        Command::Eval(args) => run_eval(args, cli.verbose),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_tagmap(path: Option<&Path>) -> Result<Option<TagMap>> {
    let Some(path) = path else { return Ok(None) };
    let map = TagMap::load(open(path)?)
        .with_context(|| format!("invalid tag map {}", path.display()))?;
    if !map.is_idempotent() {
        eprintln!(
            "warning: tag map {} maps some tags onto other source tags; translation is not idempotent",
            path.display()
        );
    }
    Ok(Some(map))
}

fn check_tagmap_hash(model: &Model, map: Option<&TagMap>, map_path: Option<&Path>) {
    match (model.tagmap_hash(), map) {
        (Some(expected), Some(map)) => {
            if expected != map.digest() {
                eprintln!(
                    "warning: tag map {} differs from the one the model was trained with",
                    map_path.map(|p| p.display().to_string()).unwrap_or_default()
                );
            }
        }
        (Some(_), None) => {
            eprintln!("warning: model was trained with a tag map but none was supplied");
        }
        _ => {}
    }
}

pub fn run_train(args: &TrainArgs, verbose: u8) -> Result<()> {
    let started = Instant::now();
    let tagmap = load_tagmap(args.tagmap.as_deref())?;

    let mut set = parse_lexicon(open(&args.lexicon)?, tagmap.as_ref())
        .with_context(|| format!("cannot read lexicon {}", args.lexicon.display()))?;
    if let Some(path) = &args.uninflected {
        set.merge_uninflected(open(path)?, tagmap.as_ref())
            .with_context(|| format!("cannot read uninflected list {}", path.display()))?;
    }

    if !set.conflicts().is_empty() {
        eprintln!("warning: {} input lines discarded", set.conflicts().len());
        if verbose > 0 {
            for conflict in set.conflicts().iter().take(10) {
                eprintln!("  line {}: {:?}", conflict.line_number, conflict.line);
            }
        }
    }
    if set.unmapped_tags() > 0 {
        eprintln!("note: {} entries carried tags the tag map does not cover", set.unmapped_tags());
    }
    if set.is_empty() {
        eprintln!("warning: training set is empty; writing an empty model");
    }

    let config = TrainConfig { min_support: args.min_support as usize, ..TrainConfig::default() };
    let outcome = train(&set, &config)?;
    let mut model = outcome.model;
    model.set_tagmap_hash(tagmap.as_ref().map(TagMap::digest));

    let mut sink = create(&args.out)?;
    serialize_model(&model, &mut sink)?;
    sink.flush()?;

    eprintln!(
        "trained on {} entries: {} rules, {} exceptions, {} iterations ({} initial errors) in {:.2?}",
        outcome.stats.entries,
        model.rules().len(),
        model.exceptions().len(),
        outcome.stats.iterations,
        outcome.stats.initial_errors,
        started.elapsed(),
    );
    Ok(())
}

enum Line {
    Blank,
    /// Could not split into token TAB tag; the first field is echoed as its
    /// own lemma.
    Malformed { raw: String, token: String },
    Token { raw: String },
}

fn classify_line(raw: String) -> (Line, Option<(String, String)>) {
    if raw.is_empty() {
        return (Line::Blank, None);
    }
    let mut fields = raw.split('\t');
    let token = fields.next().unwrap_or_default().to_string();
    let tag = fields.next().unwrap_or_default().to_string();
    if token.is_empty() || tag.is_empty() || fields.next().is_some() {
        return (Line::Malformed { raw, token }, None);
    }
    (Line::Token { raw }, Some((token, tag)))
}

pub fn run_lemmatize(args: &LemmatizeArgs, verbose: u8) -> Result<()> {
    let model = load_model(open(&args.model)?)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    let tagmap = load_tagmap(args.tagmap.as_deref())?;
    check_tagmap_hash(&model, tagmap.as_ref(), args.tagmap.as_deref());
    let opts = LemmatizeOptions { case_fallback: args.case_fallback };

    let mut reader: Box<dyn BufRead> = match &args.input {
        Some(path) => Box::new(open(path)?),
        None => Box::new(BufReader::new(std::io::stdin().lock())),
    };
    let mut writer: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };

    let mut lines: Vec<Line> = Vec::with_capacity(CHUNK_LINES);
    let mut queries: Vec<(String, String)> = Vec::with_capacity(CHUNK_LINES);
    let mut line_number = 0usize;
    let mut malformed = 0usize;
    let mut unmapped = 0usize;
    let mut tokens = 0usize;
    let mut buf = String::new();

    loop {
        buf.clear();
        let eof = reader.read_line(&mut buf)? == 0;
        if !eof {
            line_number += 1;
            while buf.ends_with('\n') {
                buf.pop();
            }
            let (line, query) = classify_line(std::mem::take(&mut buf));
            if let Line::Malformed { .. } = line {
                malformed += 1;
                if malformed <= MAX_REPORTED_WARNINGS {
                    eprintln!("warning: line {line_number}: malformed token line, passing through");
                }
            }
            if let Some((token, tag)) = query {
                tokens += 1;
                let mapped = match &tagmap {
                    Some(map) => {
                        let (mapped, hit) = map.map_tag(&tag);
                        if !hit {
                            unmapped += 1;
                        }
                        mapped.to_string()
                    }
                    None => tag,
                };
                queries.push((token, mapped));
            }
            lines.push(line);
        }

        if lines.len() >= CHUNK_LINES || (eof && !lines.is_empty()) {
            let results = model.lemmatize_batch(&queries, opts, crate::par::Threading::default());
            let mut next = results.iter();
            for line in &lines {
                match line {
                    Line::Blank => writer.write_all(b"\n")?,
                    Line::Malformed { raw, token } => {
                        writer.write_all(raw.as_bytes())?;
                        writer.write_all(b"\t")?;
                        writer.write_all(token.as_bytes())?;
                        writer.write_all(b"\n")?;
                    }
                    Line::Token { raw } => {
                        let result = next.next().expect("one result per token line");
                        writer.write_all(raw.as_bytes())?;
                        writer.write_all(b"\t")?;
                        writer.write_all(result.lemma.as_bytes())?;
                        writer.write_all(b"\n")?;
                    }
                }
            }
            lines.clear();
            queries.clear();
        }
        if eof {
            break;
        }
    }
    writer.flush()?;

    if malformed > MAX_REPORTED_WARNINGS {
        eprintln!("warning: {malformed} malformed token lines in total");
    }
    if unmapped > 0 {
        eprintln!("note: {unmapped} tokens carried tags the tag map does not cover");
    }
    if verbose > 0 {
        eprintln!("lemmatized {tokens} tokens");
    }
    Ok(())
}

fn mapped_tag(map: Option<&TagMap>, tag: &str) -> String {
    match map {
        Some(map) => map.map_tag(tag).0.to_string(),
        None => tag.to_string(),
    }
}

fn records_from_model(
    gold: &[GoldToken],
    model: &Model,
    map: Option<&TagMap>,
    use_auto: bool,
) -> Vec<TokenRecord> {
    gold.iter()
        .map(|token| {
            let tag = if use_auto {
                token.auto_tag.as_deref().expect("auto mode requires auto tags")
            } else {
                &token.gold_tag
            };
            let result = model.lemmatize(&token.form, &mapped_tag(map, tag));
            TokenRecord {
                form: token.form.clone(),
                gold_tag: token.gold_tag.clone(),
                auto_tag: if use_auto { token.auto_tag.clone() } else { None },
                gold_lemma: token.gold_lemma.clone(),
                predicted_lemma: result.lemma,
                provenance: Some(result.provenance),
            }
        })
        .collect()
}

/// Reads predictions in lemmatize output format and aligns them with the
/// gold tokens by position and surface form.
fn records_from_predictions(gold: &[GoldToken], path: &Path) -> Result<Vec<TokenRecord>> {
    let mut records = Vec::with_capacity(gold.len());
    let mut gold_iter = gold.iter();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            bail!("{}: line {}: expected token TAB tag TAB lemma", path.display(), i + 1);
        }
        let Some(token) = gold_iter.next() else {
            bail!("{}: more predictions than gold tokens", path.display());
        };
        if fields[0] != token.form {
            bail!(
                "{}: line {}: prediction for {:?} does not match gold token {:?}",
                path.display(),
                i + 1,
                fields[0],
                token.form
            );
        }
        records.push(TokenRecord {
            form: token.form.clone(),
            gold_tag: token.gold_tag.clone(),
            auto_tag: token.auto_tag.clone(),
            gold_lemma: token.gold_lemma.clone(),
            predicted_lemma: fields[2].to_string(),
            provenance: None,
        });
    }
    if gold_iter.next().is_some() {
        bail!("{}: fewer predictions than gold tokens", path.display());
    }
    Ok(records)
}

fn flag_counts(report: &EvalReport) -> (usize, usize, usize) {
    let count = |flag: Flag| {
        report.disagreements.iter().filter(|d| d.flags.contains(&flag)).count()
    };
    (
        count(Flag::TagMismatch),
        count(Flag::CapitalizationDifference),
        count(Flag::IdentityFallback),
    )
}

fn print_report(label: &str, report: &EvalReport) {
    println!(
        "{label:<10} accuracy {:>6}%   errors {:>6}   tokens {}",
        report.accuracy.to_string(),
        report.errors,
        report.total
    );
}

fn dump_report(sink: &mut impl Write, label: &str, report: &EvalReport) -> Result<()> {
    for d in &report.disagreements {
        let flags = if d.flags.is_empty() {
            "-".to_string()
        } else {
            d.flags.iter().map(Flag::to_string).collect::<Vec<_>>().join(",")
        };
        writeln!(
            sink,
            "{label}\t{}\t{}\t{}\t{}\t{}\t{}\t{flags}",
            d.record.form,
            d.record.gold_tag,
            d.record.auto_tag.as_deref().unwrap_or("-"),
            d.record.gold_lemma,
            d.record.predicted_lemma,
            d.record.provenance.map(|p| p.to_string()).unwrap_or_else(|| "-".to_string()),
        )?;
    }
    Ok(())
}

pub fn run_eval(args: &EvalArgs, verbose: u8) -> Result<()> {
    let gold = read_gold(open(&args.gold)?)
        .with_context(|| format!("cannot read gold corpus {}", args.gold.display()))?;
    if gold.is_empty() {
        bail!("gold corpus {} contains no tokens", args.gold.display());
    }
    let tagmap = load_tagmap(args.tagmap.as_deref())?;

    let mut runs: Vec<(&'static str, Vec<TokenRecord>)> = Vec::new();
    if let Some(model_path) = &args.model {
        let model = load_model(open(model_path)?)
            .with_context(|| format!("cannot load model {}", model_path.display()))?;
        check_tagmap_hash(&model, tagmap.as_ref(), args.tagmap.as_deref());

        runs.push(("gold-tags", records_from_model(&gold, &model, tagmap.as_ref(), false)));
        let with_auto = gold.iter().filter(|t| t.auto_tag.is_some()).count();
        if with_auto == gold.len() {
            runs.push(("auto-tags", records_from_model(&gold, &model, tagmap.as_ref(), true)));
        } else if with_auto > 0 {
            let first = gold.iter().position(|t| t.auto_tag.is_none()).unwrap_or(0);
            bail!(
                "gold corpus mixes 3- and 4-column lines (token {} has no auto tag); \
                 auto-tag evaluation needs the 4th column on every line",
                first + 1
            );
        }
    } else if let Some(pred_path) = &args.pred {
        runs.push(("predictions", records_from_predictions(&gold, pred_path)?));
    }

    let mut report_sink = match &args.report {
        Some(path) => {
            let mut sink = create(path)?;
            writeln!(
                sink,
                "# run\tform\tgold_tag\tauto_tag\tgold_lemma\tpredicted_lemma\tprovenance\tflags"
            )?;
            Some(sink)
        }
        None => None,
    };

    for (label, records) in &runs {
        let report = evaluate(records)?;
        print_report(label, &report);
        if verbose > 0 {
            let (tags, caps, identity) = flag_counts(&report);
            println!(
                "{:<10} flags: tag-mismatch {tags}, capitalization-difference {caps}, identity-fallback {identity}",
                ""
            );
        }
        if let Some(sink) = &mut report_sink {
            dump_report(sink, label, &report)?;
        }
    }

    if let Some((_, auto_records)) = runs.iter().find(|(label, _)| *label == "auto-tags") {
        println!("tagger agreement with gold tags: {}%", tag_accuracy(auto_records)?);
    }
    if let Some(mut sink) = report_sink {
        sink.flush()?;
    }
    Ok(())
}

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fkqc::fibword::{one_sided_word, two_sided_window, Letter, Word};
use fkqc::GoldenNumber;
use serde::Serialize;

use crate::failure::Failure;
use crate::output::json_bytes;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WordFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct WordArgs {
    /// Level i of the finite word u^(i).
    #[arg(long, conflicts_with = "two_sided", required_unless_present = "two_sided")]
    level: Option<u32>,
    /// Window of the two-sided word instead; a bar marks the reference point.
    #[arg(long, requires_all = ["from", "to"])]
    two_sided: bool,
    #[arg(long, allow_negative_numbers = true)]
    from: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<i64>,
    #[arg(long, value_enum, default_value_t = WordFormat::Text)]
    format: WordFormat,
}

#[derive(Serialize)]
struct WordReport {
    word: String,
    /// Index of the letter right after the bar, if the bar is inside.
    reference_index: Option<usize>,
    letters: usize,
    count_a: usize,
    count_b: usize,
    length: GoldenNumber,
}

fn cache_path(args: &WordArgs) -> Option<PathBuf> {
    let dir = std::env::var_os("FKQC_CACHE_DIR")?;
    let key = match args.level {
        Some(l) => format!("word-level-{l}.txt"),
        None => format!("word-window-{}-{}.txt", args.from?, args.to?),
    };
    Some(PathBuf::from(dir).join(key))
}

fn build(args: &WordArgs) -> Result<Word, Failure> {
    Ok(match args.level {
        Some(l) => one_sided_word(l)?,
        None => {
            let (from, to) = (args.from.unwrap_or(0), args.to.unwrap_or(0));
            two_sided_window(from, to)?
        }
    })
}

/// The word, read back from the cache when one is configured.
fn load(args: &WordArgs) -> Result<Word, Failure> {
    let cache = cache_path(args);
    if let Some(text) = cache.as_ref().and_then(|p| std::fs::read_to_string(p).ok()) {
        if let Ok(w) = text.trim_end().parse::<Word>() {
            return Ok(w);
        }
    }
    let w = build(args)?;
    if let Some(p) = cache {
        // a failed cache write only costs the next run a recomputation
        if let Some(d) = p.parent() {
            let _ = std::fs::create_dir_all(d);
        }
        let _ = std::fs::write(&p, format!("{w}\n"));
    }
    Ok(w)
}

pub fn run(args: &WordArgs) -> Result<(), Failure> {
    let w = load(args)?;
    let text = w.to_string();
    match args.format {
        WordFormat::Text => println!("{text}"),
        WordFormat::Json => {
            let report = WordReport {
                word: text,
                reference_index: w.ref_index,
                letters: w.len(),
                count_a: w.count(Letter::A),
                count_b: w.count(Letter::B),
                length: w.length(),
            };
            let bytes = json_bytes(&report)?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    Ok(())
}

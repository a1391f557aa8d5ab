//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for usage errors (unknown scheme or
//! parameter, missing inputs), 3 for structural constraint violations such
//! as `N > k`, 1 for anything else (including `verify` finding duplicates).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{avg_id_length, overlap_cooccurrence_correlation};
use crate::corpus::{
    build_cooccurrence_graph, leave_one_out_split, load_interactions, load_metadata, Corpus, UserOrdering,
};
use crate::indexing::{
    compose_hid, index_cid, index_iid, index_rid, index_semid, index_sid, index_tid, HidOrder, HidVariant,
    IndexAssignment, Scheme, TreeMode,
};
use crate::seed;
use crate::tokenization::{load_unigram_model, SegmenterModel, TokenKind, TokenRegistry};
use crate::trie::{build_trie, verify_assignment, NextToken};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;

const CORPUS_FILE: &str = "corpus.json";
const SPLIT_FILE: &str = "split.json";

#[derive(Parser, Debug)]
#[command(name = "itemid", version, about = "Build, inspect and verify item IDs for generative recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load interactions (and metadata) into a corpus archive.
    Ingest {
        #[arg(long)]
        interactions: PathBuf,
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the leave-one-out split of a corpus archive.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to the corpus directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign IDs under one scheme and write the ID map.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// Comma-separated KEY=VAL pairs; keys may be bare (`N`) or
        /// qualified (`cid.N`). May be repeated.
        #[arg(long)]
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Unigram piece table (`piece<TAB>score`), needed by rid, tid and sid.
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print metrics of an ID map as JSON.
    Stats {
        #[arg(long)]
        map: PathBuf,
        /// Correlate shared prefixes with co-occurrence (needs --corpus).
        #[arg(long)]
        graph: bool,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Cluster tree JSON; defaults to `<map>.tree.json` when present.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Check an ID map for duplicate IDs and prefix conflicts.
    Verify {
        #[arg(long)]
        map: PathBuf,
    },
    /// List the tokens allowed after a prefix.
    Trie {
        #[arg(long)]
        map: PathBuf,
        /// Space-separated rendered tokens; empty for the root.
        #[arg(long, default_value = "")]
        prefix: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Rid,
    Tid,
    Iid,
    Sid,
    Cid,
    Semid,
    Hid,
}

/// Scheme parameters after defaults.
#[derive(Clone, Debug, PartialEq)]
struct Settings {
    ordering: UserOrdering,
    branching: usize,
    k: usize,
    mode: TreeMode,
    variant: Option<HidVariant>,
    order: HidOrder,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            ordering: UserOrdering::TimeSensitive,
            branching: 10,
            k: 500,
            mode: TreeMode::Tree,
            variant: None,
            order: HidOrder::SemIdFirst,
        }
    }
}

fn parse_params(raw: &[String], seed: u64) -> Result<Settings> {
    let mut s = Settings::default();
    for pair in raw.iter().flat_map(|r| r.split(',')).filter(|p| !p.trim().is_empty()) {
        let (key, val) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("parameter {pair:?} is not KEY=VAL")))?;
        let (key, val) = (key.trim(), val.trim());
        let bare = key.rsplit('.').next().unwrap_or(key);
        let scope = key.strip_suffix(bare).map(|p| p.trim_end_matches('.')).unwrap_or("");
        let expected = match bare {
            "ordering" => "sid",
            "N" | "k" => "cid",
            "mode" => "semid",
            "variant" | "order" => "hid",
            _ => return Err(Error::InvalidArgument(format!("unknown parameter {key:?}"))),
        };
        if !scope.is_empty() && scope != expected {
            return Err(Error::InvalidArgument(format!("unknown parameter {key:?}")));
        }
        let bad = |what: &str| Error::InvalidArgument(format!("{key}: {what} {val:?}"));
        match bare {
            "ordering" => {
                s.ordering = match val.parse()? {
                    UserOrdering::Random(_) => UserOrdering::Random(seed::derive(seed, "sid.ro")),
                    o => o,
                }
            }
            "N" => s.branching = val.parse().map_err(|_| bad("expected an integer, got"))?,
            "k" => s.k = val.parse().map_err(|_| bad("expected an integer, got"))?,
            "mode" => s.mode = val.parse()?,
            "variant" => s.variant = Some(val.parse()?),
            "order" => {
                s.order = match val.to_ascii_lowercase().as_str() {
                    "semid-first" => HidOrder::SemIdFirst,
                    "cid-first" => HidOrder::CidFirst,
                    _ => return Err(bad("expected semid-first or cid-first, got")),
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(s)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_corpus(dir: &Path) -> Result<Corpus> {
    read_json(&dir.join(CORPUS_FILE))
}

fn require_model(tokenizer: &Option<PathBuf>, scheme: &str) -> Result<SegmenterModel> {
    match tokenizer {
        Some(p) => load_unigram_model(p),
        None => Err(Error::InvalidArgument(format!("scheme {scheme} needs --tokenizer"))),
    }
}

fn build_assignment(
    corpus: &Corpus,
    scheme: SchemeArg,
    settings: &Settings,
    seed: u64,
    tokenizer: &Option<PathBuf>,
) -> Result<IndexAssignment> {
    let model = match (scheme, settings.variant) {
        (SchemeArg::Rid | SchemeArg::Tid | SchemeArg::Sid, _) | (SchemeArg::Hid, Some(HidVariant::SidIid)) => {
            Some(require_model(tokenizer, &format!("{scheme:?}").to_lowercase())?)
        }
        _ => None,
    };
    let mut registry = model.as_ref().map(TokenRegistry::from_model).unwrap_or_default();
    let items = corpus.items();

    let cid = |registry: &mut TokenRegistry| {
        let graph = build_cooccurrence_graph(&leave_one_out_split(corpus));
        index_cid(&graph, settings.branching, settings.k, seed::derive(seed, "cid"), registry)
    };
    let semid = |registry: &mut TokenRegistry| index_semid(items, corpus.metadata(), settings.mode, registry);

    let mut a = match scheme {
        SchemeArg::Rid => index_rid(items, seed::derive(seed, "rid"), model.as_ref().expect("model"))?,
        SchemeArg::Tid => index_tid(items, corpus.metadata(), model.as_ref().expect("model"))?,
        SchemeArg::Iid => index_iid(items, &mut registry)?,
        SchemeArg::Sid => index_sid(corpus, settings.ordering, model.as_ref().expect("model"))?,
        SchemeArg::Cid => cid(&mut registry)?,
        SchemeArg::Semid => semid(&mut registry)?,
        SchemeArg::Hid => {
            let variant = settings
                .variant
                .ok_or_else(|| Error::InvalidArgument("scheme hid needs hid.variant".into()))?;
            match variant {
                HidVariant::SidIid => {
                    let sid = index_sid(corpus, settings.ordering, model.as_ref().expect("model"))?;
                    compose_hid(variant, &sid, &index_iid(items, &mut registry)?)?
                }
                HidVariant::CidIid => {
                    let c = cid(&mut registry)?;
                    compose_hid(variant, &c, &index_iid(items, &mut registry)?)?
                }
                HidVariant::SemIdIid => {
                    let s = semid(&mut registry)?;
                    compose_hid(variant, &s, &index_iid(items, &mut registry)?)?
                }
                HidVariant::SemIdCid(_) => {
                    let s = semid(&mut registry)?;
                    let c = cid(&mut registry)?;
                    compose_hid(HidVariant::SemIdCid(settings.order), &s, &c)?
                }
            }
        }
    };
    a.params.seed = Some(seed);
    Ok(a)
}

fn run_index(
    corpus: &Path,
    scheme: SchemeArg,
    params: &[String],
    seed: u64,
    tokenizer: &Option<PathBuf>,
    out: &Path,
) -> Result<()> {
    let settings = parse_params(params, seed)?;
    let corpus = load_corpus(corpus)?;
    let a = build_assignment(&corpus, scheme, &settings, seed, tokenizer)?;
    a.write_tsv(out)?;
    a.write_vocab(sibling(out, ".vocab"))?;
    let meta = json!({
        "scheme": a.scheme.to_string(),
        "params": a.params,
        "cold_items": a.cold,
    });
    write_text(&sibling(out, ".params.json"), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    if let Some(tree) = &a.tree {
        let text = serde_json::to_string_pretty(&tree.to_json(&a.items))? + "\n";
        write_text(&sibling(out, ".tree.json"), &text)?;
    }
    log::info!("indexed {} items under {}", a.len(), a.scheme);
    Ok(())
}

fn read_map(path: &Path, registry: &mut TokenRegistry) -> Result<IndexAssignment> {
    let params = sibling(path, ".params.json");
    let scheme = if params.exists() {
        let v: Value = read_json(&params)?;
        v.get("scheme").and_then(Value::as_str).and_then(parse_scheme_name)
    } else {
        None
    };
    if scheme.is_none() {
        log::warn!("{}: scheme unknown (no readable parameter file)", path.display());
    }
    IndexAssignment::read_tsv(path, scheme.unwrap_or(Scheme::Iid), registry)
}

fn parse_scheme_name(name: &str) -> Option<Scheme> {
    Some(match name {
        "rid" => Scheme::Rid,
        "tid" => Scheme::Tid,
        "iid" => Scheme::Iid,
        "sid" => Scheme::Sid,
        "cid" => Scheme::Cid,
        "semid" => Scheme::SemId,
        other => Scheme::Hid(other.strip_prefix("hid:")?.parse().ok()?),
    })
}

/// Sizes of the `items` arrays in a tree JSON document.
fn histogram_from_json(v: &Value, h: &mut std::collections::BTreeMap<usize, usize>) {
    if let Some(items) = v.get("items").and_then(Value::as_array) {
        if !items.is_empty() {
            *h.entry(items.len()).or_insert(0) += 1;
        }
    }
    for c in v.get("children").and_then(Value::as_array).into_iter().flatten() {
        histogram_from_json(c, h);
    }
}

fn run_stats(map: &Path, graph: bool, corpus: &Option<PathBuf>, tree: &Option<PathBuf>) -> Result<Value> {
    let mut registry = TokenRegistry::new();
    let a = read_map(map, &mut registry)?;
    let scheme = sibling(map, ".params.json")
        .exists()
        .then(|| a.scheme.to_string());

    let correlation = if graph {
        let dir = corpus
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--graph needs --corpus".into()))?;
        let g = build_cooccurrence_graph(&leave_one_out_split(&load_corpus(dir)?));
        match overlap_cooccurrence_correlation(&a, &g) {
            Ok(c) => Some(c),
            Err(e @ Error::InsufficientPairs { .. }) => {
                log::warn!("{e}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let tree_path = tree.clone().or_else(|| Some(sibling(map, ".tree.json")).filter(|p| p.exists()));
    let histogram = match tree_path {
        Some(p) => {
            let mut h = std::collections::BTreeMap::new();
            histogram_from_json(&read_json(&p)?, &mut h);
            Some(h)
        }
        None => None,
    };

    Ok(json!({
        "scheme": scheme,
        "items": a.len(),
        "avg_len": if a.is_empty() { None } else { Some(avg_id_length(&a)?) },
        "rho": correlation.map(|c| c.rho),
        "degenerate": correlation.map(|c| c.degenerate),
        "pairs": correlation.map(|c| c.pairs),
        "histogram": histogram,
    }))
}

fn run_trie(map: &Path, prefix: &str) -> Result<Vec<String>> {
    let mut registry = TokenRegistry::new();
    let a = read_map(map, &mut registry)?;
    let trie = build_trie(&a)?;
    let prefix = prefix
        .split_whitespace()
        .map(|t| TokenKind::parse_rendered(t).and_then(|k| registry.intern(&k)).map(|t| t.id))
        .collect::<Result<Vec<_>>>()?;
    Ok(trie
        .allowed_next(&prefix)
        .into_iter()
        .map(|n| match n {
            NextToken::Token(id) => registry.get(id).map(|t| t.render()).unwrap_or_default(),
            NextToken::End => "[END]".to_string(),
        })
        .collect())
}

/// Print a line, treating a closed pipe (e.g. `| head`) as success.
fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Constraint(_) => EXIT_CONSTRAINT,
        _ => EXIT_FAILURE,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Ingest { interactions, meta, out } => {
            let mut corpus = load_interactions(&interactions)?;
            if let Some(m) = meta {
                corpus = corpus.with_metadata(load_metadata(&m)?);
            }
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_text(&out.join(CORPUS_FILE), &serde_json::to_string(&corpus)?)?;
            let counts = json!({
                "users": corpus.num_users(),
                "items": corpus.num_items(),
                "interactions": corpus.num_interactions(),
            });
            emit(&counts.to_string())?;
        }
        Command::Split { corpus, out } => {
            let split = leave_one_out_split(&load_corpus(&corpus)?);
            let out = out.unwrap_or(corpus);
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_text(&out.join(SPLIT_FILE), &serde_json::to_string(&split)?)?;
        }
        Command::Index {
            corpus,
            scheme,
            params,
            seed,
            tokenizer,
            out,
        } => run_index(&corpus, scheme, &params, seed, &tokenizer, &out)?,
        Command::Stats {
            map,
            graph,
            corpus,
            tree,
        } => emit(&serde_json::to_string_pretty(&run_stats(&map, graph, &corpus, &tree)?)?)?,
        Command::Verify { map } => {
            let mut registry = TokenRegistry::new();
            let report = verify_assignment(&read_map(&map, &mut registry)?);
            emit(&serde_json::to_string_pretty(&report)?)?;
            if !report.unique {
                return Ok(EXIT_FAILURE);
            }
        }
        Command::Trie { map, prefix } => {
            for line in run_trie(&map, &prefix)? {
                emit(&line)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

//! Command-line surface for the circular-arc model machinery.
//!
//! Input models are JSON documents `{"n": 4, "word": ["v0^0", "v1^0", ...]}`
//! read from a file or from standard input (`-`); the circular word lists the
//! arc endpoints clockwise, `v<id>^0` entering and `v<id>^1` leaving the arc.
//!
//! Exit codes: 2 parse failure, 3 normalization failure, 4 size-cap overflow.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use carc::canon::{canonize, CanonOptions};
use carc::enumerate::{enumerate_conformal, EnumError, DEFAULT_CAP};
use carc::graphs::Graph;
use carc::models::{arcs_to_chords, check_normalized, graph_of_word, normalize, ArcModel};
use carc::oracle::{brute_conformal_models, brute_iso, brute_modules, strong_modules_of, Corpus};
use carc::pqsm::{build_pqsm, ca_modules_definitional, compute_ca_modules, to_dot};
use carc::words::{CircularWord, Letter};

#[derive(Parser)]
#[command(name = "carc", about = "Circular-arc graph models: normalization, enumeration, canonization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize the model and print it as a model document.
    Normalize { input: PathBuf },
    /// Print the overlap graph as an edge list.
    Overlap { input: PathBuf },
    /// Print the PQSM-tree (DOT by default).
    Tree {
        input: PathBuf,
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
    /// Stream every conformal model, one circular word per line.
    Enumerate {
        input: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print the canonical form as space-separated naturals.
    Canon { input: PathBuf },
    /// Exit 0 iff the two models' graphs are isomorphic.
    Iso { a: PathBuf, b: PathBuf },
    /// Run the oracle suite on all graphs up to the given size.
    Selftest { n: usize },
}

/// JSON input document: vertex count, circular endpoint word, and an
/// optional adjacency override that must match the arc intersections.
#[derive(Serialize, Deserialize)]
struct ModelDocument {
    n: usize,
    word: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adjacency: Option<Vec<(usize, usize)>>,
}

enum CliError {
    Parse(String),
    Normalize(String),
    Cap(String),
}

impl CliError {
    fn report(&self) -> ExitCode {
        match self {
            CliError::Parse(m) => {
                eprintln!("parse error: {m}");
                ExitCode::from(2)
            }
            CliError::Normalize(m) => {
                eprintln!("normalization error: {m}");
                ExitCode::from(3)
            }
            CliError::Cap(m) => {
                eprintln!("size cap exceeded: {m}");
                ExitCode::from(4)
            }
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{path:?}: {e}")))
    }
}

fn parse_model(text: &str) -> Result<(Graph, ArcModel), CliError> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let letters: Result<Vec<Letter>, String> = doc.word.iter().map(|t| t.parse()).collect();
    let letters = letters.map_err(CliError::Parse)?;
    let set: BTreeSet<Letter> = letters.iter().copied().collect();
    if set.len() != letters.len() {
        return Err(CliError::Parse("word repeats a letter".into()));
    }
    let word = CircularWord::new(letters);
    let graph = graph_of_word(&word, doc.n).map_err(|e| CliError::Parse(e.to_string()))?;
    if let Some(edges) = &doc.adjacency {
        let declared = Graph::from_edges(doc.n, edges);
        if declared.edges() != graph.edges() {
            return Err(CliError::Parse(
                "adjacency override does not match the arc intersections".into(),
            ));
        }
    }
    let model = ArcModel { word, graph: graph.clone() };
    Ok((graph, model))
}

fn document_of(model: &ArcModel) -> ModelDocument {
    ModelDocument {
        n: model.graph.n(),
        word: model.word.letters().iter().map(|l| l.to_string()).collect(),
        adjacency: None,
    }
}

fn word_line(w: &CircularWord) -> String {
    w.letters().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
}

fn enum_cap() -> usize {
    std::env::var("CARC_ENUM_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

fn normalized_pipeline(input: &PathBuf) -> Result<(Graph, ArcModel), CliError> {
    let (g, m) = parse_model(&read_input(input)?)?;
    let norm = normalize(&g, &m).map_err(|e| CliError::Normalize(e.to_string()))?;
    Ok((g, norm))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Normalize { input } => {
            let (_, norm) = normalized_pipeline(&input)?;
            println!("{}", serde_json::to_string(&document_of(&norm)).unwrap());
        }
        Command::Overlap { input } => {
            let (_, norm) = normalized_pipeline(&input)?;
            let chords = arcs_to_chords(&norm).map_err(|e| CliError::Normalize(e.to_string()))?;
            for (u, v) in chords.graph.edges() {
                println!("{u} {v}");
            }
        }
        Command::Tree { input, dot, json } => {
            let (g, norm) = normalized_pipeline(&input)?;
            let tree = build_pqsm(&g, &norm).map_err(|e| CliError::Normalize(e.to_string()))?;
            if json && !dot {
                println!("{}", tree_json(&tree));
            } else {
                print!("{}", to_dot(&tree));
            }
        }
        Command::Enumerate { input, limit } => {
            let (g, norm) = normalized_pipeline(&input)?;
            let tree = build_pqsm(&g, &norm).map_err(|e| CliError::Normalize(e.to_string()))?;
            let models = enumerate_conformal(&tree, enum_cap())
                .map_err(|e: EnumError| CliError::Cap(e.to_string()))?;
            for w in models.iter().take(limit.unwrap_or(usize::MAX)) {
                println!("{}", word_line(w));
            }
        }
        Command::Canon { input } => {
            let (g, m) = parse_model(&read_input(&input)?)?;
            let canon = canonize(&g, &m, &CanonOptions::default())
                .map_err(|e| CliError::Normalize(e.to_string()))?;
            let line: Vec<String> = canon.iter().map(|x| x.to_string()).collect();
            println!("{}", line.join(" "));
        }
        Command::Iso { a, b } => {
            let (ga, ma) = parse_model(&read_input(&a)?)?;
            let (gb, mb) = parse_model(&read_input(&b)?)?;
            let opts = CanonOptions::default();
            let ca = canonize(&ga, &ma, &opts).map_err(|e| CliError::Normalize(e.to_string()))?;
            let cb = canonize(&gb, &mb, &opts).map_err(|e| CliError::Normalize(e.to_string()))?;
            if ca == cb {
                println!("isomorphic");
            } else {
                println!("not isomorphic");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Selftest { n } => {
            return selftest(n);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn tree_json(tree: &carc::pqsm::PqsmTree) -> String {
    let cas: Vec<serde_json::Value> = tree
        .cas
        .iter()
        .map(|ca| {
            serde_json::json!({
                "vertices": ca.vertices.to_vec(),
                "representant": ca.representant,
                "component": ca.component,
                "slot0": ca.metachord.s0.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "slot1": ca.metachord.s1.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "lt": ca.metachord.lt.pairs().iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({
        "root": format!("{:?}", tree.pqs.root),
        "components": tree.pqs.components.iter().map(|c| c.to_vec()).collect::<Vec<_>>(),
        "pnodes": tree.pqs.pnodes,
        "qorders": tree.pqs.qorders.iter().map(word_line).collect::<Vec<_>>(),
        "ca_modules": cas,
    })
    .to_string()
}

fn selftest(n: usize) -> Result<ExitCode, CliError> {
    if n > 5 {
        return Err(CliError::Cap(format!(
            "selftest enumerates all models exhaustively; n={n} exceeds the supported 5"
        )));
    }
    let corpus = Corpus::build(n).map_err(|e| CliError::Cap(e.to_string()))?;
    println!("corpus: {} graphs up to n={n}", corpus.entries.len());
    let mut checks = 0;
    for (g, m) in &corpus.entries {
        let norm = normalize(g, m).map_err(|e| CliError::Normalize(e.to_string()))?;
        assert!(check_normalized(g, &norm).is_empty());
        let tree = build_pqsm(g, &norm).map_err(|e| CliError::Normalize(e.to_string()))?;
        let ours = enumerate_conformal(&tree, enum_cap())
            .map_err(|e| CliError::Cap(e.to_string()))?;
        let brute = brute_conformal_models(g).map_err(|e| CliError::Cap(e.to_string()))?;
        let ok = ours == brute;
        println!(
            "[{}] n={} edges={:?}: {} models",
            if ok { "PASS" } else { "FAIL" },
            g.n(),
            g.edges(),
            ours.len()
        );
        if !ok {
            return Ok(ExitCode::from(1));
        }
        let phi = arcs_to_chords(&norm).map_err(|e| CliError::Normalize(e.to_string()))?;
        let md = carc::moddecomp::modular_decomposition(&phi.graph);
        if compute_ca_modules(&phi.graph, &md, &phi) != ca_modules_definitional(&phi.graph, &phi) {
            println!("[FAIL] CA-module rule (R) disagreement on {:?}", g.edges());
            return Ok(ExitCode::from(1));
        }
        if g.n() <= 7 {
            let mods = brute_modules(&phi.graph).map_err(|e| CliError::Cap(e.to_string()))?;
            let strong: BTreeSet<Vec<usize>> =
                strong_modules_of(&mods).iter().map(|s| s.to_vec()).collect();
            let tree_mods: BTreeSet<Vec<usize>> =
                md.strong_modules().iter().map(|s| s.to_vec()).collect();
            if strong != tree_mods {
                println!("[FAIL] strong modules disagree on {:?}", g.edges());
                return Ok(ExitCode::from(1));
            }
        }
        checks += 1;
    }
    // Canonical forms must separate the (pairwise non-isomorphic) corpus.
    let opts = CanonOptions::default();
    let canons: Vec<Vec<u64>> = corpus
        .entries
        .iter()
        .map(|(g, m)| canonize(g, m, &opts).map_err(|e| CliError::Normalize(e.to_string())))
        .collect::<Result<_, _>>()?;
    for i in 0..canons.len() {
        for j in i + 1..canons.len() {
            let iso = brute_iso(&corpus.entries[i].0, &corpus.entries[j].0)
                .map_err(|e| CliError::Cap(e.to_string()))?;
            if iso || canons[i] == canons[j] {
                println!("[FAIL] canonical form collision in the corpus");
                return Ok(ExitCode::from(1));
            }
        }
    }
    println!("[PASS] canonical forms separate all {} corpus graphs", canons.len());
    println!("selftest: {checks} graphs checked, all passing");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}

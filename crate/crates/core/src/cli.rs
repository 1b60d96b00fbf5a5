//! Problem files and the `foata` command runner.
//!
//! A problem file is line oriented:
//!
//! ```text
//! # comment
//! letters: a b c
//! edges: a-b b-c
//! map: a -> a b
//! map: b -> b
//! map: c -> c b
//! ```
//!
//! `edges:` lists independent pairs and may repeat. `map:` lines define an
//! endomorphism; once one is present every letter needs exactly one. An
//! empty right-hand side maps the letter to the identity. See
//! `docs/FORMAT.md` for the output grammar.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::alphabet::IndependenceAlphabet;
use crate::boundary::boundary_fix_description;
use crate::endo::{Continuity, Endomorphism};
use crate::error::{Error, Result};
use crate::fixpoints::{fix_generators, fix_oracle, per_generators, per_oracle, Exponent, ExponentRule};
use crate::trace::Trace;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for malformed input: syntax, unknown letters, ill-defined maps, I/O.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for well-formed input outside an operation's domain.
pub const EXIT_PRECONDITION: i32 = 3;

/// A parsed problem file.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alphabet: Arc<IndependenceAlphabet>,
    pub endomorphism: Option<Endomorphism>,
}

impl ProblemSpec {
    fn endomorphism(&self) -> Result<&Endomorphism> {
        self.endomorphism
            .as_ref()
            .ok_or_else(|| Error::PreconditionViolated("the problem file has no map lines".into()))
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses a problem file.
pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    let mut letters: Option<(usize, Vec<String>)> = None;
    let mut edges: Vec<(usize, String, String)> = Vec::new();
    let mut maps: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut map_order: Vec<String> = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content
            .split_once(':')
            .ok_or_else(|| parse_error(line, "expected `letters:`, `edges:` or `map:`"))?;
        match key.trim() {
            "letters" => {
                if letters.is_some() {
                    return Err(parse_error(line, "second `letters:` line"));
                }
                letters = Some((line, rest.split_whitespace().map(str::to_string).collect()));
            }
            "edges" => {
                for token in rest.split_whitespace() {
                    let (a, b) = token
                        .split_once('-')
                        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
                        .ok_or_else(|| parse_error(line, format!("malformed edge `{token}`")))?;
                    if a == b {
                        return Err(parse_error(line, format!("reflexive edge `{token}`")));
                    }
                    edges.push((line, a.to_string(), b.to_string()));
                }
            }
            "map" => {
                let (lhs, rhs) = rest
                    .split_once("->")
                    .ok_or_else(|| parse_error(line, "expected `map: letter -> word`"))?;
                let name = lhs.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(parse_error(line, format!("malformed map source `{name}`")));
                }
                if maps.insert(name.to_string(), (line, rhs.trim().to_string())).is_some() {
                    return Err(Error::DuplicateMap(name.to_string()));
                }
                map_order.push(name.to_string());
            }
            other => return Err(parse_error(line, format!("unknown key `{other}`"))),
        }
    }

    let (letters_line, names) = letters.ok_or_else(|| parse_error(text.lines().count().max(1), "missing `letters:` line"))?;
    if names.is_empty() {
        return Err(parse_error(letters_line, "no letters"));
    }
    if let Some(bad) = names.iter().find(|n| n.contains('-') || n.contains("->") || n.contains(':')) {
        return Err(parse_error(letters_line, format!("letter `{bad}` contains a reserved character")));
    }
    for (line, a, b) in &edges {
        for name in [a, b] {
            if !names.contains(name) {
                return Err(parse_error(*line, format!("unknown letter `{name}`")));
            }
        }
    }
    let pairs: Vec<(&str, &str)> = edges.iter().map(|(_, a, b)| (a.as_str(), b.as_str())).collect();
    let alphabet = Arc::new(IndependenceAlphabet::new(&names, &pairs).map_err(|e| parse_error(letters_line, e.to_string()))?);

    if maps.is_empty() {
        return Ok(ProblemSpec { alphabet, endomorphism: None });
    }
    for name in &map_order {
        if alphabet.letter(name).is_err() {
            return Err(parse_error(maps[name].0, format!("unknown letter `{name}`")));
        }
    }
    let mut images = Vec::with_capacity(alphabet.len());
    for name in alphabet.names() {
        let (line, word) = maps.get(name).ok_or_else(|| Error::MissingMap(name.clone()))?;
        let word = alphabet.parse_word(word).map_err(|e| parse_error(*line, e.to_string()))?;
        images.push(Trace::from_word(&alphabet, &word)?);
    }
    let endomorphism = Endomorphism::new(&alphabet, images)?;
    Ok(ProblemSpec {
        alphabet,
        endomorphism: Some(endomorphism),
    })
}

/// Command line of the `foata` binary.
#[derive(Debug, Parser)]
#[command(name = "foata", version, about = "Trace monoid computations on problem files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the problem file.
    Check { file: PathBuf },
    /// Print the Foata normal form of a word.
    Fnf { file: PathBuf, word: String },
    /// Decide equality of two words as traces.
    Eq { file: PathBuf, left: String, right: String },
    /// Print the FNF distance of two words.
    Dist { file: PathBuf, left: String, right: String },
    /// Decide uniform continuity of the endomorphism.
    Uc { file: PathBuf },
    /// Print generators of the fixed-point submonoid.
    Fix { file: PathBuf },
    /// Print the exponent and generators of the periodic-point submonoid.
    Per {
        file: PathBuf,
        /// Use lcm(1..|A|) instead of |A|! as the exponent.
        #[arg(long)]
        lcm: bool,
    },
    /// Print graph classifications of the alphabet.
    Graph { file: PathBuf },
    /// Print an mp-rational description of the infinite fixed points.
    Boundary { file: PathBuf },
    /// Print a brute-force fixed or periodic point set.
    Oracle {
        kind: OracleKind,
        file: PathBuf,
        #[arg(long)]
        max_len: usize,
        /// Largest exponent tried for periodic points; defaults to |A|!.
        #[arg(long)]
        max_exp: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Fix,
    Per,
}

impl Command {
    fn file(&self) -> &PathBuf {
        match self {
            Command::Check { file }
            | Command::Fnf { file, .. }
            | Command::Eq { file, .. }
            | Command::Dist { file, .. }
            | Command::Uc { file }
            | Command::Fix { file }
            | Command::Per { file, .. }
            | Command::Graph { file }
            | Command::Boundary { file }
            | Command::Oracle { file, .. } => file,
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Parse { .. }
        | Error::DuplicateMap(_)
        | Error::MissingMap(_)
        | Error::NotWellDefined(..)
        | Error::UnknownLetter(_)
        | Error::DuplicateLetter(_)
        | Error::ReflexivePair(_)
        | Error::TooManyLetters { .. } => EXIT_INPUT,
        _ => EXIT_PRECONDITION,
    }
}

fn word(problem: &ProblemSpec, text: &str) -> Result<Trace> {
    Trace::from_word(&problem.alphabet, &problem.alphabet.parse_word(text)?)
}

fn lines<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|t| t.to_string() + "\n").collect()
}

/// Runs a command on a parsed problem file and returns its standard output.
pub fn run(command: &Command, problem: &ProblemSpec) -> Result<String> {
    let alphabet = &problem.alphabet;
    Ok(match command {
        Command::Check { .. } => {
            let maps = if problem.endomorphism.is_some() { "well-defined endomorphism" } else { "no endomorphism" };
            format!(
                "ok: {} letters, {} independent pairs, {maps}\n",
                alphabet.len(),
                alphabet.independent_pairs().count()
            )
        }
        Command::Fnf { word: w, .. } => format!("{}\n", word(problem, w)?),
        Command::Eq { left, right, .. } => format!("{}\n", word(problem, left)? == word(problem, right)?),
        Command::Dist { left, right, .. } => format!("{}\n", word(problem, left)?.fnf_distance(&word(problem, right)?)?),
        Command::Uc { .. } => match problem.endomorphism()?.continuity() {
            Continuity::Uniform => "uniformly-continuous\n".to_string(),
            Continuity::Witness { a, b, c } => {
                format!("witness {} {} {}\n", alphabet.name(a), alphabet.name(b), alphabet.name(c))
            }
        },
        Command::Fix { .. } => lines(&fix_generators(problem.endomorphism()?).generators),
        Command::Per { lcm, .. } => {
            let rule = if *lcm { ExponentRule::Lcm } else { ExponentRule::Factorial };
            let set = per_generators(problem.endomorphism()?, rule)?;
            let exponent = set.exponent.unwrap_or_else(|| Exponent::new(rule, alphabet.len()));
            format!("exponent {exponent}\n{}", lines(&set.generators))
        }
        Command::Graph { .. } => {
            let components: Vec<String> = alphabet.connected_components().into_iter().map(|c| alphabet.format_set(c)).collect();
            format!(
                "clique-union: {}\ntype-T: {}\ncomponents: {}\n",
                alphabet.is_clique_union(),
                alphabet.is_type_t(),
                components.join(" ")
            )
        }
        Command::Boundary { .. } => format!("{}\n", boundary_fix_description(problem.endomorphism()?)?),
        Command::Oracle { kind, max_len, max_exp, .. } => {
            let phi = problem.endomorphism()?;
            match kind {
                OracleKind::Fix => lines(fix_oracle(phi, *max_len)),
                OracleKind::Per => {
                    let exp = match max_exp {
                        Some(e) => *e,
                        None => Exponent::new(ExponentRule::Factorial, alphabet.len())
                            .value()
                            .and_then(|v| u64::try_from(v).ok())
                            .ok_or_else(|| Error::PreconditionViolated("|A|! exceeds 64 bits; pass --max-exp".into()))?,
                    };
                    lines(per_oracle(phi, *max_len, exp))
                }
            }
        }
    })
}

/// What the binary prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Reads the problem file named by `cli` and runs its command.
pub fn execute(cli: &Cli) -> Outcome {
    let path = cli.command.file();
    let failure = |code, message: String| Outcome {
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
        code,
    };
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => return failure(EXIT_INPUT, format!("{}: {e}", path.display())),
    };
    match parse_spec(&text).and_then(|problem| run(&cli.command, &problem)) {
        Ok(stdout) => Outcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        },
        Err(e) => failure(exit_code(&e), e.to_string()),
    }
}

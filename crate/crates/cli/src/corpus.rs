//! The shipped instances, embedded at build time.

use std::path::Path;

use svfix::Verdict;

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::run::{execute, Command, RunError};

pub const CORPUS: [(&str, &str); 11] = [
    ("example31", include_str!("../corpus/example31.cfg")),
    (
        "example31-literal",
        include_str!("../corpus/example31-literal.cfg"),
    ),
    ("diagonal", include_str!("../corpus/diagonal.cfg")),
    ("constant-box", include_str!("../corpus/constant-box.cfg")),
    ("constant-ball", include_str!("../corpus/constant-ball.cfg")),
    (
        "stackelberg-box",
        include_str!("../corpus/stackelberg-box.cfg"),
    ),
    (
        "stackelberg-identity",
        include_str!("../corpus/stackelberg-identity.cfg"),
    ),
    ("qep-linear", include_str!("../corpus/qep-linear.cfg")),
    ("qep-rotund", include_str!("../corpus/qep-rotund.cfg")),
    ("m1-fail", include_str!("../corpus/m1-fail.cfg")),
    ("qep-pair", include_str!("../corpus/qep-pair.cfg")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    CORPUS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn config(name: &str) -> Option<Result<RunConfig, ConfigError>> {
    text(name).map(|t| parse_config(t, name))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusRow {
    pub instance: String,
    pub kind: String,
    pub command: String,
    /// `None` when the command errored.
    pub verdict: Option<Verdict>,
    pub expected: Option<Verdict>,
}

impl CorpusRow {
    pub fn matches(&self) -> bool {
        match (self.verdict, self.expected) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(v), Some(e)) => v == e,
        }
    }
}

pub fn summary_csv(rows: &[CorpusRow]) -> String {
    let mut s = String::from("instance,kind,command,verdict,expected,status\n");
    for r in rows {
        let status = match (r.matches(), r.expected) {
            (false, _) => "mismatch",
            (true, None) => "unchecked",
            (true, Some(_)) => "match",
        };
        s += &format!(
            "{},{},{},{},{},{status}\n",
            r.instance,
            r.kind,
            r.command,
            r.verdict.map_or("error", |v| v.as_str()),
            r.expected.map_or("", |v| v.as_str()),
        );
    }
    s
}

/// Runs every applicable command on the selected instances (all when
/// `only` is empty), writing `out/<instance>/<command>/` and
/// `out/summary.csv`.
pub fn run_corpus(out: &Path, only: &[String]) -> Result<Vec<CorpusRow>, RunError> {
    if let Some(bad) = only.iter().find(|n| text(n).is_none()) {
        return Err(RunError::Usage(format!(
            "no shipped instance named `{bad}`"
        )));
    }
    let mut rows = Vec::new();
    for name in names().filter(|n| only.is_empty() || only.iter().any(|o| o == n)) {
        let cfg = config(name).expect("listed")?;
        for &cmd in Command::for_kind(cfg.instance.kind()) {
            let verdict = match execute(&cfg, cmd) {
                Ok(o) => {
                    o.write_to(&out.join(name).join(cmd.as_str()))?;
                    Some(o.verdict)
                }
                Err(e) => {
                    eprintln!("{name} {}: {e}", cmd.as_str());
                    None
                }
            };
            rows.push(CorpusRow {
                instance: name.to_string(),
                kind: cfg.instance.kind().as_str().to_string(),
                command: cmd.as_str().to_string(),
                verdict,
                expected: cfg.expect.get(cmd.as_str()).copied(),
            });
        }
    }
    std::fs::create_dir_all(out).map_err(|source| RunError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let p = out.join("summary.csv");
    std::fs::write(&p, summary_csv(&rows)).map_err(|source| RunError::Io {
        path: p.display().to_string(),
        source,
    })?;
    Ok(rows)
}

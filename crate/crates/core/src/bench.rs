//! Corpus runner. Each `.slog` file carries its expected verdict in a
//! comment line such as `% expect: unsat`; files are grouped into
//! collections by their top-level subdirectory.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::deadline::Deadline;
use crate::parser::{expand_macros, parse};
use crate::rewrite::{sat_card, SolveOptions, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
    Timeout,
    Error,
}

/// Reads the `% expect: sat|unsat` annotation, if present.
pub fn expected_verdict(text: &str) -> Option<Expect> {
    text.lines().find_map(|l| {
        let rest = l.trim().strip_prefix('%')?.trim().strip_prefix("expect:")?;
        match rest.trim() {
            "sat" => Some(Expect::Sat),
            "unsat" => Some(Expect::Unsat),
            _ => None,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileOutcome {
    pub path: String,
    pub collection: String,
    pub expected: Option<Expect>,
    pub verdict: Verdict,
    pub millis: u64,
    pub error: Option<String>,
}

impl FileOutcome {
    /// A decided verdict that contradicts the annotation.
    pub fn is_mismatch(&self) -> bool {
        matches!(
            (self.expected, self.verdict),
            (Some(Expect::Sat), Verdict::Unsat) | (Some(Expect::Unsat), Verdict::Sat)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionReport {
    pub name: String,
    pub sat_solved: usize,
    pub unsat_solved: usize,
    /// Timeouts and per-file errors.
    pub unsolved: usize,
    pub mismatches: usize,
    pub total_millis: u64,
}

impl CollectionReport {
    pub fn solved(&self) -> usize {
        self.sat_solved + self.unsat_solved
    }

    pub fn size(&self) -> usize {
        self.solved() + self.unsolved
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchReport {
    pub collections: Vec<CollectionReport>,
    pub files: Vec<FileOutcome>,
}

impl BenchReport {
    pub fn from_outcomes(mut files: Vec<FileOutcome>) -> Self {
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let mut collections: Vec<CollectionReport> = Vec::new();
        for f in &files {
            let i = match collections.iter().position(|c| c.name == f.collection) {
                Some(i) => i,
                None => {
                    collections.push(CollectionReport { name: f.collection.clone(), ..Default::default() });
                    collections.len() - 1
                }
            };
            let c = &mut collections[i];
            match f.verdict {
                Verdict::Sat => c.sat_solved += 1,
                Verdict::Unsat => c.unsat_solved += 1,
                Verdict::Timeout | Verdict::Error => c.unsolved += 1,
            }
            c.mismatches += f.is_mismatch() as usize;
            c.total_millis += f.millis;
        }
        collections.sort_by(|a, b| a.name.cmp(&b.name));
        BenchReport { collections, files }
    }

    pub fn total(&self) -> usize {
        self.files.len()
    }

    pub fn solved(&self) -> usize {
        self.collections.iter().map(CollectionReport::solved).sum()
    }

    pub fn mismatches(&self) -> usize {
        self.collections.iter().map(|c| c.mismatches).sum()
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Per-file timeout; `None` runs every file to completion.
    pub timeout_millis: Option<u64>,
    pub fix_size: bool,
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { timeout_millis: Some(2000), fix_size: false, jobs: 1 }
    }
}

/// All `.slog` files below `dir`, sorted.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut todo = vec![dir.to_path_buf()];
    while let Some(d) = todo.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                todo.push(p);
            } else if p.extension().is_some_and(|e| e == "slog") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Solves one script under the options' timeout.
pub fn run_file(path: &Path, collection: &str, opts: &BenchOptions) -> FileOutcome {
    let text = std::fs::read_to_string(path);
    let expected = text.as_deref().ok().and_then(expected_verdict);
    let start = Instant::now();
    let result = text
        .map_err(|e| e.to_string())
        .and_then(|t| parse(&t).map_err(|e| e.to_string()))
        .and_then(|s| expand_macros(&s).map_err(|e| e.to_string()))
        .and_then(|f| {
            let so = SolveOptions {
                deadline: Deadline::from_millis(opts.timeout_millis),
                fix_size: opts.fix_size,
                max_solutions: Some(1),
                ..SolveOptions::default()
            };
            sat_card(&f, &so).map_err(|e| e.to_string())
        });
    let millis = start.elapsed().as_millis() as u64;
    let (verdict, error) = match result {
        Ok(SolveResult::Sat(_)) => (Verdict::Sat, None),
        Ok(SolveResult::Unsat) => (Verdict::Unsat, None),
        Ok(SolveResult::Timeout) => (Verdict::Timeout, None),
        Err(e) => (Verdict::Error, Some(e)),
    };
    FileOutcome {
        path: path.display().to_string(),
        collection: collection.to_string(),
        expected,
        verdict,
        millis,
        error,
    }
}

/// Runs every script below `dir`, `opts.jobs` files at a time.
pub fn run_bench(dir: &Path, opts: &BenchOptions) -> std::io::Result<BenchReport> {
    let files = corpus_files(dir)?;
    let root_name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let collection_of = |p: &Path| -> String {
        let rel = p.strip_prefix(dir).unwrap_or(p);
        let mut comps = rel.components();
        match (comps.next(), comps.next()) {
            (Some(first), Some(_)) => first.as_os_str().to_string_lossy().into_owned(),
            _ => root_name.clone(),
        }
    };
    let next = AtomicUsize::new(0);
    let outcomes = Mutex::new(Vec::with_capacity(files.len()));
    std::thread::scope(|s| {
        for _ in 0..opts.jobs.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(p) = files.get(i) else { break };
                let o = run_file(p, &collection_of(p), opts);
                outcomes.lock().expect("bench worker panicked").push(o);
            });
        }
    });
    Ok(BenchReport::from_outcomes(outcomes.into_inner().expect("bench worker panicked")))
}

//! SNI / IMA / FAA bookkeeping stores and the per-run log.
//!
//! The stores live in memory and, when a run directory is configured, mirror
//! every update to files so a run can be inspected (and golden-tested):
//!
//! - `sni.tsv`: a snapshot of the Starting Node Information table after
//!   initialization and after every load, each section introduced by a
//!   `# after ...` line. Rows are `pid<TAB>disjunct:qnode<TAB>label<TAB>
//!   vid|NULL<TAB>ima_ref|NULL`; start entries carry NULL vid and ref.
//! - `ima_<pid>.jsonl`: append-only partial answers awaiting expansion in
//!   that partition, one JSON record per line, stable field order.
//! - `faa.txt`: append-only deduplicated answers, one canonical line each.
//! - `runlog.tsv`: `seq<TAB>pid<TAB>sni_before` per load plus a trailing
//!   `# l_ideal=<n> al=<n>` line. Wall times are kept in memory only so the
//!   file is byte-reproducible.
//! - `iterations.tsv` (parallel modes): `iter<TAB>required<TAB>chosen<TAB>
//!   wall_ms` per iteration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Pid, Vid};
use crate::matcher::{Answer, CanonicalKey, PartialAnswer};
use crate::query::QnodeId;

/// One Starting Node Information entry: where expansion may start or resume.
#[derive(Debug, Clone, PartialEq)]
pub struct SniEntry {
    pub pid: Pid,
    pub disjunct: usize,
    pub qnode: QnodeId,
    /// Start entries render the root predicate; continuations the entry
    /// vertex label.
    pub label: String,
    /// Present iff this is a continuation entry.
    pub vid: Option<Vid>,
    /// Index into the target partition's IMA list; present iff `vid` is.
    pub ima_ref: Option<usize>,
    /// Occurrence count: matching local vertices for a start entry, 1 for a
    /// continuation.
    pub count: usize,
    /// Iteration that produced the entry (0 = initialization); used to check
    /// that no update becomes visible within the iteration that made it.
    pub born_iter: usize,
}

impl SniEntry {
    pub fn is_continuation(&self) -> bool {
        self.vid.is_some()
    }

    fn row(&self) -> String {
        format!(
            "{}\t{}:{}\t{}\t{}\t{}",
            self.pid,
            self.disjunct,
            self.qnode,
            self.label,
            self.vid.map_or("NULL".to_string(), |v| v.to_string()),
            self.ima_ref.map_or("NULL".to_string(), |r| r.to_string()),
        )
    }
}

/// The global ledger driving which partitions remain eligible. Empty table
/// means query processing is finished.
#[derive(Debug, Clone, Default)]
pub struct SniTable {
    entries: Vec<SniEntry>,
}

impl SniTable {
    pub fn new() -> SniTable {
        SniTable::default()
    }

    pub fn push(&mut self, entry: SniEntry) {
        debug_assert_eq!(entry.vid.is_some(), entry.ima_ref.is_some());
        self.entries.push(entry);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[SniEntry] {
        &self.entries
    }

    /// Partitions with at least one entry, ascending.
    pub fn eligible_pids(&self) -> Vec<Pid> {
        let set: BTreeSet<Pid> = self.entries.iter().map(|e| e.pid).collect();
        set.into_iter().collect()
    }

    /// Start-node count of a partition: start entries contribute their
    /// occurrence count, continuations one each.
    pub fn count_for(&self, pid: Pid) -> usize {
        self.entries
            .iter()
            .filter(|e| e.pid == pid)
            .map(|e| e.count)
            .sum()
    }

    /// Removes and returns all entries of `pid` (they are about to be
    /// expanded and are dropped from the table).
    pub fn take_for(&mut self, pid: Pid) -> Vec<SniEntry> {
        let (taken, kept): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.entries).into_iter().partition(|e| e.pid == pid);
        self.entries = kept;
        taken
    }

    fn rows(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(out, "{}", e.row());
        }
        out
    }
}

/// Per-partition append-only lists of shelved partial answers.
#[derive(Debug, Clone, Default)]
pub struct ImaStore {
    records: BTreeMap<Pid, Vec<PartialAnswer>>,
}

impl ImaStore {
    pub fn new() -> ImaStore {
        ImaStore::default()
    }

    /// Appends a record and returns its reference index within `pid`'s list.
    pub fn append(&mut self, pid: Pid, pa: PartialAnswer) -> usize {
        let list = self.records.entry(pid).or_default();
        list.push(pa);
        list.len() - 1
    }

    pub fn get(&self, pid: Pid, ima_ref: usize) -> Result<&PartialAnswer> {
        self.records
            .get(&pid)
            .and_then(|l| l.get(ima_ref))
            .ok_or_else(|| {
                Error::Bookkeeping(format!("dangling IMA reference {pid}:{ima_ref}"))
            })
    }

    pub fn len_for(&self, pid: Pid) -> usize {
        self.records.get(&pid).map_or(0, Vec::len)
    }
}

/// Final All Answers: append-only, deduplicated by canonical key.
#[derive(Debug, Clone, Default)]
pub struct FaaStore {
    answers: Vec<Answer>,
    keys: BTreeSet<CanonicalKey>,
}

impl FaaStore {
    pub fn new() -> FaaStore {
        FaaStore::default()
    }

    /// Appends an answer unless its canonical key is already present.
    /// Returns true when the answer is new.
    pub fn insert(&mut self, answer: Answer) -> bool {
        if self.keys.insert(answer.canonical_key()) {
            self.answers.push(answer);
            true
        } else {
            false
        }
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    pub fn canonical_set(&self) -> BTreeSet<CanonicalKey> {
        self.keys.clone()
    }
}

/// Per-iteration statistics for the parallel modes.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub index: usize,
    /// Eligible partitions at the start of the iteration: required(i).
    pub required: usize,
    pub chosen: Vec<Pid>,
    pub wall_ms: f64,
    /// (pid, expansion work items) per chosen partition.
    pub expansions: Vec<(Pid, usize)>,
}

/// Per-query load log: the load sequence (with repeats), SNI sizes at each
/// choice, and the ideal-loads lower bound.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub load_sequence: Vec<Pid>,
    /// Total SNI entry count observed when each load was chosen.
    pub sni_before: Vec<usize>,
    pub l_ideal: usize,
    pub wall_ms_per_load: Vec<f64>,
    pub iterations: Vec<IterationStats>,
    /// True when the run stopped early because the answer limit was reached;
    /// the load-ratio bound is only meaningful for drained runs.
    pub stopped_at_limit: bool,
}

impl RunLog {
    /// Actually loaded partitions, counting repeats.
    pub fn al(&self) -> usize {
        self.load_sequence.len()
    }

    /// L_ideal / AL for a drained run with at least one load.
    pub fn load_ratio(&self) -> Option<f64> {
        if self.al() == 0 || self.stopped_at_limit {
            return None;
        }
        Some(self.l_ideal as f64 / self.al() as f64)
    }

    fn runlog_text(&self) -> String {
        let mut out = String::from("seq\tpid\tsni_before\n");
        for (i, (pid, before)) in self.load_sequence.iter().zip(&self.sni_before).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, pid, before);
        }
        let _ = writeln!(out, "# l_ideal={} al={}", self.l_ideal, self.al());
        out
    }

    fn iterations_text(&self) -> String {
        let mut out = String::from("iter\trequired\tchosen\twall_ms\n");
        for it in &self.iterations {
            let chosen = it
                .chosen
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{}\t{}\t{}\t{:.3}", it.index, it.required, chosen, it.wall_ms);
        }
        out
    }
}

/// File mirror for one run. `None` path disables all writing (in-memory
/// mode); store contents are identical either way.
#[derive(Debug)]
pub struct RunDir {
    dir: Option<PathBuf>,
}

impl RunDir {
    pub fn new(dir: Option<&Path>) -> Result<RunDir> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
            // A run owns its directory: start the mutable files fresh.
            for name in ["sni.tsv", "faa.txt", "runlog.tsv", "iterations.tsv"] {
                let p = d.join(name);
                if p.exists() {
                    std::fs::remove_file(&p)?;
                }
            }
            for entry in std::fs::read_dir(d)? {
                let path = entry?.path();
                let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
                if name.starts_with("ima_") && name.ends_with(".jsonl") {
                    std::fs::remove_file(&path)?;
                }
            }
        }
        Ok(RunDir {
            dir: dir.map(Path::to_path_buf),
        })
    }

    pub fn disabled() -> RunDir {
        RunDir { dir: None }
    }

    fn append(&self, name: &str, content: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(name))?;
            f.write_all(content.as_bytes())?;
        }
        Ok(())
    }

    /// Appends one labeled SNI snapshot section.
    pub fn snapshot_sni(&self, label: &str, sni: &SniTable) -> Result<()> {
        self.append("sni.tsv", &format!("# after {label}\n{}", sni.rows()))
    }

    pub fn append_ima(&self, pid: Pid, pa: &PartialAnswer) -> Result<()> {
        let line = serde_json::to_string(pa)
            .map_err(|e| Error::Bookkeeping(format!("IMA serialization failed: {e}")))?;
        self.append(&format!("ima_{pid}.jsonl"), &format!("{line}\n"))
    }

    pub fn append_faa(&self, answer: &Answer) -> Result<()> {
        self.append("faa.txt", &format!("{}\n", answer.canonical_line()))
    }

    pub fn finish(&self, log: &RunLog) -> Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        self.append("runlog.tsv", &log.runlog_text())?;
        if !log.iterations.is_empty() {
            self.append("iterations.tsv", &log.iterations_text())?;
        }
        Ok(())
    }
}

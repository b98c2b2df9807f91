//! On-disk layout of one run: `<root>/<run_id>/{config.json, events.jsonl, state}`.
//!
//! `events.jsonl` is append-only. `state` is rewritten atomically after every
//! append and names how many events are complete; lines past that count
//! (a write cut short by a crash) are discarded on resume.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::transcript::{Event, RunMeta, Transcript};
use super::DialogueError;

const CONFIG: &str = "config.json";
const EVENTS: &str = "events.jsonl";
const STATE: &str = "state";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunState {
    pub completed_events: usize,
    pub last_event: String,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

impl RunStore {
    pub fn new(root: &Path, run_id: &str) -> Self {
        RunStore { dir: root.join(run_id) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        RunStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn exists(&self) -> bool {
        self.dir.join(CONFIG).exists()
    }

    pub fn state(&self) -> Result<Option<RunState>, DialogueError> {
        let p = self.dir.join(STATE);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    }

    pub fn is_done(&self) -> bool {
        matches!(self.state(), Ok(Some(RunState { done: true, .. })))
    }

    /// Open for writing. Returns the events already completed; a fresh run
    /// directory starts empty. A stored config that differs from `meta` is an error.
    pub fn open(&self, meta: &RunMeta) -> Result<Vec<Event>, DialogueError> {
        fs::create_dir_all(&self.dir)?;
        let cfg_path = self.dir.join(CONFIG);
        if cfg_path.exists() {
            let stored: RunMeta = serde_json::from_str(&fs::read_to_string(&cfg_path)?)?;
            if stored != *meta {
                return Err(DialogueError::Resume(format!(
                    "{} was started with a different configuration",
                    self.dir.display()
                )));
            }
        } else {
            write_atomic(&cfg_path, &(serde_json::to_string_pretty(meta)? + "\n"))?;
        }
        let events = self.read_events()?;
        // Drop any torn tail so appends line up with the state count.
        let mut text = String::new();
        for e in &events {
            text.push_str(&serde_json::to_string(e)?);
            text.push('\n');
        }
        let ev_path = self.dir.join(EVENTS);
        if !ev_path.exists() || fs::read_to_string(&ev_path)? != text {
            write_atomic(&ev_path, &text)?;
        }
        Ok(events)
    }

    fn read_events(&self) -> Result<Vec<Event>, DialogueError> {
        let n = self.state()?.map_or(0, |s| s.completed_events);
        let p = self.dir.join(EVENTS);
        if n == 0 || !p.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(p)?;
        let lines: Vec<&str> = text.lines().take(n).collect();
        if lines.len() < n {
            return Err(DialogueError::Resume(format!(
                "{}: state names {n} events but only {} are stored",
                self.dir.display(),
                lines.len()
            )));
        }
        lines
            .into_iter()
            .map(|l| serde_json::from_str(l).map_err(DialogueError::from))
            .collect()
    }

    pub fn append(&self, event: &Event, completed: usize, done: bool) -> Result<(), DialogueError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.dir.join(EVENTS))?;
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        f.flush()?;
        self.write_state(&RunState {
            completed_events: completed,
            last_event: format!(
                "{}:{}",
                serde_json::to_value(event.event_type)?.as_str().unwrap_or(""),
                event.round
            ),
            done,
        })
    }

    pub fn write_state(&self, state: &RunState) -> Result<(), DialogueError> {
        write_atomic(&self.dir.join(STATE), &(serde_json::to_string(state)? + "\n"))
    }

    /// Completed prefix of the stored run.
    pub fn load(&self) -> Result<Transcript, DialogueError> {
        let meta: RunMeta = serde_json::from_str(&fs::read_to_string(self.dir.join(CONFIG))?)?;
        Ok(Transcript {
            meta,
            events: self.read_events()?,
        })
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), DialogueError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Every run directory under `root`, sorted by name.
pub fn list_runs(root: &Path) -> Result<Vec<RunStore>, DialogueError> {
    if !root.exists() {
        return Ok(Vec::new());
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(CONFIG).exists())
        .collect();
    dirs.sort();
    Ok(dirs.into_iter().map(RunStore::at).collect())
}

//! JSON-lines rollout logs: a header line carrying the episode setup followed
//! by one transition per line.

use super::{EpisodeInit, Transition};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header { init: EpisodeInit },
    Transition(Box<Transition>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutLog {
    pub init: EpisodeInit,
    pub transitions: Vec<Transition>,
}

pub fn write_log<W: Write>(mut w: W, init: &EpisodeInit, transitions: &[Transition]) -> io::Result<()> {
    serde_json::to_writer(&mut w, &LogRecord::Header { init: init.clone() })?;
    writeln!(w)?;
    for t in transitions {
        serde_json::to_writer(&mut w, &LogRecord::Transition(Box::new(t.clone())))?;
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_log<R: BufRead>(r: R) -> io::Result<RolloutLog> {
    let mut init = None;
    let mut transitions = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        match rec {
            LogRecord::Header { init: h } if init.is_none() => init = Some(h),
            LogRecord::Header { .. } => {
                return Err(io::Error::new(io::ErrorKind::InvalidData, format!("line {}: second header", i + 1)))
            }
            LogRecord::Transition(_) if init.is_none() => {
                return Err(io::Error::new(io::ErrorKind::InvalidData, "transition before header"))
            }
            LogRecord::Transition(t) => transitions.push(*t),
        }
    }
    let init = init.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty log"))?;
    Ok(RolloutLog { init, transitions })
}

//! Input schedules: which axons fire at each step, split into inference blocks.
//!
//! JSON form (version 1):
//!
//! ```json
//! { "version": 1, "blocks": [ [["alpha", "beta"], ["alpha", "beta"], []] ] }
//! ```
//!
//! Each block is one inference; per-inference cost statistics are taken over
//! blocks. Steps are numbered consecutively across blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEDULE_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(default = "default_version")]
    pub version: u32,
    pub blocks: Vec<Vec<Vec<String>>>,
}

fn default_version() -> u32 {
    SCHEDULE_VERSION
}

impl Schedule {
    /// A single-block schedule.
    pub fn from_steps<I, J, S>(steps: I) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            version: SCHEDULE_VERSION,
            blocks: vec![steps
                .into_iter()
                .map(|s| s.into_iter().map(Into::into).collect())
                .collect()],
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn steps(&self) -> impl Iterator<Item = &Vec<String>> {
        self.blocks.iter().flatten()
    }

    /// Block lengths for a run of `steps` steps: truncated when the run is
    /// shorter, with idle steps appended to the last block when longer.
    pub fn block_lens(&self, steps: usize) -> Vec<usize> {
        let mut lens = Vec::new();
        let mut left = steps;
        for b in &self.blocks {
            if left == 0 {
                break;
            }
            let n = b.len().min(left);
            lens.push(n);
            left -= n;
        }
        if left > 0 {
            match lens.last_mut() {
                Some(l) => *l += left,
                None => lens.push(left),
            }
        }
        lens
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.version != SCHEDULE_VERSION {
            return Err(Error::Parse(format!("unsupported schedule version {}", s.version)));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

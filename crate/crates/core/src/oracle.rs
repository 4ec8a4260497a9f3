//! The truthful same-cluster oracle. Every ±1 answer a solver sees comes from
//! here, and each distinct unordered pair is charged exactly once.

use std::collections::HashSet;
use std::io::{self, Write};

use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("self query on element {0}")]
    SelfQuery(usize),
    #[error("element {id} is out of range for n = {n}")]
    OutOfRange { id: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Same,
    Different,
}

impl Answer {
    /// `+1` for [`Answer::Same`], `-1` otherwise.
    pub fn sign(self) -> i8 {
        match self {
            Answer::Same => 1,
            Answer::Different => -1,
        }
    }

    pub fn is_same(self) -> bool {
        self == Answer::Same
    }
}

/// One charged query, in the order it was asked (`step` starts at 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRecord {
    pub step: u64,
    pub u: u32,
    pub v: u32,
    pub answer: Answer,
}

#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    truth: &'a Partition,
    answered: HashSet<(u32, u32)>,
    log: Option<Vec<QueryRecord>>,
}

impl<'a> Oracle<'a> {
    pub fn new(truth: &'a Partition) -> Self {
        Self {
            truth,
            answered: HashSet::new(),
            log: None,
        }
    }

    /// Like [`Oracle::new`], additionally keeping a log of every charged query.
    pub fn with_log(truth: &'a Partition) -> Self {
        Self {
            log: Some(Vec::new()),
            ..Self::new(truth)
        }
    }

    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn query(&mut self, u: usize, v: usize) -> Result<Answer, OracleError> {
        let n = self.truth.n();
        for id in [u, v] {
            if id >= n {
                return Err(OracleError::OutOfRange { id, n });
            }
        }
        if u == v {
            return Err(OracleError::SelfQuery(u));
        }
        let answer = if self.truth.same(u, v) {
            Answer::Same
        } else {
            Answer::Different
        };
        let key = (u.min(v) as u32, u.max(v) as u32);
        if self.answered.insert(key) {
            if let Some(log) = &mut self.log {
                log.push(QueryRecord {
                    step: self.answered.len() as u64,
                    u: u as u32,
                    v: v as u32,
                    answer,
                });
            }
        }
        Ok(answer)
    }

    /// Number of distinct pairs asked so far.
    pub fn count(&self) -> u64 {
        self.answered.len() as u64
    }

    pub fn log(&self) -> Option<&[QueryRecord]> {
        self.log.as_deref()
    }

    /// Writes the query log as CSV rows `step,u,v,answer`.
    pub fn write_log<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "u", "v", "answer"])?;
        for r in self.log.iter().flatten() {
            w.write_record([
                r.step.to_string(),
                r.u.to_string(),
                r.v.to_string(),
                r.answer.sign().to_string(),
            ])?;
        }
        w.flush()
    }
}

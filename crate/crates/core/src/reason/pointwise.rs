//! Tick-by-tick evaluation over a sliding buffer of the last `ℓ` time points.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{materialize, AnswerOptions, ReasonError, Stats};
use crate::lars::{NormalAtom, Program, Stream, Timeline};
use crate::term::TimePoint;

/// Facts arriving at one time point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub time: TimePoint,
    pub facts: Vec<NormalAtom>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickReport {
    pub tick: TimePoint,
    /// Facts holding at the tick that are not part of its input.
    pub derived: BTreeSet<NormalAtom>,
    pub stats: Stats,
}

#[derive(Serialize)]
struct TickLine {
    tick: TimePoint,
    facts: Vec<String>,
    rounds: u64,
    ms: f64,
    saturated: bool,
}

impl TickReport {
    pub fn to_ndjson(&self) -> String {
        let line = TickLine {
            tick: self.tick,
            facts: self.derived.iter().map(ToString::to_string).collect(),
            rounds: self.stats.rounds,
            ms: self.stats.ms,
            saturated: self.stats.saturated,
        };
        serde_json::to_string(&line).expect("tick lines always serialize")
    }
}

pub struct PointwiseRunner {
    program: Program,
    ell: u32,
    opts: AnswerOptions,
    buffer: BTreeMap<TimePoint, BTreeSet<NormalAtom>>,
    next_tick: TimePoint,
    last: Option<TimePoint>,
}

impl PointwiseRunner {
    pub fn new(program: Program, ell: u32, opts: AnswerOptions) -> Result<Self, ReasonError> {
        if ell == 0 {
            return Err(ReasonError::Config("the buffer length must be at least 1".into()));
        }
        Ok(PointwiseRunner {
            program,
            ell,
            opts,
            buffer: BTreeMap::new(),
            next_tick: 0,
            last: None,
        })
    }

    /// Adds a batch; returns the reports of all ticks before its time.
    pub fn push(&mut self, batch: Batch) -> Result<Vec<TickReport>, ReasonError> {
        if let Some(last) = self.last {
            if batch.time < last {
                return Err(ReasonError::OutOfOrder { got: batch.time, last });
            }
        }
        let mut out = Vec::new();
        while self.next_tick < batch.time {
            out.push(self.tick()?);
        }
        self.buffer.entry(batch.time).or_default().extend(batch.facts);
        self.last = Some(batch.time);
        Ok(out)
    }

    /// Reports the remaining ticks up to the last batch.
    pub fn finish(&mut self) -> Result<Vec<TickReport>, ReasonError> {
        let mut out = Vec::new();
        if let Some(last) = self.last {
            while self.next_tick <= last {
                out.push(self.tick()?);
            }
        }
        Ok(out)
    }

    fn tick(&mut self) -> Result<TickReport, ReasonError> {
        let tau = self.next_tick;
        let lo = tau.saturating_sub(self.ell - 1);
        self.buffer.retain(|t, _| *t >= lo);
        let mut s = Stream::new(Timeline::new(tau - lo));
        for (t, facts) in self.buffer.range(lo..=tau) {
            for f in facts {
                s.insert(t - lo, f.clone());
            }
        }
        let m = materialize(&self.program, &s, self.opts)?;
        let input = s.eval_set(tau - lo);
        let derived = m
            .at(tau - lo)
            .filter(|f| !input.is_some_and(|i| i.contains(*f)))
            .cloned()
            .collect();
        self.next_tick += 1;
        Ok(TickReport {
            tick: tau,
            derived,
            stats: m.stats,
        })
    }
}

/// Runs `p` over the batches with a buffer of `ell` time points.
pub fn run_pointwise(
    p: &Program,
    batches: impl IntoIterator<Item = Batch>,
    ell: u32,
    opts: AnswerOptions,
) -> Result<Vec<TickReport>, ReasonError> {
    let mut runner = PointwiseRunner::new(p.clone(), ell, opts)?;
    let mut out = Vec::new();
    for b in batches {
        out.extend(runner.push(b)?);
    }
    out.extend(runner.finish()?);
    Ok(out)
}

/// Splits a stream into one batch per time point of its timeline.
pub fn batches_of(s: &Stream) -> Vec<Batch> {
    s.timeline
        .points()
        .map(|t| Batch {
            time: t,
            facts: s.eval(t).cloned().collect(),
        })
        .collect()
}

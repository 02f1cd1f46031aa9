//! Workloads shared by the benchmarks.

use elars_core::acyclicity::is_tlwa;
use elars_core::reason::{batches_of, gen_belts, BeltConfig, BeltInstance, PointwiseRunner, TickReport};
use elars_core::syntax::{parse_program, parse_query, parse_stream};
use elars_core::{answer, AnswerOptions, Bcq, Program, Stream, Verdict};

pub fn belts(belts: usize, ticks: u32, seed: u64) -> BeltInstance {
    gen_belts(&BeltConfig {
        belts,
        horizon: ticks,
        seed,
        ..BeltConfig::default()
    })
    .expect("valid belt configuration")
}

/// Runs the pointwise reasoner over the whole instance and returns the
/// last report.
pub fn run_belts(inst: &BeltInstance, ell: u32) -> TickReport {
    let mut runner = PointwiseRunner::new(inst.program.clone(), ell, AnswerOptions::default()).expect("ell > 0");
    let mut last = None;
    for b in batches_of(&inst.stream) {
        last = runner.push(b).expect("in order").pop().or(last);
    }
    runner.finish().expect("in order").pop().or(last).expect("non-empty stream")
}

/// The forward chain `@T p(X,Y), U = T + 1 -> ∃V. @U p(Y,V)` over `[0, h]`.
pub struct Chain {
    pub program: Program,
    pub stream: Stream,
    pub query: Bcq,
}

pub fn chain(h: u32) -> Chain {
    Chain {
        program: parse_program("@T p(X,Y), U = T + 1 -> exists V. @U p(Y,V).").unwrap(),
        stream: parse_stream(&format!("timeline 0 {h}. @0 p(a,b).")).unwrap(),
        query: parse_query("exists X,Y. p(X,Y)").unwrap(),
    }
}

pub fn ask_chain(c: &Chain, t: u32) -> Verdict {
    answer(&c.program, &c.stream, t, &c.query, AnswerOptions::default())
        .expect("the chain program is TLWA")
        .verdict
}

pub fn classify_chain(c: &Chain) -> bool {
    is_tlwa(&c.program, c.stream.timeline).acyclic
}

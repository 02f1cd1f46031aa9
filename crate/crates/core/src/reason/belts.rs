//! The conveyor-belt monitoring workload and a seeded stream generator for it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ReasonError;
use crate::lars::{NormalAtom, Program, Stream, Timeline};
use crate::syntax::parse_program;
use crate::term::{Term, TimePoint};

pub const BELT_PROGRAM: &str = "\
operator: belt(X) -> exists Y. bOpr(X, Y).
brokenGear: in 5 some bSpeed(X, Y), slow(Y) -> exists Z. brkG(X, Z).
incident: in 3 always bTmp(X, Y), high(Y) -> exists Z. incId(Z, X).
assign: incId(Y, X), bOpr(X, Z) -> assign(Y, Z).
block: in 3 always incId(Z, X) -> block(X).
";

pub fn belt_program() -> Program {
    parse_program(BELT_PROGRAM).expect("the belt program parses")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeltConfig {
    pub belts: usize,
    /// Number of time points; the timeline is `[0, horizon - 1]`.
    pub horizon: u32,
    /// Probability that a belt reports a slow speed at a tick.
    pub p1: f64,
    /// Probability that a belt at normal temperature starts a high episode,
    /// which repeats one reading for its whole length.
    pub p2: f64,
    /// Probability that an episode lasts 4 to 6 ticks rather than one.
    pub p3: f64,
    pub seed: u64,
}

impl Default for BeltConfig {
    fn default() -> Self {
        BeltConfig {
            belts: 10,
            horizon: 100,
            p1: 0.3,
            p2: 0.3,
            p3: 0.5,
            seed: 0,
        }
    }
}

/// A run of high temperature readings as drawn by the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Episode {
    pub belt: usize,
    pub start: TimePoint,
    /// Drawn length; the stream may cut it off at the horizon.
    pub len: u32,
    pub extended: bool,
}

#[derive(Clone, Debug)]
pub struct BeltInstance {
    pub program: Program,
    pub stream: Stream,
    pub episodes: Vec<Episode>,
}

pub fn belt_name(i: usize) -> String {
    format!("b{}", i + 1)
}

pub fn gen_belts(cfg: &BeltConfig) -> Result<BeltInstance, ReasonError> {
    for (name, p) in [("p1", cfg.p1), ("p2", cfg.p2), ("p3", cfg.p3)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(ReasonError::Config(format!("{name} = {p} is not a probability")));
        }
    }
    if cfg.belts == 0 || cfg.horizon == 0 {
        return Err(ReasonError::Config("belts and horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stream = Stream::new(Timeline::new(cfg.horizon - 1));
    let mut episodes = Vec::new();
    // Remaining ticks and reading of the current episode per belt.
    let mut remaining = vec![(0u32, 0u32); cfg.belts];
    let c = |s: &str| Term::constant(s);
    let num = |n: u32| Term::constant(n.to_string());
    for t in 0..cfg.horizon {
        for v in [8, 9] {
            stream.insert(t, NormalAtom::new("high", vec![num(v)]));
        }
        stream.insert(t, NormalAtom::new("slow", vec![c("slow")]));
        for (i, (rem, reading)) in remaining.iter_mut().enumerate() {
            let b = c(&belt_name(i));
            stream.insert(t, NormalAtom::new("belt", vec![b.clone()]));
            let speed = if rng.gen_bool(cfg.p1) { "slow" } else { "ok" };
            stream.insert(t, NormalAtom::new("bSpeed", vec![b.clone(), c(speed)]));
            if *rem == 0 && rng.gen_bool(cfg.p2) {
                let extended = rng.gen_bool(cfg.p3);
                let len = if extended { rng.gen_range(4..=6) } else { 1 };
                episodes.push(Episode {
                    belt: i,
                    start: t,
                    len,
                    extended,
                });
                *rem = len;
                *reading = rng.gen_range(8..=9);
            }
            let value = if *rem > 0 {
                *rem -= 1;
                *reading
            } else {
                rng.gen_range(1..=7)
            };
            stream.insert(t, NormalAtom::new("bTmp", vec![b, num(value)]));
        }
    }
    Ok(BeltInstance {
        program: belt_program(),
        stream,
        episodes,
    })
}

//! Relations between the acyclicity classes and chase termination.

mod common;

use std::collections::BTreeSet;

use common::{bounded, chase_rewritten, existential, instance, rewritten};
use elars_core::acyclicity::{
    dependency_graph, is_lwa, is_tlwa, is_weakly_acyclic, partial_ground, strip, temporal_grounding, tfree, tfree_facts,
    wfree,
};
use elars_core::fuzz::FuzzConfig;
use elars_core::lars::Timeline;
use elars_core::rewrite::{rewrite_program, rewrite_stream, rewrite_timeline, LEQ, PLUS_EQ};
use elars_core::syntax::parse_program;
use elars_core::term::Name;
use proptest::prelude::*;

fn cfg() -> FuzzConfig {
    existential(FuzzConfig {
        forward: 0.3,
        ..FuzzConfig::default()
    })
}

const EX3: &str = "in 3 always p(X) -> exists Y. q(X,Y).\n@T q(X,Y), U = T + 1 -> @U p(Y).";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn strip_and_rewrite_agree_on_wa(seed in any::<u64>()) {
        let p = instance(seed, &cfg()).program;
        let stripped = is_weakly_acyclic(&strip(&p)).acyclic;
        let rew = is_weakly_acyclic(&rewrite_program(&p).rules).acyclic;
        prop_assert_eq!(stripped, rew);
    }

    #[test]
    fn witnesses_are_cycles_of_the_graph(seed in any::<u64>()) {
        let p = instance(seed, &cfg()).program;
        let rules = strip(&p);
        let v = is_weakly_acyclic(&rules);
        match &v.witness {
            None => prop_assert!(v.acyclic),
            Some(w) => {
                prop_assert!(!v.acyclic);
                prop_assert!(dependency_graph(&rules).validates(w));
                prop_assert!(w.iter().any(|e| e.special));
            }
        }
    }

    #[test]
    fn lwa_implies_tlwa(seed in any::<u64>(), h in 0u32..5) {
        let p = instance(seed, &cfg()).program;
        if is_lwa(&p).acyclic {
            prop_assert!(is_tlwa(&p, Timeline::new(h)).acyclic);
        }
    }

    #[test]
    fn tlwa_implies_saturation(seed in any::<u64>()) {
        let inst = instance(seed, &cfg());
        if is_tlwa(&inst.program, inst.stream.timeline).acyclic {
            prop_assert!(chase_rewritten(&inst.program, &inst.stream, 10_000).is_saturated());
        }
    }

    #[test]
    fn wfree_termination_carries_over(seed in any::<u64>()) {
        let inst = instance(seed, &cfg());
        let (rules, facts) = rewritten(&wfree(&inst.program), &inst.stream);
        if bounded(&rules, &facts).is_some_and(|o| o.is_saturated()) {
            prop_assert!(chase_rewritten(&inst.program, &inst.stream, 10_000).is_saturated());
        }
    }

    #[test]
    fn partial_grounding_preserves_the_chase(seed in any::<u64>()) {
        let inst = instance(seed, &cfg());
        let (rules, facts) = rewritten(&inst.program, &inst.stream);
        let a = rewrite_timeline(inst.stream.timeline);
        let pa: BTreeSet<Name> = [Name::from(LEQ), Name::from(PLUS_EQ)].into();
        let grounded = partial_ground(&rules, &a, &pa).unwrap();
        let Some(x) = bounded(&rules, &facts) else { return Ok(()) };
        let y = bounded(&grounded, &facts).unwrap();
        prop_assert_eq!(x.is_saturated(), y.is_saturated());
        prop_assert_eq!(x.rounds(), y.rounds());
        prop_assert_eq!(x.facts(), y.facts());
    }

    #[test]
    fn time_freeing_is_a_renaming(seed in any::<u64>()) {
        let inst = instance(seed, &cfg());
        let g = temporal_grounding(&inst.program, inst.stream.timeline);
        let f = rewrite_stream(&inst.stream);
        let Some(x) = bounded(&g, &f) else { return Ok(()) };
        let y = bounded(&tfree(&g).unwrap(), &tfree_facts(&f).unwrap()).unwrap();
        prop_assert_eq!(x.is_saturated(), y.is_saturated());
        let renamed = tfree_facts(x.facts()).unwrap();
        prop_assert_eq!(renamed.len(), x.facts().len());
        prop_assert_eq!(&renamed, y.facts());
    }
}

#[test]
fn lwa_is_strictly_smaller_than_tlwa() {
    let p = parse_program(EX3).unwrap();
    assert!(!is_lwa(&p).acyclic);
    assert!(is_tlwa(&p, Timeline::new(1)).acyclic);
}

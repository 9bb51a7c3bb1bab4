//! Seeded generator of small random timed automata, used to drive
//! cross-checks between the symbolic pipeline and the digitized oracle.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{AtomicConstraint, ClockId, Constraint, Edge, LocId, Model, Relation};
use crate::rat;

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub locations: usize,
    pub clocks: usize,
    pub extra_edges: usize,
    pub max_constant: i64,
    /// Allow `<` and `>` in guards; otherwise only `<=`, `=`, `>=`.
    pub strict_guards: bool,
    pub invariant_probability: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            locations: 4,
            clocks: 2,
            extra_edges: 4,
            max_constant: 3,
            strict_guards: false,
            invariant_probability: 0.5,
        }
    }
}

fn random_guard(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Constraint {
    let mut atoms = Vec::new();
    let n = rng.gen_range(0..=2usize);
    for _ in 0..n {
        let clock = ClockId(rng.gen_range(0..cfg.clocks));
        let rel = if cfg.strict_guards {
            match rng.gen_range(0..5) {
                0 => Relation::Lt,
                1 => Relation::Le,
                2 => Relation::Eq,
                3 => Relation::Ge,
                _ => Relation::Gt,
            }
        } else {
            match rng.gen_range(0..3) {
                0 => Relation::Le,
                1 => Relation::Eq,
                _ => Relation::Ge,
            }
        };
        let c = rng.gen_range(0..=cfg.max_constant);
        atoms.push(AtomicConstraint::simple(clock, rel, rat::int(c)));
    }
    Constraint { atoms }
}

fn random_resets(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> BTreeSet<ClockId> {
    (0..cfg.clocks)
        .filter(|_| rng.gen_bool(0.3))
        .map(ClockId)
        .collect()
}

/// A random model with locations `l0..`, `l1` private, `l2` final. The
/// structure guarantees nothing beyond validity: paths may or may not reach
/// the final location, which is exactly what cross-checks need.
pub fn random_model(seed: u64, cfg: &GenConfig) -> Model {
    assert!(cfg.locations >= 3 && cfg.clocks >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locations: Vec<String> = (0..cfg.locations).map(|i| format!("l{i}")).collect();
    let clocks: Vec<String> = (0..cfg.clocks).map(|i| format!("x{i}")).collect();
    let mut invariants = Vec::with_capacity(cfg.locations);
    for _ in 0..cfg.locations {
        let mut inv = Constraint::truth();
        if rng.gen_bool(cfg.invariant_probability) {
            // Upper bounds only, so invariants restrict but rarely deadlock.
            inv.atoms.push(AtomicConstraint::simple(
                ClockId(rng.gen_range(0..cfg.clocks)),
                Relation::Le,
                rat::int(rng.gen_range(1..=cfg.max_constant)),
            ));
        }
        invariants.push(inv);
    }

    let mut m = Model {
        actions: Vec::new(),
        locations,
        clocks,
        params: Vec::new(),
        init: LocId(0),
        private: LocId(1),
        final_loc: LocId(2),
        invariants,
        edges: Vec::new(),
    };
    let action = m.intern_action("a");

    // A couple of seeded edges keep the final location plausibly reachable.
    let push_edge = |rng: &mut ChaCha8Rng, m: &mut Model, source: usize, target: usize| {
        let guard = random_guard(rng, cfg);
        let resets = random_resets(rng, cfg);
        m.edges.push(Edge {
            source: LocId(source),
            guard,
            action,
            resets,
            target: LocId(target),
        });
    };
    let first_target = rng.gen_range(1..cfg.locations);
    push_edge(&mut rng, &mut m, 0, first_target);
    push_edge(&mut rng, &mut m, 0, 2);
    for _ in 0..cfg.extra_edges {
        let source = rng.gen_range(0..cfg.locations);
        let target = rng.gen_range(0..cfg.locations);
        if LocId(source) == m.final_loc {
            continue; // keep first-entry semantics uncluttered
        }
        push_edge(&mut rng, &mut m, source, target);
    }
    m
}

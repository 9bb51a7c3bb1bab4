//! Cross-module pipeline properties: the symbolic duration sets decoded
//! from the tick automaton agree with the concrete semantics, and verdicts
//! do not depend on the representation of time.

use opaq_core::durset::DurationSet;
use opaq_core::model::{parse_model, DeltaBound, Model};
use opaq_core::modelgen::{random_model, GenConfig};
use opaq_core::opacity;
use opaq_core::oracle;
use opaq_core::rat::{self, int, rat, Rational};
use opaq_core::Budget;

fn horizon_for(r: &opacity::DurationReport) -> Rational {
    let mut worst: u64 = 0;
    let mut sets: Vec<&DurationSet> = vec![&r.d_visit, &r.d_avoid];
    sets.extend(r.d_secret.iter());
    sets.extend(r.d_late.iter());
    for s in sets {
        let span = match s.periodic_tail() {
            Some(p) => p.threshold + 2 * p.period,
            None => s
                .initial_intervals()
                .iter()
                .filter_map(|iv| iv.hi.as_ref())
                .map(|h| rat::to_u64(&h.ceil()).unwrap_or(0))
                .max()
                .unwrap_or(0),
        };
        worst = worst.max(span);
    }
    rat(worst as i64 + 2, r.scale as i64)
}

#[test]
fn decoded_durations_match_concrete_grid_runs() {
    let budget = Budget::default();
    let cfg = GenConfig::default();
    for seed in 200..225u64 {
        let m = random_model(seed, &cfg);
        let sets = opacity::duration_report(&m, None, &budget).unwrap();
        let horizon = horizon_for(&sets);
        let report = oracle::digitized_durations(
            &m,
            2 * sets.scale,
            &horizon,
            10_000,
            None,
            &budget,
        )
        .unwrap();
        assert!(!report.budget_exceeded, "seed {seed}");
        let disagreements = oracle::crosscheck(&report, &sets, false);
        assert!(disagreements.is_empty(), "seed {seed}: {disagreements:?}");
    }
}

#[test]
fn expiring_agreement_on_random_models() {
    let budget = Budget::default();
    let cfg = GenConfig::default();
    for seed in 300..315u64 {
        let m = random_model(seed, &cfg);
        for delta in [DeltaBound::Finite(int(0)), DeltaBound::Finite(int(2))] {
            let sets = opacity::duration_report(&m, Some(&delta), &budget).unwrap();
            let horizon = horizon_for(&sets);
            let report = oracle::digitized_durations(
                &m,
                2 * sets.scale,
                &horizon,
                10_000,
                Some(&delta),
                &budget,
            )
            .unwrap();
            assert!(!report.budget_exceeded, "seed {seed}");
            let disagreements = oracle::crosscheck(&report, &sets, false);
            assert!(
                disagreements.is_empty(),
                "seed {seed} delta {delta}: {disagreements:?}"
            );
        }
    }
}

#[test]
fn infinite_bound_keeps_visit_split_trivial() {
    let budget = Budget::default();
    let cfg = GenConfig::default();
    for seed in 400..420u64 {
        let m = random_model(seed, &cfg);
        let r = opacity::duration_report(&m, Some(&DeltaBound::Infinite), &budget).unwrap();
        assert!(r.d_secret.as_ref().unwrap().equals(&r.d_visit), "seed {seed}");
        assert!(r.d_late.as_ref().unwrap().is_empty(), "seed {seed}");
    }
}

fn scale_constants(m: &Model, k: i64) -> Model {
    let mut out = m.clone();
    for inv in &mut out.invariants {
        for a in &mut inv.atoms {
            a.constant *= int(k);
        }
    }
    for e in &mut out.edges {
        for a in &mut e.guard.atoms {
            a.constant *= int(k);
        }
    }
    out
}

#[test]
fn verdicts_are_time_unit_independent() {
    let budget = Budget::default();
    let cfg = GenConfig::default();
    for seed in 500..515u64 {
        let m = random_model(seed, &cfg);
        let doubled = scale_constants(&m, 3);
        for (a, b) in [
            (
                opacity::decide_exists(&m, &budget).unwrap(),
                opacity::decide_exists(&doubled, &budget).unwrap(),
            ),
            (
                opacity::decide_weak(&m, &budget).unwrap(),
                opacity::decide_weak(&doubled, &budget).unwrap(),
            ),
            (
                opacity::decide_full(&m, &budget).unwrap(),
                opacity::decide_full(&doubled, &budget).unwrap(),
            ),
        ] {
            assert_eq!(a.answer, b.answer, "seed {seed} {:?}", a.problem);
        }
        // The witness scales with the constants.
        let w = opacity::decide_exists(&m, &budget).unwrap().witness;
        let w3 = opacity::decide_exists(&doubled, &budget).unwrap().witness;
        assert_eq!(w.map(|x| x * int(3)), w3, "seed {seed}");
    }
}

#[test]
fn reference_model_round_trip_through_text() {
    // Valuating, rescaling, serializing and re-parsing preserves verdicts.
    let budget = Budget::default();
    let m = parse_model(include_str!("../../../models/fig1.ta")).unwrap();
    let text = opaq_core::model::serialize_model(&m);
    let back = parse_model(&text).unwrap();
    assert_eq!(m, back);
    assert_eq!(
        opacity::decide_full(&m, &budget).unwrap().answer,
        opacity::decide_full(&back, &budget).unwrap().answer
    );
}

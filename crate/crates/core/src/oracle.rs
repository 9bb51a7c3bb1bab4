//! Independent brute-force ground truth over the concrete timed semantics.
//!
//! `digitized_durations` enumerates every run whose delays are multiples of
//! `1/q` up to a duration horizon, recording the duration and class of each
//! first entry into the final location. It interprets guards, invariants and
//! resets directly on rational clock valuations and shares no code with the
//! region or tick machinery — that independence is the point.
//!
//! For an integer-rescaled model, the grid `q = 2·scale` hits a point of
//! every region cell, so on models without strict guards the digitized
//! enumeration is complete at grid points, not merely sound.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::Signed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{DeltaBound, Model, Relation};
use crate::opacity::DurationReport;
use crate::rat::{self, Rational};
use crate::{Budget, Error, RunClass};

/// Grid samples per run class, with the parameters they were produced under.
#[derive(Clone, Debug)]
pub struct SampleReport {
    pub granularity: u64,
    pub horizon: Rational,
    pub delta: Option<DeltaBound>,
    pub samples: BTreeMap<RunClass, BTreeSet<Rational>>,
    /// Set when enumeration stopped early; completeness checks are then off.
    pub budget_exceeded: bool,
}

/// One membership mismatch between the oracle and a symbolic duration set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disagreement {
    pub duration: Rational,
    pub class: RunClass,
    pub oracle_member: bool,
    pub set_member: bool,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Config {
    loc: usize,
    vals: Vec<Rational>,
    flag: bool,
    last_private_entry: Option<Rational>,
    now: Rational,
}

fn invariant_holds(m: &Model, loc: usize, vals: &[Rational]) -> bool {
    m.invariants[loc].eval(vals)
}

fn classify(
    flag: bool,
    now: &Rational,
    last_private_entry: &Option<Rational>,
    delta: Option<&DeltaBound>,
) -> RunClass {
    match delta {
        None => {
            if flag {
                RunClass::Private
            } else {
                RunClass::Public
            }
        }
        Some(bound) => {
            if !flag {
                return RunClass::Public;
            }
            match bound {
                DeltaBound::Infinite => RunClass::Secret,
                DeltaBound::Finite(d) => {
                    let age = now - last_private_entry.as_ref().expect("flagged run");
                    if &age <= d {
                        RunClass::Secret
                    } else {
                        RunClass::Late
                    }
                }
            }
        }
    }
}

/// Breadth-first enumeration of all runs on the `1/q` delay grid.
pub fn digitized_durations(
    m: &Model,
    q: u64,
    horizon: &Rational,
    max_steps: usize,
    delta: Option<&DeltaBound>,
    budget: &Budget,
) -> Result<SampleReport, Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    if q == 0 {
        return Err(Error::InvalidModel("grid granularity must be positive".into()));
    }
    let step = rat::rat(1, q as i64);
    let mut samples: BTreeMap<RunClass, BTreeSet<Rational>> = BTreeMap::new();
    let mut budget_exceeded = false;

    let start = Config {
        loc: m.init.0,
        vals: vec![rat::int(0); m.clocks.len()],
        flag: false,
        last_private_entry: None,
        now: rat::int(0),
    };
    let mut seen: HashMap<Config, usize> = HashMap::new();
    let mut queue: VecDeque<(Config, usize)> = VecDeque::new();
    if invariant_holds(m, start.loc, &start.vals) {
        seen.insert(start.clone(), 0);
        queue.push_back((start, 0));
    }

    while let Some((cfg, steps)) = queue.pop_front() {
        if seen.len() as u64 > budget.states {
            budget_exceeded = true;
            break;
        }
        // Delay by one grid step. Invariants are rectangular, hence convex:
        // holding at both endpoints of a delay means holding throughout.
        let delayed_now = &cfg.now + &step;
        if delayed_now <= *horizon {
            let vals: Vec<Rational> = cfg.vals.iter().map(|v| v + &step).collect();
            if invariant_holds(m, cfg.loc, &vals) {
                let next = Config {
                    vals,
                    now: delayed_now,
                    ..cfg.clone()
                };
                match seen.get(&next) {
                    Some(&s) if s <= steps => {}
                    _ => {
                        seen.insert(next.clone(), steps);
                        queue.push_back((next, steps));
                    }
                }
            }
        }
        if steps >= max_steps {
            continue;
        }
        for e in &m.edges {
            if e.source.0 != cfg.loc || !e.guard.eval(&cfg.vals) {
                continue;
            }
            let mut vals = cfg.vals.clone();
            for c in &e.resets {
                vals[c.0] = rat::int(0);
            }
            if !invariant_holds(m, e.target.0, &vals) {
                continue;
            }
            let flag = cfg.flag || e.target == m.private;
            let last_private_entry = if e.target == m.private {
                Some(cfg.now.clone())
            } else {
                cfg.last_private_entry.clone()
            };
            if e.target == m.final_loc {
                let class = classify(flag, &cfg.now, &last_private_entry, delta);
                samples.entry(class).or_default().insert(cfg.now.clone());
                continue; // durations stop at first entry
            }
            let next = Config {
                loc: e.target.0,
                vals,
                flag,
                last_private_entry,
                now: cfg.now.clone(),
            };
            match seen.get(&next) {
                Some(&s) if s <= steps + 1 => {}
                _ => {
                    seen.insert(next.clone(), steps + 1);
                    queue.push_back((next, steps + 1));
                }
            }
        }
    }

    Ok(SampleReport {
        granularity: q,
        horizon: horizon.clone(),
        delta: delta.cloned(),
        samples,
        budget_exceeded,
    })
}

/// Largest delay admissible in `loc` from `vals` under the invariant, if
/// bounded; `None` means unbounded.
fn max_delay(m: &Model, loc: usize, vals: &[Rational]) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for a in &m.invariants[loc].atoms {
        let room = match a.rel {
            Relation::Le | Relation::Eq => Some(&a.constant - &vals[a.clock.0]),
            // Strict upper bounds leave an open sliver; callers sample below.
            Relation::Lt => Some(&a.constant - &vals[a.clock.0]),
            Relation::Ge | Relation::Gt => None,
        };
        if let Some(r) = room {
            best = Some(match best {
                None => r,
                Some(b) => b.min(r),
            });
        }
    }
    best
}

/// Random admissible runs; each sample is a sound positive membership
/// witness for its class. Reproducible under `seed`.
pub fn random_runs(
    m: &Model,
    n: usize,
    seed: u64,
    delta: Option<&DeltaBound>,
) -> Result<Vec<(Rational, RunClass)>, Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    'runs: for _ in 0..n {
        let mut loc = m.init.0;
        let mut vals = vec![rat::int(0); m.clocks.len()];
        let mut now = rat::int(0);
        let mut flag = false;
        let mut last_private_entry: Option<Rational> = None;
        if !invariant_holds(m, loc, &vals) {
            continue;
        }
        for _ in 0..64 {
            // Pick a random rational delay within the invariant's room.
            let cap = max_delay(m, loc, &vals);
            let denom = rng.gen_range(1..=4i64);
            let raw = rat::rat(rng.gen_range(0..=8i64), 2 * denom);
            let delay = match cap {
                None => raw,
                Some(c) => {
                    if c.is_negative() {
                        rat::int(0)
                    } else {
                        // Stay within the room; halve to keep strict bounds.
                        if raw <= c {
                            raw
                        } else {
                            c / rat::int(2)
                        }
                    }
                }
            };
            let cand: Vec<Rational> = vals.iter().map(|v| v + &delay).collect();
            if invariant_holds(m, loc, &cand) {
                vals = cand;
                now += &delay;
            }
            let enabled: Vec<usize> = m
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.source.0 == loc && e.guard.eval(&vals))
                .filter(|(_, e)| {
                    let mut v = vals.clone();
                    for c in &e.resets {
                        v[c.0] = rat::int(0);
                    }
                    invariant_holds(m, e.target.0, &v)
                })
                .map(|(i, _)| i)
                .collect();
            if enabled.is_empty() {
                continue;
            }
            let e = &m.edges[enabled[rng.gen_range(0..enabled.len())]];
            for c in &e.resets {
                vals[c.0] = rat::int(0);
            }
            flag = flag || e.target == m.private;
            if e.target == m.private {
                last_private_entry = Some(now.clone());
            }
            if e.target == m.final_loc {
                let class = classify(flag, &now, &last_private_entry, delta);
                out.push((now, class));
                continue 'runs;
            }
            loc = e.target.0;
        }
    }
    Ok(out)
}

/// Replays a fixed schedule of `(delay, action)` moves; returns the duration
/// and class when the run ends in the final location.
pub fn scripted_run(
    m: &Model,
    moves: &[(Rational, &str)],
    delta: Option<&DeltaBound>,
) -> Option<(Rational, RunClass)> {
    let mut loc = m.init.0;
    let mut vals = vec![rat::int(0); m.clocks.len()];
    let mut now = rat::int(0);
    let mut flag = false;
    let mut last_private_entry: Option<Rational> = None;
    if !invariant_holds(m, loc, &vals) {
        return None;
    }
    for (delay, action) in moves {
        let cand: Vec<Rational> = vals.iter().map(|v| v + delay).collect();
        if delay.is_negative() || !invariant_holds(m, loc, &cand) {
            return None;
        }
        vals = cand;
        now += delay;
        let e = m.edges.iter().find(|e| {
            e.source.0 == loc && m.actions[e.action.0] == *action && e.guard.eval(&vals)
        })?;
        for c in &e.resets {
            vals[c.0] = rat::int(0);
        }
        if !invariant_holds(m, e.target.0, &vals) {
            return None;
        }
        flag = flag || e.target == m.private;
        if e.target == m.private {
            last_private_entry = Some(now.clone());
        }
        if e.target == m.final_loc {
            return Some((now.clone(), classify(flag, &now, &last_private_entry, delta)));
        }
        loc = e.target.0;
    }
    None
}

fn set_for_class(
    report: &DurationReport,
    class: RunClass,
) -> Option<&crate::durset::DurationSet> {
    match class {
        RunClass::Private => Some(&report.d_visit),
        RunClass::Public => Some(&report.d_avoid),
        RunClass::Secret => report.d_secret.as_ref(),
        RunClass::Late => report.d_late.as_ref(),
    }
}

/// Compares oracle samples against symbolic duration sets.
///
/// Soundness direction (always): every sampled duration must belong to its
/// set. Completeness direction (only when `strict_guards` is false and the
/// enumeration finished): every grid point of a set within the horizon must
/// have been sampled.
pub fn crosscheck(
    report: &SampleReport,
    sets: &DurationReport,
    strict_guards: bool,
) -> Vec<Disagreement> {
    let mut out = Vec::new();
    let classes: Vec<RunClass> = match sets.delta {
        None => vec![RunClass::Private, RunClass::Public],
        Some(_) => vec![RunClass::Secret, RunClass::Late, RunClass::Public],
    };
    for class in classes {
        let Some(set) = set_for_class(sets, class) else {
            continue;
        };
        let empty = BTreeSet::new();
        let sampled = report.samples.get(&class).unwrap_or(&empty);
        for d in sampled {
            if !set.contains(d) {
                out.push(Disagreement {
                    duration: d.clone(),
                    class,
                    oracle_member: true,
                    set_member: false,
                });
            }
        }
        if strict_guards || report.budget_exceeded {
            continue;
        }
        // Grid completeness.
        let steps = rat::floor_int(&(&report.horizon * rat::int(report.granularity as i64)));
        let steps = num_traits::ToPrimitive::to_u64(&steps).unwrap_or(0);
        for j in 0..=steps {
            let d = rat::rat(j as i64, report.granularity as i64);
            let expected = set.contains(&d);
            let got = sampled.contains(&d);
            if expected != got {
                out.push(Disagreement {
                    duration: d,
                    class,
                    oracle_member: got,
                    set_member: expected,
                });
            }
        }
    }
    out
}

/// Deterministic small-model generator lives in `modelgen`; re-exported here
/// for discoverability alongside the oracle entry points.
pub use crate::modelgen::{random_model, GenConfig};

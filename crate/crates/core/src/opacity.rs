//! Top-level deciders and duration computations for parameter-free models.
//!
//! One machine answers everything: the duration sets of private and public
//! runs are computed exactly once, and every verdict is a Boolean-algebra
//! question over them. With an expiration bound, runs whose last private
//! visit happened more than the bound before completion count as non-secret.

use serde::Serialize;

use crate::durset::{DurationSet, NatSet};
use crate::model::{rescale_to_integers, DeltaBound, Model};
use crate::rat::{self, Rational};
use crate::region::FracClass;
use crate::tickgraph::{build_observer, explore, tick_table, ObserverMode};
use crate::{Budget, Error, RunClass};

/// Exact duration sets of a model; the expiring fields are present iff an
/// expiration bound was supplied.
#[derive(Clone, Debug)]
pub struct DurationReport {
    pub d_visit: DurationSet,
    pub d_avoid: DurationSet,
    pub d_secret: Option<DurationSet>,
    pub d_late: Option<DurationSet>,
    pub delta: Option<DeltaBound>,
    pub scale: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Exists,
    Weak,
    Full,
    ExistsExp,
    WeakExp,
    FullExp,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Exists => "exists",
            Problem::Weak => "weak",
            Problem::Full => "full",
            Problem::ExistsExp => "exists_exp",
            Problem::WeakExp => "weak_exp",
            Problem::FullExp => "full_exp",
        }
    }
}

/// Answer to one decision problem. For existential problems the witness is
/// a duration in the intersection (when the answer is yes); for weak/full
/// failures it is a duration separating the two sets.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    #[serde(serialize_with = "ser_problem")]
    pub problem: Problem,
    #[serde(serialize_with = "ser_delta")]
    pub delta: Option<DeltaBound>,
    pub answer: bool,
    #[serde(serialize_with = "ser_witness")]
    pub witness: Option<Rational>,
}

fn ser_problem<S: serde::Serializer>(p: &Problem, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(p.as_str())
}

fn ser_delta<S: serde::Serializer>(d: &Option<DeltaBound>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        None => s.serialize_none(),
        Some(d) => s.serialize_str(&d.to_string()),
    }
}

fn ser_witness<S: serde::Serializer>(w: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match w {
        None => s.serialize_none(),
        Some(w) => s.serialize_str(&rat::format_rational(w)),
    }
}

/// Computes the exact duration sets of `m`, which must be parameter-free
/// (apply a valuation first). Rescaling to integer constants happens
/// internally; the report's sets carry the scale.
pub fn duration_report(
    m: &Model,
    delta: Option<&DeltaBound>,
    budget: &Budget,
) -> Result<DurationReport, Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    let delta_in = delta.cloned().unwrap_or(DeltaBound::Infinite);
    let (scaled, scaled_delta, scale) = rescale_to_integers(m, &delta_in)?;
    let mode = match delta {
        None => ObserverMode::Plain,
        Some(_) => ObserverMode::Expiring(scaled_delta),
    };
    let observer = build_observer(&scaled, mode)?;
    let nfa = explore(&observer, budget)?;
    let table = tick_table(&nfa, budget)?;

    let mut entries: std::collections::BTreeMap<RunClass, Vec<(FracClass, NatSet)>> =
        Default::default();
    for (&state, &(class, frac)) in &nfa.accepting {
        entries
            .entry(class)
            .or_default()
            .push((frac, table.counts(state)));
    }
    let set_of = |class: RunClass| {
        DurationSet::from_annotations(scale, entries.get(&class).map_or(&[][..], |v| &v[..]))
    };

    let d_avoid = set_of(RunClass::Public);
    let report = match delta {
        None => DurationReport {
            d_visit: set_of(RunClass::Private),
            d_avoid,
            d_secret: None,
            d_late: None,
            delta: None,
            scale,
        },
        Some(d) => {
            let d_secret = set_of(RunClass::Secret);
            let d_late = set_of(RunClass::Late);
            DurationReport {
                d_visit: d_secret.union(&d_late),
                d_avoid,
                d_secret: Some(d_secret),
                d_late: Some(d_late),
                delta: Some(d.clone()),
                scale,
            }
        }
    };
    Ok(report)
}

fn verdict(problem: Problem, delta: Option<&DeltaBound>, answer: bool, witness: Option<Rational>) -> Verdict {
    Verdict {
        problem,
        delta: delta.cloned(),
        answer,
        witness,
    }
}

fn decide_from_sets(
    problem: Problem,
    delta: Option<&DeltaBound>,
    secret: &DurationSet,
    nonsecret: &DurationSet,
) -> Verdict {
    match problem {
        Problem::Exists | Problem::ExistsExp => {
            let meet = secret.intersect(nonsecret);
            let witness = meet.least_point();
            verdict(problem, delta, !meet.is_empty(), witness)
        }
        Problem::Weak | Problem::WeakExp => {
            let escape = secret.intersect(&nonsecret.complement());
            let witness = escape.least_point();
            verdict(problem, delta, escape.is_empty(), witness)
        }
        Problem::Full | Problem::FullExp => {
            let diff = secret
                .intersect(&nonsecret.complement())
                .union(&nonsecret.intersect(&secret.complement()));
            let witness = diff.least_point();
            verdict(problem, delta, diff.is_empty(), witness)
        }
    }
}

/// Is there any duration achieved both by a private and by a public run?
pub fn decide_exists(m: &Model, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, None, budget)?;
    Ok(decide_from_sets(Problem::Exists, None, &r.d_visit, &r.d_avoid))
}

/// Does every private duration also occur publicly?
pub fn decide_weak(m: &Model, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, None, budget)?;
    Ok(decide_from_sets(Problem::Weak, None, &r.d_visit, &r.d_avoid))
}

/// Do the private and public duration sets coincide?
pub fn decide_full(m: &Model, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, None, budget)?;
    Ok(decide_from_sets(Problem::Full, None, &r.d_visit, &r.d_avoid))
}

/// The maximal duration set on which the model is opaque: durations
/// achieved by both a private and a public run.
pub fn compute_opaque_times(m: &Model, budget: &Budget) -> Result<DurationSet, Error> {
    let r = duration_report(m, None, budget)?;
    Ok(r.d_visit.intersect(&r.d_avoid))
}

fn expiring_sides(r: &DurationReport) -> (DurationSet, DurationSet) {
    let secret = r.d_secret.clone().expect("expiring report");
    let late = r.d_late.clone().expect("expiring report");
    (secret, late.union(&r.d_avoid))
}

pub fn decide_exists_exp(m: &Model, delta: &DeltaBound, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, Some(delta), budget)?;
    let (secret, nonsecret) = expiring_sides(&r);
    Ok(decide_from_sets(Problem::ExistsExp, Some(delta), &secret, &nonsecret))
}

pub fn decide_weak_exp(m: &Model, delta: &DeltaBound, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, Some(delta), budget)?;
    let (secret, nonsecret) = expiring_sides(&r);
    Ok(decide_from_sets(Problem::WeakExp, Some(delta), &secret, &nonsecret))
}

pub fn decide_full_exp(m: &Model, delta: &DeltaBound, budget: &Budget) -> Result<Verdict, Error> {
    let r = duration_report(m, Some(delta), budget)?;
    let (secret, nonsecret) = expiring_sides(&r);
    Ok(decide_from_sets(Problem::FullExp, Some(delta), &secret, &nonsecret))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Weak,
    Full,
}

/// Samples the expiring verdict at `0, step, 2·step, …, max` and `inf`.
/// This is a sampling heuristic, not an exhaustive bound computation; the
/// rendering layer labels it as such.
pub fn sweep_delta(
    m: &Model,
    max: &Rational,
    step: &Rational,
    mode: SweepMode,
    budget: &Budget,
) -> Result<Vec<(DeltaBound, bool)>, Error> {
    use num_traits::Signed;
    if !step.is_positive() {
        return Err(Error::InvalidRational("sweep step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut k = 0i64;
    loop {
        let delta = rat::int(k) * step;
        if &delta > max {
            break;
        }
        let bound = DeltaBound::Finite(delta);
        let v = match mode {
            SweepMode::Weak => decide_weak_exp(m, &bound, budget)?,
            SweepMode::Full => decide_full_exp(m, &bound, budget)?,
        };
        out.push((bound, v.answer));
        k += 1;
    }
    let v = match mode {
        SweepMode::Weak => decide_weak_exp(m, &DeltaBound::Infinite, budget)?,
        SweepMode::Full => decide_full_exp(m, &DeltaBound::Infinite, budget)?,
    };
    out.push((DeltaBound::Infinite, v.answer));
    Ok(out)
}

//! Observer construction and region-graph exploration into a unary tick
//! automaton.
//!
//! The observer augments a parameter-free integer model with a tick clock
//! `t` (invariant `t ≤ 1` everywhere, a `t = 1` self-loop resetting it in
//! every non-final location), doubles locations with a visited-the-private-
//! location flag, and makes the final location absorbing so acceptance means
//! *first* entry. In expiring mode an extra clock is reset on every edge
//! into the private location; whether it exceeds the expiration bound at
//! acceptance separates secret from late runs.
//!
//! Exploring the observer's region graph yields a finite automaton over the
//! single letter `tick`; the number of tick firings along a path counts the
//! whole time units elapsed, and the tick clock's fractional class at
//! acceptance pins the remainder. Regions (rather than merged zones) keep
//! per-path tick counts exact: two paths meeting in one symbolic state have
//! identical futures.

use std::collections::HashMap;

use crate::durset::NatSet;
use crate::model::{
    max_constants, ClockId, Constraint, DeltaBound, Edge, LocId, Model, Relation,
};
use crate::rat;
use crate::region::{ClockPos, FracClass, GuardAtom, Region};
use crate::{Budget, Error, RunClass};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObserverMode {
    Plain,
    Expiring(DeltaBound),
}

/// The augmented model plus the bookkeeping the explorer needs.
#[derive(Clone, Debug)]
pub struct Observer {
    pub model: Model,
    pub tick_clock: ClockId,
    pub tick_action: String,
    /// Present only in expiring mode with a finite bound.
    pub expiring_clock: Option<ClockId>,
    /// Scaled integer bound when finite.
    pub delta: Option<u64>,
    pub caps: Vec<u64>,
    /// Per observer location: does it carry the private-visited flag?
    pub flags: Vec<bool>,
    /// Per observer location: is it a copy of the final location?
    pub finals: Vec<bool>,
    pub expiring: bool,
}

fn fresh_name(taken: &[String], base: &str) -> String {
    if !taken.iter().any(|n| n == base) {
        return base.to_string();
    }
    for i in 0.. {
        let cand = format!("{base}_{i}");
        if !taken.iter().any(|n| n == &cand) {
            return cand;
        }
    }
    unreachable!()
}

/// Builds the observer for a parameter-free model with integer constants.
/// `Expiring` with an infinite bound behaves exactly like `Plain` except
/// that accepting flagged runs are classified `Secret` instead of `Private`.
pub fn build_observer(m: &Model, mode: ObserverMode) -> Result<Observer, Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    let (expiring, delta) = match &mode {
        ObserverMode::Plain => (false, None),
        ObserverMode::Expiring(DeltaBound::Infinite) => (true, None),
        ObserverMode::Expiring(DeltaBound::Finite(d)) => {
            let dv = rat::to_u64(d).ok_or_else(|| {
                Error::InvalidModel("expiration bound must be a rescaled integer".into())
            })?;
            (true, Some(dv))
        }
    };

    let n = m.locations.len();
    let mut clocks = m.clocks.clone();
    let tick_name = fresh_name(&clocks, "t");
    clocks.push(tick_name.clone());
    let tick_clock = ClockId(clocks.len() - 1);
    let expiring_clock = if delta.is_some() {
        let y = fresh_name(&clocks, "y");
        clocks.push(y);
        Some(ClockId(clocks.len() - 1))
    } else {
        None
    };

    // Observer location 2*l + flag.
    let obs_loc = |l: LocId, flag: bool| LocId(2 * l.0 + flag as usize);
    let mut locations = Vec::with_capacity(2 * n);
    let mut invariants = Vec::with_capacity(2 * n);
    let mut flags = Vec::with_capacity(2 * n);
    let mut finals = Vec::with_capacity(2 * n);
    for (i, name) in m.locations.iter().enumerate() {
        for flag in [false, true] {
            locations.push(format!("{name}@{}", flag as u8));
            let mut inv = m.invariants[i].clone();
            inv.atoms.push(crate::model::AtomicConstraint::simple(
                tick_clock,
                Relation::Le,
                rat::int(1),
            ));
            invariants.push(inv);
            flags.push(flag);
            finals.push(LocId(i) == m.final_loc);
        }
    }

    let mut out = Model {
        actions: m.actions.clone(),
        locations,
        clocks,
        params: Vec::new(),
        init: obs_loc(m.init, false),
        private: obs_loc(m.private, true),
        final_loc: obs_loc(m.final_loc, true),
        invariants,
        edges: Vec::new(),
    };
    let tick_action_id = out.intern_action(&fresh_name(&m.actions, "tick"));
    let tick_action = out.actions[tick_action_id.0].clone();

    for e in &m.edges {
        if e.source == m.final_loc {
            continue; // absorbing: durations stop at first entry
        }
        let into_private = e.target == m.private;
        let mut resets = e.resets.clone();
        if into_private {
            if let Some(y) = expiring_clock {
                resets.insert(y);
            }
        }
        for flag in [false, true] {
            out.edges.push(Edge {
                source: obs_loc(e.source, flag),
                guard: e.guard.clone(),
                action: e.action,
                resets: resets.clone(),
                target: obs_loc(e.target, flag || into_private),
            });
        }
    }
    // Tick self-loops everywhere except on final copies.
    for l in 0..out.locations.len() {
        if finals[l] {
            continue;
        }
        let mut guard = Constraint::truth();
        guard
            .atoms
            .push(crate::model::AtomicConstraint::simple(
                tick_clock,
                Relation::Eq,
                rat::int(1),
            ));
        out.edges.push(Edge {
            source: LocId(l),
            guard,
            action: tick_action_id,
            resets: [tick_clock].into_iter().collect(),
            target: LocId(l),
        });
    }

    let delta_bound = match delta {
        Some(d) => DeltaBound::Finite(rat::int(d as i64)),
        None => DeltaBound::Infinite,
    };
    let caps = max_constants(&out, &delta_bound, expiring_clock)?;
    Ok(Observer {
        model: out,
        tick_clock,
        tick_action,
        expiring_clock,
        delta,
        caps,
        flags,
        finals,
        expiring,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Eps,
    Tick,
}

/// A reached (location, region) pair of the observer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub loc: LocId,
    pub flag: bool,
    pub region: Region,
}

/// Finite automaton over the tick letter with classified accepting states.
#[derive(Clone, Debug)]
pub struct TickNfa {
    pub initial: usize,
    pub states: Vec<SymbolicState>,
    /// Human-readable per-state labels for debugging dumps.
    pub labels: Vec<String>,
    pub transitions: Vec<(usize, Letter, usize)>,
    /// State → classification; accepting states are exactly the first
    /// entries of the final location.
    pub accepting: std::collections::BTreeMap<usize, (RunClass, FracClass)>,
}

fn lower_constraint(c: &Constraint) -> Vec<GuardAtom> {
    c.atoms
        .iter()
        .map(|a| {
            let k = rat::to_i64(&a.constant).expect("constraint not integer-rescaled");
            (a.clock.0, a.rel, k)
        })
        .collect()
}

fn region_label(o: &Observer, r: &Region) -> String {
    let mut parts = Vec::new();
    for (i, name) in o.model.clocks.iter().enumerate() {
        let s = match r.clock_pos(i) {
            ClockPos::Above => format!("{name}>{}", o.caps[i]),
            ClockPos::At { int, frac_zero } => {
                if frac_zero {
                    format!("{name}={int}")
                } else {
                    format!("{name}in({int},{})", int + 1)
                }
            }
        };
        parts.push(s);
    }
    parts.join(",")
}

/// Explores the reachable region graph of the observer. Termination is
/// guaranteed by region finiteness; the budget guards against configuration
/// mistakes.
pub fn explore(o: &Observer, budget: &Budget) -> Result<TickNfa, Error> {
    let m = &o.model;
    let invariants: Vec<Vec<GuardAtom>> = m.invariants.iter().map(lower_constraint).collect();
    let guards: Vec<Vec<GuardAtom>> = m.edges.iter().map(|e| lower_constraint(&e.guard)).collect();
    let resets: Vec<Vec<usize>> = m
        .edges
        .iter()
        .map(|e| e.resets.iter().map(|c| c.0).collect())
        .collect();
    let edges_from: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); m.locations.len()];
        for (i, e) in m.edges.iter().enumerate() {
            v[e.source.0].push(i);
        }
        v
    };

    let mut index: HashMap<(LocId, Region), usize> = HashMap::new();
    let mut states: Vec<SymbolicState> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut transitions: Vec<(usize, Letter, usize)> = Vec::new();
    let mut accepting = std::collections::BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();

    let classify = |loc: LocId, region: &Region| -> Option<(RunClass, FracClass)> {
        if !o.finals[loc.0] {
            return None;
        }
        let frac = region.t_class(o.tick_clock.0);
        let class = if !o.flags[loc.0] {
            RunClass::Public
        } else if !o.expiring {
            RunClass::Private
        } else {
            match o.expiring_clock {
                // Finite bound: above the bound's cap means the last private
                // visit expired before completion.
                Some(y) => match region.clock_pos(y.0) {
                    ClockPos::Above => RunClass::Late,
                    ClockPos::At { .. } => RunClass::Secret,
                },
                None => RunClass::Secret,
            }
        };
        Some((class, frac))
    };

    let init_region = Region::initial(m.clocks.len());
    if !init_region.satisfies(&invariants[m.init.0]) {
        // Initial state violates its own invariant: no runs at all.
        return Ok(TickNfa {
            initial: 0,
            states: vec![SymbolicState {
                loc: m.init,
                flag: false,
                region: init_region.clone(),
            }],
            labels: vec![format!(
                "{} | {}",
                m.locations[m.init.0],
                region_label(o, &init_region)
            )],
            transitions: Vec::new(),
            accepting,
        });
    }

    let add_state = |loc: LocId,
                         region: Region,
                         index: &mut HashMap<(LocId, Region), usize>,
                         states: &mut Vec<SymbolicState>,
                         labels: &mut Vec<String>,
                         queue: &mut std::collections::VecDeque<usize>|
     -> usize {
        if let Some(&id) = index.get(&(loc, region.clone())) {
            return id;
        }
        let id = states.len();
        labels.push(format!(
            "{} | {}",
            m.locations[loc.0],
            region_label(o, &region)
        ));
        states.push(SymbolicState {
            loc,
            flag: o.flags[loc.0],
            region: region.clone(),
        });
        index.insert((loc, region), id);
        queue.push_back(id);
        id
    };

    let initial = add_state(
        m.init,
        init_region,
        &mut index,
        &mut states,
        &mut labels,
        &mut queue,
    );

    while let Some(id) = queue.pop_front() {
        if states.len() as u64 > budget.states {
            return Err(Error::BudgetExceeded {
                states: states.len() as u64,
            });
        }
        let (loc, region) = (states[id].loc, states[id].region.clone());
        if let Some(cls) = classify(loc, &region) {
            accepting.insert(id, cls);
            continue; // final copies are absorbing
        }
        // Time flow within the location.
        if let Some(next) = region.delay_successor(&o.caps) {
            if next.satisfies(&invariants[loc.0]) {
                let to = add_state(loc, next, &mut index, &mut states, &mut labels, &mut queue);
                transitions.push((id, Letter::Eps, to));
            }
        }
        // Discrete edges.
        for &ei in &edges_from[loc.0] {
            let e = &m.edges[ei];
            let Some(next) = region.discrete_successor(&guards[ei], &resets[ei]) else {
                continue;
            };
            if !next.satisfies(&invariants[e.target.0]) {
                continue;
            }
            let letter = if m.actions[e.action.0] == o.tick_action {
                Letter::Tick
            } else {
                Letter::Eps
            };
            let to = add_state(
                e.target,
                next,
                &mut index,
                &mut states,
                &mut labels,
                &mut queue,
            );
            transitions.push((id, letter, to));
        }
    }

    Ok(TickNfa {
        initial,
        states,
        labels,
        transitions,
        accepting,
    })
}

/// Reachability of every state per tick count: explicit below `threshold`,
/// then periodic with `period`. Computed by iterating the subset
/// construction one tick at a time until the subset repeats, which makes the
/// extracted sets exact for all states at once.
#[derive(Clone, Debug)]
pub struct TickTable {
    pub threshold: u64,
    pub period: u64,
    /// `members[k][state]` for `k < threshold + period`.
    members: Vec<Vec<bool>>,
}

impl TickTable {
    pub fn counts(&self, state: usize) -> NatSet {
        let initial = (0..self.threshold)
            .filter(|&k| self.members[k as usize][state])
            .collect();
        let base = (self.threshold..self.threshold + self.period)
            .filter(|&k| self.members[k as usize][state])
            .collect();
        NatSet {
            initial,
            threshold: self.threshold,
            period: self.period,
            base,
        }
    }
}

fn eps_closure(set: &mut Vec<bool>, eps: &[Vec<usize>]) {
    let mut stack: Vec<usize> = set
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    while let Some(s) = stack.pop() {
        for &n in &eps[s] {
            if !set[n] {
                set[n] = true;
                stack.push(n);
            }
        }
    }
}

pub fn tick_table(nfa: &TickNfa, budget: &Budget) -> Result<TickTable, Error> {
    let n = nfa.states.len();
    let mut eps = vec![Vec::new(); n];
    let mut tick = vec![Vec::new(); n];
    for &(a, letter, b) in &nfa.transitions {
        match letter {
            Letter::Eps => eps[a].push(b),
            Letter::Tick => tick[a].push(b),
        }
    }
    let mut cur = vec![false; n];
    cur[nfa.initial] = true;
    eps_closure(&mut cur, &eps);

    let mut seen: HashMap<Vec<bool>, u64> = HashMap::new();
    let mut members: Vec<Vec<bool>> = Vec::new();
    let (threshold, period) = loop {
        if let Some(&first) = seen.get(&cur) {
            break (first, members.len() as u64 - first);
        }
        if members.len() as u64 > budget.states {
            return Err(Error::BudgetExceeded {
                states: members.len() as u64,
            });
        }
        seen.insert(cur.clone(), members.len() as u64);
        members.push(cur.clone());
        let mut next = vec![false; n];
        for (s, &b) in cur.iter().enumerate() {
            if b {
                for &t in &tick[s] {
                    next[t] = true;
                }
            }
        }
        eps_closure(&mut next, &eps);
        cur = next;
    };
    members.truncate((threshold + period) as usize);
    Ok(TickTable {
        threshold,
        period,
        members,
    })
}

/// Exact set of tick counts with which `state` is reachable.
pub fn tick_counts(nfa: &TickNfa, state: usize, budget: &Budget) -> Result<NatSet, Error> {
    Ok(tick_table(nfa, budget)?.counts(state))
}

/// One line per transition, then one line per accepting state.
pub fn dump_graph(nfa: &TickNfa) -> String {
    let mut out = String::new();
    for (i, label) in nfa.labels.iter().enumerate() {
        out.push_str(&format!("state {i}: {label}\n"));
    }
    for &(a, letter, b) in &nfa.transitions {
        let l = match letter {
            Letter::Eps => "eps",
            Letter::Tick => "tick",
        };
        out.push_str(&format!("{a} -{l}-> {b}\n"));
    }
    for (s, (class, frac)) in &nfa.accepting {
        out.push_str(&format!("accept {s}: {class} {frac:?}\n"));
    }
    out
}

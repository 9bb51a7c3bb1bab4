//! Exact-rational convex polyhedra over clocks and parameters, parametric
//! reachability synthesis, and the self-composition workflow that reduces
//! existential opacity synthesis to reachability.
//!
//! Polyhedra are kept in constraint (half-space) form only; satisfiability,
//! inclusion and projection all reduce to Fourier–Motzkin elimination with
//! exact rational arithmetic. A derived constraint is strict iff any parent
//! is strict.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::model::{
    apply_valuation, classify_lu, Constraint, Edge, LocId, LuVerdict, Model, ParamValuation,
    Relation, Role,
};
use crate::opacity::decide_exists;
use crate::rat::{self, Rational};
use crate::{Budget, Error};

/// One inequality `Σ coeffs·v (≤ | <) bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRow {
    pub coeffs: Vec<Rational>,
    pub strict: bool,
    pub bound: Rational,
}

impl LinearRow {
    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn constant_holds(&self) -> bool {
        if self.strict {
            self.bound.is_positive()
        } else {
            !self.bound.is_negative()
        }
    }

    /// Scales to integer coefficients with gcd 1.
    fn normalized(mut self) -> Self {
        let denoms = self
            .coeffs
            .iter()
            .chain(std::iter::once(&self.bound))
            .map(|c| c.denom().clone());
        let mut lcm = num_bigint::BigInt::from(1);
        for d in denoms {
            lcm = lcm.lcm(&d);
        }
        let factor = Rational::from_integer(lcm);
        for c in &mut self.coeffs {
            *c *= &factor;
        }
        self.bound *= &factor;
        let mut gcd = num_bigint::BigInt::from(0);
        for c in self.coeffs.iter().chain(std::iter::once(&self.bound)) {
            gcd = gcd.gcd(c.numer());
        }
        if !gcd.is_zero() && gcd != num_bigint::BigInt::from(1) {
            let factor = Rational::from_integer(gcd);
            for c in &mut self.coeffs {
                *c /= &factor;
            }
            self.bound /= &factor;
        }
        self
    }

    fn negated(&self) -> LinearRow {
        LinearRow {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            strict: !self.strict,
            bound: -self.bound.clone(),
        }
    }
}

/// Convex constraint set over an ordered variable list (clocks, then
/// parameters). Immutable; operations return fresh values.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    vars: Vec<String>,
    n_clocks: usize,
    rows: Vec<LinearRow>,
    empty_cache: OnceLock<bool>,
}

fn false_row(dim: usize) -> LinearRow {
    LinearRow {
        coeffs: vec![rat::int(0); dim],
        strict: true,
        bound: rat::int(0),
    }
}

fn canonicalize(dim: usize, rows: Vec<LinearRow>) -> Vec<LinearRow> {
    let mut best: HashMap<Vec<Rational>, LinearRow> = HashMap::new();
    for row in rows {
        let row = row.normalized();
        if row.is_constant() {
            if row.constant_holds() {
                continue;
            }
            return vec![false_row(dim)];
        }
        match best.get(&row.coeffs) {
            Some(prev)
                if prev.bound < row.bound
                    || (prev.bound == row.bound && (prev.strict || !row.strict)) => {}
            _ => {
                best.insert(row.coeffs.clone(), row);
            }
        }
    }
    let mut out: Vec<LinearRow> = best.into_values().collect();
    out.sort_by(|a, b| (&a.coeffs, a.strict, &a.bound).cmp(&(&b.coeffs, b.strict, &b.bound)));
    out
}

fn eliminate(dim: usize, rows: &[LinearRow], var: usize) -> Vec<LinearRow> {
    let mut kept = Vec::new();
    let mut uppers = Vec::new(); // positive coefficient on `var`
    let mut lowers = Vec::new(); // negative
    for r in rows {
        let c = &r.coeffs[var];
        if c.is_zero() {
            kept.push(r.clone());
        } else if c.is_positive() {
            uppers.push(r.clone());
        } else {
            lowers.push(r.clone());
        }
    }
    for u in &uppers {
        for l in &lowers {
            let a = u.coeffs[var].clone();
            let b = -l.coeffs[var].clone();
            // b·u + a·l cancels `var`.
            let coeffs = u
                .coeffs
                .iter()
                .zip(&l.coeffs)
                .map(|(cu, cl)| cu * &b + cl * &a)
                .collect();
            kept.push(LinearRow {
                coeffs,
                strict: u.strict || l.strict,
                bound: &u.bound * &b + &l.bound * &a,
            });
        }
    }
    canonicalize(dim, kept)
}

impl Polyhedron {
    pub fn universe(vars: Vec<String>, n_clocks: usize) -> Self {
        Polyhedron {
            vars,
            n_clocks,
            rows: Vec::new(),
            empty_cache: OnceLock::new(),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    fn with_rows(&self, rows: Vec<LinearRow>) -> Self {
        Polyhedron {
            vars: self.vars.clone(),
            n_clocks: self.n_clocks,
            rows: canonicalize(self.vars.len(), rows),
            empty_cache: OnceLock::new(),
        }
    }

    /// Conjunction with raw rows.
    pub fn meet_rows(&self, extra: impl IntoIterator<Item = LinearRow>) -> Self {
        let mut rows = self.rows.clone();
        rows.extend(extra);
        self.with_rows(rows)
    }

    /// Conjunction with another polyhedron over the same variables.
    pub fn meet(&self, other: &Polyhedron) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        self.meet_rows(other.rows.iter().cloned())
    }

    /// Conjunction with a model constraint (guard or invariant).
    pub fn meet_constraint(&self, c: &Constraint) -> Self {
        let np = self.vars.len() - self.n_clocks;
        let mut rows = Vec::new();
        for a in &c.atoms {
            let mut coeffs = vec![rat::int(0); self.vars.len()];
            let (sign, strict) = match a.rel {
                Relation::Le => (1, false),
                Relation::Lt => (1, true),
                Relation::Ge => (-1, false),
                Relation::Gt => (-1, true),
                Relation::Eq => (0, false),
            };
            if sign == 0 {
                // Equality: both directions.
                for dir in [1i64, -1] {
                    let mut coeffs = vec![rat::int(0); self.vars.len()];
                    coeffs[a.clock.0] = rat::int(dir);
                    for (p, alpha) in &a.coeffs {
                        debug_assert!(p.0 < np);
                        coeffs[self.n_clocks + p.0] = rat::int(-dir * alpha);
                    }
                    rows.push(LinearRow {
                        coeffs,
                        strict: false,
                        bound: rat::int(dir) * &a.constant,
                    });
                }
                continue;
            }
            coeffs[a.clock.0] = rat::int(sign);
            for (p, alpha) in &a.coeffs {
                debug_assert!(p.0 < np);
                coeffs[self.n_clocks + p.0] = rat::int(-sign * alpha);
            }
            rows.push(LinearRow {
                coeffs,
                strict,
                bound: rat::int(sign) * &a.constant,
            });
        }
        self.meet_rows(rows)
    }

    /// Future closure: every clock drifts by the same non-negative amount;
    /// parameters are unaffected.
    pub fn elapse(&self) -> Self {
        let dim = self.vars.len();
        let mut rows: Vec<LinearRow> = self
            .rows
            .iter()
            .map(|r| {
                let mut coeffs = r.coeffs.clone();
                let drift: Rational = -r.coeffs[..self.n_clocks]
                    .iter()
                    .fold(rat::int(0), |acc, c| acc + c);
                coeffs.push(drift);
                LinearRow {
                    coeffs,
                    strict: r.strict,
                    bound: r.bound.clone(),
                }
            })
            .collect();
        // delay ≥ 0
        let mut nonneg = vec![rat::int(0); dim + 1];
        nonneg[dim] = rat::int(-1);
        rows.push(LinearRow {
            coeffs: nonneg,
            strict: false,
            bound: rat::int(0),
        });
        let eliminated = eliminate(dim + 1, &rows, dim);
        let rows = eliminated
            .into_iter()
            .map(|mut r| {
                debug_assert!(r.coeffs[dim].is_zero());
                r.coeffs.truncate(dim);
                r
            })
            .collect();
        self.with_rows(rows)
    }

    /// Resets the given clocks to 0 (eliminate, then pin).
    pub fn reset(&self, clocks: &[usize]) -> Self {
        let dim = self.vars.len();
        let mut rows = self.rows.clone();
        for &c in clocks {
            rows = eliminate(dim, &rows, c);
            for dir in [1i64, -1] {
                let mut coeffs = vec![rat::int(0); dim];
                coeffs[c] = rat::int(dir);
                rows.push(LinearRow {
                    coeffs,
                    strict: false,
                    bound: rat::int(0),
                });
            }
        }
        self.with_rows(rows)
    }

    pub fn is_empty(&self) -> bool {
        *self.empty_cache.get_or_init(|| {
            let dim = self.vars.len();
            let mut rows = self.rows.clone();
            for v in 0..dim {
                rows = eliminate(dim, &rows, v);
                if rows.iter().any(|r| r.is_constant() && !r.constant_holds()) {
                    return true;
                }
            }
            rows.iter().any(|r| !r.constant_holds())
        })
    }

    /// Projects onto the parameter coordinates.
    pub fn project_params(&self) -> Self {
        let dim = self.vars.len();
        let mut rows = self.rows.clone();
        for c in 0..self.n_clocks {
            rows = eliminate(dim, &rows, c);
        }
        let rows = rows
            .into_iter()
            .map(|r| LinearRow {
                coeffs: r.coeffs[self.n_clocks..].to_vec(),
                strict: r.strict,
                bound: r.bound,
            })
            .collect();
        Polyhedron {
            vars: self.vars[self.n_clocks..].to_vec(),
            n_clocks: 0,
            rows: canonicalize(dim - self.n_clocks, rows),
            empty_cache: OnceLock::new(),
        }
    }

    /// Does `self` contain `other` (as solution sets)?
    pub fn includes(&self, other: &Polyhedron) -> bool {
        debug_assert_eq!(self.vars, other.vars);
        self.rows
            .iter()
            .all(|r| other.meet_rows([r.negated()]).is_empty())
    }

    pub fn contains_point(&self, point: &[Rational]) -> bool {
        self.rows.iter().all(|r| {
            let lhs = r
                .coeffs
                .iter()
                .zip(point)
                .fold(rat::int(0), |acc, (c, v)| acc + c * v);
            if r.strict {
                lhs < r.bound
            } else {
                lhs <= r.bound
            }
        })
    }

    /// Drops rows entailed by the rest of the system together with `ambient`
    /// (e.g. parameter non-negativity).
    fn without_redundant_rows(&self, ambient: &[LinearRow]) -> Self {
        let mut rows = self.rows.clone();
        let mut i = 0;
        while i < rows.len() {
            let candidate = rows[i].clone();
            let mut rest: Vec<LinearRow> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| r.clone())
                .collect();
            rest.extend(ambient.iter().cloned());
            rest.push(candidate.negated());
            let test = Polyhedron {
                vars: self.vars.clone(),
                n_clocks: self.n_clocks,
                rows: canonicalize(self.vars.len(), rest),
                empty_cache: OnceLock::new(),
            };
            if test.is_empty() {
                rows.remove(i);
            } else {
                i += 1;
            }
        }
        self.with_rows(rows)
    }

    /// Human-readable inequality strings, positive terms on the left.
    pub fn to_strings(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let term = |c: &Rational, name: &str| {
                    if *c == rat::int(1) {
                        name.to_string()
                    } else {
                        format!("{}*{}", rat::format_rational(c), name)
                    }
                };
                let mut lhs = Vec::new();
                let mut rhs = Vec::new();
                for (i, c) in r.coeffs.iter().enumerate() {
                    if c.is_positive() {
                        lhs.push(term(c, &self.vars[i]));
                    } else if c.is_negative() {
                        rhs.push(term(&-c.clone(), &self.vars[i]));
                    }
                }
                let mut rhs_str = rhs.join(" + ");
                if rhs_str.is_empty() {
                    rhs_str = rat::format_rational(&r.bound);
                } else if r.bound.is_positive() {
                    rhs_str = format!("{rhs_str} + {}", rat::format_rational(&r.bound));
                } else if r.bound.is_negative() {
                    rhs_str = format!("{rhs_str} - {}", rat::format_rational(&-r.bound.clone()));
                }
                let lhs_str = if lhs.is_empty() {
                    "0".to_string()
                } else {
                    lhs.join(" + ")
                };
                format!("{lhs_str} {} {rhs_str}", if r.strict { "<" } else { "<=" })
            })
            .collect()
    }
}

/// Finite union of parameter polyhedra.
#[derive(Clone, Debug)]
pub struct ParamConstraint {
    pub param_names: Vec<String>,
    pub disjuncts: Vec<Polyhedron>,
}

impl ParamConstraint {
    pub fn none(param_names: Vec<String>) -> Self {
        ParamConstraint {
            param_names,
            disjuncts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        self.disjuncts.iter().any(|d| d.contains_point(point))
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.disjuncts.iter().map(|d| d.to_strings()).collect()
    }

    fn simplified(mut self) -> Self {
        // Non-negativity of parameters is ambient: rows implied by it are
        // noise in the output.
        let dim = self.param_names.len();
        let ambient: Vec<LinearRow> = (0..dim)
            .map(|i| {
                let mut coeffs = vec![rat::int(0); dim];
                coeffs[i] = rat::int(-1);
                LinearRow {
                    coeffs,
                    strict: false,
                    bound: rat::int(0),
                }
            })
            .collect();
        let mut kept: Vec<Polyhedron> = Vec::new();
        self.disjuncts.retain(|d| !d.is_empty());
        for d in &self.disjuncts {
            if kept.iter().any(|k| k.includes(d)) {
                continue;
            }
            kept.retain(|k| !d.includes(k));
            kept.push(d.clone());
        }
        self.disjuncts = kept
            .into_iter()
            .map(|d| d.without_redundant_rows(&ambient))
            .collect();
        self
    }
}

/// The self-composed product used for existential opacity synthesis.
#[derive(Clone, Debug)]
pub struct SelfComposition {
    pub product: Model,
    pub target: LocId,
}

/// Builds the product of the flag-doubled model (copy A, clocks renamed
/// `·1`) with a copy whose private location is removed (copy B, `·2`),
/// sharing parameters and the global time flow. Both copies' final
/// locations freeze time on entry (a fresh clock reset on entering edges,
/// pinned at 0 by the invariant), so the synchronized `finish` action can
/// only fire when both copies reached their final location after the same
/// total duration. The target is the end state with the private flag set.
pub fn self_compose(m: &Model) -> SelfComposition {
    let n = m.locations.len();
    let nx = m.clocks.len();
    // B-side indices: original locations (private unused) plus End at `n`.
    let b_count = n + 1;
    let b_end = n;
    // A-side indices: (loc, flag) as 2l+f, plus End copies.
    let a_count = 2 * n + 2;
    let a_of = |l: usize, f: usize| 2 * l + f;
    let a_end = |f: usize| 2 * n + f;

    let mut clocks: Vec<String> = Vec::with_capacity(2 * nx + 2);
    for c in &m.clocks {
        clocks.push(format!("{c}.1"));
    }
    for c in &m.clocks {
        clocks.push(format!("{c}.2"));
    }
    clocks.push("fz.1".into());
    clocks.push("fz.2".into());
    let fz1 = 2 * nx;
    let fz2 = 2 * nx + 1;

    let a_name = |a: usize| -> String {
        if a >= 2 * n {
            format!("end@{}", a - 2 * n)
        } else {
            format!("{}@{}", m.locations[a / 2], a % 2)
        }
    };
    let b_name = |b: usize| -> String {
        if b == b_end {
            "end".into()
        } else {
            m.locations[b].clone()
        }
    };

    let prod = |a: usize, b: usize| LocId(a * b_count + b);
    let mut locations = Vec::with_capacity(a_count * b_count);
    for a in 0..a_count {
        for b in 0..b_count {
            locations.push(format!("A:{}|B:{}", a_name(a), b_name(b)));
        }
    }

    let rename = |c: &Constraint, offset: usize| Constraint {
        atoms: c
            .atoms
            .iter()
            .map(|at| {
                let mut at = at.clone();
                at.clock = crate::model::ClockId(at.clock.0 + offset);
                at
            })
            .collect(),
    };
    let freeze_atom = |clock: usize| {
        crate::model::AtomicConstraint::simple(
            crate::model::ClockId(clock),
            Relation::Le,
            rat::int(0),
        )
    };

    let mut invariants = Vec::with_capacity(a_count * b_count);
    for a in 0..a_count {
        for b in 0..b_count {
            let mut inv = Constraint::truth();
            if a < 2 * n {
                inv.atoms.extend(rename(&m.invariants[a / 2], 0).atoms);
                if a / 2 == m.final_loc.0 {
                    inv.atoms.push(freeze_atom(fz1));
                }
            }
            if b != b_end {
                inv.atoms.extend(rename(&m.invariants[b], nx).atoms);
                if b == m.final_loc.0 {
                    inv.atoms.push(freeze_atom(fz2));
                }
            }
            invariants.push(inv);
        }
    }

    let mut product = Model {
        actions: Vec::new(),
        locations,
        clocks,
        params: m.params.clone(),
        init: prod(a_of(m.init.0, 0), m.init.0),
        private: prod(a_end(0), b_end),
        final_loc: prod(a_end(1), b_end),
        invariants,
        edges: Vec::new(),
    };

    // Copy A moves (interleaving: B stays anywhere it can actually be).
    for e in &m.edges {
        if e.source == m.final_loc {
            continue;
        }
        let into_private = e.target == m.private;
        let into_final = e.target == m.final_loc;
        let action = product.intern_action(&format!("{}.1", m.actions[e.action.0]));
        for f in 0..2usize {
            let tf = if into_private { 1 } else { f };
            for b in (0..n).filter(|&b| b != m.private.0) {
                let mut resets: std::collections::BTreeSet<crate::model::ClockId> =
                    e.resets.iter().map(|c| crate::model::ClockId(c.0)).collect();
                if into_final {
                    resets.insert(crate::model::ClockId(fz1));
                }
                product.edges.push(Edge {
                    source: prod(a_of(e.source.0, f), b),
                    guard: rename(&e.guard, 0),
                    action,
                    resets,
                    target: prod(a_of(e.target.0, tf), b),
                });
            }
        }
    }
    // Copy B moves (private removed).
    for e in &m.edges {
        if e.source == m.final_loc || e.source == m.private || e.target == m.private {
            continue;
        }
        let into_final = e.target == m.final_loc;
        let action = product.intern_action(&format!("{}.2", m.actions[e.action.0]));
        for a in 0..2 * n {
            let mut resets: std::collections::BTreeSet<crate::model::ClockId> = e
                .resets
                .iter()
                .map(|c| crate::model::ClockId(c.0 + nx))
                .collect();
            if into_final {
                resets.insert(crate::model::ClockId(fz2));
            }
            product.edges.push(Edge {
                source: prod(a, e.source.0),
                guard: rename(&e.guard, nx),
                action,
                resets,
                target: prod(a, e.target.0),
            });
        }
    }
    // Synchronized finish from both final locations to the end pair.
    let finish = product.intern_action("finish");
    for f in 0..2usize {
        product.edges.push(Edge {
            source: prod(a_of(m.final_loc.0, f), m.final_loc.0),
            guard: Constraint::truth(),
            action: finish,
            resets: Default::default(),
            target: prod(a_end(f), b_end),
        });
    }

    let target = product.final_loc;
    SelfComposition { product, target }
}

/// Parametric reachability synthesis by symbolic exploration with
/// subsumption pruning: accumulate the parameter projections of every
/// symbolic state at the target location. `complete` is false when a depth
/// or state budget stopped the fixpoint, making the result an
/// under-approximation.
pub fn synth_reach(
    m: &Model,
    target: LocId,
    depth_limit: Option<usize>,
    prune: bool,
    budget: &Budget,
) -> Result<(ParamConstraint, bool), Error> {
    let nx = m.clocks.len();
    let mut vars = m.clocks.clone();
    vars.extend(m.params.iter().cloned());
    let universe = Polyhedron::universe(vars, nx);

    // Initial state: clocks 0, parameters non-negative, then time flow
    // inside the initial invariant.
    let mut rows = Vec::new();
    for c in 0..nx {
        for dir in [1i64, -1] {
            let mut coeffs = vec![rat::int(0); universe.vars.len()];
            coeffs[c] = rat::int(dir);
            rows.push(LinearRow {
                coeffs,
                strict: false,
                bound: rat::int(0),
            });
        }
    }
    for p in 0..m.params.len() {
        let mut coeffs = vec![rat::int(0); universe.vars.len()];
        coeffs[nx + p] = rat::int(-1);
        rows.push(LinearRow {
            coeffs,
            strict: false,
            bound: rat::int(0),
        });
    }
    let init_poly = universe
        .meet_rows(rows)
        .meet_constraint(&m.invariants[m.init.0])
        .elapse()
        .meet_constraint(&m.invariants[m.init.0]);

    let edges_from: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); m.locations.len()];
        for (i, e) in m.edges.iter().enumerate() {
            v[e.source.0].push(i);
        }
        v
    };

    let mut results: Vec<Polyhedron> = Vec::new();
    let mut passed: HashMap<usize, Vec<Polyhedron>> = HashMap::new();
    let mut queue: VecDeque<(LocId, Polyhedron, usize)> = VecDeque::new();
    let mut complete = true;
    let mut explored: u64 = 0;
    if !init_poly.is_empty() {
        queue.push_back((m.init, init_poly, 0));
    }

    while let Some((loc, poly, depth)) = queue.pop_front() {
        if loc == target {
            let proj = poly.project_params();
            if !proj.is_empty() {
                results.push(proj);
            }
            continue;
        }
        if prune {
            if let Some(seen) = passed.get(&loc.0) {
                if seen.iter().any(|s| s.includes(&poly)) {
                    continue;
                }
            }
        }
        passed.entry(loc.0).or_default().push(poly.clone());
        explored += 1;
        if explored > budget.states {
            complete = false;
            break;
        }
        if let Some(limit) = depth_limit {
            if depth >= limit {
                complete = false;
                continue;
            }
        }
        for &ei in &edges_from[loc.0] {
            let e = &m.edges[ei];
            let guarded = poly.meet_constraint(&e.guard);
            if guarded.is_empty() {
                continue;
            }
            let resets: Vec<usize> = e.resets.iter().map(|c| c.0).collect();
            let stepped = guarded
                .reset(&resets)
                .meet_constraint(&m.invariants[e.target.0])
                .elapse()
                .meet_constraint(&m.invariants[e.target.0]);
            if !stepped.is_empty() {
                queue.push_back((e.target, stepped, depth + 1));
            }
        }
    }

    let constraint = ParamConstraint {
        param_names: m.params.clone(),
        disjuncts: results,
    }
    .simplified();
    Ok((constraint, complete))
}

/// Parameter valuations under which the model admits a duration achieved by
/// both a private and a public run: self-composition followed by
/// reachability synthesis of the contradictory-flag end state.
pub fn synth_exists_opaque(
    m: &Model,
    depth_limit: Option<usize>,
    budget: &Budget,
) -> Result<(ParamConstraint, bool), Error> {
    let comp = self_compose(m);
    synth_reach(&comp.product, comp.target, depth_limit, true, budget)
}

/// Decides non-emptiness of the existential-opacity valuation set for a
/// lower/upper model via its extremal instance: lower-bound parameters at
/// 0, constraints still mentioning (upper-bound) parameters dropped.
/// Relaxing bounds only adds runs, so both duration sets grow monotonically
/// and the extremal instance witnesses non-emptiness exactly.
pub fn lu_exists_nonempty(m: &Model, budget: &Budget) -> Result<bool, Error> {
    let roles = match classify_lu(m) {
        LuVerdict::Lu(roles) => roles,
        LuVerdict::Violation { context, param, .. } => {
            return Err(Error::NotLowerUpper(format!(
                "parameter `{}` used with conflicting bound roles in {context}",
                m.params[param.0]
            )))
        }
    };
    let transform = |c: &Constraint| Constraint {
        atoms: c
            .atoms
            .iter()
            .filter_map(|a| {
                let mut a = a.clone();
                a.coeffs.retain(|p, coef| {
                    *coef != 0 && roles.get(p) != Some(&Role::Lower)
                });
                if a.coeffs.is_empty() {
                    Some(a)
                } else {
                    None // an upper-bound parameter pushed to infinity
                }
            })
            .collect(),
    };
    let mut extremal = m.clone();
    extremal.params = Vec::new();
    extremal.invariants = m.invariants.iter().map(transform).collect();
    extremal.edges = m
        .edges
        .iter()
        .map(|e| Edge {
            guard: transform(&e.guard),
            ..e.clone()
        })
        .collect();
    Ok(decide_exists(&extremal, budget)?.answer)
}

/// Grid re-check used by tests and callers: every sampled grid point inside
/// the constraint must be existentially opaque, and (for a complete
/// synthesis) every point outside must not be.
pub fn check_synth_against_decider(
    m: &Model,
    constraint: &ParamConstraint,
    complete: bool,
    grid: &[Vec<Rational>],
    budget: &Budget,
) -> Result<bool, Error> {
    for point in grid {
        let pairs: Vec<(String, Rational)> = m
            .params
            .iter()
            .cloned()
            .zip(point.iter().cloned())
            .collect();
        let v = ParamValuation::from_pairs(m, &pairs)?;
        let inst = apply_valuation(m, &v)?;
        let decided = decide_exists(&inst, budget)?.answer;
        let synthesized = constraint.contains(point);
        if synthesized && !decided {
            return Ok(false);
        }
        if complete && !synthesized && decided {
            return Ok(false);
        }
    }
    Ok(true)
}

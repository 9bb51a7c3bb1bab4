//! Domain types for (parametric) timed automata: locations, clocks,
//! parameters, guards and invariants, plus valuation, integer rescaling,
//! lower/upper parameter classification and per-clock constant bounds.

mod text;

pub use text::{parse_model, serialize_model};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;

use crate::rat::{self, Rational};
use crate::{Diagnostic, Error};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Relation::Lt | Relation::Gt)
    }

    /// Evaluates `lhs ⋈ rhs`.
    pub fn eval(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A single comparison `clock ⋈ Σ coeff·param + constant`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicConstraint {
    pub clock: ClockId,
    pub rel: Relation,
    /// Integer coefficients of parameters; absent entries are zero.
    pub coeffs: BTreeMap<ParamId, i64>,
    pub constant: Rational,
}

impl AtomicConstraint {
    pub fn simple(clock: ClockId, rel: Relation, constant: Rational) -> Self {
        AtomicConstraint {
            clock,
            rel,
            coeffs: BTreeMap::new(),
            constant,
        }
    }

    pub fn is_parameter_free(&self) -> bool {
        self.coeffs.values().all(|&c| c == 0)
    }
}

/// A conjunction of atomic constraints; empty means `true`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Constraint {
    pub atoms: Vec<AtomicConstraint>,
}

impl Constraint {
    pub fn truth() -> Self {
        Constraint { atoms: Vec::new() }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.atoms.iter().all(|a| a.is_parameter_free())
    }

    /// Evaluates a parameter-free constraint at a clock valuation.
    pub fn eval(&self, valuation: &[Rational]) -> bool {
        self.atoms.iter().all(|a| {
            debug_assert!(a.is_parameter_free());
            a.rel.eval(&valuation[a.clock.0], &a.constant)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub guard: Constraint,
    pub action: ActionId,
    pub resets: BTreeSet<ClockId>,
    pub target: LocId,
}

/// A timed automaton, possibly with timing parameters. `params` empty means
/// a plain TA. The initial, private and final locations are pairwise
/// distinct on validated models.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub actions: Vec<String>,
    pub locations: Vec<String>,
    pub clocks: Vec<String>,
    pub params: Vec<String>,
    pub init: LocId,
    pub private: LocId,
    pub final_loc: LocId,
    /// Indexed by location.
    pub invariants: Vec<Constraint>,
    pub edges: Vec<Edge>,
}

impl Model {
    pub fn is_parameter_free(&self) -> bool {
        self.params.is_empty()
            && self.invariants.iter().all(Constraint::is_parameter_free)
            && self.edges.iter().all(|e| e.guard.is_parameter_free())
    }

    pub fn has_strict_constraints(&self) -> bool {
        let strict = |c: &Constraint| c.atoms.iter().any(|a| a.rel.is_strict());
        self.invariants.iter().any(strict) || self.edges.iter().any(|e| strict(&e.guard))
    }

    pub fn loc_name(&self, l: LocId) -> &str {
        &self.locations[l.0]
    }

    pub fn clock_index(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    pub fn loc_index(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|c| c == name).map(LocId)
    }

    pub fn param_index(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|c| c == name).map(ParamId)
    }

    fn action_index(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|c| c == name).map(ActionId)
    }

    /// Interns an action name, appending it if new.
    pub fn intern_action(&mut self, name: &str) -> ActionId {
        match self.action_index(name) {
            Some(a) => a,
            None => {
                self.actions.push(name.to_string());
                ActionId(self.actions.len() - 1)
            }
        }
    }

    pub fn guards_and_invariants(&self) -> impl Iterator<Item = (String, &Constraint)> {
        let invs = self
            .invariants
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_true())
            .map(|(i, c)| (format!("invariant of {}", self.locations[i]), c));
        let guards = self.edges.iter().enumerate().map(|(i, e)| {
            (
                format!(
                    "edge {} ({} -> {})",
                    i,
                    self.locations[e.source.0], self.locations[e.target.0]
                ),
                &e.guard,
            )
        });
        invs.chain(guards)
    }

    /// Structural validation for programmatically built models. The parser
    /// performs these checks itself with positions attached.
    pub fn validate(&self) -> Result<(), Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let mut check_loc = |l: LocId, what: &str| {
            if l.0 >= self.locations.len() {
                diags.push(Diagnostic::nowhere(format!("{what}: unknown location")));
            }
        };
        check_loc(self.init, "init");
        check_loc(self.private, "private");
        check_loc(self.final_loc, "final");
        if self.init == self.private || self.init == self.final_loc || self.private == self.final_loc
        {
            diags.push(Diagnostic::nowhere(
                "init, private and final locations must be pairwise distinct".into(),
            ));
        }
        if self.invariants.len() != self.locations.len() {
            diags.push(Diagnostic::nowhere("invariant table size mismatch".into()));
        }
        let check_con = |c: &Constraint, what: &str, diags: &mut Vec<Diagnostic>| {
            for a in &c.atoms {
                if a.clock.0 >= self.clocks.len() {
                    diags.push(Diagnostic::nowhere(format!("{what}: undeclared clock")));
                }
                for p in a.coeffs.keys() {
                    if p.0 >= self.params.len() {
                        diags.push(Diagnostic::nowhere(format!("{what}: undeclared parameter")));
                    }
                }
            }
        };
        for (i, inv) in self.invariants.iter().enumerate() {
            check_con(inv, &format!("invariant of location {i}"), &mut diags);
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.source.0 >= self.locations.len() || e.target.0 >= self.locations.len() {
                diags.push(Diagnostic::nowhere(format!("edge {i}: unknown endpoint")));
            }
            for r in &e.resets {
                if r.0 >= self.clocks.len() {
                    diags.push(Diagnostic::nowhere(format!("edge {i}: undeclared reset clock")));
                }
            }
            check_con(&e.guard, &format!("guard of edge {i}"), &mut diags);
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }
}

/// Assignment of non-negative rationals to every parameter of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamValuation {
    pub values: BTreeMap<ParamId, Rational>,
}

impl ParamValuation {
    pub fn empty() -> Self {
        ParamValuation {
            values: BTreeMap::new(),
        }
    }

    /// Builds a valuation from `(name, value)` pairs, checked against `m`.
    pub fn from_pairs(m: &Model, pairs: &[(String, Rational)]) -> Result<Self, Error> {
        let mut values = BTreeMap::new();
        for (name, v) in pairs {
            let id = m
                .param_index(name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
            if v.is_negative() {
                return Err(Error::NegativeParameter(name.clone()));
            }
            values.insert(id, v.clone());
        }
        Ok(ParamValuation { values })
    }
}

/// Expiration bound: a non-negative rational or `+∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaBound {
    Finite(Rational),
    Infinite,
}

impl DeltaBound {
    pub fn parse(s: &str) -> Result<Self, Error> {
        if s.trim() == "inf" {
            return Ok(DeltaBound::Infinite);
        }
        let r = rat::parse_rational(s).map_err(Error::InvalidRational)?;
        if r.is_negative() {
            return Err(Error::InvalidRational(format!(
                "expiration bound must be non-negative, got {s}"
            )));
        }
        Ok(DeltaBound::Finite(r))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DeltaBound::Finite(_))
    }
}

impl fmt::Display for DeltaBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaBound::Finite(r) => f.write_str(&rat::format_rational(r)),
            DeltaBound::Infinite => f.write_str("inf"),
        }
    }
}

/// Replaces every parameter occurrence by its value, folding the right-hand
/// sides into plain (possibly rational) constants. The result is a
/// parameter-free model; run `rescale_to_integers` before region-based
/// analysis.
pub fn apply_valuation(m: &Model, v: &ParamValuation) -> Result<Model, Error> {
    for id in v.values.keys() {
        if id.0 >= m.params.len() {
            return Err(Error::UnknownParameter(format!("#{}", id.0)));
        }
    }
    for (i, name) in m.params.iter().enumerate() {
        match v.values.get(&ParamId(i)) {
            None => return Err(Error::MissingParameter(name.clone())),
            Some(val) if val.is_negative() => {
                return Err(Error::NegativeParameter(name.clone()));
            }
            Some(_) => {}
        }
    }
    let fold = |c: &Constraint| Constraint {
        atoms: c
            .atoms
            .iter()
            .map(|a| {
                let mut constant = a.constant.clone();
                for (p, coef) in &a.coeffs {
                    constant += rat::int(*coef) * &v.values[p];
                }
                AtomicConstraint::simple(a.clock, a.rel, constant)
            })
            .collect(),
    };
    let mut out = m.clone();
    out.params = Vec::new();
    out.invariants = m.invariants.iter().map(fold).collect();
    out.edges = m
        .edges
        .iter()
        .map(|e| Edge {
            guard: fold(&e.guard),
            ..e.clone()
        })
        .collect();
    Ok(out)
}

/// Multiplies every guard/invariant constant (and a finite `delta`) by the
/// least common multiple of their denominators, yielding an equivalent
/// integer-constant model. Duration-set consumers divide results by the
/// returned scale.
pub fn rescale_to_integers(
    m: &Model,
    delta: &DeltaBound,
) -> Result<(Model, DeltaBound, u64), Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    let mut denoms: Vec<&Rational> = Vec::new();
    for (_, c) in m.guards_and_invariants() {
        for a in &c.atoms {
            denoms.push(&a.constant);
        }
    }
    if let DeltaBound::Finite(d) = delta {
        denoms.push(d);
    }
    let scale = rat::denom_lcm(denoms.into_iter()).ok_or(Error::ScaleOverflow)?;
    let scale = scale.max(1);
    let factor = rat::int(scale as i64);
    let rescale_con = |c: &Constraint| Constraint {
        atoms: c
            .atoms
            .iter()
            .map(|a| AtomicConstraint::simple(a.clock, a.rel, &a.constant * &factor))
            .collect(),
    };
    let mut out = m.clone();
    out.invariants = m.invariants.iter().map(rescale_con).collect();
    out.edges = m
        .edges
        .iter()
        .map(|e| Edge {
            guard: rescale_con(&e.guard),
            ..e.clone()
        })
        .collect();
    let delta_out = match delta {
        DeltaBound::Finite(d) => DeltaBound::Finite(d * &factor),
        DeltaBound::Infinite => DeltaBound::Infinite,
    };
    Ok((out, delta_out, scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Lower,
    Upper,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Lower => f.write_str("lower"),
            Role::Upper => f.write_str("upper"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LuVerdict {
    /// Each parameter can be assigned a single bound role.
    Lu(BTreeMap<ParamId, Role>),
    /// First constraint/parameter pair that forces both roles at once.
    Violation {
        context: String,
        atom: AtomicConstraint,
        param: ParamId,
    },
}

impl LuVerdict {
    pub fn is_lu(&self) -> bool {
        matches!(self, LuVerdict::Lu(_))
    }
}

/// Checks the lower/upper parameter discipline: a parameter may appear only
/// with coefficient signs that make it an upper bound, or only signs that
/// make it a lower bound. An equality comparison with a nonzero parameter
/// coefficient imposes both roles simultaneously and always violates.
pub fn classify_lu(m: &Model) -> LuVerdict {
    let mut roles: BTreeMap<ParamId, Role> = BTreeMap::new();
    for (context, c) in m.guards_and_invariants() {
        for a in &c.atoms {
            for (&p, &coef) in &a.coeffs {
                if coef == 0 {
                    continue;
                }
                let required = match (a.rel, coef > 0) {
                    (Relation::Eq, _) => {
                        return LuVerdict::Violation {
                            context,
                            atom: a.clone(),
                            param: p,
                        }
                    }
                    // x ≤ Σαp + d: positive α raises the bound => upper role.
                    (Relation::Le | Relation::Lt, true) => Role::Upper,
                    (Relation::Le | Relation::Lt, false) => Role::Lower,
                    (Relation::Ge | Relation::Gt, true) => Role::Lower,
                    (Relation::Ge | Relation::Gt, false) => Role::Upper,
                };
                match roles.get(&p) {
                    None => {
                        roles.insert(p, required);
                    }
                    Some(&r) if r == required => {}
                    Some(_) => {
                        return LuVerdict::Violation {
                            context,
                            atom: a.clone(),
                            param: p,
                        }
                    }
                }
            }
        }
    }
    // Parameters with no signed occurrence may take either role.
    for i in 0..m.params.len() {
        roles.entry(ParamId(i)).or_insert(Role::Lower);
    }
    LuVerdict::Lu(roles)
}

/// Per-clock maximum constant over all guards and invariants mentioning the
/// clock (at least 0). `expiring`, when present, names a clock whose bound
/// must additionally cover a finite `delta`. Requires an integer-rescaled,
/// parameter-free model.
pub fn max_constants(
    m: &Model,
    delta: &DeltaBound,
    expiring: Option<ClockId>,
) -> Result<Vec<u64>, Error> {
    if !m.is_parameter_free() {
        return Err(Error::ModelHasParameters(m.params.clone()));
    }
    let mut caps = vec![0u64; m.clocks.len()];
    for (ctx, c) in m.guards_and_invariants() {
        for a in &c.atoms {
            let k = rat::to_i64(&a.constant).ok_or_else(|| {
                Error::InvalidModel(format!("non-integer constant in {ctx}; rescale first"))
            })?;
            if k > 0 {
                caps[a.clock.0] = caps[a.clock.0].max(k as u64);
            }
        }
    }
    if let Some(ClockId(y)) = expiring {
        if let DeltaBound::Finite(d) = delta {
            let dv = rat::to_u64(d).ok_or_else(|| {
                Error::InvalidModel("expiration bound must be a rescaled integer".into())
            })?;
            caps[y] = caps[y].max(dv);
        }
    }
    Ok(caps)
}

//! Line-oriented textual model format.
//!
//! ```text
//! clocks: x;
//! params: p1, p2;           # omit line for plain TA
//! init: l0; private: l2; final: l1;
//! loc l0 inv x <= 3;
//! loc l1;
//! loc l2;
//! edge l0 -> l2 when x >= p1 sync a;
//! edge l2 -> l1 when x <= p2 sync b;
//! edge l0 -> l1 sync c;
//! ```
//!
//! `#` starts a comment. A `when` clause is `true` when omitted; conjuncts
//! are joined with `&&`; `do {x, y}` resets clocks. Guard right-hand sides
//! are linear: `x >= 2*p1 + p2 - 1`. Constants may be rational (`2.5`,
//! `5/2`); parameter coefficients must be integers.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    AtomicConstraint, ClockId, Constraint, Edge, LocId, Model, ParamId, Relation,
};
use crate::rat::{self, Rational};
use crate::{Diagnostic, Error};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(Rational),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: tline,
                col: tcol,
            })
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => {
                col += 1;
                i += 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != '\n' {
                    i += 1;
                }
            }
            ':' | ';' | ',' | '*' | '+' | '{' | '}' => {
                push(match c {
                    ':' => Tok::Sym(":"),
                    ';' => Tok::Sym(";"),
                    ',' => Tok::Sym(","),
                    '*' => Tok::Sym("*"),
                    '+' => Tok::Sym("+"),
                    '{' => Tok::Sym("{"),
                    _ => Tok::Sym("}"),
                });
                col += 1;
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '>' {
                    push(Tok::Sym("->"));
                    col += 2;
                    i += 2;
                } else {
                    push(Tok::Sym("-"));
                    col += 1;
                    i += 1;
                }
            }
            '<' | '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    push(Tok::Sym(if c == '<' { "<=" } else { ">=" }));
                    col += 2;
                    i += 2;
                } else {
                    push(Tok::Sym(if c == '<' { "<" } else { ">" }));
                    col += 1;
                    i += 1;
                }
            }
            '=' => {
                push(Tok::Sym("="));
                col += 1;
                i += 1;
            }
            '&' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '&' {
                    push(Tok::Sym("&&"));
                    col += 2;
                    i += 2;
                } else {
                    return Err(Diagnostic {
                        line,
                        col,
                        message: "stray `&`; conjunction is `&&`".into(),
                    });
                }
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                // Decimal or fraction literal.
                if i + 1 < bytes.len()
                    && (bytes[i] == '.' || bytes[i] == '/')
                    && bytes[i + 1].is_ascii_digit()
                {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit: String = bytes[start..i].iter().collect();
                let value = rat::parse_rational(&lit).map_err(|message| Diagnostic {
                    line,
                    col,
                    message,
                })?;
                push(Tok::Number(value));
                col += i - start;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                push(Tok::Ident(bytes[start..i].iter().collect()));
                col += i - start;
            }
            other => {
                return Err(Diagnostic {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(out)
}

/// Raw right-hand side of an atom before name resolution.
#[derive(Clone, Debug)]
struct RawAtom {
    lhs: String,
    lhs_pos: (usize, usize),
    rel: Relation,
    terms: Vec<(i64, String, (usize, usize))>,
    constant: Rational,
}

#[derive(Clone, Debug)]
enum Stmt {
    Clocks(Vec<(String, (usize, usize))>),
    Params(Vec<(String, (usize, usize))>),
    Init(String, (usize, usize)),
    Private(String, (usize, usize)),
    Final(String, (usize, usize)),
    Loc {
        name: String,
        pos: (usize, usize),
        inv: Vec<RawAtom>,
    },
    Edge {
        source: String,
        source_pos: (usize, usize),
        target: String,
        target_pos: (usize, usize),
        guard: Vec<RawAtom>,
        resets: Vec<(String, (usize, usize))>,
        action: String,
    },
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    fn pos(&self) -> (usize, usize) {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn error_here(&mut self, message: String) {
        let (line, col) = self.pos();
        self.diags.push(Diagnostic { line, col, message });
    }

    /// Skips to just past the next `;` for recovery.
    fn sync(&mut self) {
        while let Some(t) = self.next() {
            if t.tok == Tok::Sym(";") {
                break;
            }
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> bool {
        match self.peek() {
            Some(t) if t.tok == Tok::Sym(s) => {
                self.at += 1;
                true
            }
            _ => {
                self.error_here(format!("expected `{s}`"));
                false
            }
        }
    }

    fn expect_ident(&mut self, what: &str) -> Option<(String, (usize, usize))> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Ident(name),
                line,
                col,
            }) => {
                self.at += 1;
                Some((name, (line, col)))
            }
            _ => {
                self.error_here(format!("expected {what}"));
                None
            }
        }
    }

    fn ident_list(&mut self) -> Vec<(String, (usize, usize))> {
        let mut names = Vec::new();
        loop {
            match self.expect_ident("an identifier") {
                Some(entry) => names.push(entry),
                None => break,
            }
            match self.peek() {
                Some(t) if t.tok == Tok::Sym(",") => {
                    self.at += 1;
                }
                _ => break,
            }
        }
        names
    }

    fn relation(&mut self) -> Option<Relation> {
        let rel = match self.peek().map(|t| &t.tok) {
            Some(Tok::Sym("<")) => Relation::Lt,
            Some(Tok::Sym("<=")) => Relation::Le,
            Some(Tok::Sym("=")) => Relation::Eq,
            Some(Tok::Sym(">=")) => Relation::Ge,
            Some(Tok::Sym(">")) => Relation::Gt,
            _ => {
                self.error_here("expected a relation (<, <=, =, >=, >)".into());
                return None;
            }
        };
        self.at += 1;
        Some(rel)
    }

    /// One linear term on a right-hand side, with an applied sign.
    fn rhs_term(&mut self, sign: i64, atom: &mut RawAtom) -> bool {
        match self.next() {
            Some(Token {
                tok: Tok::Number(n),
                line,
                col,
            }) => {
                if let Some(t) = self.peek() {
                    if t.tok == Tok::Sym("*") {
                        self.at += 1;
                        let Some(coef) = rat::to_i64(&n) else {
                            self.diags.push(Diagnostic {
                                line,
                                col,
                                message: "parameter coefficients must be integers".into(),
                            });
                            return false;
                        };
                        let Some((name, pos)) = self.expect_ident("a parameter name") else {
                            return false;
                        };
                        atom.terms.push((sign * coef, name, pos));
                        return true;
                    }
                }
                atom.constant += rat::int(sign) * n;
                true
            }
            Some(Token {
                tok: Tok::Ident(name),
                line,
                col,
            }) => {
                atom.terms.push((sign, name, (line, col)));
                true
            }
            _ => {
                self.error_here("expected a term".into());
                false
            }
        }
    }

    fn atom(&mut self) -> Option<RawAtom> {
        let (lhs, lhs_pos) = self.expect_ident("a clock name")?;
        let rel = self.relation()?;
        let mut atom = RawAtom {
            lhs,
            lhs_pos,
            rel,
            terms: Vec::new(),
            constant: rat::int(0),
        };
        let mut sign = 1i64;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Sym("-") {
                self.at += 1;
                sign = -1;
            }
        }
        if !self.rhs_term(sign, &mut atom) {
            return None;
        }
        loop {
            let sign = match self.peek().map(|t| &t.tok) {
                Some(Tok::Sym("+")) => 1i64,
                Some(Tok::Sym("-")) => -1i64,
                _ => break,
            };
            self.at += 1;
            if !self.rhs_term(sign, &mut atom) {
                return None;
            }
        }
        Some(atom)
    }

    fn conjunction(&mut self) -> Option<Vec<RawAtom>> {
        let mut atoms = vec![self.atom()?];
        while let Some(t) = self.peek() {
            if t.tok == Tok::Sym("&&") {
                self.at += 1;
                atoms.push(self.atom()?);
            } else {
                break;
            }
        }
        Some(atoms)
    }

    fn statement(&mut self) -> Option<Stmt> {
        let tok = self.next()?;
        let Tok::Ident(keyword) = &tok.tok else {
            self.diags.push(Diagnostic {
                line: tok.line,
                col: tok.col,
                message: "expected a statement keyword".into(),
            });
            self.sync();
            return None;
        };
        let stmt = match keyword.as_str() {
            "clocks" => {
                if !self.expect_sym(":") {
                    self.sync();
                    return None;
                }
                Some(Stmt::Clocks(self.ident_list()))
            }
            "params" => {
                if !self.expect_sym(":") {
                    self.sync();
                    return None;
                }
                Some(Stmt::Params(self.ident_list()))
            }
            "init" | "private" | "final" => {
                if !self.expect_sym(":") {
                    self.sync();
                    return None;
                }
                let (name, pos) = match self.expect_ident("a location name") {
                    Some(x) => x,
                    None => {
                        self.sync();
                        return None;
                    }
                };
                Some(match keyword.as_str() {
                    "init" => Stmt::Init(name, pos),
                    "private" => Stmt::Private(name, pos),
                    _ => Stmt::Final(name, pos),
                })
            }
            "loc" => {
                let (name, pos) = match self.expect_ident("a location name") {
                    Some(x) => x,
                    None => {
                        self.sync();
                        return None;
                    }
                };
                let mut inv = Vec::new();
                if let Some(t) = self.peek() {
                    if t.tok == Tok::Ident("inv".into()) {
                        self.at += 1;
                        match self.conjunction() {
                            Some(atoms) => inv = atoms,
                            None => {
                                self.sync();
                                return None;
                            }
                        }
                    }
                }
                Some(Stmt::Loc { name, pos, inv })
            }
            "edge" => {
                let (source, source_pos) = match self.expect_ident("a source location") {
                    Some(x) => x,
                    None => {
                        self.sync();
                        return None;
                    }
                };
                if !self.expect_sym("->") {
                    self.sync();
                    return None;
                }
                let (target, target_pos) = match self.expect_ident("a target location") {
                    Some(x) => x,
                    None => {
                        self.sync();
                        return None;
                    }
                };
                let mut guard = Vec::new();
                if self.peek().map(|t| &t.tok) == Some(&Tok::Ident("when".into())) {
                    self.at += 1;
                    match self.conjunction() {
                        Some(atoms) => guard = atoms,
                        None => {
                            self.sync();
                            return None;
                        }
                    }
                }
                let mut resets = Vec::new();
                if self.peek().map(|t| &t.tok) == Some(&Tok::Ident("do".into())) {
                    self.at += 1;
                    if !self.expect_sym("{") {
                        self.sync();
                        return None;
                    }
                    resets = self.ident_list();
                    if !self.expect_sym("}") {
                        self.sync();
                        return None;
                    }
                }
                if self.peek().map(|t| &t.tok) != Some(&Tok::Ident("sync".into())) {
                    self.error_here("expected `sync <action>`".into());
                    self.sync();
                    return None;
                }
                self.at += 1;
                let (action, _) = match self.expect_ident("an action name") {
                    Some(x) => x,
                    None => {
                        self.sync();
                        return None;
                    }
                };
                Some(Stmt::Edge {
                    source,
                    source_pos,
                    target,
                    target_pos,
                    guard,
                    resets,
                    action,
                })
            }
            other => {
                self.diags.push(Diagnostic {
                    line: tok.line,
                    col: tok.col,
                    message: format!("unknown statement `{other}`"),
                });
                self.sync();
                return None;
            }
        };
        if !self.expect_sym(";") {
            self.sync();
        }
        stmt
    }
}

/// Parses and validates a model, or returns all collected diagnostics.
pub fn parse_model(text: &str) -> Result<Model, Error> {
    let toks = match lex(text) {
        Ok(t) => t,
        Err(d) => return Err(Error::Parse(vec![d])),
    };
    let mut p = Parser {
        toks,
        at: 0,
        diags: Vec::new(),
    };
    let mut stmts = Vec::new();
    while p.peek().is_some() {
        if let Some(s) = p.statement() {
            stmts.push(s);
        }
    }
    let mut diags = std::mem::take(&mut p.diags);

    // First pass: declarations.
    let mut clocks: Vec<String> = Vec::new();
    let mut params: Vec<String> = Vec::new();
    let mut locations: Vec<String> = Vec::new();
    let declare = |list: &mut Vec<String>, name: &str, pos: (usize, usize), what: &str,
                       diags: &mut Vec<Diagnostic>| {
        if list.iter().any(|n| n == name) {
            diags.push(Diagnostic {
                line: pos.0,
                col: pos.1,
                message: format!("duplicate {what} declaration `{name}`"),
            });
        } else {
            list.push(name.to_string());
        }
    };
    for s in &stmts {
        match s {
            Stmt::Clocks(names) => {
                for (n, pos) in names {
                    declare(&mut clocks, n, *pos, "clock", &mut diags);
                }
            }
            Stmt::Params(names) => {
                for (n, pos) in names {
                    declare(&mut params, n, *pos, "parameter", &mut diags);
                }
            }
            Stmt::Loc { name, pos, .. } => {
                declare(&mut locations, name, *pos, "location", &mut diags);
            }
            _ => {}
        }
    }

    let clock_id = |name: &str| clocks.iter().position(|c| c == name).map(ClockId);
    let param_id = |name: &str| params.iter().position(|c| c == name).map(ParamId);
    let loc_id = |name: &str| locations.iter().position(|c| c == name).map(LocId);

    let resolve_atoms = |atoms: &[RawAtom], diags: &mut Vec<Diagnostic>| -> Constraint {
        let mut out = Vec::new();
        for a in atoms {
            let Some(clock) = clock_id(&a.lhs) else {
                diags.push(Diagnostic {
                    line: a.lhs_pos.0,
                    col: a.lhs_pos.1,
                    message: format!("undeclared clock `{}`", a.lhs),
                });
                continue;
            };
            let mut coeffs: BTreeMap<ParamId, i64> = BTreeMap::new();
            let mut ok = true;
            for (coef, name, pos) in &a.terms {
                match param_id(name) {
                    Some(p) => {
                        *coeffs.entry(p).or_insert(0) += coef;
                    }
                    None => {
                        diags.push(Diagnostic {
                            line: pos.0,
                            col: pos.1,
                            message: format!("undeclared parameter `{name}`"),
                        });
                        ok = false;
                    }
                }
            }
            coeffs.retain(|_, c| *c != 0);
            if ok {
                out.push(AtomicConstraint {
                    clock,
                    rel: a.rel,
                    coeffs,
                    constant: a.constant.clone(),
                });
            }
        }
        Constraint { atoms: out }
    };

    // Second pass: roles, invariants, edges.
    let mut init: Option<(LocId, (usize, usize))> = None;
    let mut private: Option<(LocId, (usize, usize))> = None;
    let mut final_loc: Option<(LocId, (usize, usize))> = None;
    let mut invariants = vec![Constraint::truth(); locations.len()];
    let mut edges = Vec::new();
    let mut actions: Vec<String> = Vec::new();

    for s in &stmts {
        match s {
            Stmt::Clocks(_) | Stmt::Params(_) => {}
            Stmt::Init(name, pos) | Stmt::Private(name, pos) | Stmt::Final(name, pos) => {
                let role = match s {
                    Stmt::Init(..) => "init",
                    Stmt::Private(..) => "private",
                    _ => "final",
                };
                let slot = match s {
                    Stmt::Init(..) => &mut init,
                    Stmt::Private(..) => &mut private,
                    _ => &mut final_loc,
                };
                if slot.is_some() {
                    diags.push(Diagnostic {
                        line: pos.0,
                        col: pos.1,
                        message: format!("duplicate `{role}` declaration"),
                    });
                    continue;
                }
                match loc_id(name) {
                    Some(l) => *slot = Some((l, *pos)),
                    None => diags.push(Diagnostic {
                        line: pos.0,
                        col: pos.1,
                        message: format!("{role} names undeclared location `{name}`"),
                    }),
                }
            }
            Stmt::Loc { name, inv, .. } => {
                if let Some(l) = loc_id(name) {
                    invariants[l.0] = resolve_atoms(inv, &mut diags);
                }
            }
            Stmt::Edge {
                source,
                source_pos,
                target,
                target_pos,
                guard,
                resets,
                action,
            } => {
                let src = loc_id(source);
                if src.is_none() {
                    diags.push(Diagnostic {
                        line: source_pos.0,
                        col: source_pos.1,
                        message: format!("undeclared location `{source}`"),
                    });
                }
                let tgt = loc_id(target);
                if tgt.is_none() {
                    diags.push(Diagnostic {
                        line: target_pos.0,
                        col: target_pos.1,
                        message: format!("undeclared location `{target}`"),
                    });
                }
                let guard = resolve_atoms(guard, &mut diags);
                let mut reset_set = BTreeSet::new();
                for (name, pos) in resets {
                    match clock_id(name) {
                        Some(c) => {
                            reset_set.insert(c);
                        }
                        None => diags.push(Diagnostic {
                            line: pos.0,
                            col: pos.1,
                            message: format!("undeclared clock `{name}` in reset"),
                        }),
                    }
                }
                let action_id = match actions.iter().position(|a| a == action) {
                    Some(i) => ActionIdx(i),
                    None => {
                        actions.push(action.clone());
                        ActionIdx(actions.len() - 1)
                    }
                };
                if let (Some(source), Some(target)) = (src, tgt) {
                    edges.push(Edge {
                        source,
                        guard,
                        action: crate::model::ActionId(action_id.0),
                        resets: reset_set,
                        target,
                    });
                }
            }
        }
    }

    for (role, slot) in [("init", &init), ("private", &private), ("final", &final_loc)] {
        if slot.is_none() {
            diags.push(Diagnostic::nowhere(format!("missing `{role}` declaration")));
        }
    }
    if let (Some((i, ipos)), Some((pv, _)), Some((f, _))) = (&init, &private, &final_loc) {
        if i == pv || i == f || pv == f {
            diags.push(Diagnostic {
                line: ipos.0,
                col: ipos.1,
                message: "init, private and final locations must be pairwise distinct".into(),
            });
        }
    }

    if !diags.is_empty() {
        return Err(Error::Parse(diags));
    }
    Ok(Model {
        actions,
        locations,
        clocks,
        params,
        init: init.unwrap().0,
        private: private.unwrap().0,
        final_loc: final_loc.unwrap().0,
        invariants,
        edges,
    })
}

struct ActionIdx(usize);

pub(crate) fn atom_to_string(m: &Model, a: &AtomicConstraint) -> String {
    use num_traits::Zero;
    let mut rhs = String::new();
    for (p, coef) in &a.coeffs {
        if *coef == 0 {
            continue;
        }
        let mag = coef.abs();
        let term = if mag == 1 {
            m.params[p.0].clone()
        } else {
            format!("{mag}*{}", m.params[p.0])
        };
        if rhs.is_empty() {
            if *coef < 0 {
                rhs.push_str("- ");
            }
            rhs.push_str(&term);
        } else {
            rhs.push_str(if *coef < 0 { " - " } else { " + " });
            rhs.push_str(&term);
        }
    }
    if !a.constant.is_zero() || rhs.is_empty() {
        let c = &a.constant;
        if rhs.is_empty() {
            rhs = rat::format_rational(c);
        } else if c < &rat::int(0) {
            rhs.push_str(" - ");
            rhs.push_str(&rat::format_rational(&-c.clone()));
        } else {
            rhs.push_str(" + ");
            rhs.push_str(&rat::format_rational(c));
        }
    }
    format!("{} {} {}", m.clocks[a.clock.0], a.rel.symbol(), rhs)
}

fn constraint_to_string(m: &Model, c: &Constraint) -> String {
    c.atoms
        .iter()
        .map(|a| atom_to_string(m, a))
        .collect::<Vec<_>>()
        .join(" && ")
}

/// Renders a model in the textual format; `parse_model` of the output
/// reproduces the model.
pub fn serialize_model(m: &Model) -> String {
    let mut out = String::new();
    if !m.clocks.is_empty() {
        out.push_str(&format!("clocks: {};\n", m.clocks.join(", ")));
    }
    if !m.params.is_empty() {
        out.push_str(&format!("params: {};\n", m.params.join(", ")));
    }
    out.push_str(&format!(
        "init: {}; private: {}; final: {};\n",
        m.locations[m.init.0], m.locations[m.private.0], m.locations[m.final_loc.0]
    ));
    for (i, name) in m.locations.iter().enumerate() {
        let inv = &m.invariants[i];
        if inv.is_true() {
            out.push_str(&format!("loc {name};\n"));
        } else {
            out.push_str(&format!("loc {name} inv {};\n", constraint_to_string(m, inv)));
        }
    }
    for e in &m.edges {
        let mut line = format!(
            "edge {} -> {}",
            m.locations[e.source.0], m.locations[e.target.0]
        );
        if !e.guard.is_true() {
            line.push_str(&format!(" when {}", constraint_to_string(m, &e.guard)));
        }
        if !e.resets.is_empty() {
            let names: Vec<_> = e.resets.iter().map(|c| m.clocks[c.0].clone()).collect();
            line.push_str(&format!(" do {{{}}}", names.join(", ")));
        }
        line.push_str(&format!(" sync {};\n", m.actions[e.action.0]));
        out.push_str(&line);
    }
    out
}

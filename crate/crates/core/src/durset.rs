//! Exact algebra of duration sets: eventually periodic unions of rational
//! intervals over the non-negative reals.
//!
//! Everything produced by the analysis pipeline is a union of *unit cells*
//! in rescaled time: integer points `{k}` and open gaps `(k, k+1)`. Cell
//! `2k` is the point `k`, cell `2k+1` the open gap. A duration set is an
//! eventually periodic 0/1 sequence over cells, which makes the Boolean
//! operations pointwise and gives every set one canonical representation:
//! minimal period, then the least threshold at which neither the stored
//! base nor the initial part touches a repetition seam.
//!
//! Endpoints are stored in scaled units; consumers divide by `scale`.

use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::rat::{self, Rational};
use crate::region::FracClass;
use crate::Error;

/// One interval with rational endpoints in scaled units. `hi == None` means
/// unbounded above (and then `hi_closed` is false).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub lo_closed: bool,
    pub hi: Option<Rational>,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            lo_closed: true,
            hi: Some(hi),
            hi_closed: true,
        }
    }

    pub fn open(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            lo_closed: false,
            hi: Some(hi),
            hi_closed: false,
        }
    }

    pub fn left_open(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            lo_closed: false,
            hi: Some(hi),
            hi_closed: true,
        }
    }

    pub fn right_open(lo: Rational, hi: Rational) -> Self {
        Interval {
            lo,
            lo_closed: true,
            hi: Some(hi),
            hi_closed: false,
        }
    }

    pub fn point(v: Rational) -> Self {
        Interval::closed(v.clone(), v)
    }

    pub fn unbounded(lo: Rational, lo_closed: bool) -> Self {
        Interval {
            lo,
            lo_closed,
            hi: None,
            hi_closed: false,
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let lo_ok = *v > self.lo || (self.lo_closed && *v == self.lo);
        let hi_ok = match &self.hi {
            None => true,
            Some(h) => *v < *h || (self.hi_closed && *v == *h),
        };
        lo_ok && hi_ok
    }

    fn check(&self) -> Result<(), Error> {
        if self.lo.is_negative() {
            return Err(Error::InvalidDurationSet("negative endpoint".into()));
        }
        match &self.hi {
            None => {
                if self.hi_closed {
                    return Err(Error::InvalidDurationSet(
                        "an unbounded end cannot be closed".into(),
                    ));
                }
            }
            Some(h) => {
                if *h < self.lo {
                    return Err(Error::InvalidDurationSet("upper end below lower".into()));
                }
                if *h == self.lo && !(self.lo_closed && self.hi_closed) {
                    return Err(Error::InvalidDurationSet("empty interval".into()));
                }
            }
        }
        Ok(())
    }
}

/// Repeating part: `base + k·period` for all `k ≥ 0`, base within
/// `[threshold, threshold + period)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicTail {
    pub threshold: u64,
    pub period: u64,
    pub base: Vec<Interval>,
}

/// Eventually periodic set of naturals, the bridge between tick counting and
/// duration sets: explicit members below `threshold`, then residues `base`
/// within `[threshold, threshold + period)` repeated with `period`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatSet {
    pub initial: Vec<u64>,
    pub threshold: u64,
    pub period: u64,
    pub base: Vec<u64>,
}

impl NatSet {
    pub fn finite(mut members: Vec<u64>) -> Self {
        members.sort_unstable();
        members.dedup();
        let threshold = members.last().map_or(0, |m| m + 1);
        NatSet {
            initial: members,
            threshold,
            period: 1,
            base: Vec::new(),
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        if n < self.threshold {
            self.initial.contains(&n)
        } else {
            let folded = self.threshold + (n - self.threshold) % self.period;
            self.base.contains(&folded)
        }
    }

    /// The set `{n + k : n ∈ self}`.
    pub fn shifted(&self, k: u64) -> NatSet {
        NatSet {
            initial: self.initial.iter().map(|n| n + k).collect(),
            threshold: self.threshold + k,
            period: self.period,
            base: self.base.iter().map(|n| n + k).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty() && self.base.is_empty()
    }
}

/// Internal cell-sequence form: `head` covers cells `[0, 2t)`, `pattern`
/// repeats with length `2p` from cell `2t` on.
#[derive(Clone, Debug)]
struct CellSeq {
    t: u64,
    head: Vec<bool>,
    p: u64,
    pattern: Vec<bool>,
}

impl CellSeq {
    fn get(&self, c: u64) -> bool {
        if c < 2 * self.t {
            self.head[c as usize]
        } else {
            self.pattern[((c - 2 * self.t) % (2 * self.p)) as usize]
        }
    }
}

/// Eventually periodic union of intervals over the non-negative reals, in
/// canonical normal form. Construct through `from_parts`, `from_intervals`
/// or the set operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DurationSet {
    scale: u64,
    initial: Vec<Interval>,
    periodic: Option<PeriodicTail>,
}

fn interval_covers_cell(iv: &Interval, c: u64) -> bool {
    // Requires integer endpoints in scaled units.
    let k = rat::int((c / 2) as i64);
    if c.is_multiple_of(2) {
        iv.contains(&k)
    } else {
        let lo_ok = iv.lo <= k;
        let hi_ok = match &iv.hi {
            None => true,
            Some(h) => *h >= &k + rat::int(1),
        };
        lo_ok && hi_ok
    }
}

fn run_intervals(cells: &[bool], offset: u64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < cells.len() {
        if !cells[i] {
            i += 1;
            continue;
        }
        let a = offset + i as u64;
        while i < cells.len() && cells[i] {
            i += 1;
        }
        let b = offset + i as u64 - 1;
        let (lo, lo_closed) = if a.is_multiple_of(2) {
            (rat::int((a / 2) as i64), true)
        } else {
            (rat::int((a / 2) as i64), false)
        };
        let (hi, hi_closed) = if b.is_multiple_of(2) {
            (rat::int((b / 2) as i64), true)
        } else {
            (rat::int(b.div_ceil(2) as i64), false)
        };
        out.push(Interval {
            lo,
            lo_closed,
            hi: Some(hi),
            hi_closed,
        });
    }
    out
}

impl DurationSet {
    pub fn empty(scale: u64) -> Self {
        DurationSet {
            scale: scale.max(1),
            initial: Vec::new(),
            periodic: None,
        }
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn initial_intervals(&self) -> &[Interval] {
        &self.initial
    }

    pub fn periodic_tail(&self) -> Option<&PeriodicTail> {
        self.periodic.as_ref()
    }

    /// Builds and canonicalizes a set from raw parts. Endpoints may be
    /// arbitrary non-negative rationals; the scale is refined so that every
    /// endpoint becomes an integer in scaled units.
    pub fn from_parts(
        scale: u64,
        initial: Vec<Interval>,
        periodic: Option<PeriodicTail>,
    ) -> Result<Self, Error> {
        let scale = scale.max(1);
        for iv in &initial {
            iv.check()?;
        }
        if let Some(pt) = &periodic {
            if pt.period == 0 {
                return Err(Error::InvalidDurationSet("zero period".into()));
            }
            let window_end = rat::int((pt.threshold + pt.period) as i64);
            for iv in &pt.base {
                iv.check()?;
                if iv.lo < rat::int(pt.threshold as i64) {
                    return Err(Error::InvalidDurationSet(
                        "base interval below threshold".into(),
                    ));
                }
                match &iv.hi {
                    None => {
                        return Err(Error::InvalidDurationSet(
                            "base interval cannot be unbounded".into(),
                        ))
                    }
                    Some(h) => {
                        if *h > window_end {
                            return Err(Error::InvalidDurationSet(
                                "base interval leaves the period window".into(),
                            ));
                        }
                    }
                }
            }
            if initial.iter().any(|iv| iv.hi.is_none()) {
                return Err(Error::InvalidDurationSet(
                    "unbounded interval combined with a periodic part".into(),
                ));
            }
        }
        // Refine the scale so all endpoints are integers in scaled units.
        let endpoint_denoms: Vec<&Rational> = initial
            .iter()
            .chain(periodic.iter().flat_map(|p| p.base.iter()))
            .flat_map(|iv| std::iter::once(&iv.lo).chain(iv.hi.as_ref()))
            .collect();
        let k = rat::denom_lcm(endpoint_denoms.into_iter()).ok_or(Error::ScaleOverflow)?;
        let new_scale = scale.checked_mul(k.max(1)).ok_or(Error::ScaleOverflow)?;
        let factor = rat::int(k.max(1) as i64);
        let scale_iv = |iv: &Interval| Interval {
            lo: &iv.lo * &factor,
            lo_closed: iv.lo_closed,
            hi: iv.hi.as_ref().map(|h| h * &factor),
            hi_closed: iv.hi_closed,
        };
        let initial: Vec<Interval> = initial.iter().map(scale_iv).collect();
        let periodic = periodic.map(|pt| PeriodicTail {
            threshold: pt.threshold * k.max(1),
            period: pt.period * k.max(1),
            base: pt.base.iter().map(scale_iv).collect(),
        });

        // Materialize cells and canonicalize.
        let (pt_threshold, pt_period) = periodic
            .as_ref()
            .map(|p| (p.threshold, p.period))
            .unwrap_or((0, 1));
        let max_end = initial
            .iter()
            .map(|iv| match &iv.hi {
                Some(h) => rat::to_u64(&h.ceil()).unwrap_or(0),
                // Cells before an unbounded tail still need explicit values.
                None => rat::to_u64(&iv.lo.ceil()).unwrap_or(0) + 1,
            })
            .max()
            .unwrap_or(0);
        let unbounded = initial.iter().any(|iv| iv.hi.is_none());
        let t = pt_threshold.max(max_end + 1);
        let member = |c: u64| -> bool {
            if initial.iter().any(|iv| interval_covers_cell(iv, c)) {
                return true;
            }
            if let Some(pt) = &periodic {
                // A base interval may reach the window's right edge, where
                // it overlaps the next instance's first point; check the two
                // instances a cell can fall into instead of folding once.
                if c >= 2 * pt.threshold && !pt.base.is_empty() {
                    let k0 = (c - 2 * pt.threshold) / (2 * pt.period);
                    for k in [Some(k0), k0.checked_sub(1)].into_iter().flatten() {
                        let shifted = c - 2 * k * pt.period;
                        if pt.base.iter().any(|iv| interval_covers_cell(iv, shifted)) {
                            return true;
                        }
                    }
                }
            }
            false
        };
        let head: Vec<bool> = (0..2 * t).map(member).collect();
        let pattern: Vec<bool> = if unbounded {
            vec![true, true]
        } else if periodic.is_some() {
            (2 * t..2 * t + 2 * pt_period).map(member).collect()
        } else {
            vec![false, false]
        };
        let p = if unbounded || periodic.is_none() {
            1
        } else {
            pt_period
        };
        Ok(Self::from_cells(new_scale, CellSeq { t, head, p, pattern }))
    }

    pub fn from_intervals(scale: u64, intervals: Vec<Interval>) -> Result<Self, Error> {
        Self::from_parts(scale, intervals, None)
    }

    /// Canonicalization: minimal period, then the least threshold at which
    /// the pattern neither merges across its own repetition seam nor touches
    /// the initial part. All-one and all-zero patterns collapse into an
    /// unbounded tail interval or a finite set.
    fn from_cells(scale: u64, seq: CellSeq) -> Self {
        // Minimal unit period.
        let mut p = seq.p;
        for d in 1..=seq.p {
            if !seq.p.is_multiple_of(d) {
                continue;
            }
            let w = (2 * d) as usize;
            if (w..seq.pattern.len()).all(|i| seq.pattern[i] == seq.pattern[i - w]) {
                p = d;
                break;
            }
        }
        let pattern: Vec<bool> = seq.pattern[..(2 * p) as usize].to_vec();
        let get = |c: u64| -> bool {
            if c < 2 * seq.t {
                seq.head[c as usize]
            } else {
                pattern[((c - 2 * seq.t) % (2 * p)) as usize]
            }
        };

        if pattern.iter().all(|&b| !b) {
            let initial = run_intervals(&seq.head, 0);
            return DurationSet {
                scale,
                initial,
                periodic: None,
            };
        }
        if pattern.iter().all(|&b| b) {
            // Find the least cell from which everything is set.
            let mut cstar = 2 * seq.t;
            while cstar > 0 && get(cstar - 1) {
                cstar -= 1;
            }
            let mut initial = run_intervals(
                &(0..cstar).map(get).collect::<Vec<_>>(),
                0,
            );
            let (lo, lo_closed) = if cstar.is_multiple_of(2) {
                (rat::int((cstar / 2) as i64), true)
            } else {
                (rat::int((cstar / 2) as i64), false)
            };
            initial.push(Interval {
                lo,
                lo_closed,
                hi: None,
                hi_closed: false,
            });
            return DurationSet {
                scale,
                initial,
                periodic: None,
            };
        }

        // Mixed pattern: minimize the threshold.
        let mut t = seq.t;
        while t > 0
            && get(2 * (t - 1)) == get(2 * (t - 1) + 2 * p)
            && get(2 * (t - 1) + 1) == get(2 * (t - 1) + 1 + 2 * p)
        {
            t -= 1;
        }
        // Raise it until no seam merge: neither across consecutive pattern
        // instances nor between the initial part and the first instance.
        let tmin = t;
        loop {
            let first = get(2 * t);
            let last = get(2 * t + 2 * p - 1);
            let boundary_ok = !(last && first);
            let threshold_ok = t == 0 || !(get(2 * t - 1) && first);
            if boundary_ok && threshold_ok {
                break;
            }
            t += 1;
            assert!(t <= tmin + 2 * p + 2, "seam adjustment failed to converge");
        }
        let head: Vec<bool> = (0..2 * t).map(get).collect();
        let pattern: Vec<bool> = (2 * t..2 * t + 2 * p).map(get).collect();
        let initial = run_intervals(&head, 0);
        let base = run_intervals(&pattern, 2 * t);
        DurationSet {
            scale,
            initial,
            periodic: Some(PeriodicTail {
                threshold: t,
                period: p,
                base,
            }),
        }
    }

    fn to_cells(&self) -> CellSeq {
        match &self.periodic {
            Some(pt) => {
                let t = pt.threshold;
                let p = pt.period;
                let head = (0..2 * t)
                    .map(|c| self.initial.iter().any(|iv| interval_covers_cell(iv, c)))
                    .collect();
                let pattern = (2 * t..2 * t + 2 * p)
                    .map(|c| pt.base.iter().any(|iv| interval_covers_cell(iv, c)))
                    .collect();
                CellSeq { t, head, p, pattern }
            }
            None => {
                let unbounded_from = self.initial.iter().find_map(|iv| {
                    if iv.hi.is_none() {
                        Some(if iv.lo_closed {
                            2 * rat::to_u64(&iv.lo).unwrap()
                        } else {
                            2 * rat::to_u64(&iv.lo).unwrap() + 1
                        })
                    } else {
                        None
                    }
                });
                let max_end = self
                    .initial
                    .iter()
                    .filter_map(|iv| iv.hi.as_ref())
                    .map(|h| rat::to_u64(h).unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                let t = match unbounded_from {
                    Some(c) => c / 2 + 1,
                    None => max_end + 1,
                };
                let head = (0..2 * t)
                    .map(|c| {
                        self.initial.iter().any(|iv| interval_covers_cell(iv, c))
                    })
                    .collect();
                let pattern = if unbounded_from.is_some() {
                    vec![true, true]
                } else {
                    vec![false, false]
                };
                CellSeq {
                    t,
                    head,
                    p: 1,
                    pattern,
                }
            }
        }
    }

    /// Rescales to a multiple of the current scale.
    pub fn with_scale(&self, new_scale: u64) -> Self {
        assert!(
            new_scale.is_multiple_of(self.scale) && new_scale > 0,
            "new scale must be a positive multiple of the current one"
        );
        if new_scale == self.scale {
            return self.clone();
        }
        let k = new_scale / self.scale;
        let factor = rat::int(k as i64);
        let scale_iv = |iv: &Interval| Interval {
            lo: &iv.lo * &factor,
            lo_closed: iv.lo_closed,
            hi: iv.hi.as_ref().map(|h| h * &factor),
            hi_closed: iv.hi_closed,
        };
        DurationSet {
            scale: new_scale,
            initial: self.initial.iter().map(scale_iv).collect(),
            periodic: self.periodic.as_ref().map(|pt| PeriodicTail {
                threshold: pt.threshold * k,
                period: pt.period * k,
                base: pt.base.iter().map(scale_iv).collect(),
            }),
        }
    }

    fn unify(&self, other: &Self) -> (Self, Self) {
        let s = rat::lcm_u64(self.scale, other.scale);
        (self.with_scale(s), other.with_scale(s))
    }

    fn binary(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let (a, b) = self.unify(other);
        let ca = a.to_cells();
        let cb = b.to_cells();
        let t = ca.t.max(cb.t);
        let p = rat::lcm_u64(ca.p, cb.p);
        let head = (0..2 * t).map(|c| f(ca.get(c), cb.get(c))).collect();
        let pattern = (2 * t..2 * t + 2 * p)
            .map(|c| f(ca.get(c), cb.get(c)))
            .collect();
        Self::from_cells(a.scale, CellSeq { t, head, p, pattern })
    }

    pub fn union(&self, other: &Self) -> Self {
        self.binary(other, |x, y| x || y)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.binary(other, |x, y| x && y)
    }

    /// Complement within the non-negative reals.
    pub fn complement(&self) -> Self {
        let c = self.to_cells();
        Self::from_cells(
            self.scale,
            CellSeq {
                t: c.t,
                head: c.head.iter().map(|b| !b).collect(),
                p: c.p,
                pattern: c.pattern.iter().map(|b| !b).collect(),
            },
        )
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty() && self.periodic.is_none()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.intersect(&other.complement()).is_empty()
    }

    pub fn equals(&self, other: &Self) -> bool {
        let (a, b) = self.unify(other);
        a == b
    }

    /// Exact membership of an unscaled duration.
    pub fn contains(&self, d: &Rational) -> bool {
        if d.is_negative() {
            return false;
        }
        let v = d * rat::int(self.scale as i64);
        if self.initial.iter().any(|iv| iv.contains(&v)) {
            return true;
        }
        if let Some(pt) = &self.periodic {
            let t = rat::int(pt.threshold as i64);
            if v >= t {
                let period = rat::int(pt.period as i64);
                let off = &v - &t;
                let folded = &off - rat::Rational::from_integer(rat::floor_int(&(&off / &period)))
                    * &period
                    + &t;
                return pt.base.iter().any(|iv| iv.contains(&folded));
            }
        }
        false
    }

    /// The least member: a closed left endpoint, or the midpoint of the
    /// first open unit cell. Unscaled.
    pub fn least_point(&self) -> Option<Rational> {
        let first = self
            .initial
            .first()
            .or_else(|| self.periodic.as_ref().and_then(|pt| pt.base.first()))?;
        let scaled = if first.lo_closed {
            first.lo.clone()
        } else {
            &first.lo + rat::rat(1, 2)
        };
        Some(scaled / rat::int(self.scale as i64))
    }

    /// Union of the unit-cell contributions of tick-count sets: a `Zero`
    /// count `k` contributes the point `k`, `Open` the gap `(k, k+1)`, and
    /// `One` the point `k + 1`.
    pub fn from_annotations(scale: u64, entries: &[(FracClass, NatSet)]) -> Self {
        let mut acc = DurationSet::empty(scale);
        for (frac, set) in entries {
            let (set, parity) = match frac {
                FracClass::Zero => (set.clone(), 0u64),
                FracClass::Open => (set.clone(), 1),
                FracClass::One => (set.shifted(1), 0),
            };
            let t = set.threshold;
            let p = set.period;
            let mut head = vec![false; (2 * t) as usize];
            for &k in &set.initial {
                debug_assert!(k < t);
                head[(2 * k + parity) as usize] = true;
            }
            let mut pattern = vec![false; (2 * p) as usize];
            for &r in &set.base {
                debug_assert!(r >= t && r < t + p);
                pattern[(2 * (r - t) + parity) as usize] = true;
            }
            let part = Self::from_cells(scale, CellSeq { t, head, p, pattern });
            acc = acc.union(&part);
        }
        acc
    }

    /// Renders the set in unscaled time.
    fn display_interval(&self, iv: &Interval) -> String {
        let s = rat::int(self.scale as i64);
        let lo = &iv.lo / &s;
        match &iv.hi {
            None => format!(
                "{}{}, inf)",
                if iv.lo_closed { "[" } else { "(" },
                rat::format_rational(&lo)
            ),
            Some(h) => {
                let hi = h / &s;
                if lo == hi {
                    format!("{{{}}}", rat::format_rational(&lo))
                } else {
                    format!(
                        "{}{}, {}{}",
                        if iv.lo_closed { "[" } else { "(" },
                        rat::format_rational(&lo),
                        rat::format_rational(&hi),
                        if iv.hi_closed { "]" } else { ")" }
                    )
                }
            }
        }
    }
}

impl fmt::Display for DurationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let mut parts: Vec<String> = self
            .initial
            .iter()
            .map(|iv| self.display_interval(iv))
            .collect();
        if let Some(pt) = &self.periodic {
            let base: Vec<String> = pt.base.iter().map(|iv| self.display_interval(iv)).collect();
            let period = rat::rat(pt.period as i64, self.scale as i64);
            parts.push(format!(
                "repeat({}, period={})",
                base.join(" u "),
                rat::format_rational(&period)
            ));
        }
        f.write_str(&parts.join(" u "))
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: String,
    lo_closed: bool,
    hi: String,
    hi_closed: bool,
}

#[derive(Serialize, Deserialize)]
struct DurationSetRepr {
    scale: u64,
    initial: Vec<IntervalRepr>,
    threshold: Option<u64>,
    period: Option<u64>,
    base: Vec<IntervalRepr>,
}

fn interval_to_repr(iv: &Interval) -> IntervalRepr {
    IntervalRepr {
        lo: rat::format_rational(&iv.lo),
        lo_closed: iv.lo_closed,
        hi: match &iv.hi {
            None => "inf".into(),
            Some(h) => rat::format_rational(h),
        },
        hi_closed: iv.hi_closed,
    }
}

fn interval_from_repr(r: &IntervalRepr) -> Result<Interval, Error> {
    let lo = rat::parse_rational(&r.lo).map_err(Error::InvalidRational)?;
    let hi = if r.hi.trim() == "inf" {
        None
    } else {
        Some(rat::parse_rational(&r.hi).map_err(Error::InvalidRational)?)
    };
    Ok(Interval {
        lo,
        lo_closed: r.lo_closed,
        hi,
        hi_closed: r.hi_closed,
    })
}

impl Serialize for DurationSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = DurationSetRepr {
            scale: self.scale,
            initial: self.initial.iter().map(interval_to_repr).collect(),
            threshold: self.periodic.as_ref().map(|p| p.threshold),
            period: self.periodic.as_ref().map(|p| p.period),
            base: self
                .periodic
                .as_ref()
                .map(|p| p.base.iter().map(interval_to_repr).collect())
                .unwrap_or_default(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DurationSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let repr = DurationSetRepr::deserialize(d)?;
        let initial = repr
            .initial
            .iter()
            .map(interval_from_repr)
            .collect::<Result<Vec<_>, _>>()
            .map_err(DeError::custom)?;
        let periodic = match (repr.threshold, repr.period) {
            (Some(t), Some(p)) => Some(PeriodicTail {
                threshold: t,
                period: p,
                base: repr
                    .base
                    .iter()
                    .map(interval_from_repr)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(DeError::custom)?,
            }),
            (None, None) => None,
            _ => {
                return Err(DeError::custom(
                    "threshold and period must be both present or both absent",
                ))
            }
        };
        DurationSet::from_parts(repr.scale, initial, periodic).map_err(DeError::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn ivs(scale: u64, list: Vec<Interval>) -> DurationSet {
        DurationSet::from_intervals(scale, list).unwrap()
    }

    fn naturals() -> DurationSet {
        DurationSet::from_parts(
            1,
            vec![],
            Some(PeriodicTail {
                threshold: 0,
                period: 1,
                base: vec![Interval::point(int(0))],
            }),
        )
        .unwrap()
    }

    #[test]
    fn annotations_decode_unit_cells() {
        // Points {1,2} plus the gap (1,2) make the closed interval [1,2].
        let entries = vec![
            (FracClass::Zero, NatSet::finite(vec![1, 2])),
            (FracClass::Open, NatSet::finite(vec![1])),
        ];
        let set = DurationSet::from_annotations(1, &entries);
        assert!(set.equals(&ivs(1, vec![Interval::closed(int(1), int(2))])));
        // The `One` class contributes the next integer point.
        let one = DurationSet::from_annotations(1, &[(FracClass::One, NatSet::finite(vec![1]))]);
        assert!(one.equals(&ivs(1, vec![Interval::point(int(2))])));
        // No entries, no durations.
        assert!(DurationSet::from_annotations(1, &[]).is_empty());
    }

    #[test]
    fn annotations_periodic_points() {
        let nat = NatSet {
            initial: vec![],
            threshold: 0,
            period: 1,
            base: vec![0],
        };
        let set = DurationSet::from_annotations(1, &[(FracClass::Zero, nat)]);
        assert!(set.equals(&naturals()));
        let pt = set.periodic_tail().expect("periodic");
        assert_eq!((pt.threshold, pt.period), (0, 1));
        assert_eq!(pt.base, vec![Interval::point(int(0))]);
    }

    #[test]
    fn boolean_op_examples() {
        let a = ivs(1, vec![Interval::closed(int(1), int(2))]);
        let b = ivs(1, vec![Interval::closed(int(0), int(3))]);
        assert!(a.intersect(&b).equals(&a));
        let comp = b.complement();
        assert!(comp.equals(&ivs(1, vec![Interval::unbounded(int(3), false)])));
        // Complement of the naturals is the union of all open unit gaps.
        let gaps = naturals().complement();
        let pt = gaps.periodic_tail().expect("periodic");
        assert_eq!((pt.threshold, pt.period), (0, 1));
        assert_eq!(pt.base, vec![Interval::open(int(0), int(1))]);
        assert!(gaps.initial_intervals().is_empty());
    }

    #[test]
    fn subset_and_equality() {
        let a = ivs(1, vec![Interval::closed(int(1), int(2))]);
        let b = ivs(1, vec![Interval::closed(int(0), int(3))]);
        assert!(a.is_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(!a.equals(&b));
        assert!(a.equals(&a.clone()));
    }

    #[test]
    fn membership() {
        let a = ivs(1, vec![Interval::closed(int(1), int(2))]);
        assert!(a.contains(&rat(9, 5))); // 1.8
        assert!(!naturals().contains(&rat(5, 2)));
        assert!(naturals().contains(&int(7)));
        let tail = ivs(1, vec![Interval::unbounded(int(3), false)]);
        assert!(!tail.contains(&int(3)));
        assert!(tail.contains(&rat(7, 2)));
    }

    #[test]
    fn seam_between_initial_and_base_is_resolved() {
        // [2,3] followed by the points {3,4,5,...}: the first point merges
        // into the initial part and the threshold moves up.
        let set = DurationSet::from_parts(
            1,
            vec![Interval::closed(int(2), int(3))],
            Some(PeriodicTail {
                threshold: 3,
                period: 1,
                base: vec![Interval::point(int(3))],
            }),
        )
        .unwrap();
        assert_eq!(set.initial_intervals(), &[Interval::closed(int(2), int(3))]);
        let pt = set.periodic_tail().expect("periodic");
        assert_eq!((pt.threshold, pt.period), (4, 1));
        assert_eq!(pt.base, vec![Interval::point(int(4))]);
        assert!(set.contains(&int(5)));
        assert!(!set.contains(&rat(7, 2)));
    }

    #[test]
    fn full_cells_collapse_to_unbounded_tail() {
        let set = DurationSet::from_parts(
            1,
            vec![Interval::closed(int(2), int(3))],
            Some(PeriodicTail {
                threshold: 3,
                period: 1,
                base: vec![Interval::left_open(int(3), int(4))],
            }),
        )
        .unwrap();
        assert!(set.periodic_tail().is_none());
        assert_eq!(set.initial_intervals(), &[Interval::unbounded(int(2), true)]);
    }

    #[test]
    fn fractional_endpoints_refine_scale() {
        let set = ivs(1, vec![Interval::closed(int(1), rat(5, 2))]);
        assert_eq!(set.scale(), 2);
        assert!(set.contains(&rat(5, 2)));
        assert!(!set.contains(&rat(51, 20)));
        // Equal as sets to the same interval given directly in scale-2 units.
        let other = ivs(2, vec![Interval::closed(int(2), int(5))]);
        assert!(set.equals(&other));
    }

    #[test]
    fn least_points() {
        assert_eq!(
            ivs(1, vec![Interval::closed(int(1), int(2))]).least_point(),
            Some(int(1))
        );
        assert_eq!(
            ivs(1, vec![Interval::open(int(3), int(5))]).least_point(),
            Some(rat(7, 2))
        );
        assert_eq!(DurationSet::empty(1).least_point(), None);
        let n = naturals();
        assert_eq!(n.least_point(), Some(int(0)));
    }

    #[test]
    fn display_forms() {
        assert_eq!(DurationSet::empty(1).to_string(), "{}");
        assert_eq!(
            ivs(1, vec![Interval::closed(int(1), int(2))]).to_string(),
            "[1, 2]"
        );
        assert_eq!(
            ivs(2, vec![Interval::left_open(int(4), int(5))]).to_string(),
            "(2, 2.5]"
        );
        assert_eq!(naturals().to_string(), "repeat({0}, period=1)");
    }

    #[test]
    fn json_round_trip() {
        let sets = vec![
            DurationSet::empty(1),
            ivs(1, vec![Interval::closed(int(1), int(2))]),
            ivs(2, vec![Interval::left_open(int(4), int(5)), Interval::point(int(12))]),
            naturals(),
            naturals().complement(),
            ivs(1, vec![Interval::unbounded(rat(3, 1), false)]),
        ];
        for s in sets {
            let json = serde_json::to_string(&s).unwrap();
            let back: DurationSet = serde_json::from_str(&json).unwrap();
            assert_eq!(back, s, "round trip failed for {json}");
            // Canonical output is stable through a reparse.
            assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }

    #[test]
    fn json_shape_matches_schema() {
        let s = ivs(1, vec![Interval::closed(int(1), int(2))]);
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v["scale"], 1);
        assert_eq!(v["initial"][0]["lo"], "1");
        assert_eq!(v["initial"][0]["lo_closed"], true);
        assert_eq!(v["initial"][0]["hi"], "2");
        assert_eq!(v["threshold"], serde_json::Value::Null);
        assert_eq!(v["period"], serde_json::Value::Null);
        assert_eq!(v["base"], serde_json::json!([]));
        let inf = ivs(1, vec![Interval::unbounded(int(3), false)]);
        let v: serde_json::Value = serde_json::to_value(&inf).unwrap();
        assert_eq!(v["initial"][0]["hi"], "inf");
    }

    mod laws {
        use super::*;
        use proptest::prelude::*;

        fn cellseq_strategy() -> impl Strategy<Value = (u64, CellSeq)> {
            (
                1u64..=3,
                0u64..=5,
                1u64..=4,
                proptest::collection::vec(any::<bool>(), 0..=22),
            )
                .prop_map(|(scale, t, p, bits)| {
                    let mut bits = bits;
                    bits.resize((2 * t + 2 * p) as usize, false);
                    let head = bits[..(2 * t) as usize].to_vec();
                    let pattern = bits[(2 * t) as usize..].to_vec();
                    (scale, CellSeq { t, head, p, pattern })
                })
        }

        fn set_strategy() -> impl Strategy<Value = DurationSet> {
            cellseq_strategy().prop_map(|(scale, seq)| DurationSet::from_cells(scale, seq))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]

            #[test]
            fn canonical_membership_matches_raw_cells((scale, seq) in cellseq_strategy()) {
                let set = DurationSet::from_cells(scale, seq.clone());
                for c in 0..(2 * seq.t + 6 * seq.p + 8) {
                    let d = rat(c as i64, 2 * scale as i64);
                    prop_assert_eq!(set.contains(&d), seq.get(c), "cell {}", c);
                }
            }

            #[test]
            fn complement_involution(a in set_strategy()) {
                prop_assert!(a.complement().complement().equals(&a));
            }

            #[test]
            fn de_morgan(a in set_strategy(), b in set_strategy()) {
                let lhs = a.union(&b).complement();
                let rhs = a.complement().intersect(&b.complement());
                prop_assert!(lhs.equals(&rhs));
            }

            #[test]
            fn union_laws(a in set_strategy(), b in set_strategy(), c in set_strategy()) {
                prop_assert!(a.union(&b).equals(&b.union(&a)));
                prop_assert!(a.union(&a).equals(&a));
                prop_assert!(a.union(&b).union(&c).equals(&a.union(&b.union(&c))));
                prop_assert!(a.is_subset(&a.union(&b)));
                prop_assert!(a.intersect(&b).is_subset(&a));
            }

            #[test]
            fn subset_is_empty_difference(a in set_strategy(), b in set_strategy()) {
                prop_assert_eq!(a.is_subset(&b), a.intersect(&b.complement()).is_empty());
            }

            #[test]
            fn equality_agrees_with_grid(a in set_strategy(), b in set_strategy()) {
                let (ua, ub) = a.unify(&b);
                let horizon = {
                    let ta = ua.periodic_tail().map(|p| p.threshold + 2 * p.period).unwrap_or(0);
                    let tb = ub.periodic_tail().map(|p| p.threshold + 2 * p.period).unwrap_or(0);
                    let ends = |s: &DurationSet| s.initial_intervals().iter()
                        .map(|iv| match iv.hi.as_ref() {
                            Some(h) => rat::to_u64(h).unwrap_or(0),
                            // Reach past the start of an unbounded tail.
                            None => rat::to_u64(&iv.lo).unwrap_or(0) + 1,
                        })
                        .max().unwrap_or(0);
                    ta.max(tb).max(ends(&ua)).max(ends(&ub)) + 2
                };
                let grid_agree = (0..=2 * horizon).all(|j| {
                    let d = rat(j as i64, 2 * ua.scale() as i64);
                    ua.contains(&d) == ub.contains(&d)
                });
                let descriptors_match = ua.periodic_tail().map(|p| (p.threshold, p.period, p.base.clone()))
                    == ub.periodic_tail().map(|p| (p.threshold, p.period, p.base.clone()));
                prop_assert_eq!(a.equals(&b), grid_agree && descriptors_match);
            }
        }
    }
}

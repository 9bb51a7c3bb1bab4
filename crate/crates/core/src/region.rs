//! Clock regions: the finite, exact time-abstract bisimulation quotient.
//!
//! A region records, per clock, its integer part up to a per-clock cap and
//! whether its fractional part is zero, or the fact that the clock is above
//! its cap; plus the total order of the nonzero fractional parts as an
//! ordered partition (index 0 = smallest fraction). Guards are rectangular
//! (`clock ⋈ integer`), so guard satisfaction is uniform across a region and
//! decidable from this data alone.

use crate::model::Relation;
use crate::rat::{rat, Rational};

/// Fractional classification of a cap-1 clock, used to decode durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FracClass {
    /// Integer part 0, fraction zero: value 0.
    Zero,
    /// Value strictly between 0 and 1.
    Open,
    /// Value exactly 1.
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClockPos {
    /// Value `int` if `frac_zero`, else in the open interval `(int, int+1)`.
    At { int: u64, frac_zero: bool },
    /// Strictly above the clock's cap; no further tracking.
    Above,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    pos: Vec<ClockPos>,
    /// Ordered partition of the clocks with nonzero fraction (not above cap),
    /// by increasing fractional part; each class sorted by clock index.
    frac_order: Vec<Vec<usize>>,
}

/// Parameter-free rectangular guard atom, lowered to indices.
pub type GuardAtom = (usize, Relation, i64);

impl Region {
    /// All clocks at value 0.
    pub fn initial(num_clocks: usize) -> Region {
        Region {
            pos: vec![
                ClockPos::At {
                    int: 0,
                    frac_zero: true
                };
                num_clocks
            ],
            frac_order: Vec::new(),
        }
    }

    pub fn num_clocks(&self) -> usize {
        self.pos.len()
    }

    pub fn clock_pos(&self, clock: usize) -> ClockPos {
        self.pos[clock]
    }

    pub fn is_maximal(&self) -> bool {
        self.pos.iter().all(|p| matches!(p, ClockPos::Above))
    }

    /// The unique region entered next as time flows, or `None` on the
    /// maximal region (which is its own time successor).
    pub fn delay_successor(&self, caps: &[u64]) -> Option<Region> {
        let zero_clocks: Vec<usize> = self
            .pos
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match p {
                ClockPos::At { frac_zero: true, .. } => Some(i),
                _ => None,
            })
            .collect();
        if !zero_clocks.is_empty() {
            // All zero-fraction clocks start a fraction together; those at
            // their cap leave the tracked range instead.
            let mut next = self.clone();
            let mut new_class = Vec::new();
            for &i in &zero_clocks {
                let ClockPos::At { int, .. } = self.pos[i] else {
                    unreachable!()
                };
                if int >= caps[i] {
                    next.pos[i] = ClockPos::Above;
                } else {
                    next.pos[i] = ClockPos::At {
                        int,
                        frac_zero: false,
                    };
                    new_class.push(i);
                }
            }
            if !new_class.is_empty() {
                next.frac_order.insert(0, new_class);
            }
            return Some(next);
        }
        // No zero fractions: the largest fractional class reaches the next
        // integer boundary. If nothing is tracked, every clock is above cap.
        let top = self.frac_order.last()?.clone();
        let mut next = self.clone();
        next.frac_order.pop();
        for i in top {
            let ClockPos::At { int, .. } = self.pos[i] else {
                unreachable!()
            };
            next.pos[i] = ClockPos::At {
                int: int + 1,
                frac_zero: true,
            };
        }
        Some(next)
    }

    /// Whether one (equivalently, every) valuation in the region satisfies
    /// `clock ⋈ c`. Requires `c ≤ cap(clock)`.
    fn satisfies_atom(&self, &(clock, rel, c): &GuardAtom) -> bool {
        match self.pos[clock] {
            ClockPos::At {
                int,
                frac_zero: true,
            } => {
                let v = int as i64;
                match rel {
                    Relation::Lt => v < c,
                    Relation::Le => v <= c,
                    Relation::Eq => v == c,
                    Relation::Ge => v >= c,
                    Relation::Gt => v > c,
                }
            }
            ClockPos::At {
                int,
                frac_zero: false,
            } => {
                let k = int as i64;
                match rel {
                    // value in (k, k+1) with integer c: uniform answers.
                    Relation::Lt | Relation::Le => k < c,
                    Relation::Eq => false,
                    Relation::Ge | Relation::Gt => k >= c,
                }
            }
            ClockPos::Above => matches!(rel, Relation::Ge | Relation::Gt),
        }
    }

    pub fn satisfies(&self, guard: &[GuardAtom]) -> bool {
        guard.iter().all(|a| self.satisfies_atom(a))
    }

    /// Fires a discrete edge: `None` if the guard is not satisfiable in this
    /// region, otherwise the region with `resets` set to zero.
    pub fn discrete_successor(&self, guard: &[GuardAtom], resets: &[usize]) -> Option<Region> {
        if !self.satisfies(guard) {
            return None;
        }
        let mut next = self.clone();
        for &i in resets {
            next.pos[i] = ClockPos::At {
                int: 0,
                frac_zero: true,
            };
        }
        for class in &mut next.frac_order {
            class.retain(|i| !resets.contains(i));
        }
        next.frac_order.retain(|c| !c.is_empty());
        Some(next)
    }

    /// Classification of a cap-1 clock that is at most 1.
    pub fn t_class(&self, clock: usize) -> FracClass {
        match self.pos[clock] {
            ClockPos::At {
                int: 0,
                frac_zero: true,
            } => FracClass::Zero,
            ClockPos::At {
                int: 0,
                frac_zero: false,
            } => FracClass::Open,
            ClockPos::At {
                int: 1,
                frac_zero: true,
            } => FracClass::One,
            other => panic!("clock {clock} out of unit range: {other:?}"),
        }
    }

    /// A concrete rational valuation inside the region: above-cap clocks get
    /// `cap + 1`, fraction class `j` (of `n`) gets fraction `(j+1)/(n+1)`.
    pub fn witness(&self, caps: &[u64]) -> Vec<Rational> {
        let classes = self.frac_order.len() as i64;
        let mut out = Vec::with_capacity(self.pos.len());
        for (i, p) in self.pos.iter().enumerate() {
            out.push(match p {
                ClockPos::Above => rat(caps[i] as i64 + 1, 1),
                ClockPos::At {
                    int,
                    frac_zero: true,
                } => rat(*int as i64, 1),
                ClockPos::At {
                    int,
                    frac_zero: false,
                } => {
                    let class = self
                        .frac_order
                        .iter()
                        .position(|c| c.contains(&i))
                        .expect("open-fraction clock missing from order") as i64;
                    rat(*int as i64, 1) + rat(class + 1, classes + 1)
                }
            });
        }
        out
    }
}

/// Upper bound on the number of distinct regions: `|X|! · 2^|X| · Π(2M+2)`.
pub fn region_count_bound(caps: &[u64]) -> u128 {
    let n = caps.len() as u128;
    let mut b: u128 = 1;
    for k in 1..=n {
        b = b.saturating_mul(k);
    }
    b = b.saturating_mul(1u128 << caps.len().min(100));
    for &m in caps {
        b = b.saturating_mul(2 * m as u128 + 2);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn at(int: u64, frac_zero: bool) -> ClockPos {
        ClockPos::At { int, frac_zero }
    }

    #[test]
    fn initial_is_all_zero() {
        let r = Region::initial(2);
        assert_eq!(r.clock_pos(0), at(0, true));
        assert_eq!(r.clock_pos(1), at(0, true));
        let empty = Region::initial(0);
        assert!(empty.is_maximal());
        assert!(empty.delay_successor(&[]).is_none());
    }

    #[test]
    fn delay_chain_two_clocks() {
        // Clocks (x, t) with caps (3, 1); enumerate the full flow.
        let caps = [3, 1];
        let mut r = Region::initial(2);
        let mut chain = vec![r.clone()];
        while let Some(next) = r.delay_successor(&caps) {
            r = next;
            chain.push(r.clone());
        }
        // 0: x=0, t=0
        // 1: both in (0,1), same fraction
        // 2: x=1, t=1
        // 3: x in (1,2), t above
        // 4: x=2 ... 5: (2,3) ... 6: x=3 ... 7: both above (maximal)
        assert_eq!(chain.len(), 8);
        assert_eq!(chain[1].clock_pos(0), at(0, false));
        assert_eq!(chain[1].clock_pos(1), at(0, false));
        assert_eq!(chain[2].clock_pos(0), at(1, true));
        assert_eq!(chain[2].clock_pos(1), at(1, true));
        assert_eq!(chain[3].clock_pos(0), at(1, false));
        assert_eq!(chain[3].clock_pos(1), ClockPos::Above);
        assert_eq!(chain[6].clock_pos(0), at(3, true));
        assert!(chain[7].is_maximal());
        assert!(chain[7].delay_successor(&caps).is_none());
    }

    #[test]
    fn shared_fraction_hits_boundary_together() {
        let caps = [3, 3];
        let r = Region::initial(2).delay_successor(&caps).unwrap();
        // Both clocks share one fractional class.
        let next = r.delay_successor(&caps).unwrap();
        assert_eq!(next.clock_pos(0), at(1, true));
        assert_eq!(next.clock_pos(1), at(1, true));
    }

    #[test]
    fn discrete_successor_cases() {
        let caps = [3];
        // x = 1 satisfies x >= 1 and stays put without resets.
        let mut r = Region::initial(1);
        r = r.delay_successor(&caps).unwrap(); // (0,1)
        assert!(r
            .discrete_successor(&[(0, Relation::Ge, 1)], &[])
            .is_none());
        r = r.delay_successor(&caps).unwrap(); // x = 1
        let same = r.discrete_successor(&[(0, Relation::Ge, 1)], &[]).unwrap();
        assert_eq!(same, r);

        // x in (2,3): x <= 2 blocked, x <= 3 passes.
        let mut r2 = r.clone();
        for _ in 0..3 {
            r2 = r2.delay_successor(&caps).unwrap();
        }
        assert_eq!(r2.clock_pos(0), at(2, false));
        assert!(r2.discrete_successor(&[(0, Relation::Le, 2)], &[]).is_none());
        assert!(r2.discrete_successor(&[(0, Relation::Le, 3)], &[]).is_some());

        // Reset returns the clock to zero and drops it from the order.
        let reset = r2.discrete_successor(&[], &[0]).unwrap();
        assert_eq!(reset.clock_pos(0), at(0, true));
        assert_eq!(reset, Region::initial(1));
    }

    #[test]
    fn negative_constants() {
        let r = Region::initial(1);
        assert!(r.satisfies(&[(0, Relation::Ge, -1)]));
        assert!(r.satisfies(&[(0, Relation::Gt, -1)]));
        assert!(!r.satisfies(&[(0, Relation::Le, -1)]));
        assert!(!r.satisfies(&[(0, Relation::Eq, -1)]));
    }

    #[test]
    fn t_class_values() {
        let caps = [1];
        let r0 = Region::initial(1);
        assert_eq!(r0.t_class(0), FracClass::Zero);
        let r1 = r0.delay_successor(&caps).unwrap();
        assert_eq!(r1.t_class(0), FracClass::Open);
        let r2 = r1.delay_successor(&caps).unwrap();
        assert_eq!(r2.t_class(0), FracClass::One);
    }

    #[test]
    fn delay_terminates_within_bound() {
        for caps in [vec![3u64, 1], vec![2, 2, 2], vec![0], vec![5]] {
            let bound = region_count_bound(&caps);
            let mut r = Region::initial(caps.len());
            let mut steps: u128 = 0;
            while let Some(next) = r.delay_successor(&caps) {
                r = next;
                steps += 1;
                assert!(steps <= bound, "delay chain exceeded region bound");
            }
            assert!(r.is_maximal());
        }
    }

    #[test]
    fn witness_delay_prestability() {
        // Walk random-ish regions through delays; a concrete witness delayed
        // by a small epsilon must satisfy the guards its region satisfies.
        let caps = [3u64, 1];
        let guards: Vec<GuardAtom> = vec![
            (0, Relation::Ge, 1),
            (0, Relation::Le, 2),
            (1, Relation::Le, 1),
            (0, Relation::Eq, 2),
            (1, Relation::Gt, 0),
        ];
        let mut r = Region::initial(2);
        loop {
            let w = r.witness(&caps);
            // Witness matches the region's own structure.
            for (i, v) in w.iter().enumerate() {
                match r.clock_pos(i) {
                    ClockPos::Above => assert!(*v > rat(caps[i] as i64, 1)),
                    ClockPos::At { int, frac_zero } => {
                        let fl = v - rat(int as i64, 1);
                        if frac_zero {
                            assert!(fl.is_zero());
                        } else {
                            assert!(fl > rat(0, 1) && fl < rat(1, 1));
                        }
                    }
                }
            }
            for g in &guards {
                let (clock, rel, c) = *g;
                let sym = r.satisfies(&[*g]);
                let conc = rel.eval(&w[clock], &rat(c, 1));
                assert_eq!(sym, conc, "guard {g:?} disagreed on witness {w:?}");
            }
            match r.delay_successor(&caps) {
                Some(next) => r = next,
                None => break,
            }
        }
    }
}

use crate::error::{Error, Result};
use crate::moderate::ModerateFunction;
use crate::numeric::CompensatedSum;
use crate::orbits::{linear_to_circular, OrbitGraph, OrderStructure, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cell::RefCell;
use std::cmp::Ordering;
use std::io::Write;

/// One interval `J_x = (j₋(x), j₊(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutEntry {
    /// Graph state, or `None` for an added fixed point `x_*`.
    pub state: Option<usize>,
    pub lo: f64,
    pub hi: f64,
    /// `|J_x| = ν(x)` as stored; `hi − lo` agrees up to rounding.
    pub len: f64,
    pub log_len: f64,
}

/// The family `(J_x)` on ℝ/ℤ, listed in circular order starting from the
/// interval after `J_{x_*}`, which comes last and ends at `1 ≡ 0`.
///
/// The mass missing from the truncation is spread as equal gaps, one after
/// each interval other than `J_{x_*}`.
#[derive(Debug, Clone)]
pub struct IntervalLayout {
    entries: Vec<LayoutEntry>,
    points: Vec<Point>,
    pos: Vec<u32>,
    pub order: OrderStructure,
    pub gap: f64,
    pub covered: f64,
}

const ABSENT: u32 = u32::MAX;

/// A point of a laid-out interval, carried as `(entry, offset)` so that
/// endpoints stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePoint {
    pub entry: usize,
    /// In `[0, len]`; `0` and `len` are the endpoints.
    pub offset: f64,
}

/// Where a raw coordinate falls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Interval(CirclePoint),
    /// In the uncovered slack between `J_left` and `J_right`.
    Gap {
        left: usize,
        right: usize,
    },
}

/// Lays out `ν` along the circular order. A linear order is first closed up
/// with a fixed point `x_*` whose weight must be attached to `ν`; a circular
/// order uses its own basepoint as `x_*`.
pub fn layout(order: &OrderStructure, nu: &ModerateFunction, graph: &OrbitGraph) -> Result<IntervalLayout> {
    let (circular, star_state) = match order {
        OrderStructure::Linear(_) => (linear_to_circular(order)?, None),
        OrderStructure::Circular { basepoint, .. } => {
            let b = graph
                .index_of(basepoint)
                .filter(|&b| nu.contains(b))
                .ok_or_else(|| Error::MissingWeight(basepoint.to_string()))?;
            (order.clone(), Some(b))
        }
    };
    let star_log = match star_state {
        Some(b) => nu.log_nu(b).unwrap(),
        None => nu.star_log_nu().ok_or_else(|| Error::MissingWeight("*".into()))?,
    };

    let mut others: Vec<usize> = nu.domain().iter().copied().filter(|&x| Some(x) != star_state).collect();
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    others.sort_by(|&a, &b| {
        circular.compare(graph.point(a), graph.point(b)).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            Ordering::Equal
        })
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if others
        .windows(2)
        .any(|w| circular.compare(graph.point(w[0]), graph.point(w[1])).ok() != Some(Ordering::Less))
    {
        return Err(Error::OrderIncomplete("order is not strict on the truncation".into()));
    }

    let lens: Vec<(f64, f64)> = others
        .iter()
        .map(|&x| {
            let l = nu.log_nu(x).unwrap();
            (l.exp(), l)
        })
        .collect();
    let star_len = star_log.exp();
    let mut mass: CompensatedSum = lens.iter().map(|p| p.0).collect();
    mass.add(star_len);
    let covered = mass.value();
    let slack = (1.0 - covered).max(0.0);
    let gap = if others.is_empty() {
        0.0
    } else {
        slack / others.len() as f64
    };

    let mut entries = Vec::with_capacity(others.len() + 1);
    let mut run = CompensatedSum::new();
    let mut last_hi = 0.0f64;
    for (&x, &(len, log_len)) in others.iter().zip(&lens) {
        let lo = run.value().max(last_hi);
        run.add(len);
        let hi = run.value().max(lo);
        run.add(gap);
        last_hi = hi;
        entries.push(LayoutEntry {
            state: Some(x),
            lo,
            hi,
            len,
            log_len,
        });
    }
    let star_lo = (1.0 - star_len).max(last_hi).min(1.0);
    entries.push(LayoutEntry {
        state: star_state,
        lo: star_lo,
        hi: 1.0,
        len: star_len,
        log_len: star_log,
    });

    let mut pos = vec![ABSENT; graph.len()];
    let mut points = Vec::with_capacity(entries.len());
    for (k, e) in entries.iter().enumerate() {
        match e.state {
            Some(x) => {
                pos[x] = k as u32;
                points.push(graph.point(x).clone());
            }
            None => points.push(Point::Star),
        }
    }
    Ok(IntervalLayout {
        entries,
        points,
        pos,
        order: circular,
        gap,
        covered,
    })
}

impl IntervalLayout {
    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, k: usize) -> &LayoutEntry {
        &self.entries[k]
    }

    /// The point of `X̂` an entry stands for.
    pub fn point(&self, k: usize) -> &Point {
        &self.points[k]
    }

    /// Index of `J_{x_*}`.
    pub fn star(&self) -> usize {
        self.entries.len() - 1
    }

    /// Whether `x_*` is an added global fixed point.
    pub fn star_is_added(&self) -> bool {
        self.entries[self.star()].state.is_none()
    }

    pub fn entry_of(&self, x: usize) -> Option<usize> {
        self.pos.get(x).and_then(|&p| (p != ABSENT).then_some(p as usize))
    }

    /// Total uncovered length.
    pub fn slack(&self) -> f64 {
        (1.0 - self.covered).max(0.0)
    }

    pub fn raw(&self, p: CirclePoint) -> f64 {
        let e = &self.entries[p.entry];
        if p.offset >= e.len {
            return if e.hi >= 1.0 { 0.0 } else { e.hi };
        }
        let t = (e.lo + p.offset).min(e.hi);
        if t >= 1.0 {
            t - 1.0
        } else {
            t
        }
    }

    /// Locates a raw coordinate in `[0, 1)`.
    pub fn locate(&self, xi: f64) -> Location {
        let xi = xi.rem_euclid(1.0);
        let k = self.entries.partition_point(|e| e.lo <= xi);
        if k == 0 {
            // Before the first interval: only possible when it does not start at 0.
            return Location::Gap {
                left: self.star(),
                right: 0,
            };
        }
        let e = &self.entries[k - 1];
        if xi <= e.hi {
            Location::Interval(CirclePoint {
                entry: k - 1,
                offset: (xi - e.lo).clamp(0.0, e.len),
            })
        } else {
            Location::Gap {
                left: k - 1,
                right: k % self.entries.len(),
            }
        }
    }

    /// Exact pairwise disjointness of the open intervals, read off the
    /// endpoints in circular order.
    pub fn disjoint(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].hi <= w[1].lo && w[0].lo <= w[0].hi)
            && self.entries.iter().all(|e| e.len > 0.0)
            && self.entries.last().is_some_and(|e| e.hi <= 1.0)
    }

    /// Cuts the circle at the centre of `J_{x_*}`, a fixed point of every
    /// generator when `x_*` is an added fixed point, giving coordinates on
    /// `[0, 1]`.
    pub fn interval_coordinate(&self, xi: f64) -> f64 {
        let e = &self.entries[self.star()];
        let cut = e.lo + 0.5 * (e.hi - e.lo);
        (xi - cut).rem_euclid(1.0)
    }

    /// CSV with columns `state, j_minus, j_plus, log_length`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "j_minus", "j_plus", "log_length"])?;
        for (k, e) in self.entries.iter().enumerate() {
            out.write_record([
                self.points[k].to_string(),
                e.lo.to_string(),
                (e.hi % 1.0).to_string(),
                e.log_len.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderRealizationReport {
    pub samples: usize,
    pub mismatches: usize,
}

fn raw_orientation(a: f64, b: f64, c: f64) -> i8 {
    if a == b || b == c || a == c {
        return 0;
    }
    let db = (b - a).rem_euclid(1.0);
    let dc = (c - a).rem_euclid(1.0);
    if db < dc {
        1
    } else {
        -1
    }
}

/// Compares `c(x, y, z)` with the circular orientation of
/// `(j₋(x), j₋(y), j₋(z))` on random triples of laid-out points.
pub fn order_realization_check(lay: &IntervalLayout, samples: usize, seed: u64) -> Result<OrderRealizationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lay.len();
    let mut mismatches = 0;
    for _ in 0..samples {
        let t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
        let c = lay
            .order
            .orientation(lay.point(t[0]), lay.point(t[1]), lay.point(t[2]))?;
        let r = raw_orientation(lay.entry(t[0]).lo, lay.entry(t[1]).lo, lay.entry(t[2]).lo);
        if c != r {
            mismatches += 1;
        }
    }
    Ok(OrderRealizationReport { samples, mismatches })
}

use super::family::{dphi_offset, phi_offset};
use super::layout::{CirclePoint, IntervalLayout, Location};
use crate::error::{Error, Result};
use crate::moderate::ModerateFunction;
use crate::numeric::circle_distance;
use crate::orbits::{GenId, OrbitGraph, Word};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;

/// The truncated C¹ action: each generator maps `J_x` onto `J_{gx}` by the
/// arctan transition, and fixes `J_{x_*}` when `x_*` was added.
#[derive(Debug, Clone)]
pub struct RealizedAction {
    graph: Arc<OrbitGraph>,
    layout: IntervalLayout,
    nu: ModerateFunction,
}

/// Result of evaluating `ρ(g)` at a raw circle coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Evaluation {
    Point {
        value: f64,
        degraded: bool,
    },
    /// `ξ` sits in uncovered slack; the image lies between these two images
    /// of the bracketing endpoints.
    Bracket {
        left: f64,
        right: f64,
    },
}

impl Evaluation {
    pub fn is_gap(&self) -> bool {
        matches!(self, Evaluation::Bracket { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Evaluation::Point { value, .. } => Some(value),
            Evaluation::Bracket { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeValue {
    pub value: f64,
    pub gap: bool,
}

impl RealizedAction {
    pub fn new(graph: Arc<OrbitGraph>, layout: IntervalLayout, nu: ModerateFunction) -> Self {
        RealizedAction { graph, layout, nu }
    }

    pub fn graph(&self) -> &Arc<OrbitGraph> {
        &self.graph
    }

    pub fn layout(&self) -> &IntervalLayout {
        &self.layout
    }

    pub fn nu(&self) -> &ModerateFunction {
        &self.nu
    }

    fn miss(&self, g: GenId, k: usize) -> Error {
        Error::EvaluableDomainMiss(format!(
            "{} applied to {}",
            self.graph.generators().label(g),
            self.layout.point(k)
        ))
    }

    /// Entry of `J_{gx}` for the entry of `J_x`.
    pub fn entry_image(&self, g: GenId, k: usize) -> Result<usize> {
        if g == self.graph.generators().identity() {
            return Ok(k);
        }
        match self.layout.entry(k).state {
            None => Ok(k),
            Some(x) => self
                .graph
                .step(g, x)
                .and_then(|y| self.layout.entry_of(y))
                .ok_or_else(|| self.miss(g, k)),
        }
    }

    /// Whether `J_x` and every intermediate image under `w` are laid out.
    pub fn evaluable(&self, w: &Word, k: usize) -> bool {
        let mut cur = k;
        for &g in w.0.iter().rev() {
            match self.entry_image(g, cur) {
                Ok(n) => cur = n,
                Err(_) => return false,
            }
        }
        true
    }

    /// `ρ(g)` on an interval point; endpoints map to endpoints exactly.
    pub fn apply(&self, g: GenId, p: CirclePoint) -> Result<(CirclePoint, bool)> {
        let k = self.entry_image(g, p.entry)?;
        if k == p.entry {
            return Ok((p, false));
        }
        let a = self.layout.entry(p.entry).len;
        let b = self.layout.entry(k).len;
        let (offset, degraded) = phi_offset(a, b, p.offset);
        Ok((CirclePoint { entry: k, offset }, degraded))
    }

    /// `Dρ(g)` at an interval point.
    pub fn apply_derivative(&self, g: GenId, p: CirclePoint) -> Result<f64> {
        let k = self.entry_image(g, p.entry)?;
        if k == p.entry {
            return Ok(1.0);
        }
        let a = self.layout.entry(p.entry).len;
        let b = self.layout.entry(k).len;
        Ok(dphi_offset(a, b, p.offset))
    }

    /// `ρ(w)` (last letter first) with the chain-rule derivative.
    pub fn apply_word(&self, w: &Word, p: CirclePoint) -> Result<(CirclePoint, f64, bool)> {
        let mut cur = p;
        let mut d = 1.0;
        let mut degraded = false;
        for &g in w.0.iter().rev() {
            d *= self.apply_derivative(g, cur)?;
            let (next, deg) = self.apply(g, cur)?;
            degraded |= deg;
            cur = next;
        }
        Ok((cur, d, degraded))
    }

    /// `ρ(w)(ξ)` for a raw coordinate.
    pub fn evaluate(&self, w: &Word, xi: f64) -> Result<Evaluation> {
        if w.0.iter().all(|&g| g == self.graph.generators().identity()) {
            return Ok(Evaluation::Point {
                value: xi,
                degraded: false,
            });
        }
        match self.layout.locate(xi) {
            Location::Interval(p) => {
                let (q, _, degraded) = self.apply_word(w, p)?;
                Ok(Evaluation::Point {
                    value: self.layout.raw(q),
                    degraded,
                })
            }
            Location::Gap { left, right } => {
                let l = CirclePoint {
                    entry: left,
                    offset: self.layout.entry(left).len,
                };
                let r = CirclePoint {
                    entry: right,
                    offset: 0.0,
                };
                let (l, _, _) = self.apply_word(w, l)?;
                let (r, _, _) = self.apply_word(w, r)?;
                Ok(Evaluation::Bracket {
                    left: self.layout.raw(l),
                    right: self.layout.raw(r),
                })
            }
        }
    }

    /// `Dρ(w)(ξ)`; `1` with the gap flag in uncovered slack.
    pub fn derivative(&self, w: &Word, xi: f64) -> Result<DerivativeValue> {
        match self.layout.locate(xi) {
            Location::Interval(p) => Ok(DerivativeValue {
                value: self.apply_word(w, p)?.1,
                gap: false,
            }),
            Location::Gap { .. } => Ok(DerivativeValue { value: 1.0, gap: true }),
        }
    }

    /// Raw grid `(k + 1/2)/n`, `k < n`.
    pub fn grid(n: usize) -> impl IndexedParallelIterator<Item = f64> {
        (0..n).into_par_iter().map(move |k| (k as f64 + 0.5) / n as f64)
    }

    /// Checks a relation `w = 1` on a raw grid and on every evaluable endpoint.
    pub fn relation_check(&self, w: &Word, grid: usize) -> RelationReport {
        let layout = &self.layout;
        let word = w.display(self.graph.generators());
        let per_point: Vec<GridOutcome> = Self::grid(grid)
            .map(|xi| match layout.locate(xi) {
                Location::Gap { .. } => GridOutcome::Gap,
                Location::Interval(p) => match self.apply_word(w, p) {
                    Ok((q, _, _)) => GridOutcome::Value(circle_distance(layout.raw(q), xi)),
                    Err(e) => GridOutcome::Miss(e.to_string()),
                },
            })
            .collect();
        let mut report = RelationReport {
            word,
            grid,
            evaluated: 0,
            skipped_gap: 0,
            skipped_domain: 0,
            max_residual: 0.0,
            endpoints_checked: 0,
            endpoint_residual: 0.0,
            first_miss: None,
        };
        for o in per_point {
            match o {
                GridOutcome::Gap => report.skipped_gap += 1,
                GridOutcome::Miss(m) => {
                    report.skipped_domain += 1;
                    report.first_miss.get_or_insert(m);
                }
                GridOutcome::Value(r) => {
                    report.evaluated += 1;
                    report.max_residual = report.max_residual.max(r);
                }
            }
        }
        for k in 0..layout.len() {
            if !self.evaluable(w, k) {
                continue;
            }
            for offset in [0.0, layout.entry(k).len] {
                let p = CirclePoint { entry: k, offset };
                let (q, _, _) = self.apply_word(w, p).unwrap();
                report.endpoints_checked += 1;
                report.endpoint_residual = report
                    .endpoint_residual
                    .max(circle_distance(layout.raw(q), layout.raw(p)));
            }
        }
        report
    }

    /// CSV with columns `xi, g, D` on a raw grid; gap points report `D = 1`.
    pub fn write_derivative_csv<W: Write>(&self, g: GenId, grid: usize, w: W) -> Result<()> {
        let word = Word::single(g);
        let label = self.graph.generators().label(g).to_string();
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["xi", "g", "D"])?;
        for k in 0..grid {
            let xi = (k as f64 + 0.5) / grid as f64;
            let d = match self.derivative(&word, xi) {
                Ok(d) => d.value.to_string(),
                Err(_) => String::from("undefined"),
            };
            out.write_record([xi.to_string(), label.clone(), d])?;
        }
        out.flush()?;
        Ok(())
    }
}

enum GridOutcome {
    Gap,
    Miss(String),
    Value(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub word: String,
    pub grid: usize,
    pub evaluated: usize,
    pub skipped_gap: usize,
    pub skipped_domain: usize,
    pub max_residual: f64,
    pub endpoints_checked: usize,
    /// Exact endpoint arithmetic, so this is `0` for a true relation.
    pub endpoint_residual: f64,
    pub first_miss: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moderate::TailBound;
    use crate::orbits::{build_orbit_graph, Point, Zd};
    use crate::realize::layout;

    /// ℤ with `ν(k) ∝ max(|k|, 1)⁻⁴` on `|k| ≤ 30`, plus the added fixed point.
    fn quartic_z() -> RealizedAction {
        let g = Arc::new(build_orbit_graph(Arc::new(Zd::new(1).unwrap()), &[Point::tuple(&[0])], 30).unwrap());
        let entries: Vec<(usize, u64, f64)> = (0..g.len())
            .map(|x| {
                let k = g.point(x).as_tuple().unwrap()[0].unsigned_abs();
                (x, k, -4.0 * (k.max(1) as f64).ln())
            })
            .collect();
        let nu = ModerateFunction::from_log_weights(g.len(), &entries, Some(0.0), TailBound::Explicit(1e-3));
        let lay = layout(&g.action().order().unwrap(), &nu, &g).unwrap();
        RealizedAction::new(g, lay, nu)
    }

    fn entry_of(a: &RealizedAction, k: i64) -> usize {
        let x = a.graph().index_of(&Point::tuple(&[k])).unwrap();
        a.layout().entry_of(x).unwrap()
    }

    #[test]
    fn center_derivative_of_shift() {
        let a = quartic_z();
        let plus = Word::single(a.graph().generators().id("e1").unwrap());
        let e = a.layout().entry(entry_of(&a, 10)).clone();
        let mid = e.lo + 0.5 * e.len;
        let d = a.derivative(&plus, mid).unwrap();
        let expected = (10.0f64 / 11.0).powi(8);
        assert!(!d.gap);
        assert!((d.value - expected).abs() < 1e-9, "{} vs {expected}", d.value);
        let h = 1e-6 * e.len;
        let fd = (a.evaluate(&plus, mid + h).unwrap().value().unwrap()
            - a.evaluate(&plus, mid - h).unwrap().value().unwrap())
            / (2.0 * h);
        assert!((fd - expected).abs() / expected < 1e-5);
    }

    #[test]
    fn endpoints_map_exactly() {
        let a = quartic_z();
        let plus = a.graph().generators().id("e1").unwrap();
        let j0 = entry_of(&a, 0);
        let j1 = entry_of(&a, 1);
        let p = CirclePoint {
            entry: j0,
            offset: a.layout().entry(j0).len,
        };
        let (q, _) = a.apply(plus, p).unwrap();
        assert_eq!(q.entry, j1);
        assert_eq!(a.layout().raw(q), a.layout().entry(j1).hi);
    }

    #[test]
    fn identity_and_inverse_pairs() {
        let a = quartic_z();
        let gens = a.graph().generators();
        for xi in [0.0, 0.1234, 0.5, 0.999] {
            assert_eq!(a.evaluate(&Word::default(), xi).unwrap().value(), Some(xi));
            assert_eq!(a.derivative(&Word::default(), xi).unwrap().value, 1.0);
        }
        let w = gens.parse_word("e1 E1").unwrap();
        let r = a.relation_check(&w, 1000);
        assert!(r.max_residual < 1e-12, "{r:?}");
        assert_eq!(r.endpoint_residual, 0.0);
    }

    #[test]
    fn gaps_give_brackets() {
        let a = quartic_z();
        let plus = Word::single(a.graph().generators().id("e1").unwrap());
        let lay = a.layout();
        assert!(lay.gap > 0.0);
        let e = lay.entry(entry_of(&a, 3));
        let xi = e.hi + 0.5 * lay.gap;
        let out = a.evaluate(&plus, xi).unwrap();
        let Evaluation::Bracket { left, right } = out else {
            panic!("expected a bracket, got {out:?}");
        };
        assert_eq!(left, lay.entry(entry_of(&a, 4)).hi);
        assert!(right >= left);
        let d = a.derivative(&plus, xi).unwrap();
        assert!(d.gap && d.value == 1.0);
    }

    #[test]
    fn boundary_images_are_misses() {
        let a = quartic_z();
        let plus = a.graph().generators().id("e1").unwrap();
        assert!(matches!(
            a.entry_image(plus, entry_of(&a, 30)),
            Err(Error::EvaluableDomainMiss(_))
        ));
    }
}

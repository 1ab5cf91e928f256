use super::{OrbitGraph, Point};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::sync::Arc;

/// A strict total order on points.
pub trait LinearOrder: Send + Sync {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering>;
}

/// A circular order: `orientation(a, b, c) ∈ {0, ±1}`.
pub trait CircularOrder: Send + Sync {
    fn orientation(&self, a: &Point, b: &Point, c: &Point) -> Result<i8>;
}

#[derive(Clone)]
pub enum OrderStructure {
    Linear(Arc<dyn LinearOrder>),
    Circular {
        order: Arc<dyn CircularOrder>,
        basepoint: Point,
    },
}

impl std::fmt::Debug for OrderStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderStructure::Linear(_) => write!(f, "OrderStructure::Linear"),
            OrderStructure::Circular { basepoint, .. } => {
                write!(f, "OrderStructure::Circular(x_* = {basepoint})")
            }
        }
    }
}

impl OrderStructure {
    pub fn is_linear(&self) -> bool {
        matches!(self, OrderStructure::Linear(_))
    }

    pub fn basepoint(&self) -> Option<&Point> {
        match self {
            OrderStructure::Circular { basepoint, .. } => Some(basepoint),
            OrderStructure::Linear(_) => None,
        }
    }

    /// Circular orientation of a triple. Linear orders are read as circular
    /// orders on the same set (cyclic orientation of the sorted triple).
    pub fn orientation(&self, a: &Point, b: &Point, c: &Point) -> Result<i8> {
        match self {
            OrderStructure::Circular { order, .. } => order.orientation(a, b, c),
            OrderStructure::Linear(order) => cyclic_sign(order.as_ref(), a, b, c),
        }
    }

    /// The linear order: the order itself, or for a circular order the one
    /// induced on the complement of the basepoint (`x < y` iff
    /// `c(x, y, x_*) = 1`). The basepoint compares above everything.
    pub fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        match self {
            OrderStructure::Linear(order) => order.compare(a, b),
            OrderStructure::Circular { order, basepoint } => {
                if a == b {
                    return Ok(Ordering::Equal);
                }
                if a == basepoint {
                    return Ok(Ordering::Greater);
                }
                if b == basepoint {
                    return Ok(Ordering::Less);
                }
                Ok(match order.orientation(a, b, basepoint)? {
                    1 => Ordering::Less,
                    _ => Ordering::Greater,
                })
            }
        }
    }
}

fn cyclic_sign(order: &dyn LinearOrder, a: &Point, b: &Point, c: &Point) -> Result<i8> {
    if a == b || b == c || a == c {
        return Ok(0);
    }
    let ab = order.compare(a, b)? == Ordering::Less;
    let bc = order.compare(b, c)? == Ordering::Less;
    let ca = order.compare(c, a)? == Ordering::Less;
    // Exactly one of the three cyclic comparisons fails for a positively
    // oriented triple, exactly two for a negative one.
    Ok(if (ab as u8 + bc as u8 + ca as u8) == 2 { 1 } else { -1 })
}

/// Circular order on `X ⊔ {x_*}` obtained from a linear order, with the star
/// placed above every point.
struct StarClosure {
    inner: Arc<dyn LinearOrder>,
}

impl LinearOrder for StarClosure {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        match (a, b) {
            (Point::Star, Point::Star) => Ok(Ordering::Equal),
            (Point::Star, _) => Ok(Ordering::Greater),
            (_, Point::Star) => Ok(Ordering::Less),
            _ => self.inner.compare(a, b),
        }
    }
}

impl CircularOrder for StarClosure {
    fn orientation(&self, a: &Point, b: &Point, c: &Point) -> Result<i8> {
        cyclic_sign(self, a, b, c)
    }
}

/// Closes a linear order up to a circular one on `X ⊔ {x_*}`, with
/// `c(x, y, x_*) = 1` iff `x < y`. The action is extended by fixing `x_*`.
pub fn linear_to_circular(order: &OrderStructure) -> Result<OrderStructure> {
    match order {
        OrderStructure::Linear(inner) => Ok(OrderStructure::Circular {
            order: Arc::new(StarClosure { inner: inner.clone() }),
            basepoint: Point::Star,
        }),
        OrderStructure::Circular { .. } => Err(Error::WrongOrderKind { expected: "linear" }),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OrderReport {
    pub samples: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

/// Samples `(g, triple)` pairs inside the truncation and counts those whose
/// orientation changes under `g`.
pub fn order_preservation_report(
    graph: &OrbitGraph,
    order: &OrderStructure,
    sample_size: usize,
    seed: u64,
) -> Result<OrderReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens: Vec<_> = graph.generators().non_identity().collect();
    let n = graph.len();
    let mut report = OrderReport {
        samples: 0,
        violations: 0,
        first_violation: None,
    };
    if n < 3 || gens.is_empty() {
        return Ok(report);
    }
    let mut attempts = 0usize;
    while report.samples < sample_size && attempts < sample_size * 20 {
        attempts += 1;
        let g = gens[rng.gen_range(0..gens.len())];
        let t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
        let imgs: Option<Vec<usize>> = t.iter().map(|&x| graph.step(g, x)).collect();
        let Some(imgs) = imgs else { continue };
        let before = order.orientation(graph.point(t[0]), graph.point(t[1]), graph.point(t[2]))?;
        let after = order.orientation(graph.point(imgs[0]), graph.point(imgs[1]), graph.point(imgs[2]))?;
        report.samples += 1;
        if before != after {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some(format!(
                    "{} moves ({}, {}, {}) from orientation {before} to {after}",
                    graph.generators().label(g),
                    graph.point(t[0]),
                    graph.point(t[1]),
                    graph.point(t[2]),
                ));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct IntOrder;
    impl LinearOrder for IntOrder {
        fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
            match (a, b) {
                (Point::Label(x), Point::Label(y)) => Ok(x.cmp(y)),
                _ => Err(Error::OrderIncomplete(format!("{a}, {b}"))),
            }
        }
    }

    fn lbl(s: &str) -> Point {
        Point::Label(s.into())
    }

    #[test]
    fn star_closure_definition() {
        let circ = linear_to_circular(&OrderStructure::Linear(Arc::new(IntOrder))).unwrap();
        let (a, b, c) = (lbl("a"), lbl("b"), lbl("c"));
        assert_eq!(circ.orientation(&a, &b, &Point::Star).unwrap(), 1);
        assert_eq!(circ.orientation(&b, &a, &Point::Star).unwrap(), -1);
        assert_eq!(circ.orientation(&a, &b, &c).unwrap(), 1);
        assert_eq!(circ.orientation(&a, &a, &b).unwrap(), 0);
        assert!(linear_to_circular(&circ).is_err());
    }

    #[test]
    fn star_closure_matches_cocycle_extension() {
        // c(x1,x2,x3) = c(x2,x3,*) − c(x1,x3,*) + c(x1,x2,*) for distinct x's.
        let circ = linear_to_circular(&OrderStructure::Linear(Arc::new(IntOrder))).unwrap();
        let pts = [lbl("a"), lbl("b"), lbl("c")];
        let star = Point::Star;
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            let (x1, x2, x3) = (&pts[p[0]], &pts[p[1]], &pts[p[2]]);
            let base = |u: &Point, v: &Point| -> i8 {
                if u < v {
                    1
                } else {
                    -1
                }
            };
            let extended = base(x2, x3) - base(x1, x3) + base(x1, x2);
            assert_eq!(circ.orientation(x1, x2, x3).unwrap(), extended);
            assert_eq!(circ.orientation(x1, x2, &star).unwrap(), base(x1, x2));
        }
    }

    #[test]
    fn induced_linear_order_from_circular() {
        let circ = linear_to_circular(&OrderStructure::Linear(Arc::new(IntOrder))).unwrap();
        assert_eq!(circ.compare(&lbl("a"), &lbl("b")).unwrap(), Ordering::Less);
        assert_eq!(circ.compare(&lbl("b"), &lbl("a")).unwrap(), Ordering::Greater);
        assert_eq!(circ.compare(&Point::Star, &lbl("a")).unwrap(), Ordering::Greater);
    }
}

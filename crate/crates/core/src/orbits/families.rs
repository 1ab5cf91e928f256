//! Built-in actions and user-supplied generator tables.

use super::{Action, CircularOrder, GenId, GeneratorSystem, LinearOrder, OrderStructure, Point, SharedAction};
use crate::error::{Error, Result};
use crate::fixed::Fixed256;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

fn tuple_of(p: &Point, len: Option<usize>) -> Result<&[i64]> {
    match p {
        Point::Tuple(v) if len.is_none_or(|l| v.len() == l) => Ok(v),
        _ => Err(Error::NotInStateSpace(p.to_string())),
    }
}

fn order_err(a: &Point, b: &Point) -> Error {
    Error::OrderIncomplete(format!("{a} vs {b}"))
}

// ---------------------------------------------------------------------------
// ℤᵈ

/// ℤᵈ acting on itself by translations, with generators `e1, E1, …`.
pub struct Zd {
    d: usize,
    gens: GeneratorSystem,
    moves: Vec<Option<(usize, i64)>>,
}

impl Zd {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpec("zd needs d >= 1".into()));
        }
        let names: Vec<(String, String)> = (1..=d).map(|i| (format!("e{i}"), format!("E{i}"))).collect();
        let pairs: Vec<(&str, Option<&str>)> = names.iter().map(|(a, b)| (a.as_str(), Some(b.as_str()))).collect();
        let gens = GeneratorSystem::from_pairs("id", &pairs)?;
        let mut moves = vec![None];
        for i in 0..d {
            moves.push(Some((i, 1)));
            moves.push(Some((i, -1)));
        }
        Ok(Zd { d, gens, moves })
    }
}

struct LexOrder {
    len: Option<usize>,
}

impl LinearOrder for LexOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let x = tuple_of(a, self.len).map_err(|_| order_err(a, b))?;
        let y = tuple_of(b, self.len).map_err(|_| order_err(a, b))?;
        Ok(x.cmp(y))
    }
}

impl Action for Zd {
    fn name(&self) -> String {
        format!("z{}", self.d)
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        tuple_of(p, Some(self.d)).is_ok()
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        let v = tuple_of(p, Some(self.d))?;
        let (i, delta) = self.moves[g].expect("identity handled by act");
        let mut out = v.to_vec();
        out[i] = out[i]
            .checked_add(delta)
            .ok_or_else(|| Error::Overflow(p.to_string()))?;
        Ok(Some(Point::Tuple(out)))
    }
    fn order(&self) -> Option<OrderStructure> {
        Some(OrderStructure::Linear(Arc::new(LexOrder { len: Some(self.d) })))
    }
    fn seed(&self) -> Point {
        Point::Tuple(vec![0; self.d])
    }
}

// ---------------------------------------------------------------------------
// Discrete Heisenberg group

/// H₃(ℤ) acting on itself by left multiplication. Elements are normal forms
/// `(x, y, z)` of the unipotent matrix with entries `x, y` above the diagonal
/// and `z` in the corner; `a = (1,0,0)`, `b = (0,1,0)`, `c = (0,0,1) = [a, b]`.
pub struct Heisenberg {
    gens: GeneratorSystem,
    center: bool,
}

impl Heisenberg {
    pub fn new(center: bool) -> Result<Self> {
        let mut pairs = vec![("a", Some("A")), ("b", Some("B"))];
        if center {
            pairs.push(("c", Some("C")));
        }
        Ok(Heisenberg {
            gens: GeneratorSystem::from_pairs("id", &pairs)?,
            center,
        })
    }

    pub fn multiply(p: [i64; 3], q: [i64; 3]) -> [i64; 3] {
        [p[0] + q[0], p[1] + q[1], p[2] + q[2] + p[0] * q[1]]
    }
}

/// Left-invariant order: `p < q` iff `p⁻¹q` is lexicographically positive in
/// `(x, y, z)`.
struct HeisenbergOrder;

impl LinearOrder for HeisenbergOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let p = tuple_of(a, Some(3)).map_err(|_| order_err(a, b))?;
        let q = tuple_of(b, Some(3)).map_err(|_| order_err(a, b))?;
        let dx = q[0] - p[0];
        let dy = q[1] - p[1];
        let dz = q[2] - p[2] - p[0] * dy;
        Ok([0, 0, 0].cmp(&[dx, dy, dz]))
    }
}

impl Action for Heisenberg {
    fn name(&self) -> String {
        if self.center {
            "heisenberg-c".into()
        } else {
            "heisenberg".into()
        }
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        tuple_of(p, Some(3)).is_ok()
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        let v = tuple_of(p, Some(3))?;
        let elem = match self.gens.label(g) {
            "a" => [1, 0, 0],
            "A" => [-1, 0, 0],
            "b" => [0, 1, 0],
            "B" => [0, -1, 0],
            "c" => [0, 0, 1],
            "C" => [0, 0, -1],
            other => return Err(Error::UnknownGenerator(other.into())),
        };
        let r = Heisenberg::multiply(elem, [v[0], v[1], v[2]]);
        Ok(Some(Point::Tuple(r.to_vec())))
    }
    fn order(&self) -> Option<OrderStructure> {
        Some(OrderStructure::Linear(Arc::new(HeisenbergOrder)))
    }
    fn seed(&self) -> Point {
        Point::tuple(&[0, 0, 0])
    }
}

// ---------------------------------------------------------------------------
// Grigorchuk group on binary rays

/// The first Grigorchuk group acting on the orbit of the ray `111…` through
/// its automaton `a = σ`, `b = (a, c)`, `c = (a, d)`, `d = (1, b)`.
///
/// A point is the finite prefix of a ray eventually equal to `1`, with
/// trailing ones stripped. The attached order is the lexicographic order of
/// rays; the automaton does not preserve it.
pub struct Grigorchuk {
    gens: GeneratorSystem,
}

impl Grigorchuk {
    pub fn new() -> Result<Self> {
        Ok(Grigorchuk {
            gens: GeneratorSystem::from_pairs("id", &[("a", None), ("b", None), ("c", None), ("d", None)])?,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum GrigState {
    A,
    B,
    C,
    D,
}

fn grigorchuk_act(mut state: GrigState, bits: &[i64]) -> Vec<i64> {
    let mut out = bits.to_vec();
    let mut i = 0usize;
    loop {
        if state == GrigState::A {
            if i >= out.len() {
                out.resize(i + 1, 1);
            }
            out[i] = 1 - out[i];
            break;
        }
        if i >= out.len() {
            // b, c, d fix the tail 111…
            break;
        }
        let bit = out[i];
        state = match (state, bit) {
            (GrigState::B, 0) | (GrigState::C, 0) => GrigState::A,
            (GrigState::B, _) => GrigState::C,
            (GrigState::C, _) => GrigState::D,
            (GrigState::D, 0) => break,
            (GrigState::D, _) => GrigState::B,
            (GrigState::A, _) => unreachable!(),
        };
        i += 1;
    }
    while out.last() == Some(&1) {
        out.pop();
    }
    out
}

struct RayOrder;

impl LinearOrder for RayOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let x = tuple_of(a, None).map_err(|_| order_err(a, b))?;
        let y = tuple_of(b, None).map_err(|_| order_err(a, b))?;
        let n = x.len().max(y.len());
        for i in 0..n {
            let (u, v) = (x.get(i).copied().unwrap_or(1), y.get(i).copied().unwrap_or(1));
            if u != v {
                return Ok(u.cmp(&v));
            }
        }
        Ok(Ordering::Equal)
    }
}

impl Action for Grigorchuk {
    fn name(&self) -> String {
        "grigorchuk".into()
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Tuple(v) if v.iter().all(|&b| b == 0 || b == 1) && v.last() != Some(&1))
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        let bits = tuple_of(p, None)?;
        let state = match self.gens.label(g) {
            "a" => GrigState::A,
            "b" => GrigState::B,
            "c" => GrigState::C,
            "d" => GrigState::D,
            other => return Err(Error::UnknownGenerator(other.into())),
        };
        Ok(Some(Point::Tuple(grigorchuk_act(state, bits))))
    }
    fn order(&self) -> Option<OrderStructure> {
        Some(OrderStructure::Linear(Arc::new(RayOrder)))
    }
    fn seed(&self) -> Point {
        Point::Tuple(Vec::new())
    }
}

// ---------------------------------------------------------------------------
// Free abelian group of (truncated) infinite rank

/// ⊕ℤ acting on itself, with the first `rank` basis vectors revealed as
/// generators `e1, E1, e2, E2, …`. Points are finitely supported vectors with
/// trailing zeros stripped.
pub struct FreeAbelian {
    rank: usize,
    gens: GeneratorSystem,
}

impl FreeAbelian {
    pub fn new(rank: usize) -> Result<Self> {
        let names: Vec<(String, String)> = (1..=rank).map(|i| (format!("e{i}"), format!("E{i}"))).collect();
        let pairs: Vec<(&str, Option<&str>)> = names.iter().map(|(a, b)| (a.as_str(), Some(b.as_str()))).collect();
        Ok(FreeAbelian {
            rank,
            gens: GeneratorSystem::from_pairs("id", &pairs)?,
        })
    }
}

/// `p < q` iff the last non-zero coordinate of `q − p` is positive.
struct LastCoordinateOrder;

impl LinearOrder for LastCoordinateOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let x = tuple_of(a, None).map_err(|_| order_err(a, b))?;
        let y = tuple_of(b, None).map_err(|_| order_err(a, b))?;
        let n = x.len().max(y.len());
        for i in (0..n).rev() {
            let (u, v) = (x.get(i).copied().unwrap_or(0), y.get(i).copied().unwrap_or(0));
            if u != v {
                return Ok(u.cmp(&v));
            }
        }
        Ok(Ordering::Equal)
    }
}

impl Action for FreeAbelian {
    fn name(&self) -> String {
        format!("free-abelian-{}", self.rank)
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Tuple(v) if v.last() != Some(&0))
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        let v = tuple_of(p, None)?;
        let i = (g - 1) / 2;
        let delta = if (g - 1).is_multiple_of(2) { 1 } else { -1 };
        let mut out = v.to_vec();
        if out.len() <= i {
            out.resize(i + 1, 0);
        }
        out[i] = out[i]
            .checked_add(delta)
            .ok_or_else(|| Error::Overflow(p.to_string()))?;
        while out.last() == Some(&0) {
            out.pop();
        }
        Ok(Some(Point::Tuple(out)))
    }
    fn order(&self) -> Option<OrderStructure> {
        Some(OrderStructure::Linear(Arc::new(LastCoordinateOrder)))
    }
    fn seed(&self) -> Point {
        Point::Tuple(Vec::new())
    }
}

// ---------------------------------------------------------------------------
// Lamplighter

/// (ℤ/2) ≀ ℤ acting on itself; `t` moves the lamplighter, `s` toggles the
/// lamp under it. Points are `(position, lit lamps in increasing order…)`.
pub struct Lamplighter {
    gens: GeneratorSystem,
}

impl Lamplighter {
    pub fn new() -> Result<Self> {
        Ok(Lamplighter {
            gens: GeneratorSystem::from_pairs("id", &[("t", Some("T")), ("s", None)])?,
        })
    }
}

impl Action for Lamplighter {
    fn name(&self) -> String {
        "lamplighter".into()
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Tuple(v) if !v.is_empty() && v[1..].windows(2).all(|w| w[0] < w[1]))
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        let v = tuple_of(p, None)?;
        let mut out = v.to_vec();
        match self.gens.label(g) {
            "t" => out[0] += 1,
            "T" => out[0] -= 1,
            "s" => {
                let pos = out[0];
                let lamps = &mut out[1..];
                match lamps.binary_search(&pos) {
                    Ok(i) => {
                        out.remove(i + 1);
                    }
                    Err(i) => out.insert(i + 1, pos),
                }
            }
            other => return Err(Error::UnknownGenerator(other.into())),
        }
        Ok(Some(Point::Tuple(out)))
    }
    fn order(&self) -> Option<OrderStructure> {
        None
    }
    fn seed(&self) -> Point {
        Point::tuple(&[0])
    }
}

// ---------------------------------------------------------------------------
// BS(1,2) on dyadic rationals

/// BS(1, 2) acting on ℤ[1/2] by `a: x ↦ x + 1` and `b: x ↦ 2x`. A point
/// `(m, k)` is the reduced dyadic `m / 2^k`.
pub struct BaumslagSolitar {
    gens: GeneratorSystem,
}

impl BaumslagSolitar {
    pub fn new() -> Result<Self> {
        Ok(BaumslagSolitar {
            gens: GeneratorSystem::from_pairs("id", &[("a", Some("A")), ("b", Some("B"))])?,
        })
    }

    fn normalize(mut m: i64, mut k: i64) -> Point {
        if m == 0 {
            return Point::tuple(&[0, 0]);
        }
        while k > 0 && m % 2 == 0 {
            m /= 2;
            k -= 1;
        }
        Point::tuple(&[m, k])
    }
}

struct DyadicOrder;

impl LinearOrder for DyadicOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let x = tuple_of(a, Some(2)).map_err(|_| order_err(a, b))?;
        let y = tuple_of(b, Some(2)).map_err(|_| order_err(a, b))?;
        let k = x[1].max(y[1]);
        let lhs = (x[0] as i128) << (k - x[1]);
        let rhs = (y[0] as i128) << (k - y[1]);
        Ok(lhs.cmp(&rhs))
    }
}

impl Action for BaumslagSolitar {
    fn name(&self) -> String {
        "bs12".into()
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Tuple(v) if v.len() == 2 => v[1] >= 0 && (v[1] == 0 || v[0] % 2 != 0) && !(v[0] == 0 && v[1] != 0),
            _ => false,
        }
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        let v = tuple_of(p, Some(2))?;
        let (m, k) = (v[0], v[1]);
        let overflow = || Error::Overflow(p.to_string());
        let out = match self.gens.label(g) {
            "a" | "A" => {
                let unit = 1i64.checked_shl(k as u32).filter(|_| k < 62).ok_or_else(overflow)?;
                let unit = if self.gens.label(g) == "a" { unit } else { -unit };
                BaumslagSolitar::normalize(m.checked_add(unit).ok_or_else(overflow)?, k)
            }
            "b" => {
                if k > 0 {
                    BaumslagSolitar::normalize(m, k - 1)
                } else {
                    BaumslagSolitar::normalize(m.checked_mul(2).ok_or_else(overflow)?, 0)
                }
            }
            "B" => {
                if k >= 61 {
                    return Err(overflow());
                }
                BaumslagSolitar::normalize(m, k + 1)
            }
            other => return Err(Error::UnknownGenerator(other.into())),
        };
        Ok(Some(out))
    }
    fn order(&self) -> Option<OrderStructure> {
        Some(OrderStructure::Linear(Arc::new(DyadicOrder)))
    }
    fn seed(&self) -> Point {
        Point::tuple(&[0, 0])
    }
}

// ---------------------------------------------------------------------------
// Rotations of the circle

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    /// (√5 − 1)/2, carried with 256 fractional bits.
    Golden,
    /// p/q, exact; the orbit is the finite set {k/q}.
    Rational { p: i64, q: u64 },
}

impl Angle {
    pub fn fixed(&self) -> Fixed256 {
        match *self {
            Angle::Golden => Fixed256::golden(),
            Angle::Rational { p, q } => Fixed256::from_ratio(p, q),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Angle::Golden => (5f64.sqrt() - 1.0) / 2.0,
            Angle::Rational { p, q } => p.rem_euclid(q as i64) as f64 / q as f64,
        }
    }
}

/// ℤ acting on the orbit `{kα mod 1}` of 0 under the rotation by α. Points
/// are `(k)`; for rational α = p/q, `k` is reduced mod `q`.
pub struct Rotation {
    angle: Angle,
    step: Fixed256,
    gens: GeneratorSystem,
}

impl Rotation {
    pub fn new(angle: Angle) -> Result<Self> {
        if let Angle::Rational { q, .. } = angle {
            if q == 0 {
                return Err(Error::InvalidSpec("rotation denominator must be positive".into()));
            }
        }
        Ok(Rotation {
            angle,
            step: angle.fixed(),
            gens: GeneratorSystem::from_pairs("id", &[("r", Some("R"))])?,
        })
    }

    pub fn angle(&self) -> Angle {
        self.angle
    }

    /// Exact circle position `kα mod 1` of a point.
    pub fn position(&self, p: &Point) -> Result<Fixed256> {
        let v = tuple_of(p, Some(1))?;
        Ok(match self.angle {
            Angle::Golden => self.step.wrapping_mul_int(v[0]),
            Angle::Rational { p: num, q } => {
                let k = (v[0] as i128 * num as i128).rem_euclid(q as i128) as i64;
                Fixed256::from_ratio(k, q)
            }
        })
    }
}

struct RotationOrder {
    rotation: Arc<Rotation>,
}

impl CircularOrder for RotationOrder {
    fn orientation(&self, a: &Point, b: &Point, c: &Point) -> Result<i8> {
        let pa = self.rotation.position(a).map_err(|_| order_err(a, b))?;
        let pb = self.rotation.position(b).map_err(|_| order_err(a, b))?;
        let pc = self.rotation.position(c).map_err(|_| order_err(a, c))?;
        Ok(Fixed256::orientation(pa, pb, pc))
    }
}

impl Action for Rotation {
    fn name(&self) -> String {
        match self.angle {
            Angle::Golden => "rotation-golden".into(),
            Angle::Rational { p, q } => format!("rotation-{p}/{q}"),
        }
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        match (p, self.angle) {
            (Point::Tuple(v), Angle::Rational { q, .. }) if v.len() == 1 => v[0] >= 0 && (v[0] as u64) < q,
            (Point::Tuple(v), Angle::Golden) => v.len() == 1,
            _ => false,
        }
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        let k = tuple_of(p, Some(1))?[0];
        let delta = if self.gens.label(g) == "r" { 1 } else { -1 };
        let next = match self.angle {
            Angle::Rational { q, .. } => (k + delta).rem_euclid(q as i64),
            Angle::Golden => k.checked_add(delta).ok_or_else(|| Error::Overflow(p.to_string()))?,
        };
        Ok(Some(Point::tuple(&[next])))
    }
    fn order(&self) -> Option<OrderStructure> {
        let me = Rotation {
            angle: self.angle,
            step: self.step,
            gens: self.gens.clone(),
        };
        Some(OrderStructure::Circular {
            order: Arc::new(RotationOrder { rotation: Arc::new(me) }),
            basepoint: self.seed(),
        })
    }
    fn seed(&self) -> Point {
        Point::tuple(&[0])
    }
    fn is_finite(&self) -> bool {
        matches!(self.angle, Angle::Rational { .. })
    }
}

// ---------------------------------------------------------------------------
// Disjoint unions

/// `copies` disjoint copies of an action; the orbits are tagged by copy index.
pub struct Union {
    inner: SharedAction,
    copies: u32,
}

impl Union {
    pub fn new(inner: SharedAction, copies: u32) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidSpec("union needs at least one copy".into()));
        }
        Ok(Union { inner, copies })
    }

    /// The inner basepoint in copy `k`.
    pub fn seed_in(&self, k: u32) -> Point {
        Point::Tagged(k, Box::new(self.inner.seed()))
    }
}

struct TaggedOrder {
    inner: Arc<dyn LinearOrder>,
}

impl LinearOrder for TaggedOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        match (a, b) {
            (Point::Tagged(i, x), Point::Tagged(j, y)) => match i.cmp(j) {
                Ordering::Equal => self.inner.compare(x, y),
                o => Ok(o),
            },
            _ => Err(order_err(a, b)),
        }
    }
}

impl Action for Union {
    fn name(&self) -> String {
        format!("{}x{}", self.copies, self.inner.name())
    }
    fn generators(&self) -> &GeneratorSystem {
        self.inner.generators()
    }
    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Tagged(k, x) if *k < self.copies && self.inner.contains(x))
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        match p {
            Point::Tagged(k, x) if *k < self.copies => {
                Ok(self.inner.apply(g, x)?.map(|y| Point::Tagged(*k, Box::new(y))))
            }
            _ => Err(Error::NotInStateSpace(p.to_string())),
        }
    }
    fn order(&self) -> Option<OrderStructure> {
        match self.inner.order()? {
            OrderStructure::Linear(inner) => Some(OrderStructure::Linear(Arc::new(TaggedOrder { inner }))),
            OrderStructure::Circular { .. } => None,
        }
    }
    fn seed(&self) -> Point {
        self.seed_in(0)
    }
}

// ---------------------------------------------------------------------------
// Restriction to a symmetric subset of generators

pub struct Restricted {
    inner: SharedAction,
    gens: GeneratorSystem,
    map: Vec<GenId>,
}

impl Restricted {
    pub fn new(inner: SharedAction, labels: &[String]) -> Result<Self> {
        let ig = inner.generators();
        let mut chosen: Vec<GenId> = vec![ig.identity()];
        for l in labels {
            let g = ig.id(l).ok_or_else(|| Error::UnknownGenerator(l.clone()))?;
            if !chosen.contains(&g) {
                chosen.push(g);
            }
        }
        let mut inverse = Vec::with_capacity(chosen.len());
        for &g in &chosen {
            let inv = ig.inverse(g);
            let pos = chosen.iter().position(|&h| h == inv).ok_or_else(|| {
                Error::InvalidGenerators(format!(
                    "restricted set is not symmetric: `{}` lacks `{}`",
                    ig.label(g),
                    ig.label(inv)
                ))
            })?;
            inverse.push(pos);
        }
        let gens = GeneratorSystem::new(chosen.iter().map(|&g| ig.label(g).to_string()).collect(), inverse, 0)?;
        Ok(Restricted {
            inner,
            gens,
            map: chosen,
        })
    }
}

impl Action for Restricted {
    fn name(&self) -> String {
        format!("{}[{}]", self.inner.name(), self.gens.labels()[1..].join(","))
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        self.inner.contains(p)
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        self.inner.apply(self.map[g], p)
    }
    fn order(&self) -> Option<OrderStructure> {
        self.inner.order()
    }
    fn seed(&self) -> Point {
        self.inner.seed()
    }
    fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }
}

// ---------------------------------------------------------------------------
// User-supplied tables

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableGenerator {
    pub label: String,
    /// Inverse label; omitted for involutions.
    #[serde(default)]
    pub inverse: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableEdge {
    pub state: Value,
    pub generator: String,
    pub image: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    /// States, listed in increasing order when `order` is `"listed"`.
    pub states: Vec<Value>,
    pub generators: Vec<TableGenerator>,
    #[serde(default = "default_identity")]
    pub identity: String,
    pub edges: Vec<TableEdge>,
    #[serde(default = "default_table_order")]
    pub order: String,
}

fn default_identity() -> String {
    "id".into()
}

fn default_table_order() -> String {
    "listed".into()
}

/// An action given by an explicit `(state, generator) ↦ image` table. Missing
/// entries are undefined.
pub struct TableAction {
    gens: GeneratorSystem,
    states: Vec<Point>,
    rank: Arc<HashMap<Point, usize>>,
    edges: HashMap<(Point, GenId), Point>,
    ordered: bool,
}

impl TableAction {
    pub fn from_spec(spec: &TableSpec) -> Result<Self> {
        let mut labels = vec![spec.identity.clone()];
        for g in &spec.generators {
            if !labels.contains(&g.label) {
                labels.push(g.label.clone());
            }
            if let Some(inv) = &g.inverse {
                if !labels.contains(inv) {
                    labels.push(inv.clone());
                }
            }
        }
        let mut inverse: Vec<GenId> = (0..labels.len()).collect();
        for g in &spec.generators {
            if let Some(inv) = &g.inverse {
                let a = labels.iter().position(|l| l == &g.label).unwrap();
                let b = labels.iter().position(|l| l == inv).unwrap();
                inverse[a] = b;
                inverse[b] = a;
            }
        }
        let gens = GeneratorSystem::new(labels, inverse, 0)?;
        let states = spec.states.iter().map(Point::from_json).collect::<Result<Vec<_>>>()?;
        let rank: HashMap<Point, usize> = states.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        if rank.len() != states.len() {
            return Err(Error::InvalidSpec("duplicate states in table".into()));
        }
        let mut edges = HashMap::new();
        for e in &spec.edges {
            let s = Point::from_json(&e.state)?;
            let t = Point::from_json(&e.image)?;
            let g = gens
                .id(&e.generator)
                .ok_or_else(|| Error::UnknownGenerator(e.generator.clone()))?;
            for p in [&s, &t] {
                if !rank.contains_key(p) {
                    return Err(Error::NotInStateSpace(p.to_string()));
                }
            }
            if edges.insert((s.clone(), g), t).is_some() {
                return Err(Error::InvalidSpec(format!("duplicate edge for {s} / {}", e.generator)));
            }
        }
        // An inverse edge missing from the table is implied by its partner.
        let implied: Vec<((Point, GenId), Point)> = edges
            .iter()
            .map(|((s, g), t)| ((t.clone(), gens.inverse(*g)), s.clone()))
            .collect();
        for (key, val) in implied {
            if let Some(existing) = edges.get(&key) {
                if existing != &val {
                    return Err(Error::InvalidSpec(format!(
                        "edge maps of `{}` and its inverse disagree at {}",
                        gens.label(key.1),
                        key.0
                    )));
                }
            } else {
                edges.insert(key, val);
            }
        }
        let ordered = match spec.order.as_str() {
            "listed" => true,
            "none" => false,
            other => return Err(Error::InvalidSpec(format!("unknown table order `{other}`"))),
        };
        Ok(TableAction {
            gens,
            states,
            rank: Arc::new(rank),
            edges,
            ordered,
        })
    }
}

struct ListedOrder {
    rank: Arc<HashMap<Point, usize>>,
}

impl LinearOrder for ListedOrder {
    fn compare(&self, a: &Point, b: &Point) -> Result<Ordering> {
        let x = self.rank.get(a).ok_or_else(|| order_err(a, b))?;
        let y = self.rank.get(b).ok_or_else(|| order_err(a, b))?;
        Ok(x.cmp(y))
    }
}

impl Action for TableAction {
    fn name(&self) -> String {
        "table".into()
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        self.rank.contains_key(p)
    }
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        Ok(self.edges.get(&(p.clone(), g)).cloned())
    }
    fn order(&self) -> Option<OrderStructure> {
        self.ordered.then(|| {
            OrderStructure::Linear(Arc::new(ListedOrder {
                rank: self.rank.clone(),
            }))
        })
    }
    fn seed(&self) -> Point {
        self.states.first().cloned().unwrap_or(Point::Star)
    }
}

// ---------------------------------------------------------------------------
// Action-spec files

/// JSON action specification: `{family, params, generators}`; user tables
/// go in `table`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionSpec {
    pub family: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub generators: Option<Vec<String>>,
    #[serde(default)]
    pub table: Option<TableSpec>,
}

impl ActionSpec {
    pub fn family(name: &str) -> Self {
        ActionSpec {
            family: name.into(),
            params: Value::Null,
            generators: None,
            table: None,
        }
    }

    pub fn with_params(name: &str, params: Value) -> Self {
        ActionSpec {
            params,
            ..ActionSpec::family(name)
        }
    }
}

fn param_u64(params: &Value, key: &str, default: u64) -> Result<u64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::InvalidSpec(format!("param `{key}` must be a non-negative integer"))),
    }
}

fn parse_angle(params: &Value) -> Result<Angle> {
    match params.get("angle") {
        None | Some(Value::Null) => Ok(Angle::Golden),
        Some(Value::String(s)) if s == "golden" => Ok(Angle::Golden),
        Some(Value::String(s)) => {
            let (p, q) = s
                .split_once('/')
                .ok_or_else(|| Error::InvalidSpec(format!("angle `{s}` is not p/q or golden")))?;
            let p = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad angle `{s}`")))?;
            let q = q
                .trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad angle `{s}`")))?;
            Ok(Angle::Rational { p, q })
        }
        Some(other) => Err(Error::InvalidSpec(format!("bad angle {other}"))),
    }
}

/// Builds an action from its spec.
pub fn build_action(spec: &ActionSpec) -> Result<SharedAction> {
    let p = &spec.params;
    let base: SharedAction = match spec.family.as_str() {
        "z" => Arc::new(Zd::new(1)?),
        "z2" => Arc::new(Zd::new(2)?),
        "zd" => Arc::new(Zd::new(param_u64(p, "d", 1)? as usize)?),
        "heisenberg" => {
            let center = p.get("center").and_then(Value::as_bool).unwrap_or(false);
            Arc::new(Heisenberg::new(center)?)
        }
        "grigorchuk" => Arc::new(Grigorchuk::new()?),
        "free-abelian" => Arc::new(FreeAbelian::new(param_u64(p, "rank", 3)? as usize)?),
        "lamplighter" => Arc::new(Lamplighter::new()?),
        "bs12" => Arc::new(BaumslagSolitar::new()?),
        "rotation" => Arc::new(Rotation::new(parse_angle(p)?)?),
        "union" => {
            let inner: ActionSpec = serde_json::from_value(
                p.get("inner")
                    .cloned()
                    .ok_or_else(|| Error::InvalidSpec("union needs `inner`".into()))?,
            )?;
            Arc::new(Union::new(build_action(&inner)?, param_u64(p, "copies", 2)? as u32)?)
        }
        "table" => {
            let table = spec
                .table
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("table family needs `table`".into()))?;
            Arc::new(TableAction::from_spec(table)?)
        }
        other => return Err(Error::UnknownFamily(other.into())),
    };
    match &spec.generators {
        Some(labels) => Ok(Arc::new(Restricted::new(base, labels)?)),
        None => Ok(base),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(a: &dyn Action, g: &str, p: &Point) -> Point {
        a.apply(a.generators().id(g).unwrap(), p).unwrap().unwrap()
    }

    #[test]
    fn heisenberg_commutator_is_central_generator() {
        let h = Heisenberg::new(true).unwrap();
        let gens = h.generators();
        let w = gens.parse_word("abAB").unwrap();
        let c = gens.parse_word("c").unwrap();
        for p in [Point::tuple(&[0, 0, 0]), Point::tuple(&[3, -2, 7])] {
            assert_eq!(h.act_word(&w, &p).unwrap(), h.act_word(&c, &p).unwrap());
        }
    }

    #[test]
    fn generator_inverses_cancel() {
        let actions: Vec<(SharedAction, Point)> = vec![
            (Arc::new(Zd::new(2).unwrap()), Point::tuple(&[1, -4])),
            (Arc::new(Heisenberg::new(true).unwrap()), Point::tuple(&[2, -1, 5])),
            (Arc::new(Grigorchuk::new().unwrap()), Point::tuple(&[0, 1, 0])),
            (Arc::new(FreeAbelian::new(3).unwrap()), Point::tuple(&[0, 2])),
            (Arc::new(Lamplighter::new().unwrap()), Point::tuple(&[1, -2, 1])),
            (Arc::new(BaumslagSolitar::new().unwrap()), Point::tuple(&[3, 2])),
            (Arc::new(Rotation::new(Angle::Golden).unwrap()), Point::tuple(&[7])),
            (
                Arc::new(Rotation::new(Angle::Rational { p: 1, q: 4 }).unwrap()),
                Point::tuple(&[3]),
            ),
        ];
        for (a, p) in actions {
            assert!(a.contains(&p), "{} should contain {p}", a.name());
            let gens = a.generators();
            for g in gens.non_identity() {
                let q = a.apply(g, &p).unwrap().unwrap();
                assert!(a.contains(&q), "{}: image {q} left the state space", a.name());
                let back = a.apply(gens.inverse(g), &q).unwrap().unwrap();
                assert_eq!(back, p, "{}: {} not undone", a.name(), gens.label(g));
            }
        }
    }

    #[test]
    fn grigorchuk_automaton() {
        let g = Grigorchuk::new().unwrap();
        let one = Point::Tuple(vec![]);
        // b, c, d fix 111…; a flips the first letter.
        for s in ["b", "c", "d"] {
            assert_eq!(act(&g, s, &one), one);
        }
        assert_eq!(act(&g, "a", &one), Point::tuple(&[0]));
        // b(0w) = 0 a(w): 0111… ↦ 0011…
        assert_eq!(act(&g, "b", &Point::tuple(&[0])), Point::tuple(&[0, 0]));
        // d(0w) = 0w
        assert_eq!(act(&g, "d", &Point::tuple(&[0])), Point::tuple(&[0]));
        // d(10w) = 1 b(0w) = 1 0 a(w)
        assert_eq!(act(&g, "d", &Point::tuple(&[1, 0])), Point::tuple(&[1, 0, 0]));
    }

    #[test]
    fn bs12_dyadics() {
        let bs = BaumslagSolitar::new().unwrap();
        let half = act(&bs, "B", &Point::tuple(&[1, 0]));
        assert_eq!(half, Point::tuple(&[1, 1]));
        assert_eq!(act(&bs, "a", &half), Point::tuple(&[3, 1]));
        assert_eq!(act(&bs, "b", &Point::tuple(&[3, 1])), Point::tuple(&[3, 0]));
        assert_eq!(act(&bs, "B", &Point::tuple(&[2, 0])), Point::tuple(&[1, 0]));
        let o = DyadicOrder;
        assert_eq!(o.compare(&half, &Point::tuple(&[1, 0])).unwrap(), Ordering::Less);
        assert_eq!(
            o.compare(&Point::tuple(&[-1, 1]), &Point::tuple(&[0, 0])).unwrap(),
            Ordering::Less
        );
    }

    #[test]
    fn lamplighter_toggles() {
        let l = Lamplighter::new().unwrap();
        let p = act(&l, "s", &Point::tuple(&[0]));
        assert_eq!(p, Point::tuple(&[0, 0]));
        let q = act(&l, "s", &act(&l, "t", &p));
        assert_eq!(q, Point::tuple(&[1, 0, 1]));
        assert_eq!(act(&l, "s", &p), Point::tuple(&[0]));
    }

    #[test]
    fn restricted_requires_symmetry() {
        let z: SharedAction = Arc::new(Zd::new(2).unwrap());
        assert!(Restricted::new(z.clone(), &["e1".into(), "E1".into()]).is_ok());
        assert!(matches!(
            Restricted::new(z, &["e1".into()]),
            Err(Error::InvalidGenerators(_))
        ));
    }

    #[test]
    fn spec_parsing() {
        let spec: ActionSpec = serde_json::from_str(r#"{"family": "zd", "params": {"d": 3}}"#).unwrap();
        let a = build_action(&spec).unwrap();
        assert_eq!(a.generators().len(), 7);
        let bad: ActionSpec = serde_json::from_str(r#"{"family": "nope"}"#).unwrap();
        assert!(matches!(build_action(&bad), Err(Error::UnknownFamily(_))));
        let rot: ActionSpec = serde_json::from_str(r#"{"family": "rotation", "params": {"angle": "1/4"}}"#).unwrap();
        assert!(build_action(&rot).unwrap().is_finite());
        let u: ActionSpec =
            serde_json::from_str(r#"{"family": "union", "params": {"copies": 2, "inner": {"family": "z"}}}"#).unwrap();
        let u = build_action(&u).unwrap();
        assert!(u.contains(&Point::Tagged(1, Box::new(Point::tuple(&[4])))));
    }

    #[test]
    fn table_inverse_edges_are_implied() {
        let spec: TableSpec = serde_json::from_value(serde_json::json!({
            "states": [0, 1, 2],
            "generators": [{"label": "s", "inverse": "S"}],
            "edges": [
                {"state": 0, "generator": "s", "image": 1},
                {"state": 1, "generator": "s", "image": 2}
            ]
        }))
        .unwrap();
        let t = TableAction::from_spec(&spec).unwrap();
        let s_inv = t.generators().id("S").unwrap();
        assert_eq!(t.apply(s_inv, &Point::tuple(&[2])).unwrap(), Some(Point::tuple(&[1])));
        assert_eq!(
            t.apply(t.generators().id("s").unwrap(), &Point::tuple(&[2])).unwrap(),
            None
        );
    }
}

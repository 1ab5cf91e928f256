//! Countable group actions on countable sets, their orders, and truncated
//! Schreier graphs.

mod enumeration;
mod families;
mod graph;
mod order;

pub use enumeration::{EnumeratedElement, GroupEnumeration};
pub use families::{
    build_action, ActionSpec, Angle, BaumslagSolitar, FreeAbelian, Grigorchuk, Heisenberg, Lamplighter, Restricted,
    Rotation, TableAction, TableEdge, TableGenerator, TableSpec, Union, Zd,
};
pub use graph::{build_orbit_graph, OrbitGraph};
pub use order::{
    linear_to_circular, order_preservation_report, CircularOrder, LinearOrder, OrderReport, OrderStructure,
};

use crate::error::{Error, Result};
use serde_json::Value;
use std::fmt;
use std::sync::Arc;

/// Canonical identifier of a point of a G-set.
///
/// Every built-in family serialises its points to a normal form, so equality
/// and hashing are exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Tuple(Vec<i64>),
    Label(String),
    Tagged(u32, Box<Point>),
    /// The global fixed point added when a linear order is closed up into a
    /// circular one.
    Star,
}

impl Point {
    pub fn tuple(xs: &[i64]) -> Point {
        Point::Tuple(xs.to_vec())
    }

    pub fn as_tuple(&self) -> Option<&[i64]> {
        match self {
            Point::Tuple(v) => Some(v),
            _ => None,
        }
    }

    /// Parses the JSON form used in action-spec files: integer arrays become
    /// tuples, `"*"` is the star, other strings are labels and
    /// `{"copy": k, "point": p}` is a tagged point.
    pub fn from_json(v: &Value) -> Result<Point> {
        match v {
            Value::Array(xs) => xs
                .iter()
                .map(|x| {
                    x.as_i64()
                        .ok_or_else(|| Error::InvalidSpec(format!("non-integer coordinate {x}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Point::Tuple),
            Value::Number(n) => n
                .as_i64()
                .map(|k| Point::Tuple(vec![k]))
                .ok_or_else(|| Error::InvalidSpec(format!("non-integer point {n}"))),
            Value::String(s) if s == "*" => Ok(Point::Star),
            Value::String(s) => Ok(Point::Label(s.clone())),
            Value::Object(map) => {
                let copy = map
                    .get("copy")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| Error::InvalidSpec("tagged point needs `copy`".into()))?;
                let inner = map
                    .get("point")
                    .ok_or_else(|| Error::InvalidSpec("tagged point needs `point`".into()))?;
                Ok(Point::Tagged(copy as u32, Box::new(Point::from_json(inner)?)))
            }
            other => Err(Error::InvalidSpec(format!("cannot parse point {other}"))),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Tuple(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Point::Label(s) => write!(f, "{s}"),
            Point::Tagged(k, p) => write!(f, "{k}:{p}"),
            Point::Star => write!(f, "*"),
        }
    }
}

pub type GenId = usize;

/// A finite symmetric set of generator labels with an inverse pairing and a
/// distinguished identity label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSystem {
    labels: Vec<String>,
    inverse: Vec<GenId>,
    identity: GenId,
}

impl GeneratorSystem {
    pub fn new(labels: Vec<String>, inverse: Vec<GenId>, identity: GenId) -> Result<Self> {
        if labels.len() != inverse.len() {
            return Err(Error::InvalidGenerators("pairing length mismatch".into()));
        }
        if identity >= labels.len() || inverse[identity] != identity {
            return Err(Error::InvalidGenerators("identity must map to itself".into()));
        }
        for (g, &h) in inverse.iter().enumerate() {
            if h >= labels.len() || inverse[h] != g {
                return Err(Error::InvalidGenerators(format!(
                    "pairing is not an involution at `{}`",
                    labels[g]
                )));
            }
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidGenerators(format!("duplicate label `{l}`")));
            }
        }
        Ok(GeneratorSystem {
            labels,
            inverse,
            identity,
        })
    }

    /// Builds a system from `(label, inverse label)` pairs; `None` marks an
    /// involution. The identity label is prepended.
    pub fn from_pairs(identity: &str, pairs: &[(&str, Option<&str>)]) -> Result<Self> {
        let mut labels = vec![identity.to_string()];
        let mut inverse = vec![0];
        for (a, b) in pairs {
            let ia = labels.len();
            labels.push(a.to_string());
            match b {
                Some(b) => {
                    labels.push(b.to_string());
                    inverse.push(ia + 1);
                    inverse.push(ia);
                }
                None => inverse.push(ia),
            }
        }
        GeneratorSystem::new(labels, inverse, 0)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn identity(&self) -> GenId {
        self.identity
    }

    pub fn inverse(&self, g: GenId) -> GenId {
        self.inverse[g]
    }

    pub fn label(&self, g: GenId) -> &str {
        &self.labels[g]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, label: &str) -> Option<GenId> {
        self.labels.iter().position(|l| l == label)
    }

    /// All generators other than the identity, in declaration order.
    pub fn non_identity(&self) -> impl Iterator<Item = GenId> + '_ {
        (0..self.len()).filter(move |&g| g != self.identity)
    }

    /// Parses a word. Tokens are separated by whitespace; when every label is a
    /// single character an unseparated string such as `abAB` is accepted too.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == self.label(self.identity) {
            return Ok(Word(Vec::new()));
        }
        let tokens: Vec<String> = if s.contains(char::is_whitespace) {
            s.split_whitespace().map(str::to_string).collect()
        } else if self.id(s).is_some() {
            vec![s.to_string()]
        } else if self.non_identity().all(|g| self.labels[g].chars().count() == 1) {
            s.chars().map(|c| c.to_string()).collect()
        } else {
            vec![s.to_string()]
        };
        tokens
            .iter()
            .map(|t| self.id(t).ok_or_else(|| Error::UnknownGenerator(t.clone())))
            .filter(|g| !matches!(g, Ok(g) if *g == self.identity))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// A word `s₁ s₂ … s_k` in the generators. It acts on the left, so the last
/// letter is applied first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<GenId>);

impl Word {
    pub fn single(g: GenId) -> Word {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self, gens: &GeneratorSystem) -> Word {
        Word(self.0.iter().rev().map(|&g| gens.inverse(g)).collect())
    }

    pub fn power(&self, k: usize) -> Word {
        Word(self.0.iter().copied().cycle().take(self.0.len() * k).collect())
    }

    pub fn display(&self, gens: &GeneratorSystem) -> String {
        if self.0.is_empty() {
            return gens.label(gens.identity()).to_string();
        }
        self.0.iter().map(|&g| gens.label(g)).collect::<Vec<_>>().join(" ")
    }
}

/// A group action on a countable set, given by generator maps.
pub trait Action: Send + Sync {
    fn name(&self) -> String;

    fn generators(&self) -> &GeneratorSystem;

    /// Whether `p` is a point of the declared state space.
    fn contains(&self, p: &Point) -> bool;

    /// Image of `p` under a non-identity generator. `Ok(None)` means the map
    /// is undefined there (only user tables are partial).
    fn apply(&self, g: GenId, p: &Point) -> Result<Option<Point>>;

    /// Invariant order preserved by the action, if the family carries one.
    fn order(&self) -> Option<OrderStructure>;

    /// Default basepoint.
    fn seed(&self) -> Point;

    /// Whether the action is a finite-order rotation on a finite set.
    fn is_finite(&self) -> bool {
        false
    }

    /// Acts by a generator, treating the identity label generically.
    fn act(&self, g: GenId, p: &Point) -> Result<Option<Point>> {
        if g == self.generators().identity() {
            Ok(Some(p.clone()))
        } else {
            self.apply(g, p)
        }
    }

    /// Acts by a word (last letter first).
    fn act_word(&self, w: &Word, p: &Point) -> Result<Option<Point>> {
        let mut cur = p.clone();
        for &g in w.0.iter().rev() {
            match self.act(g, &cur)? {
                Some(q) => cur = q,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }
}

pub type SharedAction = Arc<dyn Action>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_validation() {
        let g = GeneratorSystem::from_pairs("id", &[("a", Some("A")), ("s", None)]).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.inverse(g.id("a").unwrap()), g.id("A").unwrap());
        assert_eq!(g.inverse(g.id("s").unwrap()), g.id("s").unwrap());
        assert_eq!(g.inverse(g.identity()), g.identity());

        let bad = GeneratorSystem::new(vec!["id".into(), "a".into(), "b".into()], vec![0, 2, 2], 0);
        assert!(matches!(bad, Err(Error::InvalidGenerators(_))));
        let bad_id = GeneratorSystem::new(vec!["id".into(), "a".into()], vec![1, 0], 0);
        assert!(bad_id.is_err());
    }

    #[test]
    fn word_parsing() {
        let g = GeneratorSystem::from_pairs("id", &[("a", Some("A")), ("b", Some("B"))]).unwrap();
        let w = g.parse_word("abAB").unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(g.parse_word("a b A B").unwrap(), w);
        assert_eq!(w.inverse(&g).display(&g), "b a B A");
        assert!(g.parse_word("id").unwrap().is_empty());
        assert!(matches!(g.parse_word("x"), Err(Error::UnknownGenerator(_))));

        let z = GeneratorSystem::from_pairs("id", &[("e1", Some("E1"))]).unwrap();
        assert_eq!(z.parse_word("e1 e1").unwrap().len(), 2);
        assert_eq!(z.parse_word("E1").unwrap().len(), 1);
    }

    #[test]
    fn point_json_forms() {
        let v: Value = serde_json::json!([1, -2]);
        assert_eq!(Point::from_json(&v).unwrap(), Point::tuple(&[1, -2]));
        assert_eq!(Point::from_json(&serde_json::json!("*")).unwrap(), Point::Star);
        let t = serde_json::json!({"copy": 1, "point": [3]});
        assert_eq!(
            Point::from_json(&t).unwrap(),
            Point::Tagged(1, Box::new(Point::tuple(&[3])))
        );
        assert_eq!(Point::tuple(&[1, -2]).to_string(), "(1,-2)");
    }
}

use super::{GeneratorSystem, Word};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumeratedElement {
    pub label: String,
    pub word: Word,
    /// Position of the inverse element in the enumeration.
    pub inverse: usize,
}

/// A non-redundant enumeration `g₀ = 1, g₁, g₂, …` of group elements in which
/// every element is immediately followed by its inverse (unless it is an
/// involution), so that `g_i⁻¹ ∈ {g_{i−1}, g_i, g_{i+1}}`.
///
/// Elements are words; distinct entries are assumed to be distinct elements,
/// which holds for the generator lists of the built-in families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupEnumeration {
    elements: Vec<EnumeratedElement>,
    /// Whether the list is the whole enumeration. Finite generating sets are
    /// complete: no further elements will ever receive a length.
    complete: bool,
}

impl GroupEnumeration {
    /// Identity followed by the generators in declaration order, inverses
    /// adjacent.
    pub fn from_generators(gens: &GeneratorSystem) -> Self {
        let mut e = GroupEnumeration {
            elements: vec![EnumeratedElement {
                label: gens.label(gens.identity()).to_string(),
                word: Word::default(),
                inverse: 0,
            }],
            complete: true,
        };
        let mut seen = vec![false; gens.len()];
        seen[gens.identity()] = true;
        for g in gens.non_identity() {
            if seen[g] {
                continue;
            }
            let inv = gens.inverse(g);
            seen[g] = true;
            seen[inv] = true;
            if inv == g {
                e.push_involution(gens.label(g), Word::single(g));
            } else {
                e.push_pair(gens.label(g), Word::single(g), gens.label(inv), Word::single(inv));
            }
        }
        e
    }

    /// Appends a word and its inverse (labelled `label⁻¹`).
    pub fn with_word(mut self, label: &str, word: Word, gens: &GeneratorSystem) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidLengths(format!("`{label}` is the identity")));
        }
        let inv = word.inverse(gens);
        if inv == word {
            self.push_involution(label, word);
        } else {
            self.push_pair(label, word, &format!("{label}^-1"), inv);
        }
        Ok(self)
    }

    pub fn mark_incomplete(mut self) -> Self {
        self.complete = false;
        self
    }

    fn push_involution(&mut self, label: &str, word: Word) {
        let i = self.elements.len();
        self.elements.push(EnumeratedElement {
            label: label.to_string(),
            word,
            inverse: i,
        });
    }

    fn push_pair(&mut self, a: &str, wa: Word, b: &str, wb: Word) {
        let i = self.elements.len();
        self.elements.push(EnumeratedElement {
            label: a.to_string(),
            word: wa,
            inverse: i + 1,
        });
        self.elements.push(EnumeratedElement {
            label: b.to_string(),
            word: wb,
            inverse: i,
        });
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn get(&self, i: usize) -> &EnumeratedElement {
        &self.elements[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &EnumeratedElement> {
        self.elements.iter()
    }

    /// Groups of indices closed under inversion: `[i]` for involutions,
    /// `[i, i+1]` for pairs. The identity is block 0.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.elements.len() {
            let inv = self.elements[i].inverse;
            if inv == i + 1 {
                out.push(vec![i, i + 1]);
                i += 2;
            } else {
                out.push(vec![i]);
                i += 1;
            }
        }
        out
    }
}

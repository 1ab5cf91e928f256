use super::{GenId, GeneratorSystem, Point, SharedAction, Word};
use crate::error::{Error, Result};
use std::collections::{HashMap, VecDeque};
use std::io::Write;

/// Truncated Schreier graph: the BFS closure of a list of seeds to a fixed
/// depth, with every generator edge either resolved to a state or recorded as
/// undefined.
///
/// Edges are never guessed. An edge is undefined when its target lies beyond
/// the truncation or the action itself is undefined there.
pub struct OrbitGraph {
    action: SharedAction,
    states: Vec<Point>,
    index: HashMap<Point, usize>,
    /// `edges[g][x]`; `u32::MAX` marks an undefined edge.
    edges: Vec<Vec<u32>>,
    depth: Vec<u32>,
    orbit: Vec<u32>,
    basepoints: Vec<usize>,
    radius: usize,
}

const UNDEFINED: u32 = u32::MAX;

impl std::fmt::Debug for OrbitGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OrbitGraph")
            .field("action", &self.action.name())
            .field("states", &self.states.len())
            .field("basepoints", &self.basepoints)
            .field("radius", &self.radius)
            .finish()
    }
}

/// BFS closure of `seeds` to depth `radius`. Seeds already reached from an
/// earlier seed do not start a new orbit.
pub fn build_orbit_graph(action: SharedAction, seeds: &[Point], radius: usize) -> Result<OrbitGraph> {
    OrbitGraph::build(action, seeds, radius, None)
}

impl OrbitGraph {
    /// As [`build_orbit_graph`], failing with `TruncationExceeded` once more
    /// than `max_states` states are discovered.
    pub fn build(
        action: SharedAction,
        seeds: &[Point],
        radius: usize,
        max_states: Option<usize>,
    ) -> Result<OrbitGraph> {
        let gens = action.generators().clone();
        let mut g = OrbitGraph {
            action,
            states: Vec::new(),
            index: HashMap::new(),
            edges: vec![Vec::new(); gens.len()],
            depth: Vec::new(),
            orbit: Vec::new(),
            basepoints: Vec::new(),
            radius,
        };
        for seed in seeds {
            if !g.action.contains(seed) {
                return Err(Error::NotInStateSpace(seed.to_string()));
            }
            if g.index.contains_key(seed) {
                continue;
            }
            let orbit = g.basepoints.len() as u32;
            let root = g.insert(seed.clone(), 0, orbit);
            g.basepoints.push(root);
            let mut queue = VecDeque::from([root]);
            while let Some(x) = queue.pop_front() {
                let d = g.depth[x];
                if d as usize >= radius {
                    continue;
                }
                for s in gens.non_identity() {
                    let Some(y) = g.action.apply(s, &g.states[x].clone())? else {
                        continue;
                    };
                    if !g.index.contains_key(&y) {
                        if max_states.is_some_and(|m| g.states.len() >= m) {
                            return Err(Error::TruncationExceeded(format!(
                                "more than {} states within radius {radius}",
                                g.states.len()
                            )));
                        }
                        let k = g.insert(y, d + 1, orbit);
                        queue.push_back(k);
                    }
                }
            }
        }
        // Resolve every edge against the final state set.
        let n = g.states.len();
        for s in 0..gens.len() {
            let mut row = vec![UNDEFINED; n];
            for (x, slot) in row.iter_mut().enumerate() {
                let image = if s == gens.identity() {
                    Some(x)
                } else {
                    g.action.apply(s, &g.states[x])?.and_then(|y| g.index.get(&y).copied())
                };
                if let Some(y) = image {
                    *slot = y as u32;
                }
            }
            g.edges[s] = row;
        }
        Ok(g)
    }

    fn insert(&mut self, p: Point, depth: u32, orbit: u32) -> usize {
        let k = self.states.len();
        self.index.insert(p.clone(), k);
        self.states.push(p);
        self.depth.push(depth);
        self.orbit.push(orbit);
        k
    }

    pub fn action(&self) -> &SharedAction {
        &self.action
    }

    pub fn generators(&self) -> &GeneratorSystem {
        self.action.generators()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn point(&self, x: usize) -> &Point {
        &self.states[x]
    }

    pub fn states(&self) -> &[Point] {
        &self.states
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn basepoints(&self) -> &[usize] {
        &self.basepoints
    }

    /// Word distance from the basepoint of the state's orbit.
    pub fn depth(&self, x: usize) -> usize {
        self.depth[x] as usize
    }

    /// Index of the orbit (basepoint) the state was discovered from.
    pub fn orbit_of(&self, x: usize) -> usize {
        self.orbit[x] as usize
    }

    pub fn step(&self, g: GenId, x: usize) -> Option<usize> {
        let y = self.edges[g][x];
        (y != UNDEFINED).then_some(y as usize)
    }

    /// Image under a word (last letter first); `None` as soon as an edge is
    /// undefined.
    pub fn apply_word(&self, w: &Word, x: usize) -> Option<usize> {
        w.0.iter().rev().try_fold(x, |cur, &g| self.step(g, cur))
    }

    /// Whether every generator edge at `x` is defined.
    pub fn is_interior(&self, x: usize) -> bool {
        (0..self.edges.len()).all(|g| self.edges[g][x] != UNDEFINED)
    }

    /// BFS distances from `x` along defined edges (`u32::MAX` = unreached).
    pub fn distances_from(&self, x: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for row in &self.edges {
                let v = row[u];
                if v != UNDEFINED && dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }

    /// Largest `n` for which `ball(x, n)` is exact: the distance from `x` to
    /// the nearest state with an undefined edge. `usize::MAX` when the orbit
    /// is closed inside the truncation.
    pub fn certified_radius(&self, x: usize) -> usize {
        let dist = self.distances_from(x);
        (0..self.len())
            .filter(|&y| dist[y] != u32::MAX && !self.is_interior(y))
            .map(|y| dist[y] as usize)
            .min()
            .unwrap_or(usize::MAX)
    }

    /// Sizes `|S^k x|` for `k = 0..=n`, failing if any state at distance
    /// `< n` has an undefined edge.
    pub fn ball_sizes(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        let layers = self.layers(x, n)?;
        let mut acc = 0;
        Ok(layers
            .iter()
            .map(|l| {
                acc += l.len();
                acc
            })
            .collect())
    }

    /// Sphere sizes `|S^k x ∖ S^{k−1} x|` for `k = 0..=n`.
    pub fn sphere_sizes(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        Ok(self.layers(x, n)?.iter().map(Vec::len).collect())
    }

    /// `Sⁿx`, in BFS order.
    pub fn ball(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        Ok(self.layers(x, n)?.into_iter().flatten().collect())
    }

    /// `Sⁿx ∖ Sⁿ⁻¹x`.
    pub fn sphere(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        Ok(self.layers(x, n)?.pop().unwrap_or_default())
    }

    fn layers(&self, x: usize, n: usize) -> Result<Vec<Vec<usize>>> {
        let mut seen = vec![false; self.len()];
        seen[x] = true;
        let mut layers = vec![vec![x]];
        for k in 0..n {
            let mut next = Vec::new();
            for &u in &layers[k] {
                for row in &self.edges {
                    let v = row[u];
                    if v == UNDEFINED {
                        return Err(Error::TruncationExceeded(format!(
                            "ball of radius {n} around {} reaches the frontier at {} (distance {k})",
                            self.states[x], self.states[u]
                        )));
                    }
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        next.push(v as usize);
                    }
                }
            }
            layers.push(next);
        }
        Ok(layers)
    }

    /// CSV edge list: `source,generator,target` with `undefined` targets.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["source", "generator", "target"])?;
        let gens = self.generators();
        for x in 0..self.len() {
            for g in gens.non_identity() {
                let target = self
                    .step(g, x)
                    .map(|y| self.states[y].to_string())
                    .unwrap_or_else(|| "undefined".into());
                out.write_record([self.states[x].to_string(), gens.label(g).to_string(), target])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{Heisenberg, Zd};
    use std::collections::HashSet;
    use std::sync::Arc;

    #[test]
    fn z_line() {
        let g = build_orbit_graph(Arc::new(Zd::new(1).unwrap()), &[Point::tuple(&[0])], 3).unwrap();
        assert_eq!(g.len(), 7);
        let x = g.index_of(&Point::tuple(&[0])).unwrap();
        assert_eq!(g.ball_sizes(x, 3).unwrap(), vec![1, 3, 5, 7]);
        assert!(g.ball(x, 4).is_err());
        assert_eq!(g.certified_radius(x), 3);
        assert_eq!(g.ball(x, 0).unwrap(), vec![x]);
    }

    #[test]
    fn z2_diamond() {
        let g = build_orbit_graph(Arc::new(Zd::new(2).unwrap()), &[Point::tuple(&[0, 0])], 2).unwrap();
        assert_eq!(g.len(), 13);
    }

    #[test]
    fn heisenberg_radius3_matches_word_enumeration() {
        // Independent oracle: multiply out every word of length ≤ 3.
        let gens = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]];
        let mut set: HashSet<[i64; 3]> = HashSet::from([[0, 0, 0]]);
        let mut frontier = vec![[0i64, 0, 0]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for p in &frontier {
                for s in &gens {
                    next.push(Heisenberg::multiply(*s, *p));
                }
            }
            set.extend(next.iter().copied());
            frontier = next;
        }
        let g = build_orbit_graph(
            Arc::new(Heisenberg::new(false).unwrap()),
            &[Point::tuple(&[0, 0, 0])],
            3,
        )
        .unwrap();
        assert_eq!(g.len(), set.len());
    }

    #[test]
    fn seed_outside_state_space() {
        let r = build_orbit_graph(Arc::new(Zd::new(2).unwrap()), &[Point::tuple(&[0])], 1);
        assert!(matches!(r, Err(Error::NotInStateSpace(_))));
    }

    #[test]
    fn csv_export_marks_frontier() {
        let g = build_orbit_graph(Arc::new(Zd::new(1).unwrap()), &[Point::tuple(&[0])], 1).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("source,generator,target"));
        assert!(text.contains("(1),e1,undefined"));
        assert!(text.contains("(0),E1,(-1)"));
    }
}

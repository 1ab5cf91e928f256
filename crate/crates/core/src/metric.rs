//! Weighted orbit metrics of subexponential volume growth on which the group
//! acts with bounded displacement.
//!
//! Every enumerated group element `g` contributes edges from `x` to `gx` of
//! length `λ(g)`; distinct orbits are chained through their basepoints by
//! bridge edges of lengths `ℓ₁, ℓ₂, …`.

use crate::error::{Error, Result};
use crate::orbits::{GroupEnumeration, OrbitGraph, Point, SharedAction};
use serde::Serialize;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::io::Write;
use std::sync::Arc;

/// `λ` along an enumeration `g₀, g₁, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthAssignment {
    enumeration: GroupEnumeration,
    lengths: Vec<u64>,
    verified_horizon: Vec<Option<usize>>,
}

impl LengthAssignment {
    /// Checks `λ(g₀) = 0`, `λ(g_i) > 0`, `λ(g) = λ(g⁻¹)` and monotonicity
    /// along the enumeration.
    pub fn new(enumeration: GroupEnumeration, lengths: Vec<u64>) -> Result<Self> {
        if lengths.len() != enumeration.len() || lengths.is_empty() {
            return Err(Error::InvalidLengths(format!(
                "{} lengths for {} elements",
                lengths.len(),
                enumeration.len()
            )));
        }
        if lengths[0] != 0 {
            return Err(Error::InvalidLengths("the identity must have length 0".into()));
        }
        for (i, el) in enumeration.iter().enumerate().skip(1) {
            if lengths[i] == 0 {
                return Err(Error::InvalidLengths(format!("`{}` has length 0", el.label)));
            }
            if lengths[el.inverse] != lengths[i] {
                return Err(Error::InvalidLengths(format!(
                    "`{}` and its inverse have different lengths",
                    el.label
                )));
            }
            if lengths[i] < lengths[i - 1] {
                return Err(Error::InvalidLengths(format!("lengths decrease at `{}`", el.label)));
            }
        }
        let n = lengths.len();
        Ok(LengthAssignment {
            enumeration,
            lengths,
            verified_horizon: vec![None; n],
        })
    }

    /// `λ ≡ 1` off the identity: the word metric.
    pub fn unit(enumeration: GroupEnumeration) -> Self {
        let lengths = (0..enumeration.len()).map(|i| u64::from(i > 0)).collect();
        Self::new(enumeration, lengths).expect("unit lengths are valid")
    }

    pub fn enumeration(&self) -> &GroupEnumeration {
        &self.enumeration
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn length(&self, i: usize) -> u64 {
        self.lengths[i]
    }

    pub fn verified_horizon(&self, i: usize) -> Option<usize> {
        self.verified_horizon[i]
    }

    /// Largest length among the listed elements; bounds `d(x, gx)` for all of
    /// them.
    pub fn max_length(&self) -> u64 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// `μ(n)`; for a complete enumeration every element past the list is
    /// treated as having infinite length.
    pub fn mu(&self, n: u64) -> Result<usize> {
        match mu(&self.lengths, n) {
            Err(Error::EnumerationTooShort(_)) if self.enumeration.is_complete() => Ok(self.lengths.len() - 1),
            other => other,
        }
    }

    /// CSV with columns `index, label, length, verified_horizon`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "label", "length", "verified_horizon"])?;
        for (i, el) in self.enumeration.iter().enumerate() {
            out.write_record([
                i.to_string(),
                el.label.clone(),
                self.lengths[i].to_string(),
                self.verified_horizon[i].map(|h| h.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `μ(n) = max{m : λ(g₀), …, λ(g_m) ≤ n}`. Fails if the table never exceeds
/// `n`, since a later element could still be short.
pub fn mu(lengths: &[u64], n: u64) -> Result<usize> {
    match lengths.iter().position(|&l| l > n) {
        Some(0) => Err(Error::InvalidLengths("λ(g₀) must be 0".into())),
        Some(k) => Ok(k - 1),
        None => Err(Error::EnumerationTooShort(n)),
    }
}

/// Shortest-path distances from one source, with the bound below which they
/// are exact.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub source: usize,
    /// `u64::MAX` for states not settled.
    pub dist: Vec<u64>,
    /// Least `d(x₀, z) + λ(g)` over settled `z` and elements `g` whose image
    /// at `z` is undefined: every path leaving the truncation is at least
    /// this long. `u64::MAX` when no path leaves.
    pub exit_bound: u64,
}

impl DistanceField {
    /// `d(source, y)`, failing when a path through the frontier could be
    /// shorter.
    pub fn exact(&self, y: usize) -> Result<u64> {
        let d = self.dist[y];
        if d <= self.exit_bound && d != u64::MAX {
            Ok(d)
        } else {
            Err(Error::TruncationExceeded(format!(
                "distance from state {} to state {y} is not certified (exit bound {})",
                self.source, self.exit_bound
            )))
        }
    }

    /// Largest `n` for which the ball of radius `n` is exact.
    pub fn certified_radius(&self) -> u64 {
        self.exit_bound.saturating_sub(1)
    }

    /// `|B(source; n)|` for `n = 0..=n_max`.
    pub fn ball_sizes(&self, n_max: u64) -> Result<Vec<usize>> {
        if n_max >= self.exit_bound {
            return Err(Error::TruncationExceeded(format!(
                "ball of radius {n_max} needs exit bound > {n_max}, have {}",
                self.exit_bound
            )));
        }
        let mut counts = vec![0usize; n_max as usize + 1];
        for &d in &self.dist {
            if d <= n_max {
                counts[d as usize] += 1;
            }
        }
        let mut acc = 0;
        Ok(counts
            .into_iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect())
    }
}

pub struct WeightedMetric {
    graph: Arc<OrbitGraph>,
    lengths: LengthAssignment,
    bridges: Vec<u64>,
    /// `images[i][x]` for enumerated element `i`; `u32::MAX` when undefined.
    images: Vec<Vec<u32>>,
    /// Rank of each state in the sorted order of identifiers, for
    /// deterministic tie-breaking.
    rank: Vec<u32>,
}

const UNDEFINED: u32 = u32::MAX;

impl WeightedMetric {
    /// `bridges[i−1] = ℓ_i` joins basepoint `i−1` to basepoint `i`.
    pub fn new(graph: Arc<OrbitGraph>, lengths: LengthAssignment, bridges: Vec<u64>) -> Result<Self> {
        if bridges.len() + 1 < graph.basepoints().len() {
            return Err(Error::InvalidLengths(format!(
                "{} orbits need {} bridge lengths, got {}",
                graph.basepoints().len(),
                graph.basepoints().len() - 1,
                bridges.len()
            )));
        }
        if bridges.contains(&0) {
            return Err(Error::InvalidLengths("bridge lengths must be positive".into()));
        }
        let images = lengths
            .enumeration()
            .iter()
            .map(|el| {
                (0..graph.len())
                    .map(|x| graph.apply_word(&el.word, x).map_or(UNDEFINED, |y| y as u32))
                    .collect()
            })
            .collect();
        let mut order: Vec<usize> = (0..graph.len()).collect();
        order.sort_by(|&a, &b| graph.point(a).cmp(graph.point(b)));
        let mut rank = vec![0u32; graph.len()];
        for (r, &x) in order.iter().enumerate() {
            rank[x] = r as u32;
        }
        Ok(WeightedMetric {
            graph,
            lengths,
            bridges,
            images,
            rank,
        })
    }

    pub fn graph(&self) -> &Arc<OrbitGraph> {
        &self.graph
    }

    pub fn lengths(&self) -> &LengthAssignment {
        &self.lengths
    }

    pub fn bridges(&self) -> &[u64] {
        &self.bridges
    }

    /// Image of state `x` under enumerated element `i`.
    pub fn image(&self, i: usize, x: usize) -> Option<usize> {
        let y = self.images[i][x];
        (y != UNDEFINED).then_some(y as usize)
    }

    fn bridge_neighbours(&self, x: usize, out: &mut Vec<(usize, u64)>) {
        out.clear();
        let bps = self.graph.basepoints();
        if let Some(j) = bps.iter().position(|&b| b == x) {
            if j > 0 {
                out.push((bps[j - 1], self.bridges[j - 1]));
            }
            if j + 1 < bps.len() {
                out.push((bps[j + 1], self.bridges[j]));
            }
        }
    }

    /// Label-setting shortest paths from `x`. With `bridges = false` the
    /// search stays inside the orbit of `x`.
    pub fn distances_from(&self, x: usize, bridges: bool) -> DistanceField {
        let n = self.graph.len();
        let mut dist = vec![u64::MAX; n];
        let mut done = vec![false; n];
        let mut exit_bound = u64::MAX;
        let mut heap = BinaryHeap::new();
        let mut nb = Vec::new();
        dist[x] = 0;
        heap.push(Reverse((0u64, self.rank[x], x)));
        while let Some(Reverse((d, _, u))) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            if d > exit_bound {
                break;
            }
            done[u] = true;
            for (i, row) in self.images.iter().enumerate().skip(1) {
                let w = self.lengths.lengths[i];
                let v = row[u];
                if v == UNDEFINED {
                    exit_bound = exit_bound.min(d + w);
                    continue;
                }
                let v = v as usize;
                if d + w < dist[v] {
                    dist[v] = d + w;
                    heap.push(Reverse((d + w, self.rank[v], v)));
                }
            }
            if bridges {
                self.bridge_neighbours(u, &mut nb);
                for &(v, w) in &nb {
                    if d + w < dist[v] {
                        dist[v] = d + w;
                        heap.push(Reverse((d + w, self.rank[v], v)));
                    }
                }
            }
        }
        for (y, settled) in done.iter().enumerate() {
            if !settled {
                dist[y] = u64::MAX;
            }
        }
        DistanceField {
            source: x,
            dist,
            exit_bound,
        }
    }

    /// Exact `d(x, y)`.
    pub fn weighted_distance(&self, x: usize, y: usize) -> Result<u64> {
        self.distances_from(x, true).exact(y)
    }

    /// Exact ball sizes around `x₀` up to `n_max`, with the inclusion
    /// `B(x₀; n) ⊆ S(μ(n))ⁿ·x₀` checked on the orbit of `x₀` and, for
    /// several orbits, the bound `|B(x₀;n)| ≤ Σ_{j ≤ m(n)} |B_j(x_j;n)|`.
    pub fn volume_growth(&self, x0: usize, n_max: u64) -> Result<VolumeReport> {
        let field = self.distances_from(x0, true);
        let sizes = field.ball_sizes(n_max)?;
        let orbit = self.graph.orbit_of(x0);

        // Inclusion in S(μ(n))ⁿ·x₀: one BFS per distinct value of μ.
        let mut inclusion_holds = true;
        let mut word_depth: HashMap<usize, Vec<u32>> = HashMap::new();
        for n in 0..=n_max {
            let m = self.lengths.mu(n)?;
            let depth = word_depth
                .entry(m)
                .or_insert_with(|| self.element_bfs(x0, m, n_max as usize));
            for (y, &d) in field.dist.iter().enumerate() {
                if d <= n && self.graph.orbit_of(y) == orbit && depth[y] as u64 > n {
                    inclusion_holds = false;
                }
            }
        }

        let mut orbit_sum_holds = None;
        let mut orbit_sum_checked_to = None;
        let bps = self.graph.basepoints();
        if bps.len() > 1 && x0 == bps[0] {
            let fields: Vec<DistanceField> = bps.iter().map(|&b| self.distances_from(b, false)).collect();
            let mut holds = true;
            let mut checked = 0;
            for n in 0..=n_max {
                let m = self.bridge_count_within(n);
                let mut total = 0usize;
                let mut ok = true;
                for f in fields.iter().take(m + 1) {
                    if n >= f.exit_bound {
                        ok = false;
                        break;
                    }
                    total += f.dist.iter().filter(|&&d| d <= n).count();
                }
                if !ok {
                    break;
                }
                checked = n;
                if sizes[n as usize] > total {
                    holds = false;
                }
            }
            orbit_sum_holds = Some(holds);
            orbit_sum_checked_to = Some(checked);
        }
        Ok(VolumeReport {
            sizes,
            inclusion_holds,
            orbit_sum_holds,
            orbit_sum_checked_to,
            exit_bound: field.exit_bound,
        })
    }

    /// Largest `m` with `ℓ₁ + ⋯ + ℓ_m ≤ n`.
    pub fn bridge_count_within(&self, n: u64) -> usize {
        let mut acc = 0u64;
        let mut m = 0;
        for &l in self
            .bridges
            .iter()
            .take(self.graph.basepoints().len().saturating_sub(1))
        {
            acc += l;
            if acc > n {
                break;
            }
            m += 1;
        }
        m
    }

    /// Word depth from `x` using only elements `g₁..g_m`, up to `limit`.
    fn element_bfs(&self, x: usize, m: usize, limit: usize) -> Vec<u32> {
        let mut depth = vec![u32::MAX; self.graph.len()];
        depth[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            if depth[u] as usize >= limit {
                continue;
            }
            for row in self.images.iter().take(m + 1).skip(1) {
                let v = row[u];
                if v != UNDEFINED && depth[v as usize] == u32::MAX {
                    depth[v as usize] = depth[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        depth
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub sizes: Vec<usize>,
    pub inclusion_holds: bool,
    pub orbit_sum_holds: Option<bool>,
    pub orbit_sum_checked_to: Option<u64>,
    pub exit_bound: u64,
}

/// Target sequence `slack(i)` for the length schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slack {
    /// `slack(i) = 1/(i+1)`.
    Harmonic,
    Constant(f64),
}

impl Slack {
    pub fn at(&self, i: usize) -> f64 {
        match *self {
            Slack::Harmonic => 1.0 / (i as f64 + 1.0),
            Slack::Constant(s) => s,
        }
    }
}

/// Output of [`schedule_lengths`].
#[derive(Debug, Clone)]
pub struct Schedule {
    pub lengths: LengthAssignment,
    pub bridges: Vec<u64>,
    /// Per inverse-closed block: `(labels, target root, horizon reached)`.
    pub blocks: Vec<BlockCertificate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockCertificate {
    pub labels: Vec<String>,
    pub length: u64,
    pub target: f64,
    pub horizon: usize,
}

/// Growth `|Sⁿx|` for `n = 0..=horizon` of the element set `S = {g₀..g_m}`,
/// computed by BFS through the action. Returns fewer entries if the state
/// budget runs out (the last entry is always exact).
pub fn element_growth(
    action: &SharedAction,
    enumeration: &GroupEnumeration,
    m: usize,
    x: &Point,
    horizon: usize,
    budget: usize,
) -> Result<Vec<usize>> {
    let words: Vec<_> = enumeration.iter().take(m + 1).skip(1).map(|e| e.word.clone()).collect();
    let mut seen: HashMap<Point, ()> = HashMap::from([(x.clone(), ())]);
    let mut layer = vec![x.clone()];
    let mut sizes = vec![1usize];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for p in &layer {
            for w in &words {
                if let Some(q) = action.act_word(w, p)? {
                    if !seen.contains_key(&q) {
                        seen.insert(q.clone(), ());
                        next.push(q);
                    }
                }
            }
            if seen.len() > budget {
                return Ok(sizes);
            }
        }
        sizes.push(seen.len());
        layer = next;
    }
    Ok(sizes)
}

/// Constructive diagonal extraction at a finite horizon.
///
/// Elements are processed in inverse-closed blocks. Block `k` receives the
/// smallest length `N ≥ λ(previous block)` such that
/// `max_j |S(k)ⁿ·x_j|^{1/n} ≤ 1 + slack(k)` for every `n ∈ [N, H]`, where
/// `H` is the horizon reached within `budget` states and `j` ranges over the
/// seeds with index `≤ k`.
///
/// With several seeds, bridge `ℓ_i` is the smallest `L ≥ ℓ_{i−1}` with
/// `(Σ_{j ≤ i} |S(μ(n))ⁿ·x_j|)^{1/n} ≤ 1 + slack(i)` for
/// `n ∈ [ℓ₁ + ⋯ + ℓ_i, H]`. The summands bound the orbit balls from above.
pub fn schedule_lengths(
    action: &SharedAction,
    enumeration: GroupEnumeration,
    seeds: &[Point],
    horizon: usize,
    slack: Slack,
    budget: usize,
) -> Result<Schedule> {
    let mut lengths = vec![0u64; enumeration.len()];
    let mut verified = vec![None; enumeration.len()];
    let mut blocks = Vec::new();
    let mut prev = 1u64;
    for (k, block) in enumeration.blocks().into_iter().enumerate().skip(1) {
        let last = *block.last().unwrap();
        let target = 1.0 + slack.at(k);
        let mut roots: Vec<f64> = Vec::new();
        let mut reached = horizon;
        for x in seeds.iter().take(k + 1) {
            let sizes = element_growth(action, &enumeration, last, x, horizon, budget)?;
            reached = reached.min(sizes.len() - 1);
            if roots.len() < sizes.len() {
                roots.resize(sizes.len(), 0.0);
            }
            for (n, &s) in sizes.iter().enumerate().skip(1) {
                roots[n] = roots[n].max((s as f64).powf(1.0 / n as f64));
            }
        }
        let labels: Vec<String> = block.iter().map(|&i| enumeration.get(i).label.clone()).collect();
        let lower = prev.max(1) as usize;
        if reached < lower || roots[reached] > target {
            let floor = roots
                .iter()
                .skip(1)
                .take(reached)
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Err(Error::HorizonInsufficient {
                generator: labels.join("/"),
                target,
                horizon: reached,
                measured_floor: floor,
            });
        }
        let last_bad = (lower..=reached).rev().find(|&n| roots[n] > target);
        let len = last_bad.map_or(lower, |n| n + 1) as u64;
        for &i in &block {
            lengths[i] = len;
            verified[i] = Some(reached);
        }
        blocks.push(BlockCertificate {
            labels,
            length: len,
            target,
            horizon: reached,
        });
        prev = len;
    }
    let mut assignment = LengthAssignment::new(enumeration, lengths)?;
    assignment.verified_horizon = verified;

    let mut bridges = Vec::new();
    if seeds.len() > 1 {
        // Upper bounds |S(μ(n))ⁿ·x_j| for the orbit balls.
        let mut bounds: Vec<Vec<usize>> = Vec::new();
        let mut cache: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut reached = horizon;
        for (j, x) in seeds.iter().enumerate() {
            let mut row = Vec::with_capacity(horizon + 1);
            for n in 0..=horizon {
                let m = assignment.mu(n as u64)?;
                if let std::collections::hash_map::Entry::Vacant(e) = cache.entry((j, m)) {
                    e.insert(element_growth(action, assignment.enumeration(), m, x, horizon, budget)?);
                }
                let sizes = &cache[&(j, m)];
                match sizes.get(n) {
                    Some(&s) => row.push(s),
                    None => {
                        reached = reached.min(n.saturating_sub(1));
                        break;
                    }
                }
            }
            bounds.push(row);
        }
        let mut prefix = 0u64;
        let mut prev_l = 1u64;
        for i in 1..seeds.len() {
            let target = 1.0 + slack.at(i);
            let root = |n: usize| -> f64 {
                let total: usize = bounds.iter().take(i + 1).map(|b| b[n]).sum();
                (total as f64).powf(1.0 / n as f64)
            };
            if reached == 0 || root(reached) > target {
                return Err(Error::HorizonInsufficient {
                    generator: format!("bridge {i}"),
                    target,
                    horizon: reached,
                    measured_floor: (1..=reached).map(root).fold(f64::INFINITY, f64::min),
                });
            }
            let last_bad = (1..=reached).rev().find(|&n| root(n) > target).unwrap_or(0) as u64;
            let l = prev_l.max((last_bad + 1).saturating_sub(prefix)).max(1);
            bridges.push(l);
            prefix += l;
            prev_l = l;
        }
    }
    Ok(Schedule {
        lengths: assignment,
        bridges,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{build_orbit_graph, GeneratorSystem, Union, Zd};

    fn z_graph(radius: usize) -> Arc<OrbitGraph> {
        Arc::new(build_orbit_graph(Arc::new(Zd::new(1).unwrap()), &[Point::tuple(&[0])], radius).unwrap())
    }

    fn idx(g: &OrbitGraph, k: i64) -> usize {
        g.index_of(&Point::tuple(&[k])).unwrap()
    }

    #[test]
    fn mu_examples() {
        let lin: Vec<u64> = (0..20).collect();
        assert_eq!(mu(&lin, 7).unwrap(), 7);
        let pow: Vec<u64> = (0..10).map(|i| if i == 0 { 0 } else { 1 << i }).collect();
        assert_eq!(mu(&pow, 8).unwrap(), 3);
        assert!(matches!(mu(&pow, 10_000), Err(Error::EnumerationTooShort(_))));
    }

    #[test]
    fn z_distances() {
        let g = z_graph(30);
        let gens = g.generators().clone();
        let unit = WeightedMetric::new(
            g.clone(),
            LengthAssignment::unit(GroupEnumeration::from_generators(&gens)),
            vec![],
        )
        .unwrap();
        assert_eq!(unit.weighted_distance(idx(&g, 0), idx(&g, 0)).unwrap(), 0);
        assert_eq!(unit.weighted_distance(idx(&g, 0), idx(&g, 7)).unwrap(), 7);

        let five = gens.parse_word("e1 e1 e1 e1 e1").unwrap();
        let e = GroupEnumeration::from_generators(&gens)
            .with_word("+5", five, &gens)
            .unwrap();
        let lam = LengthAssignment::new(e, vec![0, 2, 2, 3, 3]).unwrap();
        let m = WeightedMetric::new(g.clone(), lam, vec![]).unwrap();
        assert_eq!(m.weighted_distance(idx(&g, 0), idx(&g, 10)).unwrap(), 6);
        assert_eq!(m.weighted_distance(idx(&g, 0), idx(&g, 7)).unwrap(), 7);
    }

    #[test]
    fn z_volumes() {
        let g = z_graph(40);
        let gens = g.generators().clone();
        let e = GroupEnumeration::from_generators(&gens);
        let unit = WeightedMetric::new(g.clone(), LengthAssignment::unit(e.clone()), vec![]).unwrap();
        let v = unit.volume_growth(idx(&g, 0), 20).unwrap();
        assert!(v.inclusion_holds);
        for n in 0..=20 {
            assert_eq!(v.sizes[n], 2 * n + 1);
        }
        let three = WeightedMetric::new(g.clone(), LengthAssignment::new(e, vec![0, 3, 3]).unwrap(), vec![]).unwrap();
        let v = three.volume_growth(idx(&g, 0), 60).unwrap();
        for n in 0..=60 {
            assert_eq!(v.sizes[n], 2 * (n / 3) + 1);
        }
        assert!(three.volume_growth(idx(&g, 0), 200).is_err());
    }

    #[test]
    fn joined_orbits() {
        let u: SharedAction = Arc::new(Union::new(Arc::new(Zd::new(1).unwrap()), 2).unwrap());
        let seeds = [
            Point::Tagged(0, Box::new(Point::tuple(&[0]))),
            Point::Tagged(1, Box::new(Point::tuple(&[0]))),
        ];
        let g = Arc::new(build_orbit_graph(u, &seeds, 20).unwrap());
        let e = GroupEnumeration::from_generators(g.generators());
        let m = WeightedMetric::new(g.clone(), LengthAssignment::unit(e), vec![5]).unwrap();
        let x0 = g.basepoints()[0];
        let v = m.volume_growth(x0, 12).unwrap();
        assert_eq!(v.sizes[4], 9);
        // Radius 6 reaches x₁ and its ±1 neighbours.
        assert_eq!(v.sizes[6], 13 + 3);
        assert_eq!(v.orbit_sum_holds, Some(true));
    }

    #[test]
    fn length_validation() {
        let gens = GeneratorSystem::from_pairs("id", &[("a", Some("A"))]).unwrap();
        let e = GroupEnumeration::from_generators(&gens);
        assert!(LengthAssignment::new(e.clone(), vec![1, 1, 1]).is_err());
        assert!(LengthAssignment::new(e.clone(), vec![0, 0, 0]).is_err());
        assert!(LengthAssignment::new(e.clone(), vec![0, 1, 2]).is_err());
        assert!(LengthAssignment::new(e, vec![0, 2, 2]).is_ok());
    }

    #[test]
    fn z2_schedule_with_constant_slack() {
        let z2: SharedAction = Arc::new(Zd::new(2).unwrap());
        let e = GroupEnumeration::from_generators(z2.generators());
        let s = schedule_lengths(&z2, e, &[Point::tuple(&[0, 0])], 60, Slack::Constant(0.5), 1_000_000).unwrap();
        // (2n+1)^{1/n} ≤ 1.5 first holds for good at n = 7,
        // (2n²+2n+1)^{1/n} ≤ 1.5 at n = 16.
        assert_eq!(s.lengths.lengths(), &[0, 7, 7, 16, 16]);
        assert_eq!(s.lengths.mu(15).unwrap(), 2);
        assert_eq!(s.lengths.mu(1000).unwrap(), 4);
    }
}

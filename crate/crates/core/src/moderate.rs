//! Moderate ℓ¹-functions built shell by shell from a dominating growth
//! function: `ν(x) = F(n(x))⁻¹` with `n(x) = d(x₀, x)`.

use crate::error::{Error, Result};
use crate::growth::RegularizedGrowth;
use crate::metric::WeightedMetric;
use crate::numeric::{inverse_square_tail, CompensatedSum};
use crate::orbits::{OrbitGraph, Word};
use serde::Serialize;
use std::io::Write;

const ABSENT: u32 = u32::MAX;

/// Upper bound for the mass outside the computed shells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailBound {
    /// `Σ_{n > N} 1/n²`, valid when `F(n) ≥ n²|B(n)|` beyond the horizon.
    InverseSquare {
        horizon: u64,
        value: f64,
    },
    /// The orbit closes inside the truncation; nothing is missing.
    Closed,
    Explicit(f64),
}

impl TailBound {
    pub fn value(&self) -> f64 {
        match *self {
            TailBound::InverseSquare { value, .. } => value,
            TailBound::Closed => 0.0,
            TailBound::Explicit(v) => v,
        }
    }
}

/// A positive function on the states of a truncated graph, kept in the log
/// domain and normalised against a certified bound for its full ℓ¹ norm.
#[derive(Debug, Clone)]
pub struct ModerateFunction {
    /// Position of each graph state in the weight tables, or `ABSENT`.
    pos: Vec<u32>,
    states: Vec<usize>,
    shells: Vec<u64>,
    /// `log ν` before normalisation.
    log_raw: Vec<f64>,
    /// Weight of the added fixed point `x_*`, if any.
    star_log_raw: Option<f64>,
    pub growth: Option<RegularizedGrowth>,
    /// Largest shell that carries weights.
    pub horizon: u64,
    pub flatten_radius: u64,
    pub flatten_delta: Option<f64>,
    /// Displacement bound `c` used for flattening.
    pub displacement: Option<u64>,
    pub partial_mass: f64,
    pub tail: TailBound,
    /// `log(partial mass + tail bound)`.
    pub log_norm: f64,
}

impl ModerateFunction {
    /// A function from explicit `(state, shell, log ν)` triples with a given
    /// tail bound; normalised like the built ones.
    pub fn from_log_weights(
        graph_len: usize,
        entries: &[(usize, u64, f64)],
        star_log: Option<f64>,
        tail: TailBound,
    ) -> Self {
        let mut pos = vec![ABSENT; graph_len];
        let mut states = Vec::with_capacity(entries.len());
        let mut shells = Vec::with_capacity(entries.len());
        let mut log_raw = Vec::with_capacity(entries.len());
        for (k, &(x, n, l)) in entries.iter().enumerate() {
            pos[x] = k as u32;
            states.push(x);
            shells.push(n);
            log_raw.push(l);
        }
        let horizon = shells.iter().copied().max().unwrap_or(0);
        let mut f = ModerateFunction {
            pos,
            states,
            shells,
            log_raw,
            star_log_raw: star_log,
            growth: None,
            horizon,
            flatten_radius: 0,
            flatten_delta: None,
            displacement: None,
            partial_mass: 0.0,
            tail,
            log_norm: 0.0,
        };
        f.renormalize();
        f
    }

    fn renormalize(&mut self) {
        // Shell order, so that the summation order is fixed.
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by_key(|&k| (self.shells[k], self.states[k]));
        let mut sum: CompensatedSum = order.iter().map(|&k| self.log_raw[k].exp()).collect();
        if let Some(s) = self.star_log_raw {
            sum.add(s.exp());
        }
        self.partial_mass = sum.value();
        self.log_norm = (self.partial_mass + self.tail.value()).ln();
    }

    pub fn domain(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.pos.get(x).is_some_and(|&p| p != ABSENT)
    }

    fn slot(&self, x: usize) -> Option<usize> {
        self.pos.get(x).and_then(|&p| (p != ABSENT).then_some(p as usize))
    }

    pub fn shell(&self, x: usize) -> Option<u64> {
        self.slot(x).map(|k| self.shells[k])
    }

    /// Normalised `log ν(x)`.
    pub fn log_nu(&self, x: usize) -> Option<f64> {
        self.slot(x).map(|k| self.log_raw[k] - self.log_norm)
    }

    pub fn nu(&self, x: usize) -> Option<f64> {
        self.log_nu(x).map(f64::exp)
    }

    /// `log ν(x)` before normalisation, i.e. `−log F(n(x))`.
    pub fn log_nu_raw(&self, x: usize) -> Option<f64> {
        self.slot(x).map(|k| self.log_raw[k])
    }

    pub fn star_log_nu(&self) -> Option<f64> {
        self.star_log_raw.map(|l| l - self.log_norm)
    }

    /// Normalised mass carried by the truncation (star included).
    pub fn normalized_mass(&self) -> f64 {
        self.partial_mass / (self.partial_mass + self.tail.value())
    }

    /// Normalised tail bound.
    pub fn normalized_tail(&self) -> f64 {
        self.tail.value() / (self.partial_mass + self.tail.value())
    }

    /// Summary for reports.
    pub fn certificate(&self) -> NuCertificate {
        let mass = self.normalized_mass();
        let tail = self.normalized_tail();
        NuCertificate {
            horizon: self.horizon,
            states: self.states.len(),
            normalized_mass: mass,
            normalized_tail: tail,
            total_bound: mass + tail,
            within_bound: mass + tail <= 1.0 + 1e-12,
            all_positive: self.log_raw.iter().all(|l| l.is_finite()),
            flatten_radius: self.flatten_radius,
            flatten_delta: self.flatten_delta,
            displacement: self.displacement,
            tail: self.tail,
        }
    }

    /// CSV with columns `state, shell, log_nu` in shell order.
    pub fn write_csv<W: Write>(&self, graph: &OrbitGraph, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["state", "shell", "log_nu"])?;
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by_key(|&k| (self.shells[k], self.states[k]));
        if let Some(s) = self.star_log_nu() {
            out.write_record(["*".to_string(), String::new(), s.to_string()])?;
        }
        for k in order {
            out.write_record([
                graph.point(self.states[k]).to_string(),
                self.shells[k].to_string(),
                (self.log_raw[k] - self.log_norm).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Flattens on the ball `B(m)` for the least `m` with
    /// `F(n+c)/F(n) ≤ 1+δ` for all computed `n ≥ m`, where `c` bounds the
    /// displacement `d(sx, x)` of the generators.
    pub fn flatten(&self, c: u64, delta: f64) -> Result<ModerateFunction> {
        if !(delta > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("δ = {delta} must be positive")));
        }
        let f = self
            .growth
            .as_ref()
            .ok_or_else(|| Error::FlatteningAbsent("no growth function attached".into()))?;
        let h = self.horizon.min(f.horizon() as u64);
        let bound = (1.0 + delta).ln();
        if h < c {
            return Err(Error::NoFlattenRadius {
                horizon: h as usize,
                ratio_floor: f64::NAN,
            });
        }
        let step = |n: u64| f.log_value((n + c) as usize) - f.log_value(n as usize);
        let top = h - c;
        let mut m = top + 1;
        while m > 0 && step(m - 1) <= bound {
            m -= 1;
        }
        if m > top {
            let floor = (0..=top).map(step).fold(f64::INFINITY, f64::min).exp();
            return Err(Error::NoFlattenRadius {
                horizon: h as usize,
                ratio_floor: floor,
            });
        }
        let mut out = self.clone();
        let cap = f.log_value(m as usize);
        for k in 0..out.states.len() {
            let n = out.shells[k];
            if n <= m {
                out.log_raw[k] = -cap;
            }
        }
        if out.star_log_raw.is_some() {
            out.star_log_raw = Some(-cap);
        }
        out.flatten_radius = m;
        out.flatten_delta = Some(delta);
        out.displacement = Some(c);
        out.renormalize();
        Ok(out)
    }

    /// Exhaustive check of `|ν(sx)/ν(x) − 1| ≤ δ` over the states where both
    /// sides are defined.
    pub fn flatten_contract(&self, graph: &OrbitGraph) -> Result<FlattenCheck> {
        let delta = self
            .flatten_delta
            .ok_or_else(|| Error::FlatteningAbsent("function was not flattened".into()))?;
        let gens = graph.generators();
        let mut worst = 0.0f64;
        let mut checked = 0usize;
        for &x in &self.states {
            for s in gens.non_identity() {
                let Some(y) = graph.step(s, x).filter(|&y| self.contains(y)) else {
                    continue;
                };
                checked += 1;
                let dev = (self.log_nu(y).unwrap() - self.log_nu(x).unwrap()).exp_m1().abs();
                worst = worst.max(dev);
            }
        }
        Ok(FlattenCheck {
            delta,
            max_deviation: worst,
            checked,
            holds: worst <= delta * (1.0 + 1e-12),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NuCertificate {
    pub horizon: u64,
    pub states: usize,
    pub normalized_mass: f64,
    pub normalized_tail: f64,
    pub total_bound: f64,
    pub within_bound: bool,
    pub all_positive: bool,
    pub flatten_radius: u64,
    pub flatten_delta: Option<f64>,
    pub displacement: Option<u64>,
    pub tail: TailBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlattenCheck {
    pub delta: f64,
    pub max_deviation: f64,
    pub checked: usize,
    pub holds: bool,
}

/// Shell-form function `ν(x) = F(n(x))⁻¹` on the exact metric shells around
/// `x₀`, after checking `F(n) ≥ n²|B(n)|` on every computed shell. With
/// `star`, a fixed point `x_*` of weight `F(0)⁻¹` is added (used when a
/// linear order is closed up into a circular one).
pub fn build_nu(metric: &WeightedMetric, x0: usize, f: &RegularizedGrowth, star: bool) -> Result<ModerateFunction> {
    let field = metric.distances_from(x0, true);
    let h = (f.horizon() as u64).min(field.certified_radius());
    let balls = field.ball_sizes(h)?;
    for n in 1..=h as usize {
        let required = ((n * n) as f64).ln() + (balls[n] as f64).ln();
        if f.log_value(n) < required - 1e-12 * required.abs().max(1.0) {
            return Err(Error::DominationViolated {
                n,
                f_value: f.value(n),
                required: (n * n * balls[n]) as f64,
            });
        }
    }
    let mut entries = Vec::with_capacity(balls[h as usize]);
    let mut deepest = 0;
    for (x, &d) in field.dist.iter().enumerate() {
        if d <= h {
            entries.push((x, d, -f.log_value(d as usize)));
            deepest = deepest.max(d);
        }
    }
    let closed = field.exit_bound == u64::MAX && field.dist.iter().filter(|&&d| d != u64::MAX).all(|&d| d <= h);
    let tail = if closed {
        TailBound::Closed
    } else {
        TailBound::InverseSquare {
            horizon: h,
            value: inverse_square_tail(h as usize),
        }
    };
    let star_log = star.then(|| -f.log_value(0));
    let mut nu = ModerateFunction::from_log_weights(metric.graph().len(), &entries, star_log, tail);
    nu.horizon = h;
    nu.growth = Some(f.clone());
    Ok(nu)
}

/// Largest `δ` with `δ(2 + δ) ≤ ε`, so that `(1+δ)² − 1 ≤ ε`.
pub fn delta_for_epsilon(eps: f64) -> f64 {
    let mut d = eps / (1.0 + (1.0 + eps).sqrt());
    while d * (2.0 + d) > eps {
        d = d.next_down();
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeratenessReport {
    pub word: String,
    /// `(shell, max |ν(gx)/ν(x) − 1|)` over shells with at least one
    /// evaluable state.
    pub shells: Vec<(u64, f64)>,
    /// `F(n+c)/F(n) − 1` per listed shell, when `F` is attached.
    pub envelope: Vec<f64>,
    pub horizon: u64,
    /// Width of the shell windows used for the trend.
    pub window: u64,
    /// Whether the maxima over consecutive windows of shells are
    /// non-increasing over the last half of the horizon.
    pub trend_non_increasing: bool,
    /// Number of windows compared.
    pub windows: usize,
    /// The same, shell by shell.
    pub pointwise_non_increasing: bool,
}

/// Per-shell deviations `|ν(gx)/ν(x) − 1|` for a word `g`.
///
/// Shells of a weighted metric inherit the lattice of the generator lengths,
/// so the deviations oscillate with that period; the trend is read on maxima
/// over windows of `window` consecutive shells (at least the largest
/// generator length).
pub fn moderateness_report(nu: &ModerateFunction, graph: &OrbitGraph, g: &Word, window: u64) -> ModeratenessReport {
    let mut per_shell: Vec<f64> = vec![f64::NAN; nu.horizon as usize + 1];
    for &x in nu.domain() {
        let Some(y) = graph.apply_word(g, x).filter(|&y| nu.contains(y)) else {
            continue;
        };
        let n = nu.shell(x).unwrap() as usize;
        let dev = (nu.log_nu(y).unwrap() - nu.log_nu(x).unwrap()).exp_m1().abs();
        if per_shell[n].is_nan() || dev > per_shell[n] {
            per_shell[n] = dev;
        }
    }
    let shells: Vec<(u64, f64)> = per_shell
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .map(|(n, &v)| (n as u64, v))
        .collect();
    let c = g.len().max(1);
    let envelope = match &nu.growth {
        Some(f) => shells
            .iter()
            .map(|&(n, _)| {
                let n = n as usize;
                if n + c <= f.horizon() {
                    (f.log_value(n + c) - f.log_value(n)).exp_m1()
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => vec![],
    };
    let half = nu.horizon / 2;
    let tail: Vec<f64> = shells.iter().filter(|(n, _)| *n >= half).map(|&(_, v)| v).collect();
    let pointwise_non_increasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let window = window.max(1);
    let mut blocks: Vec<f64> = Vec::new();
    for &(n, v) in shells.iter().filter(|(n, _)| *n >= half) {
        let b = ((n - half) / window) as usize;
        if blocks.len() <= b {
            blocks.resize(b + 1, f64::NAN);
        }
        if blocks[b].is_nan() || v > blocks[b] {
            blocks[b] = v;
        }
    }
    // A trailing partial window sees fewer shells and is dropped.
    if !(nu.horizon + 1 - half).is_multiple_of(window) && blocks.len() > 1 {
        blocks.pop();
    }
    let blocks: Vec<f64> = blocks.into_iter().filter(|v| !v.is_nan()).collect();
    let trend_non_increasing = blocks.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    ModeratenessReport {
        word: g.display(graph.generators()),
        shells,
        envelope,
        horizon: nu.horizon,
        window,
        trend_non_increasing,
        windows: blocks.len(),
        pointwise_non_increasing,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthBoundReport {
    pub lambda: f64,
    /// Word radius beyond which all generator ratios lie in `[λ⁻¹, λ]`.
    pub m: usize,
    /// `min ν` on `B(x; m)`.
    pub c: f64,
    pub norm: f64,
    pub checked_up_to: usize,
    /// Largest `log|Sⁿx| − log(c⁻¹‖ν‖λⁿ)` over checked `n` (≤ 0 when the
    /// bound holds).
    pub worst_log_margin: f64,
    pub holds: bool,
}

/// The converse direction as a consistency oracle: from the ratios of `ν`
/// derive `|Sⁿx| ≤ c⁻¹‖ν‖λⁿ` and check it against the measured balls.
pub fn growth_bound_from_nu(
    nu: &ModerateFunction,
    graph: &OrbitGraph,
    x: usize,
    lambda: f64,
) -> Result<GrowthBoundReport> {
    if !(lambda > 1.0) {
        return Err(Error::ParameterOutOfRange(format!("λ = {lambda} must exceed 1")));
    }
    let dist = graph.distances_from(x);
    let radius = graph.certified_radius(x);
    let gens = graph.generators();
    let log_lambda = lambda.ln();
    // Deepest state within the weighted region, measured in the word metric.
    let reach = nu
        .domain()
        .iter()
        .filter(|&&y| dist[y] != u32::MAX)
        .map(|&y| dist[y] as usize)
        .max()
        .unwrap_or(0);
    let mut worst_bad: Option<usize> = None;
    for &y in nu.domain() {
        if dist[y] == u32::MAX {
            continue;
        }
        for s in gens.non_identity() {
            let Some(z) = graph.step(s, y).filter(|&z| nu.contains(z)) else {
                continue;
            };
            let r = nu.log_nu(z).unwrap() - nu.log_nu(y).unwrap();
            if r.abs() > log_lambda * (1.0 + 1e-12) {
                let d = dist[y] as usize;
                worst_bad = Some(worst_bad.map_or(d, |w: usize| w.max(d)));
            }
        }
    }
    let m = worst_bad.map_or(0, |d| d + 1);
    // The bound needs B(x; m) inside the weighted region and at least one
    // shell beyond it.
    let limit = radius.min(reach);
    if m >= limit && worst_bad.is_some() {
        return Err(Error::RatiosNeverSettle { lambda });
    }
    let mut c_log = f64::INFINITY;
    for &y in nu.domain() {
        if dist[y] != u32::MAX && dist[y] as usize <= m {
            c_log = c_log.min(nu.log_nu(y).unwrap());
        }
    }
    let norm = nu.normalized_mass() + nu.normalized_tail();
    let sizes = graph.ball_sizes(x, limit.min(radius))?;
    let mut worst = f64::NEG_INFINITY;
    for (n, &b) in sizes.iter().enumerate() {
        let rhs = -c_log + norm.ln() + n as f64 * log_lambda;
        worst = worst.max((b as f64).ln() - rhs);
    }
    Ok(GrowthBoundReport {
        lambda,
        m,
        c: c_log.exp(),
        norm,
        checked_up_to: sizes.len() - 1,
        worst_log_margin: worst,
        holds: worst <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{dominating_f, GrowthProfile};
    use crate::metric::LengthAssignment;
    use crate::orbits::{build_orbit_graph, GroupEnumeration, Point, Zd};
    use std::sync::Arc;

    fn z_setup(radius: usize) -> (Arc<OrbitGraph>, WeightedMetric, usize) {
        let g = Arc::new(build_orbit_graph(Arc::new(Zd::new(1).unwrap()), &[Point::tuple(&[0])], radius).unwrap());
        let e = GroupEnumeration::from_generators(g.generators());
        let m = WeightedMetric::new(g.clone(), LengthAssignment::unit(e), vec![]).unwrap();
        let x0 = g.basepoints()[0];
        (g, m, x0)
    }

    fn quartic(h: usize) -> RegularizedGrowth {
        RegularizedGrowth::from_fn(h, |n| 4.0 * (n.max(1) as f64).ln())
    }

    #[test]
    fn z_explicit_f() {
        let (g, m, x0) = z_setup(20);
        let f = RegularizedGrowth::from_fn(20, |n| {
            if n == 0 {
                0.0
            } else {
                ((n * n * (2 * n + 1)) as f64).ln()
            }
        });
        let nu = build_nu(&m, x0, &f, false).unwrap();
        let three = g.index_of(&Point::tuple(&[3])).unwrap();
        assert!((nu.log_nu_raw(three).unwrap() - (1.0f64 / 63.0).ln()).abs() < 1e-12);
        assert_eq!(nu.log_nu_raw(x0).unwrap(), 0.0);
    }

    #[test]
    fn z_mass_at_100() {
        let (g, m, x0) = z_setup(110);
        let balls = GrowthProfile::of_balls(&g, x0, 100).unwrap();
        let f = dominating_f(&balls).unwrap();
        let nu = build_nu(&m, x0, &f, false).unwrap();
        // Raw mass without the basepoint sits below Σ_{n≤100} 1/n².
        let head: f64 = (1..=100).map(|n| 1.0 / (n * n) as f64).sum();
        assert!(nu.partial_mass - 1.0 <= head);
        assert!((head - 1.634_983_900_184_892).abs() < 1e-12);
        let cert = nu.certificate();
        assert!(cert.within_bound);
    }

    #[test]
    fn domination_enforced() {
        let (_, m, x0) = z_setup(20);
        assert!(matches!(
            build_nu(&m, x0, &quartic(10), false),
            Err(Error::DominationViolated { .. })
        ));
    }

    #[test]
    fn flatten_quartic() {
        let (g, m, x0) = z_setup(60);
        let f = quartic(50);
        // n⁴ dominates n²(2n+1) from n = 3 on; start from an explicit table.
        let entries: Vec<(usize, u64, f64)> = (0..g.len())
            .filter_map(|x| {
                let d = m.distances_from(x0, true).dist[x];
                (d <= 50).then(|| (x, d, -f.log_value(d as usize)))
            })
            .collect();
        let mut nu = ModerateFunction::from_log_weights(g.len(), &entries, None, TailBound::Explicit(0.0));
        nu.growth = Some(f.clone());
        nu.horizon = 50;
        let flat = nu.flatten(1, 0.5).unwrap();
        assert_eq!(flat.flatten_radius, 10);
        let check = flat.flatten_contract(&g).unwrap();
        assert!(check.holds && check.max_deviation < 0.5);
        let same = nu.flatten(1, 100.0).unwrap();
        assert_eq!(same.flatten_radius, 0);
        for &x in nu.domain() {
            assert_eq!(same.log_nu(x), nu.log_nu(x));
        }
        assert!(matches!(nu.flatten(1, 1e-6), Err(Error::NoFlattenRadius { .. })));
    }

    #[test]
    fn delta_solves_quadratic() {
        let d = delta_for_epsilon(0.1);
        assert!(d * (2.0 + d) <= 0.1);
        assert!((d - (1.1f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!(d > 0.048);
    }

    #[test]
    fn shell_deviations() {
        let (g, _, x0) = z_setup(120);
        let f = quartic(110);
        let dist = g.distances_from(x0);
        let entries: Vec<(usize, u64, f64)> = (0..g.len())
            .filter(|&x| dist[x] <= 110)
            .map(|x| (x, dist[x] as u64, -f.log_value(dist[x] as usize)))
            .collect();
        let mut nu = ModerateFunction::from_log_weights(g.len(), &entries, None, TailBound::Explicit(0.0));
        nu.growth = Some(f);
        nu.horizon = 110;
        let plus = g.generators().parse_word("e1").unwrap();
        let rep = moderateness_report(&nu, &g, &plus, 1);
        let at = |n: u64| rep.shells.iter().find(|s| s.0 == n).unwrap().1;
        assert!((at(10) - ((10.0f64 / 9.0).powi(4) - 1.0)).abs() < 1e-12);
        assert!((at(100) - ((100.0f64 / 99.0).powi(4) - 1.0)).abs() < 1e-12);
        assert!(rep.trend_non_increasing);
        let id = moderateness_report(&nu, &g, &Word::default(), 1);
        assert!(id.shells.iter().all(|s| s.1 == 0.0));

        let b = growth_bound_from_nu(&nu, &g, x0, 1.1).unwrap();
        assert!(b.holds && b.checked_up_to >= 100);

        let bad_entries: Vec<(usize, u64, f64)> = entries
            .iter()
            .map(|&(x, n, _)| (x, n, -(n as f64) * 2f64.ln()))
            .collect();
        let bad = ModerateFunction::from_log_weights(g.len(), &bad_entries, None, TailBound::Explicit(0.0));
        assert!(matches!(
            growth_bound_from_nu(&bad, &g, x0, 1.1),
            Err(Error::RatiosNeverSettle { .. })
        ));
    }
}

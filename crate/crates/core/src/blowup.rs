//! Blow-ups of circle actions along a countable invariant set: the realised
//! action `ρ̂`, the collapsing map `h` with `h(J_x) = x`, and the checks that
//! tie them together. The flagship case is the Denjoy construction for an
//! irrational rotation.

use crate::error::{Error, Result};
use crate::fixed::Fixed256;
use crate::growth::GrowthVerdict;
use crate::numeric::CompensatedSum;
use crate::orbits::{
    Action, Angle, CircularOrder, GenId, GeneratorSystem, OrderStructure, Point, Rotation, SharedAction,
};
use crate::pipeline::{word_growth, Pipeline, PipelineConfig};
use crate::realize::{CirclePoint, Location, RealizedAction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// A circle action on a countable set `X ⊂ S¹` with exact positions.
#[derive(Clone)]
pub enum BaseAction {
    /// `{kα mod 1}` under the rotation by `α`.
    Rotation(Arc<Rotation>),
    /// `{k/q}` with every generator acting trivially.
    Identity(Arc<IdentityCircle>),
}

impl BaseAction {
    pub fn rotation(angle: Angle) -> Result<Self> {
        Ok(BaseAction::Rotation(Arc::new(Rotation::new(angle)?)))
    }

    pub fn identity(points: u64) -> Result<Self> {
        Ok(BaseAction::Identity(Arc::new(IdentityCircle::new(points)?)))
    }

    pub fn shared(&self) -> SharedAction {
        match self {
            BaseAction::Rotation(r) => r.clone(),
            BaseAction::Identity(i) => i.clone(),
        }
    }

    pub fn generators(&self) -> &GeneratorSystem {
        match self {
            BaseAction::Rotation(r) => r.generators(),
            BaseAction::Identity(i) => i.generators(),
        }
    }

    pub fn position(&self, p: &Point) -> Result<Fixed256> {
        match self {
            BaseAction::Rotation(r) => r.position(p),
            BaseAction::Identity(i) => i.position(p),
        }
    }

    /// `ρ(g)` on a circle coordinate, computed from the rotation itself
    /// rather than from the orbit.
    pub fn map(&self, g: GenId, t: Fixed256) -> Fixed256 {
        let gens = self.generators();
        if g == gens.identity() {
            return t;
        }
        let BaseAction::Rotation(r) = self else {
            return t;
        };
        let sign: i64 = if gens.label(g) == "r" { 1 } else { -1 };
        match r.angle() {
            Angle::Golden => t.wrapping_add(Fixed256::golden().wrapping_mul_int(sign)),
            // floor(2^256 m/q) for the residue m recovered from t, so that
            // images of orbit points are bit-exact.
            Angle::Rational { p, q } => {
                let m = (t.to_f64() * q as f64).round() as i64;
                Fixed256::from_ratio(m + sign * p, q)
            }
        }
    }

    pub fn name(&self) -> String {
        self.shared().name()
    }
}

/// `q` equally spaced points on the circle with trivial generators `g`, `G`.
pub struct IdentityCircle {
    points: u64,
    gens: GeneratorSystem,
}

impl IdentityCircle {
    pub fn new(points: u64) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidSpec("identity circle needs a point".into()));
        }
        Ok(IdentityCircle {
            points,
            gens: GeneratorSystem::from_pairs("id", &[("g", Some("G"))])?,
        })
    }

    pub fn position(&self, p: &Point) -> Result<Fixed256> {
        match p.as_tuple() {
            Some(&[k]) if self.contains(p) => Ok(Fixed256::from_ratio(k, self.points)),
            _ => Err(Error::NotInStateSpace(p.to_string())),
        }
    }
}

struct PositionOrder(Arc<IdentityCircle>);

impl CircularOrder for PositionOrder {
    fn orientation(&self, a: &Point, b: &Point, c: &Point) -> Result<i8> {
        let pos = |p: &Point| self.0.position(p).map_err(|_| Error::OrderIncomplete(p.to_string()));
        Ok(Fixed256::orientation(pos(a)?, pos(b)?, pos(c)?))
    }
}

impl Action for IdentityCircle {
    fn name(&self) -> String {
        format!("identity-{}", self.points)
    }
    fn generators(&self) -> &GeneratorSystem {
        &self.gens
    }
    fn contains(&self, p: &Point) -> bool {
        matches!(p.as_tuple(), Some(&[k]) if k >= 0 && (k as u64) < self.points)
    }
    fn apply(&self, _g: GenId, p: &Point) -> Result<Option<Point>> {
        if !self.contains(p) {
            return Err(Error::NotInStateSpace(p.to_string()));
        }
        Ok(Some(p.clone()))
    }
    fn order(&self) -> Option<OrderStructure> {
        let me = Arc::new(IdentityCircle {
            points: self.points,
            gens: self.gens.clone(),
        });
        Some(OrderStructure::Circular {
            order: Arc::new(PositionOrder(me)),
            basepoint: self.seed(),
        })
    }
    fn seed(&self) -> Point {
        Point::tuple(&[0])
    }
    fn is_finite(&self) -> bool {
        true
    }
}

/// Value of the collapsing map at a raw coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Collapse {
    /// `ξ ∈ closure(J_x)`: `h(ξ) = x`.
    Exact(Fixed256),
    /// `ξ` in uncovered slack between `J_left` and `J_right`; `h(ξ)` lies in
    /// the arc `[left, right]`.
    Bracket { left: Fixed256, right: Fixed256 },
}

/// `h : S¹ → S¹`, constant `x` on each `J_x`.
pub struct CollapseMap {
    positions: Vec<Fixed256>,
}

impl CollapseMap {
    fn new(base: &BaseAction, action: &RealizedAction) -> Result<Self> {
        let lay = action.layout();
        let positions = (0..lay.len())
            .map(|k| base.position(lay.point(k)))
            .collect::<Result<_>>()?;
        Ok(CollapseMap { positions })
    }

    /// `h` on the interval with layout entry `k`.
    pub fn of_entry(&self, k: usize) -> Fixed256 {
        self.positions[k]
    }

    pub fn eval(&self, action: &RealizedAction, xi: f64) -> Collapse {
        match action.layout().locate(xi) {
            Location::Interval(p) => Collapse::Exact(self.positions[p.entry]),
            Location::Gap { left, right } => Collapse::Bracket {
                left: self.positions[left],
                right: self.positions[right],
            },
        }
    }
}

/// A blown-up action with its collapsing map.
pub struct Blowup {
    pub base: BaseAction,
    pub pipeline: Pipeline,
    pub collapse: CollapseMap,
    /// Set when the orbit growth does not look subexponential at the
    /// measured horizon.
    pub growth_warning: Option<String>,
}

impl Blowup {
    pub fn action(&self) -> &RealizedAction {
        &self.pipeline.action
    }
}

/// Runs the full pipeline on the base action's orbit with its induced
/// circular order. `cfg.action` is ignored.
pub fn blow_up(base: BaseAction, cfg: &PipelineConfig) -> Result<Blowup> {
    let pipeline = Pipeline::run_with(cfg, base.shared())?;
    let growth_warning = match word_growth(&pipeline.graph) {
        Ok((_, d)) if d.verdict == GrowthVerdict::ConsistentWithExponential => Some(format!(
            "orbit growth of {} consistent with exponential at horizon {}",
            base.name(),
            d.horizon
        )),
        _ => None,
    };
    let collapse = CollapseMap::new(&base, &pipeline.action)?;
    Ok(Blowup {
        base,
        pipeline,
        collapse,
        growth_warning,
    })
}

/// Distance on ℝ/ℤ between two exact coordinates.
fn fixed_distance(a: Fixed256, b: Fixed256) -> f64 {
    let d = a.wrapping_sub(b).to_f64();
    d.min(1.0 - d)
}

#[derive(Debug, Clone, Serialize)]
pub struct SemiconjugacyReport {
    pub grid: usize,
    pub generators: Vec<String>,
    /// Grid points in the interior of some `J_x`, over all generators.
    pub interval_points: usize,
    pub gap_points: usize,
    pub domain_misses: usize,
    /// `max dist(h(ρ̂(g)ξ), ρ(g)h(ξ))` over interval points.
    pub max_residual: f64,
    pub endpoints_checked: usize,
    pub endpoint_residual: f64,
    /// Bracketed gap points whose image bracket is the `ρ(g)`-image of
    /// theirs.
    pub brackets_consistent: bool,
    /// Sampled triples with distinct `h` values whose orientation differs.
    pub monotonicity_samples: usize,
    pub monotonicity_violations: usize,
}

/// Compares `h ∘ ρ̂(g)` with `ρ(g) ∘ h` on a raw grid and on every evaluable
/// endpoint, for every non-identity generator.
pub fn semiconjugacy_check(b: &Blowup, grid: usize, samples: usize, seed: u64) -> Result<SemiconjugacyReport> {
    let action = b.action();
    let lay = action.layout();
    let gens: Vec<GenId> = b.base.generators().non_identity().collect();
    let mut rep = SemiconjugacyReport {
        grid,
        generators: gens.iter().map(|&g| b.base.generators().label(g).to_string()).collect(),
        interval_points: 0,
        gap_points: 0,
        domain_misses: 0,
        max_residual: 0.0,
        endpoints_checked: 0,
        endpoint_residual: 0.0,
        brackets_consistent: true,
        monotonicity_samples: 0,
        monotonicity_violations: 0,
    };
    for &g in &gens {
        let outcomes: Vec<Option<(bool, f64)>> = RealizedAction::grid(grid)
            .map(|xi| match lay.locate(xi) {
                Location::Interval(p) => match action.apply(g, p) {
                    Ok((q, _)) => {
                        let lhs = b.collapse.of_entry(q.entry);
                        let rhs = b.base.map(g, b.collapse.of_entry(p.entry));
                        Some((true, fixed_distance(lhs, rhs)))
                    }
                    Err(_) => None,
                },
                Location::Gap { left, right } => {
                    let ok = match (action.entry_image(g, left), action.entry_image(g, right)) {
                        (Ok(l), Ok(r)) => {
                            b.collapse.of_entry(l) == b.base.map(g, b.collapse.of_entry(left))
                                && b.collapse.of_entry(r) == b.base.map(g, b.collapse.of_entry(right))
                        }
                        _ => true,
                    };
                    Some((false, if ok { 0.0 } else { f64::INFINITY }))
                }
            })
            .collect();
        for o in outcomes {
            match o {
                None => rep.domain_misses += 1,
                Some((true, r)) => {
                    rep.interval_points += 1;
                    rep.max_residual = rep.max_residual.max(r);
                }
                Some((false, r)) => {
                    rep.gap_points += 1;
                    rep.brackets_consistent &= r == 0.0;
                }
            }
        }
        for k in 0..lay.len() {
            let len = lay.entry(k).len;
            for offset in [0.0, len] {
                let Ok((q, _)) = action.apply(g, CirclePoint { entry: k, offset }) else {
                    continue;
                };
                rep.endpoints_checked += 1;
                let lhs = b.collapse.of_entry(q.entry);
                let rhs = b.base.map(g, b.collapse.of_entry(k));
                let target = if offset == 0.0 { 0.0 } else { lay.entry(q.entry).len };
                let r = fixed_distance(lhs, rhs) + (q.offset - target).abs();
                rep.endpoint_residual = rep.endpoint_residual.max(r);
            }
        }
    }
    // Monotonicity: interior points of three random intervals, listed in
    // increasing raw order, must keep the positive orientation under h.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lay.len();
    if n >= 3 {
        for _ in 0..samples {
            let mut t: Vec<f64> = (0..3)
                .map(|_| {
                    let e = lay.entry(rng.gen_range(0..n));
                    e.lo + rng.gen_range(0.25..0.75) * (e.hi - e.lo)
                })
                .collect();
            t.sort_by(f64::total_cmp);
            let h: Vec<Fixed256> = t
                .iter()
                .filter_map(|&xi| match b.collapse.eval(action, xi) {
                    Collapse::Exact(v) => Some(v),
                    Collapse::Bracket { .. } => None,
                })
                .collect();
            if h.len() < 3 || h[0] == h[1] || h[1] == h[2] || h[0] == h[2] {
                continue;
            }
            rep.monotonicity_samples += 1;
            if Fixed256::orientation(h[0], h[1], h[2]) != 1 {
                rep.monotonicity_violations += 1;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationNumberReport {
    pub generator: String,
    pub budget: usize,
    pub start: f64,
    pub wraps: u64,
    pub estimate: f64,
    /// `|estimate − rotation number| < error_bound` for a circle
    /// homeomorphism.
    pub error_bound: f64,
}

/// Averages lifted displacements of `ρ̂(g)` along the orbit of the left
/// endpoint of `J_{x₀}`, where `x₀` is the first basepoint.
pub fn rotation_number(action: &RealizedAction, g: GenId, budget: usize) -> Result<RotationNumberReport> {
    if budget == 0 {
        return Err(Error::ParameterOutOfRange("iterate budget must be positive".into()));
    }
    let lay = action.layout();
    let x0 = action.graph().basepoints()[0];
    let k0 = lay
        .entry_of(x0)
        .ok_or_else(|| Error::MissingWeight(action.graph().point(x0).to_string()))?;
    let mut p = CirclePoint { entry: k0, offset: 0.0 };
    let start = lay.raw(p);
    let mut prev = start;
    let mut wraps = 0u64;
    for _ in 0..budget {
        let (q, _) = action
            .apply(g, p)
            .map_err(|_| Error::BudgetExceedsTruncation { budget })?;
        let xi = lay.raw(q);
        if xi < prev {
            wraps += 1;
        }
        prev = xi;
        p = q;
    }
    let total = (prev - start) + wraps as f64;
    Ok(RotationNumberReport {
        generator: action.graph().generators().label(g).to_string(),
        budget,
        start,
        wraps,
        estimate: total / budget as f64,
        error_bound: 1.0 / budget as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WanderingReport {
    pub generator: String,
    pub start: String,
    pub budget: usize,
    pub iterates: usize,
    /// Smallest `k ≥ 1` with `gᵏx₀ = x₀`, if reached within the budget.
    pub period: Option<usize>,
    /// `ρ̂(gᵏ)` maps the endpoints of `J_{x₀}` onto those of `J_{gᵏx₀}`.
    pub endpoints_exact: bool,
    pub disjoint: bool,
    pub total_length: f64,
}

impl WanderingReport {
    pub fn wandering(&self) -> bool {
        self.period.is_none() && self.disjoint && self.endpoints_exact && self.total_length < 1.0
    }
}

/// Follows `J_{gᵏx₀}` for `k ≤ budget` and checks that the images of
/// `J_{x₀}` are pairwise disjoint with total length below 1.
pub fn wandering_check(action: &RealizedAction, g: GenId, x0: usize, budget: usize) -> Result<WanderingReport> {
    let lay = action.layout();
    let k0 = lay
        .entry_of(x0)
        .ok_or_else(|| Error::MissingWeight(action.graph().point(x0).to_string()))?;
    let mut entries = vec![k0];
    let mut lo = CirclePoint { entry: k0, offset: 0.0 };
    let mut hi = CirclePoint {
        entry: k0,
        offset: lay.entry(k0).len,
    };
    let mut endpoints_exact = true;
    let mut period = None;
    for k in 1..=budget {
        let miss = |_| Error::BudgetExceedsTruncation { budget };
        let (a, _) = action.apply(g, lo).map_err(miss)?;
        let (b, _) = action.apply(g, hi).map_err(miss)?;
        endpoints_exact &= a.entry == b.entry && a.offset == 0.0 && b.offset == lay.entry(b.entry).len;
        if a.entry == k0 {
            period = Some(k);
            break;
        }
        entries.push(a.entry);
        lo = a;
        hi = b;
    }
    let mut spans: Vec<(f64, f64)> = entries
        .par_iter()
        .map(|&k| (lay.entry(k).lo, lay.entry(k).hi))
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let disjoint = spans.windows(2).all(|w| w[0].1 <= w[1].0);
    let mut total = CompensatedSum::new();
    for &k in &entries {
        total.add(lay.entry(k).len);
    }
    Ok(WanderingReport {
        generator: action.graph().generators().label(g).to_string(),
        start: action.graph().point(x0).to_string(),
        budget,
        iterates: entries.len() - 1,
        period,
        endpoints_exact,
        disjoint,
        total_length: total.value(),
    })
}

/// Pipeline settings for a rotation blow-up reaching `budget` iterates from
/// the basepoint.
pub fn denjoy_config(angle: Angle, budget: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::preset("rotation");
    cfg.action = crate::orbits::ActionSpec::with_params(
        "rotation",
        serde_json::json!({ "angle": match angle {
            Angle::Golden => "golden".to_string(),
            Angle::Rational { p, q } => format!("{p}/{q}"),
        }}),
    );
    cfg.radius = budget + 1;
    cfg
}

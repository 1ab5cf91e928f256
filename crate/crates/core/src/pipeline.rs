//! End-to-end driver: orbit graph → length schedule → weighted metric →
//! dominating growth → moderate function → interval layout → realised action.

use crate::error::{Error, Result};
use crate::growth::{dominating_f, subexp_diagnostic, GrowthDiagnostic, GrowthProfile, RegularizedGrowth};
use crate::metric::{schedule_lengths, Schedule, Slack, WeightedMetric};
use crate::moderate::{build_nu, delta_for_epsilon, ModerateFunction};
use crate::orbits::{
    build_action, order_preservation_report, ActionSpec, GroupEnumeration, OrbitGraph, OrderReport, Point, SharedAction,
};
use crate::realize::{layout, RealizedAction};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::sync::Arc;

pub const CONFIG_VERSION: u32 = 1;

fn current_version() -> u32 {
    CONFIG_VERSION
}

/// Full pipeline configuration, serialised as versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "current_version")]
    pub version: u32,
    pub action: ActionSpec,
    /// Orbit basepoints; the action's default seed when absent.
    #[serde(default)]
    pub seeds: Option<Vec<Value>>,
    /// Word radius of the orbit truncation.
    pub radius: usize,
    /// Horizon for the length schedule's growth measurements.
    pub horizon: usize,
    pub slack: Slack,
    /// State budget for schedule growth measurements.
    pub budget: usize,
    #[serde(default)]
    pub max_states: Option<usize>,
    pub epsilon: f64,
    /// Flattening constant; derived from `epsilon` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub modulus: Option<String>,
    /// Raw grid size for sweeps over the circle.
    pub grid: usize,
    /// Sample count for randomized checks.
    pub samples: usize,
    pub seed: u64,
}

impl PipelineConfig {
    /// Defaults tuned per built-in family so that the full pipeline fits in
    /// a few seconds.
    pub fn preset(family: &str) -> Self {
        let (spec, radius, horizon, slack) = match family {
            "z" => (ActionSpec::family("z"), 200, 64, Slack::Harmonic),
            "z2" => (ActionSpec::family("z2"), 200, 40, Slack::Constant(1.0)),
            "heisenberg" => (ActionSpec::family("heisenberg"), 30, 24, Slack::Constant(1.0)),
            "heisenberg-center" => (
                ActionSpec::with_params("heisenberg", serde_json::json!({"center": true})),
                12,
                16,
                Slack::Constant(2.0),
            ),
            "rotation" => (ActionSpec::family("rotation"), 200, 64, Slack::Harmonic),
            "free-abelian" => (ActionSpec::family("free-abelian"), 12, 24, Slack::Constant(1.0)),
            "grigorchuk" => (ActionSpec::family("grigorchuk"), 24, 24, Slack::Constant(1.0)),
            other => (ActionSpec::family(other), 16, 24, Slack::Harmonic),
        };
        PipelineConfig {
            version: CONFIG_VERSION,
            action: spec,
            seeds: None,
            radius,
            horizon,
            slack,
            budget: 400_000,
            max_states: Some(2_000_000),
            epsilon: 0.1,
            delta: None,
            modulus: None,
            grid: 1000,
            samples: 10_000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delta = {d} must be positive")));
            }
        }
        if let Slack::Constant(s) = self.slack {
            if !(s > 0.0) {
                return Err(Error::Config(format!("constant slack {s} must be positive")));
            }
        }
        if self.grid == 0 || self.budget == 0 {
            return Err(Error::Config("grid and budget must be positive".into()));
        }
        Ok(())
    }

    pub fn flatten_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| delta_for_epsilon(self.epsilon))
    }
}

/// The orbit truncation.
#[derive(Clone)]
pub struct GraphStage {
    pub action: SharedAction,
    pub seeds: Vec<Point>,
    pub graph: Arc<OrbitGraph>,
}

pub fn build_graph(cfg: &PipelineConfig) -> Result<GraphStage> {
    cfg.validate()?;
    build_graph_with(cfg, build_action(&cfg.action)?)
}

/// Like [`build_graph`] for an action constructed in code; `cfg.action` is
/// ignored.
pub fn build_graph_with(cfg: &PipelineConfig, action: SharedAction) -> Result<GraphStage> {
    cfg.validate()?;
    let seeds = match &cfg.seeds {
        Some(vs) => vs.iter().map(Point::from_json).collect::<Result<Vec<_>>>()?,
        None => vec![action.seed()],
    };
    let graph = OrbitGraph::build(action.clone(), &seeds, cfg.radius, cfg.max_states)?;
    Ok(GraphStage {
        action,
        seeds,
        graph: Arc::new(graph),
    })
}

/// Ball growth of the first orbit in the word metric, with its diagnostic.
pub fn word_growth(stage: &GraphStage) -> Result<(GrowthProfile, GrowthDiagnostic)> {
    let x0 = stage.graph.basepoints()[0];
    let radius = stage.graph.certified_radius(x0).min(stage.graph.radius());
    let profile = GrowthProfile::of_balls(&stage.graph, x0, radius)?;
    let diag = subexp_diagnostic(&profile);
    Ok((profile, diag))
}

pub struct MetricStage {
    pub schedule: Schedule,
    pub metric: WeightedMetric,
}

pub fn build_metric(cfg: &PipelineConfig, stage: &GraphStage) -> Result<MetricStage> {
    let enumeration = GroupEnumeration::from_generators(stage.action.generators());
    let schedule = schedule_lengths(
        &stage.action,
        enumeration,
        &stage.seeds,
        cfg.horizon,
        cfg.slack,
        cfg.budget,
    )?;
    let metric = WeightedMetric::new(stage.graph.clone(), schedule.lengths.clone(), schedule.bridges.clone())?;
    Ok(MetricStage { schedule, metric })
}

#[derive(Debug, Clone)]
pub struct NuStage {
    /// Weighted ball sizes `|B(x₀; n)|` up to the certified radius.
    pub balls: GrowthProfile,
    pub growth: RegularizedGrowth,
    pub nu: ModerateFunction,
    /// `ν` flattened for the configured `δ`, when a flattening radius exists
    /// inside the truncation.
    pub flat: Option<ModerateFunction>,
    pub flatten_error: Option<Error>,
    pub displacement: u64,
    pub delta: f64,
}

impl NuStage {
    /// The flattened function if available, the raw one otherwise.
    pub fn best(&self) -> &ModerateFunction {
        self.flat.as_ref().unwrap_or(&self.nu)
    }
}

pub fn build_moderate(cfg: &PipelineConfig, stage: &GraphStage, m: &MetricStage) -> Result<NuStage> {
    let x0 = stage.graph.basepoints()[0];
    let field = m.metric.distances_from(x0, true);
    let horizon = if field.exit_bound == u64::MAX {
        field.dist.iter().copied().filter(|&d| d != u64::MAX).max().unwrap_or(0)
    } else {
        field.certified_radius()
    };
    let balls = GrowthProfile::from_counts(&field.ball_sizes(horizon)?, "weighted balls")?;
    let growth = dominating_f(&balls)?;
    let star = stage.action.order().is_some_and(|o| o.is_linear());
    let nu = build_nu(&m.metric, x0, &growth, star)?;
    let displacement = m.metric.lengths().max_length();
    let delta = cfg.flatten_delta();
    let (flat, flatten_error) = match nu.flatten(displacement, delta) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e)),
    };
    Ok(NuStage {
        balls,
        growth,
        nu,
        flat,
        flatten_error,
        displacement,
        delta,
    })
}

/// Refuses actions without an invariant order, or whose order is violated
/// on sampled triples.
pub fn check_order(cfg: &PipelineConfig, stage: &GraphStage) -> Result<OrderReport> {
    let order = stage
        .action
        .order()
        .ok_or_else(|| Error::CertificateRefused(format!("{} carries no invariant order", stage.action.name())))?;
    let report = order_preservation_report(&stage.graph, &order, cfg.samples.min(2000), cfg.seed)?;
    if report.violations > 0 {
        return Err(Error::CertificateRefused(format!(
            "order not preserved: {}",
            report.first_violation.clone().unwrap_or_default()
        )));
    }
    Ok(report)
}

pub fn realize_with(stage: &GraphStage, nu: &ModerateFunction) -> Result<RealizedAction> {
    let order = stage
        .action
        .order()
        .ok_or_else(|| Error::CertificateRefused(format!("{} carries no invariant order", stage.action.name())))?;
    let lay = layout(&order, nu, &stage.graph)?;
    Ok(RealizedAction::new(stage.graph.clone(), lay, nu.clone()))
}

/// Every stage of one run.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub graph: GraphStage,
    pub metric: MetricStage,
    pub nu: NuStage,
    pub order: OrderReport,
    pub action: RealizedAction,
}

impl Pipeline {
    pub fn run(cfg: &PipelineConfig) -> Result<Pipeline> {
        Self::from_graph(cfg, build_graph(cfg)?)
    }

    pub fn run_with(cfg: &PipelineConfig, action: SharedAction) -> Result<Pipeline> {
        Self::from_graph(cfg, build_graph_with(cfg, action)?)
    }

    fn from_graph(cfg: &PipelineConfig, graph: GraphStage) -> Result<Pipeline> {
        let order = check_order(cfg, &graph)?;
        let metric = build_metric(cfg, &graph)?;
        let nu = build_moderate(cfg, &graph, &metric)?;
        let action = realize_with(&graph, nu.best())?;
        Ok(Pipeline {
            config: cfg.clone(),
            graph,
            metric,
            nu,
            order,
            action,
        })
    }

    /// Non-identity generators of the action.
    pub fn generators(&self) -> Vec<usize> {
        self.graph.action.generators().non_identity().collect()
    }
}

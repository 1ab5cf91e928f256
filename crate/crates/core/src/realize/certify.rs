use super::action::RealizedAction;
use super::family::dphi_offset;
use crate::error::{Error, Result};
use crate::orbits::{GenId, Word};
use rayon::prelude::*;
use serde::Serialize;

/// Per-generator part of an ε-certificate.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorDeviation {
    pub generator: String,
    /// `max |ν(sx)²/ν(x)² − 1|` over evaluable intervals; the arctan model
    /// attains it at the centre of `J_x`.
    pub analytic_bound: f64,
    /// `max |Dρ(s) − 1|` over the interval centres.
    pub center_sup: f64,
    /// `(grid size, max |Dρ(s)(ξ) − 1|)` per refinement level.
    pub grid_sups: Vec<(usize, f64)>,
    pub evaluable_intervals: usize,
    pub skipped_intervals: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonCertificate {
    pub epsilon: f64,
    pub delta: f64,
    pub delta_condition: f64,
    pub truncation_radius: usize,
    pub intervals: usize,
    pub generators: Vec<GeneratorDeviation>,
    pub sup_deviation: f64,
    pub certified: bool,
}

/// Certifies `sup |Dρ(s)(ξ) − 1| < ε` for the given generators.
///
/// The sup is taken over every interval centre and over refining raw grids;
/// uncovered slack contributes `0` (derivative `1`). The function must have
/// been flattened with some `δ` satisfying `δ(2 + δ) ≤ ε`.
pub fn epsilon_certify(
    action: &RealizedAction,
    gens: &[GenId],
    epsilon: f64,
    grids: &[usize],
) -> Result<EpsilonCertificate> {
    let delta = action
        .nu()
        .flatten_delta
        .ok_or_else(|| Error::FlatteningAbsent("ν carries no δ".into()))?;
    let condition = delta * (2.0 + delta);
    if condition > epsilon {
        return Err(Error::FlatteningAbsent(format!(
            "δ = {delta} gives δ(2+δ) = {condition} > ε = {epsilon}"
        )));
    }
    let layout = action.layout();
    let labels = action.graph().generators();
    let mut out = Vec::with_capacity(gens.len());
    for &g in gens {
        let mut dev = GeneratorDeviation {
            generator: labels.label(g).to_string(),
            analytic_bound: 0.0,
            center_sup: 0.0,
            grid_sups: Vec::new(),
            evaluable_intervals: 0,
            skipped_intervals: 0,
        };
        for k in 0..layout.len() {
            let Ok(j) = action.entry_image(g, k) else {
                dev.skipped_intervals += 1;
                continue;
            };
            dev.evaluable_intervals += 1;
            let a = layout.entry(k);
            let b = layout.entry(j);
            let bound = (2.0 * (b.log_len - a.log_len)).exp_m1().abs();
            dev.analytic_bound = dev.analytic_bound.max(bound);
            let center = (dphi_offset(a.len, b.len, 0.5 * a.len) - 1.0).abs();
            dev.center_sup = dev.center_sup.max(center);
        }
        let word = Word::single(g);
        for &n in grids {
            let sup = RealizedAction::grid(n)
                .filter_map(|xi| action.derivative(&word, xi).ok())
                .map(|d| (d.value - 1.0).abs())
                .reduce(|| 0.0, f64::max);
            dev.grid_sups.push((n, sup));
        }
        out.push(dev);
    }
    let sup = out
        .iter()
        .flat_map(|d| std::iter::once(d.center_sup).chain(d.grid_sups.iter().map(|g| g.1)))
        .fold(0.0, f64::max);
    Ok(EpsilonCertificate {
        epsilon,
        delta,
        delta_condition: condition,
        truncation_radius: action.graph().radius(),
        intervals: layout.len(),
        generators: out,
        sup_deviation: sup,
        certified: sup < epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{realize_with, Pipeline, PipelineConfig};

    #[test]
    fn z_certificate_at_one_tenth() {
        let p = Pipeline::run(&PipelineConfig::preset("z")).unwrap();
        let gens = p.generators();
        let cert = epsilon_certify(&p.action, &gens, 0.1, &[1000, 10_000]).unwrap();
        assert!(cert.delta_condition <= 0.1);
        assert!(cert.certified && cert.sup_deviation < 0.1, "{cert:?}");
        for g in &cert.generators {
            // The arctan model is extremal at centres.
            assert!((g.center_sup - g.analytic_bound).abs() < 1e-9);
            assert!(g.grid_sups.iter().all(|&(_, s)| s <= g.center_sup + 1e-12));
        }
        assert!(
            (cert.sup_deviation - cert.generators[0].analytic_bound.max(cert.generators[1].analytic_bound)).abs()
                < 1e-9
        );
    }

    #[test]
    fn unflattened_is_refused() {
        let p = Pipeline::run(&PipelineConfig::preset("z")).unwrap();
        let raw = realize_with(&p.graph, &p.nu.nu).unwrap();
        assert!(matches!(
            epsilon_certify(&raw, &p.generators(), 0.1, &[100]),
            Err(Error::FlatteningAbsent(_))
        ));
        // A δ that is too large for the requested ε.
        assert!(matches!(
            epsilon_certify(&p.action, &p.generators(), 0.01, &[100]),
            Err(Error::FlatteningAbsent(_))
        ));
    }

    #[test]
    fn identity_generator_has_zero_deviation() {
        let p = Pipeline::run(&PipelineConfig::preset("z")).unwrap();
        let id = p.graph.action.generators().identity();
        let cert = epsilon_certify(&p.action, &[id], 0.1, &[1000]).unwrap();
        assert_eq!(cert.sup_deviation, 0.0);
    }
}

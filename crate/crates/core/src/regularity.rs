//! Moduli of continuity and the finite-horizon checks behind C^{1,σ}
//! realisations: summability of `|Sⁿx|/F(n)`, the ratio condition
//! `|F(n+1)/F(n) − 1| / σ(F(n)⁻¹)`, the constant `M_g` and grid estimates of
//! C^σ-norms of derivatives.
//!
//! Every σ is evaluated in the log domain, as `log σ(e^{−L})`, because
//! `F(n)⁻¹` underflows for stretched-exponential `F`.

use crate::error::{Error, Result};
use crate::growth::RegularizedGrowth;
use crate::moderate::{ModerateFunction, TailBound};
use crate::numeric::{circle_distance, compensated_sum, ls_slope, CompensatedSum};
use crate::orbits::{OrbitGraph, Word};
use crate::realize::RealizedAction;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Modulus {
    /// `σ(t) = t^α`, `0 < α ≤ 1`.
    Holder { alpha: f64 },
    /// `σ(t) = |log t|^θ` with `θ < 0` for `t ≤ e^θ`, continued linearly
    /// above `e^θ` (where `σ(t)/t` would stop decreasing).
    LogPower { theta: f64 },
    /// Log-log interpolation of `(t, σ(t))` samples; power-law below the
    /// first sample and linear above the last.
    Table { log_t: Vec<f64>, log_sigma: Vec<f64> },
}

impl Modulus {
    pub fn holder(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "Hölder exponent {alpha} not in (0, 1]"
            )));
        }
        Ok(Modulus::Holder { alpha })
    }

    pub fn log_power(theta: f64) -> Result<Self> {
        if !(theta < 0.0 && theta.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "log-power exponent {theta} must be negative"
            )));
        }
        Ok(Modulus::LogPower { theta })
    }

    /// From samples `(t, σ(t))` with `t` increasing in `(0, ∞)`.
    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::ParameterOutOfRange("a modulus table needs two points".into()));
        }
        let mut log_t = Vec::with_capacity(points.len());
        let mut log_sigma = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::ParameterOutOfRange(
                    "modulus table must be strictly increasing in t and σ".into(),
                ));
            }
        }
        for &(t, s) in points {
            if !(t > 0.0 && s > 0.0) {
                return Err(Error::ParameterOutOfRange(
                    "modulus table values must be positive".into(),
                ));
            }
            log_t.push(t.ln());
            log_sigma.push(s.ln());
        }
        Ok(Modulus::Table { log_t, log_sigma })
    }

    /// Parses `holder:A`, `log-power:THETA` or `log:ALPHA` (the latter is
    /// `|log s|^{1 − 1/α}`).
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, param) = spec
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("modulus `{spec}` is not KIND:PARAM")))?;
        let x: f64 = param
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad modulus parameter `{param}`")))?;
        match kind.trim() {
            "holder" => Modulus::holder(x),
            "log-power" => Modulus::log_power(x),
            "log" => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::ParameterOutOfRange(format!("α = {x} not in (0, 1)")));
                }
                Modulus::log_power(1.0 - 1.0 / x)
            }
            other => Err(Error::Config(format!("unknown modulus kind `{other}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Modulus::Holder { alpha } => format!("holder:{alpha}"),
            Modulus::LogPower { theta } => format!("log-power:{theta}"),
            Modulus::Table { log_t, .. } => format!("table:{}", log_t.len()),
        }
    }

    /// Whether `σ(t)/t` is decreasing by construction.
    pub fn decreasing_ratio(&self) -> bool {
        match self {
            Modulus::Holder { .. } | Modulus::LogPower { .. } => true,
            Modulus::Table { log_t, log_sigma } => log_t
                .windows(2)
                .zip(log_sigma.windows(2))
                .all(|(t, s)| s[1] - s[0] <= t[1] - t[0]),
        }
    }

    /// `log σ(e^{−L})`.
    pub fn log_sigma_at_log(&self, l: f64) -> f64 {
        match self {
            Modulus::Holder { alpha } => -alpha * l,
            Modulus::LogPower { theta } => {
                // Linear continuation above t₀ = e^θ, i.e. for L < −θ.
                let l0 = -theta;
                if l >= l0 {
                    theta * l.ln()
                } else {
                    theta * l0.ln() + (l0 - l)
                }
            }
            Modulus::Table { log_t, log_sigma } => {
                let x = -l;
                let n = log_t.len();
                if x <= log_t[0] {
                    let slope = (log_sigma[1] - log_sigma[0]) / (log_t[1] - log_t[0]);
                    return log_sigma[0] + slope * (x - log_t[0]);
                }
                if x >= log_t[n - 1] {
                    return log_sigma[n - 1] + (x - log_t[n - 1]);
                }
                let k = log_t.partition_point(|&v| v <= x) - 1;
                let w = (x - log_t[k]) / (log_t[k + 1] - log_t[k]);
                log_sigma[k] + w * (log_sigma[k + 1] - log_sigma[k])
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.log_sigma_at_log(-t.ln()).exp()
    }

    /// Strict monotonicity of σ and, when flagged, monotonicity of `σ(t)/t`
    /// on a log grid of `points` values of `t ∈ [e^{−700}, 1]`.
    pub fn check(&self, points: usize) -> ModulusCheck {
        let ls: Vec<f64> = (0..points).map(|i| 700.0 * i as f64 / (points - 1) as f64).collect();
        let vals: Vec<f64> = ls.iter().map(|&l| self.log_sigma_at_log(l)).collect();
        let strictly_increasing = vals.windows(2).all(|w| w[1] < w[0]);
        let ratio_decreasing = vals
            .windows(2)
            .zip(ls.windows(2))
            .all(|(v, l)| v[1] + l[1] >= v[0] + l[0] - 1e-12 * (v[0] + l[0]).abs().max(1.0));
        ModulusCheck {
            points,
            strictly_increasing,
            ratio_flagged: self.decreasing_ratio(),
            ratio_decreasing,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusCheck {
    pub points: usize,
    pub strictly_increasing: bool,
    pub ratio_flagged: bool,
    pub ratio_decreasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converging,
    Diverging,
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Least-squares slope of `ys` against `log n` over `n ∈ [lo, hi]`, sampled
/// at up to 400 log-spaced indices.
fn log_log_slope(lo: usize, hi: usize, y: impl Fn(usize) -> f64) -> f64 {
    let lo = lo.max(1);
    if hi <= lo {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..400)
        .map(|i| {
            let t = i as f64 / 399.0;
            ((lo as f64).ln() * (1.0 - t) + (hi as f64).ln() * t).exp().round() as usize
        })
        .collect();
    idx.dedup();
    let (xs, ys): (Vec<f64>, Vec<f64>) = idx
        .into_iter()
        .map(|n| ((n as f64).ln(), y(n)))
        .filter(|p| p.1.is_finite())
        .unzip();
    ls_slope(&xs, &ys)
}

/// Whether `f` counts balls or spheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Ball,
    Sphere,
}

/// `|∂B(n)| = |B(n)| − |B(n−1)|`.
pub fn spheres_from_balls(balls: &[f64]) -> Vec<f64> {
    (0..balls.len())
        .map(|n| if n == 0 { balls[0] } else { balls[n] - balls[n - 1] })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Condition2Report {
    pub mode: CountMode,
    pub horizon: usize,
    /// `Σ_{1 ≤ n ≤ N} f(n)/F(n)`.
    pub partial_sum: f64,
    /// Partial sums at `N = 10, 100, …` within the horizon.
    pub checkpoints: Vec<(usize, f64)>,
    /// `Σ_{N/10 < n ≤ N} f(n)/F(n)`.
    pub last_decade_increment: f64,
    /// `p` with `f(n)/F(n) ≈ n^{−p}` over the last decade.
    pub decay_exponent: f64,
    pub verdict: Verdict,
}

/// Decay exponents above this read as converging.
pub const CONVERGING_EXPONENT: f64 = 1.05;
/// Decay exponents at or below this read as diverging.
pub const DIVERGING_EXPONENT: f64 = 1.001;

/// Summability of `Σ_n f(n)/F(n)` from `n = 1` to the common horizon.
pub fn check_condition2(f: &[f64], big_f: &RegularizedGrowth, mode: CountMode) -> Condition2Report {
    let h = (f.len().saturating_sub(1)).min(big_f.horizon());
    let log_term = |n: usize| f[n].ln() - big_f.log_value(n);
    let mut sum = CompensatedSum::new();
    let mut checkpoints = Vec::new();
    let mut at_tenth = 0.0;
    let mut next = 10;
    for n in 1..=h {
        sum.add(log_term(n).exp());
        if n == h / 10 {
            at_tenth = sum.value();
        }
        if n == next {
            checkpoints.push((n, sum.value()));
            next *= 10;
        }
    }
    let partial_sum = sum.value();
    let decay_exponent = -log_log_slope(h / 10, h, log_term);
    let verdict = if h < 10 {
        Verdict::Inconclusive
    } else if decay_exponent > CONVERGING_EXPONENT {
        Verdict::Converging
    } else if decay_exponent <= DIVERGING_EXPONENT {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    Condition2Report {
        mode,
        horizon: h,
        partial_sum,
        checkpoints,
        last_decade_increment: partial_sum - at_tenth,
        decay_exponent,
        verdict,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Condition3Report {
    pub modulus: String,
    pub horizon: usize,
    /// `log u(n)` at `n = 10, 100, …`.
    pub checkpoints: Vec<(usize, f64)>,
    pub max_log_u: f64,
    pub argmax: usize,
    /// `u(N)` at the last computed `N`.
    pub last_u: f64,
    /// Slope of `log u` against `log n` over the last decade.
    pub last_decade_slope: f64,
    pub verdict: Verdict,
}

pub const BOUNDED_SLOPE: f64 = 0.01;
pub const UNBOUNDED_SLOPE: f64 = 0.05;

/// `log u(n)` with `u(n) = |F(n+1)/F(n) − 1| / σ(F(n)⁻¹)`.
pub fn condition3_log_u(big_f: &RegularizedGrowth, sigma: &Modulus, n: usize) -> Result<f64> {
    let l = big_f.log_value(n);
    let ls = sigma.log_sigma_at_log(l);
    if !ls.is_finite() {
        return Err(Error::ModulusUnderflow(l));
    }
    let step = (big_f.log_value(n + 1) - l).exp_m1().abs();
    Ok(step.ln() - ls)
}

/// The ratio condition on `n ∈ [1, N)`, with a bounded/unbounded verdict from
/// the log-log slope of `u` over the last decade.
pub fn check_condition3(big_f: &RegularizedGrowth, sigma: &Modulus) -> Result<Condition3Report> {
    let h = big_f.horizon();
    if h < 2 {
        return Err(Error::ParameterOutOfRange(
            "condition (3) needs a horizon of at least 2".into(),
        ));
    }
    let logs: Vec<f64> = (0..h)
        .map(|n| {
            if n == 0 {
                Ok(f64::NEG_INFINITY)
            } else {
                condition3_log_u(big_f, sigma, n)
            }
        })
        .collect::<Result<_>>()?;
    let (argmax, max_log_u) =
        logs.iter().enumerate().skip(1).fold(
            (1, f64::NEG_INFINITY),
            |acc, (n, &v)| if v > acc.1 { (n, v) } else { acc },
        );
    let mut checkpoints = Vec::new();
    let mut next = 10;
    while next < h {
        checkpoints.push((next, logs[next]));
        next *= 10;
    }
    let slope = log_log_slope((h - 1) / 10, h - 1, |n| logs[n]);
    let verdict = if h < 20 {
        Verdict::Inconclusive
    } else if slope <= BOUNDED_SLOPE {
        Verdict::Bounded
    } else if slope >= UNBOUNDED_SLOPE {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    };
    Ok(Condition3Report {
        modulus: sigma.label(),
        horizon: h,
        checkpoints,
        max_log_u,
        argmax,
        last_u: logs[h - 1].exp(),
        last_decade_slope: slope,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MgReport {
    pub word: String,
    pub modulus: String,
    pub horizon: u64,
    /// `max |ν(gx)/ν(x) − 1| / σ(ν(x))` over evaluable states.
    pub value: f64,
    pub evaluated: usize,
    /// Per-shell maxima.
    pub shells: Vec<(u64, f64)>,
    /// Slope of the log shell maxima against `log n` over the last half.
    pub trend_slope: f64,
    pub verdict: Verdict,
}

/// Finite-truncation estimate of `M_g`.
pub fn estimate_mg(nu: &ModerateFunction, graph: &OrbitGraph, sigma: &Modulus, g: &Word) -> Result<MgReport> {
    let mut per_shell = vec![f64::NAN; nu.horizon as usize + 1];
    let mut evaluated = 0;
    let mut value: f64 = 0.0;
    for &x in nu.domain() {
        let Some(y) = graph.apply_word(g, x).filter(|&y| nu.contains(y)) else {
            continue;
        };
        evaluated += 1;
        let lx = nu.log_nu(x).unwrap();
        let dev = (nu.log_nu(y).unwrap() - lx).exp_m1().abs();
        let v = dev / sigma.log_sigma_at_log(-lx).exp();
        value = value.max(v);
        let n = nu.shell(x).unwrap() as usize;
        if per_shell[n].is_nan() || v > per_shell[n] {
            per_shell[n] = v;
        }
    }
    if evaluated == 0 {
        return Err(Error::EvaluableDomainMiss(format!(
            "no state x with both x and {} x in the domain",
            g.display(graph.generators())
        )));
    }
    let shells: Vec<(u64, f64)> = per_shell
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .map(|(n, &v)| (n as u64, v))
        .collect();
    let half = nu.horizon / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = shells
        .iter()
        .filter(|&&(n, v)| n >= half.max(1) && v > 0.0)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .unzip();
    let trend_slope = ls_slope(&xs, &ys);
    let verdict = if xs.len() < 4 {
        Verdict::Inconclusive
    } else if trend_slope <= BOUNDED_SLOPE {
        Verdict::Bounded
    } else if trend_slope >= UNBOUNDED_SLOPE {
        Verdict::Unbounded
    } else {
        Verdict::Inconclusive
    };
    Ok(MgReport {
        word: g.display(graph.generators()),
        modulus: sigma.label(),
        horizon: nu.horizon,
        value,
        evaluated,
        shells,
        trend_slope,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CsigmaLevel {
    pub grid: usize,
    pub estimate: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CsigmaReport {
    pub word: String,
    pub modulus: String,
    pub levels: Vec<CsigmaLevel>,
    /// Estimate at each level divided by the previous one.
    pub ratios: Vec<f64>,
    /// Whether every ratio lies in `[1/2, 2]`.
    pub stabilized: bool,
}

/// Grid estimates of `sup |Dρ(g)(ξ) − Dρ(g)(η)| / σ(|ξ − η|)` over pairs of
/// raw grid points `k/n`, at each grid size `n`. Points in uncovered slack or
/// outside the evaluable domain are skipped and counted.
pub fn csigma_norm(action: &RealizedAction, g: &Word, sigma: &Modulus, grids: &[usize]) -> CsigmaReport {
    let mut levels = Vec::with_capacity(grids.len());
    for &n in grids {
        // Grid k/n, nested under refinement by integer factors.
        let samples: Vec<Option<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|k| k as f64 / n as f64)
            .map(|xi| match action.derivative(g, xi) {
                Ok(d) if !d.gap => Some((xi, d.value)),
                _ => None,
            })
            .collect();
        let pts: Vec<(f64, f64)> = samples.iter().flatten().copied().collect();
        let estimate = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let (xi, di) = pts[i];
                let mut best: f64 = 0.0;
                for &(eta, dj) in &pts[i + 1..] {
                    let diff = (di - dj).abs();
                    if diff == 0.0 {
                        continue;
                    }
                    best = best.max(diff / sigma.eval(circle_distance(xi, eta)));
                }
                best
            })
            .reduce(|| 0.0, f64::max);
        levels.push(CsigmaLevel {
            grid: n,
            estimate,
            evaluated: pts.len(),
            skipped: n - pts.len(),
        });
    }
    let ratios: Vec<f64> = levels
        .windows(2)
        .map(|w| {
            if w[0].estimate == 0.0 && w[1].estimate == 0.0 {
                1.0
            } else {
                w[1].estimate / w[0].estimate
            }
        })
        .collect();
    let stabilized = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    CsigmaReport {
        word: g.display(action.graph().generators()),
        modulus: sigma.label(),
        levels,
        ratios,
        stabilized,
    }
}

/// `D φ` of the arctan family on a unit interval, as a function of the
/// offset `u ∈ [0, 1]`, for the length ratio `r`.
fn unit_derivative(r: f64, u: f64) -> f64 {
    let (s, c) = (PI * u).sin_cos();
    r * r / (s * s + r * r * c * c)
}

/// Measured analogue, for the arctan family, of the constant bounding the
/// C^σ-norm of `Dφ_J^I` by `K · ||J|/|I| − 1| / σ(|I|)` when
/// `1/2 ≤ |J|/|I| ≤ 2`: `K = sup_r Lip(Dφ on [0,1]) / |r − 1|` over a grid
/// of ratios. Valid for every σ with `σ(t)/t` decreasing.
pub fn family_constant(ratios: usize, samples: usize) -> f64 {
    (0..=ratios)
        .into_par_iter()
        .map(|i| {
            let r = 0.5 * 4f64.powf(i as f64 / ratios as f64);
            if (r - 1.0).abs() < 1e-9 {
                return 0.0;
            }
            let mut lip: f64 = 0.0;
            let h = 1.0 / samples as f64;
            let mut prev = unit_derivative(r, 0.0);
            for k in 1..=samples {
                let cur = unit_derivative(r, k as f64 * h);
                lip = lip.max((cur - prev).abs() / h);
                prev = cur;
            }
            lip / (r - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Presets

/// Slowly growing exponents for `F(n) = n^{β(n)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Beta {
    /// `β(n) = log(1 + log(1 + n))`.
    LogLog,
    /// `β(n) = n^p`, `0 < p ≤ 1/2`.
    Power { p: f64 },
}

impl Beta {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Beta::LogLog => (1.0 + (1.0 + x).ln()).ln(),
            Beta::Power { p } => x.powf(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "example", rename_all = "kebab-case")]
pub enum Preset {
    /// Polynomial orbit growth of degree `d`: `F(n) = n^c`, `c > d + 1`,
    /// paired with `t^α`.
    Polynomial { d: f64, c: f64, alpha: f64 },
    /// Unbounded polynomial degree: `F(n) = n^{β(n)}`, paired with
    /// `|log t|⁻¹`.
    SlowDegree { beta: Beta },
    /// Stretched exponential growth: `F(n) = n² exp(n^α)`, paired with
    /// `|log s|^{1 − 1/α}`.
    StretchedExponential { alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct PresetF {
    pub preset: Preset,
    pub growth: RegularizedGrowth,
    pub modulus: Modulus,
}

/// Tabulates a preset `F` in the log domain on `0..=horizon`.
pub fn preset_f(preset: Preset, horizon: usize) -> Result<PresetF> {
    let (growth, modulus) = match preset {
        Preset::Polynomial { d, c, alpha } => {
            if !(d >= 0.0 && c > d + 1.0) {
                return Err(Error::ParameterOutOfRange(format!(
                    "need c > d + 1, got c = {c}, d = {d}"
                )));
            }
            let m = Modulus::holder(alpha)?;
            (RegularizedGrowth::from_fn(horizon, |n| c * (n.max(1) as f64).ln()), m)
        }
        Preset::SlowDegree { beta } => {
            if let Beta::Power { p } = beta {
                if !(p > 0.0 && p <= 0.5) {
                    return Err(Error::ParameterOutOfRange(format!("β = n^{p} needs 0 < p ≤ 1/2")));
                }
            }
            (
                RegularizedGrowth::from_fn(horizon, |n| {
                    let x = n.max(1) as f64;
                    beta.eval(x) * x.ln()
                }),
                Modulus::log_power(-1.0)?,
            )
        }
        Preset::StretchedExponential { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::ParameterOutOfRange(format!("α = {alpha} not in (0, 1)")));
            }
            (
                RegularizedGrowth::from_fn(horizon, |n| {
                    let x = n.max(1) as f64;
                    2.0 * x.ln() + x.powf(alpha)
                }),
                Modulus::log_power(1.0 - 1.0 / alpha)?,
            )
        }
    };
    Ok(PresetF {
        preset,
        growth,
        modulus,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlowDegreeScan {
    pub horizon: usize,
    /// `β` non-decreasing, concave and `≤ √x` on the grid.
    pub beta_admissible: bool,
    /// `F(N+1)/F(N)` at the horizon.
    pub final_ratio: f64,
    /// Whether `F(n+1)/F(n) − 1` is non-increasing over the last half.
    pub ratio_tends_to_one: bool,
    /// `(1 + 1/n)^{β(n)} ≤ 1 + 2β(n)/n` for every scanned `n`.
    pub inequality_holds: bool,
    pub first_failure: Option<usize>,
}

/// Scans the `n^{β(n)}` preset on `1..=horizon`.
pub fn slow_degree_scan(beta: Beta, horizon: usize) -> SlowDegreeScan {
    let mut admissible = true;
    let mut first_failure = None;
    for n in 1..=horizon {
        let x = n as f64;
        let b = beta.eval(x);
        if b > x.sqrt() + 1e-12 {
            admissible = false;
        }
        if n > 1 {
            let (b0, b2) = (beta.eval(x - 1.0), beta.eval(x + 1.0));
            if b < b0 - 1e-15 || b2 - b > b - b0 + 1e-12 {
                admissible = false;
            }
        }
        let lhs = (b * (1.0 / x).ln_1p()).exp_m1();
        if lhs > 2.0 * b / x && first_failure.is_none() {
            first_failure = Some(n);
        }
    }
    let log_f = |n: usize| beta.eval(n as f64) * (n as f64).ln();
    let step = |n: usize| (log_f(n + 1) - log_f(n)).exp_m1();
    let half = horizon / 2;
    let ratio_tends_to_one = (half.max(2)..horizon).all(|n| step(n) <= step(n - 1) * (1.0 + 1e-9));
    SlowDegreeScan {
        horizon,
        beta_admissible: admissible,
        final_ratio: step(horizon) + 1.0,
        ratio_tends_to_one,
        inequality_holds: first_failure.is_none(),
        first_failure,
    }
}

/// Shell function `ν(x) = F(n(x))⁻¹` in the word metric with an explicit
/// tail bound, for a preset `F` that need not dominate `n²|B(n)|`.
pub fn shell_nu(
    graph: &OrbitGraph,
    x0: usize,
    growth: &RegularizedGrowth,
    star: bool,
    tail: TailBound,
) -> ModerateFunction {
    let dist = graph.distances_from(x0);
    let h = graph.certified_radius(x0).min(growth.horizon());
    let entries: Vec<(usize, u64, f64)> = dist
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != u32::MAX && (d as usize) <= h)
        .map(|(x, &d)| (x, d as u64, -growth.log_value(d as usize)))
        .collect();
    let mut nu = ModerateFunction::from_log_weights(graph.len(), &entries, star.then(|| -growth.log_value(0)), tail);
    nu.growth = Some(growth.clone());
    nu
}

/// `Σ_{n > N} f(n)/F(n)` bounded by `C Σ_{n > N} n^{−p}` for terms
/// `≤ C n^{−p}`, `p > 1`.
pub fn power_tail(constant: f64, p: f64, horizon: usize) -> f64 {
    // Integral comparison: Σ_{n>N} n^{−p} ≤ N^{1−p}/(p−1).
    let n = horizon.max(1) as f64;
    constant * n.powf(1.0 - p) / (p - 1.0)
}

/// `Σ_{1 ≤ n ≤ N} f(n)/F(n)` without the report.
pub fn partial_sum(f: &[f64], big_f: &RegularizedGrowth) -> f64 {
    let h = (f.len().saturating_sub(1)).min(big_f.horizon());
    compensated_sum((1..=h).map(|n| (f[n].ln() - big_f.log_value(n)).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{build_graph, PipelineConfig};

    const ZETA3: f64 = 1.202_056_903_159_594_3;

    fn quartic(h: usize) -> RegularizedGrowth {
        RegularizedGrowth::from_fn(h, |n| 4.0 * (n.max(1) as f64).ln())
    }

    #[test]
    fn condition2_on_integer_balls() {
        let balls: Vec<f64> = (0..=10_000).map(|n| (2 * n + 1) as f64).collect();
        let rep = check_condition2(&balls, &quartic(10_000), CountMode::Ball);
        // Σ (2n+1)/n⁴ = 2ζ(3) + ζ(4) minus a tail below 1e-8.
        let oracle = 2.0 * ZETA3 + PI.powi(4) / 90.0;
        assert!((rep.partial_sum - oracle).abs() < 1e-7, "{}", rep.partial_sum);
        assert!((rep.decay_exponent - 3.0).abs() < 0.01);
        assert_eq!(rep.verdict, Verdict::Converging);
        assert_eq!(rep.checkpoints.len(), 4);
        let spheres = spheres_from_balls(&balls);
        assert_eq!(spheres[0], 1.0);
        assert!(spheres[1..].iter().all(|&s| s == 2.0));
        let rep = check_condition2(&spheres, &quartic(10_000), CountMode::Sphere);
        assert!((rep.partial_sum - 2.0 * PI.powi(4) / 90.0).abs() < 1e-9);
    }

    #[test]
    fn condition2_harmonic_diverges() {
        let balls: Vec<f64> = (0..=10_000).map(|n| (2 * n + 1) as f64).collect();
        let f = RegularizedGrowth::from_fn(10_000, |n| 2.0 * (n.max(1) as f64).ln());
        let rep = check_condition2(&balls, &f, CountMode::Ball);
        assert_eq!(rep.verdict, Verdict::Diverging);
        // The last decade adds about 2 ln 10.
        assert!((rep.last_decade_increment - 2.0 * 10f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn condition3_polynomial_matches_asymptotic() {
        let p = preset_f(
            Preset::Polynomial {
                d: 2.0,
                c: 4.0,
                alpha: 0.2,
            },
            100_000,
        )
        .unwrap();
        let rep = check_condition3(&p.growth, &p.modulus).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
        for n in [1_000usize, 50_000] {
            let u = condition3_log_u(&p.growth, &p.modulus, n).unwrap().exp();
            let oracle = 4.0 * (n as f64).powf(-0.2);
            assert!((u / oracle - 1.0).abs() < 3.0 / n as f64, "n = {n}: {u} vs {oracle}");
        }
        assert!((rep.last_decade_slope + 0.2).abs() < 1e-3);
    }

    #[test]
    fn condition3_stretched_exponential_tends_to_alpha() {
        let p = preset_f(Preset::StretchedExponential { alpha: 0.5 }, 1_000_000).unwrap();
        let rep = check_condition3(&p.growth, &p.modulus).unwrap();
        assert_eq!(rep.verdict, Verdict::Bounded);
        // u(n) = 1/2 + (ln n + 2)/√n + O(ln n / n).
        let n = 999_999f64;
        let oracle = 0.5 + (n.ln() + 2.0) / n.sqrt();
        assert!((rep.last_u - oracle).abs() < 1e-3, "{} vs {oracle}", rep.last_u);
    }

    #[test]
    fn condition3_detects_unbounded_ratios() {
        let exp = RegularizedGrowth::from_fn(2000, |n| n as f64 * 2f64.ln());
        let rep = check_condition3(&exp, &Modulus::holder(0.5).unwrap()).unwrap();
        assert_eq!(rep.verdict, Verdict::Unbounded);
        let cubic = RegularizedGrowth::from_fn(100_000, |n| 3.0 * (n.max(1) as f64).ln());
        let rep = check_condition3(&cubic, &Modulus::holder(0.5).unwrap()).unwrap();
        assert_eq!(rep.verdict, Verdict::Unbounded);
        assert!((rep.last_decade_slope - 0.5).abs() < 1e-3);
    }

    #[test]
    fn preset_values() {
        let p = preset_f(
            Preset::Polynomial {
                d: 1.0,
                c: 4.0,
                alpha: 0.2,
            },
            20,
        )
        .unwrap();
        assert!((p.growth.log_value(10) - 4.0 * 10f64.ln()).abs() < 1e-12);
        let p = preset_f(Preset::StretchedExponential { alpha: 0.5 }, 200).unwrap();
        assert!((p.growth.log_value(100) - (2.0 * 100f64.ln() + 10.0)).abs() < 1e-12);
        assert_eq!(p.modulus, Modulus::LogPower { theta: -1.0 });
        assert!(preset_f(
            Preset::Polynomial {
                d: 2.0,
                c: 3.0,
                alpha: 0.2
            },
            10
        )
        .is_err());
        assert!(preset_f(Preset::StretchedExponential { alpha: 1.0 }, 10).is_err());
        assert!(preset_f(
            Preset::SlowDegree {
                beta: Beta::Power { p: 0.6 }
            },
            10
        )
        .is_err());
    }

    #[test]
    fn slow_degree_scan_holds() {
        for beta in [Beta::LogLog, Beta::Power { p: 0.5 }, Beta::Power { p: 0.25 }] {
            let s = slow_degree_scan(beta, 1_000_000);
            assert!(s.beta_admissible, "{beta:?}");
            assert!(s.inequality_holds, "{beta:?}: {:?}", s.first_failure);
            assert!(s.ratio_tends_to_one && (s.final_ratio - 1.0) < 1e-2);
        }
    }

    #[test]
    fn modulus_parsing_and_shape() {
        assert_eq!(Modulus::parse("holder:0.2").unwrap(), Modulus::Holder { alpha: 0.2 });
        assert_eq!(Modulus::parse("log:0.5").unwrap(), Modulus::LogPower { theta: -1.0 });
        assert!(Modulus::parse("holder:1.5").is_err());
        assert!(Modulus::parse("nope:1").is_err());
        assert!(Modulus::parse("holder").is_err());
        for m in [
            Modulus::holder(0.3).unwrap(),
            Modulus::log_power(-1.0).unwrap(),
            Modulus::log_power(-3.0).unwrap(),
            Modulus::table(&[(1e-6, 1e-3), (1e-2, 0.1), (1.0, 1.0)]).unwrap(),
        ] {
            let c = m.check(1000);
            assert!(c.strictly_increasing && c.ratio_flagged && c.ratio_decreasing, "{m:?}");
        }
        // Continuous at the junction t₀ = e^θ.
        let m = Modulus::log_power(-2.0).unwrap();
        let t0 = (-2f64).exp();
        assert!((m.eval(t0 * (1.0 - 1e-9)) - m.eval(t0 * (1.0 + 1e-9))).abs() < 1e-8);
        assert!((m.eval(1e-10) - (1e-10f64).ln().abs().powi(-2)).abs() < 1e-15);
        assert!(m.log_sigma_at_log(1e6).is_finite());
    }

    #[test]
    fn family_constant_near_two_pi() {
        let k = family_constant(400, 4000);
        assert!(k >= 2.0 * PI * 0.99, "{k}");
        assert!(k < 6.0 * PI, "{k}");
    }

    fn z_setup() -> (crate::pipeline::GraphStage, ModerateFunction) {
        let mut cfg = PipelineConfig::preset("z");
        cfg.radius = 100;
        let stage = build_graph(&cfg).unwrap();
        let x0 = stage.graph.basepoints()[0];
        let g = quartic(100);
        let nu = shell_nu(
            &stage.graph,
            x0,
            &g,
            true,
            TailBound::Explicit(power_tail(3.0, 3.0, 100)),
        );
        (stage, nu)
    }

    #[test]
    fn mg_on_quartic_integers() {
        let (stage, nu) = z_setup();
        let gens = stage.action.generators();
        let e1 = Word::single(gens.non_identity().next().unwrap());
        let m = Modulus::holder(0.2).unwrap();
        let rep = estimate_mg(&nu, &stage.graph, &m, &e1).unwrap();
        // Direct oracle over shells n ≥ 1: the worst of the two neighbours.
        let norm = nu.log_norm;
        let mut oracle: f64 = 0.0;
        for n in 1..100u32 {
            let x = n as f64;
            let lx = -4.0 * x.ln() - norm;
            let sig = (0.2 * lx).exp();
            for y in [x - 1.0, x + 1.0] {
                let ly = -4.0 * y.max(1.0).ln() - norm;
                oracle = oracle.max((ly - lx).exp_m1().abs() / sig);
            }
        }
        assert!((rep.value - oracle).abs() <= 1e-9 * oracle, "{} vs {oracle}", rep.value);
        assert_eq!(rep.verdict, Verdict::Bounded);
        assert_eq!(rep.evaluated, nu.len() - 1);
    }

    #[test]
    fn csigma_of_identity_is_zero() {
        let (stage, nu) = z_setup();
        let action = crate::pipeline::realize_with(&stage, &nu).unwrap();
        let id = Word::single(stage.action.generators().identity());
        let rep = csigma_norm(&action, &id, &Modulus::holder(0.5).unwrap(), &[200, 400]);
        assert!(rep.levels.iter().all(|l| l.estimate == 0.0));
        assert!(rep.stabilized);
    }

    #[test]
    fn csigma_stabilises_on_shifted_quartic_integers() {
        // F(n) = (n + 8)⁴ keeps every length ratio inside [1/2, 2], so that
        // coarse grids already resolve the derivative.
        let mut cfg = PipelineConfig::preset("z");
        cfg.radius = 100;
        let stage = build_graph(&cfg).unwrap();
        let x0 = stage.graph.basepoints()[0];
        let g = RegularizedGrowth::from_fn(100, |n| 4.0 * (n as f64 + 8.0).ln());
        let nu = shell_nu(
            &stage.graph,
            x0,
            &g,
            true,
            TailBound::Explicit(power_tail(3.0, 3.0, 108)),
        );
        let action = crate::pipeline::realize_with(&stage, &nu).unwrap();
        let e1 = Word::single(stage.action.generators().non_identity().next().unwrap());
        let rep = csigma_norm(&action, &e1, &Modulus::holder(0.2).unwrap(), &[250, 500, 1000]);
        assert!(rep.levels.iter().all(|l| l.estimate > 0.0 && l.estimate.is_finite()));
        assert!(rep.stabilized, "{:?}", rep.levels);
    }
}

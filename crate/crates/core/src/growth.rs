//! Orbit growth profiles and their regularisation
//! `F(n) = max_{m ≥ n} f(m)^{n/m}`, truncated at a finite horizon.

use crate::error::{Error, Result};
use crate::numeric::ls_slope;
use crate::orbits::OrbitGraph;
use serde::Serialize;
use std::io::Write;

/// A table `n ↦ f(n)` of values `≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub values: Vec<f64>,
    pub source: String,
}

impl GrowthProfile {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some((n, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 1.0)) {
            return Err(Error::ProfileBelowOne { n, value: v });
        }
        Ok(GrowthProfile {
            values,
            source: source.into(),
        })
    }

    pub fn from_counts(counts: &[usize], source: impl Into<String>) -> Result<Self> {
        Self::new(counts.iter().map(|&c| c as f64).collect(), source)
    }

    /// `n ↦ |Sⁿx|` for `n = 0..=horizon`, read off a truncated graph.
    pub fn of_balls(graph: &OrbitGraph, x: usize, horizon: usize) -> Result<Self> {
        let sizes = graph.ball_sizes(x, horizon)?;
        Self::from_counts(
            &sizes,
            format!("{} balls around {}", graph.action().name(), graph.point(x)),
        )
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }
}

/// Regularised growth, stored as natural logarithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedGrowth {
    log_f: Vec<f64>,
    /// `m*(n)`, where the maximum defining `F(n)` is attained.
    argmax: Vec<usize>,
    /// Whether the maximum sits at the horizon, i.e. might grow if the
    /// table were extended.
    tail_flag: Vec<bool>,
    /// Set when the horizon is too short (≤ 1) for any trend to be read.
    pub degenerate: bool,
}

impl RegularizedGrowth {
    /// Wraps an explicit table of `log F(n)` (no regularisation applied).
    pub fn from_log_table(log_f: Vec<f64>) -> Result<Self> {
        if log_f.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let n = log_f.len();
        Ok(RegularizedGrowth {
            argmax: (0..n).collect(),
            tail_flag: vec![false; n],
            degenerate: n <= 2,
            log_f,
        })
    }

    pub fn from_fn(horizon: usize, log_f: impl Fn(usize) -> f64) -> Self {
        Self::from_log_table((0..=horizon).map(log_f).collect()).expect("non-empty")
    }

    pub fn horizon(&self) -> usize {
        self.log_f.len() - 1
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_f
    }

    pub fn log_value(&self, n: usize) -> f64 {
        self.log_f[n]
    }

    pub fn value(&self, n: usize) -> f64 {
        self.log_f[n].exp()
    }

    pub fn argmax(&self, n: usize) -> usize {
        self.argmax[n]
    }

    pub fn tail_flag(&self, n: usize) -> bool {
        self.tail_flag[n]
    }

    /// `F(n+1)/F(n)`, defined for `n < horizon`.
    pub fn ratio(&self, n: usize) -> f64 {
        (self.log_f[n + 1] - self.log_f[n]).exp()
    }

    pub fn ratio_trend(&self) -> Vec<f64> {
        (0..self.horizon()).map(|n| self.ratio(n)).collect()
    }

    /// CSV with columns `n, f, logF, ratio, tail_flag`.
    pub fn write_csv<W: Write>(&self, f: Option<&GrowthProfile>, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "f", "logF", "ratio", "tail_flag"])?;
        for n in 0..=self.horizon() {
            let fv = f
                .and_then(|p| p.values.get(n))
                .map(|v| v.to_string())
                .unwrap_or_default();
            let ratio = if n < self.horizon() {
                self.ratio(n).to_string()
            } else {
                String::new()
            };
            out.write_record([
                n.to_string(),
                fv,
                self.log_f[n].to_string(),
                ratio,
                self.tail_flag[n].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `log F(n) = max_{n ≤ m ≤ horizon} (n/m) log f(m)` for `n ≥ 1`, and
/// `F(0) = f(0)`. Runs in linear time via a suffix maximum of `log f(m)/m`.
pub fn regularize(f: &GrowthProfile, horizon: usize) -> Result<RegularizedGrowth> {
    if f.values.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let h = horizon.min(f.horizon());
    let logs: Vec<f64> = f.values[..=h].iter().map(|v| v.ln()).collect();
    let mut log_f = vec![0.0; h + 1];
    let mut argmax = vec![0; h + 1];
    // Best slope log f(m)/m over m > n, scanning n downwards.
    let mut best: Option<(f64, usize)> = None;
    for n in (1..=h).rev() {
        let own = logs[n];
        let from_tail = best.map(|(slope, m)| (n as f64 * slope, m));
        match from_tail {
            Some((v, m)) if v > own => {
                log_f[n] = v;
                argmax[n] = m;
            }
            _ => {
                log_f[n] = own;
                argmax[n] = n;
            }
        }
        let slope = own / n as f64;
        if best.is_none_or(|(b, _)| slope > b) {
            best = Some((slope, n));
        }
    }
    log_f[0] = logs[0];
    argmax[0] = 0;
    let tail_flag = argmax.iter().map(|&m| m == h && h > 0).collect();
    Ok(RegularizedGrowth {
        log_f,
        argmax,
        tail_flag,
        degenerate: h <= 1,
    })
}

/// Regularisation of `n ↦ n²|B(n)|` (with `|B(0)|` at `n = 0`), which
/// dominates `n²|B(n)|` and has slowly varying ratios.
pub fn dominating_f(balls: &GrowthProfile) -> Result<RegularizedGrowth> {
    let weighted: Vec<f64> = balls
        .values
        .iter()
        .enumerate()
        .map(|(n, &b)| if n == 0 { b } else { (n * n) as f64 * b })
        .collect();
    let g = GrowthProfile::new(weighted, format!("n^2 x {}", balls.source))?;
    regularize(&g, g.horizon())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    ConsistentWithSubexponential,
    ConsistentWithExponential,
    Inconclusive,
}

impl GrowthVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            GrowthVerdict::ConsistentWithSubexponential => "consistent-with-subexponential",
            GrowthVerdict::ConsistentWithExponential => "consistent-with-exponential",
            GrowthVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Finite-horizon heuristic for `lim f(n)^{1/n} = 1`. Never a proof.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthDiagnostic {
    pub horizon: usize,
    /// `f(n)^{1/n}` for `n = 1..=horizon`.
    pub roots: Vec<f64>,
    /// Least-squares slope of the roots over the last half of the horizon.
    pub slope_last_half: f64,
    /// Increase of `log f` over the last quarter divided by its increase
    /// over the second quarter; ≈ 1 for exponential growth, ≈ 0.42 for
    /// polynomial growth.
    pub increment_ratio: Option<f64>,
    /// `log f(N) / N`.
    pub final_log_rate: f64,
    /// `b` in the least-squares fit `log f(n) ≈ a + b·n + d·log n` over
    /// `n ∈ [N/4, N]`; the polynomial part absorbs the prefactor, so `b`
    /// estimates `log lim f(n)^{1/n}`.
    pub exponential_rate: f64,
    pub verdict: GrowthVerdict,
}

/// Solves the 3×3 normal equations of `y ≈ a + b·n + d·log n`.
fn exp_poly_fit(ns: &[f64], ys: &[f64]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for (&n, &y) in ns.iter().zip(ys) {
        let row = [1.0, n, n.ln()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * y;
        }
    }
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        m.swap(c, p);
        if m[c][c].abs() < 1e-300 {
            return None;
        }
        for r in 0..3 {
            if r != c {
                let k = m[r][c] / m[c][c];
                for j in c..4 {
                    m[r][j] -= k * m[c][j];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

pub fn subexp_diagnostic(f: &GrowthProfile) -> GrowthDiagnostic {
    let h = f.horizon();
    let logs: Vec<f64> = f.values.iter().map(|v| v.ln()).collect();
    let roots: Vec<f64> = (1..=h).map(|n| (logs[n] / n as f64).exp()).collect();
    let half: Vec<usize> = (h.div_ceil(2).max(1)..=h).collect();
    let slope_last_half = if half.len() >= 2 {
        let xs: Vec<f64> = half.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = half.iter().map(|&n| roots[n - 1]).collect();
        ls_slope(&xs, &ys)
    } else {
        0.0
    };
    let final_log_rate = if h > 0 { logs[h] / h as f64 } else { 0.0 };
    let (q1, q2, q3) = (h / 4, h / 2, (3 * h) / 4);
    let early = logs[q2] - logs[q1];
    let late = logs[h] - logs[q3];
    let increment_ratio = (early > 0.0).then(|| late / early);
    let flat = logs[h] - logs[0] <= 1e-12;
    let lo = (h / 4).max(1);
    let ns: Vec<f64> = (lo..=h).map(|n| n as f64).collect();
    let exponential_rate = if h - lo >= 3 {
        exp_poly_fit(&ns, &logs[lo..=h]).map_or(f64::NAN, |c| c[1])
    } else {
        f64::NAN
    };
    let verdict = if flat {
        GrowthVerdict::ConsistentWithSubexponential
    } else if h < 8 || !exponential_rate.is_finite() {
        GrowthVerdict::Inconclusive
    } else if exponential_rate < SUBEXP_RATE {
        GrowthVerdict::ConsistentWithSubexponential
    } else if exponential_rate > EXP_RATE && final_log_rate > EXP_RATE {
        GrowthVerdict::ConsistentWithExponential
    } else {
        GrowthVerdict::Inconclusive
    };
    GrowthDiagnostic {
        horizon: h,
        roots,
        slope_last_half,
        increment_ratio,
        final_log_rate,
        exponential_rate,
        verdict,
    }
}

const SUBEXP_RATE: f64 = 0.1;
const EXP_RATE: f64 = 0.2;

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(v: impl IntoIterator<Item = f64>) -> GrowthProfile {
        GrowthProfile::new(v.into_iter().collect(), "test").unwrap()
    }

    #[test]
    fn constant_profile() {
        let f = profile(vec![1.0; 20]);
        let r = regularize(&f, 19).unwrap();
        assert!(r.log_values().iter().all(|&v| v == 0.0));
        assert!(r.ratio_trend().iter().all(|&q| q == 1.0));
        assert_eq!(
            subexp_diagnostic(&f).verdict,
            GrowthVerdict::ConsistentWithSubexponential
        );
    }

    #[test]
    fn exponential_profile_is_fixed() {
        let f = profile((0..30).map(|n| 2f64.powi(n)));
        let r = regularize(&f, 29).unwrap();
        for n in 0..30 {
            assert!((r.log_value(n) - n as f64 * 2f64.ln()).abs() < 1e-12);
        }
        for q in r.ratio_trend() {
            assert!((q - 2.0).abs() < 1e-12);
        }
        assert_eq!(subexp_diagnostic(&f).verdict, GrowthVerdict::ConsistentWithExponential);
    }

    #[test]
    fn identity_profile_brute_force() {
        let h = 10_000;
        let f = profile((0..=h).map(|n| (n.max(1)) as f64));
        let r = regularize(&f, h).unwrap();
        // Oracle: direct maximum over all m.
        for n in [1usize, 2, 3, 4, 7, 50, 9_999] {
            let brute = (n..=h)
                .map(|m| n as f64 / m as f64 * (m as f64).ln())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((r.log_value(n) - brute).abs() < 1e-12, "n = {n}");
        }
        assert!((r.value(1) - 3f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(r.argmax(1), 3);
        for n in 3..100 {
            assert!((r.value(n) - n as f64).abs() < 1e-9 * n as f64);
        }
        assert!(!r.tail_flag(5));
        assert!(r.tail_flag(h));
    }

    #[test]
    fn dominating_values() {
        let z = GrowthProfile::from_counts(&(0..=10).map(|n| 2 * n + 1).collect::<Vec<_>>(), "z").unwrap();
        let big = dominating_f(&z).unwrap();
        assert!(big.value(5) >= 275.0 * (1.0 - 1e-12));
        let z2 =
            GrowthProfile::from_counts(&(0..=12).map(|n| 2 * n * n + 2 * n + 1).collect::<Vec<_>>(), "z2").unwrap();
        assert!(dominating_f(&z2).unwrap().value(10) >= 22_100.0 * (1.0 - 1e-12));
        let short = GrowthProfile::from_counts(&[1, 3], "short").unwrap();
        let d = dominating_f(&short).unwrap();
        assert!(d.degenerate);
        assert!((d.value(1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(GrowthProfile::new(vec![], "x"), Err(Error::EmptyProfile));
        assert!(matches!(
            GrowthProfile::new(vec![1.0, 0.5], "x"),
            Err(Error::ProfileBelowOne { n: 1, .. })
        ));
    }
}

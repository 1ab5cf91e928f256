//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `count` points log-spaced between `lo` and `hi` (inclusive).
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Σ_{n>N} 1/n², evaluated as π²/6 minus a compensated partial sum.
pub fn inverse_square_tail(n: usize) -> f64 {
    let head = compensated_sum((1..=n).map(|k| 1.0 / (k as f64 * k as f64)));
    (std::f64::consts::PI * std::f64::consts::PI / 6.0 - head).max(0.0)
}

/// Shortest signed distance on ℝ/ℤ, returned as an absolute value in [0, 1/2].
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_beats_naive() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = xs.iter().sum();
        let comp = compensated_sum(xs.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn slope_of_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((ls_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_square_tail_small() {
        let t = inverse_square_tail(100);
        // Σ_{n>100} 1/n² lies between 1/101 and 1/100.
        assert!(t > 1.0 / 101.0 && t < 1.0 / 100.0);
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.95, 0.05) - 0.1).abs() < 1e-12);
        assert_eq!(circle_distance(0.3, 0.3), 0.0);
    }
}

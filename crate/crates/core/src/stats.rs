//! Small numerical helpers shared across modules.

use serde::Serialize;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean and `s/√n` (zero for a single sample).
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Option<Self> {
        let xs: Vec<f64> = samples.into_iter().collect();
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mut acc = CompensatedSum::new();
        xs.iter().for_each(|&x| acc.add(x));
        let mean = acc.value() / n as f64;
        let std_err = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std_err, n })
    }

    /// `|mean − target| ≤ k·std_err` (exact equality when the error is zero).
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(x, y)`; `None` for fewer than two points or
/// constant `x`. A perfectly flat `y` has `r2 = 1`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    // shifting by the first sample keeps a flat series exactly flat
    let mx = x[0] + x.iter().map(|v| v - x[0]).sum::<f64>() / n as f64;
    let my = y[0] + y.iter().map(|v| v - y[0]).sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn estimate_of_constant_has_no_error() {
        let e = Estimate::from_samples([2.0; 5]).unwrap();
        assert_eq!((e.mean, e.std_err, e.n), (2.0, 0.0, 5));
        assert!(e.within(2.0, 3.0));
        assert!(Estimate::from_samples(Vec::<f64>::new()).is_none());
        let e = Estimate::from_samples([1.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        assert!((e.std_err - 1.0).abs() < 1e-15);
    }

    #[test]
    fn line_fit_on_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 1.5 - 2.0 * t).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_eq!((f.slope, f.intercept, f.r2), (-2.0, 1.5, 1.0));
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}

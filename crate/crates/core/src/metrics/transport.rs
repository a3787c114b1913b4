use super::{domain, MetricsError};

/// Largest support size accepted by the exact solver unless overridden.
pub const DEFAULT_TRANSPORT_CAP: usize = 512;

const WEIGHT_TOL: f64 = 1e-12;

/// Weighted point cloud; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    points: Vec<T>,
    weights: Vec<f64>,
    uniform: bool,
}

impl<T> EmpiricalMeasure<T> {
    pub fn new(points: Vec<T>, weights: Vec<f64>) -> Result<Self, MetricsError> {
        if points.is_empty() {
            return Err(domain("empirical measure needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(domain(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(domain("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            points,
            weights,
            uniform: false,
        })
    }

    /// Equal weights `1/n`. Transport between two uniform measures is solved
    /// in integer units, so integer costs give exact results.
    pub fn uniform(points: Vec<T>) -> Result<Self, MetricsError> {
        if points.is_empty() {
            return Err(domain("empirical measure needs at least one point"));
        }
        let w = 1.0 / points.len() as f64;
        Ok(Self {
            weights: vec![w; points.len()],
            points,
            uniform: true,
        })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Exact `W_d(μ, ν)` with the default support cap.
pub fn empirical_wasserstein<T, D>(
    mu: &EmpiricalMeasure<T>,
    nu: &EmpiricalMeasure<T>,
    d: D,
) -> Result<f64, MetricsError>
where
    D: Fn(&T, &T) -> f64,
{
    empirical_wasserstein_with_cap(mu, nu, d, DEFAULT_TRANSPORT_CAP)
}

/// Exact `W_d(μ, ν)` by successive shortest paths on the transportation
/// network.
pub fn empirical_wasserstein_with_cap<T, D>(
    mu: &EmpiricalMeasure<T>,
    nu: &EmpiricalMeasure<T>,
    d: D,
    cap: usize,
) -> Result<f64, MetricsError>
where
    D: Fn(&T, &T) -> f64,
{
    for m in [mu, nu] {
        if m.len() > cap {
            return Err(MetricsError::TooLarge { size: m.len(), cap });
        }
    }
    let (left, right) = (mu.weights.iter().sum::<f64>(), nu.weights.iter().sum::<f64>());
    if (left - right).abs() > WEIGHT_TOL {
        return Err(MetricsError::WeightMismatch { left, right });
    }
    let (n, m) = (mu.len(), nu.len());
    let mut cost = Vec::with_capacity(n * m);
    for x in &mu.points {
        for y in &nu.points {
            let c = d(x, y);
            if !(c.is_finite() && c >= 0.0) {
                return Err(domain(format!("cost must be finite and nonnegative, got {c}")));
            }
            cost.push(c);
        }
    }
    if mu.uniform && nu.uniform {
        // supplies m and demands n: every flow is an integer
        let total = solve(&cost, vec![m as f64; n], vec![n as f64; m], 0.0);
        Ok(total / (n * m) as f64)
    } else {
        Ok(solve(&cost, mu.weights.clone(), nu.weights.clone(), 1e-15))
    }
}

/// Min-cost transportation; `cost` is row-major `supply.len() × demand.len()`.
/// Quantities at or below `eps` count as exhausted.
fn solve(cost: &[f64], mut supply: Vec<f64>, mut demand: Vec<f64>, eps: f64) -> f64 {
    let (n, m) = (supply.len(), demand.len());
    let mut flow = vec![0.0; n * m];
    let mut pot_s = vec![0.0; n];
    let mut pot_t = vec![0.0; m];
    let mut dist_s = vec![0.0; n];
    let mut dist_t = vec![0.0; m];
    let mut done_s = vec![false; n];
    let mut done_t = vec![false; m];
    // predecessor of a sink is a source and vice versa
    let mut prev_t = vec![usize::MAX; m];
    let mut prev_s = vec![usize::MAX; n];

    while supply.iter().any(|&s| s > eps) {
        for i in 0..n {
            dist_s[i] = if supply[i] > eps { 0.0 } else { f64::INFINITY };
            done_s[i] = false;
            prev_s[i] = usize::MAX;
        }
        dist_t.fill(f64::INFINITY);
        done_t.fill(false);
        prev_t.fill(usize::MAX);

        let target = loop {
            let mut best = (f64::INFINITY, usize::MAX, false);
            for i in 0..n {
                if !done_s[i] && dist_s[i] < best.0 {
                    best = (dist_s[i], i, true);
                }
            }
            for j in 0..m {
                if !done_t[j] && dist_t[j] < best.0 {
                    best = (dist_t[j], j, false);
                }
            }
            let (du, u, is_source) = best;
            if u == usize::MAX {
                unreachable!("balanced transportation problem always has an augmenting path");
            }
            if is_source {
                done_s[u] = true;
                let row = &cost[u * m..(u + 1) * m];
                for j in 0..m {
                    if done_t[j] {
                        continue;
                    }
                    let nd = du + (row[j] + pot_s[u] - pot_t[j]).max(0.0);
                    if nd < dist_t[j] {
                        dist_t[j] = nd;
                        prev_t[j] = u;
                    }
                }
            } else {
                done_t[u] = true;
                if demand[u] > eps {
                    break u;
                }
                for i in 0..n {
                    if done_s[i] || flow[i * m + u] <= eps {
                        continue;
                    }
                    let nd = du + (-cost[i * m + u] + pot_t[u] - pot_s[i]).max(0.0);
                    if nd < dist_s[i] {
                        dist_s[i] = nd;
                        prev_s[i] = u;
                    }
                }
            }
        };

        let dt = dist_t[target];
        for i in 0..n {
            pot_s[i] += dist_s[i].min(dt);
        }
        for j in 0..m {
            pot_t[j] += dist_t[j].min(dt);
        }

        // bottleneck along the path
        let mut amount = demand[target];
        let mut j = target;
        let source = loop {
            let i = prev_t[j];
            let back = prev_s[i];
            if back == usize::MAX {
                break i;
            }
            amount = amount.min(flow[i * m + back]);
            j = back;
        };
        amount = amount.min(supply[source]);

        let mut j = target;
        loop {
            let i = prev_t[j];
            flow[i * m + j] += amount;
            let back = prev_s[i];
            if back == usize::MAX {
                break;
            }
            flow[i * m + back] -= amount;
            j = back;
        }
        supply[source] -= amount;
        demand[target] -= amount;
    }

    flow.iter()
        .zip(cost)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, c)| f * c)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn identical_sets_cost_nothing() {
        let a = EmpiricalMeasure::uniform(vec![0.0, 1.5, -2.0, 4.0]).unwrap();
        assert_eq!(empirical_wasserstein(&a, &a, abs).unwrap(), 0.0);
    }

    #[test]
    fn dirac_masses_with_capped_cost() {
        let a = EmpiricalMeasure::uniform(vec![0.0]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![1.0]).unwrap();
        let w = empirical_wasserstein(&a, &b, |x: &f64, y: &f64| (x - y).abs().min(1.0)).unwrap();
        assert_eq!(w, 1.0);
    }

    #[test]
    fn two_point_uniform() {
        let a = EmpiricalMeasure::uniform(vec![0.0, 2.0]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![1.0, 3.0]).unwrap();
        assert_eq!(empirical_wasserstein(&a, &b, abs).unwrap(), 1.0);
    }

    #[test]
    fn weighted_measures_match_one_dimensional_quantiles() {
        // on the line W1 is the L1 distance between distribution functions
        let a = EmpiricalMeasure::new(vec![0.0, 1.0, 3.0], vec![0.5, 0.25, 0.25]).unwrap();
        let b = EmpiricalMeasure::new(vec![0.5, 2.0], vec![0.75, 0.25]).unwrap();
        // F_a - F_b on [0,0.5): 0.5, [0.5,1): -0.25, [1,2): 0, [2,3): -0.25
        let expect = 0.5 * 0.5 + 0.25 * 0.5 + 0.0 + 0.25 * 1.0;
        let w = empirical_wasserstein(&a, &b, abs).unwrap();
        assert!((w - expect).abs() < 1e-15, "{w}");
    }

    #[test]
    fn unequal_uniform_sizes() {
        let a = EmpiricalMeasure::uniform(vec![0.0, 0.0, 3.0]).unwrap();
        let b = EmpiricalMeasure::uniform(vec![1.0, 2.0]).unwrap();
        // F_a - F_b: [0,1): 2/3, [1,2): 1/6, [2,3): -1/3
        let w = empirical_wasserstein(&a, &b, abs).unwrap();
        assert!((w - (2.0 / 3.0 + 1.0 / 6.0 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn refuses_oversized_and_bad_inputs() {
        let big = EmpiricalMeasure::uniform((0..10).map(f64::from).collect()).unwrap();
        let small = EmpiricalMeasure::uniform(vec![0.0f64]).unwrap();
        assert_eq!(
            empirical_wasserstein_with_cap(&big, &small, abs, 5),
            Err(MetricsError::TooLarge { size: 10, cap: 5 })
        );
        assert!(EmpiricalMeasure::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::<f64>::uniform(vec![]).is_err());
        assert!(empirical_wasserstein(&small, &small, |_, _| -1.0).is_err());
    }
}

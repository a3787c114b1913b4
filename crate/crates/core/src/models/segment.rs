use std::collections::VecDeque;

use super::ModelError;

/// Discretized path on the delay window `[−r, 0]`, stored oldest first.
///
/// Holds `r/dt + 1` grid values of an `n`-dimensional path; pushing a new
/// endpoint drops the oldest value.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    dim: usize,
    points: VecDeque<Vec<f64>>,
}

impl Segment {
    /// Path constant equal to `value` on the whole window.
    pub fn constant(points: usize, value: &[f64]) -> Result<Self, ModelError> {
        Self::from_values((0..points).map(|_| value.to_vec()).collect())
    }

    /// Path from grid values ordered from `s = −r` to `s = 0`.
    pub fn from_values(values: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        if values.len() < 2 {
            return Err(ModelError::Invalid("a segment needs at least two grid points".into()));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(ModelError::Invalid("segment values must share a positive dimension".into()));
        }
        Ok(Self {
            dim,
            points: values.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points, `r/dt + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x(0)`
    pub fn endpoint(&self) -> &[f64] {
        self.points.back().expect("segment is nonempty")
    }

    /// `x(−r)`
    pub fn oldest(&self) -> &[f64] {
        self.points.front().expect("segment is nonempty")
    }

    /// Value `lag` grid steps before the endpoint.
    pub fn lagged(&self, lag: usize) -> &[f64] {
        &self.points[self.points.len() - 1 - lag]
    }

    /// Values from `s = −r` to `s = 0`.
    pub fn values(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.iter().map(|v| v.as_slice())
    }

    /// Appends a new endpoint and drops `x(−r)`.
    pub fn push(&mut self, endpoint: Vec<f64>) {
        debug_assert_eq!(endpoint.len(), self.dim);
        let mut recycled = self.points.pop_front().expect("segment is nonempty");
        recycled.copy_from_slice(&endpoint);
        self.points.push_back(recycled);
    }

    /// `sup_s |x(s)|` with the Euclidean norm on values.
    pub fn sup_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt()
    }

    /// Trapezoidal `∫_{−r}^0 x(s) ds / r`.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.points.len();
        let mut out = vec![0.0; self.dim];
        for (j, v) in self.points.iter().enumerate() {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
        }
        out.iter_mut().for_each(|o| *o /= (n - 1) as f64);
        out
    }

    /// Pointwise `self − other`.
    pub fn difference(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            points: self
                .points
                .iter()
                .zip(&other.points)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_bookkeeping() {
        let r_over_dt = 10;
        let mut s = Segment::constant(r_over_dt + 1, &[0.0]).unwrap();
        for k in 1..=r_over_dt {
            s.push(vec![k as f64]);
        }
        let vals: Vec<f64> = s.values().map(|v| v[0]).collect();
        assert_eq!(vals, (0..=r_over_dt).map(|k| k as f64).collect::<Vec<_>>());
        assert_eq!(s.endpoint(), &[10.0]);
        assert_eq!(s.oldest(), &[0.0]);
        assert_eq!(s.lagged(3), &[7.0]);
        s.push(vec![11.0]);
        assert_eq!(s.oldest(), &[1.0]);
        assert_eq!(s.len(), r_over_dt + 1);
    }

    #[test]
    fn norms_and_means() {
        let z = Segment::constant(5, &[0.0, 0.0]).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let s = Segment::from_values(vec![vec![3.0, 4.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(s.sup_norm(), 5.0);
        assert_eq!(s.mean(), vec![(1.5 + 0.0 + 0.5) / 2.0, (2.0 + 1.0 + 0.5) / 2.0]);
        assert!(Segment::from_values(vec![vec![1.0]]).is_err());
        assert!(Segment::from_values(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}

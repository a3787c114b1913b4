use super::{domain, MetricsError};

/// Half the L1 distance between the normalized histograms of two samples on
/// a common range `[min, max]` split into `bins` equal cells.
pub fn tv_histogram(a: &[f64], b: &[f64], bins: usize) -> Result<f64, MetricsError> {
    if bins < 2 {
        return Err(domain(format!("need at least 2 bins, got {bins}")));
    }
    if a.is_empty() || b.is_empty() {
        return Err(domain("both samples must be nonempty"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(domain("samples must be finite"));
    }
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo == hi {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let histogram = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &x in xs {
            let cell = (((x - lo) / width) as usize).min(bins - 1);
            h[cell] += 1.0;
        }
        let n = xs.len() as f64;
        h.iter_mut().for_each(|c| *c /= n);
        h
    };
    let (ha, hb) = (histogram(a), histogram(b));
    let tv = 0.5 * ha.iter().zip(&hb).map(|(p, q)| (p - q).abs()).sum::<f64>();
    Ok(tv.clamp(0.0, 1.0))
}

/// [`tv_histogram`] on the scalar projections of arbitrary states.
pub fn tv_histogram_by<T, P>(a: &[T], b: &[T], projection: P, bins: usize) -> Result<f64, MetricsError>
where
    P: Fn(&T) -> f64,
{
    let pa: Vec<f64> = a.iter().map(&projection).collect();
    let pb: Vec<f64> = b.iter().map(&projection).collect();
    tv_histogram(&pa, &pb, bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples_and_disjoint_supports() {
        let a = [0.1, 0.4, 0.4, 2.0];
        assert_eq!(tv_histogram(&a, &a, 8).unwrap(), 0.0);
        let far: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert_eq!(tv_histogram(&a, &far, 16).unwrap(), 1.0);
        assert_eq!(tv_histogram(&[1.0], &[1.0, 1.0], 4).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(tv_histogram(&[], &[1.0], 4).is_err());
        assert!(tv_histogram(&[1.0], &[1.0], 1).is_err());
        assert!(tv_histogram(&[f64::NAN], &[1.0], 4).is_err());
    }

    #[test]
    fn projection_is_applied() {
        let a = [(0.0, 5.0), (1.0, 5.0)];
        let b = [(0.0, -5.0), (1.0, -5.0)];
        assert_eq!(tv_histogram_by(&a, &b, |p| p.0, 4).unwrap(), 0.0);
        assert_eq!(tv_histogram_by(&a, &b, |p| p.1, 4).unwrap(), 1.0);
    }
}

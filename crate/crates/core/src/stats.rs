//! Small empirical-statistics helpers shared by the models.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile of pre-sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mid-rank empirical CDF: `(#{x < v} + #{x == v} / 2) / n`.
pub fn mid_rank_cdf(sorted: &[f64], v: f64) -> f64 {
    let below = sorted.partition_point(|&x| x < v);
    let upto = sorted.partition_point(|&x| x <= v);
    (below as f64 + 0.5 * (upto - below) as f64) / sorted.len() as f64
}

/// Fraction of values `<= v`.
pub fn ecdf(sorted: &[f64], v: f64) -> f64 {
    sorted.partition_point(|&x| x <= v) as f64 / sorted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_and_ranks() {
        let v = sorted(&[3.0, 1.0, 2.0, 5.0, 4.0]);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.25), 2.0);
        assert_eq!(mid_rank_cdf(&v, 3.0), 0.5);
        assert_eq!(mid_rank_cdf(&v, 10.0), 1.0);
        assert_eq!(mid_rank_cdf(&v, 0.0), 0.0);
        assert_eq!(ecdf(&v, 3.0), 0.6);
        assert!((sd(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}

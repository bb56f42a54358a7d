//! Sample statistics and the Student t tail.

use statrs::function::beta::beta_reg;

/// Arithmetic mean; NaN for an empty slice.
///
/// Computed around the first element, so a constant sample returns that
/// constant exactly.
pub fn mean(xs: &[f64]) -> f64 {
    let Some(&shift) = xs.first() else {
        return f64::NAN;
    };
    shift + xs.iter().map(|x| x - shift).sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator (shifted-data algorithm).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let Some(&shift) = xs.first() else {
        return f64::NAN;
    };
    let n = xs.len() as f64;
    let (sum, sum_sq) = xs.iter().fold((0.0, 0.0), |(s, q), x| {
        let d = x - shift;
        (s + d, q + d * d)
    });
    ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `dof`
/// degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    beta_reg(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

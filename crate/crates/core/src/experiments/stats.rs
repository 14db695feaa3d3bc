//! One-sample t-test with the Student t distribution evaluated by quadrature.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// Mean below zero.
    Less,
    /// Mean above zero.
    Greater,
    TwoSided,
}

impl Alternative {
    pub fn label(self) -> &'static str {
        match self {
            Alternative::Less | Alternative::Greater => "one-tailed",
            Alternative::TwoSided => "two-tailed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    /// `None` when the sample variance is zero.
    pub t: Option<f64>,
    pub df: usize,
    pub p_value: f64,
    /// Zero variance: the p-value is 0 or 1 by convention, not from the
    /// t distribution.
    pub degenerate: bool,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Tests whether the mean of `xs` differs from zero in the direction given.
///
/// With zero variance the t statistic is undefined; the p-value is then 0
/// when the mean lies in the alternative's direction and 1 otherwise.
pub fn one_sample_t_test(xs: &[f64], alternative: Alternative) -> Result<TTest, String> {
    if xs.len() < 2 {
        return Err(format!("a t-test needs at least two samples, got {}", xs.len()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err("samples must be finite".into());
    }
    let n = xs.len();
    let df = n - 1;
    let m = mean(xs);
    let s = sample_std(xs);
    // Treat variance at rounding level of the mean as zero.
    if s <= 1e-14 * m.abs().max(f64::MIN_POSITIVE) || s == 0.0 {
        let supports = match alternative {
            Alternative::Less => m < 0.0,
            Alternative::Greater => m > 0.0,
            Alternative::TwoSided => m != 0.0,
        };
        return Ok(TTest { n, mean: m, std: s, t: None, df, p_value: if supports { 0.0 } else { 1.0 }, degenerate: true });
    }
    let t = m / (s / (n as f64).sqrt());
    let p = match alternative {
        Alternative::Less => student_t_cdf(t, df),
        Alternative::Greater => student_t_cdf(-t, df),
        Alternative::TwoSided => 2.0 * student_t_cdf(-t.abs(), df),
    };
    Ok(TTest { n, mean: m, std: s, t: Some(t), df, p_value: p.clamp(0.0, 1.0), degenerate: false })
}

/// Student t CDF.
///
/// Substituting `x = sqrt(df) tan(theta)` turns the density into a multiple
/// of `cos(theta)^(df - 1)` on `(-pi/2, pi/2)`, a smooth bounded integrand
/// that Simpson's rule handles accurately. The normalising constant is the
/// same integral over `[0, pi/2]`, so no gamma function is needed.
pub fn student_t_cdf(t: f64, df: usize) -> f64 {
    assert!(df >= 1);
    if t.is_nan() {
        return f64::NAN;
    }
    let theta = (t / (df as f64).sqrt()).atan();
    let k = (df - 1) as i32;
    let f = |x: f64| x.cos().powi(k);
    let half = simpson(f, 0.0, std::f64::consts::FRAC_PI_2, 4096);
    let part = simpson(f, 0.0, theta.abs(), 4096);
    let upper_tail = 0.5 * (1.0 - part / half);
    if t >= 0.0 {
        1.0 - upper_tail
    } else {
        upper_tail
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    if h == 0.0 {
        return 0.0;
    }
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn cdf_matches_reference_implementation() {
        for df in [1usize, 2, 3, 5, 9, 29, 49, 120] {
            let reference = StudentsT::new(0.0, 1.0, df as f64).unwrap();
            for t in [-6.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.7, 2.0, 4.5] {
                let ours = student_t_cdf(t, df);
                assert!((ours - reference.cdf(t)).abs() < 1e-9, "df {df}, t {t}: {ours} vs {}", reference.cdf(t));
            }
        }
    }

    #[test]
    fn cauchy_case_is_closed_form() {
        for t in [-3.0, -0.5, 0.0, 1.0, 10.0] {
            let exact = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_t_statistic() {
        let xs = [0.8, 1.2, -0.3, 0.5, 0.9, 1.4, 0.2, 0.7, 1.1, 0.6];
        // mean 0.71, sum of squared deviations 2.249.
        let m = 0.71;
        let s = (2.249f64 / 9.0).sqrt();
        let t = m / (s / 10f64.sqrt());
        let r = one_sample_t_test(&xs, Alternative::TwoSided).unwrap();
        assert!((r.mean - m).abs() < 1e-12);
        assert!((r.t.unwrap() - t).abs() < 1e-10);
        assert_eq!(r.df, 9);
        assert!((t - 4.4914).abs() < 1e-3);
        // Two-sided table for df = 9: 4.297 at p = 0.002, 4.781 at p = 0.001.
        assert!(r.p_value > 0.001 && r.p_value < 0.002);
        let tabulated = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, 9.0).unwrap().cdf(t));
        assert!((r.p_value - tabulated).abs() < 1e-3);
        let one = one_sample_t_test(&xs, Alternative::Greater).unwrap();
        assert!((one.p_value * 2.0 - r.p_value).abs() < 1e-12);
        assert!((one_sample_t_test(&xs, Alternative::Less).unwrap().p_value - (1.0 - one.p_value)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variance() {
        let r = one_sample_t_test(&[1.0, 1.0, 1.0, 1.0], Alternative::TwoSided).unwrap();
        assert!(r.degenerate && r.t.is_none());
        assert!(r.p_value < 0.01);
        let z = one_sample_t_test(&[0.0; 5], Alternative::TwoSided).unwrap();
        assert!(z.degenerate && z.p_value == 1.0);
        assert_eq!(one_sample_t_test(&[1.0; 3], Alternative::Less).unwrap().p_value, 1.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(one_sample_t_test(&[1.0], Alternative::TwoSided).is_err());
    }
}

/// Sample mean and standard error of the mean; the error is `None` for a
/// single value.
pub fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

/// Least-squares fit `y ≈ a ln n + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
}

/// Fits `ys[j] ≈ a ln(ns[j]) + b`.
pub fn log_fit(ns: &[f64], ys: &[f64]) -> LogFit {
    assert_eq!(ns.len(), ys.len(), "log fit needs paired samples");
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    LogFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Fits `mean_R` against `ln n` over the inclusive range `[from, to]` of a
/// per-`n` curve indexed from `n = 1`.
pub fn log_fit_range(curve: &[f64], from: usize, to: usize) -> LogFit {
    let ns: Vec<f64> = (from..=to).map(|n| n as f64).collect();
    log_fit(&ns, &curve[from - 1..to])
}

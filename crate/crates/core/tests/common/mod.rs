//! Statistical helpers shared by the acceptance criteria.

/// Three-sigma binomial tolerance check: is `successes/trials` within
/// 3σ of `p`?
pub fn within_3_sigma_binomial(successes: usize, trials: usize, p: f64) -> bool {
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let observed = successes as f64 / trials as f64;
    (observed - p).abs() <= 3.0 * sigma
}

/// Chi-square critical value at the given upper-tail significance.
pub fn chi_square_critical(df: usize, significance: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df as f64)
        .expect("valid degrees of freedom")
        .inverse_cdf(1.0 - significance)
}

/// Pass/fail line, one per criterion.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

//! Weighted norms of sampled fields and the diagnostics built on them.

mod ball;
mod diagnostics;
mod znorm;

pub use ball::{ball_max, ball_min, ball_sums, Ball};
pub use diagnostics::{
    fundamental_solution, gaussian_envelope, long_time_decay, modulus_of_continuity, p_star, q_lower_star,
    range_invariance, z_gradient_smallness, DecayReport, EnvelopeConfig, GaussianEnvelope, RangeReport,
    SmallnessReport,
};
pub use znorm::{
    carleson, weighted_sup_norm, z_l2_noninclusion_witness, z_norm, z_norm_analytic, z_norm_prefix, AnalyticZ,
    CarlesonReport, WitnessReport, ZNormReport, ZNormSpec,
};

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    #[test]
    fn least_squares_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, i) = super::least_squares(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (i + 1.0).abs() < 1e-14);
    }
}

//! Region labels of (α, β) and the predicted strong-rate exponent.

use levy_avg::averaging::{r1, region_classify, theoretical_rate, RateSpec};

fn main() -> levy_avg::Result<()> {
    for alpha in [0.5, 0.8, 1.0, 1.5, 1.9] {
        let mut cells = Vec::new();
        for beta in [0.1, 0.4, 0.7, 0.99] {
            let label = region_classify(alpha, beta).map_or("-".to_string(), |r| r.to_string());
            cells.push(format!("beta={beta}:{label}"));
        }
        println!("alpha={alpha:<4} {}", cells.join("  "));
    }

    for (alpha, beta, gamma) in [(1.5, 0.9, 0.9), (1.0, 0.6, 0.0), (0.5, 0.99, 0.0)] {
        let report = theoretical_rate(&RateSpec::new(alpha, beta, gamma, 1e-3, 1.0)?)?;
        println!(
            "alpha={alpha} beta={beta} gamma={gamma}: delta1={:.4} exponent={:.4} region={} (r1={:.4})",
            report.delta1,
            report.exponent,
            report.region,
            r1(alpha)
        );
    }
    Ok(())
}

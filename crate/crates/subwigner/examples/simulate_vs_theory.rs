//! Run a small replicated experiment and compare the sampled covariance of
//! the statistics vector with the limiting theory, entry by entry.
//!
//! Run with: cargo run --release --example simulate_vs_theory

use subwigner::chebfn::TestFunction;
use subwigner::ensemble::{EntryLaw, IndexSetSpec};
use subwigner::montecarlo::{
    compare_with_theory, run_experiment, ExperimentConfig, ExperimentOptions,
};

fn main() {
    let config = ExperimentConfig {
        n: 256,
        replicas: 1200,
        law: EntryLaw::uniform(1.0),
        family: vec![
            IndexSetSpec::Prefix { gamma: 0.5 },
            IndexSetSpec::Window { a: 0.25, b: 0.75 },
        ],
        test_functions: vec![TestFunction::monomial(1), TestFunction::monomial(2)],
        master_seed: 7,
        options: ExperimentOptions::default(),
    };

    let result = run_experiment(&config).expect("experiment runs");
    let report = compare_with_theory(&result, &config).expect("theory evaluates");

    println!(
        "{} replicas of order {} ({} failed) in {:.2}s",
        result.replicas_used,
        config.n,
        result.replicas_failed,
        result.wall_time.as_secs_f64()
    );
    println!("entry      theory      simulated   stderr      z");
    for l in 0..2 {
        for p in 0..2 {
            println!(
                "({l},{p})  {:>10.5}  {:>10.5}  {:>10.5}  {:>6.2}",
                report.theory[l][p],
                report.simulated[l][p],
                result.cov_stderr[l][p],
                report.z_scores[l][p]
            );
        }
    }
    let nr = report.normality;
    println!(
        "all-ones combination: skew {:.4}, excess kurtosis {:.4}, KS {:.4} (1% critical {:.4})",
        nr.skewness, nr.excess_kurtosis, nr.ks_statistic, nr.ks_critical_1pct
    );
    println!("max |z| = {:.3}", report.max_abs_z);
}

//! Evaluate the limiting covariance matrix for a two-set family and print
//! the per-entry breakdown into its Gaussian-free-field, sigma^2, and
//! fourth-cumulant parts.
//!
//! Run with: cargo run --release --example theory_breakdown

use subwigner::chebfn::TestFunction;
use subwigner::ensemble::{realize_index_family, EntryLaw, IndexSetSpec};
use subwigner::theory::{covariance_breakdown_matrix, TheoryOptions};

fn main() {
    let specs = [
        IndexSetSpec::Prefix { gamma: 0.5 },
        IndexSetSpec::Window { a: 0.25, b: 0.75 },
    ];
    let family = realize_index_family(&specs, 512).expect("valid family");
    let phis = [TestFunction::monomial(2), TestFunction::cos_t(1.0)];
    let opts = TheoryOptions::default();

    println!("family at n = 512:");
    for (l, spec) in specs.iter().enumerate() {
        println!(
            "  B_{l} = {:?}: {} rows, density {}",
            spec,
            family.n_l[l],
            family.gamma_l[l]
        );
    }
    println!("  overlap: {} rows, density {}", family.n_lm[0][1], family.gamma_lm[0][1]);
    println!();

    for law in [
        EntryLaw::gaussian(2.0),
        EntryLaw::rademacher(1.0),
        EntryLaw::uniform(1.0),
    ] {
        let matrix = covariance_breakdown_matrix(&phis, &family, &law, &opts).expect("evaluates");
        println!(
            "{:?} entries (kappa4 = {}):",
            law.kind, law.kappa4
        );
        for (l, row) in matrix.iter().enumerate() {
            for (p, entry) in row.iter().enumerate() {
                println!(
                    "  cov({}, {}) = {:+.6}  [gff {:+.6}, sigma {:+.6}, kappa4 {:+.6}, tail {:.1e}]",
                    phis[l].label,
                    phis[p].label,
                    entry.total,
                    entry.gff_part,
                    entry.sigma_part,
                    entry.kappa4_part,
                    entry.series_tail
                );
            }
        }
        println!();
    }
}

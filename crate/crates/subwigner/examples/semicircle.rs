//! Sample one Wigner matrix, extract an overlapping pair of principal
//! submatrices, and compare empirical spectral moments with the
//! variance-gamma semicircle moments (Catalan numbers).
//!
//! Run with: cargo run --release --example semicircle

use subwigner::chebfn::semicircle_moment;
use subwigner::ensemble::{realize_index_family, sample_wigner, EntryLaw, IndexSetSpec};
use subwigner::spectra::{submatrix, symmetric_eigenvalues};

fn main() {
    let n = 1024;
    let law = EntryLaw::gaussian(2.0);
    let sample = sample_wigner(n, &law, 2718, 0).expect("samples");
    let family = realize_index_family(
        &[
            IndexSetSpec::Prefix { gamma: 0.5 },
            IndexSetSpec::Window { a: 0.25, b: 0.75 },
        ],
        n,
    )
    .expect("valid family");

    for (l, set) in family.sets.iter().enumerate() {
        let gamma = family.gamma_l[l];
        let block = submatrix(&sample, set).expect("in range");
        let spectrum = symmetric_eigenvalues(&block).expect("converges");
        let m = spectrum.eigenvalues.len() as f64;
        println!(
            "submatrix {l}: {} x {}, spectrum in [{:.4}, {:.4}], support edge 2*sqrt(gamma) = {:.4}",
            set.len(),
            set.len(),
            spectrum.eigenvalues.first().unwrap(),
            spectrum.eigenvalues.last().unwrap(),
            2.0 * gamma.sqrt()
        );
        println!("  moment   empirical   semicircle(gamma={gamma})");
        for p in 1..=6 {
            let empirical: f64 =
                spectrum.eigenvalues.iter().map(|x| x.powi(p as i32)).sum::<f64>() / m;
            println!(
                "  x^{p}     {empirical:+.5}    {:+.5}",
                semicircle_moment(gamma, p)
            );
        }
    }
}

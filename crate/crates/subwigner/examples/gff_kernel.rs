//! The Gaussian-free-field structure of the covariance: the log kernel
//! closed form against its defining sine series, and the contour-integral
//! route against the coefficient series.
//!
//! Run with: cargo run --release --example gff_kernel

use num_complex::Complex64;
use std::f64::consts::PI;
use subwigner::chebfn::TestFunction;
use subwigner::ensemble::OverlapGeometry;
use subwigner::theory::{
    cov_contour, cov_gaussian_series, gff_log_kernel, gff_log_kernel_series, kernel_f,
    TheoryOptions,
};

fn main() {
    let (gl, gp) = (0.6f64, 0.8f64);
    println!("log kernel vs series at a few angle pairs:");
    for beta in [0.25, 0.5, 0.9] {
        let glp = beta * (gl * gp).sqrt();
        let mut worst = 0.0f64;
        for i in 1..40 {
            for j in 1..40 {
                let (theta, omega) = (PI * i as f64 / 40.0, PI * j as f64 / 40.0);
                let z = Complex64::from_polar(gl.sqrt(), theta);
                let w = Complex64::from_polar(gp.sqrt(), omega);
                let closed = gff_log_kernel(z, w, glp).unwrap();
                let series = gff_log_kernel_series(theta, omega, beta, 10_000) / PI;
                worst = worst.max((closed - series).abs());
            }
        }
        println!("  beta = {beta}: worst |closed - series| = {worst:.2e}");
    }
    println!();

    println!("covariance kernel F(x, y) near the origin (beta = 0.5):");
    let geom = OverlapGeometry::new(gl, gp, 0.5 * (gl * gp).sqrt());
    for x in [-0.5, 0.0, 0.5] {
        let row: Vec<String> = [-0.5, 0.0, 0.5]
            .iter()
            .map(|&y| format!("{:+.4}", kernel_f(x, y, &geom, 120).unwrap()))
            .collect();
        println!("  x = {x:+.1}: {}", row.join("  "));
    }
    println!();

    println!("contour route vs coefficient series (Gaussian-free-field part):");
    let opts = TheoryOptions::default();
    for phi in [
        TestFunction::monomial(1),
        TestFunction::monomial(3),
        TestFunction::polynomial(vec![0.0, 1.0, -0.5, 0.0, 0.25], "x - x^2/2 + x^4/4"),
    ] {
        let contour = cov_contour(&phi, &phi, &geom, &opts).unwrap();
        let series = cov_gaussian_series(&phi, &phi, &geom, 2.0, &opts)
            .unwrap()
            .gff_part;
        println!(
            "  {}: contour {contour:+.8}, series {series:+.8}, diff {:.2e}",
            phi.label,
            (contour - series).abs()
        );
    }
}

//! Run the full oracle identity suite (the same families behind the
//! `subwigner verify` subcommand) and print one line per family.
//!
//! Run with: cargo run --release --example verify_oracles

use subwigner::cli::{verify_suite, VerifyArgs};

fn main() {
    let families = verify_suite(&VerifyArgs::default());
    let mut all = true;
    for f in &families {
        println!(
            "{} {:<28} {:>5} cases, worst residual {:?}",
            if f.pass { "PASS" } else { "FAIL" },
            f.name,
            f.cases,
            f.worst_residual
        );
        all &= f.pass;
    }
    assert!(all, "oracle suite failed");
    println!("\nall identity families hold");
}

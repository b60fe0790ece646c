//! The exact combinatorial oracle at work: enumerate non-crossing pair
//! partitions, count Dyck paths by height, and evaluate the bilinear form
//! on monomials both by the closed binomial sums and by brute force.
//!
//! Run with: cargo run --example dyck_oracle

use subwigner::freeprob::{
    dyck_count_at_height, dyck_heights, enumerate_ncp, hyp_h, moment_monomial,
    moment_via_partitions, HKind, RationalGeometry,
};

fn main() {
    println!("non-crossing pair matchings of 2m letters (Catalan numbers):");
    for m in 1..=8 {
        print!("  m={m}: {}", enumerate_ncp(m).unwrap().len());
    }
    println!("\n");

    println!("matchings of 4 letters and their Dyck paths:");
    for p in enumerate_ncp(2).unwrap() {
        println!("  pairs {:?} -> heights {:?}", p.pairs, dyck_heights(&p.dyck_steps()));
    }
    println!();

    println!("Dyck paths of length 6 split by the height after step 2:");
    for j in [0usize, 2] {
        println!("  h(2) = {j}: {}", dyck_count_at_height(2, 4, j).unwrap());
    }
    println!();

    let geom = RationalGeometry::new((1, 2), (1, 3), (1, 4));
    println!("bilinear form <x^k, x^q> at densities (1/2, 1/3, overlap 1/4):");
    for (k, q) in [(1, 1), (2, 2), (2, 0), (3, 3), (4, 2)] {
        let closed = moment_monomial(k, q, &geom);
        let brute = moment_via_partitions(k, q, &geom).unwrap();
        assert_eq!(closed, brute);
        println!("  <x^{k}, x^{q}> = {closed} (closed sum == brute force)");
    }
    println!();

    println!("alternating factorial sums against their closed forms:");
    for (q, j) in [(2usize, 0usize), (2, 2), (3, 3), (10, 4), (10, 10)] {
        let (s1, c1) = hyp_h(HKind::H1, q, j);
        let (s2, c2) = hyp_h(HKind::H2, q, j);
        assert_eq!(s1, c1);
        assert_eq!(s2, c2);
        println!("  H1({q},{j}) = {s1}    H2({q},{j}) = {s2}");
    }
}

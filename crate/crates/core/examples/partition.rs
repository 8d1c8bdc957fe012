//! Splitting items into a small exact block, a concentrated block and
//! negligible leftovers.

use auctionforge::partition::{partition_items, Partition};

fn main() -> auctionforge::Result<()> {
    let (eps, delta) = (0.1, 0.05);
    // a bounded value range keeps the range ratio small
    let c = 4.0;
    let mut expected = vec![50.0, 20.0, 5.0];
    expected.extend(std::iter::repeat_n(1e-5, 2_000_000));
    expected.extend(std::iter::repeat_n(1e-12, 1000));

    let p = partition_items(&expected, c, eps, delta)?;
    println!("ellStar = {}, s = {:.3}", p.ell_star, p.s_hat);
    println!("|R| = {} (bound {:.3e})", p.r.len(), Partition::r_size_bound(c, eps, delta));
    println!("|S| = {}", p.s.len());
    println!("|T| = {}", p.t.len());
    let t_mass: f64 = p.t.iter().map(|&j| expected[j]).sum();
    println!("expected value left in T: {t_mass:.3e} <= eps * s = {:.3e}", eps * p.s_hat);
    Ok(())
}

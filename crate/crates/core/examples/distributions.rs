//! Value distributions, the law of the highest bid, and coarsening.

use auctionforge::dist::{coarsen, MaxOf, ValueDistribution};

fn main() -> auctionforge::Result<()> {
    let coin = ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5])?;
    let unif = ValueDistribution::uniform(0.5, 1.0)?;
    let expo = ValueDistribution::exponential(1.0)?;

    for (name, d) in [("coin", &coin), ("uniform", &unif), ("exponential", &expo)] {
        println!(
            "{name:12} E = {:.4}  P[X >= 1] = {:.4}  MHR = {}",
            d.expectation(),
            d.survival(1.0),
            d.check_mhr().is_mhr
        );
    }

    let max = MaxOf::iid(&coin, 2)?;
    println!("E[max of two coins] = {:.4}", max.exact_expectation().unwrap());

    let coarse = coarsen(&expo, 0.25, 0.05, 4.0)?;
    println!("exponential(1) on the 1.25-grid over [0.05, 4]:");
    for (v, p) in coarse.atoms().unwrap() {
        println!("  {v:8.4}  {p:.4}");
    }
    Ok(())
}

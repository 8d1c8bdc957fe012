//! One reserve for many i.i.d. bidders, compared with the expected top value.

use auctionforge::dist::{MaxOf, ValueDistribution};
use auctionforge::tail::iid_reserve;

fn main() -> auctionforge::Result<()> {
    let d = ValueDistribution::exponential(1.0)?;
    for m in [2u64, 10, 50, 1000] {
        let r = iid_reserve(&d, m, 0.1)?;
        // E[max of m exponentials] is the harmonic number H_m
        let h: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
        let sampled = MaxOf::iid(&d, m)?;
        println!(
            "m = {m:5}  reserve {:.4}  guarantee {:.4}  E[max] {:.4}  ratio {:.4}  (max law upper end {})",
            r.reserve,
            r.guarantee,
            h,
            r.guarantee / h,
            sampled.upper()
        );
    }
    Ok(())
}

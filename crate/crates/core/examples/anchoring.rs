//! Anchoring points and truncation intervals of the highest value.

use auctionforge::dist::{MaxOf, ValueDistribution};
use auctionforge::tail::TailProfile;

fn main() -> auctionforge::Result<()> {
    let eps = 0.1;
    for m in [1u64, 10, 100, 1000] {
        let max = MaxOf::iid(&ValueDistribution::exponential(1.0)?, m)?;
        let t = TailProfile::of(&max, eps)?;
        println!(
            "m = {m:5}  beta = {:.4}  truncate to [{:.4}, {:.4}]  (ratio {:.1})",
            t.beta, t.trunc_lo, t.trunc_hi, t.ratio
        );
    }
    Ok(())
}

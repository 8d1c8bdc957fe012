//! Best deterministic eps-DT table on floored values.

use auctionforge::dist::ValueDistribution;
use auctionforge::instance::AuctionInstance;
use auctionforge::solvers::eps_dt::{eps_dt_search, DEFAULT_TABLE_CAP};

fn main() -> auctionforge::Result<()> {
    let d = ValueDistribution::discrete(vec![1.2, 1.7, 2.9], vec![0.3, 0.4, 0.3])?;
    let inst = AuctionInstance::population(2, vec![d], 0.1, 0.05)?;
    for eps in [1.0, 0.5] {
        let r = eps_dt_search(&inst, eps, DEFAULT_TABLE_CAP)?;
        println!(
            "eps = {eps}: revenue {:.4} after {} tables, regret bound {:.2}",
            r.revenue, r.tables_searched, r.mechanism.regret_bound
        );
    }
    Ok(())
}

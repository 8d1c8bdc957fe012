//! Auditing truthful and deliberately broken rules.

use auctionforge::dist::ValueDistribution;
use auctionforge::harness::{audit, AuditConfig, AuditReport};
use auctionforge::instance::AuctionInstance;
use auctionforge::mechanism::{reserve_welfare, second_price_reserve, Mechanism};

fn main() -> auctionforge::Result<()> {
    let inst = AuctionInstance::population(
        3,
        vec![ValueDistribution::uniform(0.5, 1.0)?, ValueDistribution::exponential(2.0)?],
        0.1,
        0.05,
    )?;
    let rules = [
        reserve_welfare(1.5)?,
        second_price_reserve(vec![0.7, 0.4])?,
        Mechanism::FirstPrice,
        Mechanism::Overcharge { fee: 0.1 },
    ];
    let cfg = AuditConfig::new(2000, 9);
    let reports: Vec<AuditReport> = rules.iter().map(|m| audit(m, &inst, &cfg)).collect::<Result<_, _>>()?;
    print!("{}", AuditReport::to_csv(&reports)?);
    Ok(())
}

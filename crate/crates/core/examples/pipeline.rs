//! The full construction on a small instance and on a large population.

use auctionforge::dist::ValueDistribution;
use auctionforge::harness::{audit, AuditConfig};
use auctionforge::instance::AuctionInstance;
use auctionforge::mechanism::{build_ptas_mechanism, PipelineOptions, SolutionConcept};

fn main() -> auctionforge::Result<()> {
    let coin = ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5])?;
    let small = AuctionInstance::population(2, vec![coin.clone()], 0.1, 0.05)?;
    for concept in [SolutionConcept::Dt, SolutionConcept::Bic] {
        let opts = PipelineOptions {
            concept,
            ..Default::default()
        };
        let built = build_ptas_mechanism(&small, &opts)?;
        let report = audit(&built.mechanism, &small, &AuditConfig::new(5000, 1))?;
        println!(
            "{concept}: {} claiming {}, block objective {:.4}, audited revenue {:.4}",
            built.name,
            built.concept,
            built.objective.unwrap_or(0.0),
            report.revenue_mean
        );
    }

    let crowd = AuctionInstance::population(500, vec![coin, ValueDistribution::exponential(1.0)?], 0.1, 0.05)?;
    let opts = PipelineOptions {
        dispatch_threshold: Some(100.0),
        ..Default::default()
    };
    let built = build_ptas_mechanism(&crowd, &opts)?;
    println!("500 bidders: {}", built.to_json()?);
    Ok(())
}

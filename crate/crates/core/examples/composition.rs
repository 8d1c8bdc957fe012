//! Selling disjoint item blocks with different rules, and restricting a
//! mechanism to a subset of items.

use auctionforge::dist::ValueDistribution;
use auctionforge::mechanism::{
    combine, grand_bundle, reserve_welfare, restrict_to_subset, run_once, second_price_reserve, Block, Mechanism,
};

fn main() -> auctionforge::Result<()> {
    let combined = combine(
        vec![
            Block::new(vec![0, 1], grand_bundle(6.0)?),
            Block::new(vec![2, 3], reserve_welfare(5.0)?),
        ],
        vec![4],
        5,
    )?;
    let o = run_once(&combined, &vec![vec![3.0, 4.0, 2.0, 2.0, 9.0]])?;
    println!("combined: alloc {:?}  payment {:?}", o.alloc[0], o.payments[0]);

    // the out-of-subset item is drawn from its prior and rebated
    let priors = vec![
        vec![ValueDistribution::point(0.0)?, ValueDistribution::uniform(0.0, 3.0)?],
        vec![ValueDistribution::point(0.0)?, ValueDistribution::uniform(0.0, 3.0)?],
    ];
    let restricted = restrict_to_subset(second_price_reserve(vec![0.5, 0.5])?, 2, vec![0], priors, 42)?;
    for call in 0..3 {
        let o = restricted.run(&vec![vec![2.0], vec![1.0]], &mut restricted.rng_for_call(call))?;
        println!(
            "restricted call {call}: completion {:?}  payments {:?}",
            o.completions[0], o.payments
        );
    }
    println!("{}", Mechanism::from_json(&combined.to_json()?)?.name());
    Ok(())
}

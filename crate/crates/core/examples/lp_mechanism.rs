//! Optimal IC and BIC mechanisms for a small discrete instance via the LP.

use auctionforge::dist::ValueDistribution;
use auctionforge::instance::AuctionInstance;
use auctionforge::mechanism::{run_once, Mechanism};
use auctionforge::solvers::lp::{build_lp, solve_lp, LpConcept, RowKind, DEFAULT_VARIABLE_CAP};

fn main() -> auctionforge::Result<()> {
    let coin = ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5])?;
    let inst = AuctionInstance::population(2, vec![coin], 0.1, 0.05)?;

    for concept in [LpConcept::Ic, LpConcept::Bic] {
        let model = build_lp(&inst, concept, DEFAULT_VARIABLE_CAP)?;
        let sol = solve_lp(&model)?;
        println!(
            "{concept:?}: {} variables, {} IC rows, {} BIC rows, optimal revenue {:.6}",
            model.n_vars(),
            model.count(RowKind::Ic),
            model.count(RowKind::Bic),
            sol.objective
        );
        let mech = Mechanism::Table(sol.into_mechanism(&model));
        let o = run_once(&mech, &vec![vec![2.0], vec![1.0]])?;
        println!("  on (2, 1): alloc {:?} payments {:?}", o.alloc, o.payments);
    }

    let model = build_lp(&inst, LpConcept::Ic, DEFAULT_VARIABLE_CAP)?;
    println!("\n{}", model.export().lines().take(8).collect::<Vec<_>>().join("\n"));
    Ok(())
}

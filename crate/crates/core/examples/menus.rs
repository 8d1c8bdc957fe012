//! Bundle pricing and lottery menus for a single buyer.

use auctionforge::dist::ValueDistribution;
use auctionforge::instance::AuctionInstance;
use auctionforge::solvers::menus::{bundle_price_search, lottery_menu_search, price_grid, MenuSearchOptions};

fn main() -> auctionforge::Result<()> {
    println!("price grid on [1, 2] at eps 0.1 has {} points", price_grid(1.0, 2.0, 0.1)?.len());

    let inst = AuctionInstance::population(
        1,
        vec![
            ValueDistribution::discrete(vec![1.0, 3.0], vec![0.6, 0.4])?,
            ValueDistribution::discrete(vec![1.0, 2.5], vec![0.5, 0.5])?,
        ],
        0.1,
        0.05,
    )?;
    let opts = MenuSearchOptions::default();
    let bundles = bundle_price_search(&inst, 0.1, &opts)?;
    println!("bundle menu, revenue {:.4}:", bundles.revenue);
    for e in &bundles.menu.entries {
        println!("  {:?} at {:.4}", e.q, e.price);
    }
    let lotteries = lottery_menu_search(&inst, 0.4, 2, &opts)?;
    println!("best lottery menu within 2 entries, revenue {:.4}:", lotteries.revenue);
    for e in &lotteries.menu.entries {
        println!("  {:?} at {:.4}", e.q, e.price);
    }
    Ok(())
}

//! The three simple truthful rules on a hand-written profile.

use auctionforge::mechanism::{grand_bundle, reserve_welfare, run_once, second_price_reserve};

fn main() -> auctionforge::Result<()> {
    let bids = vec![vec![3.0, 1.0, 0.5], vec![2.0, 4.0, 0.25]];

    let rw = run_once(&reserve_welfare(6.0)?, &bids)?;
    println!("reserve_welfare(6):  alloc {:?}  payments {:?}", rw.alloc, rw.payments);

    let sp = run_once(&second_price_reserve(vec![1.0, 1.0, 1.0])?, &bids)?;
    println!("second price, r = 1: alloc {:?}  payments {:?}", sp.alloc, sp.payments);

    let gb = run_once(&grand_bundle(4.0)?, &bids[..1].to_vec())?;
    println!("grand_bundle(4) to bidder 0 alone: payment {:?}", gb.payments);
    Ok(())
}

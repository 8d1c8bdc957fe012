use crate::error::{Error, Result};
use crate::instance::Profile;

use super::{Mechanism, Outcome};

pub fn grand_bundle(reserve: f64) -> Result<Mechanism> {
    check_reserve(reserve, "grand bundle reserve")?;
    Ok(Mechanism::GrandBundle { reserve })
}

pub fn reserve_welfare(s_hat: f64) -> Result<Mechanism> {
    check_reserve(s_hat, "reserve welfare")?;
    Ok(Mechanism::ReserveWelfare { s_hat })
}

pub fn second_price_reserve(reserves: Vec<f64>) -> Result<Mechanism> {
    for (j, r) in reserves.iter().enumerate() {
        check_reserve(*r, &format!("reserve of item {j}"))?;
    }
    Ok(Mechanism::SecondPriceReserve { reserves })
}

fn check_reserve(r: f64, what: &str) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be a finite nonnegative number, got {r}")))
    }
}

pub(super) fn run_grand_bundle(reserve: f64, bids: &Profile) -> Result<Outcome> {
    if bids.len() != 1 {
        return Err(Error::invalid(format!(
            "grand bundle sells to a single bidder, got {} bidders",
            bids.len()
        )));
    }
    let n = bids[0].len();
    let mut out = Outcome::empty(1, n);
    if bids[0].iter().sum::<f64>() >= reserve {
        out.alloc[0] = vec![1.0; n];
        out.payments[0] = reserve;
    }
    Ok(out)
}

/// Index of the highest bid in column `j`, lowest index on ties.
fn winner(bids: &Profile, j: usize) -> usize {
    let mut best = 0;
    for i in 1..bids.len() {
        if bids[i][j] > bids[best][j] {
            best = i;
        }
    }
    best
}

pub(super) fn run_reserve_welfare(s_hat: f64, bids: &Profile) -> Outcome {
    let (m, n) = (bids.len(), bids[0].len());
    let mut out = Outcome::empty(m, n);
    let winners: Vec<usize> = (0..n).map(|j| winner(bids, j)).collect();
    let welfare: f64 = winners.iter().enumerate().map(|(j, &i)| bids[i][j]).sum();
    if welfare < s_hat {
        return out;
    }
    let mut own = vec![0.0; m];
    for (j, &i) in winners.iter().enumerate() {
        out.alloc[i][j] = 1.0;
        own[i] += bids[i][j];
    }
    for i in 0..m {
        out.payments[i] = s_hat - (welfare - own[i]);
    }
    out
}

/// Per-item second price with reserves, plus a flat `fee` on every bidder.
pub(super) fn run_second_price(reserves: &[f64], bids: &Profile, fee: f64) -> Outcome {
    let (m, n) = (bids.len(), bids[0].len());
    let mut out = Outcome::empty(m, n);
    for (j, &r) in reserves.iter().enumerate().take(n) {
        let w = winner(bids, j);
        if bids[w][j] < r {
            continue;
        }
        let second = (0..m).filter(|&i| i != w).map(|i| bids[i][j]).fold(0.0, f64::max);
        out.alloc[w][j] = 1.0;
        out.payments[w] += r.max(second);
    }
    for p in &mut out.payments {
        *p += fee;
    }
    out
}

pub(super) fn run_first_price(bids: &Profile) -> Outcome {
    let (m, n) = (bids.len(), bids[0].len());
    let mut out = Outcome::empty(m, n);
    for j in 0..n {
        let w = winner(bids, j);
        if bids[w][j] > 0.0 {
            out.alloc[w][j] = 1.0;
            out.payments[w] += bids[w][j];
        }
    }
    out
}

//! Finite type spaces for all-discrete instances.
//!
//! A bidder's type is one value per item, so the type set is the product of
//! the per-item supports. Types and profiles are indexed in mixed radix with
//! the last item (resp. last bidder) varying fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AuctionInstance, Profile};

/// Snap tolerance when mapping a bid onto a support atom.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderTypes {
    /// `atoms[j]` is the ascending `(value, prob)` support of item `j`.
    pub atoms: Vec<Vec<(f64, f64)>>,
}

impl BidderTypes {
    pub fn count(&self) -> usize {
        self.atoms.iter().map(Vec::len).product()
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; self.atoms.len()];
        for j in (0..self.atoms.len()).rev() {
            d[j] = idx % self.atoms[j].len();
            idx /= self.atoms[j].len();
        }
        d
    }

    pub fn values(&self, idx: usize) -> Vec<f64> {
        self.digits(idx).iter().enumerate().map(|(j, &k)| self.atoms[j][k].0).collect()
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.digits(idx).iter().enumerate().map(|(j, &k)| self.atoms[j][k].1).product()
    }

    /// Index of the type obtained by snapping each coordinate down to the
    /// largest support atom not above it; values below the smallest atom map
    /// to the smallest atom.
    pub fn snap(&self, bid: &[f64]) -> usize {
        let mut idx = 0;
        for (j, atoms) in self.atoms.iter().enumerate() {
            let b = bid[j];
            let k = atoms
                .iter()
                .rposition(|&(v, _)| v <= b + SNAP * v.abs().max(1.0))
                .unwrap_or(0);
            idx = idx * atoms.len() + k;
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSpace {
    pub bidders: Vec<BidderTypes>,
}

impl TypeSpace {
    pub fn from_instance(instance: &AuctionInstance) -> Result<Self> {
        let mut bidders = Vec::with_capacity(instance.bidders);
        for i in 0..instance.bidders {
            let mut atoms = Vec::with_capacity(instance.n_items());
            for j in 0..instance.n_items() {
                atoms.push(instance.dist(i, j).atoms().ok_or_else(|| {
                    Error::invalid(format!("marginal of bidder {i}, item {j} is not discrete"))
                })?);
            }
            bidders.push(BidderTypes { atoms });
        }
        Ok(TypeSpace { bidders })
    }

    pub fn n_bidders(&self) -> usize {
        self.bidders.len()
    }

    pub fn n_items(&self) -> usize {
        self.bidders.first().map_or(0, |b| b.atoms.len())
    }

    /// Number of profiles as a float, so huge spaces can be reported without
    /// overflowing.
    pub fn profile_count_f64(&self) -> f64 {
        self.bidders
            .iter()
            .flat_map(|b| b.atoms.iter())
            .map(|a| a.len() as f64)
            .product()
    }

    pub fn profile_count(&self) -> usize {
        self.bidders.iter().map(BidderTypes::count).product()
    }

    /// Per-bidder type indices of profile `p`.
    pub fn profile_types(&self, mut p: usize) -> Vec<usize> {
        let mut t = vec![0; self.bidders.len()];
        for i in (0..self.bidders.len()).rev() {
            let c = self.bidders[i].count();
            t[i] = p % c;
            p /= c;
        }
        t
    }

    pub fn profile_index(&self, types: &[usize]) -> usize {
        types
            .iter()
            .zip(&self.bidders)
            .fold(0, |acc, (&t, b)| acc * b.count() + t)
    }

    /// Profile `p` with bidder `i`'s type replaced by `t`.
    pub fn with_type(&self, p: usize, bidder: usize, t: usize) -> usize {
        let mut types = self.profile_types(p);
        types[bidder] = t;
        self.profile_index(&types)
    }

    pub fn profile_prob(&self, p: usize) -> f64 {
        self.profile_types(p)
            .iter()
            .zip(&self.bidders)
            .map(|(&t, b)| b.prob(t))
            .product()
    }

    pub fn profile_values(&self, p: usize) -> Profile {
        self.profile_types(p)
            .iter()
            .zip(&self.bidders)
            .map(|(&t, b)| b.values(t))
            .collect()
    }

    pub fn snap_profile(&self, bids: &Profile) -> usize {
        let types: Vec<usize> = bids.iter().zip(&self.bidders).map(|(b, bt)| bt.snap(b)).collect();
        self.profile_index(&types)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ValueDistribution;
    use approx::assert_abs_diff_eq;

    fn space() -> TypeSpace {
        let a = ValueDistribution::discrete(vec![1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let b = ValueDistribution::discrete(vec![0.5, 3.0, 4.0], vec![0.2, 0.3, 0.5]).unwrap();
        let inst = AuctionInstance::general(vec![vec![a.clone(), a], vec![b.clone(), b]], 0.1, 0.05).unwrap();
        TypeSpace::from_instance(&inst).unwrap()
    }

    #[test]
    fn indexing_round_trips() {
        let ts = space();
        assert_eq!(ts.bidders[0].count(), 6);
        assert_eq!(ts.profile_count(), 36);
        for p in 0..ts.profile_count() {
            assert_eq!(ts.profile_index(&ts.profile_types(p)), p);
            assert_eq!(ts.snap_profile(&ts.profile_values(p)), p);
        }
        let total: f64 = (0..ts.profile_count()).map(|p| ts.profile_prob(p)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn snapping_rounds_down_and_clamps_at_the_bottom() {
        let ts = space();
        let b = &ts.bidders[0];
        assert_eq!(b.values(b.snap(&[1.9, 3.99])), vec![1.0, 3.0]);
        assert_eq!(b.values(b.snap(&[0.0, 0.0])), vec![1.0, 0.5]);
        assert_eq!(b.values(b.snap(&[9.0, 9.0])), vec![2.0, 4.0]);
    }
}

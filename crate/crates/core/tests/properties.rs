use auctionforge::dist::ValueDistribution;
use auctionforge::harness::{audit, AuditConfig};
use auctionforge::instance::AuctionInstance;
use auctionforge::mechanism::{BuiltMechanism, Mechanism};
use auctionforge::solvers::lp::{build_lp, solve_lp, LpConcept, DEFAULT_VARIABLE_CAP};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = ValueDistribution> {
    prop::collection::btree_set(1u32..40, 1..=3).prop_flat_map(|vals| {
        let k = vals.len();
        let support: Vec<f64> = vals.into_iter().map(|v| v as f64 / 8.0).collect();
        prop::collection::vec(1u32..10, k).prop_map(move |w| {
            let total: u32 = w.iter().sum();
            let mut probs: Vec<f64> = w.iter().map(|x| *x as f64 / total as f64).collect();
            let head: f64 = probs[..k - 1].iter().sum();
            probs[k - 1] = 1.0 - head;
            ValueDistribution::discrete(support.clone(), probs).unwrap()
        })
    })
}

fn lp_objective(inst: &AuctionInstance, concept: LpConcept) -> f64 {
    solve_lp(&build_lp(inst, concept, DEFAULT_VARIABLE_CAP).unwrap()).unwrap().objective
}

/// Exact revenue of selling everything as one bundle at `price` to one bidder.
fn bundle_revenue(items: &[ValueDistribution], price: f64) -> f64 {
    let mut sums = vec![(0.0, 1.0)];
    for d in items {
        sums = sums
            .into_iter()
            .flat_map(|(s, w)| d.atoms().unwrap().into_iter().map(move |(v, p)| (s + v, w * p)))
            .collect();
    }
    price * sums.iter().filter(|(s, _)| *s >= price).map(|(_, w)| w).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lp_beats_every_grand_bundle_price(a in law(), b in law()) {
        let items = vec![a, b];
        let inst = AuctionInstance::population(1, items.clone(), 0.1, 0.05).unwrap();
        let lp = lp_objective(&inst, LpConcept::Ic);
        let mut prices: Vec<f64> = Vec::new();
        for (x, _) in items[0].atoms().unwrap() {
            for (y, _) in items[1].atoms().unwrap() {
                prices.push(x + y);
            }
        }
        for p in prices {
            prop_assert!(lp >= bundle_revenue(&items, p) - 1e-7);
        }
    }

    #[test]
    fn interim_constraints_relax_ex_post_ones(a in law(), b in law()) {
        let inst = AuctionInstance::general(vec![vec![a], vec![b]], 0.1, 0.05).unwrap();
        let ic = lp_objective(&inst, LpConcept::Ic);
        let bic = lp_objective(&inst, LpConcept::Bic);
        prop_assert!(bic >= ic - 1e-7, "bic {bic} < ic {ic}");
    }

    #[test]
    fn ic_lp_mechanisms_pass_their_own_audit(a in law(), b in law(), seed in 0u64..1000) {
        let inst = AuctionInstance::population(2, vec![a, b], 0.1, 0.05).unwrap();
        let model = build_lp(&inst, LpConcept::Ic, DEFAULT_VARIABLE_CAP).unwrap();
        let mech = Mechanism::Table(solve_lp(&model).unwrap().into_mechanism(&model));
        let report = audit(&mech, &inst, &AuditConfig::new(300, seed)).unwrap();
        prop_assert_eq!(report.ir_violations.violations, 0);
        prop_assert!(!report.alarm, "regret {}", report.regret.max_observed);
    }
}

#[test]
fn saved_mechanisms_replay_identically() {
    let coin = ValueDistribution::discrete(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
    let inst = AuctionInstance::population(2, vec![coin.clone(), coin], 0.1, 0.05).unwrap();
    let built = auctionforge::mechanism::build_ptas_mechanism(&inst, &Default::default()).unwrap();
    let back = BuiltMechanism::from_json(&built.to_json().unwrap()).unwrap();
    let cfg = AuditConfig::new(500, 3);
    assert_eq!(audit(&built.mechanism, &inst, &cfg).unwrap(), audit(&back.mechanism, &inst, &cfg).unwrap());
}

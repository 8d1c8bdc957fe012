//! Acceptance checks. Each test prints one PASS/FAIL line straight to stderr
//! (bypassing the test harness capture) and then asserts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use auctionforge::dist::ValueDistribution;
use auctionforge::harness::{
    audit, check_concentration, concentration_epsilon, estimate, replicates, AuditConfig,
};
use auctionforge::instance::AuctionInstance;
use auctionforge::mechanism::{
    grand_bundle, reserve_welfare, restrict_to_subset, second_price_reserve, Mechanism,
};
use auctionforge::partition::{partition_items, Partition};
use auctionforge::solvers::lp::{build_lp, solve_lp, LpConcept, DEFAULT_VARIABLE_CAP};
use auctionforge::solvers::menus::{bundle_price_search, MenuSearchOptions};
use auctionforge::tail::{iid_reserve, iid_reserve_candidates};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, label: &str, pass: bool, detail: &str, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance {id}/8] {label}: {verdict} ({detail}; {:.1}s)",
        started.elapsed().as_secs_f64()
    );
}

fn discrete(support: Vec<f64>, probs: Vec<f64>) -> ValueDistribution {
    ValueDistribution::discrete(support, probs).unwrap()
}

fn random_discrete(rng: &mut ChaCha8Rng, atoms: usize, lo: f64, hi: f64) -> ValueDistribution {
    let mut support: Vec<f64> = Vec::new();
    while support.len() < atoms {
        let v = (rng.random_range(lo..hi) * 100.0).round() / 100.0;
        if !support.contains(&v) {
            support.push(v);
        }
    }
    support.sort_by(f64::total_cmp);
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let head: f64 = probs[..atoms - 1].iter().sum();
    probs[atoms - 1] = 1.0 - head;
    discrete(support, probs)
}

// ---------------------------------------------------------------------------

const RW_SAMPLES: usize = 10_000;
const RW_DELTA: f64 = 0.01;
const RW_EPS_TARGET: f64 = 0.1;

#[test]
fn reserve_welfare_revenue_bound() {
    let started = Instant::now();
    let (k, n) = (2usize, 100usize);
    let u = ValueDistribution::uniform(0.5, 1.0).unwrap();
    let inst = AuctionInstance::population(k, vec![u; n], 0.1, RW_DELTA).unwrap();
    // E[max of two uniforms on [a, b]] = a + 2(b - a)/3
    let s_star = n as f64 * (0.5 + 2.0 * 0.5 / 3.0);
    // Hoeffding for a sum of n terms in [0.5, 1] at deviation eps * s*
    let hoeffding = 2.0 * (-2.0 * (RW_EPS_TARGET * s_star).powi(2) / (n as f64 * 0.25)).exp();

    // measure (eps, delta) on the welfare samples
    let probe = replicates(&reserve_welfare(0.0).unwrap(), &inst, RW_SAMPLES, 1).unwrap();
    let welfare: Vec<f64> = probe.iter().map(|r| r.welfare).collect();
    let eps = concentration_epsilon(&welfare, RW_DELTA).unwrap();
    let conc = check_concentration(&welfare, eps, RW_DELTA).unwrap();

    let mech = reserve_welfare((1.0 - eps) * s_star).unwrap();
    let est = estimate(&mech, &inst, RW_SAMPLES, 2).unwrap();
    let bound = (1.0 - k as f64 * eps - k as f64 * RW_DELTA) * s_star;
    let pass = conc.passed
        && eps <= RW_EPS_TARGET
        && hoeffding <= RW_DELTA
        && est.revenue_mean >= bound - 3.0 * est.revenue_std_err;
    report(
        1,
        "reserve-welfare revenue bound",
        pass,
        &format!(
            "s* = {s_star:.4}, measured eps = {eps:.4} at delta = {RW_DELTA} (Hoeffding delta {hoeffding:.2e}), revenue {:.4} +/- {:.4} vs bound {bound:.4}",
            est.revenue_mean, est.revenue_std_err
        ),
        started,
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

const AUDIT_SAMPLES: usize = 10_000;
const DT_TOL: f64 = 1e-9;

#[test]
fn truthfulness_and_ir_audits() {
    let started = Instant::now();
    let coin = discrete(vec![1.0, 2.0], vec![0.5, 0.5]);
    let multi = AuctionInstance::population(
        3,
        vec![
            coin.clone(),
            ValueDistribution::uniform(0.5, 1.5).unwrap(),
            ValueDistribution::exponential(1.5).unwrap(),
            discrete(vec![0.0, 1.0, 3.0], vec![0.3, 0.5, 0.2]),
        ],
        0.1,
        0.05,
    )
    .unwrap();
    let single = AuctionInstance::population(
        1,
        vec![coin.clone(), ValueDistribution::uniform(0.0, 2.0).unwrap(), discrete(vec![0.5, 2.0], vec![0.7, 0.3])],
        0.1,
        0.05,
    )
    .unwrap();
    let cases: Vec<(&str, Mechanism, &AuctionInstance)> = vec![
        ("reserve_welfare", reserve_welfare(4.0).unwrap(), &multi),
        ("grand_bundle", grand_bundle(3.0).unwrap(), &single),
        ("second_price_reserve", second_price_reserve(vec![1.5, 0.9, 0.5, 1.0]).unwrap(), &multi),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, mech, inst) in &cases {
        let r = audit(mech, inst, &AuditConfig::new(AUDIT_SAMPLES, 17)).unwrap();
        let ok = r.regret.max_observed <= DT_TOL && r.ir_violations.violations == 0 && !r.alarm;
        pass &= ok;
        details.push(format!(
            "{name} regret {:.1e} ir {}",
            r.regret.max_observed, r.ir_violations.violations
        ));
    }
    for mech in [Mechanism::FirstPrice, Mechanism::Overcharge { fee: 0.25 }] {
        let r = audit(&mech, &multi, &AuditConfig::new(AUDIT_SAMPLES, 17)).unwrap();
        pass &= r.alarm;
        details.push(format!(
            "{} flagged={} (regret {:.2e}, ir {})",
            mech.name(),
            r.alarm,
            r.regret.max_observed,
            r.ir_violations.violations
        ));
    }
    report(2, "truthfulness and IR audits", pass, &details.join(", "), started);
    assert!(pass);
}

// ---------------------------------------------------------------------------

const LP_ORACLE_TOL: f64 = 1e-4;
const ORACLE_STEP: f64 = 1e-5;

/// Best single posted price or single lottery `(q, price)` on a fine grid.
fn posted_price_oracle(d: &ValueDistribution) -> f64 {
    let atoms = d.atoms().unwrap();
    let top = atoms.iter().map(|a| a.0).fold(0.0, f64::max);
    let steps = (top / ORACLE_STEP).ceil() as usize + 1;
    let sell_prob = |t: f64| -> f64 { atoms.iter().filter(|(v, _)| *v >= t).map(|(_, p)| p).sum() };
    let mut best: f64 = 0.0;
    for k in 0..=steps {
        let p = k as f64 * ORACLE_STEP;
        best = best.max(p * sell_prob(p));
    }
    // a lottery (q, price) sells to types with q v >= price and earns price
    for qk in 1..=10 {
        let q = qk as f64 / 10.0;
        for k in 0..=steps {
            let price = q * k as f64 * ORACLE_STEP;
            best = best.max(price * sell_prob(price / q - 1e-12));
        }
    }
    best
}

/// Two bidders with values {1, 2} at 1/2 each: brute force over allocation
/// tables on a grid. For an interim rule `Q_L <= Q_H` the best BIC payments
/// bind low-type IR and high-type IC, giving `P_L = Q_L`, `P_H = 2 Q_H - Q_L`;
/// ex-post IR never binds because `P_H <= 2 Q_H`.
fn two_coin_bic_oracle() -> f64 {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut pairs = Vec::new();
    for &a in &grid {
        for &b in &grid {
            if a + b <= 1.0 + 1e-12 {
                pairs.push((a, b));
            }
        }
    }
    let mut best: f64 = 0.0;
    // profiles (low, low), (low, high), (high, low), (high, high)
    for &ll in &pairs {
        for &lh in &pairs {
            for &hl in &pairs {
                for &hh in &pairs {
                    // bidder 0: low in ll/lh, high in hl/hh
                    let q0 = (0.5 * (ll.0 + lh.0), 0.5 * (hl.0 + hh.0));
                    let q1 = (0.5 * (ll.1 + hl.1), 0.5 * (lh.1 + hh.1));
                    if q0.0 > q0.1 + 1e-12 || q1.0 > q1.1 + 1e-12 {
                        continue;
                    }
                    let rev = |q: (f64, f64)| 0.5 * q.0 + 0.5 * (2.0 * q.1 - q.0);
                    best = best.max(rev(q0) + rev(q1));
                }
            }
        }
    }
    best
}

#[test]
fn lp_matches_brute_force_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let atoms = rng.random_range(1..=4);
        let d = random_discrete(&mut rng, atoms, 0.5, 5.0);
        let inst = AuctionInstance::population(1, vec![d.clone()], 0.1, 0.05).unwrap();
        let lp = solve_lp(&build_lp(&inst, LpConcept::Ic, DEFAULT_VARIABLE_CAP).unwrap()).unwrap();
        worst = worst.max((lp.objective - posted_price_oracle(&d)).abs());
    }
    let coin = discrete(vec![1.0, 2.0], vec![0.5, 0.5]);
    let two = AuctionInstance::population(2, vec![coin], 0.1, 0.05).unwrap();
    let bic = solve_lp(&build_lp(&two, LpConcept::Bic, DEFAULT_VARIABLE_CAP).unwrap()).unwrap();
    let oracle = two_coin_bic_oracle();
    let pass = worst <= LP_ORACLE_TOL && bic.objective >= 1.5 - 1e-9 && (bic.objective - oracle).abs() <= LP_ORACLE_TOL;
    report(
        3,
        "LP oracle equivalence",
        pass,
        &format!(
            "single-item IC worst gap {worst:.2e}; two-bidder BIC {:.6} vs oracle {oracle:.6}",
            bic.objective
        ),
        started,
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

const PARTITION_INSTANCES: usize = 1000;
const CONCENTRATION_DRAWS: usize = 2000;

/// A group of `count` i.i.d. copies of `law`.
struct ItemClass {
    law: ValueDistribution,
    count: usize,
}

fn support_ratio(d: &ValueDistribution) -> f64 {
    let (a, b) = d.support_range();
    b / a
}

fn random_partition_instance(rng: &mut ChaCha8Rng) -> (Vec<ItemClass>, f64, f64) {
    let eps = [0.1, 0.15, 0.2][rng.random_range(0..3)];
    let delta = [0.01, 0.05, 0.1][rng.random_range(0..3)];
    let spread = rng.random_range(1.2..4.0);
    let mut classes = Vec::new();
    // atoms at scale * (1 + u (spread - 1)) without rounding, so tiny scales work
    let law = |rng: &mut ChaCha8Rng, scale: f64| {
        let atoms = rng.random_range(2..=3);
        let mut support: Vec<f64> = (0..atoms).map(|_| scale * rng.random_range(1.0..spread)).collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let k = support.len();
        discrete(support, vec![1.0 / k as f64; k])
    };
    for _ in 0..rng.random_range(1..=8) {
        let scale = 10f64.powf(rng.random_range(0.0..2.0));
        classes.push(ItemClass {
            law: law(rng, scale),
            count: 1,
        });
    }
    for _ in 0..rng.random_range(0..=3) {
        let scale = 10f64.powf(rng.random_range(-4.0..-1.0));
        let count = if rng.random_bool(0.5) {
            rng.random_range(50_000..300_000)
        } else {
            rng.random_range(1..2000)
        };
        classes.push(ItemClass {
            law: law(rng, scale),
            count,
        });
    }
    if rng.random_bool(0.5) {
        classes.push(ItemClass {
            law: law(rng, 1e-12),
            count: rng.random_range(1..100),
        });
    }
    (classes, eps, delta)
}

#[test]
fn partition_guarantees() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut r_ok, mut r_doubled_ok, mut t_ok, mut s_ok, mut s_checked) = (0, 0, 0, 0, 0);
    let mut worst_r_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    for inst_id in 0..PARTITION_INSTANCES {
        let (classes, eps, delta) = random_partition_instance(&mut rng);
        let mut expected = Vec::new();
        let mut owner = Vec::new();
        for (k, class) in classes.iter().enumerate() {
            expected.extend(std::iter::repeat_n(class.law.expectation(), class.count));
            owner.extend(std::iter::repeat_n(k, class.count));
        }
        let c = classes.iter().map(|cl| support_ratio(&cl.law)).fold(1.0, f64::max);
        let p = partition_items(&expected, c, eps, delta).unwrap();
        let s: f64 = expected.iter().sum();

        let r_bound = Partition::r_size_bound(c, eps, delta);
        worst_r_ratio = worst_r_ratio.max(p.r.len() as f64 / r_bound);
        // an integer threshold rounded up can only admit buckets up to 2^l* <= 2 * bound
        if p.r.len() as f64 <= 2.0 * r_bound {
            r_doubled_ok += 1;
        }
        if p.r.len() as f64 <= r_bound {
            r_ok += 1;
        } else {
            failures.push(format!("instance {inst_id}: |R| = {} > {r_bound:.1}", p.r.len()));
        }
        let t_mass: f64 = p.t.iter().map(|&j| expected[j]).sum();
        if t_mass <= eps * s + 1e-9 {
            t_ok += 1;
        } else {
            failures.push(format!("instance {inst_id}: T mass {t_mass} > {}", eps * s));
        }
        if !p.s.is_empty() {
            s_checked += 1;
            let mut per_class = vec![0u64; classes.len()];
            for &j in &p.s {
                per_class[owner[j]] += 1;
            }
            let mut draw_rng = ChaCha8Rng::seed_from_u64(inst_id as u64);
            let sums: Vec<f64> = (0..CONCENTRATION_DRAWS)
                .map(|_| {
                    per_class
                        .iter()
                        .zip(&classes)
                        .map(|(&cnt, cl)| cl.law.sample_iid_sum(cnt, &mut draw_rng))
                        .sum()
                })
                .collect();
            let conc = check_concentration(&sums, eps, delta).unwrap();
            if conc.passed {
                s_ok += 1;
            } else {
                failures.push(format!(
                    "instance {inst_id}: S fraction {} at eps {eps}, delta {delta}",
                    conc.empirical_fraction
                ));
            }
        }
    }
    let pass = failures.is_empty() && s_checked > 0;
    report(
        4,
        "partition guarantees",
        pass,
        &format!(
            "{PARTITION_INSTANCES} instances: |R| bound {r_ok} (twice the bound {r_doubled_ok}), T mass {t_ok}, S concentrated {s_ok}/{s_checked}; max |R|/bound {worst_r_ratio:.3}{}",
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
        started,
    );
    assert_eq!(r_doubled_ok, PARTITION_INSTANCES, "R exceeded twice its bound");
    assert!(pass);
}

// ---------------------------------------------------------------------------

const RESTRICT_SAMPLES: usize = 20_000;

fn exact_expected_max(inst: &AuctionInstance, item: usize) -> f64 {
    // E[max] = sum over support points v of v * (P[max <= v] - P[max < v])
    let mut points: Vec<f64> = (0..inst.bidders)
        .flat_map(|i| inst.dist(i, item).atoms().unwrap())
        .map(|a| a.0)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let cdf = |x: f64, strict: bool| -> f64 {
        (0..inst.bidders)
            .map(|i| {
                inst.dist(i, item)
                    .atoms()
                    .unwrap()
                    .iter()
                    .filter(|(v, _)| if strict { *v < x } else { *v <= x })
                    .map(|(_, p)| p)
                    .sum::<f64>()
            })
            .product()
    };
    points.iter().map(|&v| v * (cdf(v, false) - cdf(v, true))).sum()
}

#[test]
fn subset_restriction_keeps_lp_revenue() {
    let started = Instant::now();
    let coin = discrete(vec![1.0, 2.0], vec![0.5, 0.5]);
    let instances = vec![
        AuctionInstance::population(2, vec![coin.clone(), discrete(vec![0.5, 3.0], vec![0.7, 0.3])], 0.1, 0.05).unwrap(),
        AuctionInstance::population(1, vec![coin.clone(), discrete(vec![1.0, 4.0], vec![0.5, 0.5]), coin.clone()], 0.1, 0.05)
            .unwrap(),
        AuctionInstance::general(
            vec![
                vec![discrete(vec![1.0, 3.0], vec![0.6, 0.4]), discrete(vec![2.0], vec![1.0])],
                vec![coin.clone(), discrete(vec![0.0, 2.5], vec![0.5, 0.5])],
            ],
            0.1,
            0.05,
        )
        .unwrap(),
        AuctionInstance::population(3, vec![coin.clone(), discrete(vec![1.0, 1.5], vec![0.4, 0.6])], 0.1, 0.05).unwrap(),
        AuctionInstance::population(1, vec![discrete(vec![0.5, 1.0, 2.0], vec![0.3, 0.4, 0.3]); 3], 0.1, 0.05).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checks = 0;
    let mut worst_margin = f64::INFINITY;
    let mut pass = true;
    for (k, inst) in instances.iter().enumerate() {
        let n = inst.n_items();
        let model = build_lp(inst, LpConcept::Bic, DEFAULT_VARIABLE_CAP).unwrap();
        let sol = solve_lp(&model).unwrap();
        let inner = Mechanism::Table(sol.into_mechanism(&model));
        for round in 0..3 {
            let mut subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if subset.is_empty() {
                subset.push(rng.random_range(0..n));
            }
            let restricted =
                restrict_to_subset(inner.clone(), n, subset.clone(), inst.priors(), 1000 + round).unwrap();
            let sub_inst = inst.restrict_items(&subset);
            let est = estimate(&restricted, &sub_inst, RESTRICT_SAMPLES, (10 * k + round as usize) as u64).unwrap();
            let lost: f64 = (0..n).filter(|j| !subset.contains(j)).map(|j| exact_expected_max(inst, j)).sum();
            let bound = sol.objective - lost - 3.0 * est.revenue_std_err;
            worst_margin = worst_margin.min(est.revenue_mean - bound);
            pass &= est.revenue_mean >= bound;
            checks += 1;
        }
    }
    report(
        5,
        "subset restriction inequality",
        pass,
        &format!("{checks} (instance, subset) pairs, smallest margin over the bound {worst_margin:.4}"),
        started,
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

const IID_BIDDERS: u64 = 50;
const IID_RATIO_TARGET: f64 = 0.85;

#[test]
fn iid_reserve_guarantee() {
    let started = Instant::now();
    let d = ValueDistribution::exponential(1.0).unwrap();
    let m = IID_BIDDERS;
    let r = iid_reserve(&d, m, 0.1).unwrap();
    // closed forms: P[max >= t] = 1 - (1 - e^{-t})^m and E[max] = H_m
    let tail = |t: f64| 1.0 - (1.0 - (-t).exp()).powi(m as i32);
    let e_max: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let identity = (tail(r.reserve) * r.reserve - r.guarantee).abs() <= 1e-12;
    let dominance = iid_reserve_candidates(&d, m, 0.1)
        .unwrap()
        .iter()
        .all(|&t| t * tail(t) <= r.guarantee + 1e-12);
    // best single reserve over a fine scan, for reference
    let best_any = (1..200_000).map(|k| k as f64 * 1e-4).map(|t| t * tail(t)).fold(0.0, f64::max);
    let ratio = r.guarantee / e_max;
    let pass = identity && dominance && ratio >= IID_RATIO_TARGET;
    report(
        6,
        "i.i.d. reserve guarantee",
        pass,
        &format!(
            "m = {m}, reserve {:.4}, guarantee {:.4}, E[max] {e_max:.4}, ratio {ratio:.4} (target {IID_RATIO_TARGET}), \
             best reserve on a fine scan reaches {:.4}; identity {identity}, grid dominance {dominance}",
            r.reserve,
            r.guarantee,
            best_any / e_max
        ),
        started,
    );
    assert!(identity && dominance, "objective identity or grid dominance failed");
    assert!(ratio >= IID_RATIO_TARGET, "guarantee / E[max] = {ratio:.4} < {IID_RATIO_TARGET}");
}

// ---------------------------------------------------------------------------

const GRID_EPS: f64 = 0.1;

/// Exact revenue of bundle prices `p = [p1, p2, p12]` with seller-favorable ties.
fn menu_revenue(types: &[([f64; 3], f64)], p: &[f64; 3]) -> f64 {
    types
        .iter()
        .map(|(v, w)| {
            let (mut bu, mut bp) = (0.0, 0.0);
            for c in 0..3 {
                let u = v[c] - p[c];
                if u > bu + 1e-12 || (u >= bu - 1e-12 && p[c] > bp) {
                    bu = u;
                    bp = p[c];
                }
            }
            w * bp
        })
        .sum()
}

/// Optimal revenue over all real bundle prices. The optimum sits at a
/// vertex of the arrangement of indifference planes, so every vertex is
/// tried; the result bounds the optimum of any finer price grid.
fn continuous_bundle_optimum(types: &[([f64; 3], f64)]) -> f64 {
    let big = types.iter().map(|(v, _)| v[2]).fold(0.0, f64::max) + 1.0;
    // planes a . p = b
    let mut planes: Vec<([f64; 3], f64)> = Vec::new();
    for c in 0..3 {
        let mut e = [0.0; 3];
        e[c] = 1.0;
        planes.push((e, 0.0));
        planes.push((e, big));
        for (v, _) in types {
            planes.push((e, v[c]));
        }
        for c2 in c + 1..3 {
            let mut a = [0.0; 3];
            a[c] = 1.0;
            a[c2] = -1.0;
            for (v, _) in types {
                planes.push((a, v[c] - v[c2]));
            }
        }
    }
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let mut best: f64 = 0.0;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let a = [planes[i].0, planes[j].0, planes[k].0];
                let b = [planes[i].1, planes[j].1, planes[k].1];
                let d = det(a);
                if d.abs() < 1e-12 {
                    continue;
                }
                // Cramer's rule
                let mut p = [0.0; 3];
                for col in 0..3 {
                    let mut m = a;
                    for row in 0..3 {
                        m[row][col] = b[row];
                    }
                    p[col] = det(m) / d;
                }
                if p.iter().all(|x| *x >= -1e-9 && *x <= big + 1e-9) {
                    best = best.max(menu_revenue(types, &p));
                }
            }
        }
    }
    best
}

#[test]
fn price_discretization_dominance() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = f64::INFINITY;
    let mut pass = true;
    for _ in 0..20 {
        let a1 = rng.random_range(2..=3);
        let a2 = rng.random_range(2..=3);
        let d1 = random_discrete(&mut rng, a1, 0.5, 5.0);
        let d2 = random_discrete(&mut rng, a2, 0.5, 5.0);
        let mut types = Vec::new();
        for (v1, p1) in d1.atoms().unwrap() {
            for (v2, p2) in d2.atoms().unwrap() {
                types.push(([v1, v2, v1 + v2], p1 * p2));
            }
        }
        let inst = AuctionInstance::population(1, vec![d1, d2], GRID_EPS, 0.05).unwrap();
        let found = bundle_price_search(&inst, GRID_EPS, &MenuSearchOptions::default()).unwrap();
        let optimum = continuous_bundle_optimum(&types);
        let ratio = found.revenue / optimum;
        worst = worst.min(ratio);
        pass &= found.exact_evaluation && found.revenue >= (1.0 - 2.0 * GRID_EPS) * optimum;
    }
    report(
        7,
        "price discretization dominance",
        pass,
        &format!("20 instances, worst revenue / continuous optimum {worst:.4} (need >= {:.2})", 1.0 - 2.0 * GRID_EPS),
        started,
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run_cli(threads: &str, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_auctionforge"))
        .env("AUCTIONFORGE_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn reports_are_reproducible_across_thread_counts() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let coin = data("coin_pair.json");
    let mixed = data("mixed_three.json");
    let crowd = data("crowd.json");
    let (coin, mixed, crowd) = (coin.to_str().unwrap(), mixed.to_str().unwrap(), crowd.to_str().unwrap());
    let mech = dir.path().join("mech.json");
    let mech = mech.to_str().unwrap();

    // build the mechanism audited below once
    let (code, err) = run_cli("1", &["build", "--instance", coin, "--out", mech]);
    assert_eq!(code, 0, "{err}");

    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("partition", vec!["partition", "--instance", mixed, "--samples", "5000"]),
        ("build", vec!["build", "--instance", coin, "--concept", "dt"]),
        ("build-dispatch", vec!["build", "--instance", crowd, "--dispatch-threshold", "100"]),
        ("audit", vec!["audit", "--instance", coin, "--mechanism", mech, "--samples", "3000"]),
        ("lp-export", vec!["lp-export", "--instance", coin]),
        ("sweep", vec!["sweep", "--instance", crowd, "--epsilons", "0.05,0.1", "--dispatch-threshold", "100", "--samples", "300"]),
    ];
    let mut mismatched = Vec::new();
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "4"] {
            let path = dir.path().join(format!("{name}-{threads}-{}.json", outputs.len()));
            let mut full = args.clone();
            full.extend(["--seed", "12345", "--out", path.to_str().unwrap()]);
            let (code, err) = run_cli(threads, &full);
            assert_eq!(code, 0, "{name}: {err}");
            outputs.push(std::fs::read(&path).unwrap());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(*name);
        }
    }
    let pass = mismatched.is_empty();
    report(
        8,
        "reproducibility",
        pass,
        &format!(
            "{} commands x threads {{1, 4, 4}}, mismatches: {:?}",
            commands.len(),
            mismatched
        ),
        started,
    );
    assert!(pass);
}

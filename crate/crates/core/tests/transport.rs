use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::Signed;
use proptest::prelude::*;

use starhub_core::rounding::{class_block_masses, class_joint_probability, classify_hubs, HubClassing};
use starhub_core::transport::{
    build_hat_matrix, couple_from_marginals, is_monge, is_monge_under, northwest_corner, nwcr, transport_optimal,
    TransportInstance, TransportPlan,
};

type Q = Ratio<i128>;

/// Integer weights scaled to a stochastic rational vector.
fn stochastic(weights: &[u32]) -> Vec<Q> {
    let total: i128 = weights.iter().map(|&w| w as i128).sum();
    weights.iter().map(|&w| Q::new(w as i128, total)).collect()
}

fn weights(len: core::ops::Range<usize>) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..20, len).prop_filter("nonzero total", |w| w.iter().any(|&v| v > 0))
}

/// Convex function of `s_i - t_j` on sorted positions plus row/column offsets.
fn monge_cost(s: &[i64], t: &[i64], a: &[i64], b: &[i64], kind: u8) -> Vec<Vec<f64>> {
    s.iter()
        .zip(a)
        .map(|(&si, &ai)| {
            t.iter()
                .zip(b)
                .map(|(&tj, &bj)| {
                    let d = (si - tj) as f64;
                    let phi = match kind {
                        0 => d.abs(),
                        1 => d * d,
                        _ => d.max(0.0),
                    };
                    phi + (ai + bj) as f64
                })
                .collect()
        })
        .collect()
}

fn sorted(mut v: Vec<i64>) -> Vec<i64> {
    v.sort_unstable();
    v
}

/// Balanced pair of float marginals whose totals agree exactly.
fn balanced(a: &[u32], b: &[u32]) -> (Vec<f64>, Vec<f64>) {
    let (sa, sb): (u64, u64) = (a.iter().map(|&v| v as u64).sum(), b.iter().map(|&v| v as u64).sum());
    // Both scaled to the common total sa * sb, which is exact in f64 here.
    let x: Vec<f64> = a.iter().map(|&v| (v as u64 * sb) as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| (v as u64 * sa) as f64).collect();
    let t = (sa * sb) as f64;
    (x.iter().map(|v| v / t).collect(), y.iter().map(|v| v / t).collect())
}

proptest! {
    #[test]
    fn nwcr_prefix_identity_is_exact(a in weights(1..9), b in weights(1..9)) {
        let (sa, sb) = (stochastic(&a), stochastic(&b));
        let cost = vec![vec![Q::from_integer(0); sb.len()]; sa.len()];
        let t = TransportInstance::new(sa.clone(), sb.clone(), cost).unwrap();
        let plan = nwcr(&t);
        prop_assert!(plan.satisfies_prefix_identity(&sa, &sb, Q::from_integer(0)));
        prop_assert_eq!(plan.row_sums(), sa.clone());
        prop_assert_eq!(plan.col_sums(), sb.clone());
        prop_assert!(plan.positive_cells() < sa.len() + sb.len());
    }

    #[test]
    fn nwcr_is_optimal_on_monge_costs(
        a in weights(1..8),
        b in weights(1..8),
        s in prop::collection::vec(-20i64..20, 8),
        t in prop::collection::vec(-20i64..20, 8),
        off in prop::collection::vec(-5i64..5, 16),
        kind in 0u8..3,
    ) {
        let (m, n) = (a.len(), b.len());
        let s = sorted(s[..m].to_vec());
        let t = sorted(t[..n].to_vec());
        let cost = monge_cost(&s, &t, &off[..m], &off[8..8 + n], kind);
        prop_assert!(is_monge(&cost));
        let (sa, sb) = balanced(&a, &b);
        let inst = TransportInstance::new(sa, sb, cost).unwrap();
        let greedy = inst.plan_cost(&nwcr(&inst));
        let best = inst.plan_cost(&transport_optimal(&inst).unwrap());
        prop_assert!((greedy - best).abs() <= 1e-8 * best.abs().max(1.0), "{} vs {}", greedy, best);
    }

    #[test]
    fn coupling_has_exact_marginals_and_identity(a in weights(1..9), seed in 0u32..1000, ell in prop::collection::vec(0i64..50, 9)) {
        let h = a.len();
        let b: Vec<u32> = (0..h).map(|i| (seed.wrapping_mul(2654435761).rotate_left(i as u32 * 5)) % 17).collect();
        prop_assume!(b.iter().any(|&v| v > 0));
        let (xp, xq) = (stochastic(&a), stochastic(&b));
        let plan = couple_from_marginals(&xp, &xq).unwrap();
        prop_assert_eq!(plan.row_sums(), xp.clone());
        prop_assert_eq!(plan.col_sums(), xq.clone());
        let zero = Q::from_integer(0);
        for i in 0..h {
            prop_assert_eq!(plan.flows[i][i], if xp[i] < xq[i] { xp[i] } else { xq[i] });
            let off: Q = (0..h).filter(|&j| j != i).map(|j| plan.flows[i][j]).sum();
            let excess = xp[i] - xq[i];
            prop_assert_eq!(off, if excess > zero { excess } else { zero });
            prop_assert!(plan.flows[i].iter().all(|&v| v >= zero));
        }
        let ell: Vec<Q> = ell[..h].iter().map(|&l| Q::from_integer(l as i128)).collect();
        let mut lhs = zero;
        for i in 0..h {
            for j in 0..h {
                if i != j {
                    lhs += (ell[i] + ell[j]) * plan.flows[i][j];
                }
            }
        }
        let rhs: Q = (0..h).map(|i| ell[i] * (xp[i] - xq[i]).abs()).sum();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn hat_matrix_is_a_line_metric(
        mut ell in prop::collection::vec(0u64..5000, 1..10),
        r in 1.1f64..5.0,
        lambda in 0.0f64..1.0,
    ) {
        ell.sort_unstable();
        let hc = classify_hubs(&ell, r, lambda).unwrap();
        let hat = build_hat_matrix(&hc);
        let h = ell.len();
        for i in 0..h {
            for j in 0..h {
                let line = (hat.positions[i] - hat.positions[j]).abs();
                prop_assert!((hat.entries[i][j] - line).abs() <= 1e-9 * line.max(1.0));
                for k in 0..h {
                    let via = hat.entries[i][k] + hat.entries[k][j];
                    prop_assert!(hat.entries[i][j] <= via * (1.0 + 1e-12) + 1e-12);
                }
            }
        }
        let order = hat.position_order();
        prop_assert!(is_monge_under(&hat.entries, &order, &order));
    }

    #[test]
    fn class_gap_bound_holds_exactly(
        mut ell in prop::collection::vec(0u64..100_000, 2..10),
        r_milli in 1050u32..6000,
        lambda in 0.0f64..1.0,
    ) {
        ell.sort_unstable();
        let r = BigRational::new(BigInt::from(r_milli), BigInt::from(1000));
        let hc = classify_hubs(&ell, r_milli as f64 / 1000.0, lambda).unwrap();
        prop_assert!(class_gap_violations(&hc, &r).is_empty());
    }

    #[test]
    fn class_blocks_follow_the_corner_rule(a in weights(2..8), b in weights(2..8), ell_seed in 0u64..10_000) {
        let h = a.len().min(b.len());
        let mut ell: Vec<u64> = (0..h as u64).map(|i| (ell_seed.wrapping_mul(6364136223846793005).rotate_left(7 * i as u32)) % 300).collect();
        ell.sort_unstable();
        let hc = classify_hubs(&ell, 1.91065, 0.3).unwrap();
        prop_assume!(a[..h].iter().any(|&v| v > 0) && b[..h].iter().any(|&v| v > 0));
        let (xp, xq) = (stochastic(&a[..h]), stochastic(&b[..h]));
        let (bp, bq) = (class_block_masses(&xp, &hc), class_block_masses(&xq, &hc));
        let joint = class_joint_probability(&xp, &xq, &hc);
        prop_assert_eq!(&northwest_corner(&bp, &bq), &joint);
        for k in 0..bp.len() {
            let m = if bp[k] < bq[k] { bp[k] } else { bq[k] };
            prop_assert!(joint[k][k] <= m);
        }
    }
}

/// Cross-class hub pairs violating `(v_i + v_j)(r^2 - 1) <= (r^2 + 1) c'_ij`,
/// where `v = r^(class - 1)` (0 for class 0) and `c'` is the hat cost with the
/// common factor `r^lambda` removed.
fn class_gap_violations(hc: &HubClassing, r: &BigRational) -> Vec<(usize, usize)> {
    let zero = BigRational::from_integer(BigInt::from(0));
    let one = BigRational::from_integer(BigInt::from(1));
    let v: Vec<BigRational> = hc
        .alpha
        .iter()
        .map(|&a| if a == 0 { zero.clone() } else { num_traits::pow(r.clone(), a as usize - 1) })
        .collect();
    let r2 = r * r;
    let mut bad = Vec::new();
    for i in 0..v.len() {
        for j in 0..v.len() {
            if hc.alpha[i] == hc.alpha[j] {
                continue;
            }
            let hat = if hc.alpha[i] % 2 == hc.alpha[j] % 2 {
                if v[i] > v[j] { &v[i] - &v[j] } else { &v[j] - &v[i] }
            } else {
                &v[i] + &v[j]
            };
            if (&v[i] + &v[j]) * (&r2 - &one) > (&r2 + &one) * hat {
                bad.push((i, j));
            }
        }
    }
    bad
}

#[test]
fn class_gap_bound_is_tight_two_classes_apart() {
    let r = BigRational::new(BigInt::from(2), BigInt::from(1));
    // l = 1, 4 at lambda = 0.5 sit in classes 1 and 3.
    let hc = classify_hubs(&[1, 4], 2.0, 0.5).unwrap();
    assert_eq!(hc.alpha, vec![1, 3]);
    assert!(class_gap_violations(&hc, &r).is_empty());
    let v = [BigRational::from_integer(1.into()), BigRational::from_integer(4.into())];
    assert_eq!((&v[0] + &v[1]) * BigRational::from_integer(3.into()), BigRational::from_integer(5.into()) * (&v[1] - &v[0]));
}

#[test]
fn hat_matrix_worked_example() {
    let hc = classify_hubs(&[1, 2, 4], 2.0, 0.5).unwrap();
    assert_eq!(hc.alpha, vec![1, 2, 3]);
    let hat = build_hat_matrix(&hc);
    let s = [2f64.powf(0.5), -(2f64.powf(1.5)), 2f64.powf(2.5)];
    for i in 0..3 {
        assert!((hat.positions[i] - s[i]).abs() < 1e-12);
        for j in 0..3 {
            assert!((hat.entries[i][j] - (s[i] - s[j]).abs()).abs() < 1e-12);
        }
    }
    assert_eq!(hat.position_order(), vec![1, 0, 2]);
}

#[test]
fn corner_rule_can_lose_without_monge() {
    let cost = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!(!is_monge(&cost));
    let t = TransportInstance::new(vec![0.5, 0.5], vec![0.5, 0.5], cost).unwrap();
    let greedy = t.plan_cost(&nwcr(&t));
    let best = t.plan_cost(&transport_optimal(&t).unwrap());
    assert_eq!(greedy, 1.0);
    assert!(best.abs() < 1e-12);
}

#[test]
fn block_mass_can_fall_below_the_min() {
    // Classes 1, 2, 3; the class order is 2, 0, 1, 3.
    let hc = classify_hubs(&[1, 2, 4], 2.0, 0.5).unwrap();
    assert_eq!(hc.alpha, vec![1, 2, 3]);
    let half = Q::new(1, 2);
    let zero = Q::from_integer(0);
    let xp = vec![half, half, zero];
    let xq = vec![half, zero, half];
    let joint = class_joint_probability(&xp, &xq, &hc);
    let (bp, bq) = (class_block_masses(&xp, &hc), class_block_masses(&xq, &hc));
    assert_eq!(northwest_corner(&bp, &bq), joint);
    let k = hc.class_rank(1);
    assert_eq!((bp[k], bq[k]), (half, half));
    assert_eq!(joint[k][k], zero);
}

#[test]
fn f64_plan_checks_prefix_identity_with_tolerance() {
    let a = vec![0.1, 0.2, 0.3, 0.4];
    let b = vec![0.25, 0.25, 0.5];
    let plan = TransportPlan {
        flows: northwest_corner(&a, &b),
    };
    assert!(plan.satisfies_prefix_identity(&a, &b, 1e-12));
    assert!((plan.cost_under(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]) - 1.0).abs() < 1e-12);
}

//! Independent oracles for cost evaluation, the relaxation and the exact
//! solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starhub_core::exact::{solve_exact, DecomposedCost, DEFAULT_LIMIT};
use starhub_core::instance::{generate_random, GeneratorConfig};
use starhub_core::lp::{lrp_objective, solve_lrp, SolverStatus};
use starhub_core::{evaluate_cost, Assignment, Instance};

/// Objective written straight from the 0-1 program: the hub-pair term is
/// `sum_k l_k |x_pk - x_qk|` with indicator rows.
fn shp_objective(inst: &Instance, f: &[usize]) -> f64 {
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let x = |p: usize, i: usize| if f[p] == i { 1.0 } else { 0.0 };
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let mut term = 0.0;
            for i in 0..h {
                term += inst.collection_cost(p, i) * x(p, i);
                term += inst.collection_cost(q, i) * x(q, i);
                term += inst.spoke_length(i) * (x(p, i) - x(q, i)).abs();
            }
            total += inst.flow(p, q) * term;
        }
    }
    total
}

fn integer_instance(rng: &mut ChaCha8Rng, n: usize, h: usize) -> Instance {
    let ell: Vec<u64> = (0..h).map(|_| rng.random_range(0..=9)).collect();
    let c = (0..n)
        .map(|_| (0..h).map(|_| rng.random_range(0..=9) as f64).collect())
        .collect();
    let w = (0..n)
        .map(|p| {
            (0..n)
                .map(|q| if p != q && rng.random::<f64>() < 0.6 { rng.random_range(1..=4) as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Instance::new(ell, c, w).unwrap()
}

#[test]
fn evaluate_cost_matches_zero_one_formulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let inst = generate_random(&GeneratorConfig {
            seed,
            nonhubs: 4,
            hubs: 3,
            ..Default::default()
        });
        for _ in 0..20 {
            let f: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let got = evaluate_cost(&inst, &Assignment(f.clone())).unwrap();
            let want = shp_objective(&inst, &f);
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }
}

#[test]
fn decomposed_cost_agrees_on_sampled_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    for seed in 0..10 {
        let inst = generate_random(&GeneratorConfig {
            seed: 1000 + seed,
            nonhubs: 6,
            hubs: 4,
            ..Default::default()
        });
        let dc = DecomposedCost::new(&inst);
        for _ in 0..100 {
            let f: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
            let direct = evaluate_cost(&inst, &Assignment(f.clone())).unwrap();
            assert!((dc.cost(&f) - direct).abs() <= 1e-9 * direct.max(1.0));
            checked += 1;
        }
    }
    assert_eq!(checked, 1000);
}

// ---------------------------------------------------------------------------
// Exact rational simplex (Bland's rule throughout) on the ordered-pair
// relaxation, without any pair merging.

type Q = BigRational;

fn q(v: f64) -> Q {
    Q::from_integer(BigInt::from(v as i64))
}

struct RationalLp {
    cost: Vec<Q>,
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    /// Rows whose slack column can start in the basis.
    slack_of_row: Vec<Option<usize>>,
}

fn ordered_pair_relaxation(inst: &Instance) -> RationalLp {
    let (n, h) = (inst.nonhub_count(), inst.hub_count());
    let mut cost = vec![Q::zero(); n * h];
    let mut pairs = Vec::new();
    for p in 0..n {
        for qq in 0..n {
            let w = inst.flow(p, qq);
            if p == qq || w == 0.0 {
                continue;
            }
            for i in 0..h {
                cost[p * h + i] += q(w) * q(inst.collection_cost(p, i));
                cost[qq * h + i] += q(w) * q(inst.collection_cost(qq, i));
            }
            pairs.push((p, qq, w));
        }
    }
    let z0 = cost.len();
    for &(_, _, w) in &pairs {
        for k in 0..h {
            cost.push(q(w) * q(inst.spoke_length(k)));
        }
    }
    let structural = cost.len();
    let ineq = 2 * pairs.len() * h;
    let total = structural + ineq;
    cost.resize(total, Q::zero());

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut slack_of_row = Vec::new();
    for p in 0..n {
        let mut row = vec![Q::zero(); total];
        for i in 0..h {
            row[p * h + i] = Q::one();
        }
        rows.push(row);
        rhs.push(Q::one());
        slack_of_row.push(None);
    }
    let mut s = structural;
    for (t, &(p, qq, _)) in pairs.iter().enumerate() {
        for k in 0..h {
            let z = z0 + t * h + k;
            for sign in [1i64, -1] {
                // sign * (x_pk - x_qk) - Z + s = 0
                let mut row = vec![Q::zero(); total];
                row[p * h + k] = Q::from_integer(sign.into());
                row[qq * h + k] = Q::from_integer((-sign).into());
                row[z] = -Q::one();
                row[s] = Q::one();
                rows.push(row);
                rhs.push(Q::zero());
                slack_of_row.push(Some(s));
                s += 1;
            }
        }
    }
    RationalLp {
        cost,
        rows,
        rhs,
        slack_of_row,
    }
}

fn bland_minimize(tab: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], allowed: usize) -> Q {
    let m = tab.len();
    let last = tab[0].len() - 1;
    loop {
        let mut entering = None;
        for j in 0..allowed {
            let mut d = cost[j].clone();
            for i in 0..m {
                if !tab[i][j].is_zero() {
                    d -= &cost[basis[i]] * &tab[i][j];
                }
            }
            if d.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return (0..m).map(|i| &cost[basis[i]] * &tab[i][last]).sum();
        };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..m {
            if tab[i][j].is_positive() {
                let ratio = &tab[i][last] / &tab[i][j];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.expect("relaxation is bounded");
        let pv = tab[r][j].clone();
        for v in tab[r].iter_mut() {
            *v /= &pv;
        }
        let pivot_row = tab[r].clone();
        for i in 0..m {
            if i != r && !tab[i][j].is_zero() {
                let f = tab[i][j].clone();
                for (v, pr) in tab[i].iter_mut().zip(&pivot_row) {
                    if !pr.is_zero() {
                        *v -= &f * pr;
                    }
                }
            }
        }
        basis[r] = j;
    }
}

fn rational_optimum(lp: &RationalLp) -> Q {
    let m = lp.rows.len();
    let ncols = lp.cost.len();
    let arts: Vec<usize> = (0..m).filter(|&r| lp.slack_of_row[r].is_none()).collect();
    let width = ncols + arts.len() + 1;
    let mut tab = vec![vec![Q::zero(); width]; m];
    let mut basis = vec![0; m];
    let mut next = ncols;
    for r in 0..m {
        tab[r][..ncols].clone_from_slice(&lp.rows[r]);
        tab[r][width - 1] = lp.rhs[r].clone();
        basis[r] = match lp.slack_of_row[r] {
            Some(s) => s,
            None => {
                tab[r][next] = Q::one();
                next += 1;
                next - 1
            }
        };
    }
    let mut phase1 = vec![Q::zero(); width - 1];
    phase1[ncols..].iter_mut().for_each(|c| *c = Q::one());
    let infeas = bland_minimize(&mut tab, &mut basis, &phase1, width - 1);
    assert!(infeas.is_zero(), "relaxation is feasible");
    let mut keep = vec![true; m];
    for r in 0..m {
        if basis[r] >= ncols {
            match (0..ncols).find(|&j| !tab[r][j].is_zero()) {
                Some(j) => {
                    let pv = tab[r][j].clone();
                    for v in tab[r].iter_mut() {
                        *v /= &pv;
                    }
                    let pivot_row = tab[r].clone();
                    for i in 0..m {
                        if i != r && !tab[i][j].is_zero() {
                            let f = tab[i][j].clone();
                            for (v, pr) in tab[i].iter_mut().zip(&pivot_row) {
                                *v -= &f * pr;
                            }
                        }
                    }
                    basis[r] = j;
                }
                None => keep[r] = false,
            }
        }
    }
    let mut tab: Vec<Vec<Q>> = tab.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(t, _)| t).collect();
    let mut basis: Vec<usize> = basis.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(b, _)| b).collect();
    let mut phase2 = lp.cost.clone();
    phase2.resize(width - 1, Q::zero());
    bland_minimize(&mut tab, &mut basis, &phase2, ncols)
}

#[test]
fn simplex_matches_rational_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..10 {
        let n = rng.random_range(2..=4);
        let h = rng.random_range(2..=3);
        let inst = integer_instance(&mut rng, n, h);
        let oracle = rational_optimum(&ordered_pair_relaxation(&inst)).to_f64().unwrap();
        let sol = solve_lrp(&inst).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        let tol = 1e-6 * oracle.abs().max(1.0);
        assert!(
            (sol.objective_value - oracle).abs() <= tol,
            "case {case}: simplex {} vs rational {oracle}",
            sol.objective_value
        );
    }
}

#[test]
fn fractional_solution_invariants() {
    for seed in 0..15 {
        let inst = generate_random(&GeneratorConfig {
            seed: 500 + seed,
            nonhubs: 5,
            hubs: 4,
            ..Default::default()
        });
        let sol = solve_lrp(&inst).unwrap();
        for row in &sol.x {
            assert!(row.iter().all(|&v| v >= -1e-7));
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-7);
        }
        let re = lrp_objective(&inst, &sol.x);
        assert!((re - sol.objective_value).abs() <= 1e-6 * re.max(1.0));
    }
}

#[test]
fn lp_exact_sandwich_on_small_instances() {
    for (seed, n, h) in [(1u64, 3usize, 3usize), (2, 3, 3), (3, 5, 3), (4, 5, 3), (5, 4, 4)] {
        let inst = generate_random(&GeneratorConfig {
            seed,
            nonhubs: n,
            hubs: h,
            ..Default::default()
        });
        let lp = solve_lrp(&inst).unwrap();
        let ex = solve_exact(&inst, DEFAULT_LIMIT).unwrap();
        assert!(lp.objective_value <= ex.value + 1e-6 * ex.value.max(1.0));
        let direct = evaluate_cost(&inst, &ex.assignment).unwrap();
        assert!((direct - ex.value).abs() <= 1e-9 * direct.max(1.0));
    }
}

#[test]
fn exact_matches_plain_enumeration_and_tie_break() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..15 {
        let n = rng.random_range(1..=4);
        let h = rng.random_range(1..=3);
        let inst = integer_instance(&mut rng, n, h);
        let mut best: Option<(f64, Vec<usize>)> = None;
        let total = h.pow(n as u32);
        for code in 0..total {
            let mut f = vec![0; n];
            let mut c = code;
            for p in (0..n).rev() {
                f[p] = c % h;
                c /= h;
            }
            let v = shp_objective(&inst, &f);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv - 1e-9) {
                best = Some((v, f));
            }
        }
        let (bv, bf) = best.unwrap();
        let ex = solve_exact(&inst, DEFAULT_LIMIT).unwrap();
        assert!((ex.value - bv).abs() < 1e-9);
        assert_eq!(ex.assignment.as_slice(), &bf[..]);
    }
}

#[test]
fn hub_relabeling_leaves_optima_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..8 {
        let inst = generate_random(&GeneratorConfig {
            seed: 40 + seed,
            nonhubs: 4,
            hubs: 4,
            ..Default::default()
        });
        // Shuffle hub columns and feed the shuffled data back in.
        let mut perm: Vec<usize> = (0..4).collect();
        for i in (1..4).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let ell: Vec<u64> = perm.iter().map(|&i| inst.spoke_lengths()[i]).collect();
        let c: Vec<Vec<f64>> = inst
            .collection_costs()
            .iter()
            .map(|row| perm.iter().map(|&i| row[i]).collect())
            .collect();
        let shuffled = Instance::new(ell, c, inst.flows().to_vec()).unwrap();

        let a = solve_exact(&inst, DEFAULT_LIMIT).unwrap().value;
        let b = solve_exact(&shuffled, DEFAULT_LIMIT).unwrap().value;
        assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        let la = solve_lrp(&inst).unwrap().objective_value;
        let lb = solve_lrp(&shuffled).unwrap().objective_value;
        assert!((la - lb).abs() <= 1e-6 * la.max(1.0));

        let f: Vec<usize> = (0..4).map(|_| rng.random_range(0..4)).collect();
        let g: Vec<usize> = f
            .iter()
            .map(|&i| shuffled.hub_by_id(perm.iter().position(|&k| k == i).unwrap()).unwrap())
            .collect();
        let ca = evaluate_cost(&inst, &Assignment(f)).unwrap();
        let cb = evaluate_cost(&shuffled, &Assignment(g)).unwrap();
        assert!((ca - cb).abs() <= 1e-9 * ca.max(1.0));
    }
}

#[test]
fn cost_lower_bound_from_cheapest_collection() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..10 {
        let inst = generate_random(&GeneratorConfig {
            seed: 900 + seed,
            nonhubs: 5,
            hubs: 3,
            ..Default::default()
        });
        let cheapest: Vec<f64> = (0..5)
            .map(|p| (0..3).map(|i| inst.collection_cost(p, i)).fold(f64::INFINITY, f64::min))
            .collect();
        let mut bound = 0.0;
        for p in 0..5 {
            for qq in 0..5 {
                if p != qq {
                    bound += inst.flow(p, qq) * (cheapest[p] + cheapest[qq]);
                }
            }
        }
        let f: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
        assert!(evaluate_cost(&inst, &Assignment(f)).unwrap() >= bound - 1e-9);
    }
}

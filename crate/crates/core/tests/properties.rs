use holex_core::oracle::{enumerate_vertices, oracle_extremal, sample_feasible};
use holex_core::random::{random_system, RandomSystemConfig};
use holex_core::worlds::entropy;
use holex_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn system(seed: u64) -> MultiModelSystem {
    random_system(&mut ChaCha8Rng::seed_from_u64(seed), &RandomSystemConfig::default())
}

/// Pruned constraint systems of every final output, paired with the output.
fn queries(s: &MultiModelSystem) -> Vec<(Atom, ConstraintSystem)> {
    let rb = compile(s).unwrap();
    final_outputs(s)
        .unwrap()
        .into_iter()
        .map(|phi| {
            let cs = build_constraints(&reachable_set(&phi, &rb).unwrap()).unwrap();
            (phi, cs)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cc_set_is_complete(n in 1usize..=10) {
        let atoms: Vec<Atom> = (0..n).map(|i| Atom::new(format!("a{i}"))).collect();
        let worlds = cc_set(&atoms).unwrap();
        prop_assert_eq!(worlds.len(), 1 << n);
        for (i, w) in worlds.iter().enumerate() {
            prop_assert_eq!(w.index(), i);
        }
    }

    #[test]
    fn compile_emits_one_rule_per_entry(seed in any::<u64>()) {
        let s = system(seed);
        let entries: usize = s.models().iter().map(|m| m.table.len()).sum();
        prop_assert_eq!(compile(&s).unwrap().rules().len(), entries);
    }

    #[test]
    fn reachability_is_a_strict_order(seed in any::<u64>()) {
        let rb = compile(&system(seed)).unwrap();
        let l = rb.language();
        for a in l {
            prop_assert!(!reachable(a, a, &rb).unwrap());
            for b in l {
                for c in l {
                    if reachable(a, b, &rb).unwrap() && reachable(b, c, &rb).unwrap() {
                        prop_assert!(reachable(a, c, &rb).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn reachable_set_is_idempotent_and_closed(seed in any::<u64>()) {
        let rb = compile(&system(seed)).unwrap();
        for phi in rb.language() {
            let once = reachable_set(phi, &rb).unwrap();
            prop_assert_eq!(&reachable_set(phi, &once).unwrap(), &once);
            for r in once.rules() {
                prop_assert!(r.body.iter().all(|b| once.contains(b)));
            }
        }
    }

    #[test]
    fn final_outputs_are_independent(seed in any::<u64>()) {
        let s = system(seed);
        let rb = compile(&s).unwrap();
        let finals: Vec<Atom> = final_outputs(&s).unwrap().into_iter().collect();
        for a in &finals {
            for b in &finals {
                if a != b {
                    prop_assert!(independent(a, b, &rb).unwrap());
                }
            }
        }
    }

    #[test]
    fn constraint_shape(seed in any::<u64>()) {
        let rb = compile(&system(seed)).unwrap();
        let cs = build_constraints(&rb).unwrap();
        prop_assert_eq!(cs.constraints().len(), rb.rules().len() + 1);
        prop_assert_eq!(cs.num_worlds(), 1 << rb.language().len());
        let normalizations = cs.constraints().iter().filter(|c| c.origin == Origin::Normalization).count();
        prop_assert_eq!(normalizations, 1);
        for c in cs.constraints() {
            prop_assert!(c.coeffs.iter().all(|v| v.is_finite()));
            prop_assert!((-1.0..=1.0).contains(&c.rhs));
        }
    }

    /// Homogeneous rows and the original rule equations agree on feasible points.
    #[test]
    fn homogeneous_rows_are_equivalent(seed in any::<u64>()) {
        for (_, cs) in queries(&system(seed)) {
            for v in enumerate_vertices(&cs).unwrap().vertices {
                prop_assert!(cs.rule_residuals(v.probs()).iter().all(|r| *r <= 1e-9));
            }
        }
    }

    #[test]
    fn vertices_exist_iff_feasible(seed in any::<u64>()) {
        for (_, cs) in queries(&system(seed)) {
            let feasible = check_feasible(&cs).unwrap().is_feasible();
            prop_assert_eq!(!enumerate_vertices(&cs).unwrap().is_empty(), feasible);
        }
    }

    #[test]
    fn solvers_agree_with_oracle(seed in any::<u64>()) {
        for (phi, cs) in queries(&system(seed)) {
            if !check_feasible(&cs).unwrap().is_feasible() {
                continue;
            }
            let (hi, d_hi) = solve_extremal(&cs, &phi, Direction::Maximize).unwrap();
            let (lo, d_lo) = solve_extremal(&cs, &phi, Direction::Minimize).unwrap();
            prop_assert!((hi - oracle_extremal(&cs, &phi, Direction::Maximize).unwrap()).abs() <= 1e-6);
            prop_assert!((lo - oracle_extremal(&cs, &phi, Direction::Minimize).unwrap()).abs() <= 1e-6);

            let me = solve_maxent(&cs).unwrap();
            let mid = me.probability(std::slice::from_ref(&phi)).unwrap();
            prop_assert!(lo - 1e-6 <= mid && mid <= hi + 1e-6);

            for d in [&d_hi, &d_lo, &me] {
                prop_assert!(d.is_valid(1e-9));
                prop_assert!(cs.max_residual(d.probs()) <= 1e-6);
            }
            let h = me.entropy();
            prop_assert!(h >= d_hi.entropy() - 1e-6 && h >= d_lo.entropy() - 1e-6);
            for p in sample_feasible(&cs, 200, seed).unwrap() {
                prop_assert!(h >= entropy(p.probs()) - 1e-6);
            }
        }
    }

    #[test]
    fn explanations_are_deterministic(seed in any::<u64>()) {
        let s = system(seed);
        for phi in final_outputs(&s).unwrap() {
            for psi in Criterion::ALL {
                let a = holistic_explanation(&s, &phi, psi);
                let b = holistic_explanation(&s, &phi, psi);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(&a, &b);
                        let total: f64 = a.distribution.probs().iter().sum();
                        prop_assert!((total - 1.0).abs() <= 1e-9);
                        let objective = a.distribution.probability(std::slice::from_ref(&phi)).unwrap();
                        prop_assert!((a.objective - objective).abs() <= 1e-9);
                    }
                    (Err(Error::Infeasible { core: x }), Err(Error::Infeasible { core: y })) => {
                        prop_assert_eq!(x, y);
                    }
                    (a, b) => prop_assert!(false, "unexpected results {a:?} / {b:?}"),
                }
            }
        }
    }
}

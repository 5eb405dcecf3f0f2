mod common;

use common::lp::{check_certificate, random_box_lp, random_feasible_lp, vertex_oracle};
use fomip::lp::{BasisStatus, LpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_feasible_lps_carry_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut optimal = 0;
    for k in 0..500 {
        let p = random_feasible_lp(&mut rng, 8, 8, k % 3 != 0);
        let s = p.solve().unwrap();
        match s.status {
            LpStatus::Optimal => {
                optimal += 1;
                if let Err(e) = check_certificate(&p, &s, 1e-6) {
                    panic!("instance {k}: {e}\n{p:#?}");
                }
                for (j, st) in s.column_status.iter().enumerate() {
                    if *st == BasisStatus::Basic {
                        assert!(s.reduced_costs[j].abs() <= 1e-6, "instance {k}");
                    }
                }
            }
            LpStatus::Unbounded => assert!(k % 3 == 0, "instance {k} has a finite box"),
            LpStatus::Infeasible => panic!("instance {k} is feasible by construction"),
        }
    }
    assert!(optimal >= 400);
}

#[test]
fn small_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..400 {
        let p = random_box_lp(&mut rng, 4, 6);
        let s = p.solve().unwrap();
        match vertex_oracle(&p) {
            None => assert_eq!(s.status, LpStatus::Infeasible, "instance {k}: {p:#?}"),
            Some(best) => {
                assert_eq!(s.status, LpStatus::Optimal, "instance {k}: {p:#?}");
                assert!(
                    (s.objective_value - best).abs() <= 1e-6,
                    "instance {k}: {} vs {best}",
                    s.objective_value
                );
                check_certificate(&p, &s, 1e-6).unwrap();
            }
        }
    }
}

#[test]
fn degenerate_stacks_terminate() {
    // Many identical rows through one vertex make every pivot degenerate.
    use fomip::{Atom, Bound, LinCons, LinTerm};
    let mut p = fomip::lp::LpProblem::new();
    let n = 6;
    for j in 0..n {
        p.add_column(Atom::new("x", vec![j.to_string()]), -1.0 - j as f64 * 0.1, 0.0, 1.0);
    }
    for i in 0..30 {
        let terms = (0..n)
            .map(|j| LinTerm::new(1.0 + ((i + j) % 3) as f64, Atom::new("x", vec![j.to_string()])))
            .collect();
        p.add_constraint(LinCons::new(Bound::NegInf, terms, Bound::Finite(0.0)).unwrap());
    }
    let s = p.solve().unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!(s.objective_value.abs() < 1e-9);
    check_certificate(&p, &s, 1e-6).unwrap();
}

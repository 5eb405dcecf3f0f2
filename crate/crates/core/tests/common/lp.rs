//! Random LPs and independent checks of LP solutions.

use fomip::lp::{LpProblem, LpSolution, LpStatus};
use fomip::{Atom, Bound, LinCons, LinTerm};
use rand::Rng;

pub fn col(j: usize) -> Atom {
    Atom::new("x", vec![format!("c{j}")])
}

fn int(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo..=hi) as f64
}

/// Random LP with integer data in [-5, 5], feasible by construction around
/// a random interior point. With `finite_box` every column bound is finite.
pub fn random_feasible_lp(rng: &mut impl Rng, max_atoms: usize, max_rows: usize, finite_box: bool) -> LpProblem {
    let n = rng.gen_range(1..=max_atoms);
    let m = rng.gen_range(0..=max_rows);
    let mut p = LpProblem::new();
    let mut point = Vec::with_capacity(n);
    for j in 0..n {
        let lb = int(rng, -5, 0);
        let ub = lb + int(rng, 0, 5);
        let (lb, ub) = if finite_box {
            (lb, ub)
        } else {
            match rng.gen_range(0..6) {
                0 => (f64::NEG_INFINITY, ub),
                1 => (lb, f64::INFINITY),
                _ => (lb, ub),
            }
        };
        let x0 = if lb.is_finite() && ub.is_finite() {
            rng.gen_range(lb..=ub)
        } else if lb.is_finite() {
            lb + rng.gen_range(0.0..3.0)
        } else {
            ub - rng.gen_range(0.0..3.0)
        };
        point.push(x0);
        p.add_column(col(j), int(rng, -5, 5), lb, ub);
    }
    for _ in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                terms.push(LinTerm::new(int(rng, -5, 5), col(j)));
            }
        }
        let act: f64 = terms
            .iter()
            .map(|t| {
                let j: usize = t.atom.args[0][1..].parse().unwrap();
                t.coef * point[j]
            })
            .sum();
        let lo = Bound::Finite(act.floor() - int(rng, 0, 2));
        let hi = Bound::Finite(act.ceil() + int(rng, 0, 2));
        let (lb, ub) = match rng.gen_range(0..4) {
            0 => (lo, Bound::PosInf),
            1 => (Bound::NegInf, hi),
            2 => (Bound::Finite(act.round()), Bound::Finite(act.round())),
            _ => (lo, hi),
        };
        // Rounding an equality row can make it infeasible; keep the range
        // version in that case.
        let row = LinCons::new(lb, terms.clone(), ub).unwrap();
        if lb == ub && (act.round() - act).abs() > 1e-12 {
            p.add_constraint(LinCons::new(lo, terms, hi).unwrap());
        } else {
            p.add_constraint(row);
        }
    }
    p
}

/// Random LP with a finite box and arbitrary row bounds (possibly
/// infeasible).
pub fn random_box_lp(rng: &mut impl Rng, max_atoms: usize, max_rows: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_atoms);
    let m = rng.gen_range(0..=max_rows);
    let mut p = LpProblem::new();
    for j in 0..n {
        let lb = int(rng, -5, 0);
        let ub = lb + int(rng, 0, 5);
        p.add_column(col(j), int(rng, -5, 5), lb, ub);
    }
    for _ in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                terms.push(LinTerm::new(int(rng, -5, 5), col(j)));
            }
        }
        let a = int(rng, -10, 10);
        let b = a + int(rng, 0, 6);
        let (lb, ub) = match rng.gen_range(0..3) {
            0 => (Bound::Finite(a), Bound::PosInf),
            1 => (Bound::NegInf, Bound::Finite(b)),
            _ => (Bound::Finite(a), Bound::Finite(b)),
        };
        p.add_constraint(LinCons::new(lb, terms, ub).unwrap());
    }
    p
}

/// Checks an Optimal solution: bounded-variable feasibility, objective
/// consistency, strong duality and complementary slackness, with duals and
/// reduced costs recomputed here from the problem data.
pub fn check_certificate(p: &LpProblem, s: &LpSolution, tol: f64) -> Result<(), String> {
    if s.status != LpStatus::Optimal {
        return Err(format!("status {:?}", s.status));
    }
    let x: Vec<f64> = p.columns.iter().map(|c| s.value(&c.atom)).collect();
    for (c, &v) in p.columns.iter().zip(&x) {
        if v < c.lb - tol || v > c.ub + tol {
            return Err(format!("{} = {v} outside [{}, {}]", c.atom, c.lb, c.ub));
        }
    }
    let index = p.index();
    let mut acts = Vec::new();
    for (i, row) in p.constraints.iter().enumerate() {
        let act: f64 = row.terms().iter().map(|t| t.coef * x[index[&t.atom]]).sum();
        if act < row.lb().value() - tol || act > row.ub().value() + tol {
            return Err(format!("row {i} activity {act} outside {row}"));
        }
        acts.push(act);
    }
    let primal: f64 = p.columns.iter().zip(&x).map(|(c, v)| c.objective * v).sum();
    if (primal - s.objective_value).abs() > tol {
        return Err(format!("objective {} but Σcx = {primal}", s.objective_value));
    }
    let y = &s.duals;
    let mut dual = 0.0;
    for (i, row) in p.constraints.iter().enumerate() {
        if y[i].abs() <= 1e-9 {
            continue;
        }
        let b = if y[i] > 0.0 { row.lb() } else { row.ub() };
        if !b.is_finite() {
            return Err(format!("dual {} on row {i} pushes an infinite bound", y[i]));
        }
        dual += y[i] * b.value();
        if y[i].abs() > tol && (acts[i] - b.value()).abs() > tol {
            return Err(format!(
                "complementary slackness: row {i} dual {} activity {} bound {}",
                y[i],
                acts[i],
                b.value()
            ));
        }
    }
    for (j, c) in p.columns.iter().enumerate() {
        let d = c.objective
            - p.constraints
                .iter()
                .enumerate()
                .map(|(i, row)| y[i] * row.coefficient(&c.atom).unwrap_or(0.0))
                .sum::<f64>();
        if (d - s.reduced_costs[j]).abs() > tol {
            return Err(format!(
                "reduced cost of {} is {d}, reported {}",
                c.atom, s.reduced_costs[j]
            ));
        }
        if d.abs() <= 1e-9 {
            continue;
        }
        let b = if d > 0.0 { c.lb } else { c.ub };
        if !b.is_finite() {
            return Err(format!("reduced cost {d} of {} pushes an infinite bound", c.atom));
        }
        dual += d * b;
        if d.abs() > tol && (x[j] - b).abs() > tol {
            return Err(format!("{} has reduced cost {d} but value {}", c.atom, x[j]));
        }
    }
    if (dual - primal).abs() > tol {
        return Err(format!("duality gap: primal {primal}, dual {dual}"));
    }
    Ok(())
}

/// Minimum over all vertices of the (bounded) feasible region: every choice
/// of `n` tight hyperplanes among column bounds and finite row bounds,
/// solved exactly enough by Gaussian elimination, filtered for feasibility.
/// `None` when no vertex is feasible.
pub fn vertex_oracle(p: &LpProblem) -> Option<f64> {
    let n = p.columns.len();
    let index = p.index();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (j, c) in p.columns.iter().enumerate() {
        for b in [c.lb, c.ub] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, b));
        }
    }
    let dense_rows: Vec<Vec<f64>> = p
        .constraints
        .iter()
        .map(|row| {
            let mut a = vec![0.0; n];
            for t in row.terms() {
                a[index[&t.atom]] = t.coef;
            }
            a
        })
        .collect();
    for (row, a) in p.constraints.iter().zip(&dense_rows) {
        for b in [row.lb(), row.ub()] {
            if let Some(v) = b.finite() {
                planes.push((a.clone(), v));
            }
        }
    }
    let feasible = |x: &[f64]| {
        p.columns
            .iter()
            .zip(x)
            .all(|(c, &v)| v >= c.lb - 1e-9 && v <= c.ub + 1e-9)
            && p.constraints.iter().zip(&dense_rows).all(|(row, a)| {
                let act: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
                act >= row.lb().value() - 1e-9 && act <= row.ub().value() + 1e-9
            })
    };
    let mut best: Option<f64> = None;
    let mut choice: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&choice.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if feasible(&x) {
                let obj: f64 = p.columns.iter().zip(&x).map(|(c, v)| c.objective * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // Next n-combination of plane indices.
        let total = planes.len();
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if choice[k] < total - n + k {
                choice[k] += 1;
                for l in k + 1..n {
                    choice[l] = choice[l - 1] + 1;
                }
                break;
            }
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-9 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

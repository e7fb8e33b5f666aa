//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use irlse_core::estimation::{
    concentration_radii, empirical_problem, error_bound, required_m, us_irl_se, BoundInputs, Dataset,
    GenerativeModel,
};
use irlse_core::feasible::{
    check_zeta_constraints, membership_implicit, membership_q, params_from_reward, polytope_h_rep,
    reward_from_params, volume_upper_bounds, zeta_caps, RewardPolytope, DEFAULT_TOL,
};
use irlse_core::hausdorff::{directed_distance, hausdorff_problems, HausdorffOptions};
use irlse_core::instances::{example_fig1, lb_chain, lb_subopt, random_problem};
use irlse_core::lp::{lp_solve, LinearProgram, LpOutcome};
use irlse_core::mdp::{flatten, unflatten, StateActionTable};
use irlse_core::seed::mix_seed;
use irlse_core::sweep::{median, run_sweep, SweepConfig};
use irlse_core::IrlSeProblem;

type Outcome = Result<String, String>;

struct Case {
    problem: IrlSeProblem,
    polytope: RewardPolytope,
    rewards: Vec<StateActionTable>,
}

/// Points of the feasible set reached by minimising random objectives.
fn lp_members(polytope: &RewardPolytope, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let h = polytope.h_rep();
    (0..count)
        .filter_map(|_| {
            let c = DVector::from_fn(h.dim(), |_, _| rng.random_range(-1.0..1.0));
            let lp = LinearProgram::new(c, h.matrix().clone(), h.bounds().clone()).ok()?;
            match lp_solve(&lp).ok()? {
                LpOutcome::Optimal { point, .. } => Some(point),
                _ => None,
            }
        })
        .collect()
}

/// 20 random problems with 1000 rewards each: uniform draws, points of the
/// set (LP vertices and mixtures with constants), and small perturbations
/// of those.
fn build_cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20u64)
        .map(|i| {
            let s = rng.random_range(2..=4);
            let a = rng.random_range(2..=3);
            let n = rng.random_range(0..=2);
            let gamma = if i % 2 == 0 { 0.5 } else { 0.9 };
            let problem = random_problem(s, a, n, gamma, 100 + i, (0.05, 1.0)).unwrap();
            let polytope = polytope_h_rep(&problem, DEFAULT_TOL).unwrap();
            let d = s * a;
            let vertices = lp_members(&polytope, 40, &mut rng);
            let mut rewards = Vec::with_capacity(1000);
            for k in 0..1000 {
                let x = match k % 3 {
                    0 => DVector::from_fn(d, |_, _| rng.random_range(0.0..=1.0)),
                    1 => {
                        let v = &vertices[rng.random_range(0..vertices.len())];
                        let w = &vertices[rng.random_range(0..vertices.len())];
                        let (l, c) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
                        let mix: f64 = rng.random_range(0.0..=1.0);
                        (v * l + w * (1.0 - l)) * mix + DVector::from_element(d, c * (1.0 - mix))
                    }
                    _ => {
                        let v = &vertices[rng.random_range(0..vertices.len())];
                        v.map(|x| (x + rng.random_range(-0.02..0.02)).clamp(0.0, 1.0))
                    }
                };
                rewards.push(unflatten(&x.map(|v| v.clamp(0.0, 1.0)), s, a));
            }
            Case {
                problem,
                polytope,
                rewards,
            }
        })
        .collect()
}

fn criterion_1(cases: &[Case]) -> Outcome {
    let mut members = 0;
    let mut total = 0;
    for (ci, case) in cases.iter().enumerate() {
        for (ri, r) in case.rewards.iter().enumerate() {
            let implicit = membership_implicit(&case.problem, r, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let q = membership_q(&case.problem, r, DEFAULT_TOL).map_err(|e| e.to_string())?;
            let poly = case.polytope.contains(r);
            if implicit.is_member() != q.is_member() || implicit.is_member() != poly {
                return Err(format!(
                    "problem {ci} reward {ri}: implicit {} q {} polytope {poly}",
                    implicit.is_member(),
                    q.is_member()
                ));
            }
            members += implicit.is_member() as usize;
            total += 1;
        }
    }
    Ok(format!("{total} rewards agree ({members} members)"))
}

fn accepted(cases: &[Case]) -> impl Iterator<Item = (&Case, &StateActionTable)> {
    cases.iter().flat_map(|c| {
        c.rewards
            .iter()
            .filter(|r| membership_implicit(&c.problem, r, DEFAULT_TOL).unwrap().is_member())
            .map(move |r| (c, r))
    })
}

fn criterion_2(cases: &[Case]) -> Outcome {
    let (mut worst_err, mut worst_slack, mut count) = (0.0f64, f64::INFINITY, 0);
    for (case, r) in accepted(cases) {
        let params = params_from_reward(&case.problem, r, DEFAULT_TOL).map_err(|e| e.to_string())?;
        let back = reward_from_params(&case.problem, &params).map_err(|e| e.to_string())?;
        worst_err = worst_err.max((&back.values - r).amax());
        let check = check_zeta_constraints(&case.problem, &params.zeta, DEFAULT_TOL).map_err(|e| e.to_string())?;
        worst_slack = worst_slack.min(check.min_slack());
        if !check.satisfied() {
            return Err("recovered zeta violates its constraints".into());
        }
        count += 1;
    }
    let detail = format!("{count} members, max round-trip error {worst_err:.2e}, min slack {worst_slack:.2e}");
    if worst_err <= 1e-9 && worst_slack >= -1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3(cases: &[Case]) -> Outcome {
    let (mut checks, mut worst_cap) = (0, f64::NEG_INFINITY);
    for case in cases {
        let reduced: Vec<IrlSeProblem> = (0..case.problem.num_experts())
            .map(|i| case.problem.without_expert(i).unwrap())
            .collect();
        let caps = zeta_caps(&case.problem).map_err(|e| e.to_string())?;
        for r in case.rewards.iter() {
            if !membership_implicit(&case.problem, r, DEFAULT_TOL).unwrap().is_member() {
                continue;
            }
            for (i, p) in reduced.iter().enumerate() {
                if !membership_implicit(p, r, DEFAULT_TOL).unwrap().is_member() {
                    return Err(format!("member lost after removing expert {i}"));
                }
                checks += 1;
            }
            let zeta = params_from_reward(&case.problem, r, DEFAULT_TOL).unwrap().zeta;
            worst_cap = worst_cap.max((zeta - &caps.g).max());
        }
    }
    let detail = format!("{checks} deletion checks, max zeta - g = {worst_cap:.2e}");
    if worst_cap <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let p = example_fig1(0.9, 0.5).map_err(|e| e.to_string())?;
    let mut mismatches = Vec::new();
    for i in 0..=20i32 {
        for j in 0..=20i32 {
            let mut r = DMatrix::zeros(2, 2);
            r[(0, 0)] = i as f64 / 20.0;
            r[(0, 1)] = j as f64 / 20.0;
            let member = membership_implicit(&p, &r, DEFAULT_TOL).unwrap().is_member();
            // 0 <= r(S0,A1) - r(S0,A2) <= 0.5 on the 0.05 grid.
            let expected = (0..=10).contains(&(i - j));
            if member != expected {
                mismatches.push((i, j));
            }
        }
    }
    if mismatches.is_empty() {
        Ok("441 grid points match".into())
    } else {
        Err(format!("{} mismatches, first {:?}", mismatches.len(), mismatches[0]))
    }
}

fn timed_hausdorff(a: &IrlSeProblem, b: &IrlSeProblem) -> Result<(f64, Duration), String> {
    let start = Instant::now();
    let r = hausdorff_problems(a, b, &HausdorffOptions::exact()).map_err(|e| e.to_string())?;
    Ok((r.value, start.elapsed()))
}

fn criterion_5_subopt() -> Outcome {
    let base = lb_subopt(1, 0.9, 0.1, 0.25, 2.0, None).map_err(|e| e.to_string())?;
    let alt = lb_subopt(1, 0.9, 0.1, 0.25, 2.0, Some(1)).map_err(|e| e.to_string())?;
    let (value, took) = timed_hausdorff(&base, &alt)?;
    let target = 0.5 * (0.1 / 0.25) * (1.0 - 1.0 / 2.0);
    let detail = format!("H = {value:.9}, target {target} ({:.2?})", took);
    if value >= target - 1e-6 && took < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5_chain() -> Outcome {
    let (gamma, eps) = (0.9, 0.05);
    let base = lb_chain(1, 2, gamma, eps, None).map_err(|e| e.to_string())?;
    let alt = lb_chain(1, 2, gamma, eps, Some((1, 1))).map_err(|e| e.to_string())?;
    let (value, took) = timed_hausdorff(&base, &alt)?;
    let target = eps * gamma / (1.0 - gamma);
    let detail = format!("H = {value:.9}, target {target:.9} ({:.2?})", took);
    if value >= target - 1e-6 && took < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let truth = random_problem(3, 2, 1, 0.9, 0, (0.1, 1.0)).map_err(|e| e.to_string())?;
    let grid = [10u64, 100, 1000];
    let seeds: Vec<u64> = (0..20).collect();
    let records = run_sweep(&truth, &SweepConfig::new(grid.to_vec(), seeds.clone(), 0.1)).map_err(|e| e.to_string())?;

    for &seed in &seeds {
        for &t in &grid {
            let mut model = GenerativeModel::new(truth.clone(), mix_seed(seed, t));
            let (_, d) = us_irl_se(&mut model, t).map_err(|e| e.to_string())?;
            for s in 0..3 {
                for a in 0..2 {
                    if d.visits(s, a) != t {
                        return Err(format!("N({s},{a}) = {} after t = {t}", d.visits(s, a)));
                    }
                }
            }
        }
    }

    let mut medians = Vec::new();
    let mut notes = Vec::new();
    for &t in &grid {
        let rows: Vec<_> = records.iter().filter(|r| r.t == t).collect();
        medians.push(median(&rows.iter().map(|r| r.hausdorff_estimate).collect::<Vec<_>>()));
        if rows.iter().all(|r| r.bound_valid) {
            let dominated = rows.iter().filter(|r| r.error_bound >= r.hausdorff_estimate).count();
            if dominated < 18 {
                return Err(format!("bound dominates in only {dominated}/20 seeds at t = {t}"));
            }
            notes.push(format!("t={t}: bound dominates {dominated}/20"));
        } else {
            notes.push(format!("t={t}: bound not yet valid"));
        }
    }
    let took = start.elapsed();
    let detail = format!("medians {medians:.4?}; {}; {:.1?}", notes.join(", "), took);
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    if decreasing && took < Duration::from_secs(600) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let truth = random_problem(3, 2, 1, 0.9, 0, (0.1, 1.0)).map_err(|e| e.to_string())?;
    let mut d = Dataset::for_problem(&truth);
    // Visit only (0, 0): every other pair and states 1, 2 keep zero counts.
    d.update_counts(0, 0, 2, &[1, 0]).unwrap();
    let p = empirical_problem(&d, &truth).map_err(|e| e.to_string())?;
    for s in 0..3 {
        for a in 0..2 {
            if d.visits(s, a) == 0 && !(0..3).all(|n| p.mdp().prob(s, a, n) == 1.0 / 3.0) {
                return Err(format!("p_hat(.|{s},{a}) is not uniform"));
            }
        }
        if d.state_visits(s) == 0 {
            let rows = [p.optimal().probs().row(s), p.experts()[0].policy.probs().row(s)];
            if !rows.iter().all(|row| row.iter().all(|&x| x == 0.5)) {
                return Err(format!("pi_hat(.|{s}) is not uniform"));
            }
        }
    }
    Ok("zero-count cells fall back to 1/S and 1/A".into())
}

fn criterion_8() -> Outcome {
    let p = example_fig1(0.9, 0.5).map_err(|e| e.to_string())?;
    let v = volume_upper_bounds(&p).map_err(|e| e.to_string())?;
    // 1/(1 - 0.9) is 10 only up to the rounding of 1 - 0.9 in binary.
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y;
    let detail = format!("single-agent {}, multi-expert {}", v.single_agent, v.multi_expert);
    if close(v.single_agent, 100.0) && close(v.multi_expert, 5.0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Radii and bound written out independently of the library.
fn oracle(t: f64, s: f64, a: f64, n: f64, delta: f64, pi_min: f64, gamma: f64, max_xi: f64) -> (f64, f64, f64, f64) {
    let l = (3.0 * s * a * n).ln() - delta.ln();
    let beta = if s > 1.0 {
        ((l + (s - 1.0) * (1.0 + (t / (s - 1.0)).ln_1p())) / t).sqrt()
    } else {
        (l / t).sqrt()
    };
    let alpha = if a > 1.0 {
        ((l + (a - 1.0) * (1.0 + (t * a / (a - 1.0)).ln_1p())) / (t * a)).sqrt()
    } else {
        (l / (t * a)).sqrt()
    };
    let rho = (3.0 * l / pi_min / t / a).sqrt();
    let c = 2.0 * 2f64.sqrt() * gamma / (1.0 - gamma);
    let q = f64::min(max_xi / pi_min, 1.0 / (1.0 - gamma));
    (beta, alpha, rho, c * beta + rho * q + c * alpha * q + c * beta * q)
}

fn criterion_9() -> Outcome {
    let tuples = [
        (4u64, 3usize, 2usize, 1usize, 0.05, 1.0, 0.9, 0.5),
        (10, 3, 2, 1, 0.1, 0.25, 0.9, 0.5),
        (100, 5, 3, 2, 0.01, 0.1, 0.5, 1.0),
        (1, 2, 2, 1, 0.5, 0.5, 0.0, 0.2),
        (1000, 10, 4, 3, 0.1, 0.05, 0.99, 2.0),
        (7, 1, 1, 1, 0.2, 1.0, 0.7, 0.1),
        (123_456, 20, 5, 4, 0.001, 0.3, 0.95, 0.3),
        (50, 4, 1, 2, 0.3, 0.6, 0.8, 5.0),
        (2, 1, 6, 1, 0.9, 0.9, 0.3, 0.01),
        (999, 7, 7, 7, 0.07, 0.07, 0.6, 0.7),
    ];
    let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(f64::MIN_POSITIVE);
    for (k, &(t, s, a, n, delta, pi_min, gamma, max_xi)) in tuples.iter().enumerate() {
        let r = concentration_radii(t, s, a, n, delta, pi_min).map_err(|e| e.to_string())?;
        let inputs = BoundInputs::new(s, a, n, gamma, delta, pi_min, max_xi).map_err(|e| e.to_string())?;
        let b = error_bound(t, &inputs).map_err(|e| e.to_string())?;
        let (beta, alpha, rho, bound) = oracle(t as f64, s as f64, a as f64, n as f64, delta, pi_min, gamma, max_xi);
        if !(rel(r.beta, beta) && rel(r.alpha, alpha) && rel(r.rho, rho) && rel(b.value, bound)) {
            return Err(format!(
                "tuple {k}: library ({}, {}, {}, {}) vs oracle ({beta}, {alpha}, {rho}, {bound})",
                r.beta, r.alpha, r.rho, b.value
            ));
        }
        for eps in [0.5, 0.1] {
            let m = required_m(eps, &inputs).map_err(|e| e.to_string())?;
            let at = error_bound(m, &inputs).unwrap();
            let before_ok = m == 1 || {
                let before = error_bound(m - 1, &inputs).unwrap();
                !before.valid || before.value > eps
            };
            if !(at.valid && at.value <= eps && before_ok) {
                return Err(format!("tuple {k}, eps {eps}: required_m = {m} is not minimal and sufficient"));
            }
        }
    }
    Ok("10 tuples match the oracle; required_m minimal and sufficient".into())
}

/// Minimum of `c.x` over `G x <= h` by trying every square subsystem.
fn brute_force_lp(c: &DVector<f64>, g: &DMatrix<f64>, h: &DVector<f64>) -> Option<f64> {
    let (m, d) = (g.nrows(), g.ncols());
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a = g.select_rows(idx.iter());
        let b = h.select_rows(idx.iter());
        if let Some(x) = a.clone().lu().solve(&b) {
            if (&a * &x - &b).amax() < 1e-9 && (g * &x - h).max() <= 1e-9 {
                let v = c.dot(&x);
                best = Some(best.map_or(v, |bv: f64| bv.min(v)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn criterion_10(cases: &[Case]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut infeasible = 0;
    for k in 0..200 {
        let d = rng.random_range(1..=6);
        let extra = rng.random_range(0..=6);
        let mut g = DMatrix::zeros(2 * d + extra, d);
        let mut h = DVector::zeros(2 * d + extra);
        for j in 0..d {
            g[(2 * j, j)] = 1.0;
            h[2 * j] = rng.random_range(0.5..2.0);
            g[(2 * j + 1, j)] = -1.0;
            h[2 * j + 1] = rng.random_range(0.5..2.0);
        }
        for i in 2 * d..2 * d + extra {
            for j in 0..d {
                g[(i, j)] = rng.random_range(-1.0..1.0);
            }
            h[i] = rng.random_range(-0.5..1.0);
        }
        let c = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let lp = LinearProgram::new(c.clone(), g.clone(), h.clone()).unwrap();
        let simplex = lp_solve(&lp).map_err(|e| e.to_string())?;
        match (simplex, brute_force_lp(&c, &g, &h)) {
            (LpOutcome::Optimal { value, .. }, Some(v)) if (value - v).abs() <= 1e-7 => {}
            (LpOutcome::Infeasible, None) => infeasible += 1,
            (s, o) => return Err(format!("LP {k}: simplex {:?} vs oracle {o:?}", s.value())),
        }
    }
    let mut members = 0;
    for case in cases {
        for r in &case.rewards {
            if membership_implicit(&case.problem, r, DEFAULT_TOL).unwrap().is_member() {
                let dist = directed_distance(r, &case.polytope).map_err(|e| e.to_string())?;
                if dist != 0.0 {
                    return Err(format!("member at distance {dist:e}"));
                }
                members += 1;
            }
        }
    }
    // Vertices of the Figure-1 set measured in flattened form as well.
    let p = example_fig1(0.9, 0.5).unwrap();
    let poly = polytope_h_rep(&p, DEFAULT_TOL).unwrap();
    for v in irlse_core::polytope::enumerate_vertices(poly.h_rep(), 10).unwrap() {
        if directed_distance(&unflatten(&v, 2, 2), &poly).unwrap() != 0.0 {
            return Err(format!("vertex {:?} at positive distance", flatten(&unflatten(&v, 2, 2)).as_slice()));
        }
    }
    Ok(format!("200 LPs agree ({infeasible} infeasible); {members} members at distance 0"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cases = build_cases();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 oracle equivalence", Box::new(|| criterion_1(&cases))),
        ("2 parametrisation round trip", Box::new(|| criterion_2(&cases))),
        ("3 shrinkage and cap soundness", Box::new(|| criterion_3(&cases))),
        ("4 Figure-1 membership grid", Box::new(criterion_4)),
        ("5(i) sub-optimal expert pair", Box::new(criterion_5_subopt)),
        ("5(ii) transition chain pair", Box::new(criterion_5_chain)),
        ("6 estimation convergence", Box::new(criterion_6)),
        ("7 zero-count fallbacks", Box::new(criterion_7)),
        ("8 volume bounds", Box::new(criterion_8)),
        ("9 formula fidelity", Box::new(criterion_9)),
        ("10 LP core", Box::new(|| criterion_10(&cases))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        match run() {
            Ok(detail) => println!("PASS  [{name}] {detail} ({:.1?})", t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{name}] {detail} ({:.1?})", t.elapsed());
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1?}",
        criteria.len() - failed,
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

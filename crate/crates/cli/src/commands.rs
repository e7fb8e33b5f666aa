use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use serde_json::json;

use irlse_core::estimation::{
    complexity_constants, error_bound, required_m, us_irl_se, BoundInputs, GenerativeModel,
};
use irlse_core::feasible::{membership_implicit, volume_upper_bounds, zeta_caps};
use irlse_core::hausdorff::{hausdorff_problems, HausdorffMode, HausdorffOptions, HausdorffReport};
use irlse_core::instances::{InstanceSpec, LB_TREE_NORMALISATION};
use irlse_core::io::{read_problem, read_reward, write_problem};
use irlse_core::sweep::{run_sweep, SweepConfig, CSV_HEADER};
use irlse_core::{Error, IrlSeProblem};

use crate::{EstimateArgs, Family, HausdorffArgs, LbArgs, ModeArg, SweepArgs};

pub const EXIT_NOT_MEMBER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) | Error::EmptyPolytope => EXIT_NUMERIC,
            Error::DimensionCap { .. } | Error::UnsupportedMode(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        let mut message = e.to_string();
        if matches!(e, Error::DimensionCap { .. }) {
            message.push_str("; use --mode lower");
        }
        Self { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

pub fn check(problem: &Path, reward: &Path, tol: f64) -> CmdResult {
    let p = read_problem(problem)?;
    let r = read_reward(reward)?;
    let report = membership_implicit(&p, &r, tol)?;
    if report.is_member() {
        println!("member");
        return Ok(ExitCode::SUCCESS);
    }
    println!("not a member: {} violated condition(s)", report.violations.len());
    for v in &report.violations {
        println!("  {v}");
    }
    Ok(ExitCode::from(EXIT_NOT_MEMBER))
}

pub fn estimate(args: &EstimateArgs) -> CmdResult {
    let truth = read_problem(&args.problem)?;
    let constants = complexity_constants(&truth).ok();
    let (m, target) = match (args.m, args.epsilon, args.delta) {
        (Some(m), None, None) => (m, None),
        (None, Some(eps), Some(delta)) => {
            let inputs = BoundInputs::from_problem(&truth, delta)?;
            let m = required_m(eps, &inputs)?;
            (m, Some((eps, delta, error_bound(m, &inputs)?.value)))
        }
        _ => return Err(Failure::usage("give either --m or both --epsilon and --delta")),
    };
    let mut model = GenerativeModel::new(truth, args.seed);
    let (estimate, dataset) = us_irl_se(&mut model, m)?;
    let mut meta = json!({
        "m": m,
        "seed": args.seed,
        "total_queries": dataset.total(),
    });
    if let Some(c) = constants {
        meta["pi_min"] = json!(c.pi_min);
        meta["pi_min_max"] = json!(c.pi_min_max);
        meta["q0"] = json!(c.q0);
        meta["q1"] = json!(c.q1);
        meta["q2"] = json!(c.q2);
    }
    if let Some((eps, delta, bound)) = target {
        meta["epsilon"] = json!(eps);
        meta["delta"] = json!(delta);
        meta["error_bound"] = json!(bound);
    }
    write_problem(&args.out, &estimate, Some(meta))?;
    println!("m = {m}, {} queries, written to {}", dataset.total(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn mode_of(arg: ModeArg) -> HausdorffMode {
    match arg {
        ModeArg::Exact => HausdorffMode::Exact,
        ModeArg::Lower => HausdorffMode::LowerBound,
    }
}

fn fmt_point(x: &nalgebra::DVector<f64>) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{:.6}", v + 0.0)).collect();
    format!("[{}]", parts.join(", "))
}

fn print_report(r: &HausdorffReport) {
    println!("{:<18}{:.9}", "hausdorff", r.value);
    println!("{:<18}{}", "mode", r.mode);
    println!("{:<18}{:.9}  ({} points)", "a -> b", r.forward.value, r.forward.points_checked);
    println!("{:<18}{:.9}  ({} points)", "b -> a", r.backward.value, r.backward.points_checked);
    let w = r.witness();
    println!("{:<18}{}", "witness", fmt_point(&w.witness));
    println!("{:<18}{}", "nearest", fmt_point(&w.nearest));
}

pub fn hausdorff(args: &HausdorffArgs) -> CmdResult {
    let a = read_problem(&args.problem_a)?;
    let b = read_problem(&args.problem_b)?;
    let options = HausdorffOptions {
        mode: mode_of(args.mode),
        budget: args.budget,
        seed: args.seed,
        ..HausdorffOptions::default()
    };
    let report = hausdorff_problems(&a, &b, &options)?;
    print_report(&report);
    if args.json {
        let w = report.witness();
        let line = json!({
            "value": report.value,
            "mode": report.mode.tag(),
            "forward": report.forward.value,
            "backward": report.backward.value,
            "witness": w.witness.as_slice(),
            "nearest": w.nearest.as_slice(),
        });
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: &SweepArgs) -> CmdResult {
    if args.t_grid.is_empty() {
        return Err(Failure::usage("--t-grid needs at least one value"));
    }
    let truth = read_problem(&args.problem)?;
    let mut config = SweepConfig::new(
        args.t_grid.clone(),
        (args.first_seed..args.first_seed + args.seeds).collect(),
        args.delta,
    );
    config.mode = args.mode.map(mode_of);
    config.budget = args.budget;
    let records = run_sweep(&truth, &config)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn family_specs(args: &LbArgs) -> Result<(InstanceSpec, Option<InstanceSpec>), Failure> {
    let want_alt = args.alt_out.is_some();
    let need = |what: &str| Failure::usage(format!("--alt-out for this family needs {what}"));
    Ok(match args.family {
        Family::Fig1 => (
            InstanceSpec::Fig1 {
                gamma: args.gamma,
                xi: args.xi,
            },
            None,
        ),
        Family::LbChain => {
            let chain = |variant| InstanceSpec::LbChain {
                s_bar: args.s_bar,
                num_actions: args.actions,
                gamma: args.gamma,
                eps: args.eps,
                variant,
            };
            let variant = match args.variant.as_deref() {
                None => None,
                Some(&[j, k]) => Some((j, k)),
                Some(_) => return Err(Failure::usage("--variant takes two values, j,k")),
            };
            if want_alt {
                let v = variant.ok_or_else(|| need("--variant j,k"))?;
                (chain(None), Some(chain(Some(v))))
            } else {
                (chain(variant), None)
            }
        }
        Family::LbTree => {
            let tree = |signs: Vec<i8>| InstanceSpec::LbTree {
                s_bar: args.s_bar,
                num_actions: args.actions,
                gamma: args.gamma,
                eps: args.eps,
                signs,
            };
            let signs = args.signs.clone().ok_or_else(|| Failure::usage("lb-tree needs --signs"))?;
            let alt = if want_alt {
                let w = args.alt_signs.clone().unwrap_or_else(|| signs.iter().map(|v| -v).collect());
                Some(tree(w))
            } else {
                None
            };
            (tree(signs), alt)
        }
        Family::LbSubopt => {
            let sub = |variant_state| InstanceSpec::LbSubopt {
                s_bar: args.s_bar,
                gamma: args.gamma,
                xi: args.xi,
                pi_min: args.pi_min,
                alpha: args.alpha,
                variant_state,
            };
            if want_alt {
                (sub(None), Some(sub(Some(args.variant_state.unwrap_or(1)))))
            } else {
                (sub(args.variant_state), None)
            }
        }
        Family::Random => (
            InstanceSpec::Random {
                num_states: args.states,
                num_actions: args.actions,
                num_experts: args.experts,
                gamma: args.gamma,
                seed: args.seed,
                xi_range: (args.xi_lo, args.xi_hi),
            },
            None,
        ),
    })
}

fn write_instance(spec: &InstanceSpec, path: &Path) -> Result<IrlSeProblem, Failure> {
    let problem = spec.build()?;
    let mut meta = json!({ "instance": spec });
    if matches!(spec, InstanceSpec::LbTree { .. }) {
        meta["normalisation"] = json!(LB_TREE_NORMALISATION);
    }
    write_problem(path, &problem, Some(meta))?;
    println!("{} instance written to {}", spec.family(), path.display());
    Ok(problem)
}

pub fn lb(args: &LbArgs) -> CmdResult {
    let (base, alt) = family_specs(args)?;
    if alt.is_none() && args.alt_out.is_some() {
        return Err(Failure::usage("this family has no alternative instance"));
    }
    write_instance(&base, &args.out)?;
    if let (Some(spec), Some(path)) = (alt, &args.alt_out) {
        write_instance(&spec, path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_table(name: &str, t: &nalgebra::DMatrix<f64>) {
    println!("{name}:");
    for s in 0..t.nrows() {
        let cells: Vec<String> = t.row(s).iter().map(|v| format!("{v:>12.6}")).collect();
        println!("  s{s:<3}{}", cells.join(""));
    }
}

pub fn volume(problem: &Path) -> CmdResult {
    let p = read_problem(problem)?;
    let caps = zeta_caps(&p)?;
    let v = volume_upper_bounds(&p)?;
    print_table("g", &caps.g);
    print_table("k", &caps.k);
    let pairs: Vec<String> = v.pairs.iter().map(|(s, a)| format!("({s},{a})")).collect();
    println!("unplayed pairs: {}", pairs.join(" "));
    println!("single-agent bound: {}", v.single_agent);
    println!("multi-expert bound: {}", v.multi_expert);
    Ok(ExitCode::SUCCESS)
}

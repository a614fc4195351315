use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use neumann_lab::harness::accept::{self, Suite};
use neumann_lab::harness::{self, Measure, SweepPlan};
use neumann_lab::kernel::{calibrate_bti_constant, held_out_check, refine_calibration, KernelEvaluator, SamplingPlan};
use neumann_lab::schedule::{build_constants, default_b_sweep, exponents, verify_schedule_end_behavior, Mode, ScheduleParams};
use neumann_lab::seqlab::{builtin_suite, running_min_j_lambda, sharpness_probe, write_summary};
use neumann_lab::{geometry::Domain, Error, Execution, Result};

#[derive(Parser)]
#[command(name = "neumann-lab", version, about = "Heat equation with radiation on a shrinking boundary patch")]
struct Cli {
    /// Output root (default: $NEUMANN_LAB_OUT or ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disable the data-parallel paths.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanKind {
    Standard,
    Refined,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write report, trace.csv and config.snapshot.
    Simulate {
        /// Config file or built-in name (blowup_fixed_gamma, prevention_global, cap_B5, disk_cap_shrink).
        #[arg(long)]
        scenario: String,
        /// Override a config key, e.g. `--set solver.resolution=32`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Kernel normalization, symmetry, boundary flux and Gaussian domination.
    KernelCheck,
    /// Calibrate the boundary-time integral constant on the unit square.
    Calibrate {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "standard")]
        plan: PlanKind,
        /// Skip the local search around the best samples.
        #[arg(long)]
        no_refine: bool,
    },
    /// Print the constant pipeline of one schedule.
    Schedule {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "M0")]
        m0: f64,
        #[arg(long)]
        gamma1: f64,
        #[arg(long = "B")]
        b: Option<f64>,
        /// A number, or `calibrate` (box domains, n = 2 uses the unit square).
        #[arg(long)]
        chat: String,
        /// Also print milestones `M_0..M_k`.
        #[arg(long)]
        milestones: Option<usize>,
        /// Also sweep `C_B*` over `B/M₀` (capped mode).
        #[arg(long)]
        end_behavior: bool,
    },
    /// Lifespans along one config axis, with a power-law fit.
    LifespanScan {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "schedule.gamma1")]
        axis: String,
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        values: Vec<f64>,
        /// Resolutions per point for extrapolation; 1 means a single run.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Running minima of jΛ_j for the built-in sequence families.
    SequenceCheck {
        #[arg(long = "J", default_value_t = 1_000_000)]
        j: u64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Run acceptance criteria; exits nonzero if any fails.
    Accept {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let root = cli.out.clone().unwrap_or_else(harness::output_root);
    match dispatch(cli.cmd, &root, exec) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(2)
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn dispatch(cmd: Cmd, root: &Path, exec: Execution) -> Result<bool> {
    match cmd {
        Cmd::Simulate { scenario, overrides } => {
            let mut s = harness::resolve_scenario(&scenario)?;
            for o in &overrides {
                let (k, v) = o
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
                s = s.with_override(k.trim(), v.trim())?;
            }
            let (report, _) = harness::run_scenario(&s, exec)?;
            let dir = root.join(&s.name);
            harness::write_run(&dir, &s, &report)?;
            print_json(&serde_json::json!({
                "scenario": s.name,
                "verdict": report.verdict,
                "T_star": report.t_star,
                "t_end": report.t_end,
                "max_M": report.max_m(),
                "constants": report.constants,
                "output": dir,
            }))?;
            Ok(true)
        }
        Cmd::KernelCheck => {
            let ctx = accept::Context::new(exec);
            let mut ok = true;
            for id in [1, 2, 3] {
                let r = accept::run_criterion(id, &ctx);
                println!("{}", r.line());
                ok &= r.passed;
            }
            Ok(ok)
        }
        Cmd::Calibrate { alpha, plan, no_refine } => {
            let d = Domain::unit_square();
            let eval = KernelEvaluator::new(d)?;
            let p = match plan {
                PlanKind::Standard => SamplingPlan::standard(&d),
                PlanKind::Refined => SamplingPlan::standard(&d).refined(),
            };
            let mut cal = calibrate_bti_constant(&eval, alpha, &p, exec)?;
            if !no_refine {
                cal = refine_calibration(&eval, &cal, exec)?;
            }
            let check = held_out_check(&eval, alpha, cal.c_hat, &SamplingPlan::held_out(&d), exec)?;
            print_json(&serde_json::json!({ "calibration": cal, "held_out": check }))?;
            Ok(check.violations == 0)
        }
        Cmd::Schedule { mode, n, q, beta, m0, gamma1, b, chat, milestones, end_behavior } => {
            let mut p = match mode {
                Mode::Global => ScheduleParams::global(n, q, beta, m0, gamma1, 1.0),
                Mode::Capped => ScheduleParams::capped(
                    n,
                    q,
                    beta,
                    m0,
                    gamma1,
                    b.ok_or_else(|| Error::Config("capped mode needs --B".into()))?,
                    1.0,
                ),
            };
            p.c_hat = if chat == "calibrate" {
                let (alpha, _, _) = exponents(&p)?;
                let domain = if n == 3 { Domain::box3d(1.0, 1.0, 1.0)? } else { Domain::unit_square() };
                harness::calibrate(domain, alpha, exec)?.c_hat
            } else {
                chat.parse().map_err(|_| Error::Config(format!("--chat: `{chat}` is not a number")))?
            };
            let c = build_constants(&p)?;
            let ms = milestones.map(|k| c.milestones(k)).transpose()?;
            let eb = if end_behavior { Some(verify_schedule_end_behavior(&p, &default_b_sweep())?) } else { None };
            print_json(&serde_json::json!({ "constants": c, "milestones": ms, "end_behavior": eb }))?;
            Ok(true)
        }
        Cmd::LifespanScan { scenario, axis, values, levels, parallelism } => {
            let base = harness::resolve_scenario(&scenario)?;
            let measure = if levels <= 1 { Measure::Run } else { Measure::Lifespan { levels } };
            let plan = SweepPlan { base, axis, values, parallelism, measure, regress: true };
            let scenarios = plan.instantiate()?;
            let agg = harness::run_sweep(&plan, exec)?;
            let dir = root.join(format!("{}_scan", plan.base.name));
            agg.write(&dir, &scenarios)?;
            print_json(&agg)?;
            Ok(!agg.partial)
        }
        Cmd::SequenceCheck { j, q, eps } => {
            let dir = root.join("sequence-check");
            std::fs::create_dir_all(&dir)?;
            let mut traces = Vec::new();
            for spec in builtin_suite(q) {
                let t = running_min_j_lambda(&spec, j, exec)?;
                t.write_csv(&dir.join(format!("{}.csv", spec.label)))?;
                traces.push(t);
            }
            let sharp = sharpness_probe(eps, q, j, exec)?;
            sharp.write_csv(&dir.join("sharpness.csv"))?;
            traces.push(sharp);
            write_summary(std::io::stdout().lock(), &traces, 1000.min(j))?;
            write_summary(std::fs::File::create(dir.join("summary.csv"))?, &traces, 1000.min(j))?;
            Ok(true)
        }
        Cmd::Accept { suite } => {
            let report = accept::accept(suite, exec);
            for c in &report.criteria {
                println!("{}", c.line());
            }
            std::fs::create_dir_all(root.join("accept"))?;
            let name = format!("{}.json", serde_json::to_value(suite)?.as_str().unwrap_or("suite"));
            serde_json::to_writer_pretty(std::fs::File::create(root.join("accept").join(name))?, &report)?;
            println!("{}", if report.passed { "ACCEPTED" } else { "REJECTED" });
            Ok(report.passed)
        }
    }
}

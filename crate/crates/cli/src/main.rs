//! Command-line experiments for the pathwise calculus library.
//!
//! Every subcommand parses its specs up front (fail fast), computes, and
//! writes one CSV with a header row and a trailing `# config:` echo of the
//! resolved configuration. Floats are printed with 17 significant digits so
//! outputs are byte-identical across runs and round-trippable.
//!
//! Exit codes: 0 = computed and converged, 2 = computed but diverged,
//! 1 = usage or input error.

mod spec;

use clap::{Args, Parser, Subcommand};
use pathwise::functional::probes::{pi_continuity_report, u_continuity_probe, DerivSchedule};
use pathwise::functional::{ClosureFunctional, FunctionalClass};
use pathwise::identities::{
    demo_off_grid_jump, demo_uniform_gap, fair_game_probe, harmonic_check, kw_check, HeatFn,
};
use pathwise::integrate::{cov_c12, cov_class_s, pathwise_integral};
use pathwise::partition::PartitionSequence;
use pathwise::path::CadlagPath;
use pathwise::quadvar::{qv_estimate, qv_matrix};
use pathwise::report::Verdict;
use spec::{parse_functional, parse_integrand, parse_level_range, parse_partition, parse_path};
use std::fmt::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pathwise",
    about = "Pathwise calculus experiments: quadratic variation, left-Riemann integrals, change-of-variable residuals",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path spec: `step:0.5=2.0;0.75=-1.0`, `fs:levels=14,seed=42`,
    /// `pl:file=nodes.csv`; `+` composes by addition.
    #[arg(long)]
    path: String,
    /// Partition spec: `dyadic:T=1.0,levels=8..14` or `uniform:T=1.0,n=100`.
    #[arg(long)]
    partition: String,
    /// Override the level range from the partition spec, e.g. `6..12`.
    #[arg(long)]
    levels: Option<String>,
    /// Convergence tolerance.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Output CSV file (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    /// Default seed for `fs:` path specs that omit `seed=`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quadratic variation along the partition sequence with J1 diagnostics.
    Qv {
        #[command(flatten)]
        common: CommonArgs,
        /// Report times (comma separated); defaults to the horizon.
        #[arg(long)]
        times: Option<String>,
    },
    /// Pathwise integral of an integrand as a limit of left Riemann sums.
    Integrate {
        #[command(flatten)]
        common: CommonArgs,
        /// Integrand spec: `const:c=1`, `left:f=square`, `oneform:f=identity`,
        /// `grad:<functional spec>`.
        #[arg(long)]
        functional: String,
    },
    /// Change-of-variable residuals for a functional along the path.
    Cov {
        #[command(flatten)]
        common: CommonArgs,
        /// Functional spec: `eval:f=square`, `follmer:f=square`,
        /// `qvint:phi=identity`, `affine:a=1,b=2`, `oneform:f=identity`.
        #[arg(long)]
        functional: String,
        /// Tolerance for the quadratic-variation convergence precondition.
        #[arg(long, default_value_t = 0.1)]
        qv_tol: f64,
    },
    /// Product-rule identity `(∫φdx)(∫ψdx) = ∫φψ'd[x] + ∫{φ,ψ}dx`.
    Kw {
        #[command(flatten)]
        common: CommonArgs,
        /// φ integrand spec (default `const:c=1`).
        #[arg(long, default_value = "const:c=1")]
        phi: String,
        /// ψ integrand spec (default `const:c=1`).
        #[arg(long, default_value = "const:c=1")]
        psi: String,
        #[arg(long, default_value_t = 0.1)]
        qv_tol: f64,
    },
    /// Harmonicity and integral representation of f(t, x(t)).
    Harmonic {
        #[command(flatten)]
        common: CommonArgs,
        /// `u2-t`, `u3-3tu`, or `affine:a=..,b=..`.
        #[arg(long)]
        f: String,
        /// Constant quadratic-variation density Σ.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        qv_tol: f64,
    },
    /// Fair-game perturbation probe for a class-M functional.
    Fairgame {
        #[command(flatten)]
        common: CommonArgs,
        /// Class-M functional spec (`affine:a=..,b=..`, `follmer:f=..`,
        /// `oneform:f=..`).
        #[arg(long)]
        functional: String,
        /// Perturbation fraction in (0, 1).
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Topology counterexample demos.
    Counterexample {
        #[command(subcommand)]
        which: CounterCmd,
    },
    /// Sample a path to CSV (columns t,x1..xm).
    Sample {
        /// Path spec.
        #[arg(long)]
        path: String,
        /// Horizon.
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Number of sample intervals.
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Subcommand)]
enum CounterCmd {
    /// A jump time never on any grid still has convergent quadratic sums.
    Prop11 {
        /// The jump time.
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        partition: String,
        #[arg(long)]
        levels: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Uniformly close approximants with a persistent quadratic-variation gap.
    Ucont {
        #[arg(long)]
        path: String,
        #[arg(long)]
        partition: String,
        /// Level of the piecewise-linear approximant.
        #[arg(long, default_value_t = 12)]
        pl_level: u32,
        /// Level at which the approximant's quadratic sums are evaluated.
        #[arg(long, default_value_t = 18)]
        deep_level: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// The eight sequential continuity criteria for the jump detector
    /// F(t,x) = |Δx_t(t0)|.
    Pi2c {
        #[arg(long)]
        path: String,
        #[arg(long)]
        partition: String,
        /// Detector time t0 (also the evaluation time).
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<String>,
    },
}

/// 17 significant digits: round-trippable, byte-stable.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(out: &Option<String>, content: &str) -> Result<(), String> {
    match out {
        Some(file) => {
            std::fs::write(file, content).map_err(|e| format!("cannot write {file}: {e}"))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

struct Run {
    csv: String,
    config: String,
    verdict: Verdict,
}

fn finish(run: Run, out: &Option<String>) -> Result<Verdict, String> {
    let mut content = run.csv;
    let _ = writeln!(content, "# config: {}", run.config);
    write_output(out, &content)?;
    Ok(run.verdict)
}

fn resolve_levels(common: &CommonArgs) -> Result<(PartitionSequence, Vec<u32>), String> {
    let p = parse_partition(&common.partition).map_err(|e| format!("--partition: {e}"))?;
    let levels = match &common.levels {
        Some(s) => parse_level_range(s, 0).map_err(|e| format!("--levels: {e}"))?,
        None => p.levels,
    };
    Ok((p.seq, levels))
}

fn run_qv(common: &CommonArgs, times: &Option<String>) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let report_times: Vec<f64> = match times {
        Some(s) => s
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("--times: bad number '{v}'"))
            })
            .collect::<Result<_, _>>()?,
        None => vec![horizon],
    };
    let qv = if x.dim() == 1 {
        qv_estimate(&x, &seq, &levels, common.tol)
    } else {
        qv_matrix(&x, &seq, &levels, common.tol)
    }
    .map_err(|e| e.to_string())?;
    let m = x.dim();
    let mut csv = String::from("level,t");
    for i in 0..m {
        for j in 0..m {
            let _ = write!(csv, ",q{}{}", i + 1, j + 1);
        }
    }
    csv.push_str(",d_J1_to_next\n");
    for (k, (n, qpath)) in qv.levels.iter().enumerate() {
        for t in &report_times {
            let v = qpath.try_eval(*t).map_err(|e| e.to_string())?;
            let _ = write!(csv, "{n},{}", fmt(*t));
            for entry in &v {
                let _ = write!(csv, ",{}", fmt(*entry));
            }
            match qv.cauchy_diags.get(k) {
                Some(d) => {
                    let _ = writeln!(csv, ",{}", fmt(*d));
                }
                None => {
                    let _ = writeln!(csv, ",");
                }
            }
        }
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=qv path=\"{}\" partition=\"{}\" levels={}..{} tol={} times={:?}",
            common.path,
            common.partition,
            levels.first().unwrap(),
            levels.last().unwrap(),
            fmt(common.tol),
            report_times,
        ),
        verdict: qv.verdict,
    })
}

fn run_integrate(common: &CommonArgs, functional: &str) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    if levels.len() < 3 {
        return Err("integrate needs at least three levels".into());
    }
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let top = seq
        .level(*levels.last().unwrap())
        .map_err(|e| e.to_string())?;
    let phi = parse_integrand(functional, &top).map_err(|e| format!("--functional: {e}"))?;
    let (_, report) = pathwise_integral(&phi, &x, &seq, &levels, horizon, common.tol)
        .map_err(|e| e.to_string())?;
    let mut csv = String::from("level,value,delta_prev,dJ1_prev\n");
    for (k, n) in report.levels.iter().enumerate() {
        let delta = if k == 0 {
            String::new()
        } else {
            fmt(report.diffs[k - 1])
        };
        let dj1 = if k == 0 {
            String::new()
        } else {
            fmt(report.j1_dists[k - 1])
        };
        let _ = writeln!(csv, "{n},{},{delta},{dj1}", fmt(report.values[k]));
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=integrate path=\"{}\" partition=\"{}\" functional=\"{}\" tol={}",
            common.path,
            common.partition,
            functional,
            fmt(common.tol)
        ),
        verdict: report.verdict,
    })
}

fn run_cov(common: &CommonArgs, functional: &str, qv_tol: f64) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let top = seq
        .level(*levels.last().unwrap())
        .map_err(|e| e.to_string())?;
    let f = parse_functional(functional, &top).map_err(|e| format!("--functional: {e}"))?;
    let sched = DerivSchedule::default();
    let cov = match f.class() {
        FunctionalClass::ClassM | FunctionalClass::ClassS => {
            cov_class_s(f.as_ref(), &x, &seq, &levels, horizon, &sched)
                .map_err(|e| e.to_string())?
        }
        _ => {
            let qv = qv_estimate(&x, &seq, &levels, qv_tol).map_err(|e| e.to_string())?;
            if qv.verdict != Verdict::Converged {
                return Err(format!(
                    "quadratic variation did not converge at tol {qv_tol}; diagnostics: {:?}",
                    qv.cauchy_diags
                ));
            }
            cov_c12(f.as_ref(), &x, &seq, &levels, &qv, horizon, &sched)
                .map_err(|e| e.to_string())?
        }
    };
    let mut csv = String::from("level,lhs,time,integral,qv,jump,residual\n");
    for (k, n) in cov.levels.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{n},{},{},{},{},{},{}",
            fmt(cov.lhs),
            fmt(cov.time_term),
            fmt(cov.integral_terms[k]),
            fmt(cov.qv_term),
            fmt(cov.jump_term),
            fmt(cov.residuals[k])
        );
    }
    let verdict = if cov.top_residual().abs() <= common.tol {
        Verdict::Converged
    } else {
        Verdict::Diverged
    };
    Ok(Run {
        csv,
        config: format!(
            "cmd=cov path=\"{}\" partition=\"{}\" functional=\"{}\" tol={} qv_tol={}",
            common.path,
            common.partition,
            functional,
            fmt(common.tol),
            fmt(qv_tol)
        ),
        verdict,
    })
}

fn run_kw(common: &CommonArgs, phi: &str, psi: &str, qv_tol: f64) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let top = seq
        .level(*levels.last().unwrap())
        .map_err(|e| e.to_string())?;
    let phi_i = parse_integrand(phi, &top).map_err(|e| format!("--phi: {e}"))?;
    let psi_i = parse_integrand(psi, &top).map_err(|e| format!("--psi: {e}"))?;
    let qv = qv_estimate(&x, &seq, &levels, qv_tol).map_err(|e| e.to_string())?;
    let r = kw_check(&phi_i, &psi_i, &x, &seq, &levels, &qv, horizon, common.tol)
        .map_err(|e| e.to_string())?;
    let mut csv = String::from("level,lhs,stieltjes,bracket_integral,residual\n");
    for (k, n) in r.levels.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{n},{},{},{},{}",
            fmt(r.lhs[k]),
            fmt(r.rhs_components[0].1[k]),
            fmt(r.rhs_components[1].1[k]),
            fmt(r.residuals[k])
        );
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=kw path=\"{}\" partition=\"{}\" phi=\"{phi}\" psi=\"{psi}\" tol={} qv_tol={}",
            common.path,
            common.partition,
            fmt(common.tol),
            fmt(qv_tol)
        ),
        verdict: r.verdict,
    })
}

fn run_harmonic(common: &CommonArgs, fspec: &str, sigma: f64, qv_tol: f64) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let heat = match fspec {
        "u2-t" => HeatFn::square_minus_t(),
        "u3-3tu" => HeatFn::cubic_heat(),
        other => {
            let Some(body) = other.strip_prefix("affine:") else {
                return Err(format!(
                    "--f: unknown function '{other}' (u2-t|u3-3tu|affine:a=..,b=..)"
                ));
            };
            let mut a = None;
            let mut b = None;
            for part in body.split(',') {
                match part.split_once('=') {
                    Some(("a", v)) => a = v.parse::<f64>().ok(),
                    Some(("b", v)) => b = v.parse::<f64>().ok(),
                    _ => return Err(format!("--f: bad affine field '{part}'")),
                }
            }
            match (a, b) {
                (Some(a), Some(b)) => HeatFn::affine(a, b),
                _ => return Err("--f: affine needs a= and b=".into()),
            }
        }
    };
    let qv = qv_estimate(&x, &seq, &levels, qv_tol).map_err(|e| e.to_string())?;
    let r = harmonic_check(
        &heat,
        &move |_t, _u| sigma,
        &x,
        &seq,
        &levels,
        &qv,
        horizon,
        common.tol,
        0.10,
    )
    .map_err(|e| e.to_string())?;
    let mut csv = String::from("level,lhs,integral,residual,pde_max_abs\n");
    for (k, n) in r.representation.levels.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{n},{},{},{},{}",
            fmt(r.representation.lhs[k]),
            fmt(r.representation.rhs_components[0].1[k]),
            fmt(r.representation.residuals[k]),
            fmt(r.pde_max_abs)
        );
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=harmonic path=\"{}\" partition=\"{}\" f=\"{fspec}\" sigma={} tol={} qv_tol={}",
            common.path,
            common.partition,
            fmt(sigma),
            fmt(common.tol),
            fmt(qv_tol)
        ),
        verdict: r.representation.verdict,
    })
}

fn run_fairgame(common: &CommonArgs, functional: &str, eps: f64) -> Result<Run, String> {
    let (seq, levels) = resolve_levels(common)?;
    let horizon = seq.horizon();
    let x = parse_path(&common.path, horizon, common.seed).map_err(|e| format!("--path: {e}"))?;
    let top = seq
        .level(*levels.last().unwrap())
        .map_err(|e| e.to_string())?;
    let probe = seq
        .level(levels[levels.len() / 2])
        .map_err(|e| e.to_string())?;
    let f = parse_functional(functional, &top).map_err(|e| format!("--functional: {e}"))?;
    let sched = DerivSchedule::default();
    let r = fair_game_probe(f.as_ref(), &x, &probe, eps, &sched).map_err(|e| e.to_string())?;
    let mut csv = String::from("t_star,eps,predicted,certified,negative\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        if r.t_star.is_nan() {
            String::new()
        } else {
            fmt(r.t_star)
        },
        fmt(r.eps),
        fmt(r.predicted),
        fmt(r.certified),
        r.certified < 0.0
    );
    let verdict = match r.verdict {
        Verdict::NoOp => Verdict::NoOp,
        _ if r.certified < 0.0 && (r.certified - r.predicted).abs() <= 1e-10 => Verdict::Converged,
        _ => Verdict::Diverged,
    };
    Ok(Run {
        csv,
        config: format!(
            "cmd=fairgame path=\"{}\" partition=\"{}\" functional=\"{functional}\" eps={}",
            common.path,
            common.partition,
            fmt(eps)
        ),
        verdict,
    })
}

fn run_prop11(
    alpha: f64,
    partition: &str,
    levels: &Option<String>,
    tol: f64,
) -> Result<Run, String> {
    let p = parse_partition(partition).map_err(|e| format!("--partition: {e}"))?;
    let levels = match levels {
        Some(s) => parse_level_range(s, 0).map_err(|e| format!("--levels: {e}"))?,
        None => p.levels,
    };
    let max_level = *levels.last().unwrap();
    let qv_levels: Vec<u32> = levels
        .iter()
        .copied()
        .filter(|n| *n + 4 > max_level)
        .collect();
    let qv_levels = if qv_levels.len() < 2 {
        levels.clone()
    } else {
        qv_levels
    };
    let r =
        demo_off_grid_jump(alpha, &p.seq, max_level, &qv_levels, tol).map_err(|e| e.to_string())?;
    let mut csv = String::from("level,member,prev_point,qn_at_T,dj1_next\n");
    for (n, member) in &r.memberships {
        let part = p.seq.level(*n).map_err(|e| e.to_string())?;
        let prev = part.prev_point(alpha).map_err(|e| e.to_string())?;
        let k = qv_levels.iter().position(|m| m == n);
        let qn = match k {
            Some(k) => fmt(r.qv.levels[k].1.eval(p.seq.horizon())[0]),
            None => String::new(),
        };
        let dj1 = match k {
            Some(k) if k < r.qv.cauchy_diags.len() => fmt(r.qv.cauchy_diags[k]),
            _ => String::new(),
        };
        let _ = writeln!(csv, "{n},{member},{},{qn},{dj1}", fmt(prev));
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=counterexample-prop11 alpha={} partition=\"{partition}\" levels={}..{} tol={}",
            fmt(alpha),
            levels.first().unwrap(),
            levels.last().unwrap(),
            fmt(tol)
        ),
        verdict: if !r.ever_member && r.qv.verdict == Verdict::Converged {
            Verdict::Converged
        } else {
            Verdict::Diverged
        },
    })
}

fn run_ucont(path: &str, partition: &str, pl_level: u32, deep_level: u32) -> Result<Run, String> {
    let p = parse_partition(partition).map_err(|e| format!("--partition: {e}"))?;
    let horizon = p.seq.horizon();
    let x = parse_path(path, horizon, None).map_err(|e| format!("--path: {e}"))?;
    let qv = qv_estimate(&x, &p.seq, &p.levels, 0.1).map_err(|e| e.to_string())?;
    let r = demo_uniform_gap(&x, &p.seq, pl_level, deep_level, &qv, horizon)
        .map_err(|e| e.to_string())?;
    let mut csv = String::from("applicable,sup_distance,qv_path,qv_approx,qv_gap,follmer_gap\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        r.applicable,
        fmt(r.sup_distance),
        fmt(r.qv_of_path),
        fmt(r.qv_of_approx),
        fmt(r.qv_gap),
        fmt(r.follmer_gap)
    );
    Ok(Run {
        csv,
        config: format!(
            "cmd=counterexample-ucont path=\"{path}\" partition=\"{partition}\" pl_level={pl_level} deep_level={deep_level}"
        ),
        verdict: if r.applicable { Verdict::Converged } else { Verdict::NoOp },
    })
}

fn run_pi2c(path: &str, partition: &str, t0: f64, tol: f64) -> Result<Run, String> {
    let p = parse_partition(partition).map_err(|e| format!("--partition: {e}"))?;
    let horizon = p.seq.horizon();
    let x = parse_path(path, horizon, None).map_err(|e| format!("--path: {e}"))?;
    if x.dim() != 1 {
        return Err("pi2c needs a scalar path".into());
    }
    let f = ClosureFunctional::new("jump-detector", move |_t, y: &CadlagPath| {
        y.jump_at(t0)[0].abs()
    });
    let u_pass = u_continuity_probe(&f, &x, t0, 1e-9).map_err(|e| e.to_string())?;
    let rep =
        pi_continuity_report(&f, &x, t0, &p.seq, &p.levels, tol).map_err(|e| e.to_string())?;
    let mut csv = String::from("criterion,target,estimate,pass\n");
    let _ = writeln!(csv, "uniform-probe,,,{u_pass}");
    for c in &rep.criteria {
        let est = c.estimate.map(fmt).unwrap_or_default();
        let pass = c
            .pass
            .map(|b| b.to_string())
            .unwrap_or_else(|| "n/a".into());
        let _ = writeln!(csv, "{},{},{est},{pass}", c.label, fmt(c.target));
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=counterexample-pi2c path=\"{path}\" partition=\"{partition}\" t0={} tol={}",
            fmt(t0),
            fmt(tol)
        ),
        verdict: Verdict::Converged,
    })
}

fn run_sample(path: &str, horizon: f64, points: usize) -> Result<Run, String> {
    let x = parse_path(path, horizon, None).map_err(|e| format!("--path: {e}"))?;
    let m = x.dim();
    let mut csv = String::from("t");
    for d in 0..m {
        let _ = write!(csv, ",x{}", d + 1);
    }
    csv.push('\n');
    for k in 0..=points {
        let t = horizon * k as f64 / points as f64;
        let v = x.eval(t);
        let _ = write!(csv, "{}", fmt(t));
        for entry in &v {
            let _ = write!(csv, ",{}", fmt(*entry));
        }
        csv.push('\n');
    }
    Ok(Run {
        csv,
        config: format!(
            "cmd=sample path=\"{path}\" horizon={} points={points}",
            fmt(horizon)
        ),
        verdict: Verdict::Converged,
    })
}

fn dispatch(cli: Cli) -> Result<Verdict, String> {
    match &cli.cmd {
        Cmd::Qv { common, times } => finish(run_qv(common, times)?, &common.out),
        Cmd::Integrate { common, functional } => {
            finish(run_integrate(common, functional)?, &common.out)
        }
        Cmd::Cov {
            common,
            functional,
            qv_tol,
        } => finish(run_cov(common, functional, *qv_tol)?, &common.out),
        Cmd::Kw {
            common,
            phi,
            psi,
            qv_tol,
        } => finish(run_kw(common, phi, psi, *qv_tol)?, &common.out),
        Cmd::Harmonic {
            common,
            f,
            sigma,
            qv_tol,
        } => finish(run_harmonic(common, f, *sigma, *qv_tol)?, &common.out),
        Cmd::Fairgame {
            common,
            functional,
            eps,
        } => finish(run_fairgame(common, functional, *eps)?, &common.out),
        Cmd::Counterexample { which } => match which {
            CounterCmd::Prop11 {
                alpha,
                partition,
                levels,
                tol,
                out,
            } => finish(run_prop11(*alpha, partition, levels, *tol)?, out),
            CounterCmd::Ucont {
                path,
                partition,
                pl_level,
                deep_level,
                out,
            } => finish(run_ucont(path, partition, *pl_level, *deep_level)?, out),
            CounterCmd::Pi2c {
                path,
                partition,
                t0,
                tol,
                out,
            } => finish(run_pi2c(path, partition, *t0, *tol)?, out),
        },
        Cmd::Sample {
            path,
            horizon,
            points,
            out,
        } => finish(run_sample(path, *horizon, *points)?, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(Verdict::Converged) | Ok(Verdict::NoOp) => ExitCode::SUCCESS,
        Ok(Verdict::Diverged) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

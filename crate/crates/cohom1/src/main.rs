//! Pipeline driver: solves the shooting problem, fits and verifies the
//! interpolants, evaluates the certificate, and exports curves and
//! coefficient dumps for external plotting.
//!
//! Exit codes: 0 all requested checks pass, 1 a verdict check failed,
//! 2 configuration or runtime error.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cohom1::certify;
use cohom1::error::{Error, Result};
use cohom1::precision::{real_from_f64, to_decimal, Prec};
use cohom1::shooting::{
    broyden_solve, fd_linearize, run_jobs, run_pair, shoot_a, shoot_omega, LinearizationResult,
    Shot,
};
use cohom1::system::Params;
use cohom1::verify::{
    assemble_hats, check_assumption1, check_assumption2, compute_report, hats_from_json,
    hats_to_json, norm_tables, HatData,
};

#[derive(Parser)]
#[command(
    name = "cohom1",
    about = "shooting, verification and certification for cohomogeneity-one Einstein metrics on spheres"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate both Taylor solutions past their stopping times and dump
    /// the patch coefficients.
    Heuristic(Common),
    /// Solve A(alpha) = Omega(omega) from the given seeds.
    Shoot(Common),
    /// Finite-difference linearization of the shooting maps at the solution.
    Linearize(Common),
    /// Fit Chebyshev interpolants and bound the residuals rigorously.
    Verify(Common),
    /// Evaluate the certificate inequality chain and print the verdict.
    Certify(Common),
    /// Sample the A and Omega curves over a parameter range as CSV.
    Curves(CurvesArgs),
    /// Run the whole pipeline: heuristic, shoot, linearize, verify, certify.
    Full(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Dimension of the first collapsing sphere factor.
    #[arg(long, default_value_t = 2)]
    d1: u32,
    /// Dimension of the second sphere factor.
    #[arg(long, default_value_t = 9)]
    d2: u32,
    /// Target decimal digits (>= 15).
    #[arg(long, default_value_t = 30)]
    digits: u32,
    /// Taylor normalization parameter.
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    /// Initial guesses "alpha,omega" for the shooting parameters.
    #[arg(long, default_value = "6.08,6.18", value_parser = parse_pair)]
    seed: (f64, f64),
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Verification tolerance; defaults to 10^(-digits/3 + 2).
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter range "lo,hi" swept for both curves.
    #[arg(long, default_value = "0.5,8", value_parser = parse_pair)]
    trange: (f64, f64),
    /// Number of samples per curve.
    #[arg(long, default_value_t = 200)]
    samples: u32,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"a,b\", got {s:?}"))?;
    let p = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number {x:?}: {e}"))
    };
    Ok((p(a)?, p(b)?))
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Heuristic(c) => cmd_heuristic(&validated(c)?),
        Cmd::Shoot(c) => cmd_shoot(&validated(c)?).map(|_| 0),
        Cmd::Linearize(c) => cmd_linearize(&validated(c)?).map(|_| 0),
        Cmd::Verify(c) => cmd_verify(&validated(c)?).map(|(code, ..)| code),
        Cmd::Certify(c) => cmd_certify(&validated(c)?),
        Cmd::Curves(c) => {
            let common = validated(c.common.clone())?;
            cmd_curves(&common, c.trange, c.samples)
        }
        Cmd::Full(c) => cmd_full(&validated(c)?),
    }
}

fn validated(c: Common) -> Result<Common> {
    if c.digits < 15 {
        return Err(Error::Config(format!(
            "digits must be at least 15, got {}",
            c.digits
        )));
    }
    if c.d1 < 2 || c.d2 < 2 {
        return Err(Error::Config(format!(
            "sphere dimensions must be at least 2, got ({}, {})",
            c.d1, c.d2
        )));
    }
    if !(c.rho > 0.0) {
        return Err(Error::Config(format!("rho must be positive, got {}", c.rho)));
    }
    Ok(c)
}

fn default_epsilon(c: &Common) -> f64 {
    c.epsilon
        .unwrap_or_else(|| 10f64.powi(-((c.digits / 3) as i32) + 2))
}

fn prec_for(c: &Common) -> Prec {
    Prec::from_digits(c.digits + 20)
}

fn base_params(c: &Common, alpha: f64) -> Result<Params> {
    Params::new(c.d1, c.d2, real_from_f64(alpha, prec_for(c)))
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn dump_path(shot: &Shot, path: &Path) -> Result<()> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    shot.path.dump_jsonl(&mut f)
}

/// Stage 1: heuristic propagation of both sides past their stopping times.
fn cmd_heuristic(c: &Common) -> Result<i32> {
    let prec = prec_for(c);
    let pa = base_params(c, c.seed.0)?;
    let po = pa.mirrored(real_from_f64(c.seed.1, prec));
    let (ra, ro) = run_pair(
        || shoot_a(&pa, c.digits, c.rho, prec),
        || shoot_omega(&po, c.digits, c.rho, prec),
    );
    let (ra, ro) = (ra?, ro?);
    dump_path(&ra, &c.out.join("eta_path.jsonl"))?;
    dump_path(&ro, &c.out.join("zeta_path.jsonl"))?;
    let drift = |s: &Shot| -> Result<String> {
        let d = s.path.conserved_drift(1e-3, s.result.t_stop.to_f64(), 64)?;
        Ok(to_decimal(&d, 6))
    };
    let summary = serde_json::json!({
        "d1": c.d1, "d2": c.d2, "digits": c.digits, "rho": c.rho,
        "alpha": c.seed.0, "omega": c.seed.1,
        "eta": ra.result.to_json(c.digits),
        "zeta": ro.result.to_json(c.digits),
        "eta_drift": drift(&ra)?,
        "zeta_drift": drift(&ro)?,
    });
    write_json(&c.out.join("heuristic.json"), &summary)?;
    println!(
        "eta side:  t_stop = {}  drift = {}",
        ra.result.t_stop.to_f64(),
        drift(&ra)?
    );
    println!(
        "zeta side: t_stop = {}  drift = {}",
        ro.result.t_stop.to_f64(),
        drift(&ro)?
    );
    Ok(0)
}

struct Solved {
    base: Params,
    alpha: cohom1::precision::BigReal,
    omega: cohom1::precision::BigReal,
    a_shot: Shot,
    o_shot: Shot,
}

fn solve(c: &Common) -> Result<Solved> {
    let prec = prec_for(c);
    let base = base_params(c, c.seed.0)?;
    let (alpha, omega) = broyden_solve(&base, c.seed.0, c.seed.1, c.digits, c.rho, prec)?;
    let pa = base.with_alpha(alpha.clone());
    let po = base.mirrored(omega.clone());
    let (ra, ro) = run_pair(
        || shoot_a(&pa, c.digits, c.rho, prec),
        || shoot_omega(&po, c.digits, c.rho, prec),
    );
    Ok(Solved {
        base,
        alpha,
        omega,
        a_shot: ra?,
        o_shot: ro?,
    })
}

fn shoot_json(c: &Common, s: &Solved) -> serde_json::Value {
    serde_json::json!({
        "d1": c.d1, "d2": c.d2, "digits": c.digits, "rho": c.rho,
        "alpha": to_decimal(&s.alpha, c.digits),
        "omega": to_decimal(&s.omega, c.digits),
        "a_side": s.a_shot.result.to_json(c.digits),
        "omega_side": s.o_shot.result.to_json(c.digits),
    })
}

/// Stage 2: Broyden solve of the shooting problem from the seeds.
fn cmd_shoot(c: &Common) -> Result<Solved> {
    let s = solve(c)?;
    write_json(&c.out.join("shoot.json"), &shoot_json(c, &s))?;
    dump_path(&s.a_shot, &c.out.join("eta_path.jsonl"))?;
    dump_path(&s.o_shot, &c.out.join("zeta_path.jsonl"))?;
    println!("alpha   = {}", to_decimal(&s.alpha, c.digits));
    println!("omega   = {}", to_decimal(&s.omega, c.digits));
    println!(
        "t_alpha = {}",
        to_decimal(&s.a_shot.result.t_stop, c.digits)
    );
    println!(
        "t_omega = {}",
        to_decimal(&s.o_shot.result.t_stop, c.digits)
    );
    Ok(s)
}

/// Stage 3: finite differences of the shooting maps at the solution.
fn cmd_linearize(c: &Common) -> Result<(Solved, LinearizationResult, HatData)> {
    let s = cmd_shoot(c)?;
    let (lin, shots) = fd_linearize(&s.base, &s.alpha, &s.omega, c.digits, c.rho)?;
    write_json(&c.out.join("linearize.json"), &lin.to_json(c.digits))?;
    let hats = assemble_hats(&s.base, &shots, c.digits)?;
    write_json(&c.out.join("hats.json"), &hats_to_json(&hats))?;
    println!("rho1   = {}", to_decimal(&lin.rho1, 8));
    println!("sigma1 = {}", to_decimal(&lin.sigma1, 8));
    println!(
        "A1     = ({}, {})",
        to_decimal(&lin.a1[0], 8),
        to_decimal(&lin.a1[1], 8)
    );
    println!(
        "Omega1 = ({}, {})",
        to_decimal(&lin.omega1[0], 8),
        to_decimal(&lin.omega1[1], 8)
    );
    Ok((s, lin, hats))
}

fn load_or_build_hats(c: &Common) -> Result<HatData> {
    let path = c.out.join("hats.json");
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let hats = hats_from_json(&v)?;
        if hats.base.d1 != c.d1 || hats.base.d2 != c.d2 {
            return Err(Error::Config(format!(
                "{} was produced for ({}, {}), not ({}, {})",
                path.display(),
                hats.base.d1,
                hats.base.d2,
                c.d1,
                c.d2
            )));
        }
        eprintln!("reusing fitted interpolants from {}", path.display());
        return Ok(hats);
    }
    let (_, _, hats) = cmd_linearize(c)?;
    Ok(hats)
}

/// Stage 4: a posteriori residual bounds for the fitted interpolants.
fn cmd_verify(c: &Common) -> Result<(i32, HatData, cohom1::verify::ResidualReport)> {
    let hats = load_or_build_hats(c)?;
    let report = compute_report(&hats)?;
    let epsilon = default_epsilon(c);
    let a1 = check_assumption1(&hats, &report, epsilon)?;
    let a2 = check_assumption2(&hats, &report, epsilon)?;
    let pass = a1.pass() && a2.pass();
    write_json(
        &c.out.join("verify.json"),
        &serde_json::json!({
            "epsilon": epsilon,
            "report": report.to_json(c.digits),
            "assumption1": a1.to_json(),
            "assumption2": a2.to_json(),
            "pass": pass,
        }),
    )?;
    print!("{}", a1.render_text());
    print!("{}", a2.render_text());
    println!(
        "epsilon achieved: {}  (required {epsilon:e})",
        to_decimal(&report.epsilon_achieved, 4)
    );
    println!("verification: {}", if pass { "PASS" } else { "FAIL" });
    Ok((if pass { 0 } else { 1 }, hats, report))
}

/// Stage 5: the certificate inequality chain and the existence verdict.
fn cmd_certify(c: &Common) -> Result<i32> {
    let (_, hats, report) = cmd_verify(c)?;
    // The Jacobian comes from a fresh linearization; it is cheap next to the
    // residual bounds above.
    let (lin, _) = fd_linearize(
        &hats.base,
        &hats.start.slope,
        &hats.end.slope,
        c.digits,
        c.rho,
    )?;
    let tables = norm_tables(&hats)?;
    let cert = certify::final_verdict(&hats.base, &tables, &report, &lin)?;
    write_json(&c.out.join("certificate.json"), &cert.to_json())?;
    print!("{}", cert.render_text());
    Ok(if cert.final_verdict { 0 } else { 1 })
}

/// Samples both shooting curves over the parameter window.
fn cmd_curves(c: &Common, trange: (f64, f64), samples: u32) -> Result<i32> {
    if !(trange.0 > 0.0 && trange.1 > trange.0) {
        return Err(Error::Config(format!(
            "curve range must be positive and increasing, got {trange:?}"
        )));
    }
    let samples = samples.max(1) as usize;
    let prec = prec_for(c);
    let grid: Vec<f64> = (0..samples)
        .map(|i| {
            if samples == 1 {
                trange.0
            } else {
                trange.0 + (trange.1 - trange.0) * i as f64 / (samples - 1) as f64
            }
        })
        .collect();
    let base = base_params(c, c.seed.0)?;
    let mut jobs: Vec<Box<dyn FnOnce() -> (usize, Result<Shot>) + Send + '_>> = Vec::new();
    for (i, &v) in grid.iter().enumerate() {
        let pa = base.with_alpha(real_from_f64(v, prec));
        jobs.push(Box::new(move || (i, shoot_a(&pa, c.digits, c.rho, prec))));
    }
    for (i, &v) in grid.iter().enumerate() {
        let po = base.mirrored(real_from_f64(v, prec));
        jobs.push(Box::new(move || {
            (samples + i, shoot_omega(&po, c.digits, c.rho, prec))
        }));
    }
    let mut rows: Vec<Option<String>> = vec![None; 2 * samples];
    for (i, res) in run_jobs(jobs) {
        let kind = if i < samples { "A" } else { "Omega" };
        let param = grid[i % samples];
        let row = match res {
            Ok(s) => format!(
                "{kind},{param},{},{},{}",
                s.result.map[0].to_f64(),
                s.result.map[1].to_f64(),
                s.result.t_stop.to_f64()
            ),
            Err(_) => format!("{kind},{param},,,"),
        };
        rows[i] = Some(row);
    }
    std::fs::create_dir_all(&c.out)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(c.out.join("curves.csv"))?);
    writeln!(f, "kind,param,c1,c2,t_stop")?;
    for row in rows.into_iter().flatten() {
        writeln!(f, "{row}")?;
    }
    println!(
        "wrote {} rows to {}",
        2 * samples,
        c.out.join("curves.csv").display()
    );
    Ok(0)
}

/// The whole pipeline in order; nonzero exit if any verdict fails.
fn cmd_full(c: &Common) -> Result<i32> {
    cmd_heuristic(c)?;
    let (s, lin, hats) = cmd_linearize(c)?;
    let report = compute_report(&hats)?;
    let epsilon = default_epsilon(c);
    let a1 = check_assumption1(&hats, &report, epsilon)?;
    let a2 = check_assumption2(&hats, &report, epsilon)?;
    let pass = a1.pass() && a2.pass();
    write_json(
        &c.out.join("verify.json"),
        &serde_json::json!({
            "epsilon": epsilon,
            "report": report.to_json(c.digits),
            "assumption1": a1.to_json(),
            "assumption2": a2.to_json(),
            "pass": pass,
        }),
    )?;
    print!("{}", a1.render_text());
    print!("{}", a2.render_text());
    let tables = norm_tables(&hats)?;
    let cert = certify::final_verdict(&s.base, &tables, &report, &lin)?;
    write_json(&c.out.join("certificate.json"), &cert.to_json())?;
    print!("{}", cert.render_text());
    Ok(if pass && cert.final_verdict { 0 } else { 1 })
}

//! Stopping-time detection, the shooting maps A and Omega, the 2-D Broyden
//! solve for A(alpha) = Omega(omega), and the finite-difference
//! linearization of the shooting maps.

use crate::error::{Error, Result};
use crate::precision::{to_decimal, BigReal, Prec};
use crate::system::{Params, State5};
use crate::taylor::{propagate_past_stop, SolutionPath};
use rug::ops::Pow;
use rug::Float;

/// Outcome of one shot: the slope, the stopping time, the phase vector
/// there, and the two-component boundary map value.
#[derive(Clone, Debug)]
pub struct ShotResult {
    pub slope: BigReal,
    pub t_stop: BigReal,
    pub endpoint: State5<BigReal>,
    pub map: [BigReal; 2],
}

/// A shot together with the propagated path it was measured on.
pub struct Shot {
    pub result: ShotResult,
    pub path: SolutionPath,
}

impl ShotResult {
    pub fn to_json(&self, digits: u32) -> serde_json::Value {
        serde_json::json!({
            "slope": to_decimal(&self.slope, digits),
            "t_stop": to_decimal(&self.t_stop, digits),
            "endpoint": self.endpoint.iter().map(|c| to_decimal(c, digits)).collect::<Vec<_>>(),
            "map": [to_decimal(&self.map[0], digits), to_decimal(&self.map[1], digits)],
        })
    }
}

const GRID_START: f64 = 0.5;
const GRID_STEP: f64 = 0.05;
const NEWTON_SWITCH_WIDTH: f64 = 1e-4;

/// The unique zero of Z(t) = d2/t + eta3(t): grid search for a sign change,
/// Brent's method down to a narrow bracket, then Newton using the series
/// derivative until |Z| <= 10^(-d_target).
pub fn stopping_time(path: &SolutionPath) -> Result<BigReal> {
    let bits = path.patches[0].coeffs[0][0].prec();
    let t_end = path.t_end.to_f64();
    let zf = |t: f64| -> Result<f64> {
        Ok(path.z_value(&Float::with_val(bits, t))?.to_f64())
    };

    // Bracket [lo, hi] with Z(lo) > 0 > Z(hi); Z is strictly decreasing.
    let mut lo = GRID_START.min(t_end / 2.0);
    while zf(lo)? <= 0.0 {
        lo -= GRID_STEP;
        if lo < GRID_STEP {
            return Err(Error::StoppingNotReached { t_end });
        }
    }
    let mut hi = lo;
    loop {
        let next = (hi + GRID_STEP).min(t_end);
        if next <= hi {
            return Err(Error::StoppingNotReached { t_end });
        }
        hi = next;
        if zf(hi)? < 0.0 {
            break;
        }
        if hi >= t_end {
            return Err(Error::StoppingNotReached { t_end });
        }
    }

    // Brent until the bracket is narrow.
    let z = |t: &BigReal| -> Result<BigReal> { path.z_value(t) };
    let mut a = Float::with_val(bits, lo);
    let mut b = Float::with_val(bits, hi);
    let mut fa = z(&a)?;
    let mut fb = z(&b)?;
    if Float::with_val(64, fa.abs_ref()) < Float::with_val(64, fb.abs_ref()) {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a.clone();
    let mut fc = fa.clone();
    let mut d = Float::with_val(bits, &b - &a);
    let mut mflag = true;
    let width_tol = Float::with_val(64, NEWTON_SWITCH_WIDTH);
    for _ in 0..200 {
        let width = Float::with_val(64, Float::with_val(bits, &b - &a).abs_ref());
        if width < width_tol || fb.is_zero() {
            break;
        }
        let s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            let t1 = Float::with_val(bits, &a * &fb) * &fc
                / (Float::with_val(bits, &fa - &fb) * Float::with_val(bits, &fa - &fc));
            let t2 = Float::with_val(bits, &b * &fa) * &fc
                / (Float::with_val(bits, &fb - &fa) * Float::with_val(bits, &fb - &fc));
            let t3 = Float::with_val(bits, &c * &fa) * &fb
                / (Float::with_val(bits, &fc - &fa) * Float::with_val(bits, &fc - &fb));
            t1 + t2 + t3
        } else {
            // secant
            let num = Float::with_val(bits, &fb * &Float::with_val(bits, &b - &a));
            let den = Float::with_val(bits, &fb - &fa);
            Float::with_val(bits, &b) - num / den
        };
        let mid = Float::with_val(bits, &a + &b) / 2u32;
        let between = (s > mid && s < b) || (s < mid && s > b) || (s > b && s < mid) || s == mid;
        let cond_far = {
            let sb = Float::with_val(64, Float::with_val(bits, &s - &b).abs_ref());
            let bc = Float::with_val(64, Float::with_val(bits, &b - &c).abs_ref());
            let cd = Float::with_val(64, Float::with_val(bits, &c - &d).abs_ref());
            if mflag {
                sb >= bc / 2u32
            } else {
                sb >= cd / 2u32
            }
        };
        let (s, used_bisect) = if !between || cond_far {
            (mid, true)
        } else {
            (s, false)
        };
        mflag = used_bisect;
        let fs = z(&s)?;
        d = c;
        c = b.clone();
        fc = fb.clone();
        if (fa.is_sign_positive() && fs.is_sign_negative())
            || (fa.is_sign_negative() && fs.is_sign_positive())
        {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if Float::with_val(64, fa.abs_ref()) < Float::with_val(64, fb.abs_ref()) {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }

    // Newton polish on the series.
    let tol = Float::with_val(64, 10u32).pow(-(path.d_target as i32));
    let mut t = b;
    let mut trace = String::new();
    for it in 0..200 {
        let zt = path.z_value(&t)?;
        if Float::with_val(64, zt.abs_ref()) <= tol {
            return Ok(t);
        }
        let dz = path.z_derivative(&t)?;
        if dz.is_zero() {
            return Err(Error::Convergence {
                reason: "Newton derivative vanished while refining the stopping time".to_string(),
                trace,
            });
        }
        trace.push_str(&format!("newton {it}: t = {}, Z = {:e}\n", t.to_f64(), zt.to_f64()));
        t -= Float::with_val(bits, &zt / &dz);
    }
    Err(Error::Convergence {
        reason: "stopping-time Newton refinement did not converge".to_string(),
        trace,
    })
}

/// The W value glued at the stopping time: the positive root of
/// d2 W^2 = (d1+d2-1) lambda - d1 X^2 - (1/d1 + 1/d2) Y^2, with
/// X = alpha + eta1(t_stop), Y = eta2(t_stop).
pub fn w_at_stop(p: &Params, endpoint: &State5<BigReal>) -> Result<BigReal> {
    let bits = endpoint[0].prec();
    let d1 = p.d1 as i64;
    let d2 = p.d2 as i64;
    let lam = p.lambda() as i64;
    let x = Float::with_val(bits, &endpoint[3] + &endpoint[0]);
    let y = Float::with_val(bits, &endpoint[1]);
    let mut acc = Float::with_val(bits, (d1 + d2 - 1) * lam);
    acc -= Float::with_val(bits, x.square_ref()) * d1;
    acc -= Float::with_val(bits, y.square_ref()) * (d1 + d2) / (d1 * d2);
    acc /= d2;
    if acc.is_sign_negative() {
        return Err(Error::Domain(
            "shooting map: W^2 is negative at the stopping time".to_string(),
        ));
    }
    Ok(acc.sqrt())
}

/// One shot of the first boundary map A: propagate at p.alpha past the
/// stopping time and evaluate A = (W(t_stop), eta2(t_stop)).
pub fn shoot_a(p: &Params, d_target: u32, rho: f64, prec: Prec) -> Result<Shot> {
    let path = propagate_past_stop(p, d_target, rho, prec)?;
    let t_stop = stopping_time(&path)?;
    let endpoint = path.evaluate(&t_stop, 0)?;
    let w = w_at_stop(p, &endpoint)?;
    let map = [w, endpoint[1].clone()];
    Ok(Shot {
        result: ShotResult {
            slope: p.alpha.clone(),
            t_stop,
            endpoint,
            map,
        },
        path,
    })
}

/// One shot of the second boundary map Omega on the mirrored system
/// (p already has d1, d2 swapped and alpha = omega):
/// Omega = (zeta1(t_stop) + omega, zeta2(t_stop)).
pub fn shoot_omega(p: &Params, d_target: u32, rho: f64, prec: Prec) -> Result<Shot> {
    let path = propagate_past_stop(p, d_target, rho, prec)?;
    let t_stop = stopping_time(&path)?;
    let endpoint = path.evaluate(&t_stop, 0)?;
    let bits = endpoint[0].prec();
    let first = Float::with_val(bits, &endpoint[0] + &p.alpha);
    let map = [first, endpoint[1].clone()];
    Ok(Shot {
        result: ShotResult {
            slope: p.alpha.clone(),
            t_stop,
            endpoint,
            map,
        },
        path,
    })
}

fn map_gap(a: &[BigReal; 2], o: &[BigReal; 2]) -> [BigReal; 2] {
    let bits = a[0].prec();
    [
        Float::with_val(bits, &a[0] - &o[0]),
        Float::with_val(bits, &a[1] - &o[1]),
    ]
}

fn norm2_f64(v: &[BigReal; 2]) -> f64 {
    v[0].to_f64().hypot(v[1].to_f64())
}

/// G(alpha, omega) = A(alpha) - Omega(omega) for the base pair (d1, d2).
fn shoot_gap(
    base: &Params,
    alpha: &BigReal,
    omega: &BigReal,
    d_target: u32,
    rho: f64,
    prec: Prec,
) -> Result<[BigReal; 2]> {
    let pa = base.with_alpha(alpha.clone());
    let po = base.mirrored(omega.clone());
    let (ra, ro) = run_pair(
        move || shoot_a(&pa, d_target, rho, prec),
        move || shoot_omega(&po, d_target, rho, prec),
    );
    Ok(map_gap(&ra?.result.map, &ro?.result.map))
}

/// Runs two closures, concurrently when COHOM1_THREADS permits.
pub fn run_pair<T: Send, U: Send>(
    f: impl FnOnce() -> T + Send,
    g: impl FnOnce() -> U + Send,
) -> (T, U) {
    if thread_budget() >= 2 {
        std::thread::scope(|s| {
            let hf = s.spawn(f);
            let gv = g();
            (hf.join().unwrap(), gv)
        })
    } else {
        (f(), g())
    }
}

/// Maximum worker threads, from COHOM1_THREADS (default: available cores).
pub fn thread_budget() -> usize {
    match std::env::var("COHOM1_THREADS") {
        Ok(v) => v.parse().unwrap_or(1).max(1),
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

const FD_JACOBIAN_STEP: f64 = 1e-5;
const ROUND_SEED_DIST: f64 = 0.3;
const ROUND_LIMIT: f64 = 1e-6;

/// Solves A(alpha) = Omega(omega) by Broyden's method, seeded with a
/// forward-difference Jacobian.  Converging to the round pair from seeds
/// that were not near it is reported as a failure.
pub fn broyden_solve(
    base: &Params,
    seed_alpha: f64,
    seed_omega: f64,
    d_target: u32,
    rho: f64,
    prec: Prec,
) -> Result<(BigReal, BigReal)> {
    let bits = prec.bits();
    let tol = 10f64.powi(-(d_target as i32) + 5);
    let mut x = [
        Float::with_val(bits, seed_alpha),
        Float::with_val(bits, seed_omega),
    ];
    let mut g = shoot_gap(base, &x[0], &x[1], d_target, rho, prec)?;
    let mut trace = format!(
        "seed: ({}, {}), |G| = {:.3e}\n",
        seed_alpha,
        seed_omega,
        norm2_f64(&g)
    );

    // Forward-difference initial Jacobian: two extra shots.
    let h = Float::with_val(bits, FD_JACOBIAN_STEP);
    let ga = shoot_gap(
        base,
        &Float::with_val(bits, &x[0] + &h),
        &x[1],
        d_target,
        rho,
        prec,
    )?;
    let go = shoot_gap(
        base,
        &x[0],
        &Float::with_val(bits, &x[1] + &h),
        d_target,
        rho,
        prec,
    )?;
    let mut j = [[Float::new(bits), Float::new(bits)], [Float::new(bits), Float::new(bits)]];
    for i in 0..2 {
        j[i][0] = Float::with_val(bits, &ga[i] - &g[i]) / &h;
        j[i][1] = Float::with_val(bits, &go[i] - &g[i]) / &h;
    }

    for it in 0..120 {
        if norm2_f64(&g) <= tol {
            let round_alpha = ((base.d1 - 1) as f64).sqrt();
            let round_omega = ((base.d2 - 1) as f64).sqrt();
            let seed_dist = (seed_alpha - round_alpha).hypot(seed_omega - round_omega);
            let sol_dist =
                (x[0].to_f64() - round_alpha).hypot(x[1].to_f64() - round_omega);
            if seed_dist > ROUND_SEED_DIST && sol_dist < ROUND_LIMIT {
                return Err(Error::Convergence {
                    reason: "iteration collapsed onto the round pair from non-round seeds"
                        .to_string(),
                    trace,
                });
            }
            return Ok((x[0].clone(), x[1].clone()));
        }
        // step = -J^-1 g
        let det = Float::with_val(bits, &j[0][0] * &j[1][1])
            - Float::with_val(bits, &j[0][1] * &j[1][0]);
        if det.is_zero() {
            return Err(Error::Convergence {
                reason: "Broyden Jacobian became singular".to_string(),
                trace,
            });
        }
        let dx = [
            (Float::with_val(bits, &j[0][1] * &g[1]) - Float::with_val(bits, &j[1][1] * &g[0]))
                / &det,
            (Float::with_val(bits, &j[1][0] * &g[0]) - Float::with_val(bits, &j[0][0] * &g[1]))
                / &det,
        ];
        let step_norm = norm2_f64(&dx);
        if !step_norm.is_finite() || step_norm > 10.0 {
            return Err(Error::Convergence {
                reason: format!("divergent step of size {step_norm:.3e}"),
                trace,
            });
        }
        x[0] += &dx[0];
        x[1] += &dx[1];
        if !(x[0].is_sign_positive() && x[1].is_sign_positive()) {
            return Err(Error::Convergence {
                reason: "iterate left the positive quadrant".to_string(),
                trace,
            });
        }
        let g_new = shoot_gap(base, &x[0], &x[1], d_target, rho, prec)?;
        trace.push_str(&format!(
            "iter {it}: ({:.10}, {:.10}), |G| = {:.3e}\n",
            x[0].to_f64(),
            x[1].to_f64(),
            norm2_f64(&g_new)
        ));
        // Rank-one update: J += (dg - J dx) dx^T / |dx|^2.
        let dg = map_gap(&g_new, &g);
        let jdx = [
            Float::with_val(bits, &j[0][0] * &dx[0]) + Float::with_val(bits, &j[0][1] * &dx[1]),
            Float::with_val(bits, &j[1][0] * &dx[0]) + Float::with_val(bits, &j[1][1] * &dx[1]),
        ];
        let dx2 = Float::with_val(bits, dx[0].square_ref())
            + Float::with_val(bits, dx[1].square_ref());
        for i in 0..2 {
            let r = Float::with_val(bits, &dg[i] - &jdx[i]);
            for k in 0..2 {
                j[i][k] += Float::with_val(bits, &r * &dx[k]) / &dx2;
            }
        }
        g = g_new;
    }
    Err(Error::Convergence {
        reason: format!("no convergence to |G| <= {tol:.1e} within 120 iterations"),
        trace,
    })
}

/// Endpoint data of the finite-difference linearization.
#[derive(Clone, Debug)]
pub struct LinearizationResult {
    /// mu_IC and its derivative at the base stopping time t_alpha.
    pub mu_ic_end: State5<BigReal>,
    pub mu_ic_prime_end: State5<BigReal>,
    /// nu_IC and its derivative at t_omega.
    pub nu_ic_end: State5<BigReal>,
    pub nu_ic_prime_end: State5<BigReal>,
    /// d t_alpha / d alpha and d t_omega / d omega.
    pub rho1: BigReal,
    pub sigma1: BigReal,
    /// dA/dalpha and dOmega/domega.
    pub a1: [BigReal; 2],
    pub omega1: [BigReal; 2],
    /// J = (A1 | -Omega1).
    pub j: [[BigReal; 2]; 2],
    pub delta: BigReal,
}

impl LinearizationResult {
    pub fn to_json(&self, digits: u32) -> serde_json::Value {
        let vec5 = |s: &State5<BigReal>| -> Vec<String> {
            s.iter().map(|c| to_decimal(c, digits)).collect()
        };
        serde_json::json!({
            "mu_ic_end": vec5(&self.mu_ic_end),
            "mu_ic_prime_end": vec5(&self.mu_ic_prime_end),
            "nu_ic_end": vec5(&self.nu_ic_end),
            "nu_ic_prime_end": vec5(&self.nu_ic_prime_end),
            "rho1": to_decimal(&self.rho1, digits),
            "sigma1": to_decimal(&self.sigma1, digits),
            "A1": [to_decimal(&self.a1[0], digits), to_decimal(&self.a1[1], digits)],
            "Omega1": [to_decimal(&self.omega1[0], digits), to_decimal(&self.omega1[1], digits)],
            "J": self.j.iter().map(|r| [to_decimal(&r[0], digits), to_decimal(&r[1], digits)]).collect::<Vec<_>>(),
            "delta": to_decimal(&self.delta, digits),
        })
    }
}

/// The four perturbed shots backing the finite differences, kept so the
/// verification stage can fit the same data.
pub struct FdShots {
    pub base_eta: Shot,
    pub base_zeta: Shot,
    pub eta_plus: Shot,
    pub eta_minus: Shot,
    pub zeta_plus: Shot,
    pub zeta_minus: Shot,
    pub delta: BigReal,
    pub d_work: u32,
}

/// Central finite difference of two states: (a - b) / (2 delta).
fn central_diff(
    a: &State5<BigReal>,
    b: &State5<BigReal>,
    delta: &BigReal,
) -> State5<BigReal> {
    std::array::from_fn(|i| {
        let bits = a[i].prec();
        let mut v = Float::with_val(bits, &a[i] - &b[i]);
        v /= Float::with_val(bits, delta * 2u32);
        v
    })
}

fn central_diff2(a: &[BigReal; 2], b: &[BigReal; 2], delta: &BigReal) -> [BigReal; 2] {
    let bits = a[0].prec();
    std::array::from_fn(|i| {
        let mut v = Float::with_val(bits, &a[i] - &b[i]);
        v /= Float::with_val(bits, delta * 2u32);
        v
    })
}

/// Checks an FD numerator against catastrophic cancellation.
fn check_significance(a: &BigReal, b: &BigReal, what: &str) -> Result<()> {
    let diff = Float::with_val(64, Float::with_val(a.prec(), a - b).abs_ref());
    if diff.is_zero() && !(a.is_zero() && b.is_zero()) {
        return Err(Error::Precision(format!(
            "finite difference of {what} lost all significant digits; increase the digit target"
        )));
    }
    let scale = Float::with_val(64, a.abs_ref());
    if !scale.is_zero() {
        let ulp = scale >> (a.prec() - 4);
        if !diff.is_zero() && diff < ulp {
            return Err(Error::Precision(format!(
                "finite difference of {what} retains fewer than 4 bits; increase the digit target"
            )));
        }
    }
    Ok(())
}

/// Step (III): central finite differences of the shooting data with respect
/// to the initial slopes, at step delta = 10^(-floor(digits/3)), propagated
/// at ceil(1.5 digits) + 20 working digits.
pub fn fd_linearize(
    base: &Params,
    alpha_hat: &BigReal,
    omega_hat: &BigReal,
    digits: u32,
    rho: f64,
) -> Result<(LinearizationResult, FdShots)> {
    let d_work = (digits * 3).div_ceil(2) + 20;
    let prec = Prec::from_digits(d_work);
    let bits = prec.bits();
    let k = digits / 3;
    let delta = {
        let mut v = Float::with_val(bits, 1u32);
        v /= Float::with_val(bits, 10u32).pow(k);
        v
    };

    let reprec = |x: &BigReal| Float::with_val(bits, x);
    let a_hat = reprec(alpha_hat);
    let o_hat = reprec(omega_hat);
    let params: [Params; 6] = [
        base.with_alpha(a_hat.clone()),
        base.mirrored(o_hat.clone()),
        base.with_alpha(Float::with_val(bits, &a_hat + &delta)),
        base.with_alpha(Float::with_val(bits, &a_hat - &delta)),
        base.mirrored(Float::with_val(bits, &o_hat + &delta)),
        base.mirrored(Float::with_val(bits, &o_hat - &delta)),
    ];
    let mut shots: Vec<Result<Shot>> = run_jobs(
        params
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let f: Box<dyn FnOnce() -> Result<Shot> + Send> = Box::new(move || {
                    // indices 0, 2, 3 are the eta shots; 1, 4, 5 the zeta shots
                    if matches!(i, 0 | 2 | 3) {
                        shoot_a(&p, digits, rho, prec)
                    } else {
                        shoot_omega(&p, digits, rho, prec)
                    }
                });
                f
            })
            .collect(),
    );
    let zeta_minus = shots.pop().unwrap()?;
    let zeta_plus = shots.pop().unwrap()?;
    let eta_minus = shots.pop().unwrap()?;
    let eta_plus = shots.pop().unwrap()?;
    let base_zeta = shots.pop().unwrap()?;
    let base_eta = shots.pop().unwrap()?;

    let t_a = &base_eta.result.t_stop;
    let t_o = &base_zeta.result.t_stop;

    // mu_IC is the slope-derivative at frozen time: difference the two
    // perturbed paths at the base stopping time.
    let ep = eta_plus.path.evaluate(t_a, 0)?;
    let em = eta_minus.path.evaluate(t_a, 0)?;
    check_significance(&ep[0], &em[0], "eta at the stopping time")?;
    let mu_ic_end = central_diff(&ep, &em, &delta);
    let mu_ic_prime_end = central_diff(
        &eta_plus.path.evaluate(t_a, 1)?,
        &eta_minus.path.evaluate(t_a, 1)?,
        &delta,
    );
    let zp = zeta_plus.path.evaluate(t_o, 0)?;
    let zm = zeta_minus.path.evaluate(t_o, 0)?;
    check_significance(&zp[0], &zm[0], "zeta at the stopping time")?;
    let nu_ic_end = central_diff(&zp, &zm, &delta);
    let nu_ic_prime_end = central_diff(
        &zeta_plus.path.evaluate(t_o, 1)?,
        &zeta_minus.path.evaluate(t_o, 1)?,
        &delta,
    );

    let fd_scalar = |a: &BigReal, b: &BigReal| -> BigReal {
        let mut v = Float::with_val(bits, a - b);
        v /= Float::with_val(bits, &delta * 2u32);
        v
    };
    check_significance(
        &eta_plus.result.t_stop,
        &eta_minus.result.t_stop,
        "the stopping time",
    )?;
    let rho1 = fd_scalar(&eta_plus.result.t_stop, &eta_minus.result.t_stop);
    let sigma1 = fd_scalar(&zeta_plus.result.t_stop, &zeta_minus.result.t_stop);
    // A and Omega are each evaluated at their own stopping time.
    let a1 = central_diff2(&eta_plus.result.map, &eta_minus.result.map, &delta);
    let omega1 = central_diff2(&zeta_plus.result.map, &zeta_minus.result.map, &delta);
    let j = [
        [a1[0].clone(), Float::with_val(bits, &omega1[0] * -1i32)],
        [a1[1].clone(), Float::with_val(bits, &omega1[1] * -1i32)],
    ];

    let delta_out = delta.clone();
    Ok((
        LinearizationResult {
            mu_ic_end,
            mu_ic_prime_end,
            nu_ic_end,
            nu_ic_prime_end,
            rho1,
            sigma1,
            a1,
            omega1,
            j,
            delta,
        },
        FdShots {
            base_eta,
            base_zeta,
            eta_plus,
            eta_minus,
            zeta_plus,
            zeta_minus,
            delta: delta_out,
            d_work,
        },
    ))
}

/// Runs the closures with at most `thread_budget()` of them in flight.
pub fn run_jobs<T: Send>(jobs: Vec<Box<dyn FnOnce() -> T + Send + '_>>) -> Vec<T> {
    let budget = thread_budget();
    if budget <= 1 {
        return jobs.into_iter().map(|f| f()).collect();
    }
    let mut out: Vec<Option<T>> = Vec::new();
    for _ in 0..jobs.len() {
        out.push(None);
    }
    let mut jobs: Vec<Option<Box<dyn FnOnce() -> T + Send + '_>>> =
        jobs.into_iter().map(Some).collect();
    let n = jobs.len();
    let mut start = 0;
    while start < n {
        let end = (start + budget).min(n);
        std::thread::scope(|s| {
            let handles: Vec<_> = (start..end)
                .map(|i| {
                    let f = jobs[i].take().unwrap();
                    s.spawn(f)
                })
                .collect();
            for (i, h) in (start..end).zip(handles) {
                out[i] = Some(h.join().unwrap());
            }
        });
        start = end;
    }
    out.into_iter().map(|o| o.unwrap()).collect()
}

/// Largest singular value of a 2x2 matrix, in plain floats.
pub fn op_norm_2x2(m: &[[BigReal; 2]; 2]) -> BigReal {
    let bits = m[0][0].prec();
    let sq = |x: &BigReal| Float::with_val(bits, x.square_ref());
    // Frobenius and determinant data: sigma_max^2 = (f + sqrt(f^2 - 4 det^2))/2
    let f = sq(&m[0][0]) + sq(&m[0][1]) + sq(&m[1][0]) + sq(&m[1][1]);
    let det = Float::with_val(bits, &m[0][0] * &m[1][1])
        - Float::with_val(bits, &m[0][1] * &m[1][0]);
    let disc = Float::with_val(bits, f.square_ref())
        - Float::with_val(bits, det.square_ref()) * 4u32;
    let disc = if disc.is_sign_negative() {
        Float::new(bits)
    } else {
        disc
    };
    let s2 = (f + disc.sqrt()) / 2u32;
    s2.sqrt()
}

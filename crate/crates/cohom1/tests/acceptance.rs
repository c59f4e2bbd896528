//! End-to-end acceptance gate.  Each test covers one release criterion and
//! prints a single PASS/FAIL line; heavy pipeline stages are computed once
//! and shared.

use std::sync::OnceLock;

use cohom1::certify::{final_verdict, gronwall_m, hat_ck_chain, ic_c2_bound, jacobian_inv_norm};
use cohom1::chebyshev::{cesaro_mean, cheb_integrate, eval, fit, ChebSeries};
use cohom1::precision::{real_from_f64, sqrt_u64, Ball, BigReal, Prec};
use cohom1::shooting::{
    broyden_solve, fd_linearize, shoot_a, shoot_omega, FdShots, LinearizationResult, Shot,
};
use cohom1::system::{resolvent, rhs, round_oracle, Params, State5};
use cohom1::taylor::DEFAULT_RHO;
use cohom1::verify::{
    assemble_hats, check_assumption1, check_assumption2, compute_report, norm_tables, reference,
    NormTables, ResidualReport,
};
use rug::ops::Pow;
use rug::Float;

fn report(criterion: u32, what: &str, ok: bool) {
    println!(
        "criterion {criterion:2} ({what}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {what}");
}

fn base_params(d1: u32, d2: u32, prec: Prec) -> Params {
    Params::new(d1, d2, real_from_f64(1.0, prec)).unwrap()
}

// ---------------------------------------------------------------- shared state

struct SolvedPipeline {
    alpha: BigReal,
    omega: BigReal,
    lin: LinearizationResult,
    shots: FdShots,
    tables: NormTables,
    digits: u32,
}

fn run_pipeline(digits: u32) -> SolvedPipeline {
    let prec = Prec::from_digits(digits + 20);
    let base = base_params(2, 9, prec);
    let (alpha, omega) =
        broyden_solve(&base, 6.08, 6.18, digits, DEFAULT_RHO, prec).expect("broyden");
    let (lin, shots) = fd_linearize(&base, &alpha, &omega, digits, DEFAULT_RHO).expect("fd");
    let hats = assemble_hats(&base, &shots, digits).expect("fit");
    let tables = norm_tables(&hats).expect("norms");
    SolvedPipeline {
        alpha,
        omega,
        lin,
        shots,
        tables,
        digits,
    }
}

fn d30() -> &'static (BigReal, BigReal, Shot, Shot) {
    static S: OnceLock<(BigReal, BigReal, Shot, Shot)> = OnceLock::new();
    S.get_or_init(|| {
        let digits = 30u32;
        let prec = Prec::from_digits(digits + 20);
        let base = base_params(2, 9, prec);
        let (alpha, omega) =
            broyden_solve(&base, 6.08, 6.18, digits, DEFAULT_RHO, prec).expect("broyden");
        let a = shoot_a(&base.with_alpha(alpha.clone()), digits, DEFAULT_RHO, prec).expect("eta");
        let o =
            shoot_omega(&base.mirrored(omega.clone()), digits, DEFAULT_RHO, prec).expect("zeta");
        (alpha, omega, a, o)
    })
}

fn d45() -> &'static SolvedPipeline {
    static S: OnceLock<SolvedPipeline> = OnceLock::new();
    S.get_or_init(|| run_pipeline(45))
}

struct Verified60 {
    a1_pass: bool,
    a2_pass: bool,
    epsilon: f64,
    drift_eta: f64,
    drift_zeta: f64,
}

fn d60() -> &'static Verified60 {
    static S: OnceLock<Verified60> = OnceLock::new();
    S.get_or_init(|| {
        let digits = 60u32;
        let prec = Prec::from_digits(digits + 20);
        let base = base_params(2, 9, prec);
        let (alpha, omega) =
            broyden_solve(&base, 6.08, 6.18, digits, DEFAULT_RHO, prec).expect("broyden");
        let (_lin, shots) = fd_linearize(&base, &alpha, &omega, digits, DEFAULT_RHO).expect("fd");
        let hats = assemble_hats(&base, &shots, digits).expect("fit");
        let rep = compute_report(&hats).expect("report");
        let epsilon = 1e-20f64;
        let a1 = check_assumption1(&hats, &rep, epsilon).expect("a1");
        let a2 = check_assumption2(&hats, &rep, epsilon).expect("a2");
        let drift = |s: &Shot| {
            s.path
                .conserved_drift(1e-3, s.result.t_stop.to_f64(), 48)
                .expect("drift")
                .to_f64()
        };
        Verified60 {
            a1_pass: a1.pass(),
            a2_pass: a2.pass(),
            epsilon: rep.epsilon_achieved.to_f64(),
            drift_eta: drift(&shots.base_eta),
            drift_zeta: drift(&shots.base_zeta),
        }
    })
}

// ----------------------------------------------------------------- criteria

#[test]
fn criterion_01_shooting_reproduction() {
    let (alpha, omega, a, o) = d30();
    let ok = (alpha.to_f64() - reference::ALPHA).abs() < 1e-7
        && (omega.to_f64() - reference::OMEGA).abs() < 1e-7
        && (a.result.t_stop.to_f64() - reference::T_ALPHA).abs() < 1e-7
        && (o.result.t_stop.to_f64() - reference::T_OMEGA).abs() < 1e-7;
    report(1, "solved slopes and stopping times", ok);
}

#[test]
fn criterion_02_endpoint_values() {
    let (alpha, omega, a, o) = d30();
    let prec = Prec::from_digits(50);
    let pa = base_params(2, 9, prec).with_alpha(alpha.clone());
    let po = base_params(2, 9, prec).mirrored(omega.clone());
    let mut ok = true;
    let check = |ok: &mut bool, got: &State5<BigReal>, want: &[f64; 3]| {
        for i in 0..3 {
            *ok &= (got[i].to_f64() - want[i]).abs() < 1e-6;
        }
    };
    check(&mut ok, &a.result.endpoint, &reference::ETA_END);
    check(&mut ok, &o.result.endpoint, &reference::ZETA_END);
    let da = rhs(&pa, &a.result.t_stop, &a.result.endpoint);
    let dz = rhs(&po, &o.result.t_stop, &o.result.endpoint);
    check(&mut ok, &da, &reference::ETA_PRIME_END);
    check(&mut ok, &dz, &reference::ZETA_PRIME_END);
    report(2, "base endpoint rows to six decimals", ok);
}

#[test]
fn criterion_03_linearized_endpoints_and_norms() {
    let p = d45();
    assert_eq!(p.digits / 3, 15, "step must be 1e-15");
    let mut ok = true;
    let check = |ok: &mut bool, got: &State5<BigReal>, want: &[f64; 3]| {
        for i in 0..3 {
            *ok &= (got[i].to_f64() - want[i]).abs() < 1e-6;
        }
    };
    check(&mut ok, &p.lin.mu_ic_end, &reference::MU_END);
    check(&mut ok, &p.lin.mu_ic_prime_end, &reference::MU_PRIME_END);
    check(&mut ok, &p.lin.nu_ic_end, &reference::NU_END);
    check(&mut ok, &p.lin.nu_ic_prime_end, &reference::NU_PRIME_END);
    for i in 0..3 {
        ok &= p.tables.mu_h3[i] <= reference::MU_H3[i];
        ok &= p.tables.nu_h3[i] <= reference::NU_H3[i];
    }
    report(3, "linearized endpoint rows and H3 bounds", ok);
}

#[test]
fn criterion_04_stopping_time_derivatives_and_map_rows() {
    let p = d45();
    let prec = Prec::from_digits(p.digits + 20);
    let bits = prec.bits();
    let mut ok = (p.lin.rho1.to_f64() - 0.0133237).abs() < 1e-7
        && (p.lin.sigma1.to_f64() - 0.0729407).abs() < 1e-7;
    // first-order endpoint perturbations: IC mode plus the time-derivative
    // mode weighted by the stopping-time derivative
    let combine = |side: &Shot, ic: &State5<BigReal>, w: &BigReal, params: &Params| -> [f64; 3] {
        let d = rhs(params, &side.result.t_stop, &side.result.endpoint);
        std::array::from_fn(|i| {
            Float::with_val(bits, &ic[i] + Float::with_val(bits, w * &d[i])).to_f64()
        })
    };
    let pa = base_params(2, 9, prec).with_alpha(p.alpha.clone());
    let po = base_params(2, 9, prec).mirrored(p.omega.clone());
    let eta1 = combine(&p.shots.base_eta, &p.lin.mu_ic_end, &p.lin.rho1, &pa);
    let zeta1 = combine(&p.shots.base_zeta, &p.lin.nu_ic_end, &p.lin.sigma1, &po);
    for (got, want) in eta1.iter().zip([-1.01381f64, -0.01617, 0.05385]) {
        ok &= (got - want).abs() < 6e-6;
    }
    for (got, want) in zeta1.iter().zip([-0.99611f64, -0.08054, 0.10802]) {
        ok &= (got - want).abs() < 6e-6;
    }
    for i in 0..3 {
        ok &= (p.shots.base_eta.result.endpoint[i].to_f64() - reference::ETA_END[i]).abs() < 6e-6;
        ok &= (p.shots.base_zeta.result.endpoint[i].to_f64() - reference::ZETA_END[i]).abs() < 6e-6;
    }
    for ((a, o), (wa, wo)) in p
        .shots
        .base_eta
        .result
        .map
        .iter()
        .zip(&p.shots.base_zeta.result.map)
        .zip([(3.1566f64, 3.1566f64), (0.0584, 0.0584)])
    {
        ok &= (a.to_f64() - wa).abs() < 5e-5 && (o.to_f64() - wo).abs() < 5e-5;
    }
    for (got, want) in p.lin.a1.iter().zip([0.0031f64, -0.0162]) {
        ok &= (got.to_f64() - want).abs() < 5e-5;
    }
    for (got, want) in p.lin.omega1.iter().zip([0.0039f64, -0.0805]) {
        ok &= (got.to_f64() - want).abs() < 5e-5;
    }
    report(4, "map derivatives and first-order rows", ok);
}

#[test]
fn criterion_05_round_solution_oracle() {
    let digits = 30u32;
    let prec = Prec::from_digits(digits + 20);
    let bits = prec.bits();
    let tol = 10f64.powi(-(digits as i32) + 5);
    let mut ok = true;
    for (d1, d2) in [(2u32, 9u32), (3, 8), (4, 7), (5, 6)] {
        let pa = Params::new(d1, d2, sqrt_u64((d1 - 1) as u64, prec)).unwrap();
        let a = shoot_a(&pa, digits, DEFAULT_RHO, prec).expect("round eta shot");
        let t_stop = a.result.t_stop.to_f64();
        for i in 1..=50 {
            let t = real_from_f64(t_stop * i as f64 / 50.0, prec);
            let got = a.path.evaluate(&t, 0).unwrap();
            let want = round_oracle(&pa, &t).unwrap();
            for c in 0..5 {
                let d = Float::with_val(bits, &got[c] - &want[c]).abs().to_f64();
                ok &= d < tol;
            }
        }
        let po = pa.mirrored(sqrt_u64((d2 - 1) as u64, prec));
        let o = shoot_omega(&po, digits, DEFAULT_RHO, prec).expect("round zeta shot");
        for i in 0..2 {
            let gap = (a.result.map[i].to_f64() - o.result.map[i].to_f64()).abs();
            ok &= gap < tol;
        }
    }
    report(5, "closed-form agreement for four round pairs", ok);
}

#[test]
fn criterion_06_conserved_quantity_drift() {
    let (_, _, a, o) = d30();
    let drift30 = |s: &Shot| {
        s.path
            .conserved_drift(1e-3, s.result.t_stop.to_f64(), 48)
            .unwrap()
            .to_f64()
    };
    let mut ok = drift30(a) < 1e-20 && drift30(o) < 1e-20;
    let v = d60();
    ok &= v.drift_eta < 1e-50 && v.drift_zeta < 1e-50;
    report(6, "first-integral drift at 30 and 60 digits", ok);
}

#[test]
fn criterion_07_rigorous_verification_at_sixty_digits() {
    let v = d60();
    let ok = v.a1_pass && v.a2_pass && v.epsilon <= 1e-20;
    report(7, "itemized residual bounds below 1e-20", ok);
}

#[test]
fn criterion_08_certificate_chain() {
    let prec30 = Prec::from_digits(30);
    let base = base_params(2, 9, prec30);
    let tables = NormTables {
        norms: reference::NORMS,
        mu_h3: reference::MU_H3,
        nu_h3: reference::NU_H3,
        len_start: 1.4933,
        len_end: 1.1631,
        alpha: reference::ALPHA,
        omega: reference::OMEGA,
    };
    let r = |k: usize, off: usize| -> [f64; 3] {
        std::array::from_fn(|i| tables.norms[k][off + i])
    };
    let eta = hat_ck_chain(&r(1, 0), &r(2, 0), &r(3, 0), tables.alpha, 11, 1.4933).unwrap();
    let zeta = hat_ck_chain(&r(1, 3), &r(2, 3), &r(3, 3), tables.omega, 11, 1.1631).unwrap();
    let mut ok = [
        (eta.c0.upper().to_f64(), 16.1),
        (eta.c1.upper().to_f64(), 63.3),
        (eta.c2.upper().to_f64(), 212.5),
        (zeta.c0.upper().to_f64(), 50.3),
        (zeta.c1.upper().to_f64(), 560.1),
        (zeta.c2.upper().to_f64(), 5895.2),
    ]
    .iter()
    .all(|(got, want)| got == want);
    ok &= ic_c2_bound(&tables.mu_h3, &tables.nu_h3).upper().to_f64() <= 1e5;
    let (m, i_start, i_end) = gronwall_m(&tables, &base).unwrap();
    ok &= i_start.upper() <= 132u32 && i_end.upper() <= 470u32;
    ok &= m.upper().to_f64().log10() < 109.0;

    // the verdict gates on eps < 1e-350 with a bounded Jacobian inverse
    let big = Prec::from_digits(400);
    let synthetic = |eps_exp: i32| -> (ResidualReport, LinearizationResult) {
        let bits = big.bits();
        let eps = Float::with_val(bits, 10f64).pow(eps_exp);
        let tiny = || Ball::exact(Float::with_val(bits, &eps));
        let zero5 = || -> State5<BigReal> { std::array::from_fn(|_| Float::new(bits)) };
        (
            ResidualReport {
                e1_start_h3: tiny(),
                e1_end_h3: tiny(),
                e2_start_h3: tiny(),
                e2_end_h3: tiny(),
                shoot_gap: tiny(),
                stop_err_alpha: tiny(),
                stop_err_omega: tiny(),
                epsilon_achieved: eps.clone(),
            },
            LinearizationResult {
                mu_ic_end: zero5(),
                mu_ic_prime_end: zero5(),
                nu_ic_end: zero5(),
                nu_ic_prime_end: zero5(),
                rho1: real_from_f64(0.0133237, big),
                sigma1: real_from_f64(0.0729407, big),
                a1: [real_from_f64(0.0031, big), real_from_f64(-0.0162, big)],
                omega1: [real_from_f64(0.0039, big), real_from_f64(-0.0805, big)],
                j: [
                    [real_from_f64(0.0031, big), real_from_f64(-0.0039, big)],
                    [real_from_f64(-0.0162, big), real_from_f64(0.0805, big)],
                ],
                delta: real_from_f64(1e-15, big),
            },
        )
    };
    let (rep, lin) = synthetic(-360);
    ok &= final_verdict(&base, &tables, &rep, &lin).unwrap().final_verdict;
    let (rep, lin) = synthetic(-300);
    ok &= !final_verdict(&base, &tables, &rep, &lin).unwrap().final_verdict;
    // an ill-conditioned Jacobian trips the 1e5 gate
    let jm = |x: f64| {
        [
            [real_from_f64(x, prec30), real_from_f64(0.0, prec30)],
            [real_from_f64(0.0, prec30), real_from_f64(x, prec30)],
        ]
    };
    ok &= jacobian_inv_norm(&jm(1e-6)).unwrap().upper().to_f64() > 1e5;
    ok &= jacobian_inv_norm(&jm(1.0)).unwrap().upper().to_f64() <= 1e5;
    report(8, "embedding constants, Gronwall bounds and gating", ok);
}

#[test]
fn criterion_09_property_suites() {
    let mut ok = true;

    // ball containment on random rational inputs, 1e4 cases per operation
    {
        use rand::{Rng, SeedableRng};
        let prec = Prec::from_digits(30);
        let bits = prec.bits();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xacce97);
        for _ in 0..10_000 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mid = rng.gen_range(-4.0f64..4.0);
                let rad = rng.gen_range(0.0f64..0.25);
                let off = rng.gen_range(-1.0f64..1.0);
                let b = Ball::new(
                    Float::with_val(bits, mid),
                    Float::with_val(bits, rad),
                );
                let pt = rug::Rational::from_f64(mid).unwrap()
                    + rug::Rational::from_f64(rad).unwrap()
                        * rug::Rational::from_f64(off).unwrap();
                (b, pt)
            };
            let (a, pa) = mk(&mut rng);
            let (b, pb) = mk(&mut rng);
            ok &= a.add(&b).contains_rational(&(pa.clone() + &pb));
            ok &= a.sub(&b).contains_rational(&(pa.clone() - &pb));
            ok &= a.mul(&b).contains_rational(&(pa.clone() * &pb));
            if !ok {
                break;
            }
        }
    }

    // monomial oracle for the interpolation algebra, degree up to 10
    {
        let prec = Prec::from_digits(40);
        let t_max = real_from_f64(2.0, prec);
        for k in 0..=10u32 {
            let s = fit(
                |t| {
                    let mut v = Float::with_val(prec.bits(), 1);
                    for _ in 0..k {
                        v *= t;
                    }
                    Ok(v)
                },
                24,
                &t_max,
                prec,
            )
            .unwrap();
            for i in 1..=10 {
                let t = 2.0 * i as f64 / 10.0;
                let v = eval(&s, &Ball::exact(Float::with_val(prec.bits(), t))).unwrap();
                ok &= (v.mid.to_f64() - t.powi(k as i32)).abs() < 1e-12;
            }
        }
        // averaged-integral identity t * mean(f) = int f on the basis
        for n in 0..=6usize {
            let tn = ChebSeries::basis(n, &t_max, prec);
            let ces = cesaro_mean(&tn);
            let anti = cheb_integrate(&tn);
            for i in 1..=8 {
                let t = Ball::exact(Float::with_val(prec.bits(), 2.0 * i as f64 / 8.0));
                let d = eval(&ces, &t).unwrap().mul(&t).sub(&eval(&anti, &t).unwrap());
                ok &= d.mag().to_f64() < 1e-20;
            }
        }
    }

    // finite differences converge at order two in the step
    {
        let lin_at = |digits: u32| {
            let prec = Prec::from_digits(digits + 20);
            let base = base_params(2, 9, prec);
            let a = real_from_f64(reference::ALPHA, prec);
            let o = real_from_f64(reference::OMEGA, prec);
            fd_linearize(&base, &a, &o, digits, DEFAULT_RHO).unwrap().0
        };
        let refined = lin_at(27);
        let err = |l: &LinearizationResult| {
            let mut worst = 0.0f64;
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((l.j[i][j].to_f64() - refined.j[i][j].to_f64()).abs());
                }
            }
            worst
        };
        // steps 1e-4 and 1e-5: one decade apart, so the error ratio is
        // 10^slope
        let slope = (err(&lin_at(12)) / err(&lin_at(15))).log10();
        ok &= (1.9..=2.1).contains(&slope);
        println!("  fd convergence slope: {slope:.3}");
    }

    // parity of the origin series
    {
        let prec = Prec::from_digits(40);
        let p = Params::new(2, 9, real_from_f64(6.08, prec)).unwrap();
        let patch = cohom1::taylor::frobenius_origin(&p, 20, DEFAULT_RHO, prec);
        for (k, c) in patch.coeffs.iter().enumerate() {
            let sup = c.iter().map(|x| x.to_f64().abs()).fold(0.0f64, f64::max);
            let tol = sup.max(1.0) * 1e-30;
            if k % 2 == 1 {
                ok &= c[0].to_f64().abs() <= tol;
            } else if k >= 2 {
                ok &= c[1].to_f64().abs() <= tol && c[2].to_f64().abs() <= tol;
            }
        }
    }

    // resolvent norm bound
    {
        let prec = Prec::from_digits(30);
        let p = base_params(2, 9, prec);
        for k in 1u32..=100 {
            let r = resolvent(&p, k, prec);
            let norm = (0..5)
                .map(|i| (0..5).map(|j| r[i][j].to_f64().abs()).sum::<f64>())
                .fold(0.0f64, f64::max);
            ok &= norm <= 5.0 / (4.0 * k as f64) * (1.0 + 1e-12);
        }
    }

    report(9, "containment, oracles, order and parity properties", ok);
}

#[test]
fn criterion_10_curve_crossings() {
    let digits = 16u32;
    let prec = Prec::from_digits(digits + 20);
    let sample = |d1: u32, d2: u32| -> (Vec<(f64, [f64; 2])>, Vec<(f64, [f64; 2])>) {
        let base = base_params(d1, d2, prec);
        let grid: Vec<f64> = (0..=75).map(|i| 0.5 + 7.5 * i as f64 / 75.0).collect();
        let mut jobs: Vec<Box<dyn FnOnce() -> Option<(usize, bool, f64, [f64; 2])> + Send>> =
            Vec::new();
        for (idx, &v) in grid.iter().enumerate() {
            let pa = base.with_alpha(real_from_f64(v, prec));
            let po = base.mirrored(real_from_f64(v, prec));
            jobs.push(Box::new(move || {
                let s = shoot_a(&pa, digits, DEFAULT_RHO, prec).ok()?;
                Some((idx, true, v, [s.result.map[0].to_f64(), s.result.map[1].to_f64()]))
            }));
            jobs.push(Box::new(move || {
                let s = shoot_omega(&po, digits, DEFAULT_RHO, prec).ok()?;
                Some((idx, false, v, [s.result.map[0].to_f64(), s.result.map[1].to_f64()]))
            }));
        }
        let mut a_curve = Vec::new();
        let mut o_curve = Vec::new();
        let mut rows: Vec<_> = cohom1::shooting::run_jobs(jobs).into_iter().flatten().collect();
        rows.sort_by(|x, y| x.0.cmp(&y.0));
        for (_, is_a, v, pt) in rows {
            if is_a {
                a_curve.push((v, pt));
            } else {
                o_curve.push((v, pt));
            }
        }
        (a_curve, o_curve)
    };

    // intersections of the two polylines in the map plane
    fn crossings(a: &[(f64, [f64; 2])], o: &[(f64, [f64; 2])]) -> Vec<[f64; 2]> {
        let side = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| -> f64 {
            (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        };
        let mut out = Vec::new();
        for wa in a.windows(2) {
            for wo in o.windows(2) {
                let (p1, p2) = (wa[0].1, wa[1].1);
                let (q1, q2) = (wo[0].1, wo[1].1);
                let d1 = side(p1, p2, q1);
                let d2 = side(p1, p2, q2);
                let d3 = side(q1, q2, p1);
                let d4 = side(q1, q2, p2);
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    let t = d3 / (d3 - d4);
                    out.push([p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1])]);
                }
            }
        }
        out
    }

    let mut ok = true;
    {
        let (a, o) = sample(2, 9);
        let x = crossings(&a, &o);
        // the round intersection and the non-round one near (3.157, 0.058)
        ok &= x
            .iter()
            .any(|p| (p[0] - 3.1269).abs() < 0.05 && (p[1] + 4.2426).abs() < 0.05);
        ok &= x
            .iter()
            .any(|p| (p[0] - 3.1566).abs() < 0.05 && (p[1] - 0.0584).abs() < 0.05);
    }
    for (d1, d2) in [(2u32, 7u32), (3, 6), (4, 5)] {
        let (a, o) = sample(d1, d2);
        let x = crossings(&a, &o);
        // round crossing plus at least one other
        let round = {
            let p = Params::new(d1, d2, sqrt_u64((d1 - 1) as u64, prec)).unwrap();
            let s = shoot_a(&p, digits, DEFAULT_RHO, prec).unwrap();
            [s.result.map[0].to_f64(), s.result.map[1].to_f64()]
        };
        let near_round = x
            .iter()
            .any(|p| (p[0] - round[0]).abs() < 0.05 && (p[1] - round[1]).abs() < 0.05);
        let non_round = x
            .iter()
            .any(|p| (p[0] - round[0]).abs() > 0.1 || (p[1] - round[1]).abs() > 0.1);
        ok &= near_round && non_round;
        println!("  ({d1},{d2}) crossings: {}", x.len());
    }
    report(10, "round and non-round curve intersections", ok);
}

//! Structural checks of the first-order system: the linear part, its
//! resolvent, the quadratic form, and the closed-form round solution.

use cohom1::precision::{real_from_f64, sqrt_u64, Prec};
use cohom1::system::{
    apply_resolvent, b_quadratic_weights, bilinear_b, first_integral, initial_state, matrix_l,
    resolvent, round_oracle, Params, State5,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

fn params(d1: u32, d2: u32, alpha: f64, prec: Prec) -> Params {
    Params::new(d1, d2, real_from_f64(alpha, prec)).unwrap()
}

#[test]
fn resolvent_inverts_k_minus_l() {
    let prec = Prec::from_digits(30);
    let bits = prec.bits();
    for (d1, d2) in [(2u32, 9u32), (9, 2), (3, 8), (5, 6)] {
        let p = params(d1, d2, 1.0, prec);
        let l = matrix_l(&p, prec);
        for k in [1u32, 2, 7, 40] {
            let r = resolvent(&p, k, prec);
            for i in 0..5 {
                for j in 0..5 {
                    // ((k I - L) R)_{ij}
                    let mut acc = Float::new(bits);
                    for m in 0..5 {
                        let lhs = Float::with_val(bits, &l[i][m]);
                        let kim = if i == m {
                            Float::with_val(bits, k) - lhs
                        } else {
                            -lhs
                        };
                        acc += kim * &r[m][j];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (acc.to_f64() - expect).abs() < 1e-25,
                        "resolvent identity failed at ({d1},{d2}) k={k} entry ({i},{j})"
                    );
                }
            }
        }
    }
}

#[test]
fn resolvent_norm_bounded_by_five_over_four_k() {
    // max-row-sum operator norm of (kI - L)^-1 against the uniform 5/(4k)
    // bound that keeps the origin recurrence well conditioned.
    let prec = Prec::from_digits(30);
    for (d1, d2) in [(2u32, 9u32), (9, 2), (3, 8), (6, 5)] {
        let p = params(d1, d2, 1.0, prec);
        for k in 1u32..=100 {
            let r = resolvent(&p, k, prec);
            let norm = (0..5)
                .map(|i| {
                    (0..5)
                        .map(|j| r[i][j].to_f64().abs())
                        .sum::<f64>()
                })
                .fold(0.0f64, f64::max);
            let bound = 5.0 / (4.0 * k as f64);
            assert!(
                norm <= bound * (1.0 + 1e-12),
                "({d1},{d2}) k={k}: norm {norm} exceeds {bound}"
            );
        }
    }
}

#[test]
fn apply_resolvent_matches_matrix_form() {
    let prec = Prec::from_digits(30);
    let bits = prec.bits();
    let mut rnd = ChaCha8Rng::seed_from_u64(7);
    let p = params(2, 9, 1.0, prec);
    for k in [1u32, 3, 11] {
        let x: State5<Float> =
            std::array::from_fn(|_| Float::with_val(bits, rnd.gen_range(-5.0f64..5.0)));
        let via_op = apply_resolvent(&p, k, &x);
        let r = resolvent(&p, k, prec);
        for i in 0..5 {
            let mut acc = Float::new(bits);
            for j in 0..5 {
                acc += Float::with_val(bits, &r[i][j] * &x[j]);
            }
            assert!((acc - &via_op[i]).abs().to_f64() < 1e-25);
        }
    }
}

#[test]
fn quadratic_form_is_symmetric_and_bilinear() {
    let prec = Prec::from_digits(30);
    let bits = prec.bits();
    let mut rnd = ChaCha8Rng::seed_from_u64(99);
    let p = params(2, 9, 1.0, prec);
    for _ in 0..50 {
        let x: State5<Float> =
            std::array::from_fn(|_| Float::with_val(bits, rnd.gen_range(-3.0f64..3.0)));
        let y: State5<Float> =
            std::array::from_fn(|_| Float::with_val(bits, rnd.gen_range(-3.0f64..3.0)));
        let z: State5<Float> =
            std::array::from_fn(|_| Float::with_val(bits, rnd.gen_range(-3.0f64..3.0)));
        let xy = bilinear_b(&p, &x, &y);
        let yx = bilinear_b(&p, &y, &x);
        // symmetry
        for i in 0..5 {
            assert!((Float::with_val(bits, &xy[i] - &yx[i])).abs().to_f64() < 1e-25);
        }
        // additivity in the first slot
        let xpz: State5<Float> = std::array::from_fn(|i| Float::with_val(bits, &x[i] + &z[i]));
        let lhs = bilinear_b(&p, &xpz, &y);
        let zy = bilinear_b(&p, &z, &y);
        for i in 0..5 {
            let rhs = Float::with_val(bits, &xy[i] + &zy[i]);
            assert!((Float::with_val(bits, &lhs[i] - &rhs)).abs().to_f64() < 1e-24);
        }
        // the last two components carry no quadratic term
        assert!(xy[3].is_zero() && xy[4].is_zero());
    }
}

#[test]
fn round_solution_stops_where_the_tangents_balance() {
    // Z(t) = d2/t + eta_3(t) vanishes at t* = arctan(sqrt(d2/d1)) on the
    // closed-form solution.
    let prec = Prec::from_digits(40);
    let bits = prec.bits();
    for (d1, d2) in [(2u32, 9u32), (3, 8), (5, 6)] {
        let p = params(d1, d2, (d1 as f64 - 1.0).sqrt(), prec);
        let t_star = Float::with_val(bits, (d2 as f64 / d1 as f64).sqrt()).atan();
        let s = round_oracle(&p, &t_star).unwrap();
        let z = Float::with_val(bits, d2) / &t_star + &s[2];
        assert!(z.to_f64().abs() < 1e-12, "({d1},{d2}): Z(t*) = {}", z.to_f64());
    }
}

#[test]
fn round_solution_satisfies_the_ode() {
    // finite differences of the closed form against the right-hand side
    let prec = Prec::from_digits(60);
    let bits = prec.bits();
    let p = params(2, 9, 1.0, prec);
    let h = real_from_f64(1e-15, prec);
    for t in [0.3f64, 0.7, 1.1] {
        let tv = real_from_f64(t, prec);
        let sp = round_oracle(&p, &Float::with_val(bits, &tv + &h)).unwrap();
        let sm = round_oracle(&p, &Float::with_val(bits, &tv - &h)).unwrap();
        let s = round_oracle(&p, &tv).unwrap();
        let deriv = cohom1::system::rhs(&p, &tv, &s);
        for i in 0..5 {
            let fd = Float::with_val(bits, &sp[i] - &sm[i]) / Float::with_val(bits, &h * 2u32);
            assert!(
                (fd - &deriv[i]).abs().to_f64() < 1e-14,
                "component {i} at t={t}"
            );
        }
    }
}

#[test]
fn first_integral_recovers_the_round_shooting_value() {
    // W^2 stays positive along the round solution, and its square root at
    // the stopping time is the first component of the shooting map, known
    // independently from a propagated solve: A(1) = (3.1269438..., ...).
    let prec = Prec::from_digits(40);
    let bits = prec.bits();
    let p = params(2, 9, 1.0, prec);
    for t in [0.4f64, 0.9, 1.1] {
        let tv = real_from_f64(t, prec);
        let s = round_oracle(&p, &tv).unwrap();
        let wsq = first_integral(&p, &tv, &s).unwrap();
        assert!(wsq.to_f64() > 0.0, "W^2 not positive at t={t}");
    }
    let t_star = Float::with_val(bits, (9.0f64 / 2.0).sqrt()).atan();
    let s = round_oracle(&p, &t_star).unwrap();
    let w = first_integral(&p, &t_star, &s).unwrap().sqrt();
    assert!(
        (w.to_f64() - 3.126943839882286).abs() < 1e-12,
        "W(t*) = {}",
        w.to_f64()
    );
}

#[test]
fn quadratic_weights_match_hand_computation() {
    assert_eq!(
        b_quadratic_weights(2, 9),
        [(17, 8), (48, 72), (10, 18), (17, 8), (3, 2)]
    );
    assert_eq!(
        b_quadratic_weights(9, 2),
        [(325, 36), (76, 72), (3, 4), (325, 36), (10, 2)]
    );
}

#[test]
fn initial_state_and_mirroring() {
    let prec = Prec::from_digits(30);
    let p = params(2, 9, 6.08, prec);
    assert_eq!(p.lambda(), 11);
    let s = initial_state(&p, prec);
    assert!(s[0].is_zero() && s[1].is_zero() && s[2].is_zero());
    assert!((s[3].to_f64() - 6.08).abs() < 1e-15);
    assert!((s[4].to_f64() - 11f64.sqrt()).abs() < 1e-15);
    let m = p.mirrored(sqrt_u64(8, prec));
    assert_eq!((m.d1, m.d2, m.lambda()), (9, 2, 11));
    assert!((m.alpha.to_f64() - 8f64.sqrt()).abs() < 1e-15);
    assert!(Params::new(1, 9, real_from_f64(1.0, prec)).is_err());
}

//! Shooting maps, stopping times and the Broyden solve, anchored on the
//! round solution whose shooting data is known in closed form.

use cohom1::precision::{real_from_f64, sqrt_u64, Prec};
use cohom1::shooting::{broyden_solve, shoot_a, shoot_omega};
use cohom1::system::Params;
use cohom1::taylor::DEFAULT_RHO;

#[test]
fn round_shot_reproduces_the_closed_form_map() {
    let digits = 20u32;
    let prec = Prec::from_digits(digits + 20);
    let p = Params::new(2, 9, real_from_f64(1.0, prec)).unwrap();
    let shot = shoot_a(&p, digits, DEFAULT_RHO, prec).unwrap();
    // t* = arctan(sqrt(9/2)), map = (3.1269438..., -3 sqrt 2)
    let t_star = (9.0f64 / 2.0).sqrt().atan();
    assert!((shot.result.t_stop.to_f64() - t_star).abs() < 1e-12);
    assert!((shot.result.map[0].to_f64() - 3.126943839882286).abs() < 1e-12);
    assert!((shot.result.map[1].to_f64() + 3.0 * 2.0f64.sqrt()).abs() < 1e-12);
}

#[test]
fn mirrored_round_shot_stops_before_the_grid_start() {
    // the (9,2) stopping time is arctan(sqrt(2/9)) = 0.44, below the
    // initial bracketing point of the search grid, which must walk down
    let digits = 20u32;
    let prec = Prec::from_digits(digits + 20);
    let base = Params::new(2, 9, real_from_f64(1.0, prec)).unwrap();
    let po = base.mirrored(sqrt_u64(8, prec));
    let shot = shoot_omega(&po, digits, DEFAULT_RHO, prec).unwrap();
    let t_star = (2.0f64 / 9.0).sqrt().atan();
    assert!(
        (shot.result.t_stop.to_f64() - t_star).abs() < 1e-12,
        "t_omega = {}",
        shot.result.t_stop.to_f64()
    );
}

#[test]
fn round_pair_closes_the_shooting_gap() {
    let digits = 25u32;
    let prec = Prec::from_digits(digits + 20);
    let base = Params::new(2, 9, real_from_f64(1.0, prec)).unwrap();
    let pa = base.clone();
    let po = base.mirrored(sqrt_u64(8, prec));
    let a = shoot_a(&pa, digits, DEFAULT_RHO, prec).unwrap();
    let o = shoot_omega(&po, digits, DEFAULT_RHO, prec).unwrap();
    let gap = (0..2)
        .map(|i| (a.result.map[i].to_f64() - o.result.map[i].to_f64()).abs())
        .fold(0.0f64, f64::max);
    assert!(gap < 10f64.powi(-(digits as i32) + 5), "gap = {gap:e}");
}

#[test]
fn broyden_finds_the_non_round_intersection() {
    let digits = 20u32;
    let prec = Prec::from_digits(digits + 20);
    let base = Params::new(2, 9, real_from_f64(6.08, prec)).unwrap();
    let (alpha, omega) = broyden_solve(&base, 6.08, 6.18, digits, DEFAULT_RHO, prec).unwrap();
    assert!((alpha.to_f64() - 6.0838655).abs() < 1e-6);
    assert!((omega.to_f64() - 6.1859148).abs() < 1e-6);
}

#[test]
fn broyden_rejects_collapse_to_the_round_pair() {
    // seeds well away from the round solution that nevertheless converge
    // to it are reported as a failure, not a success
    let digits = 20u32;
    let prec = Prec::from_digits(digits + 20);
    let base = Params::new(2, 9, real_from_f64(2.0, prec)).unwrap();
    let r = broyden_solve(&base, 2.0, 4.1, digits, DEFAULT_RHO, prec);
    match r {
        Err(cohom1::Error::Convergence { .. }) => {}
        Err(e) => panic!("unexpected error {e}"),
        Ok((a, w)) => {
            // if it does converge it must not be the round pair in disguise
            assert!(
                (a.to_f64() - 1.0).abs() > 1e-3 || (w.to_f64() - 8f64.sqrt()).abs() > 1e-3,
                "round collapse not detected"
            );
        }
    }
}

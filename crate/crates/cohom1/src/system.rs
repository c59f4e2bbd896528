//! Data of the ODE system: the linear matrix L, the symmetric bilinear form
//! B, resolvents (kI - L)^-1 in closed form, the conserved first integral,
//! and the closed-form round-metric oracle.
//!
//! The mirrored second boundary-value problem is obtained by constructing
//! [`Params`] with d1 and d2 swapped and the slope replaced; there is no
//! separate code path.

use crate::error::{Error, Result};
use crate::precision::{real_from_i64, real_from_u64, real_zero, BigReal, Ball, Prec};
use rug::Float;

/// The pair (d1, d2), the Einstein constant lambda = d1 + d2, and the initial
/// slope of the singular initial value problem.
#[derive(Clone, Debug)]
pub struct Params {
    pub d1: u32,
    pub d2: u32,
    pub alpha: BigReal,
}

impl Params {
    pub fn new(d1: u32, d2: u32, alpha: BigReal) -> Result<Params> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::Config(format!(
                "d1, d2 must both be at least 2 (got {d1}, {d2})"
            )));
        }
        Ok(Params { d1, d2, alpha })
    }

    pub fn lambda(&self) -> u32 {
        self.d1 + self.d2
    }

    /// The mirrored problem: d1 and d2 swapped, slope replaced.
    pub fn mirrored(&self, slope: BigReal) -> Params {
        Params {
            d1: self.d2,
            d2: self.d1,
            alpha: slope,
        }
    }

    pub fn with_alpha(&self, alpha: BigReal) -> Params {
        Params {
            d1: self.d1,
            d2: self.d2,
            alpha,
        }
    }

    pub fn sqrt_lambda(&self, prec: Prec) -> BigReal {
        crate::precision::sqrt_u64(self.lambda() as u64, prec)
    }
}

/// The five-component phase vector, generic over the coefficient algebra so
/// that the same L and B formulas serve plain floats, balls, and Chebyshev
/// series.
pub type State5<T> = [T; 5];

/// Minimal commutative-algebra interface needed by L and B.
pub trait Coeff: Clone {
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Multiplication by the exact rational num/den.
    fn scale(&self, num: i64, den: u64) -> Self;
    /// Additive identity of the same shape/precision as self.
    fn zero_like(&self) -> Self;
}

impl Coeff for BigReal {
    fn add(&self, rhs: &Self) -> Self {
        Float::with_val(self.prec().max(rhs.prec()), self + rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Float::with_val(self.prec().max(rhs.prec()), self - rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Float::with_val(self.prec().max(rhs.prec()), self * rhs)
    }
    fn scale(&self, num: i64, den: u64) -> Self {
        let p = self.prec();
        let mut v = Float::with_val(p, self * num);
        v /= den;
        v
    }
    fn zero_like(&self) -> Self {
        Float::new(self.prec())
    }
}

impl Coeff for Ball {
    fn add(&self, rhs: &Self) -> Self {
        Ball::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Ball::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Ball::mul(self, rhs)
    }
    fn scale(&self, num: i64, den: u64) -> Self {
        self.scale_ratio(num, den)
    }
    fn zero_like(&self) -> Self {
        Ball::exact(real_zero_bits(self.prec()))
    }
}

fn real_zero_bits(bits: u32) -> BigReal {
    Float::new(bits)
}

/// Applies the linear matrix L: only rows 2 and 3 are nonzero,
/// (L x)_2 = -d2 x_2, (L x)_3 = 2 x_2 - 2 x_3.
pub fn apply_l<T: Coeff>(p: &Params, x: &State5<T>) -> State5<T> {
    let zero = x[0].zero_like();
    [
        zero.clone(),
        x[1].scale(-(p.d2 as i64), 1),
        x[1].scale(2, 1).sub(&x[2].scale(2, 1)),
        zero.clone(),
        zero,
    ]
}

/// The matrix L as a dense 5x5 array (row-major), for inspection and tests.
pub fn matrix_l(p: &Params, prec: Prec) -> [[BigReal; 5]; 5] {
    let mut m: [[BigReal; 5]; 5] =
        std::array::from_fn(|_| std::array::from_fn(|_| real_zero(prec)));
    m[1][1] = real_from_i64(-(p.d2 as i64), prec);
    m[2][1] = real_from_i64(2, prec);
    m[2][2] = real_from_i64(-2, prec);
    m
}

/// Applies the resolvent (kI - L)^-1 in closed form: diagonal
/// (1/k, 1/(d2+k), 1/(k+2), 1/k, 1/k) plus the single off-diagonal entry
/// (3,2) = 2/((k+2)(d2+k)).
pub fn apply_resolvent<T: Coeff>(p: &Params, k: u32, x: &State5<T>) -> State5<T> {
    let k = k as u64;
    let d2 = p.d2 as u64;
    [
        x[0].scale(1, k),
        x[1].scale(1, d2 + k),
        x[1].scale(2, (k + 2) * (d2 + k)).add(&x[2].scale(1, k + 2)),
        x[3].scale(1, k),
        x[4].scale(1, k),
    ]
}

/// The resolvent as a dense matrix, for inspection and tests.
pub fn resolvent(p: &Params, k: u32, prec: Prec) -> [[BigReal; 5]; 5] {
    let mut m: [[BigReal; 5]; 5] =
        std::array::from_fn(|_| std::array::from_fn(|_| real_zero(prec)));
    let kk = k as u64;
    let d2 = p.d2 as u64;
    let inv = |den: u64| {
        let mut v = real_from_u64(1, prec);
        v /= den;
        v
    };
    m[0][0] = inv(kk);
    m[1][1] = inv(d2 + kk);
    m[2][1] = {
        let mut v = real_from_u64(2, prec);
        v /= (kk + 2) * (d2 + kk);
        v
    };
    m[2][2] = inv(kk + 2);
    m[3][3] = inv(kk);
    m[4][4] = inv(kk);
    m
}

/// The symmetric bilinear form B (components 4 and 5 are always zero).
pub fn bilinear_b<T: Coeff>(p: &Params, x: &State5<T>, y: &State5<T>) -> State5<T> {
    let d1 = p.d1 as i64;
    let d2 = p.d2 as i64;
    let zero = x[0].zero_like();

    // -(1/(2 d1)) (x2 y4 + x4 y2 + x1 y2 + x2 y1)
    let b1 = x[1]
        .mul(&y[3])
        .add(&x[3].mul(&y[1]))
        .add(&x[0].mul(&y[1]))
        .add(&x[1].mul(&y[0]))
        .scale(-1, 2 * d1 as u64);

    // -(1/2)(x2 y3 + x3 y2) + d1 (x1 y1 + x4 y4 + x1 y4 + x4 y1) - d1 x5 y5
    let b2 = {
        let cross = x[1].mul(&y[2]).add(&x[2].mul(&y[1])).scale(-1, 2);
        let quad = x[0]
            .mul(&y[0])
            .add(&x[3].mul(&y[3]))
            .add(&x[0].mul(&y[3]))
            .add(&x[3].mul(&y[0]))
            .scale(d1, 1);
        let last = x[4].mul(&y[4]).scale(-d1, 1);
        cross.add(&quad).add(&last)
    };

    // -(1/d2) x3 y3 + (1/d2)(x2 y3 + x3 y2) - (1/d1 + 1/d2) x2 y2 - x5 y5
    let b3 = {
        let t1 = x[2].mul(&y[2]).scale(-1, d2 as u64);
        let t2 = x[1].mul(&y[2]).add(&x[2].mul(&y[1])).scale(1, d2 as u64);
        // 1/d1 + 1/d2 = (d1 + d2) / (d1 d2)
        let t3 = x[1].mul(&y[1]).scale(-(d1 + d2), (d1 * d2) as u64);
        let t4 = x[4].mul(&y[4]).scale(-1, 1);
        t1.add(&t2).add(&t3).add(&t4)
    };

    [b1, b2, b3, zero.clone(), zero]
}

/// The initial state (0, 0, 0, alpha, sqrt(lambda)).
pub fn initial_state(p: &Params, prec: Prec) -> State5<BigReal> {
    [
        real_zero(prec),
        real_zero(prec),
        real_zero(prec),
        Float::with_val(prec.bits(), &p.alpha),
        p.sqrt_lambda(prec),
    ]
}

/// The ODE right-hand side (1/t) L x + B(x, x), defined for t > 0.
pub fn rhs(p: &Params, t: &BigReal, x: &State5<BigReal>) -> State5<BigReal> {
    let lx = apply_l(p, x);
    let bx = bilinear_b(p, x, x);
    std::array::from_fn(|i| {
        let mut v = Float::with_val(t.prec().max(lx[i].prec()), &lx[i] / t);
        v += &bx[i];
        v
    })
}

/// Closed form of the round metric in the eta variables, valid on (0, pi/2):
/// eta = (sqrt(d1-1)(sec t - 1), -d1 tan t, -d1 tan t + d2 cot t - d2/t,
///        sqrt(d1-1), sqrt(lambda)).
pub fn round_oracle(p: &Params, t: &BigReal) -> Result<State5<BigReal>> {
    let prec_bits = t.prec();
    let half_pi = Float::with_val(prec_bits, rug::float::Constant::Pi) / 2u32;
    if !(t.is_sign_positive() && !t.is_zero() && *t < half_pi) {
        return Err(Error::Domain(format!(
            "round oracle defined on (0, pi/2), got t = {t}"
        )));
    }
    let d1 = p.d1 as i64;
    let d2 = p.d2 as i64;
    let sqrt_d1m1 = Float::with_val(prec_bits, d1 - 1).sqrt();
    let cos_t = Float::with_val(prec_bits, t.cos_ref());
    let sin_t = Float::with_val(prec_bits, t.sin_ref());
    let tan_t = Float::with_val(prec_bits, t.tan_ref());

    let sec_m1 = Float::with_val(prec_bits, 1u32) / &cos_t - 1u32;
    let e1 = Float::with_val(prec_bits, &sqrt_d1m1 * &sec_m1);
    let e2 = Float::with_val(prec_bits, &tan_t * -d1);
    let cot = Float::with_val(prec_bits, &cos_t / &sin_t);
    let e3 = {
        let mut v = Float::with_val(prec_bits, &cot * d2);
        v += &e2;
        v -= Float::with_val(prec_bits, d2) / t;
        v
    };
    let e5 = Float::with_val(prec_bits, p.lambda()).sqrt();
    Ok([e1, e2, e3, sqrt_d1m1, e5])
}

/// Recovers W^2 from the first integral:
/// d2 W^2 = (d1+d2-1) lambda - d1 X^2 + (d1-1) Y^2/d1
///          + (d2-1)(Y-Z)^2/d2 + 2Y(Z-Y),
/// with X = eta4 + eta1, Y = eta2, Z = d2/t + eta3.  The product of this
/// quantity with f2(t)^2/(d2-1), where f2'/f2 = (Z-Y)/d2, is the conserved
/// combination tested along propagated paths.
pub fn first_integral(p: &Params, t: &BigReal, s: &State5<BigReal>) -> Result<BigReal> {
    if !(t.is_sign_positive() && !t.is_zero()) {
        return Err(Error::Domain("first integral requires t > 0".to_string()));
    }
    let pb = t.prec().max(s[0].prec());
    let d1 = p.d1 as i64;
    let d2 = p.d2 as i64;
    let lam = p.lambda() as i64;
    let x = Float::with_val(pb, &s[3] + &s[0]);
    if !x.is_sign_positive() {
        return Err(Error::Domain(
            "first integral requires X = alpha + eta1 > 0".to_string(),
        ));
    }
    let y = Float::with_val(pb, &s[1]);
    let z = {
        let mut v = Float::with_val(pb, d2) / t;
        v += &s[2];
        v
    };
    let mut acc = Float::with_val(pb, (d1 + d2 - 1) * lam);
    acc -= Float::with_val(pb, x.square_ref()) * d1;
    acc += Float::with_val(pb, y.square_ref()) * (d1 - 1) / d1;
    let ymz = Float::with_val(pb, &y - &z);
    acc += Float::with_val(pb, ymz.square_ref()) * (d2 - 1) / d2;
    let zmy = Float::with_val(pb, &z - &y);
    acc += Float::with_val(pb, &y * &zmy) * 2;
    acc /= d2;
    if acc.is_sign_negative() {
        return Err(Error::Domain(
            "first integral: W^2 solve has negative argument".to_string(),
        ));
    }
    Ok(acc)
}

/// The coefficient C(d1, d2, y) bounding |<x, B(x,y)>| <= C |x|^2, as exact
/// rationals applied to |y|: weights
/// (d1 + 1/(4 d1), 1/(2 d1) + 3/(2 d2) + 1/4, 1/(2 d2) + 1/2,
///  d1 + 1/(4 d1), (d1+1)/2).
pub fn b_quadratic_weights(d1: u32, d2: u32) -> [(i64, u64); 5] {
    let d1 = d1 as i64;
    let d2 = d2 as i64;
    let w14 = (4 * d1 * d1 + 1, (4 * d1) as u64);
    // 1/(2 d1) + 3/(2 d2) + 1/4 = (2 d2 + 6 d1 + d1 d2) / (4 d1 d2)
    let w2 = (2 * d2 + 6 * d1 + d1 * d2, (4 * d1 * d2) as u64);
    let w3 = (1 + d2, (2 * d2) as u64);
    let w5 = (d1 + 1, 2);
    [w14, w2, w3, w14, w5]
}

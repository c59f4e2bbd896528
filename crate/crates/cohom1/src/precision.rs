//! Configurable-precision real scalars and midpoint-radius interval values.
//!
//! `BigReal` is an MPFR float at an explicitly chosen working precision.
//! `Ball` wraps a midpoint and a non-negative radius and guarantees the
//! containment property: every operation returns a ball containing the exact
//! image of all points of the operand balls.  Midpoints are computed in
//! round-to-nearest at the operand precision, and every rounding step is
//! accounted for by inflating the radius with an upper bound on the committed
//! error.  Radii are kept at a fixed small precision and always rounded up.

use crate::error::{Error, Result};
use rug::float::Round;
use rug::{Float, Rational};

pub type BigReal = Float;

/// Precision of radius bookkeeping, in bits.
pub const RAD_BITS: u32 = 64;

/// A working precision stated in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Prec {
    digits: u32,
}

impl Prec {
    pub fn from_digits(digits: u32) -> Prec {
        Prec { digits }
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    /// Binary precision backing the stated decimal precision, with headroom
    /// so that round trips through decimal do not lose the last digit.
    pub fn bits(self) -> u32 {
        // log2(10) < 3.3220
        (self.digits as f64 * 3.3220).ceil() as u32 + 16
    }
}

pub fn real_zero(prec: Prec) -> BigReal {
    Float::new(prec.bits())
}

pub fn real_from_i64(v: i64, prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), v)
}

pub fn real_from_u64(v: u64, prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), v)
}

pub fn real_from_f64(v: f64, prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), v)
}

pub fn real_from_ratio(num: i64, den: u64, prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), Rational::from((num, den)))
}

pub fn real_from_str(s: &str, prec: Prec) -> Result<BigReal> {
    let parsed = Float::parse(s).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
    Ok(Float::with_val(prec.bits(), parsed))
}

pub fn real_pi(prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), rug::float::Constant::Pi)
}

pub fn sqrt_u64(v: u64, prec: Prec) -> BigReal {
    Float::with_val(prec.bits(), v).sqrt()
}

/// Serializes a value as `<mantissa>e<exp>@<digits>`, e.g. `-6.0838655e0@550`.
/// The `@` header states the decimal precision of the value.
pub fn to_decimal(x: &BigReal, digits: u32) -> String {
    if !x.is_finite() {
        return format!("{x}@{digits}");
    }
    if x.is_zero() {
        return format!("0.0e0@{digits}");
    }
    let repr = x.to_string_radix(10, Some(digits.max(2) as usize));
    // repr is either "d.ddd" or "d.ddde<exp>" (possibly signed).
    match repr.split_once(['e', 'E']) {
        Some((mant, exp)) => format!("{mant}e{exp}@{digits}"),
        None => format!("{repr}e0@{digits}"),
    }
}

/// Parses the format produced by [`to_decimal`].
pub fn parse_decimal(s: &str) -> Result<BigReal> {
    let (num, digits) = s
        .rsplit_once('@')
        .ok_or_else(|| Error::Parse(format!("missing @precision header in {s:?}")))?;
    let digits: u32 = digits
        .parse()
        .map_err(|_| Error::Parse(format!("bad precision header in {s:?}")))?;
    real_from_str(num, Prec::from_digits(digits))
}

fn abs_to_rad(x: &BigReal, round: Round) -> BigReal {
    Float::with_val_round(RAD_BITS, x.abs_ref(), round).0
}

/// Upper bound on the round-to-nearest error committed when producing `mid`
/// at its own precision: half an ulp is at most |mid| * 2^-p, and a factor-2
/// cushion is applied.
fn round_slack(mid: &BigReal) -> BigReal {
    if mid.is_zero() {
        return Float::new(RAD_BITS);
    }
    let mut s = abs_to_rad(mid, Round::Up);
    s >>= mid.prec() - 1;
    s
}

fn rad_add(a: BigReal, b: BigReal) -> BigReal {
    use rug::ops::AddAssignRound;
    let mut a = a;
    a.add_assign_round(&b, Round::Up);
    a
}

fn rad_mul(a: &BigReal, b: &BigReal) -> BigReal {
    use rug::ops::MulAssignRound;
    let mut a = Float::with_val_round(RAD_BITS, a, Round::Up).0;
    a.mul_assign_round(b, Round::Up);
    a
}

/// A midpoint-radius interval with containment-correct arithmetic.
#[derive(Clone, Debug)]
pub struct Ball {
    pub mid: BigReal,
    pub rad: BigReal,
}

impl Ball {
    /// A ball of radius zero: the value is exact at its stated precision.
    pub fn exact(mid: BigReal) -> Ball {
        Ball {
            mid,
            rad: Float::new(RAD_BITS),
        }
    }

    pub fn new(mid: BigReal, rad: BigReal) -> Ball {
        debug_assert!(rad.is_finite() && !rad.is_sign_negative());
        let rad = Float::with_val_round(RAD_BITS, &rad, Round::Up).0;
        Ball { mid, rad }
    }

    pub fn zero(prec: Prec) -> Ball {
        Ball::exact(real_zero(prec))
    }

    pub fn from_i64(v: i64, prec: Prec) -> Ball {
        Ball::exact(real_from_i64(v, prec))
    }

    /// num/den as a ball; exact when the quotient is representable.
    pub fn from_ratio(num: i64, den: u64, prec: Prec) -> Ball {
        Self::from_ratio_bits(num, den, prec.bits())
    }

    fn from_ratio_bits(num: i64, den: u64, bits: u32) -> Ball {
        let mid = Float::with_val(bits, Rational::from((num, den)));
        if mid.to_rational().map_or(false, |r| r == Rational::from((num, den))) {
            Ball::exact(mid)
        } else {
            let rad = round_slack(&mid);
            Ball { mid, rad }
        }
    }

    pub fn prec(&self) -> u32 {
        self.mid.prec()
    }

    fn result_prec(&self, other: &Ball) -> u32 {
        self.mid.prec().max(other.mid.prec())
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn neg(&self) -> Ball {
        Ball {
            mid: Float::with_val(self.prec(), -&self.mid),
            rad: self.rad.clone(),
        }
    }

    /// A ball containing |x| for every x in self.
    pub fn abs(&self) -> Ball {
        Ball {
            mid: Float::with_val(self.prec(), self.mid.abs_ref()),
            rad: self.rad.clone(),
        }
    }

    pub fn add(&self, other: &Ball) -> Ball {
        let mid = Float::with_val(self.result_prec(other), &self.mid + &other.mid);
        let rad = rad_add(
            rad_add(self.rad.clone(), other.rad.clone()),
            round_slack(&mid),
        );
        Ball { mid, rad }
    }

    pub fn sub(&self, other: &Ball) -> Ball {
        let mid = Float::with_val(self.result_prec(other), &self.mid - &other.mid);
        let rad = rad_add(
            rad_add(self.rad.clone(), other.rad.clone()),
            round_slack(&mid),
        );
        Ball { mid, rad }
    }

    pub fn mul(&self, other: &Ball) -> Ball {
        let mid = Float::with_val(self.result_prec(other), &self.mid * &other.mid);
        let am = abs_to_rad(&self.mid, Round::Up);
        let bm = abs_to_rad(&other.mid, Round::Up);
        // |a| rb + ra |b| + ra rb + rounding
        let mut rad = rad_mul(&am, &other.rad);
        rad = rad_add(rad, rad_mul(&self.rad, &bm));
        rad = rad_add(rad, rad_mul(&self.rad, &other.rad));
        rad = rad_add(rad, round_slack(&mid));
        Ball { mid, rad }
    }

    /// Fails unless 0 is strictly outside `other`.
    pub fn div(&self, other: &Ball) -> Result<Ball> {
        use rug::ops::{DivAssignRound, MulAssignRound, SubAssignRound};
        // |b| - rb, rounded down: the closest the divisor set comes to zero.
        let mut gap = abs_to_rad(&other.mid, Round::Down);
        gap.sub_assign_round(&other.rad, Round::Down);
        if !(gap > 0u32) {
            return Err(Error::Domain(
                "division by a ball containing zero".to_string(),
            ));
        }
        let mid = Float::with_val(self.result_prec(other), &self.mid / &other.mid);
        // (|a| rb + ra |b|) / (|b| (|b| - rb))
        let am = abs_to_rad(&self.mid, Round::Up);
        let bm = abs_to_rad(&other.mid, Round::Up);
        let mut num = rad_mul(&am, &other.rad);
        num = rad_add(num, rad_mul(&self.rad, &bm));
        let mut den = abs_to_rad(&other.mid, Round::Down);
        den.mul_assign_round(&gap, Round::Down);
        num.div_assign_round(&den, Round::Up);
        let rad = rad_add(num, round_slack(&mid));
        Ok(Ball { mid, rad })
    }

    /// Fails unless self is contained in [0, inf).
    pub fn sqrt(&self) -> Result<Ball> {
        let p = self.prec();
        let lo_arg = Float::with_val_round(p, &self.mid - &self.rad, Round::Down).0;
        if lo_arg.is_sign_negative() && !lo_arg.is_zero() {
            return Err(Error::Domain(
                "square root of a ball meeting negative reals".to_string(),
            ));
        }
        let mid = Float::with_val(p, self.mid.sqrt_ref());
        let lo = Float::with_val_round(p, lo_arg.sqrt_ref(), Round::Down).0;
        let hi_arg = Float::with_val_round(p, &self.mid + &self.rad, Round::Up).0;
        let hi = Float::with_val_round(p, hi_arg.sqrt_ref(), Round::Up).0;
        let up = Float::with_val_round(RAD_BITS, &hi - &mid, Round::Up).0;
        let down = Float::with_val_round(RAD_BITS, &mid - &lo, Round::Up).0;
        let half = if up > down { up } else { down };
        let rad = rad_add(half, round_slack(&mid));
        Ok(Ball { mid, rad })
    }

    pub fn powi(&self, n: u32) -> Ball {
        match n {
            0 => Ball::exact(Float::with_val(self.prec(), 1)),
            _ => {
                let mut acc = self.clone();
                for _ in 1..n {
                    acc = acc.mul(self);
                }
                acc
            }
        }
    }

    /// Multiplies by the exact rational num/den.
    pub fn scale_ratio(&self, num: i64, den: u64) -> Ball {
        self.mul(&Ball::from_ratio_bits(num, den, self.prec()))
    }

    /// Enclosure of cos over the ball (unit Lipschitz bound).
    pub fn cos(&self) -> Ball {
        let mid = Float::with_val(self.prec(), self.mid.cos_ref());
        let rad = rad_add(self.rad.clone(), round_slack(&mid));
        Ball { mid, rad }
    }

    /// Enclosure of acos over the ball intersected with [-1, 1].  acos is
    /// decreasing, so the endpoints of the clamped interval give the range.
    /// The clamp is sound whenever the true value lies in [-1, 1]; a ball
    /// entirely outside the domain is an error.
    pub fn acos_clamped(&self) -> Result<Ball> {
        let p = self.prec();
        let one = Float::with_val(p, 1);
        let neg_one = Float::with_val(p, -1);
        let mut lo = self.lower();
        let mut hi = self.upper();
        if lo > one || hi < neg_one {
            return Err(Error::Domain(
                "arccosine of a ball outside [-1, 1]".to_string(),
            ));
        }
        if lo < neg_one {
            lo = neg_one;
        }
        if hi > one {
            hi = one;
        }
        let up = Float::with_val_round(p, lo.acos_ref(), Round::Up).0;
        let down = Float::with_val_round(p, hi.acos_ref(), Round::Down).0;
        let mut mid = Float::with_val(p, &up + &down);
        mid /= 2u32;
        let d_up = Float::with_val_round(RAD_BITS, &up - &mid, Round::Up).0;
        let d_down = Float::with_val_round(RAD_BITS, &mid - &down, Round::Up).0;
        let half = if d_up > d_down { d_up } else { d_down };
        let rad = rad_add(half, round_slack(&mid));
        Ok(Ball { mid, rad })
    }

    /// Enclosure of exp over the ball.  exp is increasing and convex, so the
    /// deviation is largest at the upper endpoint.
    pub fn exp(&self) -> Ball {
        let p = self.prec();
        let mid = Float::with_val(p, self.mid.exp_ref());
        let hi_arg = Float::with_val_round(p, &self.mid + &self.rad, Round::Up).0;
        let hi = Float::with_val_round(p, hi_arg.exp_ref(), Round::Up).0;
        let spread = Float::with_val_round(RAD_BITS, &hi - &mid, Round::Up).0;
        let rad = rad_add(spread, round_slack(&mid));
        Ball { mid, rad }
    }

    /// mid + rad, rounded toward +inf: a certified upper bound of the ball.
    pub fn upper(&self) -> BigReal {
        Float::with_val_round(self.prec(), &self.mid + &self.rad, Round::Up).0
    }

    /// mid - rad, rounded toward -inf.
    pub fn lower(&self) -> BigReal {
        Float::with_val_round(self.prec(), &self.mid - &self.rad, Round::Down).0
    }

    /// Upper bound of |x| over the ball.
    pub fn mag(&self) -> BigReal {
        let a = Float::with_val_round(self.prec(), self.mid.abs_ref(), Round::Up).0;
        Float::with_val_round(self.prec(), &a + &self.rad, Round::Up).0
    }

    /// Intersection with [0, inf), for quantities known non-negative before
    /// a square root.  Containment of the true value is preserved whenever
    /// the true value is non-negative.
    pub fn nonneg(&self) -> Ball {
        if !self.lower().is_sign_negative() {
            return self.clone();
        }
        let bits = self.prec();
        let up = self.upper();
        if up.is_sign_negative() {
            return Ball::exact(Float::new(bits));
        }
        // Pick the radius first (rounded up), then reuse it as the exact
        // midpoint: the result is exactly [0, 2 rad] which covers [0, up].
        let rad = Float::with_val_round(RAD_BITS, &up / 2u32, Round::Up).0;
        let mid = Float::with_val(bits, &rad);
        Ball { mid, rad }
    }

    pub fn contains_zero(&self) -> bool {
        let a = Float::with_val(self.prec(), self.mid.abs_ref());
        a <= self.rad
    }

    /// Exact containment test (both values converted to rationals).
    pub fn contains(&self, x: &BigReal) -> bool {
        match x.to_rational() {
            Some(r) => self.contains_rational(&r),
            None => false,
        }
    }

    pub fn contains_rational(&self, x: &Rational) -> bool {
        let (Some(m), Some(r)) = (self.mid.to_rational(), self.rad.to_rational()) else {
            return false;
        };
        let diff = Rational::from(x - &m).abs();
        diff <= r
    }
}

/// Enclosure of pi at the given precision.
pub fn ball_pi(prec: Prec) -> Ball {
    let mid = real_pi(prec);
    let rad = round_slack(&mid);
    Ball { mid, rad }
}

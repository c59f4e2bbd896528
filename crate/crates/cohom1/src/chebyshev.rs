//! Step (II): Chebyshev interpolation of heuristic solutions and a closed
//! differential algebra (product, integral, derivative, Cesaro mean,
//! evaluation, Sobolev norms) over ball coefficients.
//!
//! Series live on a domain [0, T] in the basis T_k(2t/T - 1) with the
//! half-first-coefficient convention f = (1/2) c_0 T_0 + sum_{k>=1} c_k T_k.
//! The fitted point values carry no rigor; everything downstream of the
//! fitted polynomial is enclosure-true ball arithmetic.

use crate::error::{Error, Result};
use crate::precision::{ball_pi, BigReal, Ball, Prec, to_decimal};
use crate::system::{Coeff, State5};
use rug::Float;

#[derive(Clone, Debug)]
pub struct ChebSeries {
    /// Right endpoint T of the domain [0, T], exact at its precision.
    pub t_max: BigReal,
    /// c_0 .. c_{N-1} under the half-c0 convention.
    pub coeffs: Vec<Ball>,
}

/// Five series sharing one domain.
pub type ChebVec = [ChebSeries; 5];

fn same_domain(a: &ChebSeries, b: &ChebSeries) {
    assert!(
        a.t_max == b.t_max,
        "Chebyshev series algebra requires a shared domain"
    );
}

impl ChebSeries {
    pub fn zero(t_max: &BigReal, prec: Prec) -> ChebSeries {
        ChebSeries {
            t_max: Float::with_val(prec.bits(), t_max),
            coeffs: vec![Ball::zero(prec)],
        }
    }

    /// The constant series with the given value.
    pub fn constant(v: Ball, t_max: &BigReal) -> ChebSeries {
        let bits = v.prec();
        ChebSeries {
            t_max: Float::with_val(bits, t_max),
            coeffs: vec![v.scale_ratio(2, 1)],
        }
    }

    /// The basis element T_k on the mapped domain.
    pub fn basis(k: usize, t_max: &BigReal, prec: Prec) -> ChebSeries {
        let mut coeffs = vec![Ball::zero(prec); k + 1];
        coeffs[k] = if k == 0 {
            Ball::from_i64(2, prec)
        } else {
            Ball::from_i64(1, prec)
        };
        ChebSeries {
            t_max: Float::with_val(prec.bits(), t_max),
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn prec_bits(&self) -> u32 {
        self.coeffs[0].prec()
    }

    /// Largest coefficient magnitude over the last tenth of the
    /// coefficients: a fit-quality diagnostic, not an error bound.
    pub fn tail_magnitude(&self) -> f64 {
        let n = self.coeffs.len();
        let start = n - (n / 10).max(1);
        self.coeffs[start..]
            .iter()
            .map(|c| c.mag().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self, digits: u32) -> serde_json::Value {
        serde_json::json!({
            "T": to_decimal(&self.t_max, digits),
            "N": self.coeffs.len(),
            "coeffs": self.coeffs.iter().map(|c| {
                [to_decimal(&c.mid, digits), to_decimal(&c.rad, 10)]
            }).collect::<Vec<_>>(),
        })
    }
}

/// The N interpolation nodes mapped to [0, T]: t_j = T (x_j + 1)/2 with
/// x_j = cos(pi (j - 1/2)/N), j = 1..N.
pub fn chebyshev_nodes(n: usize, t_max: &BigReal, prec: Prec) -> Vec<BigReal> {
    let bits = prec.bits();
    let pi = Float::with_val(bits, rug::float::Constant::Pi);
    (1..=n)
        .map(|j| {
            let angle = Float::with_val(bits, &pi * ((2 * j - 1) as u32)) / (2 * n as u32);
            let x = angle.cos();
            let mut t = Float::with_val(bits, &x + 1u32);
            t *= t_max;
            t /= 2u32;
            t
        })
        .collect()
}

/// Enclosures of cos(pi k (2j-1) / (2N)) for k = 0..N-1 at fixed j (1-based).
fn cos_row(n: usize, j: usize, prec: Prec) -> Vec<Ball> {
    let pi = ball_pi(prec);
    (0..n)
        .map(|k| {
            let m = (k * (2 * j - 1)) as i64;
            pi.scale_ratio(m, 2 * n as u64).cos()
        })
        .collect()
}

/// Coefficients of the interpolant through the given node samples
/// (sample j at node t_{j+1}): c_k = (2/N) sum_j f_j cos(pi k (j+1/2)/N).
/// The samples are taken as exact; the cosine sum is enclosed.
pub fn fit_from_samples(samples: &[State5<BigReal>], t_max: &BigReal, prec: Prec) -> ChebVec {
    let n = samples.len();
    let mut acc: Vec<Vec<Ball>> = (0..5).map(|_| vec![Ball::zero(prec); n]).collect();
    for (j, s) in samples.iter().enumerate() {
        let row = cos_row(n, j + 1, prec);
        for i in 0..5 {
            if s[i].is_zero() {
                continue;
            }
            let f = Ball::exact(Float::with_val(prec.bits(), &s[i]));
            for k in 0..n {
                acc[i][k] = acc[i][k].add(&f.mul(&row[k]));
            }
        }
    }
    let series: Vec<ChebSeries> = acc
        .into_iter()
        .map(|coeffs| ChebSeries {
            t_max: Float::with_val(prec.bits(), t_max),
            coeffs: coeffs.into_iter().map(|c| c.scale_ratio(2, n as u64)).collect(),
        })
        .collect();
    series.try_into().ok().unwrap()
}

/// Fits a scalar function on [0, T] with N nodes.
pub fn fit(
    f: impl Fn(&BigReal) -> Result<BigReal>,
    n: usize,
    t_max: &BigReal,
    prec: Prec,
) -> Result<ChebSeries> {
    let nodes = chebyshev_nodes(n, t_max, prec);
    let zero = crate::precision::real_zero(prec);
    let samples: Vec<State5<BigReal>> = nodes
        .iter()
        .map(|t| {
            let v = f(t)?;
            Ok([
                v,
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ])
        })
        .collect::<Result<_>>()?;
    let [s, _, _, _, _] = fit_from_samples(&samples, t_max, prec);
    Ok(s)
}

/// Fits a 5-vector function on [0, T] with N nodes, sharing the cosine table.
pub fn fit_vec(
    f: impl Fn(&BigReal) -> Result<State5<BigReal>>,
    n: usize,
    t_max: &BigReal,
    prec: Prec,
) -> Result<ChebVec> {
    let nodes = chebyshev_nodes(n, t_max, prec);
    let samples: Vec<State5<BigReal>> = nodes.iter().map(&f).collect::<Result<_>>()?;
    Ok(fit_from_samples(&samples, t_max, prec))
}

/// Full-convention view: a_0 = c_0/2, a_k = c_k, so f = sum a_k T_k.
fn full_coeffs(s: &ChebSeries) -> Vec<Ball> {
    let mut a = s.coeffs.clone();
    a[0] = a[0].scale_ratio(1, 2);
    a
}

fn from_full(t_max: &BigReal, mut a: Vec<Ball>) -> ChebSeries {
    a[0] = a[0].scale_ratio(2, 1);
    ChebSeries {
        t_max: Float::with_val(t_max.prec(), t_max),
        coeffs: a,
    }
}

/// Product via the linearization T_m T_n = (1/2)(T_{m+n} + T_{|m-n|});
/// the full product degree is kept.
pub fn cheb_mul(lhs: &ChebSeries, rhs: &ChebSeries) -> ChebSeries {
    same_domain(lhs, rhs);
    let a = full_coeffs(lhs);
    let b = full_coeffs(rhs);
    let bits_zero = Ball::exact(Float::new(lhs.prec_bits().max(rhs.prec_bits())));
    let deg = lhs.degree() + rhs.degree();
    let mut out = vec![bits_zero; deg + 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let half = ai.mul(bj).scale_ratio(1, 2);
            out[i + j] = out[i + j].add(&half);
            let d = i.abs_diff(j);
            out[d] = out[d].add(&half);
        }
    }
    from_full(&lhs.t_max, out)
}

pub fn cheb_add(lhs: &ChebSeries, rhs: &ChebSeries) -> ChebSeries {
    same_domain(lhs, rhs);
    let n = lhs.coeffs.len().max(rhs.coeffs.len());
    let zero = Ball::exact(Float::new(lhs.prec_bits().max(rhs.prec_bits())));
    let coeffs = (0..n)
        .map(|k| {
            let a = lhs.coeffs.get(k).unwrap_or(&zero);
            let b = rhs.coeffs.get(k).unwrap_or(&zero);
            a.add(b)
        })
        .collect();
    ChebSeries {
        t_max: lhs.t_max.clone(),
        coeffs,
    }
}

pub fn cheb_sub(lhs: &ChebSeries, rhs: &ChebSeries) -> ChebSeries {
    cheb_add(lhs, &cheb_scale(rhs, -1, 1))
}

pub fn cheb_scale(s: &ChebSeries, num: i64, den: u64) -> ChebSeries {
    ChebSeries {
        t_max: s.t_max.clone(),
        coeffs: s.coeffs.iter().map(|c| c.scale_ratio(num, den)).collect(),
    }
}

/// Antiderivative vanishing at t = 0 (the left endpoint x = -1):
/// b_k = (a_{k-1} - a_{k+1}) / (2k) scaled by dt/dx = T/2, then b_0 fixed
/// so the value at x = -1 is zero.
pub fn cheb_integrate(s: &ChebSeries) -> ChebSeries {
    let a = full_coeffs(s);
    let n = a.len();
    let zero = Ball::exact(Float::new(s.prec_bits()));
    let get = |k: usize| -> &Ball {
        if k < n {
            &a[k]
        } else {
            &zero
        }
    };
    // dt/dx = T/2 as an exact ball of the stored T
    let half_t = Ball::exact(s.t_max.clone()).scale_ratio(1, 2);
    let mut b = vec![zero.clone(); n + 1];
    for k in 1..=n {
        let diff = if k == 1 {
            // the T_0 antiderivative is T_1 outright, so a_0 counts double
            get(0).scale_ratio(2, 1).sub(get(2))
        } else {
            get(k - 1).sub(get(k + 1))
        };
        b[k] = diff.scale_ratio(1, 2 * k as u64).mul(&half_t);
    }
    // value at x = -1: sum (-1)^k b_k; choose b_0 to cancel it
    let mut at_left = zero.clone();
    for (k, bk) in b.iter().enumerate().skip(1) {
        if k % 2 == 0 {
            at_left = at_left.add(bk);
        } else {
            at_left = at_left.sub(bk);
        }
    }
    b[0] = at_left.scale_ratio(-1, 1);
    from_full(&s.t_max, b)
}

/// Derivative: descending recurrence b_{k-1} = b_{k+1} + 2k a_k, scaled by
/// dx/dt = 2/T.
pub fn cheb_diff(s: &ChebSeries) -> ChebSeries {
    let a = &s.coeffs; // primed convention works directly here
    let n = a.len();
    let bits = s.prec_bits();
    let zero = Ball::exact(Float::new(bits));
    if n <= 1 {
        return ChebSeries {
            t_max: s.t_max.clone(),
            coeffs: vec![zero],
        };
    }
    let mut b = vec![zero.clone(); n];
    for k in (1..n).rev() {
        let up = if k + 1 < n { b[k + 1].clone() } else { zero.clone() };
        b[k - 1] = up.add(&a[k].scale_ratio(2 * k as i64, 1));
    }
    b.truncate(n - 1);
    // scale by 2/T: divide by the exact ball T/2
    let half_t = Ball::exact(s.t_max.clone()).scale_ratio(1, 2);
    let coeffs = b
        .into_iter()
        .map(|c| c.div(&half_t).expect("domain endpoint T is nonzero"))
        .collect();
    ChebSeries {
        t_max: s.t_max.clone(),
        coeffs,
    }
}

/// The Cesaro images C_n(t) = (1/t) integral_0^t T_n(x(s)) ds as series,
/// n = 0..count-1, built from the R_n recursion
/// R_n = 2a T_{n-1} + 2b R_{n-1} - R_{n-2} with a = 2/T, b = -1.
pub fn cesaro_images(count: usize, t_max: &BigReal, prec: Prec) -> Vec<ChebSeries> {
    let a_ball = Ball::from_i64(2, prec)
        .div(&Ball::exact(Float::with_val(prec.bits(), t_max)))
        .expect("domain endpoint T is nonzero");
    let mut r: Vec<ChebSeries> = Vec::with_capacity(count + 2);
    r.push(ChebSeries::zero(t_max, prec));
    r.push(ChebSeries::constant(a_ball.clone(), t_max));
    for n in 2..count + 2 {
        let tbasis = ChebSeries::basis(n - 1, t_max, prec);
        let mut term = cheb_scale(&tbasis, 1, 1);
        term.coeffs = term
            .coeffs
            .iter()
            .map(|c| c.mul(&a_ball).scale_ratio(2, 1))
            .collect();
        // b = -1, so 2b R_{n-1} = -2 R_{n-1}
        let rn = cheb_sub(&cheb_sub(&term, &cheb_scale(&r[n - 1], 2, 1)), &r[n - 2]);
        r.push(rn);
    }
    let inv_a = Ball::exact(Float::with_val(prec.bits(), t_max)).scale_ratio(1, 2);
    (0..count)
        .map(|n| match n {
            0 => ChebSeries::basis(0, t_max, prec),
            1 => {
                // (1/2) T_1 + (b/2) T_0 with b = -1
                let mut s = ChebSeries::basis(1, t_max, prec);
                s.coeffs[1] = s.coeffs[1].scale_ratio(1, 2);
                s.coeffs[0] = Ball::from_i64(-1, prec);
                s
            }
            _ => {
                let hi = cheb_scale(&r[n + 1], 1, 2 * (n as u64 + 1));
                let lo = cheb_scale(&r[n - 1], 1, 2 * (n as u64 - 1));
                let mut s = cheb_sub(&hi, &lo);
                s.coeffs = s.coeffs.iter().map(|c| c.mul(&inv_a)).collect();
                s
            }
        })
        .collect()
}

/// The Cesaro mean t -> (1/t) integral_0^t s, as a series of the same degree.
pub fn cesaro_mean(s: &ChebSeries) -> ChebSeries {
    let prec_bits = s.prec_bits();
    let prec = prec_from_bits(prec_bits);
    let a = full_coeffs(s);
    let images = cesaro_images(a.len(), &s.t_max, prec);
    let mut out = ChebSeries::zero(&s.t_max, prec);
    for (ak, cn) in a.iter().zip(images.iter()) {
        let mut term = cn.clone();
        term.coeffs = term.coeffs.iter().map(|c| c.mul(ak)).collect();
        out = cheb_add(&out, &term);
    }
    out
}

fn prec_from_bits(bits: u32) -> Prec {
    // inverse of Prec::bits with a safe floor
    Prec::from_digits((((bits.saturating_sub(16)) as f64) / 3.3220).floor().max(1.0) as u32)
}

/// Enclosure of the series at t.  The sum runs over cos(k acos(x)) for the
/// mapped variable x rather than the Clenshaw recurrence: in ball arithmetic
/// Clenshaw amplifies radii by roughly (1 + sqrt(2))^degree, while the cosine
/// form keeps the blow-up linear in the degree.
pub fn eval(s: &ChebSeries, t: &Ball) -> Result<Ball> {
    let bits = s.prec_bits().max(t.prec());
    let t_hi = Float::with_val_round(bits, &s.t_max, rug::float::Round::Up).0;
    if t.lower().is_sign_negative() && !t.lower().is_zero() || t.upper() > t_hi {
        return Err(Error::Domain(format!(
            "evaluation point [{}, {}] leaves the domain [0, {}]",
            t.lower().to_f64(),
            t.upper().to_f64(),
            s.t_max.to_f64()
        )));
    }
    // Exact endpoints: T_k(-1) = (-1)^k and T_k(1) = 1.  acos has a
    // square-root cusp at x = +-1 that would needlessly inflate the radius.
    if t.rad.is_zero() && (t.mid.is_zero() || t.mid == s.t_max) {
        let at_zero = t.mid.is_zero();
        let mut acc = s.coeffs[0].scale_ratio(1, 2);
        for (k, c) in s.coeffs.iter().enumerate().skip(1) {
            acc = if at_zero && k % 2 == 1 {
                acc.sub(c)
            } else {
                acc.add(c)
            };
        }
        return Ok(acc);
    }
    // x = 2t/T - 1
    let x = t
        .scale_ratio(2, 1)
        .div(&Ball::exact(s.t_max.clone()))?
        .sub(&Ball::from_i64(1, prec_from_bits(bits)));
    let theta = x.acos_clamped()?;
    let mut acc = s.coeffs[0].scale_ratio(1, 2);
    for (k, c) in s.coeffs.iter().enumerate().skip(1) {
        if c.mid.is_zero() && c.rad.is_zero() {
            continue;
        }
        acc = acc.add(&c.mul(&theta.scale_ratio(k as i64, 1).cos()));
    }
    Ok(acc)
}

/// Upper enclosure of the squared L2 norm of one scalar series on [0, t_end].
pub fn l2_sq(s: &ChebSeries, t_end: &BigReal) -> Result<Ball> {
    let sq = cheb_mul(s, s);
    let anti = cheb_integrate(&sq);
    eval(&anti, &Ball::exact(Float::with_val(s.prec_bits(), t_end)))
}

/// Rigorous upper enclosure of the H^k norm of one component on [0, t_end]:
/// the root of the summed squared L2 norms of derivatives 0..k.
pub fn hk_norm_scalar(s: &ChebSeries, k: u32, t_end: &BigReal) -> Result<Ball> {
    let mut acc = Ball::exact(Float::new(s.prec_bits()));
    let mut cur = s.clone();
    for j in 0..=k {
        acc = acc.add(&l2_sq(&cur, t_end)?);
        if j < k {
            cur = cheb_diff(&cur);
        }
    }
    acc.nonneg().sqrt()
}

/// H^k norm of the Euclidean 5-vector on [0, t_end].
pub fn hk_norm(v: &ChebVec, k: u32, t_end: &BigReal) -> Result<Ball> {
    let mut acc = Ball::exact(Float::new(v[0].prec_bits()));
    for s in v.iter() {
        let mut cur = s.clone();
        for j in 0..=k {
            acc = acc.add(&l2_sq(&cur, t_end)?);
            if j < k {
                cur = cheb_diff(&cur);
            }
        }
    }
    acc.nonneg().sqrt()
}

impl Coeff for ChebSeries {
    fn add(&self, rhs: &Self) -> Self {
        cheb_add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        cheb_sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        cheb_mul(self, rhs)
    }
    fn scale(&self, num: i64, den: u64) -> Self {
        cheb_scale(self, num, den)
    }
    fn zero_like(&self) -> Self {
        ChebSeries {
            t_max: self.t_max.clone(),
            coeffs: vec![Ball::exact(Float::new(self.prec_bits()))],
        }
    }
}

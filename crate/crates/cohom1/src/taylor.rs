//! Step (I): the heuristic arbitrary-precision Taylor-series solver.
//!
//! A solution is represented as a chain of rho-normalized local power-series
//! patches.  The origin patch comes from the Frobenius recurrence driven by
//! the closed-form resolvents; away from the origin the derivative recursion
//! is used.  Each patch is trusted only up to half its root-test convergence
//! radius.  No rigor is claimed here: enclosures enter only through the
//! a posteriori residuals computed downstream.

use crate::error::{Error, Result};
use crate::precision::{real_from_f64, real_zero, to_decimal, BigReal, Prec};
use crate::system::{apply_l, apply_resolvent, bilinear_b, initial_state, Params, State5};
use rug::Float;

/// Default normalization parameter for the coefficient recurrences.
pub const DEFAULT_RHO: f64 = 0.3;

/// Hard ceiling asserted on the solution magnitude along a path; beyond it
/// the truncation heuristic is invalid and propagation aborts.
pub const STATE_SUP_LIMIT: f64 = 100.0;

/// One local expansion: coeffs[k] = (rho^k / k!) eta^(k)(center).
#[derive(Clone, Debug)]
pub struct TaylorPatch {
    pub center: BigReal,
    pub rho: BigReal,
    pub coeffs: Vec<State5<BigReal>>,
    /// Root-test estimate of the convergence radius (heuristic, low
    /// precision by nature).
    pub radius: f64,
    /// center + radius/2; the patch is used only on [center, valid_to].
    pub valid_to: BigReal,
}

/// A chained sequence of patches covering [0, t_end].
#[derive(Debug)]
pub struct SolutionPath {
    pub params: Params,
    pub d_target: u32,
    pub patches: Vec<TaylorPatch>,
    pub t_end: BigReal,
}

/// Truncation length: N = ceil((d + 2) log 10 / log 2) terms gives a
/// 2^-N tail on the half-radius interval.
pub fn terms_for_digits(d_target: u32) -> usize {
    (((d_target + 2) as f64) * std::f64::consts::LN_10 / std::f64::consts::LN_2).ceil() as usize
}

fn state_sup_f64(s: &State5<BigReal>) -> f64 {
    s.iter()
        .map(|c| c.to_f64().abs())
        .fold(0.0f64, f64::max)
}

/// log2 of the infinity norm of a state, robust to values outside f64 range.
fn state_log2_sup(s: &State5<BigReal>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for c in s {
        if c.is_zero() {
            continue;
        }
        // Mantissa is in [0.5, 1); its log2 corrects the raw exponent to
        // f64 accuracy without ever overflowing.
        let (mant, exp) = c.to_f64_exp();
        let log2 = exp as f64 + mant.abs().log2();
        best = Some(best.map_or(log2, |b: f64| b.max(log2)));
    }
    best
}

/// Root-test radius from the last five coefficients, after un-normalizing by
/// rho: r = 1 / max_k (||c_k|| / rho^k)^(1/k).  Returns +inf when all five
/// are exactly zero (polynomial solution).
pub fn estimate_radius(patch_coeffs: &[State5<BigReal>], rho: f64) -> f64 {
    let n = patch_coeffs.len();
    assert!(n >= 6, "need at least 6 coefficients for the root test");
    let log2_rho = rho.log2();
    let mut best: Option<f64> = None;
    for k in (n - 5)..n {
        if let Some(log2_norm) = state_log2_sup(&patch_coeffs[k]) {
            // log2 of ||c_k||^(1/k) / rho
            let v = (log2_norm - k as f64 * log2_rho) / k as f64;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    match best {
        Some(v) => (-v).exp2(),
        None => f64::INFINITY,
    }
}

/// Convolution sum_{i=0}^{k} B(c_i, c_{k-i}), using symmetry of B to halve
/// the work.
fn b_convolution(
    p: &Params,
    coeffs: &[State5<BigReal>],
    k: usize,
    prec: Prec,
) -> State5<BigReal> {
    let mut acc: State5<BigReal> = std::array::from_fn(|_| real_zero(prec));
    let half = k / 2;
    for i in 0..=half {
        let j = k - i;
        if j < i {
            break;
        }
        let term = bilinear_b(p, &coeffs[i], &coeffs[j]);
        let factor = if i != j { 2u32 } else { 1u32 };
        for (a, t) in acc.iter_mut().zip(term.iter()) {
            if factor == 2 {
                *a += Float::with_val(t.prec(), t * 2u32);
            } else {
                *a += t;
            }
        }
    }
    acc
}

/// Origin patch via the Frobenius recurrence
/// a_{k+1} = ((k+1)I - L)^-1 sum B(a_i, a_{k-i}), in rho-normalized form.
pub fn frobenius_origin(p: &Params, n_terms: usize, rho: f64, prec: Prec) -> TaylorPatch {
    let rho_r = real_from_f64(rho, prec);
    let mut coeffs: Vec<State5<BigReal>> = Vec::with_capacity(n_terms + 1);
    coeffs.push(initial_state(p, prec));
    for k in 0..n_terms {
        let conv = b_convolution(p, &coeffs, k, prec);
        let mut next = apply_resolvent(p, (k + 1) as u32, &conv);
        for c in next.iter_mut() {
            *c *= &rho_r;
        }
        coeffs.push(next);
    }
    let radius = estimate_radius(&coeffs, rho);
    let valid_to = Float::with_val(prec.bits(), radius / 2.0);
    TaylorPatch {
        center: real_zero(prec),
        rho: rho_r,
        coeffs,
        radius,
        valid_to,
    }
}

/// Patch about t > 0 from the normalized derivative recursion
/// c_{m+1} = (rho/(m+1)) sum_k { (-rho)^{m-k} L c_k / t^{m-k+1}
///                               + B(c_{m-k}, c_k) }.
pub fn extend_patch(
    p: &Params,
    center: &BigReal,
    c0: State5<BigReal>,
    n_terms: usize,
    rho: f64,
    prec: Prec,
) -> Result<TaylorPatch> {
    if !(center.is_sign_positive() && !center.is_zero()) {
        return Err(Error::Domain(
            "derivative recursion requires a positive center; use the Frobenius origin patch"
                .to_string(),
        ));
    }
    let bits = prec.bits();
    let rho_r = real_from_f64(rho, prec);
    let inv_t = Float::with_val(bits, 1u32) / center;
    // q = -rho / t; the L-term at lag j carries q^j / t.
    let q = Float::with_val(bits, &rho_r * &inv_t) * -1i32;
    let mut q_pows: Vec<BigReal> = Vec::with_capacity(n_terms + 1);
    q_pows.push(Float::with_val(bits, 1u32));
    for j in 1..=n_terms {
        q_pows.push(Float::with_val(bits, &q_pows[j - 1] * &q));
    }

    let mut coeffs: Vec<State5<BigReal>> = Vec::with_capacity(n_terms + 1);
    let mut l_cache: Vec<State5<BigReal>> = Vec::with_capacity(n_terms + 1);
    l_cache.push(apply_l(p, &c0));
    coeffs.push(c0);
    for m in 0..n_terms {
        let mut acc = b_convolution(p, &coeffs, m, prec);
        for k in 0..=m {
            let w = Float::with_val(bits, &q_pows[m - k] * &inv_t);
            for (a, l) in acc.iter_mut().zip(l_cache[k].iter()) {
                *a += Float::with_val(bits, l * &w);
            }
        }
        let mut next: State5<BigReal> = acc;
        let scale = Float::with_val(bits, &rho_r / ((m + 1) as u32));
        for c in next.iter_mut() {
            *c *= &scale;
        }
        l_cache.push(apply_l(p, &next));
        coeffs.push(next);
    }
    let radius = estimate_radius(&coeffs, rho);
    let valid_to = Float::with_val(bits, center) + Float::with_val(bits, radius / 2.0);
    Ok(TaylorPatch {
        center: Float::with_val(bits, center),
        rho: rho_r,
        coeffs,
        radius,
        valid_to,
    })
}

/// One application of the m-times-differentiated equation: given the jet
/// eta, eta', ..., eta^(m) at t, returns eta^(m+1)(t) from
/// sum_k C(m,k) { (-1)^(m-k) (m-k)! L eta^(k) / t^(m-k+1)
///                + B[eta^(m-k), eta^(k)] }.
pub fn derivative_recursion(
    p: &Params,
    t: &BigReal,
    jet: &[State5<BigReal>],
) -> Result<State5<BigReal>> {
    if !(t.is_sign_positive() && !t.is_zero()) {
        return Err(Error::Domain(
            "derivative recursion requires t > 0; the origin needs the Frobenius recurrence"
                .to_string(),
        ));
    }
    let m = jet.len() - 1;
    let bits = jet[0][0].prec().max(t.prec());
    let inv_t = Float::with_val(bits, 1u32) / t;
    let mut acc: State5<BigReal> = std::array::from_fn(|_| Float::new(bits));
    let mut binom = rug::Integer::from(1);
    for k in 0..=m {
        if k > 0 {
            binom *= (m - k + 1) as u32;
            binom /= k as u32;
        }
        let mut fact = rug::Integer::from(if (m - k) % 2 == 0 { 1i32 } else { -1i32 });
        for j in 2..=(m - k) {
            fact *= j as u32;
        }
        // C(m,k) (-1)^(m-k) (m-k)! / t^(m-k+1)
        let coeff = rug::Integer::from(&fact * &binom);
        let mut w = Float::with_val(bits, &coeff);
        for _ in 0..(m - k + 1) {
            w *= &inv_t;
        }
        let binf = Float::with_val(bits, &binom);
        let lterm = apply_l(p, &jet[k]);
        let bterm = bilinear_b(p, &jet[m - k], &jet[k]);
        for i in 0..5 {
            acc[i] += Float::with_val(bits, &lterm[i] * &w);
            acc[i] += Float::with_val(bits, &bterm[i] * &binf);
        }
    }
    Ok(acc)
}

impl TaylorPatch {
    /// Value (order 0) or derivative (order 1) of the local series at t.
    pub fn evaluate(&self, t: &BigReal, order: u32) -> State5<BigReal> {
        let bits = self.coeffs[0][0].prec();
        let u = Float::with_val(bits, t - &self.center) / &self.rho;
        let n = self.coeffs.len();
        match order {
            0 => {
                let mut acc: State5<BigReal> = self.coeffs[n - 1].clone();
                for k in (0..n - 1).rev() {
                    for i in 0..5 {
                        acc[i] = Float::with_val(bits, &acc[i] * &u) + &self.coeffs[k][i];
                    }
                }
                acc
            }
            1 => {
                // d/dt = (1/rho) d/du of sum c_k u^k
                let mut acc: State5<BigReal> = std::array::from_fn(|i| {
                    Float::with_val(bits, &self.coeffs[n - 1][i] * ((n - 1) as u32))
                });
                for k in (1..n - 1).rev() {
                    for i in 0..5 {
                        acc[i] = Float::with_val(bits, &acc[i] * &u)
                            + Float::with_val(bits, &self.coeffs[k][i] * (k as u32));
                    }
                }
                for a in acc.iter_mut() {
                    *a /= &self.rho;
                }
                acc
            }
            _ => panic!("only orders 0 and 1 are supported"),
        }
    }

    /// Integral over [center, t] of the local series, componentwise.
    pub fn integral_from_center(&self, t: &BigReal) -> State5<BigReal> {
        let bits = self.coeffs[0][0].prec();
        let u = Float::with_val(bits, t - &self.center) / &self.rho;
        let n = self.coeffs.len();
        // integral = rho * sum c_k u^(k+1)/(k+1)
        let mut acc: State5<BigReal> = std::array::from_fn(|i| {
            Float::with_val(bits, &self.coeffs[n - 1][i] / (n as u32))
        });
        for k in (0..n - 1).rev() {
            for i in 0..5 {
                acc[i] = Float::with_val(bits, &acc[i] * &u)
                    + Float::with_val(bits, &self.coeffs[k][i] / ((k + 1) as u32));
            }
        }
        for a in acc.iter_mut() {
            *a = Float::with_val(bits, &*a * &u);
            *a *= &self.rho;
        }
        acc
    }
}

/// Where to stop chaining patches.
pub enum Target {
    /// Cover [0, t_end].
    Time(f64),
    /// Continue until Z(t) = d2/t + eta3 has dropped below -0.3 (safely past
    /// the stopping time), or fail at the guard time.
    PastStop,
}

const PAST_STOP_Z: f64 = -0.3;
const PAST_STOP_GUARD_T: f64 = 6.0;

/// Chains patches from the origin until the target is reached.
pub fn propagate(
    p: &Params,
    d_target: u32,
    rho: f64,
    prec: Prec,
    target: Target,
) -> Result<SolutionPath> {
    let n_terms = terms_for_digits(d_target);
    // A patch with an infinite radius estimate (polynomial tail) covers
    // everything; cap its validity at the target so evaluation stays finite.
    let cap = match &target {
        Target::Time(t_end) => *t_end,
        Target::PastStop => PAST_STOP_GUARD_T,
    };
    let clamp = |patch: &mut TaylorPatch| {
        if !patch.valid_to.is_finite() {
            patch.valid_to = Float::with_val(prec.bits(), cap);
        }
    };
    let mut patches: Vec<TaylorPatch> = Vec::new();
    let mut origin = frobenius_origin(p, n_terms, rho, prec);
    clamp(&mut origin);
    patches.push(origin);
    loop {
        let last = patches.last().unwrap();
        let t_reach = last.valid_to.to_f64();
        if last.radius < 1e-6 {
            return Err(Error::Propagation {
                reached: last.center.to_f64(),
                reason: format!("estimated radius collapsed to {:.3e}", last.radius),
            });
        }
        let c0 = last.evaluate(&last.valid_to.clone(), 0);
        if state_sup_f64(&c0) > STATE_SUP_LIMIT {
            return Err(Error::Propagation {
                reached: t_reach,
                reason: format!(
                    "solution magnitude {:.3} exceeded the working bound {}",
                    state_sup_f64(&c0),
                    STATE_SUP_LIMIT
                ),
            });
        }
        let done = match &target {
            Target::Time(t_end) => t_reach >= *t_end,
            Target::PastStop => {
                let z = p.d2 as f64 / t_reach + c0[2].to_f64();
                z < PAST_STOP_Z
            }
        };
        if done {
            let t_end = last.valid_to.clone();
            return Ok(SolutionPath {
                params: p.clone(),
                d_target,
                patches,
                t_end,
            });
        }
        if t_reach > PAST_STOP_GUARD_T {
            return Err(Error::StoppingNotReached { t_end: t_reach });
        }
        let center = last.valid_to.clone();
        let mut next = extend_patch(p, &center, c0, n_terms, rho, prec)?;
        clamp(&mut next);
        patches.push(next);
    }
}

/// Covers [0, t_end].
pub fn propagate_to(
    p: &Params,
    t_end: f64,
    d_target: u32,
    rho: f64,
    prec: Prec,
) -> Result<SolutionPath> {
    propagate(p, d_target, rho, prec, Target::Time(t_end))
}

/// Continues until the stopping indicator Z(t) = d2/t + eta3 has dropped
/// well below zero, so the path covers the stopping time plus margin.
pub fn propagate_past_stop(
    p: &Params,
    d_target: u32,
    rho: f64,
    prec: Prec,
) -> Result<SolutionPath> {
    propagate(p, d_target, rho, prec, Target::PastStop)
}

impl SolutionPath {
    fn patch_for(&self, t: &BigReal) -> Result<&TaylorPatch> {
        if t.is_sign_negative() || *t > self.t_end {
            return Err(Error::Domain(format!(
                "evaluation at t = {t} outside coverage [0, {}]",
                self.t_end
            )));
        }
        // Patches are ordered with contiguous coverage; pick the first whose
        // valid_to reaches t.
        let idx = self
            .patches
            .partition_point(|patch| patch.valid_to < *t)
            .min(self.patches.len() - 1);
        Ok(&self.patches[idx])
    }

    /// Value (order 0) or first derivative (order 1) at t.
    pub fn evaluate(&self, t: &BigReal, order: u32) -> Result<State5<BigReal>> {
        Ok(self.patch_for(t)?.evaluate(t, order))
    }

    /// The stopping indicator Z(t) = d2/t + eta3(t).
    pub fn z_value(&self, t: &BigReal) -> Result<BigReal> {
        let s = self.evaluate(t, 0)?;
        let bits = s[2].prec();
        let mut v = Float::with_val(bits, self.params.d2) / t;
        v += &s[2];
        Ok(v)
    }

    /// Z'(t) = -d2/t^2 + eta3'(t).
    pub fn z_derivative(&self, t: &BigReal) -> Result<BigReal> {
        let s = self.evaluate(t, 1)?;
        let bits = s[2].prec();
        let mut v = Float::with_val(bits, self.params.d2) * -1i32;
        v /= Float::with_val(bits, t.square_ref());
        v += &s[2];
        Ok(v)
    }

    /// Componentwise integral of the solution from 0 to t, accumulated
    /// patch by patch (each patch integrated termwise, exactly).
    pub fn integral(&self, t: &BigReal) -> Result<State5<BigReal>> {
        if t.is_sign_negative() || *t > self.t_end {
            return Err(Error::Domain(format!(
                "integration to t = {t} outside coverage [0, {}]",
                self.t_end
            )));
        }
        let bits = self.patches[0].coeffs[0][0].prec();
        let mut acc: State5<BigReal> = std::array::from_fn(|_| Float::new(bits));
        for patch in &self.patches {
            let upper = if *t < patch.valid_to { t } else { &patch.valid_to };
            if *upper <= patch.center {
                break;
            }
            let part = patch.integral_from_center(upper);
            for i in 0..5 {
                acc[i] += &part[i];
            }
            if *t <= patch.valid_to {
                break;
            }
        }
        Ok(acc)
    }

    /// The conserved combination W^2(t) f2(t)^2 / (d2 - 1), where W^2 is the
    /// first-integral recovery and f2(t) = t exp((1/d2) int_0^t (eta3-eta2)).
    /// Equal to 1 along exact solutions; the deviation from 1 is the drift.
    pub fn conserved_value(&self, t: &BigReal) -> Result<BigReal> {
        let s = self.evaluate(t, 0)?;
        let w2 = crate::system::first_integral(&self.params, t, &s)?;
        let integ = self.integral(t)?;
        let bits = w2.prec();
        let g = Float::with_val(bits, &integ[2] - &integ[1]) / self.params.d2;
        let f2 = Float::with_val(bits, g.exp_ref()) * t;
        let mut v = Float::with_val(bits, f2.square_ref());
        v *= &w2;
        v /= self.params.d2 - 1;
        Ok(v)
    }

    /// Writes one JSON-lines record per patch:
    /// {"center": .., "rho": .., "radius": .., "coeffs": [[5 strings], ..]}.
    pub fn dump_jsonl<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let digits = self.d_target + 20;
        for patch in &self.patches {
            let coeffs: Vec<Vec<String>> = patch
                .coeffs
                .iter()
                .map(|s| s.iter().map(|c| to_decimal(c, digits)).collect())
                .collect();
            let rec = serde_json::json!({
                "center": to_decimal(&patch.center, digits),
                "rho": to_decimal(&patch.rho, digits),
                "radius": patch.radius,
                "coeffs": coeffs,
            });
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }

    /// Max |conserved - 1| over a uniform grid on [t0, t1].
    pub fn conserved_drift(&self, t0: f64, t1: f64, samples: usize) -> Result<BigReal> {
        let bits = self.patches[0].coeffs[0][0].prec();
        let mut worst = Float::new(64);
        for i in 0..samples {
            let t = t0 + (t1 - t0) * i as f64 / (samples.max(2) - 1) as f64;
            let tv = Float::with_val(bits, t);
            let mut c = self.conserved_value(&tv)?;
            c -= 1u32;
            c.abs_mut();
            let dev = Float::with_val(64, &c);
            if dev > worst {
                worst = dev;
            }
        }
        Ok(worst)
    }
}

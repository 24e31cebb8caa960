//! Complex log-gamma, Hurwitz and Riemann zeta values and their Taylor data.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C;

use crate::error::{MomError, Result};
use crate::series::uni;

const EM_SHIFT: usize = 30;
const EM_TERMS: usize = 20;

/// Bernoulli numbers B_0..=B_n (B_1 = −1/2).
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    out[0] = 1.0;
    if n >= 1 {
        out[1] = -0.5;
    }
    let mut fact = 2.0f64;
    for k in 1..=n / 2 {
        let m = 2 * k;
        if m > 2 {
            fact *= ((m - 1) * m) as f64;
        }
        let j0 = 200.0f64;
        let mf = m as f64;
        let head: f64 = (1..200).map(|j| (j as f64).powi(-(m as i32))).sum();
        let zeta = head + j0.powf(1.0 - mf) / (mf - 1.0) + 0.5 * j0.powf(-mf) + mf / 12.0 * j0.powf(-mf - 1.0)
            - mf * (mf + 1.0) * (mf + 2.0) / 720.0 * j0.powf(-mf - 3.0);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out[m] = sign * 2.0 * fact * zeta / (2.0 * PI).powi(m as i32);
    }
    out
}

fn even_bernoulli() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| bernoulli_numbers(2 * EM_TERMS + 2))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Principal-branch log-gamma for Re z > 0; other points use the reflection formula,
/// which is correct modulo 2πi.
pub fn ln_gamma(z: C) -> Result<C> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Err(MomError::Numeric(format!("gamma pole at {z}")));
    }
    if z.re < 0.5 {
        let s = (z * PI).sin();
        if s.norm() < 1e-300 {
            return Err(MomError::Numeric(format!("gamma pole at {z}")));
        }
        return Ok(C::new(PI.ln(), 0.0) - s.ln() - ln_gamma(C::new(1.0, 0.0) - z)?);
    }
    let mut shift = C::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let b = even_bernoulli();
    let mut series = C::new(0.0, 0.0);
    let w2 = w * w;
    let mut wpow = w;
    for k in 1..=10 {
        series += b[2 * k] / ((2 * k * (2 * k - 1)) as f64) / wpow;
        wpow *= w2;
    }
    Ok((w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift)
}

pub fn gamma(z: C) -> Result<C> {
    Ok(ln_gamma(z)?.exp())
}

/// Hurwitz zeta ζ(s, a) for integer s ≥ 2 and Re a > 0.
pub fn hurwitz_zeta(s: u32, a: C) -> Result<C> {
    if s < 2 {
        return Err(MomError::InvalidParameter("hurwitz_zeta needs s >= 2".into()));
    }
    if a.re <= 0.0 {
        return Err(MomError::InvalidParameter(format!("hurwitz_zeta needs Re a > 0, got {a}")));
    }
    let s_f = s as f64;
    let mut acc = C::new(0.0, 0.0);
    for n in 0..EM_SHIFT {
        acc += (a + n as f64).powf(-s_f);
    }
    let w = a + EM_SHIFT as f64;
    acc += w.powf(1.0 - s_f) / (s_f - 1.0) + 0.5 * w.powf(-s_f);
    let b = even_bernoulli();
    let mut rising = s_f;
    let mut wpow = w.powf(-s_f - 1.0);
    let winv2 = (w * w).inv();
    for k in 1..=EM_TERMS {
        acc += b[2 * k] / factorial(2 * k) * rising * wpow;
        rising *= (s_f + (2 * k - 1) as f64) * (s_f + (2 * k) as f64);
        wpow *= winv2;
    }
    Ok(acc)
}

/// Digamma ψ(a) for Re a > 0.
pub fn digamma(a: C) -> Result<C> {
    if a.re <= 0.0 {
        return Err(MomError::InvalidParameter(format!("digamma needs Re a > 0, got {a}")));
    }
    let mut acc = C::new(0.0, 0.0);
    let mut w = a;
    while w.norm() < 15.0 {
        acc -= w.inv();
        w += 1.0;
    }
    let b = even_bernoulli();
    let winv2 = (w * w).inv();
    let mut wpow = winv2;
    let mut tail = C::new(0.0, 0.0);
    for k in 1..=10 {
        tail += b[2 * k] / (2 * k) as f64 * wpow;
        wpow *= winv2;
    }
    Ok(acc + w.ln() - 0.5 / w - tail)
}

/// Taylor coefficients of ln Γ(w0 + h) in h, for Re w0 > 0.
pub fn ln_gamma_taylor(w0: C, cap: usize) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(cap + 1);
    out.push(ln_gamma(w0)?);
    if cap >= 1 {
        out.push(digamma(w0)?);
    }
    for j in 2..=cap {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * hurwitz_zeta(j as u32, w0)? / j as f64);
    }
    Ok(out)
}

/// Taylor coefficients of ζ(s0 + h) in h. At s0 = 1 the polar part 1/h is removed.
pub fn zeta_taylor(s0: C, cap: usize) -> Vec<C> {
    let len = cap + 1;
    let mut out = vec![C::new(0.0, 0.0); len];
    for n in 1..EM_SHIFT {
        let ln = (n as f64).ln();
        let base = C::new(n as f64, 0.0).powc(-s0);
        let mut term = base;
        for (j, o) in out.iter_mut().enumerate() {
            *o += term;
            term *= -ln / (j + 1) as f64;
        }
    }
    let m = EM_SHIFT as f64;
    let ln_m = m.ln();
    let decay = uni::exp_linear(-ln_m, len);
    let c = s0 - 1.0;
    let polar: Vec<C> = if c.norm() == 0.0 {
        (0..len).map(|j| C::new((-ln_m).powi(j as i32 + 1) / factorial(j + 1), 0.0)).collect()
    } else {
        let base = C::new(m, 0.0).powc(-c);
        let inv = uni::inv(&[c, C::new(1.0, 0.0)], len).expect("nonzero constant");
        uni::mul(&decay, &inv, len).into_iter().map(|x| x * base).collect()
    };
    for (o, p) in out.iter_mut().zip(&polar) {
        *o += p;
    }
    let half = C::new(m, 0.0).powc(-s0) * 0.5;
    for (o, d) in out.iter_mut().zip(&decay) {
        *o += half * d;
    }
    let b = even_bernoulli();
    let mut rising = vec![C::new(0.0, 0.0); len];
    rising[0] = C::new(1.0, 0.0);
    rising = uni::mul(&rising, &[s0, C::new(1.0, 0.0)], len);
    for k in 1..=EM_TERMS {
        let scale = b[2 * k] / factorial(2 * k) * C::new(m, 0.0).powc(-s0 - (2 * k - 1) as f64);
        let term = uni::mul(&rising, &decay, len);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += scale * t;
        }
        let i1 = (2 * k - 1) as f64;
        let i2 = (2 * k) as f64;
        rising = uni::mul(&rising, &[s0 + i1, C::new(1.0, 0.0)], len);
        rising = uni::mul(&rising, &[s0 + i2, C::new(1.0, 0.0)], len);
    }
    out
}

/// Riemann zeta at a complex point other than 1.
pub fn zeta(s: C) -> Result<C> {
    if (s - 1.0).norm() < 1e-14 {
        return Err(MomError::Numeric("zeta pole at s = 1".into()));
    }
    if s.re < -10.0 {
        // Functional equation.
        let one_minus = C::new(1.0, 0.0) - s;
        let chi = C::new(2.0, 0.0).powc(s) * C::new(PI, 0.0).powc(s - 1.0) * (s * PI / 2.0).sin() * gamma(one_minus)?;
        return Ok(chi * zeta(one_minus)?);
    }
    Ok(zeta_taylor(s, 0)[0])
}

/// Stieltjes constants γ_0..=γ_n, from ζ(1+h) = 1/h + Σ (−1)^j γ_j h^j / j!.
pub fn stieltjes_constants(n: usize) -> Vec<f64> {
    let t = zeta_taylor(C::new(1.0, 0.0), n);
    t.iter()
        .enumerate()
        .map(|(j, c)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(j) * c.re
        })
        .collect()
}

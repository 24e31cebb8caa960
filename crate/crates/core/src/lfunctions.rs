//! Quadratic Dirichlet and elliptic-twist families: arithmetic factors and moment predictions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{gamma_coefficient, gauss_legendre, GammaConfig};
use crate::autocorr::{assembly_prefactor, slot_residue_polynomial, AnalyticPrefactor, IntegrandSpec, ResidueOptions, ScalePolynomial, ShiftVector};
use crate::error::{invalid, MomError, Result};
use crate::params::{build_mu_assignment, combinatorial_coefficient, enumerate_configurations, Family, MomOrder};
use crate::series::{pair_table, uni, MultiSeries, ZetaKernel};
use crate::special::{ln_gamma, ln_gamma_taylor};

/// The Kronecker symbol (d/n).
pub fn kronecker_symbol(d: i64, n: u64) -> i32 {
    if n == 0 {
        return i32::from(d == 1 || d == -1);
    }
    let mut n = n;
    let mut result = 1;
    let twos = n.trailing_zeros();
    if twos > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= twos;
    }
    if n == 1 {
        return result;
    }
    // Jacobi symbol for odd n.
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(m % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 {
        result
    } else {
        0
    }
}

fn is_squarefree(mut n: u64) -> bool {
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p * p) {
            return false;
        }
        if n.is_multiple_of(p) {
            n /= p;
        }
        p += 1;
    }
    true
}

pub fn is_fundamental(d: i64) -> bool {
    if d == 1 || d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// A fundamental discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Discriminant(i64);

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if !is_fundamental(d) {
            return invalid(format!("{d} is not a fundamental discriminant"));
        }
        Ok(Discriminant(d))
    }

    pub fn value(self) -> i64 {
        self.0
    }

    /// The parity a of the gamma factor: 0 for d > 0, 1 for d < 0.
    pub fn parity(self) -> u8 {
        u8::from(self.0 < 0)
    }

    pub fn character(self, n: u64) -> i32 {
        kronecker_symbol(self.0, n)
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// All fundamental discriminants with |d| ≤ limit, in increasing order.
pub fn fundamental_discriminants(limit: u64) -> Vec<Discriminant> {
    let limit = limit as i64;
    (-limit..=limit).filter(|&d| is_fundamental(d)).map(Discriminant).collect()
}

fn near_pole(w: C) -> bool {
    w.re < 0.5 && (w.re - w.re.round()).abs() < 1e-12 && w.im.abs() < 1e-12
}

/// X(s, a) = π^{s−1/2} Γ((1+a−s)/2) / Γ((s+a)/2).
pub fn gamma_factor_x(s: C, a: u8) -> Result<C> {
    if a > 1 {
        return invalid("parity must be 0 or 1");
    }
    let a = a as f64;
    let num = (1.0 + a - s) / 2.0;
    let den = (s + a) / 2.0;
    if near_pole(num) {
        return Err(MomError::Numeric(format!("X(s, a) has a pole at s = {s}")));
    }
    if near_pole(den) {
        return Ok(C::new(0.0, 0.0));
    }
    Ok(((s - 0.5) * PI.ln() + ln_gamma(num)? - ln_gamma(den)?).exp())
}

/// Y(s) = (√M/2π)^{1−2s} Γ(3/2−s) / Γ(1/2+s).
pub fn gamma_factor_y(s: C, conductor: u64) -> Result<C> {
    if conductor == 0 {
        return invalid("conductor must be positive");
    }
    let num = 1.5 - s;
    let den = 0.5 + s;
    if near_pole(num) {
        return Err(MomError::Numeric(format!("Y(s) has a pole at s = {s}")));
    }
    if near_pole(den) {
        return Ok(C::new(0.0, 0.0));
    }
    let base = ((conductor as f64).sqrt() / (2.0 * PI)).ln();
    Ok(((1.0 - 2.0 * s) * base + ln_gamma(num)? - ln_gamma(den)?).exp())
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            (i * i..=n).step_by(i).for_each(|j| sieve[j] = false);
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// An elliptic curve y² = x³ + a4·x + a6 with its local data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticCurveData {
    pub a4: i64,
    pub a6: i64,
    pub conductor: u64,
    /// Sign of the functional equation.
    pub root_number: i8,
    /// a_p at primes dividing the conductor.
    pub bad_ap: BTreeMap<u64, i64>,
    pub ap_table: BTreeMap<u64, i64>,
}

impl EllipticCurveData {
    pub fn new(a4: i64, a6: i64, conductor: u64, root_number: i8, bad_ap: BTreeMap<u64, i64>) -> Result<Self> {
        if 4 * a4.pow(3) + 27 * a6.pow(2) == 0 {
            return invalid("singular curve");
        }
        if root_number.abs() != 1 {
            return invalid("root number must be ±1");
        }
        Ok(EllipticCurveData { a4, a6, conductor, root_number, bad_ap, ap_table: BTreeMap::new() })
    }

    /// y² = x³ − x, conductor 32.
    pub fn default_curve() -> Self {
        Self::new(-1, 0, 32, 1, BTreeMap::from([(2, 0)])).expect("valid curve")
    }

    pub fn discriminant(&self) -> i64 {
        -16 * (4 * self.a4.pow(3) + 27 * self.a6.pow(2))
    }

    pub fn is_good(&self, p: u64) -> bool {
        self.discriminant() % p as i64 != 0 && !self.conductor.is_multiple_of(p)
    }

    /// Fills the table for all good primes ≤ limit.
    pub fn compute_ap_table(&mut self, limit: u64) -> Result<()> {
        for p in primes_up_to(limit) {
            if self.is_good(p) && !self.ap_table.contains_key(&p) {
                let a = count_ap(self.a4, self.a6, p);
                self.ap_table.insert(p, a);
            }
        }
        self.check_hasse()
    }

    pub fn check_hasse(&self) -> Result<()> {
        for (&p, &a) in &self.ap_table {
            if (a * a) as u64 > 4 * p {
                return Err(MomError::Numeric(format!("a_{p} = {a} violates the Hasse bound")));
            }
        }
        Ok(())
    }

    /// a_p for good primes, from the table or by counting.
    pub fn ap(&self, p: u64) -> Result<i64> {
        ap_coefficient(self, p)
    }

    /// a_p entering the local factor, for good and bad primes alike.
    fn local_ap(&self, p: u64) -> Result<i64> {
        match self.bad_ap.get(&p) {
            Some(&a) => Ok(a),
            None => self.ap(p),
        }
    }

    /// 𝓛_p(x) = (1 − a_p x/√p + x²)^{−1}, or (1 − a_p x/√p)^{−1} at p | M.
    pub fn local_factor_inverse_coefficients(&self, p: u64) -> Result<(f64, f64)> {
        let a = self.local_ap(p)? as f64 / (p as f64).sqrt();
        let quad = if self.conductor.is_multiple_of(p) { 0.0 } else { 1.0 };
        Ok((a, quad))
    }

    pub fn write_ap_table(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (p, a) in &self.ap_table {
            out.push_str(&format!("{p} {a}\n"));
        }
        Ok(std::fs::write(path, out)?)
    }

    /// Merges a cache file of lines "p a_p" into the table.
    pub fn read_ap_table(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| s.and_then(|x| x.parse::<i64>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(p), Some(a), None) if p > 0 => {
                    self.ap_table.insert(p as u64, a);
                }
                _ => return Err(MomError::Io(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("{}:{}: malformed line", path.display(), lineno + 1),
                    ))),
            }
        }
        self.check_hasse()
    }

    /// Loads the cache if present, extends it to `limit` and writes it back.
    pub fn with_ap_cache(mut self, path: &Path, limit: u64) -> Result<Self> {
        if path.exists() {
            self.read_ap_table(path)?;
        }
        let before = self.ap_table.len();
        self.compute_ap_table(limit)?;
        if self.ap_table.len() != before || !path.exists() {
            self.write_ap_table(path)?;
        }
        Ok(self)
    }
}

/// −Σ_x ((x³ + a4 x + a6)/p) = p + 1 − #E(F_p).
fn count_ap(a4: i64, a6: i64, p: u64) -> i64 {
    let pi = p as i64;
    let mut chi = vec![-1i64; p as usize];
    chi[0] = 0;
    for y in 1..pi {
        chi[((y * y) % pi) as usize] = 1;
    }
    let mut sum = 0;
    for x in 0..pi {
        let r = ((x * x % pi) * x + a4.rem_euclid(pi) * x + a6.rem_euclid(pi)) % pi;
        sum += chi[r as usize];
    }
    -sum
}

/// a_p = p + 1 − #E(F_p) by naive point counting.
pub fn ap_coefficient(curve: &EllipticCurveData, p: u64) -> Result<i64> {
    if !is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    if !curve.is_good(p) {
        return Err(MomError::BadPrime(p));
    }
    Ok(match curve.ap_table.get(&p) {
        Some(&a) => a,
        None => count_ap(curve.a4, curve.a6, p),
    })
}

fn check_cutoff(cutoff: u64) -> Result<()> {
    if cutoff < 100 {
        return invalid("prime cutoff must be at least 100");
    }
    Ok(())
}

/// Partial products of an Euler product at the primes ≤ cutoff, checked for stability.
fn euler_scalar<F: FnMut(u64) -> Result<f64>>(cutoff: u64, mut local: F) -> Result<f64> {
    let mut value = 1.0;
    let mut half = None;
    for p in primes_up_to(cutoff) {
        if half.is_none() && p > cutoff / 2 {
            half = Some(value);
        }
        value *= local(p)?;
    }
    let half = half.unwrap_or(value);
    if !value.is_finite() || value <= 0.0 || (value - half).abs() > 0.05 * value {
        return Err(MomError::Convergence(format!("Euler product not settled: {half} at cutoff/2, {value} at cutoff")));
    }
    Ok(value)
}

/// A_{kβ}(0, …, 0) truncated at primes ≤ cutoff.
pub fn euler_product_a(order: MomOrder, cutoff: u64) -> Result<f64> {
    check_cutoff(cutoff)?;
    let v = 2 * order.k_beta() as i32;
    euler_scalar(cutoff, |p| {
        let p = p as f64;
        let pairs = (1.0 - 1.0 / p).powi(v * (v + 1) / 2);
        let h = 1.0 / p.sqrt();
        let mid = 0.5 * ((1.0 - h).powi(-v) + (1.0 + h).powi(-v)) + 1.0 / p;
        Ok(pairs * mid / (1.0 + 1.0 / p))
    })
}

/// B_{kβ}(0, …, 0) truncated at primes ≤ cutoff.
pub fn euler_product_b(order: MomOrder, curve: &EllipticCurveData, cutoff: u64) -> Result<f64> {
    check_cutoff(cutoff)?;
    let v = 2 * order.k_beta() as i32;
    euler_scalar(cutoff, |p| {
        let (a, quad) = curve.local_factor_inverse_coefficients(p)?;
        let p = p as f64;
        let x = 1.0 / p.sqrt();
        let lp = |x: f64| 1.0 / (1.0 - a * x + quad * x * x);
        let pairs = (1.0 - 1.0 / p).powi(v * (v - 1) / 2);
        let mid = 0.5 * (lp(x).powi(v) + lp(-x).powi(v)) + 1.0 / p;
        Ok(pairs * mid / (1.0 + 1.0 / p))
    })
}

/// Which arithmetic family a computation refers to.
#[derive(Clone, Debug, PartialEq)]
pub enum ArithmeticFamily {
    QuadraticDirichlet,
    EllipticTwists(EllipticCurveData),
}

impl ArithmeticFamily {
    pub fn symmetry(&self) -> Family {
        match self {
            ArithmeticFamily::QuadraticDirichlet => Family::Symplectic,
            ArithmeticFamily::EllipticTwists(_) => Family::EvenOrthogonal,
        }
    }
}

/// e^{−v·ln p} scaled by p^{−c}: Taylor coefficients of p^{−(c+v)}.
fn prime_power_series(p: u64, c: C, len: usize) -> Vec<C> {
    let lp = (p as f64).ln();
    let base = (-c * lp).exp();
    let mut out = Vec::with_capacity(len);
    let mut term = base;
    for j in 0..len {
        out.push(term);
        term *= -lp / (j + 1) as f64;
    }
    out
}

/// The local series of A_{kβ} (pairs m ≤ n, ±1 brackets) or B_{kβ} (pairs m < n, 𝓛_p brackets) at z = c + v.
fn euler_series(primes: &[u64], curve: Option<&EllipticCurveData>, centers: &[C], template: &MultiSeries) -> Result<MultiSeries> {
    let caps = template.caps().to_vec();
    let len = caps.iter().copied().max().unwrap_or(0) + 1;
    let pair_len = 2 * len - 1;
    let vars = centers.len();
    let one = C::new(1.0, 0.0);
    let mut acc = template.constant_like(one);
    for &p in primes {
        let pf = p as f64;
        let u: Vec<Vec<C>> = centers.iter().map(|&c| prime_power_series(p, c, len)).collect();
        let h = 1.0 / pf.sqrt();
        let bracket_factor = |sign: f64| -> Result<Vec<Vec<C>>> {
            u.iter()
                .map(|un| {
                    // 1 ∓ x, or 1 − a_p x/√p + x² for the twists, at x = ±p^{−1/2}u.
                    let (a, quad) = match curve {
                        Some(curve) => curve.local_factor_inverse_coefficients(p)?,
                        None => (1.0, 0.0),
                    };
                    let mut d: Vec<C> = un.iter().map(|&x| -x * (sign * h * a)).collect();
                    d[0] += 1.0;
                    let sq = uni::mul(un, un, len);
                    for (t, s) in d.iter_mut().zip(sq) {
                        *t += s * (quad * h * h);
                    }
                    uni::inv(&d, len)
                })
                .collect()
        };
        let plus = MultiSeries::outer_product(caps.clone(), template.max_total_degree(), &bracket_factor(1.0)?)?;
        let minus = MultiSeries::outer_product(caps.clone(), template.max_total_degree(), &bracket_factor(-1.0)?)?;
        let mid = plus.add(&minus)?.scale(C::new(0.5, 0.0)).add_constant(C::new(1.0 / pf, 0.0));
        acc = acc.mul(&mid.scale(C::new(1.0 / (1.0 + 1.0 / pf), 0.0)))?;
        let lp = pf.ln();
        for m in 0..vars {
            let start = if curve.is_some() { m + 1 } else { m };
            for n in start..vars {
                let w = (-(centers[m] + centers[n]) * lp).exp() / pf;
                if m == n {
                    let g: Vec<C> = prime_power_series(p, centers[m] * 2.0, len).iter().enumerate().map(|(j, &x)| {
                        let t = -x / pf * 2f64.powi(j as i32);
                        if j == 0 {
                            t + 1.0
                        } else {
                            t
                        }
                    }).collect();
                    acc.mul_univariate(m, &g);
                } else {
                    let mut s = vec![C::new(0.0, 0.0); pair_len];
                    let mut term = w;
                    for (j, x) in s.iter_mut().enumerate() {
                        *x = -term;
                        term *= -lp / (j + 1) as f64;
                    }
                    s[0] += 1.0;
                    acc.mul_bivariate(m, n, &pair_table(&s, &[one], caps[m], caps[n]));
                }
            }
        }
    }
    Ok(acc)
}

/// X(1/2 + c + v, a)^{−1/2} or Y(1/2 + c + v)^{−1/2} as a series in v, with the Euler product as joint factor.
struct ArithmeticPrefactor {
    family: ArithmeticFamily,
    parity: u8,
    primes: Arc<Vec<u64>>,
}

impl ArithmeticPrefactor {
    fn ln_gamma_factor(&self, c: C, cap: usize) -> Result<Vec<C>> {
        let len = cap + 1;
        let mut out = vec![C::new(0.0, 0.0); len];
        match &self.family {
            ArithmeticFamily::QuadraticDirichlet => {
                let a = self.parity as f64;
                let lpi = PI.ln();
                out[0] = c * lpi;
                if len > 1 {
                    out[1] = C::new(lpi, 0.0);
                }
                let num = uni::dilate(&ln_gamma_taylor((0.5 + a - c) / 2.0, cap)?, C::new(-0.5, 0.0));
                let den = uni::dilate(&ln_gamma_taylor((0.5 + a + c) / 2.0, cap)?, C::new(0.5, 0.0));
                for j in 0..len {
                    out[j] += num[j] - den[j];
                }
            }
            ArithmeticFamily::EllipticTwists(curve) => {
                let base = ((curve.conductor as f64).sqrt() / (2.0 * PI)).ln();
                out[0] = -2.0 * c * base;
                if len > 1 {
                    out[1] = C::new(-2.0 * base, 0.0);
                }
                let num = uni::dilate(&ln_gamma_taylor(1.0 - c, cap)?, C::new(-1.0, 0.0));
                let den = ln_gamma_taylor(1.0 + c, cap)?;
                for j in 0..len {
                    out[j] += num[j] - den[j];
                }
            }
        }
        Ok(out)
    }
}

impl AnalyticPrefactor for ArithmeticPrefactor {
    fn per_variable(&self, center: C, cap: usize) -> Result<Vec<C>> {
        let lg: Vec<C> = self.ln_gamma_factor(center, cap)?.iter().map(|&x| x * -0.5).collect();
        Ok(uni::exp(&lg, cap + 1))
    }

    fn joint(&self, centers: &[C], template: &MultiSeries) -> Result<Option<MultiSeries>> {
        let curve = match &self.family {
            ArithmeticFamily::QuadraticDirichlet => None,
            ArithmeticFamily::EllipticTwists(c) => Some(c),
        };
        Ok(Some(euler_series(&self.primes, curve, centers, template)?))
    }
}

/// Settings for the arithmetic integrands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticConfig {
    /// Primes used in the Euler-product series inside the residues.
    pub series_prime_cutoff: u64,
}

impl Default for ArithmeticConfig {
    fn default() -> Self {
        ArithmeticConfig { series_prime_cutoff: 1000 }
    }
}

fn arithmetic_integrand(family: &ArithmeticFamily, x: f64, parity: u8, cfg: ArithmeticConfig) -> Result<IntegrandSpec> {
    if parity > 1 {
        return invalid("parity must be 0 or 1");
    }
    if let ArithmeticFamily::EllipticTwists(curve) = family {
        for p in primes_up_to(cfg.series_prime_cutoff) {
            if curve.is_good(p) && !curve.ap_table.contains_key(&p) {
                return invalid(format!("a_{p} missing from the curve table"));
            }
        }
    }
    let (scale, diagonal) = match family {
        ArithmeticFamily::QuadraticDirichlet => (x / 2.0, true),
        ArithmeticFamily::EllipticTwists(_) => (x, false),
    };
    Ok(IntegrandSpec {
        kernel: Arc::new(ZetaKernel),
        prefactor: Some(Arc::new(ArithmeticPrefactor {
            family: family.clone(),
            parity,
            primes: Arc::new(primes_up_to(cfg.series_prime_cutoff)),
        })),
        exponent_scale: scale,
        include_diagonal: diagonal,
    })
}

/// The integrand of Q_{k,β}(x, θ) for characters of the given parity.
pub fn q_integrand(x: f64, parity: u8, cfg: ArithmeticConfig) -> Result<IntegrandSpec> {
    arithmetic_integrand(&ArithmeticFamily::QuadraticDirichlet, x, parity, cfg)
}

/// The integrand of Υ_{k,β}(x, θ).
pub fn upsilon_integrand(x: f64, curve: &EllipticCurveData, cfg: ArithmeticConfig) -> Result<IntegrandSpec> {
    arithmetic_integrand(&ArithmeticFamily::EllipticTwists(curve.clone()), x, 0, cfg)
}

/// Q or Υ at complex shifts, as exponential polynomials in the scale.
fn scale_polynomials(spec: &IntegrandSpec, order: MomOrder, theta: &[C]) -> Result<Vec<(f64, ScalePolynomial)>> {
    enumerate_configurations(order)
        .iter()
        .map(|l| {
            let c = combinatorial_coefficient(order, l).to_f64().unwrap_or(f64::INFINITY);
            let mu = build_mu_assignment(order, l)?;
            Ok((c * assembly_prefactor(order), slot_residue_polynomial(spec, order.beta, &mu, theta, ResidueOptions::default())?))
        })
        .collect()
}

fn eval_scale_polynomials(polys: &[(f64, ScalePolynomial)], s: f64) -> C {
    polys.iter().map(|(w, p)| p.eval(s) * *w).sum()
}

/// Q_{k,β}(x, θ).
pub fn q_poly(order: MomOrder, x: f64, theta: &ShiftVector, parity: u8, cfg: ArithmeticConfig) -> Result<C> {
    let spec = q_integrand(0.0, parity, cfg)?;
    let th: Vec<C> = theta.as_slice().iter().map(|&t| C::new(t, 0.0)).collect();
    Ok(eval_scale_polynomials(&scale_polynomials(&spec, order, &th)?, x / 2.0))
}

/// Υ_{k,β}(x, θ).
pub fn upsilon(order: MomOrder, x: f64, theta: &ShiftVector, curve: &EllipticCurveData, cfg: ArithmeticConfig) -> Result<C> {
    let spec = upsilon_integrand(0.0, curve, cfg)?;
    let th: Vec<C> = theta.as_slice().iter().map(|&t| C::new(t, 0.0)).collect();
    Ok(eval_scale_polynomials(&scale_polynomials(&spec, order, &th)?, x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub euler_product: f64,
    pub gamma: f64,
    pub exponent: u32,
    /// log D / 2 for the quadratic family, log D for elliptic twists.
    pub log_argument: f64,
}

/// Leading-order prediction for the moments of moments of a family at height D.
pub fn predicted_mom(family: &ArithmeticFamily, order: MomOrder, d: f64, prime_cutoff: u64, gamma_cfg: GammaConfig) -> Result<Prediction> {
    if d.is_nan() || d < 3.0 {
        return invalid("D must be at least 3");
    }
    let sym = family.symmetry();
    let gamma = gamma_coefficient(sym, order, gamma_cfg)?.value;
    let exponent = crate::params::leading_exponent(sym, order) as u32;
    let (euler_product, log_argument) = match family {
        ArithmeticFamily::QuadraticDirichlet => (euler_product_a(order, prime_cutoff)?, d.ln() / 2.0),
        ArithmeticFamily::EllipticTwists(curve) => (euler_product_b(order, curve, prime_cutoff)?, d.ln()),
    };
    Ok(Prediction { value: euler_product * gamma * log_argument.powi(exponent as i32), euler_product, gamma, exponent, log_argument })
}

/// The discriminants summed over for a family: all fundamental |d| ≤ D, or for twists
/// those coprime to the conductor with w_E χ_d(−M) = 1.
pub fn family_discriminants(family: &ArithmeticFamily, limit: u64) -> Vec<Discriminant> {
    let all = fundamental_discriminants(limit);
    match family {
        ArithmeticFamily::QuadraticDirichlet => all,
        ArithmeticFamily::EllipticTwists(curve) => {
            let m = curve.conductor as i64;
            all.into_iter()
                .filter(|d| gcd(d.value().unsigned_abs(), curve.conductor) == 1)
                .filter(|d| curve.root_number as i64 * chi_at_negative(d.value(), m) == 1)
                .collect()
        }
    }
}

/// χ_d(−M), with χ_d(−1) = sign d.
fn chi_at_negative(d: i64, m: i64) -> i64 {
    let sign = if d < 0 { -1 } else { 1 };
    sign * kronecker_symbol(d, m as u64) as i64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    /// Gauss–Legendre nodes for the θ-integral over [0, 2π].
    pub theta_nodes: usize,
    pub arithmetic: ArithmeticConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig { theta_nodes: 96, arithmetic: ArithmeticConfig { series_prime_cutoff: 200 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoResult {
    /// The average with the X_d^β (or Y_d^β) factor, as the family moment is written.
    pub value: f64,
    pub imaginary_part: f64,
    /// The average of Q (or Υ) alone, the analogue of Π|L|^{2β}.
    pub without_root_factor: f64,
    pub num_discriminants: usize,
}

/// Weighted complex θ-nodes for (1/2π)∫_0^{2π}; nodes near 0 are replaced by mean values on a circle.
fn theta_rule(nodes: usize) -> Vec<(C, C)> {
    let (x, w) = gauss_legendre(nodes);
    let mut out = Vec::new();
    let (radius, ring) = (0.25, 16);
    for (xi, wi) in x.iter().zip(&w) {
        let t = PI * (xi + 1.0);
        let weight = wi * PI / (2.0 * PI);
        if t < 0.1 {
            for j in 0..ring {
                let z = C::new(t, 0.0) + C::from_polar(radius, 2.0 * PI * j as f64 / ring as f64);
                out.push((z, C::new(weight / ring as f64, 0.0)));
            }
        } else {
            out.push((C::new(t, 0.0), C::new(weight, 0.0)));
        }
    }
    out
}

/// The smoothed moment of moments MoM_Q(D) or MoM_Υ(D) for k = 1, by direct summation over discriminants.
pub fn family_mom_demo(family: &ArithmeticFamily, order: MomOrder, d_max: u64, cfg: DemoConfig) -> Result<DemoResult> {
    if order.k != 1 {
        return Err(MomError::Unsupported("the discriminant-sum demonstration is implemented for k = 1".into()));
    }
    if d_max < 3 {
        return invalid("D must be at least 3");
    }
    let discs = family_discriminants(family, d_max);
    if discs.is_empty() {
        return invalid("no discriminants in range");
    }
    let beta = order.beta as i32;
    let rule = theta_rule(cfg.theta_nodes);
    // (weight, θ, X(1/2+iθ)^β or Y(1/2+iθ)^β, scale polynomials) for each parity.
    let mut tables = Vec::new();
    for parity in 0..2u8 {
        let spec = arithmetic_integrand(family, 0.0, parity, cfg.arithmetic)?;
        let mut rows = Vec::with_capacity(rule.len());
        for &(t, w) in &rule {
            let s = C::new(0.5, 0.0) + C::new(0.0, 1.0) * t;
            let g = match family {
                ArithmeticFamily::QuadraticDirichlet => gamma_factor_x(s, parity)?,
                ArithmeticFamily::EllipticTwists(curve) => gamma_factor_y(s, curve.conductor)?,
            };
            rows.push((w, t, g.powi(beta), scale_polynomials(&spec, order, &[t])?));
        }
        tables.push(rows);
        if matches!(family, ArithmeticFamily::EllipticTwists(_)) {
            tables.push(tables[0].clone());
            break;
        }
    }
    let i = C::new(0.0, 1.0);
    let mut total = C::new(0.0, 0.0);
    let mut bare = C::new(0.0, 0.0);
    for d in &discs {
        let ad = d.value().unsigned_abs() as f64;
        let x = ad.ln();
        let (scale, d_exp) = match family {
            ArithmeticFamily::QuadraticDirichlet => (x / 2.0, 1.0),
            ArithmeticFamily::EllipticTwists(_) => (x, 2.0),
        };
        let rows = &tables[d.parity() as usize];
        for (w, t, g, polys) in rows {
            // X_d(1/2+iθ) = |d|^{−iθ} X(1/2+iθ); Y_d(1/2+iθ) = |d|^{−2iθ} Y(1/2+iθ).
            let twist = (-i * *t * x * d_exp * beta as f64).exp();
            let q = *w * eval_scale_polynomials(polys, scale);
            total += twist * *g * q;
            bare += q;
        }
    }
    let n = discs.len() as f64;
    let z = total / n;
    Ok(DemoResult { value: z.re, imaginary_part: z.im, without_root_factor: bare.re / n, num_discriminants: discs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(5, 3), -1);
        assert_eq!(kronecker_symbol(-7, 1), 1);
        assert_eq!(kronecker_symbol(5, 5), 0);
        assert_eq!(kronecker_symbol(-4, 3), -1);
        assert_eq!(kronecker_symbol(8, 7), 1);
        assert_eq!(kronecker_symbol(5, 2), -1);
        assert_eq!(kronecker_symbol(-3, 2), -1);
    }

    #[test]
    fn fundamental_discriminant_examples() {
        let v: Vec<i64> = fundamental_discriminants(12).iter().map(|d| d.value()).collect();
        assert_eq!(v, vec![-11, -8, -7, -4, -3, 5, 8, 12]);
        let v: Vec<i64> = fundamental_discriminants(3).iter().map(|d| d.value()).collect();
        assert_eq!(v, vec![-3]);
        assert!(fundamental_discriminants(1).is_empty());
        assert!(Discriminant::new(1).is_err());
        assert!(Discriminant::new(9).is_err());
    }

    #[test]
    fn gamma_factor_examples() {
        for a in 0..2 {
            assert!((gamma_factor_x(C::new(0.5, 0.0), a).unwrap() - 1.0).norm() < 1e-14);
        }
        assert!((gamma_factor_y(C::new(0.5, 0.0), 32).unwrap() - 1.0).norm() < 1e-14);
        let s = C::new(0.3, 0.0);
        let prod = gamma_factor_x(s, 0).unwrap() * gamma_factor_x(1.0 - s, 0).unwrap();
        assert!((prod - 1.0).norm() < 1e-13);
        let t = C::new(0.5, 3.0);
        assert_relative_eq!(gamma_factor_x(t, 1).unwrap().norm(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn ap_examples() {
        let e = EllipticCurveData::default_curve();
        assert_eq!(ap_coefficient(&e, 5).unwrap(), -2);
        assert_eq!(ap_coefficient(&e, 3).unwrap(), 0);
        assert!(matches!(ap_coefficient(&e, 2), Err(MomError::BadPrime(2))));
        assert!(ap_coefficient(&e, 9).is_err());
        // p ≡ 3 mod 4 gives a_p = 0 for this curve.
        assert_eq!(ap_coefficient(&e, 103).unwrap(), 0);
    }

    #[test]
    fn euler_product_a_converges() {
        let o = MomOrder::new(1, 1).unwrap();
        let a3 = euler_product_a(o, 1000).unwrap();
        let a4 = euler_product_a(o, 10_000).unwrap();
        assert!((a3 - a4).abs() < 1e-3 * a4);
        assert!(euler_product_a(o, 50).is_err());
    }

    #[test]
    fn euler_series_constant_term_matches_scalar() {
        let o = MomOrder::new(1, 1).unwrap();
        let primes = primes_up_to(300);
        let template = MultiSeries::zero_box(vec![1, 1]).unwrap();
        let zero = [C::new(0.0, 0.0); 2];
        let s = euler_series(&primes, None, &zero, &template).unwrap();
        assert_relative_eq!(s.constant_term().re, euler_product_a(o, 300).unwrap(), max_relative = 1e-12);
        let mut e = EllipticCurveData::default_curve();
        e.compute_ap_table(300).unwrap();
        let s = euler_series(&primes, Some(&e), &zero, &template).unwrap();
        assert_relative_eq!(s.constant_term().re, euler_product_b(o, &e, 300).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn euler_series_derivative_matches_finite_difference() {
        let primes = primes_up_to(100);
        let template = MultiSeries::zero_box(vec![1, 1]).unwrap();
        let c = [C::new(0.0, 0.3), C::new(0.0, -0.8)];
        let s = euler_series(&primes, None, &c, &template).unwrap();
        let h = 1e-5;
        let f = |d: f64| euler_series(&primes, None, &[c[0] + d, c[1]], &template).unwrap().constant_term();
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!((s.taylor_coefficient(&[1, 0]) - fd).norm() < 1e-6 * fd.norm());
    }

    #[test]
    fn prefactor_series_matches_gamma_factors() {
        let c = C::new(0.0, 0.9);
        let h = 1e-5;
        let q = ArithmeticPrefactor { family: ArithmeticFamily::QuadraticDirichlet, parity: 1, primes: Arc::new(vec![]) };
        let f = |v: f64| gamma_factor_x(C::new(0.5 + v, 0.0) + c, 1).unwrap().powf(-0.5);
        let s = q.per_variable(c, 2).unwrap();
        assert!((s[0] - f(0.0)).norm() < 1e-12);
        assert!((s[1] - (f(h) - f(-h)) / (2.0 * h)).norm() < 1e-7);
        let e = EllipticCurveData::default_curve();
        let u = ArithmeticPrefactor { family: ArithmeticFamily::EllipticTwists(e), parity: 0, primes: Arc::new(vec![]) };
        let g = |v: f64| gamma_factor_y(C::new(0.5 + v, 0.0) + c, 32).unwrap().powf(-0.5);
        let s = u.per_variable(c, 2).unwrap();
        assert!((s[0] - g(0.0)).norm() < 1e-12);
        assert!((s[1] - (g(h) - g(-h)) / (2.0 * h)).norm() < 1e-7);
    }

    #[test]
    fn prediction_log_arguments() {
        let o = MomOrder::new(1, 1).unwrap();
        let p = predicted_mom(&ArithmeticFamily::QuadraticDirichlet, o, 1e4, 1000, GammaConfig::default()).unwrap();
        assert_eq!(p.exponent, 2);
        assert_relative_eq!(p.log_argument, 1e4f64.ln() / 2.0);
        assert_relative_eq!(p.value, p.euler_product * 0.5 * p.log_argument.powi(2));
        let mut e = EllipticCurveData::default_curve();
        e.compute_ap_table(1000).unwrap();
        let o2 = MomOrder::new(2, 1).unwrap();
        let p = predicted_mom(&ArithmeticFamily::EllipticTwists(e), o2, 1e4, 1000, GammaConfig::default()).unwrap();
        assert_eq!(p.exponent, 4);
        assert_relative_eq!(p.log_argument, 1e4f64.ln());
    }

    #[test]
    fn q_grows_linearly_at_fixed_shift() {
        // At a fixed shift only one power of log x survives; the square appears after the θ-average.
        let o = MomOrder::new(1, 1).unwrap();
        let cfg = ArithmeticConfig::default();
        for t in [0.5, 1.0, 2.0] {
            let th = ShiftVector::new(vec![t]).unwrap();
            let a = q_poly(o, 200.0, &th, 0, cfg).unwrap();
            let b = q_poly(o, 400.0, &th, 0, cfg).unwrap();
            assert!(a.im.abs() < 1e-10 * a.re.abs());
            assert_relative_eq!(b.re / a.re, 2.0, max_relative = 0.05);
        }
    }
}

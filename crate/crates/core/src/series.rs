//! Truncated multivariate Taylor series, pair kernels and Vandermonde bookkeeping.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C;

use crate::error::{invalid, MomError, Result};
use crate::params::MuAssignment;
use crate::special;

const MAX_DENSE_TERMS: usize = 1 << 24;

/// Univariate truncated power series stored as coefficient vectors.
pub mod uni {
    use super::C;
    use crate::error::{MomError, Result};

    pub fn mul(a: &[C], b: &[C], len: usize) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); len];
        for (i, &x) in a.iter().enumerate().take(len) {
            if x == C::new(0.0, 0.0) {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(len - i) {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn inv(a: &[C], len: usize) -> Result<Vec<C>> {
        let a0 = a.first().copied().unwrap_or_default();
        if a0.norm() == 0.0 {
            return Err(MomError::Numeric("series inverse with zero constant term".into()));
        }
        let mut out = vec![C::new(0.0, 0.0); len];
        if len == 0 {
            return Ok(out);
        }
        out[0] = a0.inv();
        for n in 1..len {
            let mut acc = C::new(0.0, 0.0);
            for k in 1..=n.min(a.len() - 1) {
                acc += a[k] * out[n - k];
            }
            out[n] = -acc * out[0];
        }
        Ok(out)
    }

    /// exp of a series with arbitrary constant term.
    pub fn exp(a: &[C], len: usize) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); len];
        if len == 0 {
            return out;
        }
        out[0] = a.first().copied().unwrap_or_default().exp();
        for n in 1..len {
            let mut acc = C::new(0.0, 0.0);
            for k in 1..=n.min(a.len().saturating_sub(1)) {
                acc += a[k] * out[n - k] * k as f64;
            }
            out[n] = acc / n as f64;
        }
        out
    }

    /// Principal log of a series with nonzero constant term.
    pub fn log(a: &[C], len: usize) -> Result<Vec<C>> {
        let a0 = a.first().copied().unwrap_or_default();
        if a0.norm() == 0.0 {
            return Err(MomError::Numeric("series log with zero constant term".into()));
        }
        let mut out = vec![C::new(0.0, 0.0); len];
        if len == 0 {
            return Ok(out);
        }
        out[0] = a0.ln();
        for n in 1..len {
            let mut acc = if n < a.len() { a[n] * n as f64 } else { C::new(0.0, 0.0) };
            for k in 1..n {
                if n - k < a.len() {
                    acc -= out[k] * a[n - k] * k as f64;
                }
            }
            out[n] = acc / (a0 * n as f64);
        }
        Ok(out)
    }

    /// Coefficients of e^{c h}.
    pub fn exp_linear(c: f64, len: usize) -> Vec<C> {
        let mut out = Vec::with_capacity(len);
        let mut term = C::new(1.0, 0.0);
        for j in 0..len {
            out.push(term);
            term *= c / (j + 1) as f64;
        }
        out
    }

    /// Coefficients of g(λ h) given those of g(h).
    pub fn dilate(a: &[C], lambda: C) -> Vec<C> {
        let mut p = C::new(1.0, 0.0);
        a.iter()
            .map(|&x| {
                let y = x * p;
                p *= lambda;
                y
            })
            .collect()
    }

    pub fn eval(a: &[C], h: C) -> C {
        a.iter().rev().fold(C::new(0.0, 0.0), |acc, &x| acc * h + x)
    }
}

#[derive(Debug, PartialEq)]
struct Layout {
    caps: Vec<usize>,
    max_total: usize,
    strides: Vec<usize>,
    exps: Vec<u16>,
    degrees: Vec<u32>,
}

impl Layout {
    fn new(caps: Vec<usize>, max_total: usize) -> Result<Arc<Self>> {
        let mut size: usize = 1;
        for &c in &caps {
            size = size
                .checked_mul(c + 1)
                .filter(|&s| s <= MAX_DENSE_TERMS)
                .ok_or_else(|| MomError::Unsupported(format!("series box {caps:?} exceeds {MAX_DENSE_TERMS} terms")))?;
        }
        let v = caps.len();
        let mut strides = vec![1; v];
        for i in (0..v.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (caps[i + 1] + 1);
        }
        let mut exps = vec![0u16; size * v];
        let mut degrees = vec![0u32; size];
        for idx in 0..size {
            let mut rem = idx;
            let mut deg = 0;
            for i in 0..v {
                let e = rem / strides[i];
                rem %= strides[i];
                exps[idx * v + i] = e as u16;
                deg += e as u32;
            }
            degrees[idx] = deg;
        }
        Ok(Arc::new(Layout { caps, max_total, strides, exps, degrees }))
    }

    fn size(&self) -> usize {
        self.degrees.len()
    }

    fn exps(&self, idx: usize) -> &[u16] {
        let v = self.caps.len();
        &self.exps[idx * v..(idx + 1) * v]
    }
}

/// Truncated multivariate power series with complex coefficients.
///
/// Every exponent is bounded per variable by `caps` and in total by `max_total_degree`.
#[derive(Clone)]
pub struct MultiSeries {
    layout: Arc<Layout>,
    coeffs: Vec<C>,
}

impl fmt::Debug for MultiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<_> = self.terms().collect();
        f.debug_struct("MultiSeries")
            .field("caps", &self.layout.caps)
            .field("max_total_degree", &self.layout.max_total)
            .field("terms", &terms)
            .finish()
    }
}

impl MultiSeries {
    /// Zero series truncated at total degree `cap` in `num_vars` variables.
    pub fn zero(num_vars: usize, cap: usize) -> Result<Self> {
        Self::zero_with_caps(vec![cap; num_vars], cap)
    }

    /// Zero series with per-variable caps and a total-degree cap.
    pub fn zero_with_caps(caps: Vec<usize>, max_total: usize) -> Result<Self> {
        let layout = Layout::new(caps, max_total)?;
        let coeffs = vec![C::new(0.0, 0.0); layout.size()];
        Ok(MultiSeries { layout, coeffs })
    }

    /// Zero series truncated to the box of per-variable caps only.
    pub fn zero_box(caps: Vec<usize>) -> Result<Self> {
        let total = caps.iter().sum();
        Self::zero_with_caps(caps, total)
    }

    fn zero_like(&self) -> Self {
        MultiSeries { layout: self.layout.clone(), coeffs: vec![C::new(0.0, 0.0); self.coeffs.len()] }
    }

    pub fn constant_like(&self, c: C) -> Self {
        let mut s = self.zero_like();
        s.coeffs[0] = c;
        s
    }

    pub fn variable_like(&self, var: usize) -> Self {
        let mut s = self.zero_like();
        if self.layout.caps[var] >= 1 && self.layout.max_total >= 1 {
            s.coeffs[self.layout.strides[var]] = C::new(1.0, 0.0);
        }
        s
    }

    /// Builds a series from (exponent, coefficient) terms; terms beyond the truncation are dropped.
    pub fn from_terms(num_vars: usize, cap: usize, terms: &[(Vec<usize>, C)]) -> Result<Self> {
        let mut s = Self::zero(num_vars, cap)?;
        for (e, c) in terms {
            if e.len() != num_vars {
                return invalid("exponent length does not match variable count");
            }
            if let Some(idx) = s.index_of(e) {
                s.coeffs[idx] += c;
            }
        }
        Ok(s)
    }

    pub fn num_vars(&self) -> usize {
        self.layout.caps.len()
    }

    pub fn max_total_degree(&self) -> usize {
        self.layout.max_total
    }

    pub fn caps(&self) -> &[usize] {
        &self.layout.caps
    }

    fn index_of(&self, e: &[usize]) -> Option<usize> {
        if e.len() != self.num_vars() || e.iter().sum::<usize>() > self.layout.max_total {
            return None;
        }
        let mut idx = 0;
        for (i, &x) in e.iter().enumerate() {
            if x > self.layout.caps[i] {
                return None;
            }
            idx += x * self.layout.strides[i];
        }
        Some(idx)
    }

    /// Nonzero terms as (exponent, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, C)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(i, &c)| {
            (self.layout.exps(i).iter().map(|&x| x as usize).collect(), c)
        })
    }

    /// Coefficient of the monomial with exponent `idx`; zero if it is not stored.
    pub fn taylor_coefficient(&self, idx: &[usize]) -> C {
        self.index_of(idx).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    pub fn constant_term(&self) -> C {
        self.coeffs[0]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout {
            Ok(())
        } else {
            invalid(format!(
                "series truncations differ: {:?}/{} vs {:?}/{}",
                self.layout.caps, self.layout.max_total, other.layout.caps, other.layout.max_total
            ))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(MultiSeries { layout: self.layout.clone(), coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(MultiSeries { layout: self.layout.clone(), coeffs })
    }

    pub fn scale(&self, c: C) -> Self {
        MultiSeries { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn add_constant(&self, c: C) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c;
        s
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let lay = &self.layout;
        let v = lay.caps.len();
        let mut out = vec![C::new(0.0, 0.0); self.coeffs.len()];
        let nz: Vec<usize> = (0..other.coeffs.len()).filter(|&j| other.coeffs[j].norm() != 0.0).collect();
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let ei = lay.exps(i);
            let di = lay.degrees[i];
            'inner: for &j in &nz {
                if (di + lay.degrees[j]) as usize > lay.max_total {
                    continue;
                }
                let ej = lay.exps(j);
                for t in 0..v {
                    if (ei[t] + ej[t]) as usize > lay.caps[t] {
                        continue 'inner;
                    }
                }
                out[i + j] += a * other.coeffs[j];
            }
        }
        Ok(MultiSeries { layout: lay.clone(), coeffs: out })
    }

    fn max_useful_power(&self) -> usize {
        self.layout.max_total.min(self.layout.caps.iter().sum())
    }

    /// Applies Σ_j w_j r^j where r is the series without its constant term.
    fn power_series_in_tail(&self, weights: &[C]) -> Result<Self> {
        let mut r = self.clone();
        r.coeffs[0] = C::new(0.0, 0.0);
        let mut out = self.constant_like(weights[0]);
        let mut p = self.constant_like(C::new(1.0, 0.0));
        for &w in &weights[1..] {
            p = p.mul(&r)?;
            for (o, x) in out.coeffs.iter_mut().zip(&p.coeffs) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn invert_unit(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(MomError::Numeric("invert_unit: zero constant term".into()));
        }
        let d = self.max_useful_power();
        let inv0 = a0.inv();
        let weights: Vec<C> = (0..=d).map(|j| inv0.powi(j as i32 + 1) * if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        self.power_series_in_tail(&weights)
    }

    pub fn exp(&self) -> Result<Self> {
        let d = self.max_useful_power();
        let e0 = self.coeffs[0].exp();
        let mut weights = Vec::with_capacity(d + 1);
        let mut f = 1.0;
        for j in 0..=d {
            if j > 0 {
                f *= j as f64;
            }
            weights.push(e0 / f);
        }
        self.power_series_in_tail(&weights)
    }

    /// Principal logarithm; requires a nonzero constant term.
    pub fn log(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(MomError::Numeric("log: zero constant term".into()));
        }
        let d = self.max_useful_power();
        let inv0 = a0.inv();
        let mut weights = vec![a0.ln()];
        for j in 1..=d {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            weights.push(sign * inv0.powi(j as i32) / j as f64);
        }
        self.power_series_in_tail(&weights)
    }

    /// Multiplies by a univariate series in variable `var`.
    pub fn mul_univariate(&mut self, var: usize, g: &[C]) {
        let lay = self.layout.clone();
        let stride = lay.strides[var];
        let cap = lay.caps[var];
        let mut out = vec![C::new(0.0, 0.0); self.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let e = lay.exps(i)[var] as usize;
            let room = (cap - e).min(lay.max_total - lay.degrees[i] as usize);
            for (j, &gj) in g.iter().enumerate().take(room + 1) {
                out[i + j * stride] += a * gj;
            }
        }
        self.coeffs = out;
    }

    /// Multiplies by a bivariate table `b[x][y]`, the coefficient of v_m^x v_n^y.
    pub fn mul_bivariate(&mut self, m: usize, n: usize, b: &[Vec<C>]) {
        let lay = self.layout.clone();
        let (sm, sn) = (lay.strides[m], lay.strides[n]);
        let (cm, cn) = (lay.caps[m], lay.caps[n]);
        let mut out = vec![C::new(0.0, 0.0); self.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let e = lay.exps(i);
            let room = lay.max_total - lay.degrees[i] as usize;
            let (em, en) = (e[m] as usize, e[n] as usize);
            for (x, row) in b.iter().enumerate().take(cm - em + 1) {
                if x > room {
                    break;
                }
                for (y, &bxy) in row.iter().enumerate().take((cn - en).min(room - x) + 1) {
                    if bxy.norm() != 0.0 {
                        out[i + x * sm + y * sn] += a * bxy;
                    }
                }
            }
        }
        self.coeffs = out;
    }

    /// Product of univariate series, one per variable.
    pub fn outer_product(caps: Vec<usize>, max_total: usize, factors: &[Vec<C>]) -> Result<Self> {
        if factors.len() != caps.len() {
            return invalid("one univariate factor per variable required");
        }
        let mut s = Self::zero_with_caps(caps, max_total)?;
        let lay = s.layout.clone();
        for idx in 0..s.coeffs.len() {
            if lay.degrees[idx] as usize > max_total {
                continue;
            }
            let mut c = C::new(1.0, 0.0);
            for (v, &e) in lay.exps(idx).iter().enumerate() {
                c *= factors[v].get(e as usize).copied().unwrap_or_default();
                if c.norm() == 0.0 {
                    break;
                }
            }
            s.coeffs[idx] = c;
        }
        Ok(s)
    }

    /// g(Σ_{i ∈ vars} v_i) for a univariate series g.
    pub fn compose_sum(&self, g: &[C], vars: &[usize]) -> Result<Self> {
        if vars.iter().any(|&v| v >= self.num_vars()) {
            return invalid("variable index out of range");
        }
        let mut s = self.constant_like(C::new(0.0, 0.0));
        let mut lin = s.zero_like();
        for &v in vars {
            lin = lin.add(&self.variable_like(v))?;
        }
        let mut p = self.constant_like(C::new(1.0, 0.0));
        let d = self.max_useful_power();
        for (j, &gj) in g.iter().enumerate().take(d + 1) {
            if j > 0 {
                p = p.mul(&lin)?;
            }
            for (o, x) in s.coeffs.iter_mut().zip(&p.coeffs) {
                *o += gj * x;
            }
        }
        Ok(s)
    }
}

/// Binomial coefficient as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Bivariate table of P(v_m + v_n)·Q(v_n − v_m) truncated at (cap_m, cap_n).
pub fn pair_table(p: &[C], q: &[C], cap_m: usize, cap_n: usize) -> Vec<Vec<C>> {
    let expand = |g: &[C], sign: f64| {
        let mut t = vec![vec![C::new(0.0, 0.0); cap_n + 1]; cap_m + 1];
        for (x, row) in t.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                if let Some(&c) = g.get(x + y) {
                    let s = if x % 2 == 1 { sign } else { 1.0 };
                    *cell = c * binomial(x + y, x) * s;
                }
            }
        }
        t
    };
    let ps = expand(p, 1.0);
    let qd = expand(q, -1.0);
    let mut out = vec![vec![C::new(0.0, 0.0); cap_n + 1]; cap_m + 1];
    for x1 in 0..=cap_m {
        for y1 in 0..=cap_n {
            let a = ps[x1][y1];
            if a.norm() == 0.0 {
                continue;
            }
            for x2 in 0..=cap_m - x1 {
                for y2 in 0..=cap_n - y1 {
                    out[x1 + x2][y1 + y2] += a * qd[x2][y2];
                }
            }
        }
    }
    out
}

/// A function with a simple pole of residue 1 at s = 0.
pub trait PairKernel: Send + Sync {
    /// Coefficient of s^{−1}.
    fn laurent_tail(&self) -> C {
        C::new(1.0, 0.0)
    }

    /// Taylor coefficients of the analytic factor g(s) = s·K(s), up to s^cap.
    fn pole_part(&self, cap: usize) -> Result<Vec<C>>;

    /// Taylor coefficients of K(c + s) about a point c away from the pole.
    fn taylor_at(&self, c: C, cap: usize) -> Result<Vec<C>>;

    fn evaluate(&self, s: C) -> Result<C>;

    fn name(&self) -> &'static str;
}

/// (1 − e^{−s})^{−1}.
#[derive(Clone, Copy, Debug, Default)]
pub struct RmtKernel;

impl PairKernel for RmtKernel {
    fn pole_part(&self, cap: usize) -> Result<Vec<C>> {
        // (1 − e^{−s})/s = Σ (−1)^n s^n/(n+1)!
        let mut f = 1.0;
        let base: Vec<C> = (0..=cap)
            .map(|n| {
                f *= (n + 1) as f64;
                C::new(if n % 2 == 0 { 1.0 } else { -1.0 } / f, 0.0)
            })
            .collect();
        uni::inv(&base, cap + 1)
    }

    fn taylor_at(&self, c: C, cap: usize) -> Result<Vec<C>> {
        let ec = (-c).exp();
        let mut denom: Vec<C> = uni::exp_linear(-1.0, cap + 1).into_iter().map(|x| -ec * x).collect();
        denom[0] += 1.0;
        uni::inv(&denom, cap + 1)
    }

    fn evaluate(&self, s: C) -> Result<C> {
        let d = C::new(1.0, 0.0) - (-s).exp();
        if d.norm() < 1e-300 {
            return Err(MomError::Numeric("RMT kernel evaluated at its pole".into()));
        }
        Ok(d.inv())
    }

    fn name(&self) -> &'static str {
        "rmt"
    }
}

/// ζ(1 + s).
#[derive(Clone, Copy, Debug, Default)]
pub struct ZetaKernel;

/// Cached Stieltjes constants γ_0..γ_39.
pub fn stieltjes_cache() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| special::stieltjes_constants(39))
}

impl PairKernel for ZetaKernel {
    fn pole_part(&self, cap: usize) -> Result<Vec<C>> {
        let g = stieltjes_cache();
        if cap > g.len() {
            return Err(MomError::Unsupported(format!("zeta kernel cap {cap} exceeds cached Stieltjes data")));
        }
        let mut out = vec![C::new(1.0, 0.0)];
        let mut f = 1.0;
        for n in 0..cap {
            if n > 0 {
                f *= n as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            out.push(C::new(sign * g[n] / f, 0.0));
        }
        Ok(out)
    }

    fn taylor_at(&self, c: C, cap: usize) -> Result<Vec<C>> {
        if c.norm() < 1e-8 {
            return Err(MomError::Numeric("zeta kernel expanded at its pole".into()));
        }
        Ok(special::zeta_taylor(c + 1.0, cap))
    }

    fn evaluate(&self, s: C) -> Result<C> {
        special::zeta(s + 1.0)
    }

    fn name(&self) -> &'static str {
        "zeta"
    }
}

/// g(s) = s·K(s) composed with s = Σ_{i ∈ vars} v_i.
pub fn kernel_pole_expansion(kernel: &dyn PairKernel, vars: &[usize], template: &MultiSeries) -> Result<MultiSeries> {
    if (kernel.laurent_tail() - 1.0).norm() > 1e-12 {
        return invalid("kernel must have unit residue at 0");
    }
    let g = kernel.pole_part(template.max_useful_power())?;
    template.compose_sum(&g, vars)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VandermondeKind {
    /// (z_m + z_n)²
    Sum,
    /// (z_n − z_m)²
    Difference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VandermondeFactor {
    pub m: usize,
    pub n: usize,
    pub kind: VandermondeKind,
    pub vanishing: bool,
}

/// Δ(z_1², …)² as Π_{m<n}(z_m+z_n)²(z_n−z_m)², each factor tagged by whether its μ-combination vanishes.
pub fn vandermonde_factored(mu: &MuAssignment) -> Vec<VandermondeFactor> {
    let v = mu.len();
    let mut out = Vec::with_capacity(v * (v - 1));
    for m in 0..v {
        for n in m + 1..v {
            out.push(VandermondeFactor { m, n, kind: VandermondeKind::Sum, vanishing: mu.sum_form(m, n).is_zero() });
            out.push(VandermondeFactor {
                m,
                n,
                kind: VandermondeKind::Difference,
                vanishing: mu.diff_form(m, n).is_zero(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_mu_assignment, ConfigurationVector, MomOrder};
    use approx::assert_relative_eq;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn ring_examples() {
        let x = MultiSeries::zero(1, 2).unwrap().variable_like(0);
        let one = x.constant_like(c(1.0));
        let p = one.add(&x).unwrap().mul(&one.sub(&x).unwrap()).unwrap();
        assert_eq!(p.taylor_coefficient(&[0]), c(1.0));
        assert_eq!(p.taylor_coefficient(&[1]), c(0.0));
        assert_eq!(p.taylor_coefficient(&[2]), c(-1.0));

        let s = MultiSeries::zero(2, 1).unwrap();
        let xy = s.variable_like(0).add(&s.variable_like(1)).unwrap();
        let sq = xy.mul(&xy).unwrap();
        assert_eq!(sq.terms().count(), 0);
    }

    #[test]
    fn inversion_examples() {
        let s = MultiSeries::zero(2, 2).unwrap();
        let a = s.constant_like(c(1.0)).add(&s.variable_like(0)).unwrap().add(&s.variable_like(1)).unwrap();
        let inv = a.invert_unit().unwrap();
        assert!(close(inv.taylor_coefficient(&[1, 0]), c(-1.0), 1e-15));
        assert!(close(inv.taylor_coefficient(&[1, 1]), c(2.0), 1e-15));
        assert!(close(inv.taylor_coefficient(&[0, 2]), c(1.0), 1e-15));
        let two = s.constant_like(c(2.0)).invert_unit().unwrap();
        assert_eq!(two.constant_term(), c(0.5));
        assert!(s.invert_unit().is_err());
    }

    #[test]
    fn residue_of_exponential_example() {
        // Coefficient of xy in (x + y)·e^{x+y} is 2.
        let s = MultiSeries::zero_box(vec![1, 1]).unwrap();
        let lin = s.variable_like(0).add(&s.variable_like(1)).unwrap();
        let prod = lin.mul(&lin.exp().unwrap()).unwrap();
        assert!(close(prod.taylor_coefficient(&[1, 1]), c(2.0), 1e-15));
        let x2y = MultiSeries::from_terms(2, 3, &[(vec![2, 1], c(1.0))]).unwrap();
        assert_eq!(x2y.taylor_coefficient(&[2, 1]), c(1.0));
        assert_eq!(x2y.taylor_coefficient(&[1, 1]), c(0.0));
    }

    #[test]
    fn rmt_kernel_pole_part() {
        let g = RmtKernel.pole_part(12).unwrap();
        assert!(close(g[0], c(1.0), 1e-15));
        assert!(close(g[1], c(0.5), 1e-15));
        assert!(close(g[2], c(1.0 / 12.0), 1e-14));
        assert!(g[3].norm() < 1e-15);
        for s in [0.1f64, 0.01] {
            let exact = s / (1.0 - (-s).exp());
            assert_relative_eq!(uni::eval(&g, c(s)).re, exact, max_relative = 1e-10);
        }
        let h = 1e-4;
        let numeric = (RmtKernel.evaluate(c(h)).unwrap() * h - 1.0) / h;
        assert!((numeric.re - 0.5).abs() < 1e-4);
    }

    #[test]
    fn zeta_kernel_pole_part() {
        let g = ZetaKernel.pole_part(4).unwrap();
        assert_relative_eq!(g[1].re, 0.577_215_664_9, max_relative = 1e-9);
        let s = C::new(0.05, 0.02);
        let direct = ZetaKernel.evaluate(s).unwrap() * s;
        assert!((uni::eval(&g, s) - direct).norm() < 1e-9);
    }

    #[test]
    fn kernel_taylor_at_matches_values() {
        let c0 = C::new(0.0, 1.3);
        for kernel in [&RmtKernel as &dyn PairKernel, &ZetaKernel] {
            let t = kernel.taylor_at(c0, 10).unwrap();
            let h = C::new(0.01, -0.02);
            let direct = kernel.evaluate(c0 + h).unwrap();
            assert!((uni::eval(&t, h) - direct).norm() < 1e-12, "{}", kernel.name());
        }
    }

    #[test]
    fn pole_expansion_composes() {
        let tmpl = MultiSeries::zero(2, 4).unwrap();
        let e = kernel_pole_expansion(&RmtKernel, &[0, 1], &tmpl).unwrap();
        assert!(close(e.constant_term(), c(1.0), 1e-15));
        assert!(close(e.taylor_coefficient(&[1, 0]), c(0.5), 1e-15));
        assert!(close(e.taylor_coefficient(&[1, 1]), c(1.0 / 6.0), 1e-14));
    }

    #[test]
    fn pair_table_matches_general_product() {
        let tmpl = MultiSeries::zero_box(vec![3, 2]).unwrap();
        let p = vec![c(1.0), c(0.3), c(-0.2), c(0.7), c(0.1), c(0.05)];
        let q = vec![c(2.0), c(-1.0), c(0.4), c(0.0), c(0.2), c(-0.3)];
        let ps = tmpl.compose_sum(&p, &[0, 1]).unwrap();
        let d = tmpl.variable_like(1).sub(&tmpl.variable_like(0)).unwrap();
        let mut qd = tmpl.constant_like(c(0.0));
        let mut pw = tmpl.constant_like(c(1.0));
        for &qj in &q {
            qd = qd.add(&pw.scale(qj)).unwrap();
            pw = pw.mul(&d).unwrap();
        }
        let want = ps.mul(&qd).unwrap();
        let mut got = tmpl.constant_like(c(1.0));
        got.mul_bivariate(0, 1, &pair_table(&p, &q, 3, 2));
        for (e, w) in want.terms() {
            assert!(close(got.taylor_coefficient(&e), w, 1e-13));
        }
    }

    #[test]
    fn log_exp_round_trip() {
        let s = MultiSeries::zero(2, 5).unwrap();
        let a = s
            .constant_like(C::new(1.5, 0.2))
            .add(&s.variable_like(0).scale(c(0.3)))
            .unwrap()
            .add(&s.variable_like(1).scale(C::new(0.0, -0.4)))
            .unwrap();
        let back = a.log().unwrap().exp().unwrap();
        for (e, w) in a.terms() {
            assert!(close(back.taylor_coefficient(&e), w, 1e-13));
        }
        assert!(back.sub(&a).unwrap().terms().all(|(_, x)| x.norm() < 1e-13));
    }

    #[test]
    fn vandermonde_tags() {
        let o = MomOrder::new(1, 1).unwrap();
        let mu = build_mu_assignment(o, &ConfigurationVector::new(o, vec![1]).unwrap()).unwrap();
        let f = vandermonde_factored(&mu);
        assert!(f.iter().any(|x| x.kind == VandermondeKind::Sum && x.vanishing));
        assert!(f.iter().any(|x| x.kind == VandermondeKind::Difference && !x.vanishing));
        let o = MomOrder::new(2, 1).unwrap();
        let mu = build_mu_assignment(o, &ConfigurationVector::new(o, vec![1, 1]).unwrap()).unwrap();
        let f = vandermonde_factored(&mu);
        let sums = f.iter().filter(|x| x.kind == VandermondeKind::Sum && x.vanishing).count();
        let diffs = f.iter().filter(|x| x.kind == VandermondeKind::Difference && x.vanishing).count();
        assert_eq!((sums, diffs), (2, 0));
    }
}

//! Leading-order coefficients of the moments of moments as N → ∞.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MomError, Result};
use crate::params::{
    build_mu_assignment, combinatorial_coefficient, enumerate_configurations, pairing_sets, ConfigurationVector,
    Family, MomOrder, MuAssignment, ThetaForm,
};
use crate::series::{pair_table, uni, MultiSeries};

/// Contour variables on a common circle |v_n| = r.
#[derive(Clone, Debug, PartialEq)]
pub struct VPoint {
    v: Vec<C>,
    radius: f64,
}

impl VPoint {
    pub fn new(v: Vec<C>) -> Result<Self> {
        let radius = v.first().map(|z| z.norm()).unwrap_or(0.0);
        if radius <= 0.0 || radius > 0.5 {
            return invalid("circle radius must lie in (0, 1/2]");
        }
        if v.iter().any(|z| (z.norm() - radius).abs() > 1e-12 * radius) {
            return invalid("all points must share one modulus");
        }
        Ok(VPoint { v, radius })
    }

    pub fn on_circle(radius: f64, angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&a| C::from_polar(radius, a)).collect())
    }

    pub fn values(&self) -> &[C] {
        &self.v
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Π_A (v_n + v_m) · Π_B (v_n − v_m)² · e^{Σ v_n} / Π v_n^{2β}.
pub fn f_factor(v: &VPoint, mu: &MuAssignment, beta: usize) -> Result<C> {
    let v = v.values();
    if v.len() != mu.len() {
        return invalid("point dimension does not match the assignment");
    }
    let sets = pairing_sets(Family::EvenOrthogonal, mu);
    let mut f: C = v.iter().sum::<C>().exp();
    for &(m, n) in &sets.a {
        f *= v[n] + v[m];
    }
    for &(m, n) in &sets.b {
        f *= (v[n] - v[m]).powi(2);
    }
    for z in v {
        f /= z.powi(2 * beta as i32);
    }
    Ok(f)
}

/// Linear forms L_mn(t) of the non-cancelled pairs.
#[derive(Clone, Debug)]
struct PairForms {
    diagonal: Vec<(usize, ThetaForm)>,
    off: Vec<(usize, usize, ThetaForm, bool)>,
    a: Vec<(usize, usize)>,
}

fn pair_forms(family: Family, mu: &MuAssignment) -> PairForms {
    let sets = pairing_sets(family, mu);
    let b: std::collections::BTreeSet<_> = sets.b.iter().copied().collect();
    let mut diagonal = Vec::new();
    let mut off = Vec::new();
    for &(m, n) in &sets.t {
        let form = mu.sum_form(m, n);
        if m == n {
            diagonal.push((m, form));
        } else {
            off.push((m, n, form, b.contains(&(m, n))));
        }
    }
    PairForms { diagonal, off, a: sets.a.clone() }
}

/// The integrand of Ψ (or Ω) without regularisation.
fn psi_integrand(v: &[C], forms: &PairForms, omega: &[i64], t: &[f64]) -> C {
    let i = C::new(0.0, 1.0);
    let phase: f64 = omega.iter().zip(t).map(|(&w, &x)| w as f64 * x).sum();
    let mut den = C::new(1.0, 0.0);
    for (m, form) in &forms.diagonal {
        den *= v[*m] * 2.0 + i * form.eval(t);
    }
    for (m, n, form, _) in &forms.off {
        den *= v[*m] + v[*n] + i * form.eval(t);
    }
    C::from_polar(1.0, phase) / den
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

struct Adaptive {
    x: Vec<f64>,
    w: Vec<f64>,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: usize,
}

impl Adaptive {
    fn new(nodes: usize, rel_tol: f64, abs_tol: f64) -> Self {
        let (x, w) = gauss_legendre(nodes);
        Adaptive { x, w, rel_tol, abs_tol, max_depth: 40 }
    }

    fn rule<F: FnMut(f64) -> Result<C>>(&self, f: &mut F, a: f64, b: f64) -> Result<C> {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut acc = C::new(0.0, 0.0);
        for (x, w) in self.x.iter().zip(&self.w) {
            acc += f(c + h * x)? * *w;
        }
        Ok(acc * h)
    }

    fn panel<F: FnMut(f64) -> Result<C>>(&self, f: &mut F, a: f64, b: f64, whole: C, depth: usize) -> Result<C> {
        let m = 0.5 * (a + b);
        let left = self.rule(f, a, m)?;
        let right = self.rule(f, m, b)?;
        let both = left + right;
        let err = (both - whole).norm();
        if err <= self.abs_tol.max(self.rel_tol * both.norm()) {
            return Ok(both);
        }
        if depth >= self.max_depth {
            return Err(MomError::Convergence(format!("adaptive quadrature failed on [{a}, {b}]")));
        }
        Ok(self.panel(f, a, m, left, depth + 1)? + self.panel(f, m, b, right, depth + 1)?)
    }

    /// ∫_0^T over geometric then unit-length panels.
    fn half_line<F: FnMut(f64) -> Result<C>>(&self, f: &mut F, t_max: f64) -> Result<C> {
        let mut edges = vec![0.0];
        let mut e = 1.0 / 64.0;
        while e < 1.0 {
            edges.push(e);
            e *= 2.0;
        }
        let mut x = 1.0;
        while x < t_max {
            edges.push(x);
            x += 2.0;
        }
        edges.push(t_max);
        let mut acc = C::new(0.0, 0.0);
        for w in edges.windows(2) {
            let whole = self.rule(f, w[0], w[1])?;
            acc += self.panel(f, w[0], w[1], whole, 0)?;
        }
        Ok(acc)
    }
}

/// Regularisation and extrapolation settings for the t-integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryQuadratureConfig {
    pub regularization_eps: Vec<f64>,
    /// Gauss–Legendre nodes per panel.
    pub t_nodes: usize,
    /// Upper limit of each t-integral is `cutoff / ε`.
    pub t_cutoff: f64,
    pub rel_tol: f64,
    /// Agreement required between the full and one-level-shorter extrapolations.
    pub extrapolation_tol: f64,
}

impl Default for OscillatoryQuadratureConfig {
    fn default() -> Self {
        OscillatoryQuadratureConfig {
            regularization_eps: (0..9).map(|j| 0.1 / 2f64.powi(j)).collect(),
            t_nodes: 16,
            t_cutoff: 40.0,
            rel_tol: 1e-13,
            extrapolation_tol: 1e-6,
        }
    }
}

impl OscillatoryQuadratureConfig {
    /// A cheaper setting for k ≥ 2, accurate to a few digits.
    pub fn coarse() -> Self {
        OscillatoryQuadratureConfig {
            regularization_eps: vec![0.4, 0.2, 0.1, 0.05],
            t_nodes: 16,
            t_cutoff: 30.0,
            rel_tol: 1e-7,
            extrapolation_tol: 1e-2,
        }
    }

    pub fn with_eps(eps: Vec<f64>) -> Self {
        OscillatoryQuadratureConfig { regularization_eps: eps, ..Default::default() }
    }
}

fn richardson_basis(eps: f64, len: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut p = 1;
    while out.len() < len {
        let e = eps.powi(p);
        out.push(e * eps.ln());
        if out.len() < len {
            out.push(e);
        }
        p += 1;
    }
    out
}

/// Extrapolates I(ε) → ε = 0 assuming I(ε) = I_0 + Σ_p ε^p (a_p log ε + b_p).
pub fn extrapolate_to_zero(eps: &[f64], values: &[C]) -> Result<C> {
    let n = eps.len();
    if n == 0 || n != values.len() {
        return invalid("extrapolation needs matching, nonempty sequences");
    }
    let a = DMatrix::from_fn(n, n, |r, c| C::new(richardson_basis(eps[r], n)[c], 0.0));
    let b = DVector::from_column_slice(values);
    let sol = a.lu().solve(&b).ok_or_else(|| MomError::Numeric("singular extrapolation system".into()))?;
    Ok(sol[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiResult {
    pub value: C,
    /// Estimate with the smallest ε dropped.
    pub previous: C,
}

fn check_convergent(family: Family, order: MomOrder, l: &ConfigurationVector, forms: &PairForms) -> Result<()> {
    if order.is_special_for(family) {
        return Err(MomError::Unsupported(format!("({family}, k=1, beta=1) is excluded from the asymptotic formula")));
    }
    let omega = l.frequencies(order);
    for (m, &w) in omega.iter().enumerate() {
        let touched = forms.diagonal.iter().any(|(_, f)| f.0[m] != 0) || forms.off.iter().any(|(_, _, f, _)| f.0[m] != 0);
        if w == 0 && !touched {
            return Err(MomError::Convergence(format!("configuration {l}: integral over t_{} is divergent as stated", m + 1)));
        }
    }
    Ok(())
}

fn nested_integral(
    quad: &Adaptive,
    v: &[C],
    forms: &PairForms,
    omega: &[i64],
    eps: f64,
    t_max: f64,
    prefix: &mut Vec<f64>,
) -> Result<C> {
    let k = omega.len();
    let mut f = |x: f64| -> Result<C> {
        prefix.push(x);
        let r = if prefix.len() == k {
            Ok(psi_integrand(v, forms, omega, prefix) * (-eps * prefix.iter().sum::<f64>()).exp())
        } else {
            nested_integral(quad, v, forms, omega, eps, t_max, &mut prefix.clone())
        };
        prefix.pop();
        r
    };
    quad.half_line(&mut f, t_max)
}

/// Ψ(v; l) (Symplectic) or Ω(v; l) (EvenOrthogonal) by ε-regularisation and extrapolation.
pub fn psi_integral(v: &VPoint, order: MomOrder, l: &ConfigurationVector, family: Family, cfg: &OscillatoryQuadratureConfig) -> Result<PsiResult> {
    let mu = build_mu_assignment(order, l)?;
    if v.values().len() != mu.len() {
        return invalid("point dimension does not match 2k*beta");
    }
    let forms = pair_forms(family, &mu);
    check_convergent(family, order, l, &forms)?;
    if cfg.regularization_eps.len() < 3 {
        return invalid("at least three regularisation levels are required");
    }
    if cfg.t_nodes < 2 {
        return invalid("at least two quadrature nodes per panel are required");
    }
    let omega = l.frequencies(order);
    let mut values = Vec::with_capacity(cfg.regularization_eps.len());
    for &eps in &cfg.regularization_eps {
        let quad = Adaptive::new(cfg.t_nodes, cfg.rel_tol, 1e-15);
        values.push(nested_integral(&quad, v.values(), &forms, &omega, eps, cfg.t_cutoff / eps, &mut Vec::new())?);
    }
    let n = values.len();
    let value = extrapolate_to_zero(&cfg.regularization_eps, &values)?;
    let previous = extrapolate_to_zero(&cfg.regularization_eps[..n - 1], &values[..n - 1])?;
    if (value - previous).norm() > cfg.extrapolation_tol * value.norm().max(1e-300) {
        return Err(MomError::Convergence(format!("extrapolation unstable: {value} vs {previous}")));
    }
    Ok(PsiResult { value, previous })
}

/// Ω(v; l) for the orthogonal family.
pub fn omega_integral(v: &VPoint, order: MomOrder, l: &ConfigurationVector, cfg: &OscillatoryQuadratureConfig) -> Result<PsiResult> {
    psi_integral(v, order, l, Family::EvenOrthogonal, cfg)
}

/// R_l(t): the v-residue of f(v; l) / Π_T (v_m + v_n + i L_mn(t)) at complex t.
pub fn r_function(family: Family, order: MomOrder, l: &ConfigurationVector, t: &[C]) -> Result<C> {
    let mu = build_mu_assignment(order, l)?;
    RFunction::new(family, order, &mu).eval(t)
}

struct RFunction {
    beta: usize,
    vars: usize,
    forms: PairForms,
}

impl RFunction {
    fn new(family: Family, order: MomOrder, mu: &MuAssignment) -> Self {
        RFunction { beta: order.beta, vars: mu.len(), forms: pair_forms(family, mu) }
    }

    fn eval(&self, t: &[C]) -> Result<C> {
        let i = C::new(0.0, 1.0);
        let cap = 2 * self.beta - 1;
        let len = cap + 1;
        let pair_len = 2 * cap + 1;
        let mut factors = vec![uni::exp_linear(1.0, len); self.vars];
        for (n, form) in &self.forms.diagonal {
            let d = uni::inv(&[i * form.eval_complex(t), C::new(2.0, 0.0)], len)?;
            factors[*n] = uni::mul(&factors[*n], &d, len);
        }
        let mut acc = MultiSeries::outer_product(vec![cap; self.vars], self.vars * cap, &factors)?;
        let one = [C::new(1.0, 0.0)];
        for &(m, n) in &self.forms.a {
            acc.mul_bivariate(m, n, &pair_table(&[C::new(0.0, 0.0), C::new(1.0, 0.0)], &one, cap, cap));
        }
        let square = [C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)];
        for (m, n, form, is_b) in &self.forms.off {
            let p = uni::inv(&[i * form.eval_complex(t), C::new(1.0, 0.0)], pair_len)?;
            let q: &[C] = if *is_b { &square } else { &one };
            acc.mul_bivariate(*m, *n, &pair_table(&p, q, cap, cap));
        }
        Ok(acc.taylor_coefficient(&vec![cap; self.vars]))
    }
}

/// Σ_l w_l e^{iω·t} R_l(t), the integrand of the leading coefficient over t ∈ ℝ^k.
pub fn phi_integrand(family: Family, order: MomOrder, t: &[f64]) -> Result<C> {
    let tc: Vec<C> = t.iter().map(|&x| C::new(x, 0.0)).collect();
    let mut total = C::new(0.0, 0.0);
    for l in enumerate_configurations(order) {
        let w = config_weight(order, &l);
        let omega = l.frequencies(order);
        let phase: f64 = omega.iter().zip(t).map(|(&a, &b)| a as f64 * b).sum();
        total += r_function(family, order, &l, &tc)? * C::from_polar(w, phase);
    }
    Ok(total)
}

/// (−1)^{kβ + Σl} c_l / (2kβ)!
fn config_weight(order: MomOrder, l: &ConfigurationVector) -> f64 {
    let sign = if (order.k_beta() + l.sum()).is_multiple_of(2) { 1.0 } else { -1.0 };
    let c = combinatorial_coefficient(order, l).to_f64().unwrap_or(f64::INFINITY);
    let fact: f64 = (1..=2 * order.k_beta()).map(|x| x as f64).product();
    sign * c / fact
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    /// Trapezoid nodes on each residue circle.
    pub nodes: usize,
    /// Radius of the outermost residue circle; inner circles shrink by a factor of 3 per level.
    pub radius: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { nodes: 32, radius: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    /// The coefficient of the leading power of N.
    pub value: f64,
    /// The same sum normalised as the half-line formula is written, value / 2^{k+1}.
    pub literal: f64,
    pub imaginary_part: f64,
}

/// Pole centre for a closing choice: `None` is t_j = 0, `Some((i, c))` is t_j = c·t_i.
type Choice = Option<(usize, i64)>;

fn nested_residue<F: FnMut(&[C]) -> Result<C>>(choices: &[Choice], cfg: GammaConfig, f: &mut F) -> Result<C> {
    let k = choices.len();
    let m = cfg.nodes;
    let roots: Vec<C> = (0..m).map(|j| C::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
    let mut idx = vec![0usize; k];
    let mut t = vec![C::new(0.0, 0.0); k];
    let mut acc = C::new(0.0, 0.0);
    loop {
        let mut weight = C::new(1.0, 0.0);
        let mut r = cfg.radius;
        for j in 0..k {
            let center = match choices[j] {
                None => C::new(0.0, 0.0),
                Some((i, c)) => t[i] * c as f64,
            };
            let d = roots[idx[j]] * r;
            t[j] = center + d;
            weight *= d / m as f64;
            r /= 3.0;
        }
        acc += f(&t)? * weight;
        let mut d = 0;
        loop {
            if d == k {
                return Ok(acc);
            }
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// ∫_{ℝ^k} e^{iω·t} R(t) dt with t_j on Im t_j = η_j, η_1 > … > η_k > 0, by closing each contour in turn.
fn closed_contour_integral<F: FnMut(&[C]) -> Result<C>>(omega: &[i64], cfg: GammaConfig, f: &mut F) -> Result<C> {
    let k = omega.len();
    let mut total = C::new(0.0, 0.0);
    let mut stack: Vec<(usize, Vec<i64>, Vec<Choice>, C)> = vec![(k, omega.to_vec(), vec![None; k], C::new(1.0, 0.0))];
    let two_pi_i = C::new(0.0, 2.0 * PI);
    while let Some((level, om, choices, factor)) = stack.pop() {
        if level == 0 {
            total += factor * nested_residue(&choices, cfg, f)?;
            continue;
        }
        let j = level - 1;
        let w = om[j];
        let mut options: Vec<(Choice, bool)> = vec![(None, false)];
        for i in 0..j {
            options.push((Some((i, 1)), true));
            options.push((Some((i, -1)), false));
        }
        for (choice, above) in options {
            let weight = match (w.signum(), above) {
                (1, true) => two_pi_i,
                (-1, false) => -two_pi_i,
                (0, true) => two_pi_i * 0.5,
                (0, false) => -two_pi_i * 0.5,
                _ => continue,
            };
            let mut om2 = om.clone();
            if let Some((i, c)) = choice {
                om2[i] += c * w;
            }
            let mut ch = choices.clone();
            ch[j] = choice;
            stack.push((j, om2, ch, factor * weight));
        }
    }
    Ok(total)
}

/// γ_Sp(k, β) or γ_SO(k, β).
pub fn gamma_coefficient(family: Family, order: MomOrder, cfg: GammaConfig) -> Result<GammaResult> {
    if order.is_special_for(family) {
        return Err(MomError::Unsupported(format!("({family}, k=1, beta=1) is excluded from the asymptotic formula")));
    }
    if cfg.nodes < 4 || cfg.radius <= 0.0 {
        return invalid("gamma quadrature needs at least 4 nodes and a positive radius");
    }
    let k = order.k;
    let mut total = C::new(0.0, 0.0);
    for l in enumerate_configurations(order) {
        let w = config_weight(order, &l);
        let mu = build_mu_assignment(order, &l)?;
        let r = RFunction::new(family, order, &mu);
        let omega = l.frequencies(order);
        let mut f = |t: &[C]| -> Result<C> {
            let phase: C = omega.iter().zip(t).map(|(&a, &b)| b * a as f64).sum();
            Ok((phase * C::new(0.0, 1.0)).exp() * r.eval(t)?)
        };
        total += closed_contour_integral(&omega, cfg, &mut f)? * w;
    }
    let z = total * 2.0 / (2.0 * PI).powi(k as i32);
    if z.im.abs() > 1e-8 * z.norm() {
        return Err(MomError::Numeric(format!("leading coefficient has imaginary part {}", z.im)));
    }
    if z.re <= 0.0 {
        return Err(MomError::Numeric(format!("leading coefficient {} is not positive", z.re)));
    }
    Ok(GammaResult { value: z.re, literal: z.re / 2f64.powi(k as i32 + 1), imaginary_part: z.im })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingFit {
    pub leading: f64,
    /// Largest relative misfit of the remaining points, when more than degree + 1 are given.
    pub residual: Option<f64>,
}

/// Leading coefficient of a polynomial in N from values at consecutive N.
pub fn leading_fit(values: &[(usize, f64)], degree: usize, tol: f64) -> Result<LeadingFit> {
    if values.len() < degree + 1 {
        return invalid(format!("need at least {} values for degree {degree}", degree + 1));
    }
    if values.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return invalid("values must be at consecutive N");
    }
    let ys: Vec<f64> = values.iter().map(|p| p.1).collect();
    let mut diffs = ys[..=degree].to_vec();
    for _ in 0..degree {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let fact: f64 = (1..=degree).map(|x| x as f64).product();
    let leading = diffs[0] / fact;
    if values.len() == degree + 1 {
        return Ok(LeadingFit { leading, residual: None });
    }
    let n0 = values[0].0 as f64;
    let xs: Vec<f64> = values[..=degree].iter().map(|p| p.0 as f64).collect();
    let newton = newton_coefficients(&xs, &ys[..=degree]);
    let mut residual: f64 = 0.0;
    for &(n, y) in &values[degree + 1..] {
        let p = newton_eval(&xs, &newton, n as f64);
        residual = residual.max((p - y).abs() / y.abs().max(f64::MIN_POSITIVE));
    }
    let _ = n0;
    if residual > tol {
        return Err(MomError::Convergence(format!("polynomial fit residual {residual:e} exceeds {tol:e}")));
    }
    Ok(LeadingFit { leading, residual: Some(residual) })
}

fn newton_coefficients(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut c = ys.to_vec();
    for j in 1..xs.len() {
        for i in (j..xs.len()).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    c
}

fn newton_eval(xs: &[f64], c: &[f64], x: f64) -> f64 {
    let mut acc = c[c.len() - 1];
    for i in (0..c.len() - 1).rev() {
        acc = acc * (x - xs[i]) + c[i];
    }
    acc
}

/// Polynomial through the points, evaluated elsewhere.
pub fn extrapolate_polynomial(values: &[(usize, f64)], x: f64) -> f64 {
    let xs: Vec<f64> = values.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = values.iter().map(|p| p.1).collect();
    newton_eval(&xs, &newton_coefficients(&xs, &ys), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn order(k: usize, b: usize) -> MomOrder {
        MomOrder::new(k, b).unwrap()
    }

    fn cfgv(o: MomOrder, l: &[usize]) -> ConfigurationVector {
        ConfigurationVector::new(o, l.to_vec()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_relative_eq!(s, 2.0 / 15.0, max_relative = 1e-14);
    }

    #[test]
    fn f_factor_examples() {
        let o = order(1, 1);
        let (a, b) = (C::new(0.1, 0.2), C::from_polar(0.1f64.hypot(0.2), 2.0));
        let v = VPoint::new(vec![a, b]).unwrap();
        let mu1 = build_mu_assignment(o, &cfgv(o, &[1])).unwrap();
        let want = (a + b) * (a + b).exp() / (a * a * b * b);
        assert!((f_factor(&v, &mu1, 1).unwrap() - want).norm() < 1e-12 * want.norm());
        let mu0 = build_mu_assignment(o, &cfgv(o, &[0])).unwrap();
        let mu2 = build_mu_assignment(o, &cfgv(o, &[2])).unwrap();
        let want = (b - a).powi(2) * (a + b).exp() / (a * a * b * b);
        assert!((f_factor(&v, &mu0, 1).unwrap() - want).norm() < 1e-12 * want.norm());
        assert!((f_factor(&v, &mu2, 1).unwrap() - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn phi_matches_closed_form_for_sp11() {
        for x in [0.3, 1.0, 3.0] {
            let phi = phi_integrand(Family::Symplectic, order(1, 1), &[x]).unwrap();
            let want = (4.0 * x - 2.0 * (2.0 * x).sin()) / (8.0 * x.powi(3));
            assert_relative_eq!(phi.re, want, max_relative = 1e-12);
            assert!(phi.im.abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_sp11() {
        // The leading coefficient of (N+1)(N+2)/2.
        let g = gamma_coefficient(Family::Symplectic, order(1, 1), GammaConfig::default()).unwrap();
        assert_relative_eq!(g.value, 0.5, max_relative = 1e-12);
        assert_relative_eq!(g.literal, 0.125, max_relative = 1e-12);
    }

    #[test]
    fn gamma_small_cases() {
        let cases = [
            (Family::EvenOrthogonal, 2, 1, 0.5),
            (Family::EvenOrthogonal, 1, 2, 13.0 / 30.0),
            (Family::Symplectic, 2, 1, 1.0 / 3360.0),
            (Family::Symplectic, 1, 2, 23.0 / 90720.0),
        ];
        for (fam, k, b, want) in cases {
            let g = gamma_coefficient(fam, order(k, b), GammaConfig::default()).unwrap();
            assert_relative_eq!(g.value, want, max_relative = 1e-9);
            let half = gamma_coefficient(fam, order(k, b), GammaConfig { radius: 0.5, ..Default::default() }).unwrap();
            assert!((half.value - g.value).abs() < 1e-6 * g.value);
        }
    }

    #[test]
    fn gamma_so11_is_rejected() {
        assert!(gamma_coefficient(Family::EvenOrthogonal, order(1, 1), GammaConfig::default()).is_err());
    }

    #[test]
    fn richardson_recovers_log_expansion() {
        let eps: Vec<f64> = (0..6).map(|j| 0.1 / 2f64.powi(j)).collect();
        let vals: Vec<C> = eps.iter().map(|&e| C::new(2.0 + 3.0 * e * e.ln() - e + 0.5 * e * e, 0.0)).collect();
        let z = extrapolate_to_zero(&eps, &vals).unwrap();
        assert!((z.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn psi_sp11_l1_closed_form() {
        let v = VPoint::on_circle(0.25, &[0.7, 2.9]).unwrap();
        let r = psi_integral(&v, order(1, 1), &cfgv(order(1, 1), &[1]), Family::Symplectic, &OscillatoryQuadratureConfig::default()).unwrap();
        let (v1, v2) = (v.values()[0], v.values()[1]);
        let i = C::new(0.0, 1.0);
        let want = i * ((-i * v1).ln() - (i * v2).ln()) / (4.0 * (v1 + v2));
        assert!((r.value - want).norm() < 1e-8 * want.norm(), "{} vs {want}", r.value);
    }

    #[test]
    fn psi_so11_is_rejected() {
        let v = VPoint::on_circle(0.25, &[0.1, 1.0]).unwrap();
        let cfg = OscillatoryQuadratureConfig::default();
        assert!(omega_integral(&v, order(1, 1), &cfgv(order(1, 1), &[1]), &cfg).is_err());
    }

    #[test]
    fn leading_fit_examples() {
        let lin: Vec<(usize, f64)> = (1..=4).map(|n| (n, 2.0 * (n as f64 + 1.0))).collect();
        assert_relative_eq!(leading_fit(&lin, 1, 1e-12).unwrap().leading, 2.0);
        let quad: Vec<(usize, f64)> = (1..=5).map(|n| (n, 3.0 * (n * n) as f64 + n as f64)).collect();
        let fit = leading_fit(&quad, 2, 1e-12).unwrap();
        assert_relative_eq!(fit.leading, 3.0);
        assert!(fit.residual.unwrap() < 1e-14);
        let flat: Vec<(usize, f64)> = (1..=3).map(|n| (n, 7.0)).collect();
        assert_eq!(leading_fit(&flat, 1, 1e-12).unwrap().leading, 0.0);
        let cubic: Vec<(usize, f64)> = (1..=5).map(|n| (n, (n * n * n) as f64)).collect();
        assert!(leading_fit(&cubic, 2, 1e-6).is_err());
    }
}

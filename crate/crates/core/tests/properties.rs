use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use mom_core::asymptotics::{
    extrapolate_polynomial, f_factor, gauss_legendre, psi_integral, OscillatoryQuadratureConfig, VPoint,
};
use mom_core::autocorr::{autocorrelation, autocorrelation_with, min_theta_grid, mom_exact, ExactOptions, IntegrandSpec, ResidueOptions, ShiftVector};
use mom_core::haar::{normalize_density, sample_from_stream, weyl_density, RngStream};
use mom_core::lfunctions::{euler_product_a, fundamental_discriminants, is_fundamental, kronecker_symbol};
use mom_core::params::{
    block_multinomial, build_mu_assignment, combinatorial_coefficient, enumerate_configurations, leading_exponent,
    pairing_sets, ConfigurationVector, Family, GroupSpec, MomOrder,
};
use mom_core::series::{vandermonde_factored, MultiSeries, VandermondeKind};
use num_bigint::BigUint;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn order(k: usize, beta: usize) -> MomOrder {
    MomOrder::new(k, beta).unwrap()
}

fn all_orders(max: usize) -> impl Iterator<Item = MomOrder> {
    (1..=max).flat_map(move |k| (1..=max).map(move |b| order(k, b)))
}

#[test]
fn pairing_set_sizes() {
    for o in all_orders(3) {
        let kb = o.k_beta();
        let b = o.beta;
        for l in enumerate_configurations(o) {
            let mu = build_mu_assignment(o, &l).unwrap();
            let want_a: usize = l.entries().iter().map(|&x| x * (2 * b - x)).sum();
            for family in [Family::Symplectic, Family::EvenOrthogonal] {
                let s = pairing_sets(family, &mu);
                assert_eq!(s.a.len(), want_a, "{l}");
                assert_eq!(s.a.len() + s.b.len(), kb * (2 * b - 1), "{l}");
                let all = match family {
                    Family::Symplectic => kb * (2 * kb + 1),
                    Family::EvenOrthogonal => kb * (2 * kb - 1),
                };
                assert_eq!(s.t.len(), all - s.a.len(), "{family} {l}");
                let mut classified: Vec<_> = s.classified().into_iter().map(|(p, _)| p).collect();
                classified.sort();
                let mut t = s.t.clone();
                t.sort();
                assert_eq!(classified, t, "U/V families must partition T for {l}");
                for sigma in 0..o.k {
                    assert!(s.v_plus.get(&(sigma, sigma)).is_none_or(Vec::is_empty));
                    assert!(s.v_minus.get(&(sigma, sigma)).is_none_or(Vec::is_empty));
                }
            }
        }
    }
}

#[test]
fn coefficient_sum_matches_multinomial() {
    for o in all_orders(3) {
        let total: BigUint = enumerate_configurations(o).iter().map(|l| combinatorial_coefficient(o, l)).sum();
        assert_eq!(total, block_multinomial(o) * (BigUint::from(1u8) << (2 * o.k_beta())));
    }
    assert_eq!(enumerate_configurations(order(2, 1)).iter().map(|l| combinatorial_coefficient(order(2, 1), l)).sum::<BigUint>(), BigUint::from(96u32));
}

#[test]
fn leading_exponent_is_monotone() {
    for family in [Family::Symplectic, Family::EvenOrthogonal] {
        for k in 1..=6 {
            for b in 1..=6 {
                let e = leading_exponent(family, order(k, b));
                let special = |k, b| order(k, b).is_special_for(family);
                if k < 6 && !special(k, b) {
                    assert!(leading_exponent(family, order(k + 1, b)) > e);
                }
                if b < 6 && !special(k, b) {
                    assert!(leading_exponent(family, order(k, b + 1)) > e);
                }
            }
        }
    }
}

#[test]
fn vanishing_vandermonde_factors_match_pairing_sets() {
    for o in all_orders(2) {
        for l in enumerate_configurations(o) {
            let mu = build_mu_assignment(o, &l).unwrap();
            let sets = pairing_sets(Family::EvenOrthogonal, &mu);
            let f = vandermonde_factored(&mu);
            let count = |kind| f.iter().filter(|x| x.kind == kind && x.vanishing).count();
            assert_eq!(count(VandermondeKind::Sum), sets.a.len(), "{l}");
            assert_eq!(count(VandermondeKind::Difference), sets.b.len(), "{l}");
        }
    }
}

fn series_from(coeffs: &[(f64, f64)], cap: usize) -> MultiSeries {
    let mut terms = Vec::new();
    let mut it = coeffs.iter();
    for i in 0..=cap {
        for j in 0..=cap - i {
            if let Some(&(re, im)) = it.next() {
                terms.push((vec![i, j], C::new(re, im)));
            }
        }
    }
    MultiSeries::from_terms(2, cap, &terms).unwrap()
}

fn assert_series_close(a: &MultiSeries, b: &MultiSeries, tol: f64) {
    let d = a.sub(b).unwrap();
    for (e, x) in d.terms() {
        assert!(x.norm() < tol, "coefficient {e:?} differs by {x}");
    }
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 28)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in coeffs(), b in coeffs(), c in coeffs(), cap in 1usize..=6) {
        let (a, b, c) = (series_from(&a, cap), series_from(&b, cap), series_from(&c, cap));
        assert_series_close(&a.mul(&b).unwrap(), &b.mul(&a).unwrap(), 1e-13);
        assert_series_close(&a.mul(&b).unwrap().mul(&c).unwrap(), &a.mul(&b.mul(&c).unwrap()).unwrap(), 1e-12);
        let unit = a.add_constant(C::new(3.0, 0.0) - a.constant_term());
        let one = unit.mul(&unit.invert_unit().unwrap()).unwrap();
        assert_series_close(&one, &a.constant_like(C::new(1.0, 0.0)), 1e-12);
    }

    #[test]
    fn taylor_coefficient_is_linear(a in coeffs(), b in coeffs(), s in -2.0..2.0f64, i in 0usize..4, j in 0usize..3) {
        let (a, b) = (series_from(&a, 6), series_from(&b, 6));
        let lhs = a.scale(C::new(s, 0.0)).add(&b).unwrap().taylor_coefficient(&[i, j]);
        let rhs = a.taylor_coefficient(&[i, j]) * s + b.taylor_coefficient(&[i, j]);
        prop_assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn kronecker_is_multiplicative_and_periodic(d in -50i64..=50, n1 in 1u64..400, n2 in 1u64..400) {
        prop_assume!(is_fundamental(d));
        prop_assert_eq!(kronecker_symbol(d, n1 * n2), kronecker_symbol(d, n1) * kronecker_symbol(d, n2));
        prop_assert_eq!(kronecker_symbol(d, n1), kronecker_symbol(d, n1 + d.unsigned_abs()));
    }

    #[test]
    fn weyl_density_is_exchange_symmetric(x in 0.0..PI, y in 0.0..PI, z in 0.0..PI) {
        for family in [Family::Symplectic, Family::EvenOrthogonal] {
            let g = GroupSpec::new(family, 3).unwrap();
            let a = weyl_density(g, &[x, y, z]);
            for p in [[y, x, z], [z, y, x], [x, z, y], [y, z, x]] {
                prop_assert!((weyl_density(g, &p) - a).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn f_factor_mirror_symmetry(a1 in 0.0..2.0 * PI, a2 in 0.0..2.0 * PI, l in 0usize..=2) {
        let o = order(1, 1);
        let l = ConfigurationVector::new(o, vec![l]).unwrap();
        let v = VPoint::on_circle(0.25, &[a1, a2]).unwrap();
        let vc = VPoint::on_circle(0.25, &[-a1, -a2]).unwrap();
        let f = f_factor(&v, &build_mu_assignment(o, &l).unwrap(), 1).unwrap();
        let g = f_factor(&vc, &build_mu_assignment(o, &l.mirror(o)).unwrap(), 1).unwrap();
        prop_assert!((g - f.conj()).norm() < 1e-12 * f.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn autocorrelation_is_real_and_symmetric(t1 in 0.1..3.0f64, t2 in 0.1..3.0f64, n in 1usize..=6, sp in any::<bool>(), wide in any::<bool>()) {
        prop_assume!((t1 - t2).abs() > 0.05 && (t1 + t2 - PI).abs() > 0.05);
        let family = if sp { Family::Symplectic } else { Family::EvenOrthogonal };
        let g = GroupSpec::new(family, n).unwrap();
        let (o, th) = if wide { (order(2, 1), vec![t1, t2]) } else { (order(1, 2), vec![t1]) };
        let z = autocorrelation_with(&IntegrandSpec::rmt(g), o, &ShiftVector::new(th.clone()).unwrap(), ResidueOptions::default()).unwrap();
        prop_assert!(z.im.abs() <= 1e-8 * z.re.abs());
        let flipped: Vec<f64> = th.iter().rev().enumerate().map(|(i, &x)| if i == 0 { -x } else { x }).collect();
        let w = autocorrelation(g, o, &ShiftVector::unreduced(flipped).unwrap()).unwrap();
        prop_assert!((w - z.re).abs() <= 1e-10 * z.re.abs());
    }

    #[test]
    fn psi_mirror_symmetry(a1 in 0.0..2.0 * PI, a2 in 0.0..2.0 * PI, l in prop::sample::select(vec![0usize, 2])) {
        let o = order(1, 1);
        let cfg = OscillatoryQuadratureConfig::default();
        let l = ConfigurationVector::new(o, vec![l]).unwrap();
        let v = VPoint::on_circle(0.25, &[a1, a2]).unwrap();
        prop_assume!((v.values()[0] + v.values()[1]).norm() > 0.15);
        let vc = VPoint::on_circle(0.25, &[-a1, -a2]).unwrap();
        let p = psi_integral(&v, o, &l, Family::Symplectic, &cfg).unwrap().value;
        let q = psi_integral(&vc, o, &l.mirror(o), Family::Symplectic, &cfg).unwrap().value;
        prop_assert!((q - p.conj()).norm() < 1e-12 * p.norm());
    }

    #[test]
    fn psi_matches_rotated_contour(a1 in 0.0..2.0 * PI, a2 in 0.0..2.0 * PI) {
        let v = VPoint::on_circle(0.25, &[a1, a2]).unwrap();
        let (v1, v2) = (v.values()[0], v.values()[1]);
        prop_assume!((v1 + v2).norm() > 0.15);
        // Poles of the integrand sit at t = −i·a/2; keep them off both contours.
        let roots = [2.0 * v1, 2.0 * v2, v1 + v2];
        for a in roots {
            let arg = (-C::i() * a / 2.0).arg();
            prop_assume!(arg.abs() > 0.1 && (arg + FRAC_PI_2).abs() > 0.1);
        }
        let o = order(1, 1);
        let l = ConfigurationVector::new(o, vec![0]).unwrap();
        let psi = psi_integral(&v, o, &l, Family::Symplectic, &OscillatoryQuadratureConfig::default()).unwrap().value;
        prop_assert!((psi - rotated_psi_l0(&roots)).norm() < 1e-8 * psi.norm());
    }
}

/// ∫_0^∞ e^{−2it} / Π(a_j − 2it) dt moved onto the ray t = −is, picking up the poles swept in between.
fn rotated_psi_l0(roots: &[C]) -> C {
    let i = C::i();
    let f = |t: C| (-2.0 * i * t).exp() / roots.iter().map(|&a| a - 2.0 * i * t).product::<C>();
    let (x, w) = gauss_legendre(32);
    let mut ray = C::new(0.0, 0.0);
    for j in 0..400 {
        let (lo, hi) = (j as f64 * 0.05, (j + 1) as f64 * 0.05);
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi;
            ray += f(-i * s) * (*wi * 0.5 * (hi - lo));
        }
    }
    let mut residues = C::new(0.0, 0.0);
    for (j, &a) in roots.iter().enumerate() {
        let tp = a / (2.0 * i);
        if tp.arg() < 0.0 && tp.arg() > -FRAC_PI_2 {
            let rest: C = roots.iter().enumerate().filter(|&(q, _)| q != j).map(|(_, &b)| b - 2.0 * i * tp).product();
            residues += (-2.0 * i * tp).exp() / (-2.0 * i * rest);
        }
    }
    -2.0 * PI * i * residues - i * ray
}

#[test]
fn regularisation_is_stable_under_halving() {
    let fine = OscillatoryQuadratureConfig::with_eps((0..9).map(|j| 0.05 / 2f64.powi(j)).collect());
    for (o, l, angles) in [
        (order(1, 1), vec![0], [0.4, 2.2]),
        (order(1, 1), vec![1], [0.4, 2.2]),
        (order(1, 1), vec![2], [1.3, 5.0]),
    ] {
        let v = VPoint::on_circle(0.25, &angles).unwrap();
        let l = ConfigurationVector::new(o, l).unwrap();
        let a = psi_integral(&v, o, &l, Family::Symplectic, &OscillatoryQuadratureConfig::default()).unwrap().value;
        let b = psi_integral(&v, o, &l, Family::Symplectic, &fine).unwrap().value;
        assert!((a - b).norm() < 1e-6 * a.norm(), "{l}: {a} vs {b}");
    }
}

fn exact(family: Family, n: usize, o: MomOrder) -> f64 {
    let g = GroupSpec::new(family, n).unwrap();
    mom_exact(g, o, min_theta_grid(g, o), ExactOptions::default()).unwrap()
}

#[test]
fn growth_exponent_from_log_log_slope() {
    let o = order(1, 1);
    let slope = (exact(Family::Symplectic, 320, o) / exact(Family::Symplectic, 80, o)).ln() / 4f64.ln();
    assert!((slope - leading_exponent(Family::Symplectic, o) as f64).abs() < 0.05, "{slope}");

    // Past the exact regime, evaluate the interpolating polynomial through small-N exact values.
    let o = order(2, 1);
    let deg = leading_exponent(Family::EvenOrthogonal, o) as usize;
    let vals: Vec<(usize, f64)> = (1..=deg + 1).map(|n| (n, exact(Family::EvenOrthogonal, n, o))).collect();
    let slope = (extrapolate_polynomial(&vals, 320.0) / extrapolate_polynomial(&vals, 80.0)).ln() / 4f64.ln();
    assert!((slope - deg as f64).abs() < 0.05, "{slope}");
}

#[test]
fn euler_product_a_is_monotone_cauchy() {
    let cutoffs = [125u64, 250, 500, 1000, 2000, 4000, 8000];
    let vals: Vec<f64> = cutoffs.iter().map(|&c| euler_product_a(order(1, 1), c).unwrap()).collect();
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(diffs.iter().all(|&d| d < 0.0), "{vals:?}");
    assert!(diffs.windows(2).all(|w| w[1].abs() < w[0].abs()), "{diffs:?}");
}

#[test]
fn fundamental_discriminant_density() {
    let count = fundamental_discriminants(10_000).len() as f64;
    let want = 6.0 / (PI * PI) * 10_000.0;
    assert_relative_eq!(count, want, max_relative = 0.1);
}

/// Distribution of the smaller eigenangle of Sp(4) and SO(4) against the normalised Weyl density.
#[test]
fn sampler_matches_weyl_density() {
    const SAMPLES: usize = 100_000;
    const GRID: usize = 400;
    for family in [Family::Symplectic, Family::EvenOrthogonal] {
        let g = GroupSpec::new(family, 2).unwrap();
        let z = normalize_density(g).unwrap();
        let h = PI / GRID as f64;
        // tail[i] = P(both angles > i·h)
        let mut cell = vec![vec![0.0; GRID]; GRID];
        for (a, row) in cell.iter_mut().enumerate() {
            for (b, c) in row.iter_mut().enumerate() {
                *c = weyl_density(g, &[(a as f64 + 0.5) * h, (b as f64 + 0.5) * h]) * h * h / z;
            }
        }
        let mut tail = vec![0.0; GRID + 1];
        for i in (0..GRID).rev() {
            let strip: f64 = (i..GRID).map(|j| cell[i][j] + cell[j][i]).sum::<f64>() - cell[i][i];
            tail[i] = tail[i + 1] + strip;
        }
        assert_relative_eq!(tail[0], 1.0, max_relative = 1e-6);

        let mut mins: Vec<f64> = (0..SAMPLES as u64).map(|s| sample_from_stream(g, RngStream::new(11, s)).unwrap().as_slice()[0]).collect();
        mins.sort_by(f64::total_cmp);
        let ks = (0..=GRID)
            .map(|i| {
                let x = i as f64 * h;
                let empirical = mins.partition_point(|&m| m <= x) as f64 / SAMPLES as f64;
                (empirical - (1.0 - tail[i])).abs()
            })
            .fold(0.0, f64::max);
        // Kolmogorov critical value at significance 1e-3.
        let critical = 1.949 / (SAMPLES as f64).sqrt();
        assert!(ks < critical, "{family}: KS {ks:.4} vs {critical:.4}");
    }
}

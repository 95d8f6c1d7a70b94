use std::f64::consts::PI;

use gbq::estimates::{xsb_norm, SpaceTimeBlock};
use gbq::imethod::{multiplier_symbol, Blend};
use gbq::propagators::{free_evolution, linear_energy};
use gbq::spectral::{dealias_product, forward, inverse, lp_norm, sobolev_norm, Field, FourierGrid, Spectrum};
use num_complex::Complex64;
use proptest::prelude::*;

fn field(l: f64, values: Vec<f64>) -> Field {
    let g = FourierGrid::new(l, values.len()).unwrap();
    Field::new(g, values).unwrap()
}

/// Hermitian spectrum with the given positive-mode coefficients and a real mean.
fn spectrum(g: &FourierGrid, mean: f64, pos: &[(f64, f64)]) -> Spectrum {
    let m = g.modes();
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    c[0] = Complex64::new(mean, 0.0);
    for (j, &(re, im)) in pos.iter().enumerate().take(m / 2 - 1) {
        c[j + 1] = Complex64::new(re, im);
        c[m - j - 1] = Complex64::new(re, -im);
    }
    Spectrum::new(g.clone(), c).unwrap()
}

/// `(f g)^ = (1/L) f̂ * ĝ` by direct summation, truncated to `|j| < M/2`.
fn dense_product(factors: &[&Spectrum]) -> Vec<Complex64> {
    let g = factors[0].grid();
    let m = g.modes() as i64;
    let l = g.length();
    // coefficients indexed by signed wavenumber over a wide range
    let mut acc: std::collections::BTreeMap<i64, Complex64> = std::collections::BTreeMap::new();
    acc.insert(0, Complex64::new(1.0 * l, 0.0));
    for f in factors {
        let mut next = std::collections::BTreeMap::new();
        for (&a, &ca) in &acc {
            for b in (-m / 2 + 1)..(m / 2) {
                let cb = f.mode(b);
                if cb == Complex64::new(0.0, 0.0) {
                    continue;
                }
                *next.entry(a + b).or_insert(Complex64::new(0.0, 0.0)) += ca * cb / l;
            }
        }
        acc = next;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); g.modes()];
    for j in (-m / 2 + 1)..(m / 2) {
        if let Some(c) = acc.get(&j) {
            out[g.index_of(j).unwrap()] = *c;
        }
    }
    out
}

fn modes() -> impl Strategy<Value = usize> {
    prop_oneof![Just(16usize), Just(32), Just(64), Just(128)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(l in 0.5f64..60.0, values in modes().prop_flat_map(|m| prop::collection::vec(-10.0f64..10.0, m))) {
        let f = field(l, values);
        let spec = forward(&f).unwrap();
        let a = sobolev_norm(&spec, 0.0);
        let b = lp_norm(&f, 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{} vs {}", a, b);
    }

    #[test]
    fn transform_round_trip(l in 0.5f64..60.0, values in modes().prop_flat_map(|m| prop::collection::vec(-10.0f64..10.0, m))) {
        let f = field(l, values);
        let back = inverse(&forward(&f).unwrap()).unwrap();
        let scale = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-13 * scale.max(1.0));
        }
        prop_assert!(forward(&f).unwrap().is_hermitian());
    }

    #[test]
    fn dealiased_products_match_dense_convolution(
        m in prop_oneof![Just(16usize), Just(32)],
        l in 1.0f64..20.0,
        degree in 2usize..=3,
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3 * 16),
        means in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let g = FourierGrid::new(l, m).unwrap();
        let specs: Vec<Spectrum> = (0..degree)
            .map(|i| spectrum(&g, means[i], &raw[i * 16..(i + 1) * 16]))
            .collect();
        let refs: Vec<&Spectrum> = specs.iter().collect();
        let fast = dealias_product(&refs, degree).unwrap();
        let oracle = dense_product(&refs);
        let scale = oracle.iter().fold(0.0f64, |a, c| a.max(c.norm()));
        for (a, b) in fast.coeffs().iter().zip(&oracle) {
            prop_assert!((a - b).norm() <= 1e-12 * scale.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn sobolev_norms_increase_with_s(
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 31),
        s1 in -2.0f64..2.0,
        ds in 0.0f64..2.0,
    ) {
        let g = FourierGrid::new(2.0 * PI, 64).unwrap();
        let spec = spectrum(&g, 0.3, &raw);
        prop_assert!(sobolev_norm(&spec, s1) <= sobolev_norm(&spec, s1 + ds) * (1.0 + 1e-15));
    }

    #[test]
    fn multiplier_is_even_monotone_and_bounded(
        n in 1.0f64..200.0,
        s in 0.01f64..0.99,
        a in 0.0f64..2000.0,
        b in 0.0f64..2000.0,
        piecewise in any::<bool>(),
    ) {
        let blend = if piecewise { Blend::PiecewiseC1 } else { Blend::SmoothstepLog };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m_lo = multiplier_symbol(lo, n, s, blend);
        let m_hi = multiplier_symbol(hi, n, s, blend);
        prop_assert!(m_hi <= m_lo);
        prop_assert!(m_hi > 0.0 && m_lo <= 1.0);
        prop_assert_eq!(multiplier_symbol(-a, n, s, blend), multiplier_symbol(a, n, s, blend));
        // the symbol never falls below its decay branch
        prop_assert!(m_hi >= (n / hi.max(n)).powf(1.0 - s) * (1.0 - 1e-15));
    }

    #[test]
    fn free_flow_conserves_linear_energy(
        raw_u in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 31),
        raw_v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 31),
        t in -50.0f64..50.0,
    ) {
        let g = FourierGrid::new(2.0 * PI, 64).unwrap();
        let u = spectrum(&g, 0.5, &raw_u);
        let v = spectrum(&g, 0.0, &raw_v);
        let (ut, vt) = free_evolution(t, &u, &v).unwrap();
        let (e0, e1) = (linear_energy(&u, &v), linear_energy(&ut, &vt));
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0);
    }

    #[test]
    fn xsb_norm_is_monotone_in_both_indices(
        values in prop::collection::vec(-1.0f64..1.0, 16 * 16),
        s in 0.0f64..1.0,
        b in 0.0f64..1.0,
        ds in 0.0f64..1.0,
        db in 0.0f64..1.0,
    ) {
        let g = FourierGrid::new(2.0 * PI, 16).unwrap();
        let block = SpaceTimeBlock::new(&g, 0.5, 16, values).unwrap();
        let base = xsb_norm(&block, s, b);
        prop_assert!(base <= xsb_norm(&block, s + ds, b) * (1.0 + 1e-12));
        prop_assert!(base <= xsb_norm(&block, s, b + db) * (1.0 + 1e-12));
    }
}

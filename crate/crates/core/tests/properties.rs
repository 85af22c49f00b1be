//! Algebraic invariants of the small-matrix layer and the curvature operator.

use hyperholonomy::curvature::{cluster_spectrum, CurvatureOp};
use hyperholonomy::smallmat::{
    bracket, closure_under_brackets, invariant_blocks, rotation_exp, rotation_log, sym_eigen, wedge, Mat, SkewEndo,
};
use hyperholonomy::theoremcheck::flatness_from_spectrum;
use proptest::prelude::*;

fn skew(n: usize, entries: &[f64]) -> SkewEndo {
    let mut m = Mat::zeros(n, n);
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i + 1..n {
            let x = *it.next().unwrap();
            m[(i, j)] = x;
            m[(j, i)] = -x;
        }
    }
    SkewEndo::new(m).unwrap()
}

fn symmetric(n: usize, entries: &[f64]) -> Mat {
    let mut m = Mat::zeros(n, n);
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i..n {
            let x = *it.next().unwrap();
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).max_abs()
}

fn dim_and_entries() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=6, prop::collection::vec(-3.0f64..3.0, 21))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wedge_is_antisymmetric_and_metric_skew(
        (n, xs) in dim_and_entries(),
        ys in prop::collection::vec(-3.0f64..3.0, 6),
        gs in prop::collection::vec(-0.4f64..0.4, 21),
    ) {
        let x = &xs[..n];
        let y = &ys[..n];
        // diagonally dominant, hence positive definite
        let g = &symmetric(n, &gs) + &Mat::identity(n).scale(n as f64);
        let xy = wedge(x, y, &g).unwrap();
        let yx = wedge(y, x, &g).unwrap();
        prop_assert!(max_diff(&xy, &(-&yx)) < 1e-12);
        // g(W z, w) = -g(z, W w)
        let gw = &g * &xy;
        prop_assert!((&gw + &gw.transpose()).max_abs() < 1e-10 * (1.0 + gw.max_abs()));
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(
        (n, a) in dim_and_entries(),
        b in prop::collection::vec(-3.0f64..3.0, 15),
        c in prop::collection::vec(-3.0f64..3.0, 15),
    ) {
        let (a, b, c) = (skew(n, &a), skew(n, &b), skew(n, &c));
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        prop_assert!(ab.add(&ba).norm() < 1e-12);
        let jacobi = bracket(&a, &bracket(&b, &c).unwrap()).unwrap()
            .add(&bracket(&b, &bracket(&c, &a).unwrap()).unwrap())
            .add(&bracket(&c, &bracket(&a, &b).unwrap()).unwrap());
        prop_assert!(jacobi.norm() < 1e-10);
    }

    #[test]
    fn closure_is_bracket_closed_and_conjugation_invariant(
        n in 2usize..=5,
        gens in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 10), 1..=3),
        sparsity in prop::collection::vec(any::<bool>(), 10),
        rot in prop::collection::vec(-3.0f64..3.0, 10),
    ) {
        let gens: Vec<SkewEndo> = gens
            .iter()
            .map(|g| {
                let masked: Vec<f64> = g.iter().zip(&sparsity).map(|(x, keep)| if *keep { *x } else { 0.0 }).collect();
                skew(n, &masked)
            })
            .collect();
        let span = closure_under_brackets(&gens, 1e-9).unwrap();
        for x in span.elements() {
            for y in span.elements() {
                prop_assert!(span.distance(&bracket(x, y).unwrap()) < 1e-8);
            }
        }
        for g in &gens {
            prop_assert!(span.distance(g) < 1e-8);
        }
        let q = rotation_exp(&skew(n, &rot));
        let turned: Vec<SkewEndo> = gens.iter().map(|g| g.conjugate(&q)).collect();
        prop_assert_eq!(closure_under_brackets(&turned, 1e-9).unwrap().dim(), span.dim());
    }

    #[test]
    fn invariant_blocks_are_invariant(
        n in 2usize..=5,
        gens in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 10), 1..=2),
        sparsity in prop::collection::vec(prop::bool::weighted(0.35), 10),
    ) {
        let gens: Vec<SkewEndo> = gens
            .iter()
            .map(|g| {
                let masked: Vec<f64> = g.iter().zip(&sparsity).map(|(x, keep)| if *keep { *x } else { 0.0 }).collect();
                skew(n, &masked)
            })
            .collect();
        let span = closure_under_brackets(&gens, 1e-9).unwrap();
        let blocks = invariant_blocks(&span, 1e-8).unwrap();
        let mut seen: Vec<usize> = blocks.blocks.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for x in span.elements() {
            for block in &blocks.blocks {
                for &col in block {
                    let image = x.apply(&blocks.frame.col(col));
                    // the image has no component outside the block
                    let outside: f64 = (0..n)
                        .filter(|c| !block.contains(c))
                        .map(|c| blocks.frame.col(c).iter().zip(&image).map(|(a, b)| a * b).sum::<f64>().powi(2))
                        .sum();
                    prop_assert!(outside.sqrt() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn eigen_reconstructs_with_orthonormal_descending_basis((n, entries) in dim_and_entries()) {
        let a = symmetric(n, &entries);
        let e = sym_eigen(&a).unwrap();
        prop_assert!(max_diff(&e.reconstruct(), &a) < 1e-10 * (1.0 + a.max_abs()));
        let vtv = &e.vectors.transpose() * &e.vectors;
        prop_assert!(max_diff(&vtv, &Mat::identity(n)) < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn repeated_eigenvalues_are_found(
        n in 3usize..=6,
        mult in 2usize..=3,
        rot in prop::collection::vec(-3.0f64..3.0, 15),
        values in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let mut spectrum: Vec<f64> = values[..n].to_vec();
        for i in 1..mult.min(n) {
            spectrum[i] = spectrum[0];
        }
        let q = rotation_exp(&skew(n, &rot));
        let a = (&(&q * &Mat::diag(&spectrum)) * &q.transpose()).symmetrized();
        let e = sym_eigen(&a).unwrap();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in e.values.iter().zip(&spectrum) {
            prop_assert!((got - want).abs() < 1e-10);
        }
        let sizes: usize = cluster_spectrum(&e.values, 1e-8).iter().map(|c| c.multiplicity()).sum();
        prop_assert_eq!(sizes, n);
    }

    #[test]
    fn exp_and_log_are_inverse_below_pi((n, entries) in dim_and_entries()) {
        let x = skew(n, &entries);
        // scale so that every rotation angle stays below pi
        let x = x.scale(2.5 / (1.0 + x.norm()));
        let q = rotation_exp(&x);
        prop_assert!(max_diff(&(&q.transpose() * &q), &Mat::identity(n)) < 1e-12);
        prop_assert!((q.determinant() - 1.0).abs() < 1e-10);
        let back = rotation_log(&q).unwrap();
        prop_assert!(back.sub(&x).norm() < 1e-9);
    }

    #[test]
    fn gauss_curvature_operator_has_curvature_symmetries(
        (n, entries) in dim_and_entries(),
        nu in -2.0f64..2.0,
        vs in prop::collection::vec(-2.0f64..2.0, 24),
    ) {
        let op = CurvatureOp::new(nu, symmetric(n, &entries)).unwrap();
        let (x, y, z, w) = (&vs[0..n], &vs[6..6 + n], &vs[12..12 + n], &vs[18..18 + n]);
        let rxy = op.apply(x, y).unwrap();
        prop_assert!(rxy.add(&op.apply(y, x).unwrap()).norm() < 1e-10);
        // first Bianchi identity
        let cyclic: Vec<f64> = (0..n)
            .map(|i| rxy.apply(z)[i] + op.apply(y, z).unwrap().apply(x)[i] + op.apply(z, x).unwrap().apply(y)[i])
            .collect();
        prop_assert!(cyclic.iter().all(|c| c.abs() < 1e-9));
        // pair symmetry <R(x,y)z, w> = <R(z,w)x, y>
        let lhs: f64 = rxy.apply(z).iter().zip(w).map(|(a, b)| a * b).sum();
        let rhs: f64 = op.apply(z, w).unwrap().apply(x).iter().zip(y).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn positive_ambient_curvature_is_never_flat(
        n in 3usize..=6,
        values in prop::collection::vec(-10.0f64..10.0, 6),
        nu in 0.01f64..5.0,
    ) {
        let f = flatness_from_spectrum(&values[..n], nu, 1e-6);
        prop_assert!(!f.flat);
        prop_assert!(f.diagnostic.is_none());
    }
}

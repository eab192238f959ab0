use nalgebra::DMatrix;
use proptest::prelude::*;

use trimer::approx::{rayleigh_quotient, VariationalParams};
use trimer::eigen::{dense_lowest, lowest_eigenpairs, EigenMethod, EigenOptions, LinearOperator};
use trimer::hamiltonian::BasisIndex;
use trimer::spectrum::{label_levels, lowest_eigenvalues, scale_energy, solve_spectrum};
use trimer::*;

fn symmetric(m: usize, omega: f64, rest: f64, h: f64) -> AssembledOperator {
    let params = SystemParams::new(1.0, omega, rest).unwrap();
    assemble(MeshSpec::new(m, h).unwrap(), Interaction::Symmetric(params)).unwrap()
}

fn lowest_dense(op: &AssembledOperator, count: usize) -> Vec<f64> {
    dense_lowest(&op.to_dense().unwrap(), count).values
}

fn spectrum_with(op: &AssembledOperator, count: usize, method: EigenMethod) -> Vec<f64> {
    let opts = EigenOptions { count, tol: 1e-11, method, ..EigenOptions::default() };
    solve_spectrum(op, &opts, &[]).unwrap().values
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_symmetric(
        m in 2usize..7,
        omega in 0.2f64..3.0,
        rest in 0.0f64..4.0,
        h in 0.05f64..0.8,
        seed in any::<u64>(),
    ) {
        let op = symmetric(m, omega, rest, h);
        let n = op.dim();
        let mut rng = seed;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let y: Vec<f64> = (0..n).map(|_| next()).collect();
        let (mut hx, mut hy) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&x, &mut hx);
        op.apply(&y, &mut hy);
        let a: f64 = x.iter().zip(&hy).map(|(p, q)| p * q).sum();
        let b: f64 = hx.iter().zip(&y).map(|(p, q)| p * q).sum();
        let scale: f64 = hx.iter().map(|v| v.abs()).sum::<f64>() + hy.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn entries_vanish_when_all_index_pairs_differ(
        m in 3usize..7,
        omega in 0.2f64..3.0,
        rest in 0.0f64..4.0,
        h in 0.05f64..0.8,
    ) {
        let op = symmetric(m, omega, rest, h);
        let dense = op.to_dense().unwrap();
        let mut nonzero = 0;
        for r in 0..op.dim() {
            for c in 0..op.dim() {
                let (p, q) = (BasisIndex::from_flat(r, m), BasisIndex::from_flat(c, m));
                if p.i != q.i && p.j != q.j && p.k != q.k {
                    prop_assert_eq!(dense[(r, c)], 0.0);
                }
                if dense[(r, c)] != 0.0 {
                    nonzero += 1;
                }
                prop_assert_eq!(dense[(r, c)], dense[(c, r)]);
            }
        }
        prop_assert!(nonzero <= op.structural_nonzeros());
        prop_assert!(op.structural_nonzeros() <= m * m * m * (3 * m * m + 3 * m + 1));
    }

    #[test]
    fn iterative_agrees_with_dense(
        m in 3usize..7,
        omega in 0.3f64..2.0,
        rest in 0.0f64..3.0,
        h in 0.1f64..0.6,
        count in 1usize..8,
    ) {
        let op = symmetric(m, omega, rest, h);
        let count = count.min(op.dim());
        let dense = lowest_dense(&op, count);
        let iterative = spectrum_with(&op, count, EigenMethod::Iterative);
        prop_assert!(close(&iterative, &dense, 1e-10), "{:?} vs {:?}", iterative, dense);
    }

    #[test]
    fn permuted_couplings_give_the_same_spectrum(
        nu in prop::array::uniform3(0.3f64..2.0),
        rest in prop::array::uniform3(0.2f64..2.5),
        omega in 0.3f64..2.0,
        h in 0.1f64..0.5,
    ) {
        let mesh = MeshSpec::new(5, h).unwrap();
        let spectrum = |nu: [f64; 3], rest: [f64; 3]| {
            let g = GeneralizedParams::new(nu, rest, omega).unwrap();
            lowest_dense(&assemble(mesh, Interaction::Generalized(g)).unwrap(), 6)
        };
        let base = spectrum(nu, rest);
        // exchanging particles 2 and 3 swaps the 12 and 13 pairs
        let swapped = spectrum([nu[1], nu[0], nu[2]], [rest[1], rest[0], rest[2]]);
        // exchanging particles 1 and 2 swaps the 13 and 23 pairs
        let other = spectrum([nu[0], nu[2], nu[1]], [rest[0], rest[2], rest[1]]);
        prop_assert!(close(&swapped, &base, 1e-9));
        prop_assert!(close(&other, &base, 1e-9));
    }

    #[test]
    fn equal_couplings_reduce_to_symmetric(
        omega in 0.3f64..2.0,
        rest in 0.1f64..3.0,
        h in 0.1f64..0.5,
    ) {
        let mesh = MeshSpec::new(5, h).unwrap();
        let g = GeneralizedParams::new([1.0; 3], [rest; 3], omega).unwrap();
        let generalized = assemble(mesh, Interaction::Generalized(g)).unwrap().to_dense().unwrap();
        let plain = symmetric(5, omega, rest, h).to_dense().unwrap();
        let diff = (&generalized - &plain).abs().max();
        prop_assert!(diff <= 1e-12 * plain.abs().max());
    }

    #[test]
    fn scaling_round_trip(
        mass in 0.2f64..5.0,
        omega in 0.2f64..5.0,
        rest in 0.0f64..4.0,
        energy in 0.5f64..50.0,
        to_mass in 0.2f64..5.0,
        to_omega in 0.2f64..5.0,
    ) {
        let from = SystemParams::new(mass, omega, rest).unwrap();
        let (e, r) = scale_energy(energy, &from, to_mass, to_omega).unwrap();
        let mid = SystemParams::new(to_mass, to_omega, r).unwrap();
        let (back_e, back_r) = scale_energy(e, &mid, mass, omega).unwrap();
        prop_assert!((back_e - energy).abs() <= 1e-12 * energy);
        prop_assert!((back_r - rest).abs() <= 1e-12 * rest.max(1.0));
    }

    #[test]
    fn labels_partition_the_spectrum(
        mut values in prop::collection::vec(0.5f64..20.0, 1..40),
        dup in prop::collection::vec(0usize..3, 1..40),
    ) {
        values.sort_by(f64::total_cmp);
        let mut spread = Vec::new();
        for (v, d) in values.iter().zip(dup.iter().chain(std::iter::repeat(&0))) {
            for _ in 0..=*d {
                spread.push(*v);
            }
        }
        let res = trimer::SpectrumResult {
            residuals: vec![1e-12; spread.len()],
            values: spread.clone(),
            tol: 1e-9,
            iterations: 0,
            matvecs: 0,
            vectors: vec![],
        };
        let table = label_levels(&res, 1e-7);
        let total: usize = table.rows.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(total, spread.len());
        for w in table.rows.windows(2) {
            prop_assert!(w[0].energy < w[1].energy);
            prop_assert!(w[0].level <= w[1].level);
            if w[0].level == w[1].level {
                prop_assert_eq!(w[1].n, w[0].n + 1);
            } else {
                prop_assert_eq!(w[1].n, 0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn rayleigh_ritz_bound(
        alpha in 0.3f64..1.0,
        beta in 0.0f64..1.0,
        rest in 0.0f64..2.5,
    ) {
        let params = SystemParams::new(1.0, 1.0, rest).unwrap();
        let mesh = trimer::spectrum::MeshPolicy::auto(8).resolve(&params).unwrap();
        let op = assemble(mesh, Interaction::Symmetric(params)).unwrap();
        let vp = VariationalParams::new(alpha, beta).unwrap();
        match rayleigh_quotient(&op, &vp) {
            Ok(e) => {
                let ground = lowest_eigenvalues(&op, 1, 1e-11).unwrap().values[0];
                prop_assert!(e >= ground - 1e-9 * ground.abs(), "{} < {}", e, ground);
            }
            Err(Error::Unresolved { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn single_state_and_full_spectrum_match_dense() {
    let small = symmetric(2, 0.8, 0.6, 0.4);
    let one = spectrum_with(&small, 1, EigenMethod::Iterative);
    assert!(close(&one, &lowest_dense(&small, 1), 1e-10));

    let op = symmetric(3, 0.8, 0.6, 0.4);
    let all = spectrum_with(&op, op.dim(), EigenMethod::Auto);
    assert!(close(&all, &lowest_dense(&op, op.dim()), 1e-10));
}

#[test]
fn warm_start_reproduces_cold_start() {
    let a = symmetric(8, 0.5, 1.0, 0.3);
    let b = symmetric(8, 0.5, 1.05, 0.3);
    let opts = EigenOptions { count: 4, tol: 1e-10, method: EigenMethod::Iterative, ..EigenOptions::default() };
    let seed = solve_spectrum(&a, &opts, &[]).unwrap();
    let warm = solve_spectrum(&b, &opts, &seed.vectors).unwrap();
    let cold = solve_spectrum(&b, &opts, &[]).unwrap();
    assert!(close(&warm.values, &cold.values, 1e-9));
    assert!(warm.matvecs <= cold.matvecs);
}

#[test]
fn eigensolver_on_a_generic_matrix() {
    let n = 300;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0 + i as f64 * 0.1;
        if i + 1 < n {
            m[(i, i + 1)] = 0.3;
            m[(i + 1, i)] = 0.3;
        }
    }
    let opts = EigenOptions { count: 5, tol: 1e-11, method: EigenMethod::Iterative, ..EigenOptions::default() };
    let it = lowest_eigenpairs(&m, &opts).unwrap();
    let dense = dense_lowest(&m, 5);
    assert!(close(&it.values, &dense.values, 1e-10));
}

use nalgebra::{DMatrix, DVector};
use permcs::permute::{zigzag_permutation, IDENTITY_TAG};
use permcs::recon::{
    reconstruct_2d, reconstruct_parallel, solve_basis_pursuit, verify_certificate, SolveStatus,
    SolverOptions,
};
use permcs::rng::Stream;
use permcs::sensing::{gaussian_sensing, restricted_isometry_constant, sample_parallel, SensingMatrix};
use permcs::signal::{best_s_term, Signal2D};

/// Minimum of `||x||_1 s.t. A x = y` by enumerating every basic solution of
/// the split-variable program `min 1^T z, [A, -A] z = y, z >= 0`.
fn lp_vertex_minimum(a: &SensingMatrix, y: &[f64]) -> f64 {
    let (k, m) = (a.k(), a.m());
    let split = |c: usize| -> Vec<f64> {
        let sign = if c < m { 1.0 } else { -1.0 };
        (0..k).map(|r| sign * a.get(r, c % m)).collect()
    };
    let mut best = f64::INFINITY;
    let mut pick = (0..k).collect::<Vec<usize>>();
    loop {
        let cols: Vec<Vec<f64>> = pick.iter().map(|&c| split(c)).collect();
        let b = DMatrix::from_fn(k, k, |r, c| cols[c][r]);
        if b.determinant().abs() > 1e-10 {
            if let Some(z) = b.lu().solve(&DVector::from_column_slice(y)) {
                if z.iter().all(|v| *v >= -1e-10) {
                    best = best.min(z.iter().sum());
                }
            }
        }
        // next K-combination of 0..2m
        let mut i = k;
        while i > 0 && pick[i - 1] == 2 * m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        pick[i - 1] += 1;
        for t in i..k {
            pick[t] = pick[t - 1] + 1;
        }
    }
}

fn planted(m: usize, s: usize, rng: &mut Stream) -> Vec<f64> {
    let mut x = vec![0.0; m];
    let mut placed = 0;
    while placed < s {
        let i = rng.below(m);
        if x[i] == 0.0 {
            x[i] = rng.gaussian();
            placed += 1;
        }
    }
    x
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |e, (p, q)| e.max((p - q).abs()))
}

#[test]
fn objective_matches_vertex_enumeration() {
    let opts = SolverOptions::default();
    let mut rng = Stream::new(2024, 0);
    for trial in 0..60u64 {
        let m = 3 + rng.below(6);
        let k = 1 + rng.below(m.min(6));
        let a = gaussian_sensing(k, m, 500 + trial).unwrap();
        let y: Vec<f64> = if trial % 2 == 0 {
            (0..k).map(|_| rng.gaussian()).collect()
        } else {
            a.mul_vec(&planted(m, 1 + rng.below(k), &mut rng))
        };
        let sol = solve_basis_pursuit(&a, &y, &opts).unwrap();
        let oracle = lp_vertex_minimum(&a, &y);
        assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
        let rel = (sol.objective() - oracle).abs() / oracle.max(1e-300);
        assert!(rel <= 1e-6, "trial {trial} (K={k}, M={m}): {} vs {oracle}", sol.objective());
        assert!(verify_certificate(&a, &y, &sol, &opts), "trial {trial}");
    }
}

#[test]
fn certificates_hold_on_dense_and_compressible_columns() {
    let opts = SolverOptions::default();
    let a = gaussian_sensing(30, 90, 8).unwrap();
    let mut rng = Stream::new(1, 0);
    for t in 0..15 {
        // power-law coefficients: compressible, not sparse
        let x: Vec<f64> = (0..90)
            .map(|i| rng.gaussian() / (1.0 + ((i * 7 + t) % 90) as f64).powf(1.5))
            .collect();
        let y = a.mul_vec(&x);
        let sol = solve_basis_pursuit(&a, &y, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(verify_certificate(&a, &y, &sol, &opts));
        assert!(sol.objective() <= x.iter().map(|v| v.abs()).sum::<f64>() * (1.0 + 1e-9));
    }
}

#[test]
fn planted_recovery_at_predicted_measurement_count() {
    // K = ceil(4 * 8 * ln(256 / 8)) = 111
    let opts = SolverOptions::default();
    let mut ok = 0;
    for seed in 0..40u64 {
        let a = gaussian_sensing(111, 256, seed).unwrap();
        let x = planted(256, 8, &mut Stream::new(seed, 9));
        let sol = solve_basis_pursuit(&a, &a.mul_vec(&x), &opts).unwrap();
        if max_abs_diff(&sol.x, &x) <= 1e-4 {
            ok += 1;
        }
    }
    assert!(ok >= 38, "{ok}/40");
}

#[test]
fn median_error_does_not_grow_with_measurements() {
    let opts = SolverOptions::default();
    let mut medians = Vec::new();
    for k in [40, 60, 80, 100] {
        let mut errs: Vec<f64> = (0..15u64)
            .map(|seed| {
                let a = gaussian_sensing(k, 256, 77 + seed).unwrap();
                let x = planted(256, 8, &mut Stream::new(seed, 3));
                let sol = solve_basis_pursuit(&a, &a.mul_vec(&x), &opts).unwrap();
                sol.x.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        medians.push(errs[errs.len() / 2]);
    }
    for w in medians.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{medians:?}");
    }
}

#[test]
fn small_isometry_constant_gives_exact_one_sparse_recovery() {
    let opts = SolverOptions::default();
    let mut checked = 0;
    for seed in 0..40u64 {
        // nine rows of a random orthogonal matrix: nearly isometric columns
        let mut rng = Stream::new(seed, 0);
        let g = DMatrix::from_fn(10, 10, |_, _| rng.gaussian());
        let q = g.qr().q();
        let entries = (0..9).flat_map(|r| (0..10).map(move |c| (r, c))).map(|(r, c)| q[(r, c)]).collect();
        let a = SensingMatrix::from_entries(9, 10, entries).unwrap();
        if restricted_isometry_constant(&a, 2).unwrap() >= 2f64.sqrt() - 1.0 {
            continue;
        }
        checked += 1;
        for i in 0..10 {
            for v in [1.0, -2.5] {
                let mut x = vec![0.0; 10];
                x[i] = v;
                let sol = solve_basis_pursuit(&a, &a.mul_vec(&x), &opts).unwrap();
                assert!(max_abs_diff(&sol.x, &x) < 1e-9, "seed {seed}, atom {i}");
            }
        }
    }
    assert!(checked > 0, "no matrix met the isometry condition");
}

#[test]
fn permuted_sparse_signal_is_recovered_exactly() {
    // 8 nonzeros in the first column, spread to one per column by zigzag
    let (rows, cols) = (16, 8);
    let mut data = vec![0.0; rows * cols];
    let p = zigzag_permutation(rows, cols);
    let mut rng = Stream::new(4, 0);
    for r in 0..8 {
        data[r * cols] = 1.0 + rng.uniform();
    }
    let x = Signal2D::from_row_major(rows, cols, data).unwrap();
    let a = gaussian_sensing(8, rows, 12).unwrap();
    let batch = sample_parallel(&a, &p.apply(&x).unwrap(), p.tag()).unwrap();
    let rec = reconstruct_2d(&a, &batch, &p, &SolverOptions::default(), 2).unwrap();
    assert!(rec.signal.try_sub(&x).unwrap().max_abs() <= 1e-4);

    // without the permutation column 1 carries 8 nonzeros and 8 measurements cannot hold it
    let plain = sample_parallel(&a, &x, IDENTITY_TAG).unwrap();
    let direct = reconstruct_parallel(&a, &plain, &SolverOptions::default(), 2).unwrap();
    assert!(direct.signal.try_sub(&x).unwrap().max_abs() > 1e-4);
}

#[test]
fn compressible_error_is_bounded_by_tail_mass() {
    let opts = SolverOptions::default();
    let (rows, cols, s) = (64, 8, 16);
    let a = gaussian_sensing(40, rows, 3).unwrap();
    let p = zigzag_permutation(rows, cols);
    let mut ratios = Vec::new();
    for seed in 0..50u64 {
        let mut rng = Stream::new(seed, 0);
        let data: Vec<f64> = (0..rows * cols)
            .map(|k| {
                let (i, j) = (k / cols, k % cols);
                rng.gaussian() * (-0.35 * (i + j) as f64).exp()
            })
            .collect();
        let x = Signal2D::from_row_major(rows, cols, data).unwrap();
        let batch = sample_parallel(&a, &p.apply(&x).unwrap(), p.tag()).unwrap();
        let rec = reconstruct_2d(&a, &batch, &p, &opts, 1).unwrap();
        let tail = x.try_sub(&best_s_term(&x, s).unwrap().0).unwrap().norm_l1();
        ratios.push(rec.signal.try_sub(&x).unwrap().norm_fro() / tail);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(worst.is_finite() && worst < 10.0, "{worst}");
}

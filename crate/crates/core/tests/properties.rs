use std::sync::OnceLock;

use linf_core::baselines::{lqr_gain, pole_place_gain};
use linf_core::linalg::{eigenvalues, is_hurwitz, Matrix, SymMatrix};
use linf_core::model::{build_frequency_model, BuConvention, FrequencyParams, PlantModel};
use linf_core::sim::{gen_disturbance, simulate, Feedback, Simulation};
use linf_core::synthesis::{control_law, synth_fs, synth_fs_with, synth_of, FsOptions, SearchSpec};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix_from(n: usize, m: usize, vals: &[f64]) -> Matrix<f64> {
    Matrix::from_vec(n, m, vals[..n * m].to_vec()).unwrap()
}

fn sym_from(n: usize, vals: &[f64]) -> SymMatrix<f64> {
    SymMatrix::symmetrize(&matrix_from(n, n, vals))
}

fn gram(g: &Matrix<f64>) -> SymMatrix<f64> {
    SymMatrix::symmetrize(&g.transpose().matmul(g))
}

fn paper() -> PlantModel<f64> {
    build_frequency_model(&FrequencyParams::paper(), BuConvention::PaperLiteral).unwrap()
}

fn paper_low_gain() -> &'static linf_core::ControllerDesign {
    static DESIGN: OnceLock<linf_core::ControllerDesign> = OnceLock::new();
    DESIGN.get_or_init(|| {
        let m = paper();
        synth_fs(&m, m.input_limit, 1.0, &SearchSpec::default()).unwrap()
    })
}

proptest! {
    #[test]
    fn eig_sym_reconstructs(n in 1usize..=6, vals in prop::collection::vec(-10.0f64..10.0, 36)) {
        let m = sym_from(n, &vals);
        let e = m.eig();
        let d = Matrix::diagonal(&e.values);
        let back = e.vectors.matmul(&d).matmul(&e.vectors.transpose());
        let err = (&back - m.as_matrix()).frobenius_norm() / m.frobenius_norm().max(1e-300);
        prop_assert!(err <= 1e-12, "{}", err);
    }

    #[test]
    fn psd_cone_is_closed_under_addition(
        n in 1usize..=5,
        a in prop::collection::vec(-3.0f64..3.0, 25),
        b in prop::collection::vec(-3.0f64..3.0, 25),
    ) {
        let p = gram(&matrix_from(n, n, &a));
        let q = gram(&matrix_from(n, n, &b));
        prop_assert!(p.is_psd(1e-9) && q.is_psd(1e-9));
        prop_assert!((&p + &q).is_psd(1e-9));
    }

    #[test]
    fn lqr_residual_and_stability(
        n in 1usize..=4,
        inputs in 1usize..=2,
        a in prop::collection::vec(-2.0f64..2.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 8),
        g in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let am = matrix_from(n, n, &a);
        let bm = matrix_from(n, inputs, &b);
        let m = PlantModel::new(am.clone(), Matrix::zeros(n, 1), bm.clone(), Matrix::identity(n)).unwrap();
        let qw = SymMatrix::symmetrize(&(&gram(&matrix_from(n, n, &g)).into_matrix() + &Matrix::identity(n).scale(0.1)));
        let rw = SymMatrix::identity(inputs);
        let lqr = lqr_gain(&m, &qw, &rw).unwrap();
        let p = lqr.p.as_matrix();
        let res = &(&(&am.transpose().matmul(p) + &p.matmul(&am)) - &p.matmul(&bm).matmul(&bm.transpose()).matmul(p))
            + qw.as_matrix();
        prop_assert!(res.frobenius_norm() <= 1e-8 * lqr.p.frobenius_norm());
        prop_assert!(is_hurwitz(&(&am - &bm.matmul(&lqr.k))));
    }

    #[test]
    fn pole_placement_round_trip(
        n in 1usize..=4,
        a in prop::collection::vec(-2.0f64..2.0, 16),
        b in prop::collection::vec(0.2f64..1.0, 4),
        first in -5.0f64..-0.5,
        gaps in prop::collection::vec(0.3f64..1.5, 3),
    ) {
        let am = matrix_from(n, n, &a);
        let bm = matrix_from(n, 1, &b);
        let m = PlantModel::new(am.clone(), Matrix::zeros(n, 1), bm.clone(), Matrix::identity(n)).unwrap();
        let ctrb = m.controllability_matrix(&bm);
        let sv = linf_core::linalg::singular_values(&ctrb);
        prop_assume!(sv.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-2 * sv[0]);
        let mut poles = vec![Complex::new(first, 0.0)];
        for gap in gaps.iter().take(n - 1) {
            let last = poles.last().unwrap().re;
            poles.push(Complex::new(last - gap, 0.0));
        }
        let k = pole_place_gain(&m, &poles).unwrap();
        // large gains make the closed-loop spectrum itself ill-conditioned;
        // rounding K alone then moves eigenvalues by more than the tolerance
        prop_assume!(k.max_abs() <= 200.0);
        let mut got = eigenvalues(&(&am - &bm.matmul(&k))).unwrap();
        for want in &poles {
            let (i, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - want).norm()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            prop_assert!(d <= 1e-8, "pole {} off by {}", want, d);
            got.swap_remove(i);
        }
    }
}

#[test]
fn schur_complement_matches_psd() {
    // [[A, B], [Bᵀ, C]] ⪰ 0 ⟺ A − B·C⁻¹·Bᵀ ⪰ 0 for C ≻ 0
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 1000 {
        let (p, q) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let g = Matrix::from_vec(q, q, (0..q * q).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let c = SymMatrix::symmetrize(&(&gram(&g).into_matrix() + &Matrix::identity(q)));
        let b = Matrix::from_vec(p, q, (0..p * q).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let d: Vec<f64> = (0..p * p).map(|_| rng.gen_range(-0.6..1.0)).collect();
        let base = b.matmul(c.inverse_pd().unwrap().as_matrix()).matmul(&b.transpose());
        let a = SymMatrix::symmetrize(&(&base + &gram(&matrix_from(p, p, &d)).shift_diagonal(-0.2).into_matrix()));
        let mut full = Matrix::zeros(p + q, p + q);
        full.set_block(0, 0, a.as_matrix());
        full.set_block(0, p, &b);
        full.set_block(p, 0, &b.transpose());
        full.set_block(p, p, c.as_matrix());
        let full = SymMatrix::symmetrize(&full);
        let schur = full.schur_complement(p).unwrap();
        let smin = schur.min_eigenvalue();
        if smin.abs() < 1e-6 {
            continue;
        }
        assert_eq!(full.min_eigenvalue() >= -1e-12, smin >= 0.0, "sample {checked}");
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn control_law_respects_limit(x0 in -1.0f64..1.0, x1 in -1.0f64..1.0, delta in 1.0f64..200.0) {
        let lg = paper_low_gain();
        let qinv = lg.certificate.q.inverse_pd().unwrap();
        let x = [x0 * 0.05, x1 * 0.5];
        let lvl = qinv.quadratic_form(&x);
        let inside: Vec<f64> = x.iter().map(|v| v / lvl.sqrt().max(1.0)).collect();
        prop_assert!(control_law(lg, &inside)[0].abs() <= lg.u_max * (1.0 + 1e-9));
        let hg = lg.with_delta(delta).unwrap();
        prop_assert!(control_law(&hg, &x)[0].abs() <= hg.u_max);
    }
}

#[test]
fn high_gain_never_worse_than_low_gain() {
    let m = paper();
    let lg = paper_low_gain();
    let run = |d: &linf_core::ControllerDesign, seed| {
        let dist = gen_disturbance(seed, 60.0, 5.0, 1.0).unwrap();
        simulate(&m, &Feedback::Design(d.clone()), None, &dist, 1e-3, &[0.0, 0.0]).unwrap()
    };
    for seed in 0..20 {
        let low = run(lg, seed);
        for delta in [10.0, 100.0] {
            let high = run(&lg.with_delta(delta).unwrap(), seed);
            assert!(high.peak_abs_freq <= low.peak_abs_freq + 1e-9, "seed {seed}, delta {delta}");
            assert!(high.max_ellipsoid_level.unwrap() <= 1.01 && low.max_ellipsoid_level.unwrap() <= 1.01);
        }
    }
}

#[test]
fn augmented_level_falls_along_trajectories_outside_unit_set() {
    // the linear (unclamped) output-feedback loop started outside the
    // certified set; the LMI at r = 1 makes xᵀPx + eᵀSe decrease there
    let m = paper();
    let opts = FsOptions { augment_open_loop: true, ..FsOptions::default() };
    let fs = synth_fs_with(&m, m.input_limit, 1.0, &SearchSpec::default(), &opts).unwrap();
    let o = synth_of(&m, &fs, fs.certificate.alpha, 10.0).unwrap();
    let linear = m.clone().with_input_limit(1e6);
    let p = fs.certificate.q.inverse_pd().unwrap();
    let fb = Feedback::Design(fs);
    for (seed, dir) in [(0u64, [1.0, 0.0]), (1, [0.0, 1.0]), (2, [1.0, -3.0])] {
        let lvl = p.quadratic_form(&dir) + o.s.quadratic_form(&dir);
        let x0: Vec<f64> = dir.iter().map(|v| v * (3.0 / lvl).sqrt()).collect();
        let dist = gen_disturbance(seed, 10.0, 5.0, 1.0).unwrap();
        let r = Simulation::new(&linear, &fb, &dist, 1e-3).observer(Some(&o)).x0(&x0).xhat0(&[0.0, 0.0]).run().unwrap();
        let mut outside = 0;
        for w in r.levels.windows(2) {
            if w[0] > 1.0 {
                outside += 1;
                assert!(w[1] < w[0], "seed {seed}: level rose from {} to {}", w[0], w[1]);
            }
        }
        assert!(outside > 0);
        assert!(r.levels.last().unwrap() <= &1.0);
    }
}

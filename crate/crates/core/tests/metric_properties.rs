use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wkpi_core::persistence::{PersistenceDiagram, PersistencePoint};
use wkpi_core::pimage::{compute_persistence_image, fit_grid, GridSpec, PersistenceImage, PiConfig};
use wkpi_core::svm::train_svm;
use wkpi_core::wkpi::{
    build_cost_matrices, cost_gradient, distance_matrix, gram_matrix, total_cost_direct, total_cost_matrix,
    wkpi_distance, Component, GaussianMixtureWeight, KernelVariant, WkpiParams,
};

fn diagram(rng: &mut ChaCha8Rng, max_points: usize) -> PersistenceDiagram {
    let n = rng.gen_range(1..=max_points);
    PersistenceDiagram::new(
        (0..n)
            .map(|_| {
                let b = rng.gen_range(0.0..1.0);
                PersistencePoint::new(b, b + rng.gen_range(0.0..1.0), 0, false)
            })
            .collect(),
    )
}

fn instance(seed: u64, n: usize, k: usize) -> (Vec<PersistenceImage>, Vec<usize>, GridSpec, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diagrams: Vec<PersistenceDiagram> = (0..n).map(|_| diagram(&mut rng, 5)).collect();
    let grid = fit_grid(&diagrams, 6, None).unwrap();
    let cfg = PiConfig::default();
    let first = compute_persistence_image(&diagrams[0], &grid, &cfg);
    let images = diagrams
        .iter()
        .map(|d| PersistenceImage {
            layout: first.layout.clone(),
            pixels: compute_persistence_image(d, &grid, &cfg).pixels,
        })
        .collect();
    let labels = (0..n).map(|i| i % k).collect();
    (images, labels, grid, rng)
}

fn params(rng: &mut ChaCha8Rng, grid: &GridSpec, m: usize, variant: KernelVariant) -> WkpiParams {
    let weight = GaussianMixtureWeight::new(
        (0..m)
            .map(|_| {
                Component::new(
                    rng.gen_range(grid.x_min..grid.x_max),
                    rng.gen_range(grid.y_min..grid.y_max),
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(0.0..2.0),
                )
            })
            .collect(),
    )
    .unwrap();
    let sigma = [0.05, 0.1, 0.5, 1.0][rng.gen_range(0..4)];
    WkpiParams::new(sigma, weight, variant).unwrap()
}

fn variant() -> impl Strategy<Value = KernelVariant> {
    prop_oneof![Just(KernelVariant::Wkpi), Just(KernelVariant::AltWkpi)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_positive_semidefinite(seed in any::<u64>(), n in 2usize..16, m in 1usize..6, v in variant()) {
        let (images, _, grid, mut rng) = instance(seed, n, 1);
        let p = params(&mut rng, &grid, m, v);
        let g = gram_matrix(&images, &p).unwrap();
        let min = g.clone().symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-8 * g.amax(), "min eigenvalue {min}");
    }

    #[test]
    fn cost_forms_agree_and_stay_in_range(seed in any::<u64>(), n in 3usize..20, k in 1usize..4, m in 1usize..6) {
        prop_assume!(n >= k);
        let (images, labels, grid, mut rng) = instance(seed, n, k);
        let p = params(&mut rng, &grid, m, KernelVariant::Wkpi);
        let Ok(direct) = total_cost_direct(&images, &labels, &p) else {
            // a class whose distances all vanish is rejected by both forms
            prop_assert!(build_cost_matrices(&images, &labels, &p).is_err());
            return Ok(());
        };
        let cm = build_cost_matrices(&images, &labels, &p).unwrap();
        let matrix = total_cost_matrix(&cm, k);
        prop_assert!((direct - matrix).abs() <= 1e-8 * direct.max(1.0));
        let constraint = &cm.h * &cm.g * cm.h.transpose() - DMatrix::identity(k, k);
        prop_assert!(constraint.amax() <= 1e-8);
        prop_assert!(direct >= -1e-12 && direct <= k as f64 + 1e-12, "TC {direct}");
    }

    #[test]
    fn stability_intermediate_bound(seed in any::<u64>(), m in 1usize..6) {
        let (images, _, grid, mut rng) = instance(seed, 2, 1);
        let p = params(&mut rng, &grid, m, KernelVariant::Wkpi);
        let d2 = distance_matrix(&images, &p).unwrap()[(0, 1)];
        let c_omega = p.weight.eval_many(&grid.centers()).into_iter().fold(0.0, f64::max);
        let diff2: f64 = images[0].pixels.iter().zip(&images[1].pixels).map(|(a, b)| (a - b).powi(2)).sum();
        let bound = 2.0 * c_omega / p.kernel_sigma.powi(2) * diff2;
        prop_assert!(d2 <= bound * (1.0 + 1e-12) + 1e-300, "{d2} > {bound}");
    }

    #[test]
    fn distance_is_a_pseudo_metric(seed in any::<u64>(), m in 1usize..6, v in variant()) {
        let (images, _, grid, mut rng) = instance(seed, 3, 1);
        let p = params(&mut rng, &grid, m, v);
        let d = |i: usize, j: usize| wkpi_distance(&images[i], &images[j], &p).unwrap();
        for i in 0..3 {
            prop_assert!(d(i, i).abs() <= 1e-12);
            for j in 0..3 {
                prop_assert!(d(i, j) >= 0.0);
                prop_assert!((d(i, j) - d(j, i)).abs() <= 1e-12);
            }
        }
        let slack = 1e-9 * (d(0, 1) + d(1, 2)).max(1.0);
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + slack);
    }

    #[test]
    fn coefficient_scaling_leaves_cost_unchanged(seed in any::<u64>(), n in 4usize..16, m in 1usize..5, lambda in 0.01f64..100.0) {
        let (images, labels, grid, mut rng) = instance(seed, n, 2);
        let p = params(&mut rng, &grid, m, KernelVariant::Wkpi);
        let scaled = p.with_weight(p.weight.scaled(lambda));
        let (Ok(a), Ok(b)) = (total_cost_direct(&images, &labels, &p), total_cost_direct(&images, &labels, &scaled)) else {
            return Ok(());
        };
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        let da = distance_matrix(&images, &p).unwrap();
        let db = distance_matrix(&images, &scaled).unwrap();
        for (x, y) in da.iter().zip(db.iter()) {
            prop_assert!((lambda * x - y).abs() <= 1e-9 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn pixels_are_non_negative_and_carry_unit_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = diagram(&mut rng, 8);
        let grid = GridSpec::from_bounds(-5.0, 6.0, -5.0, 6.0, 55).unwrap();
        let cfg = PiConfig { tau: Some(0.1), ..PiConfig::default() };
        let img = compute_persistence_image(&d, &grid, &cfg);
        prop_assert!(img.pixels.iter().all(|&v| v >= 0.0));
        let total: f64 = img.pixels.iter().sum();
        prop_assert!((total - d.len() as f64).abs() <= 1e-9 * d.len() as f64, "mass {total}");
    }

    #[test]
    fn every_pixel_matches_quadrature(bx in 0.0f64..1.0, py in -0.5f64..1.0, tau in 0.05f64..0.3) {
        let grid = GridSpec::from_bounds(-0.2, 1.2, -0.7, 1.2, 8).unwrap();
        let cfg = PiConfig { tau: Some(tau), ..PiConfig::default() };
        let d = PersistenceDiagram::new(vec![PersistencePoint::new(bx, bx + py, 0, false)]);
        let img = compute_persistence_image(&d, &grid, &cfg);
        let density = |x: f64, y: f64| {
            (-((x - bx).powi(2) + (y - py).powi(2)) / (2.0 * tau * tau)).exp() / (2.0 * std::f64::consts::PI * tau * tau)
        };
        // composite Simpson, 128 panels per side
        let n = 128;
        let h = grid.pixel_size / n as f64;
        let weight = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        for (s, &value) in img.pixels.iter().enumerate() {
            let (x0, y0) = (grid.x_min + (s % grid.x_resolution) as f64 * grid.pixel_size, grid.y_min + (s / grid.x_resolution) as f64 * grid.pixel_size);
            let mut q = 0.0;
            for i in 0..=n {
                for j in 0..=n {
                    q += weight(i) * weight(j) * density(x0 + i as f64 * h, y0 + j as f64 * h);
                }
            }
            q *= h * h / 9.0;
            prop_assert!((value - q).abs() <= 1e-12 + 1e-5 * q, "pixel {s}: {value} vs {q}");
        }
    }

    #[test]
    fn svm_duals_are_feasible(seed in any::<u64>(), n in 4usize..30, c in prop_oneof![Just(0.1), Just(1.0), Just(100.0)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let mut labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        labels.swap(0, rng.gen_range(0..n));
        let k = DMatrix::from_fn(n, n, |i, j| {
            (-((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2))).exp()
        });
        let model = train_svm(&k, &labels, c, 1e-6).unwrap();
        let balance: f64 = model.dual_coefficients.iter().sum();
        prop_assert!(balance.abs() <= 1e-9 * c.max(1.0) * n as f64, "sum alpha y = {balance}");
        for a in model.alphas() {
            prop_assert!((-1e-12..=c + 1e-12).contains(&a), "alpha {a} outside [0, {c}]");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 4usize..12, m in 1usize..4) {
        let (images, labels, grid, mut rng) = instance(seed, n, 2);
        let p = params(&mut rng, &grid, m, KernelVariant::Wkpi);
        let Ok(grad) = cost_gradient(&images, &labels, &p, 1.0) else {
            return Ok(());
        };
        let objective = |t: &[f64]| {
            let w = GaussianMixtureWeight::from_params(t).unwrap();
            total_cost_direct(&images, &labels, &p.with_weight(w.clone())).unwrap() + w.penalty(1.0)
        };
        let theta = p.weight.params();
        let eps = 1e-5;
        for (c, &a) in grad.iter().enumerate() {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[c] += eps;
            down[c] -= eps;
            let fd = (objective(&up) - objective(&down)) / (2.0 * eps);
            let scale = a.abs().max(fd.abs());
            prop_assert!((a - fd).abs() <= 1e-4 * scale + 1e-9, "coordinate {c}: {a} vs {fd}");
        }
    }
}

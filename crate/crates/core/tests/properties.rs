use mlop_core::geometry::{fill_distance, nearest_neighbor_distances, support_sizes};
use mlop_core::mlop::{attraction_coeff, init_q, repulsion_coeff, run_mlop, MlopConfig, RepulsionProfile};
use mlop_core::rng::{seeded, uniform, Gaussian};
use mlop_core::sketch::{build_sketch, sketched_norm};
use mlop_core::PointCloud;
use proptest::prelude::*;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_cloud(seed: u64, count: usize, dim: usize, spread: f64) -> PointCloud {
    let mut rng = seeded(seed);
    PointCloud::new(dim, (0..count * dim).map(|_| uniform(&mut rng, -spread, spread)).collect()).unwrap()
}

fn noisy_circle(count: usize, dim: usize, noise: f64, seed: u64) -> PointCloud {
    let mut rng = seeded(seed);
    let mut coords = Vec::with_capacity(count * dim);
    for j in 0..count {
        let t = std::f64::consts::TAU * j as f64 / count as f64;
        for c in 0..dim {
            let base = match c {
                0 => t.cos(),
                1 => t.sin(),
                _ => 0.0,
            };
            coords.push(base + uniform(&mut rng, -noise, noise));
        }
    }
    PointCloud::new(dim, coords).unwrap()
}

fn configured(p: &PointCloud, q0: &PointCloud, iters: usize) -> MlopConfig {
    let s = support_sizes(p, q0).unwrap();
    MlopConfig {
        h1: Some(s.h1),
        h2: Some(s.h2),
        max_iters: iters,
        seed: 4,
        ..MlopConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn attraction_coefficient_matches_central_difference(
        seed in 0u64..10_000,
        dim in prop::sample::select(vec![2usize, 10, 61]),
        r in 0.2f64..2.0,
        h1 in 0.5f64..3.0,
        eps in 0.01f64..1.0,
    ) {
        let mut g = Gaussian::new(seed);
        let mut d: Vec<f64> = (0..dim).map(|_| g.sample()).collect();
        let len = norm(&d);
        d.iter_mut().for_each(|v| *v *= r / len);
        let p = vec![0.0; dim];
        let alpha = attraction_coeff(&d, &p, eps, h1);
        let energy = |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (r2 + eps).sqrt() * (-r2 / (h1 * h1)).exp()
        };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for c in 0..dim {
            let mut a = d.clone();
            let mut b = d.clone();
            a[c] += h;
            b[c] -= h;
            let fd = (energy(&a) - energy(&b)) / (2.0 * h);
            worst = worst.max((d[c] * alpha - fd).abs());
            scale = scale.max(fd.abs());
        }
        prop_assert!(worst <= 1e-5 * scale.max(1e-8), "{worst} vs {scale}");
    }

    #[test]
    fn repulsion_coefficient_matches_central_difference(
        seed in 0u64..10_000,
        dim in prop::sample::select(vec![2usize, 10, 61]),
        r in 0.3f64..2.0,
        h2 in 0.5f64..3.0,
    ) {
        let mut g = Gaussian::new(seed);
        let mut d: Vec<f64> = (0..dim).map(|_| g.sample()).collect();
        let len = norm(&d);
        d.iter_mut().for_each(|v| *v *= r / len);
        let beta = repulsion_coeff(&d, &vec![0.0; dim], h2, RepulsionProfile::InverseCubic).unwrap();
        let energy = |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-r2 / (h2 * h2)).exp() / (3.0 * r2 * r2.sqrt())
        };
        let h = 1e-6;
        for c in 0..dim {
            let mut a = d.clone();
            let mut b = d.clone();
            a[c] += h;
            b[c] -= h;
            let fd = -(energy(&a) - energy(&b)) / (2.0 * h);
            prop_assert!((d[c] * beta - fd).abs() <= 1e-5 * (d.iter().map(|v| v.abs()).fold(0.0, f64::max) * beta));
        }
    }

    #[test]
    fn sketch_contracts_and_is_exact_on_its_span(seed in 0u64..1000, m in 1usize..8) {
        let p = random_cloud(seed, 30, 12, 1.0);
        let s = build_sketch(&p, m, seed).unwrap();
        let mut g = Gaussian::new(seed ^ 0xabc);
        let x: Vec<f64> = (0..12).map(|_| g.sample()).collect();
        prop_assert!(sketched_norm(&s, &x).unwrap() <= norm(&x) * (1.0 + 1e-12));
        // any combination of the sketch columns keeps its norm
        let coeffs: Vec<f64> = (0..m).map(|_| g.sample()).collect();
        let y: Vec<f64> = (0..12)
            .map(|r| (0..m).map(|c| s.basis()[(r, c)] * coeffs[c]).sum())
            .collect();
        prop_assert!((sketched_norm(&s, &y).unwrap() - norm(&y)).abs() <= 1e-10 * norm(&y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn point_count_and_dimension_are_conserved(seed in 0u64..1000, size in 2usize..25, iters in 0usize..6) {
        let p = noisy_circle(80, 3, 0.05, seed);
        let q0 = init_q(&p, size, seed).unwrap();
        let run = run_mlop(&p, &q0, &configured(&p, &q0, iters)).unwrap();
        prop_assert_eq!(run.q.len(), size);
        prop_assert_eq!(run.q.dim(), 3);
        prop_assert!(run.q.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn trajectories_are_bit_identical(seed in 0u64..1000) {
        let p = noisy_circle(80, 4, 0.1, seed);
        let q0 = init_q(&p, 15, seed).unwrap();
        let cfg = configured(&p, &q0, 8);
        let a = run_mlop(&p, &q0, &cfg).unwrap();
        let b = run_mlop(&p, &q0, &cfg).unwrap();
        prop_assert_eq!(a.q.as_slice(), b.q.as_slice());
        prop_assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn fill_distance_is_a_nearest_neighbour_median() {
    let p = PointCloud::from_rows(&[[0.0], [1.0], [3.0], [6.0]]).unwrap();
    // nearest-neighbour distances 1, 1, 2, 3
    assert_eq!(nearest_neighbor_distances(&p).unwrap(), vec![1.0, 1.0, 2.0, 3.0]);
    assert_eq!(fill_distance(&p).unwrap(), 1.5);
}

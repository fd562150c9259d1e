use gk_core::kmc::{
    exact_distribution, replica_seed, sample_product_measure, simulate, ExactGenerator, MarkovState,
};
use gk_core::lattice::{Configuration, LocalWindow, TorusGeometry};
use gk_core::poly::Polynomial;
use gk_core::rates::{design_rates, RateFunction};
use gk_core::stats::chi_square_sf;

fn default_rates(s: f64) -> RateFunction {
    design_rates(
        &Polynomial::from_roots(-s, &[0.25, 0.45, 0.75]),
        &LocalWindow::new(1, 1),
    )
    .unwrap()
}

#[test]
fn product_measure_extremes_and_mean() {
    let g = TorusGeometry::new(1, 10_000).unwrap();
    let n = g.num_sites();
    assert_eq!(
        sample_product_measure(g, &vec![0.0; n], 3)
            .unwrap()
            .particle_count(),
        0
    );
    assert_eq!(
        sample_product_measure(g, &vec![1.0; n], 3)
            .unwrap()
            .particle_count(),
        n
    );
    let eta = sample_product_measure(g, &vec![0.45; n], 3).unwrap();
    let mean = eta.particle_count() as f64 / n as f64;
    assert!((mean - 0.45).abs() < 4.0 * (0.45f64 * 0.55 / n as f64).sqrt());
    assert_eq!(eta, sample_product_measure(g, &vec![0.45; n], 3).unwrap());
    assert!(sample_product_measure(g, &vec![1.5; n], 3).is_err());
}

#[test]
fn incremental_bookkeeping_matches_rebuild() {
    for (d, side) in [(1, 50), (2, 12), (2, 2), (1, 2)] {
        let g = TorusGeometry::new(d, side).unwrap();
        let c = RateFunction::from_fn(LocalWindow::new(d, 1), |p| (p % 7) as f64 * 0.3).unwrap();
        let eta = sample_product_measure(g, &vec![0.4; g.num_sites()], 9).unwrap();
        let mut s = MarkovState::new(eta, c, 3.0, 11).unwrap();
        for i in 0..20_000 {
            s.step();
            if i % 997 == 0 {
                assert!(s.check_consistency(), "d={d} N={side} after {i} events");
            }
        }
        assert!(s.check_consistency());
    }
}

#[test]
fn kawasaki_only_conserves_particles() {
    let g = TorusGeometry::new(1, 64).unwrap();
    let c = RateFunction::constant(LocalWindow::new(1, 1), 0.0).unwrap();
    let eta = sample_product_measure(g, &vec![0.5; 64], 1).unwrap();
    let n0 = eta.particle_count();
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.01).collect();
    simulate(eta, &c, 4.0, 0.1, &times, 5, |_, s| {
        assert_eq!(s.configuration().particle_count(), n0);
    })
    .unwrap();
}

#[test]
fn runs_are_reproducible() {
    let g = TorusGeometry::new(1, 200).unwrap();
    let c = default_rates(10.0);
    let eta = sample_product_measure(g, &vec![0.5; 200], 1).unwrap();
    let run = |seed| {
        let mut snaps = Vec::new();
        simulate(
            eta.clone(),
            &c,
            9.0,
            0.05,
            &[0.0, 0.025, 0.05],
            seed,
            |_, s| snaps.push(s.configuration().to_bytes()),
        )
        .unwrap();
        snaps
    };
    assert_eq!(run(replica_seed(42, 3)), run(replica_seed(42, 3)));
    assert_ne!(run(replica_seed(42, 3)), run(replica_seed(42, 4)));
}

#[test]
fn zero_horizon_gives_initial_snapshot() {
    let g = TorusGeometry::new(1, 8).unwrap();
    let eta = Configuration::from_occupancy(g, &[1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
    let mut seen = Vec::new();
    simulate(
        eta.clone(),
        &default_rates(1.0),
        4.0,
        0.0,
        &[0.0],
        1,
        |t, s| seen.push((t, s.configuration().clone())),
    )
    .unwrap();
    assert_eq!(seen, vec![(0.0, eta)]);
}

#[test]
fn generator_is_conservative() {
    let g = TorusGeometry::new(2, 2).unwrap();
    let gen = ExactGenerator::new(g, &default_rates(5.0), 4.0).unwrap();
    for s in 0..gen.num_states {
        assert!(gen.row_sum(s).abs() < 1e-12);
    }
    let big = TorusGeometry::new(1, 17).unwrap();
    assert!(ExactGenerator::new(big, &default_rates(1.0), 4.0).is_err());
}

#[test]
fn exact_law_without_flips_stays_in_sector() {
    let g = TorusGeometry::new(1, 4).unwrap();
    let eta = Configuration::from_occupancy(g, &[1, 1, 0, 0]).unwrap();
    let c = RateFunction::constant(LocalWindow::new(1, 1), 0.0).unwrap();
    let p = exact_distribution(&eta, &c, 4.0, 0.3).unwrap();
    for (s, &ps) in p.iter().enumerate() {
        if (s as u32).count_ones() != 2 {
            assert!(ps.abs() < 1e-15);
        }
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let p0 = exact_distribution(&eta, &c, 4.0, 0.0).unwrap();
    assert_eq!(p0[eta.to_index()], 1.0);
}

/// Chi-square statistic of observed counts against expected probabilities,
/// pooling cells with expected count below 5.
fn chi_square(counts: &[u64], p: &[f64], n: u64) -> (f64, f64) {
    let mut stat = 0.0;
    let mut cells = 0;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &q) in counts.iter().zip(p) {
        let e = q * n as f64;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e.max(1e-300);
        cells += 1;
    }
    (stat, (cells - 1) as f64)
}

#[test]
fn monte_carlo_matches_exact_law_2x2() {
    let g = TorusGeometry::new(2, 2).unwrap();
    let c = design_rates(
        &Polynomial::from_roots(-5.0, &[0.25, 0.45, 0.75]),
        &LocalWindow::new(2, 1),
    )
    .unwrap();
    let eta = Configuration::from_occupancy(g, &[1, 0, 0, 0]).unwrap();
    let t = 0.1;
    let exact = exact_distribution(&eta, &c, 4.0, t).unwrap();
    let replicas = 20_000u64;
    let mut counts = vec![0u64; 16];
    for r in 0..replicas {
        simulate(eta.clone(), &c, 4.0, t, &[t], replica_seed(7, r), |_, s| {
            counts[s.configuration().to_index()] += 1
        })
        .unwrap();
    }
    let (stat, dof) = chi_square(&counts, &exact, replicas);
    assert!(chi_square_sf(stat, dof) > 0.01, "chi2 {stat} on {dof} dof");
}

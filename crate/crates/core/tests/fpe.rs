use stablefp::fpe::{drift_field, fpe_solve, gaussian_density, KernelKind, KernelSpec, NegativityPolicy, SolveOptions, SolverConfig};
use stablefp::spectral::{besov_norm, build_partition, BesovIndex};
use stablefp::{Field, Grid};

#[test]
fn drift_regularity_bootstrap_bound() {
    let g = Grid::unit_1d(512).unwrap();
    let part = build_partition(&g).unwrap();
    let (alpha, beta, eps) = (1.5, 0.2, 0.3);
    let delta = alpha / 2.0 - eps;
    let k = KernelSpec::new(KernelKind::SyntheticBesov { beta, seed: 3, amplitude: 0.5 });
    let kf = k.field(&g).unwrap();
    let k_norm = besov_norm(&kf, BesovIndex::holder(beta), &part).unwrap();
    let rho0 = gaussian_density(&g, 0.2).unwrap();
    let opts = SolveOptions { observe_at: vec![0.0, 0.05, 0.1, 0.2], record_drift: false };
    let mut checked = 0;
    fpe_solve(&rho0, alpha, &k, 0.2, SolverConfig::new(1e-3), &opts, |s| {
        let rho = s.rho();
        let b = drift_field(&k, &rho)?;
        let lhs = besov_norm(&b, BesovIndex::holder(beta + delta), &part)?;
        let rhs = 5.0 * k_norm * besov_norm(&rho, BesovIndex::new(delta, 1.0, f64::INFINITY)?, &part)?;
        assert!(lhs <= rhs, "t={}: {lhs} > {rhs}", s.t);
        checked += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(checked, 4);
}

#[test]
fn clip_policy_keeps_density_nonnegative() {
    let g = Grid::unit_1d(128).unwrap();
    // a near-indicator start rings under spectral truncation
    let rho0 = Field::from_fn(g, |x| if x[0].abs() < 0.3 { 1.0 } else { 1e-12 });
    let rho0 = rho0.scale(1.0 / rho0.integral());
    let k = KernelSpec::new(KernelKind::SmoothGaussianGradient { width: 0.4 });
    let run = |policy| {
        let mut cfg = SolverConfig::new(1e-3);
        cfg.negativity_policy = policy;
        let mut lowest = f64::INFINITY;
        let traj = fpe_solve(&rho0, 0.8, &k, 0.05, cfg, &SolveOptions::default(), |s| {
            lowest = lowest.min(s.rho().min());
            Ok(())
        })
        .unwrap();
        (traj, lowest)
    };
    let (report, _) = run(NegativityPolicy::Report);
    assert!(report.stats.min_rho < 0.0, "expected Gibbs undershoot, min {}", report.stats.min_rho);
    let (clipped, lowest) = run(NegativityPolicy::ClipRenormalize);
    assert!(clipped.stats.clip_events > 0);
    assert!(lowest >= -1e-12, "{lowest}");
    assert!((clipped.final_state.mass() - 1.0).abs() < 1e-12);
}

#[test]
fn mass_is_conserved_in_two_dimensions() {
    let g = Grid::new(2, 64, 2.0 * std::f64::consts::PI).unwrap();
    let rho0 = gaussian_density(&g, 0.6).unwrap();
    let k = KernelSpec::new(KernelKind::SyntheticBesov { beta: 0.4, seed: 9, amplitude: 0.5 });
    let traj = fpe_solve(&rho0, 1.2, &k, 0.2, SolverConfig::new(2e-3), &SolveOptions::default(), |_| Ok(())).unwrap();
    assert!((traj.final_state.mass() - 1.0).abs() < 1e-10);
    assert!(traj.stats.min_rho > -1e-6);
}

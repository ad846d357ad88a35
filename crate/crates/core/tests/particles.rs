use stablefp::fpe::{fpe_solve, gaussian_density, KernelKind, KernelSpec, SolveOptions, SolverConfig};
use stablefp::particles::{estimate_density, smooth, DriftMode, Ensemble, EulerConfig, Interpolation, McKeanStepper};
use stablefp::stable::{empirical_charfn, StableParams, StreamKey};
use stablefp::{Field, Grid};

fn euler(dt: f64, mode: DriftMode, bandwidth: f64) -> EulerConfig {
    EulerConfig { dt, drift_mode: mode, bandwidth, interpolation: Interpolation::Linear }
}

#[test]
fn density_estimate_converges_to_sampled_gaussian() {
    let g = Grid::unit_1d(256).unwrap();
    let (sigma, bw) = (0.5, 0.1);
    let exact = gaussian_density(&g, sigma).unwrap();
    let mut prev = f64::INFINITY;
    for n in [1_000, 10_000, 100_000] {
        let e = Ensemble::gaussian(g, n, &[0.0], sigma, StreamKey::new(31, 0, 0)).unwrap();
        let l1 = estimate_density(&e, &g, bw).unwrap().sub(&exact).unwrap().lp_norm(1.0);
        let bound = 4.0 * ((n as f64).powf(-0.5) + bw * bw);
        assert!(l1 <= bound, "N={n}: {l1} > {bound}");
        assert!(l1 < prev);
        prev = l1;
    }
}

#[test]
fn free_increments_follow_the_stable_law() {
    let g = Grid::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
    let n = 100_000;
    let params = StableParams::new(1.3, 2).unwrap();
    let stepper = McKeanStepper::new(&g, params, &KernelSpec::zero(), euler(0.01, DriftMode::Grid, 0.3)).unwrap();
    let mut e = Ensemble::new(g, vec![0.0; 2 * n], StreamKey::new(5, 0, 0)).unwrap();
    stepper.step(&mut e).unwrap();
    // increments of size ~0.03 never wrap, so positions are the increments
    let tol = 4.0 / (n as f64).sqrt();
    for xi in [[3.0, 0.0], [0.0, 8.0], [10.0, -10.0], [20.0, 5.0], [1.0, 1.0]] {
        let err = (empirical_charfn(e.positions(), &xi).unwrap() - params.charfn(0.01, &xi)).norm();
        assert!(err <= tol, "xi={xi:?}: {err}");
    }
}

#[test]
fn trajectories_are_reproducible() {
    let g = Grid::unit_1d(128).unwrap();
    let params = StableParams::new(1.5, 1).unwrap();
    let k = KernelSpec::new(KernelKind::SyntheticBesov { beta: 0.3, seed: 2, amplitude: 0.3 });
    let run = || {
        let s = McKeanStepper::new(&g, params, &k, euler(0.01, DriftMode::Grid, 0.1)).unwrap();
        let mut e = Ensemble::gaussian(g, 5000, &[0.0], 0.5, StreamKey::new(12, 0, 0)).unwrap();
        for _ in 0..20 {
            s.step(&mut e).unwrap();
        }
        e
    };
    let (a, b) = (run(), run());
    assert!(a.positions().iter().zip(b.positions()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn grid_and_pairwise_drifts_agree() {
    let g = Grid::unit_1d(128).unwrap();
    let params = StableParams::new(1.5, 1).unwrap();
    let k = KernelSpec::new(KernelKind::SmoothGaussianGradient { width: 0.5 });
    let e0 = Ensemble::gaussian(g, 10_000, &[0.0], 0.6, StreamKey::new(21, 0, 0)).unwrap();
    let mut out = Vec::new();
    for mode in [DriftMode::Grid, DriftMode::Pairwise] {
        let s = McKeanStepper::new(&g, params, &k, euler(0.02, mode, 0.1)).unwrap();
        let mut e = e0.clone();
        for _ in 0..10 {
            s.step(&mut e).unwrap();
        }
        out.push(estimate_density(&e, &g, 0.1).unwrap());
    }
    let l1 = out[0].sub(&out[1]).unwrap().lp_norm(1.0);
    assert!(l1 <= 0.05, "{l1}");
}

/// Modes of a symmetric two-bump density, from its left half.
fn left_mode(f: &Field) -> f64 {
    let g = f.grid();
    let n = g.points_per_axis();
    let i = (0..n / 2).max_by(|&a, &b| f.values()[a].total_cmp(&f.values()[b])).unwrap();
    g.axis_coordinate(i)
}

#[test]
fn attracting_clusters_track_the_density_solution() {
    let g = Grid::unit_1d(128).unwrap();
    let alpha = 1.5;
    let params = StableParams::new(alpha, 1).unwrap();
    let w = 1.0;
    let kernel_field = {
        let base = KernelSpec::new(KernelKind::SmoothGaussianGradient { width: w }).field(&g).unwrap();
        base.scale(10.0)
    };
    let k = KernelSpec::new(KernelKind::Custom(kernel_field));
    let (c, sigma, n) = (1.2, 0.2, 50_000);
    let half = n / 2;
    let mut pos = Ensemble::gaussian(g, half, &[-c], sigma, StreamKey::new(41, 0, 0)).unwrap().positions().to_vec();
    pos.extend_from_slice(Ensemble::gaussian(g, half, &[c], sigma, StreamKey::new(42, 0, 0)).unwrap().positions());
    let mut e = Ensemble::new(g, pos, StreamKey::new(43, 0, 0)).unwrap();
    let rho0 = Field::from_fn(g, |x| {
        let b = |m: f64| {
            let z = g.min_image(x[0] - m);
            (-0.5 * z * z / (sigma * sigma)).exp()
        };
        b(-c) + b(c)
    });
    let rho0 = rho0.scale(1.0 / rho0.integral());

    let dt = 0.004;
    let bw = 0.15;
    let steps_per_obs = 25;
    let times: Vec<f64> = (0..=6).map(|k| (k * steps_per_obs) as f64 * dt).collect();
    let mut fpe_modes = Vec::new();
    let opts = SolveOptions { observe_at: times.clone(), record_drift: false };
    fpe_solve(&rho0, alpha, &k, *times.last().unwrap(), SolverConfig::new(dt), &opts, |s| {
        fpe_modes.push(left_mode(&smooth(&s.rho(), bw)));
        Ok(())
    })
    .unwrap();

    let stepper = McKeanStepper::new(&g, params, &k, euler(dt, DriftMode::Grid, bw)).unwrap();
    let mut particle_modes = vec![left_mode(&estimate_density(&e, &g, bw).unwrap())];
    for _ in 1..times.len() {
        for _ in 0..steps_per_obs {
            stepper.step(&mut e).unwrap();
        }
        particle_modes.push(left_mode(&estimate_density(&e, &g, bw).unwrap()));
    }
    let h = g.spacing();
    for (a, b) in fpe_modes.iter().zip(&particle_modes) {
        assert!((a - b).abs() <= 2.0 * h + 1e-12, "fpe {fpe_modes:?} particles {particle_modes:?}");
    }
    // the left cluster moves right: the distance 2|mode| shrinks
    assert!(fpe_modes.windows(2).all(|p| p[1] >= p[0]));
    assert!(fpe_modes.last().unwrap() > &fpe_modes[0]);
    assert!(particle_modes.last().unwrap() > &particle_modes[0]);
}

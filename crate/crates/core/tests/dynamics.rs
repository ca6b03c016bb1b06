mod common;

use bgk_core::material::EV;
use bgk_core::oracles::{equilibrium_density, invert_equilibrium_density};
use bgk_core::*;
use common::*;

fn kt() -> f64 {
    PhysicalParams::literature_default().k_b_t
}

fn max_node_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn solved_equilibrium_is_stationary() {
    let c = ctx();
    let grid = radial(&c, 0.3 + 25.0 * kt() / EV, 128);
    for variant in [Variant::FrozenMu, Variant::Conservative] {
        let mut st = Stepper::new(&c, &grid, MuSolveOptions::default()).unwrap();
        let mut s = st.initial_state(equilibrium(&c, &grid, 0.3 * EV), 0.0).unwrap();
        let scheme = StepScheme::new(variant, 3e-14).unwrap();
        for _ in 0..100 {
            let next = st.relax_step(&s, &scheme).unwrap();
            assert!(max_node_diff(next.f.values(), s.f.values()) <= 1e-13);
            s = next;
        }
    }
}

#[test]
fn relaxation_reaches_density_matched_equilibrium() {
    let c = ctx();
    let p = *c.params();
    let grid = radial(&c, 0.2 + 25.0 * kt() / EV, 256);
    let f0 = modulated(&c, &grid, 0.2 * EV, 0.3, &vec![1.0; grid.len()]);
    let mut cfg = RunConfig::new(
        grid.clone(),
        InitialCondition::Scaled { mu0: 0.2 * EV, s: 0.3 },
        StepScheme::new(Variant::Conservative, 1e-13).unwrap(),
        2e-10,
    );
    cfg.output_every = usize::MAX;
    let summary = run(&cfg, &c, |_| Ok(())).unwrap();
    assert_eq!(summary.status, RunStatus::Completed);
    let oracle = OracleConfig::default();
    let mu_inf = invert_equilibrium_density(grid.integrate(f0.values()).unwrap(), &p, &oracle).unwrap();
    let target = grid.sample(|k| p.fermi_dirac(p.hbar_vf() * k[0], mu_inf));
    let err = max_node_diff(summary.final_state.f.values(), &target);
    assert!(err <= 1e-8, "{err}");
    assert!(summary.max_step_drift <= 1e-12);
    let rel = (equilibrium_density(summary.final_state.mu, &p, &oracle) - summary.initial_density).abs()
        / summary.initial_density;
    assert!(rel <= 1e-9, "{rel}");
}

#[test]
fn bounds_hold_for_stiff_steps() {
    let c = ctx();
    let grid = radial(&c, 0.2 + 25.0 * kt() / EV, 64);
    let mut st = Stepper::new(&c, &grid, MuSolveOptions::default()).unwrap();
    let mut s = st
        .initial_state(modulated(&c, &grid, 0.2 * EV, 0.3, &vec![1.0; 64]), 0.0)
        .unwrap();
    let kmax = NodeKernels::evaluate(&c, &grid.energies(c.params()), s.mu).max_kappa();
    let scheme = StepScheme::new(Variant::FrozenMu, 10.0 / kmax).unwrap();
    for _ in 0..2000 {
        s = st.relax_step(&s, &scheme).unwrap();
        assert!(s.diagnostics.min_f >= 0.0 && s.diagnostics.max_f <= 1.0);
    }
}

fn frozen_mu_drift(c: &KernelContext, grid: &PhaseGrid, dt: f64, t_end: f64) -> f64 {
    let mut st = Stepper::new(c, grid, MuSolveOptions::default()).unwrap();
    let mut s = st
        .initial_state(modulated(c, grid, 0.1 * EV, 0.5, &vec![1.0; grid.len()]), 0.0)
        .unwrap();
    let rho0 = s.diagnostics.density;
    let scheme = StepScheme::new(Variant::FrozenMu, dt).unwrap();
    for _ in 0..(t_end / dt).round() as usize {
        s = st.relax_step(&s, &scheme).unwrap();
    }
    ((s.diagnostics.density - rho0) / rho0).abs()
}

#[test]
fn frozen_mu_drift_orders() {
    let c = ctx();
    let grid = radial(&c, 0.1 + 25.0 * kt() / EV, 128);
    let dt = 2e-14;
    let local: Vec<f64> = (0..4)
        .map(|j| frozen_mu_drift(&c, &grid, dt / 2f64.powi(j), dt / 2f64.powi(j)))
        .collect();
    let orders: Vec<f64> = local.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    // One-step drift is O(dt^2); the measured order tends to 2 as dt shrinks.
    for w in orders.windows(2) {
        assert!(
            w[0] >= 1.98 && (2.0 - w[1]).abs() < (2.0 - w[0]).abs(),
            "local orders {orders:?}"
        );
    }
    let global: Vec<f64> = (0..3)
        .map(|j| frozen_mu_drift(&c, &grid, dt / 2f64.powi(j), 2e-13))
        .collect();
    for w in global.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.0, "global order {order}");
    }
}

#[test]
fn conservative_drift_per_step() {
    let c = ctx();
    let grid = radial(&c, 0.1 + 25.0 * kt() / EV, 128);
    for dt in [1e-15, 3e-14, 1e-12] {
        let mut st = Stepper::new(&c, &grid, MuSolveOptions::default()).unwrap();
        let mut s = st
            .initial_state(modulated(&c, &grid, 0.1 * EV, 0.5, &vec![1.0; 128]), 0.0)
            .unwrap();
        let scheme = StepScheme::new(Variant::Conservative, dt).unwrap();
        for _ in 0..200 {
            let next = st.relax_step(&s, &scheme).unwrap();
            let drift = ((next.diagnostics.density - s.diagnostics.density) / s.diagnostics.density).abs();
            assert!(drift <= 1e-12, "dt {dt:e}: {drift:e}");
            s = next;
        }
    }
}

#[test]
fn distance_to_final_equilibrium_decreases() {
    let c = ctx();
    let p = *c.params();
    let grid = radial(&c, 0.2 + 25.0 * kt() / EV, 128);
    let u: Vec<f64> = (0..128).map(|i| 0.6 + 0.4 * ((i as f64) * 0.37).sin().abs()).collect();
    let f0 = modulated(&c, &grid, 0.15 * EV, 0.8, &u);
    let mut st = Stepper::new(&c, &grid, MuSolveOptions::default()).unwrap();
    let mut s = st.initial_state(f0, 0.0).unwrap();
    let scheme = StepScheme::new(Variant::Conservative, 2e-13).unwrap();
    let mut states = vec![s.f.clone()];
    for _ in 0..1000 {
        s = st.relax_step(&s, &scheme).unwrap();
        states.push(s.f.clone());
    }
    let target = grid.sample(|k| p.fermi_dirac(p.hbar_vf() * k[0], s.mu));
    let dist = |f: &DistributionField| {
        let sq: Vec<f64> = f.values().iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).collect();
        grid.integrate(&sq).unwrap()
    };
    let d: Vec<f64> = states.iter().map(dist).collect();
    let increases = d.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-300).count();
    if increases > 0 {
        eprintln!(
            "note: weighted L2 distance increased on {increases} of {} steps",
            d.len() - 1
        );
    }
    assert!(d.last().unwrap() < &(1e-12 * d[0]));
}

#[test]
fn drift_current_converges_under_grid_refinement() {
    let c = ctx();
    let p = *c.params();
    let ex = 1e5;
    let current = |n: usize| {
        let k_max = (0.3 * EV + 20.0 * c.k_b_t()) / p.hbar_vf();
        let g = CartesianGrid::new(k_max, n, n).unwrap();
        let dt = g.hx() * p.hbar / (p.e_charge * ex);
        let mut cfg = RunConfig::new(
            g.into(),
            InitialCondition::Equilibrium { mu0: 0.3 * EV },
            StepScheme::new(Variant::Conservative, dt).unwrap(),
            1.0,
        );
        cfg.t_end = (1e-11 / dt).round() * dt;
        cfg.field = [ex, 0.0];
        cfg.output_every = usize::MAX;
        let mut last = None;
        let summary = run(&cfg, &c, |r| {
            last = Some(*r);
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.status, RunStatus::Completed);
        last.unwrap().observables.current
    };
    let coarse = current(48);
    let fine = current(96);
    // Electrons drift against the field.
    assert!(fine[0] > 0.0);
    assert!(fine[1].abs() <= 1e-10 * fine[0]);
    let rel = (coarse[0] - fine[0]).abs() / fine[0];
    assert!(rel <= 0.02, "{rel}");
}

#[test]
fn runs_are_independent_of_thread_count() {
    let c = ctx();
    let p = *c.params();
    let k_max = (0.2 * EV + 20.0 * c.k_b_t()) / p.hbar_vf();
    let g = CartesianGrid::new(k_max, 64, 64).unwrap();
    let mut cfg = RunConfig::new(
        g.into(),
        InitialCondition::Scaled { mu0: 0.2 * EV, s: 0.6 },
        StepScheme::new(Variant::Conservative, 2e-14).unwrap(),
        4e-13,
    );
    cfg.field = [2e5, -1e5];
    let collect = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut rows = Vec::new();
            run(&cfg, &c, |r| {
                rows.push(*r);
                Ok(())
            })
            .unwrap();
            rows
        })
    };
    let a = collect(1);
    let b = collect(8);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(format!("{x:?}"), format!("{y:?}"));
    }
}

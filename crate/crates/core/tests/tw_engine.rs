use numsqueeze::tw::{run_ensemble, FieldState, PulseSchedule, TwConfig, TwModel, DEFAULT_RABI_FREQUENCY};
use numsqueeze::two_mode::InitialEnsemble;
use numsqueeze::Complex64;

fn config(coupling_scale: f64, dt: f64) -> TwConfig {
    TwConfig {
        initial: InitialEnsemble::poissonian(1e4),
        points: 32,
        box_length: 16.0,
        dt,
        coupling_scale,
        ..TwConfig::default()
    }
}

fn transfer(theta1: f64, theta2: f64, phi: f64) -> f64 {
    let amp = Complex64::new(theta1.sin() * theta2.cos(), 0.0)
        + theta1.cos() * theta2.sin() * Complex64::from_polar(1.0, -phi);
    amp.norm_sqr()
}

#[test]
fn linear_dynamics_gives_coherent_statistics() {
    let model = TwModel::new(config(0.0, 4e-5)).unwrap();
    let schedule = PulseSchedule::from_areas(0.3, 0.4, DEFAULT_RABI_FREQUENCY, 1e-3, 0.0).unwrap();
    let phis = [0.0, 1.5, 3.5];
    let (stats, _) = run_ensemble(&model, &schedule, &phis, 2000, 11, false).unwrap();
    for (i, &phi) in phis.iter().enumerate() {
        let m = stats.mode2(i).unwrap();
        let expected = 1e4 * transfer(0.3, 0.4, phi);
        assert!((m.mean - expected).abs() < 4.0 * m.stderr_mean, "phi {phi}: {} vs {expected}", m.mean);
        assert!((m.variance_norm - 1.0).abs() < 4.0 * m.stderr_variance_norm, "phi {phi}: v = {}", m.variance_norm);
    }
}

#[test]
fn trajectories_conserve_number() {
    let model = TwModel::new(config(1.0 / 120.0, 4e-5)).unwrap();
    let schedule = PulseSchedule::from_areas(0.05, 0.025, DEFAULT_RABI_FREQUENCY, 0.05, 1.0).unwrap();
    let (stats, _) = run_ensemble(&model, &schedule, &[0.0, 2.0], 64, 3, false).unwrap();
    assert!(stats.max_norm_drift < 1e-10, "drift {}", stats.max_norm_drift);
}

#[test]
fn ensemble_is_independent_of_thread_count() {
    let model = TwModel::new(config(1.0 / 120.0, 4e-5)).unwrap();
    let schedule = PulseSchedule::from_areas(0.05, 0.025, DEFAULT_RABI_FREQUENCY, 0.01, 0.0).unwrap();
    let phis = [0.0, 3.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&model, &schedule, &phis, 100, 9, true).unwrap())
    };
    assert_eq!(run(1), run(3));
}

fn coupled_evolution(dt: f64) -> FieldState {
    let model = TwModel::new(config(1.0, dt)).unwrap();
    let mut ws = model.workspace();
    let mut state = model.mean_field_state(1e4);
    model
        .evolve(&mut state, &mut ws, 2.4e-5, Complex64::new(DEFAULT_RABI_FREQUENCY, 0.0))
        .unwrap();
    model.evolve(&mut state, &mut ws, 4.8e-4, Complex64::new(0.0, 0.0)).unwrap();
    state
}

#[test]
fn split_step_converges_at_second_order() {
    let fields = [1.6e-6, 8e-7, 4e-7, 2e-7].map(coupled_evolution);
    let distance = |a: &FieldState, b: &FieldState| -> f64 {
        a.psi1
            .iter()
            .zip(&b.psi1)
            .chain(a.psi2.iter().zip(&b.psi2))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let e1 = distance(&fields[0], &fields[3]);
    let e2 = distance(&fields[1], &fields[3]);
    let e3 = distance(&fields[2], &fields[3]);
    // Richardson-style: successive differences shrink by ~4.
    let ratio = (e1 - e2) / (e2 - e3);
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio} from errors {e1:e}, {e2:e}, {e3:e}");
}

use gbq::datagen::gaussian_data;
use gbq::dynamics::{duhamel_residual, evolve, Model, Quadrature, Sampling, Scheme, StepperConfig};
use gbq::propagators::free_evolution;
use gbq::spectral::{forward, sobolev_norm, FourierGrid, Spectrum};

fn difference(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let c = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
    Spectrum::new(a.grid().clone(), c).unwrap()
}

/// `sup_t ‖u(t) - u_free(t)‖_{H¹}` over `[0, 1]`.
fn deviation_from_free_flow(eps: f64) -> f64 {
    let grid = FourierGrid::new(40.0, 256).unwrap();
    let (phi, psi) = gaussian_data(eps, 1.0, &grid).unwrap();
    let (phi_hat, psi_hat) = (forward(&phi).unwrap(), forward(&psi).unwrap());
    let traj = evolve(&phi, &psi, 1.0, &StepperConfig::new(1e-3), Model::defocusing(1), Sampling::keeping(50), &mut []).unwrap();
    traj.states
        .iter()
        .map(|s| {
            let (u, _) = free_evolution(s.t, &phi_hat, &psi_hat).unwrap();
            sobolev_norm(&difference(&s.u_hat, &u), 1.0)
        })
        .fold(0.0, f64::max)
}

#[test]
fn small_data_deviate_from_free_flow_at_cubic_order() {
    let (a, b) = (deviation_from_free_flow(1e-2), deviation_from_free_flow(1e-3));
    let order = (a / b).log10();
    assert!((order - 3.0).abs() <= 0.2, "observed order {order} ({a:e}, {b:e})");
}

#[test]
fn smooth_run_satisfies_the_integral_equation() {
    let grid = FourierGrid::new(40.0, 256).unwrap();
    let (phi, psi) = gaussian_data(1.0, 1.0, &grid).unwrap();
    let traj = evolve(&phi, &psi, 1.0, &StepperConfig::new(1e-3), Model::defocusing(1), Sampling::keeping(1), &mut []).unwrap();
    let simpson = duhamel_residual(&traj, Quadrature::Simpson).unwrap();
    let trapezoid = duhamel_residual(&traj, Quadrature::Trapezoid).unwrap();
    assert!(simpson <= 1e-6, "{simpson:e}");
    assert!(simpson < trapezoid);
}

fn final_state(dt: f64, scheme: Scheme) -> Spectrum {
    let grid = FourierGrid::new(40.0, 256).unwrap();
    let (phi, psi) = gaussian_data(1.0, 1.0, &grid).unwrap();
    let cfg = StepperConfig::new(dt).with_scheme(scheme);
    evolve(&phi, &psi, 1.0, &cfg, Model::defocusing(1), Sampling::every(1000), &mut []).unwrap().final_state.u_hat
}

fn observed_order(scheme: Scheme, dts: [f64; 3]) -> f64 {
    let [a, b, c] = dts.map(|dt| final_state(dt, scheme));
    (sobolev_norm(&difference(&a, &b), 1.0) / sobolev_norm(&difference(&b, &c), 1.0)).log2()
}

#[test]
fn schemes_converge_at_their_orders() {
    let rk = observed_order(Scheme::ExpRk4, [0.02, 0.01, 0.005]);
    assert!(rk >= 3.5, "exp-rk4 order {rk}");
    let strang = observed_order(Scheme::Strang, [0.01, 0.005, 0.0025]);
    assert!((strang - 2.0).abs() <= 0.2, "strang order {strang}");
}

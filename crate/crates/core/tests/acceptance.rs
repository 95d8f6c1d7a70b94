//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::io::Write;
use std::path::PathBuf;

use gbq::datagen::{gaussian_data, rough_spectra, RoughDataSpec};
use gbq::dynamics::{duhamel_residual, evolve, Model, Quadrature, Sampling, Stepper, StepperConfig};
use gbq::experiments::{
    growth_bound_exponent, run_experiment, write_run, Criterion, Experiment, ExperimentConfig, RunOutput, SeedSource,
};
use gbq::imethod::{build_m, multiplier_symbol, smoothing_bounds_check, Blend};
use gbq::propagators::free_evolution;
use gbq::spectral::FourierGrid;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path, &[]).unwrap()
}

fn overridden(name: &str, overrides: &[(&str, &str)]) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let o: Vec<(String, String)> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    ExperimentConfig::load(&path, &o).unwrap()
}

fn run(experiment: Experiment, cfg: &ExperimentConfig) -> RunOutput {
    run_experiment(experiment, cfg, SeedSource::Config).unwrap()
}

/// Writes around the test harness's capture so the line always shows.
fn report(id: u32, title: &str, pass: bool, lines: &[String]) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    writeln!(err, "[criterion {id}] {verdict} {title}").unwrap();
    for l in lines {
        writeln!(err, "    {l}").unwrap();
    }
}

fn criteria_lines(out: &RunOutput, prefix: &str) -> Vec<String> {
    out.record.criteria.iter().map(|c| format!("{prefix}{}", c.line())).collect()
}

#[test]
fn criterion_1_energy_conservation() {
    let sim = run(Experiment::Simulate, &config("simulate_gaussian.toml"));
    let conv = run(Experiment::Convergence, &config("convergence.toml"));
    let drift = sim.record.criteria.iter().find(|c| c.name == "energy_rel_drift").unwrap();
    let order = conv.record.criteria.iter().find(|c| c.name == "temporal_order").unwrap();
    let pass = drift.pass && order.pass && sim.record.pass;
    let mut lines = criteria_lines(&sim, "simulate ");
    lines.push(format!("convergence {}", order.line()));
    report(1, "exact energy conservation (Gaussian, k=1, L=80, M=1024, dt=1e-3, T=10)", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_2_linear_exactness() {
    let conv = run(Experiment::Convergence, &config("convergence.toml"));
    let through_evolve = conv.record.criteria.iter().find(|c| c.name == "linear_exactness").unwrap().clone();

    // step-by-step propagation, without the sampled shortcut
    let g = FourierGrid::new(40.0, 256).unwrap();
    let (phi, psi) = gaussian_data(1.0, 1.0, &g).unwrap();
    let init = gbq::dynamics::SimState::from_data(&phi, &psi, Model::linear()).unwrap();
    let mut stepping = 0.0f64;
    for dt in [0.37, 0.05, 0.01] {
        let mut stepper = Stepper::new(&g, Model::linear(), StepperConfig::new(dt)).unwrap();
        let mut state = init.clone();
        let n = (3.0 / dt).round() as usize;
        for _ in 0..n {
            stepper.step(&mut state).unwrap();
        }
        let (u, ut) = free_evolution(state.t, &init.u_hat, &init.ut_hat).unwrap();
        stepping = stepping
            .max(state.u_hat.relative_distance(&u))
            .max(state.ut_hat.relative_distance(&ut));
    }
    let stepping = Criterion::at_most("stepper_vs_free_evolution", stepping, 1e-13);

    let mut duhamel = 0.0f64;
    for k in [1, 2] {
        let traj = evolve(
            &phi,
            &psi,
            1.0,
            &StepperConfig::new(1e-4),
            Model::defocusing(k),
            Sampling::keeping(1),
            &mut [],
        )
        .unwrap();
        duhamel = duhamel.max(duhamel_residual(&traj, Quadrature::Simpson).unwrap());
    }
    let duhamel = Criterion::at_most("duhamel_residual", duhamel, 1e-12);
    let pass = through_evolve.pass && stepping.pass && duhamel.pass;
    report(
        2,
        "linear exactness and integral-equation residual",
        pass,
        &[through_evolve.line(), stepping.line(), duhamel.line()],
    );
    assert!(pass);
}

#[test]
fn criterion_3_acl_identity() {
    let k1 = run(Experiment::AclCheck, &config("acl_check.toml"));
    let k2 = run(
        Experiment::AclCheck,
        &overridden("acl_check.toml", &[("k", "2"), ("s", "0.95")]),
    );
    let pass = k1.record.pass && k2.record.pass;
    let mut lines = criteria_lines(&k1, "k=1 ");
    lines.extend(criteria_lines(&k2, "k=2 "));
    report(3, "ACL identity, pointwise and integral, k in {1,2}, N in {8,32}", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_4_drift_scaling() {
    let k1 = run(Experiment::DriftScaling, &config("drift_scaling.toml"));
    let k2 = run(Experiment::DriftScaling, &config("drift_scaling_k2.toml"));
    let pass = k1.record.pass && k2.record.pass;
    let mut lines = criteria_lines(&k1, "k=1 s=0.9 ");
    lines.extend(criteria_lines(&k2, "k=2 s=0.95 "));
    for (label, out) in [("k=1", &k1), ("k=2", &k2)] {
        lines.push(format!(
            "{label} median drifts {} (raw {:.3e})",
            out.record.summary["median_drifts"],
            out.record.summary["median_raw_drift"].as_f64().unwrap()
        ));
    }
    report(4, "almost-conservation scaling, 8 members, N in {8,16,32,64}, T=1", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_5_smoothing_bounds() {
    let g = FourierGrid::new(2.0 * std::f64::consts::PI, 1024).unwrap();
    let n_list = [8.0, 16.0, 32.0, 64.0, 128.0];
    let mut lines = Vec::new();
    let mut pass = true;
    for (s0, s) in [(0.9, 0.9), (0.5, 0.7), (0.0, 0.6)] {
        let ensemble: Vec<_> = (0..16u64)
            .map(|seed| rough_spectra(&RoughDataSpec::new(0.5 + 0.03 * seed as f64, 1.0, seed), &g).unwrap().0)
            .collect();
        let r = smoothing_bounds_check(&ensemble, s0, s, &n_list, Blend::default()).unwrap();
        let lower: Vec<String> = r.rows.iter().map(|row| format!("{:.3}", row.lower_ratio_max)).collect();
        let upper: Vec<String> = r.rows.iter().map(|row| format!("{:.3}", row.upper_ratio_max)).collect();
        lines.push(format!(
            "s0={s0} s={s}: lower [{}] upper [{}] {}",
            lower.join(", "),
            upper.join(", "),
            if r.pass { "PASS" } else { "FAIL" }
        ));
        pass &= r.pass;
    }
    report(5, "I-operator smoothing bounds uniform in N = 8..128", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_6_multiplier_contract() {
    let g = FourierGrid::new(2.0 * std::f64::consts::PI, 2048).unwrap();
    let mut branch = 0.0f64;
    let mut monotone = true;
    let mut junction = 0.0f64;
    for blend in [Blend::SmoothstepLog, Blend::PiecewiseC1] {
        for &n in &[8.0, 16.0, 32.0, 64.0, 128.0] {
            for &s in &[0.3, 0.7, 0.9] {
                let m = build_m(n, s, &g, blend).unwrap();
                for (&xi, &v) in g.xi().iter().zip(m.values()) {
                    let a = xi.abs();
                    if a <= n {
                        branch = branch.max((v - 1.0).abs());
                    } else if a >= 2.0 * n {
                        branch = branch.max((v - (n / a).powf(1.0 - s)).abs() / v);
                    }
                }
                let mut prev = f64::INFINITY;
                for i in 0..=40_000 {
                    let x = 4.0 * n * i as f64 / 40_000.0;
                    let v = multiplier_symbol(x, n, s, blend);
                    monotone &= v <= prev;
                    prev = v;
                }
                let h = 1e-4 * n;
                let f = |y: f64| multiplier_symbol(y, n, s, blend);
                for x in [n, 2.0 * n] {
                    let left = (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
                    let right = (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
                    junction = junction.max((left - right).abs() * n / (1.0 - s));
                }
            }
        }
    }
    let branch = Criterion::at_most("branch_value_error", branch, 1e-15);
    let junction = Criterion::at_most("junction_derivative_jump", junction, 1e-6);
    let pass = branch.pass && junction.pass && monotone;
    report(
        6,
        "m_N contract: exact branches, monotone, C1 junctions",
        pass,
        &[branch.line(), junction.line(), format!("monotone nonincreasing: {monotone}")],
    );
    assert!(pass);
}

#[test]
fn criterion_7_strichartz_suite() {
    let out = run(Experiment::StrichartzCheck, &config("strichartz_check.toml"));
    let table = out.table("ratios").unwrap();
    let names = &table.rows;
    let mut parseval = 0.0f64;
    for r in names.iter().filter(|r| r[0] == "L2L2") {
        for v in [&r[2], &r[3]] {
            parseval = parseval.max((v.parse::<f64>().unwrap() - 1.0).abs());
        }
    }
    let parseval = Criterion::at_most("parseval_ratio_error", parseval, 1e-12);
    let pass = out.record.pass && parseval.pass;
    let mut lines = criteria_lines(&out, "");
    lines.push(parseval.line());
    report(7, "Strichartz and bilinear ratios uniform over the sweep", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_8_growth_bound() {
    let formula = [
        (growth_bound_exponent(1, 0.9).unwrap(), 0.1 / 1.4),
        (growth_bound_exponent(1, 0.7).unwrap(), 1.5),
    ];
    let formula_err = formula.iter().map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    let formula = Criterion::at_most("bound_formula_error", formula_err, 1e-12);
    let out = run(Experiment::GrowthStudy, &config("growth_study.toml"));
    let pass = out.record.pass && formula.pass;
    let mut lines = criteria_lines(&out, "");
    lines.push(formula.line());
    lines.push(format!(
        "window T = {}, exponents {}",
        out.record.config.time.t_end, out.record.summary["exponents"]
    ));
    report(8, "observed growth exponent within the bound + 0.1", pass, &lines);
    assert!(pass);
}

#[test]
fn criterion_9_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            Experiment::Simulate,
            overridden(
                "simulate_gaussian.toml",
                &[("kind", "rough"), ("length", "6.283185307179586"), ("modes", "128"), ("dt", "1e-4"), ("t_end", "0.2")],
            ),
        ),
        (Experiment::AclCheck, overridden("acl_check.toml", &[("t_end", "0.005")])),
        (
            Experiment::DriftScaling,
            overridden("drift_scaling.toml", &[("members", "2"), ("dt", "1e-5"), ("t_end", "0.005"), ("sample_every", "25")]),
        ),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (experiment, cfg) in cases {
        let first = run(experiment, &cfg);
        let dir = write_run(tmp.path(), &first).unwrap();
        let again_cfg = ExperimentConfig::load(&dir.join("run.json"), &[]).unwrap();
        let second = run(experiment, &again_cfg);
        let dir2 = write_run(tmp.path(), &second).unwrap();
        for t in &first.tables {
            let name = format!("{}.csv", t.name);
            let a = std::fs::read(dir.join(&name)).unwrap();
            let b = std::fs::read(dir2.join(&name)).unwrap();
            let same = a == b && !a.is_empty();
            pass &= same;
            lines.push(format!("{experiment} {name}: {} bytes, identical: {same}", a.len()));
        }
    }
    report(9, "rerun from the embedded config gives bit-identical CSV", pass, &lines);
    assert!(pass);
}

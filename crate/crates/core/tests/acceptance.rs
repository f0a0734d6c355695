//! Acceptance criteria 1 to 11. Each test prints one PASS/FAIL line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` gives the table.

use std::time::Instant;

use flowsde::dfsde::{
    backward_picard, ckp_holds, flow_distance_tv, forward_particle, lattice_biot_savart, moment_report,
    picard_forward_regular, truncate_by_norm, BackwardOptions, Binning, DiscreteSignedMeasure, FlowEnsemble,
    ParticleOptions, PicardOptions, RegularDrift,
};
use flowsde::fbm::{fbm_covariance, sample_fbm, FbmMethod, HurstParams};
use flowsde::fields::{
    biot_savart_free, convolve_free, divergence_fd, laplacian_spectral, leray_project, localized_norm,
    GridField, GridSpec, NormVariant,
};
use flowsde::fraccalc::{girsanov_weights_along, inversion_residual, AbsContPath};
use flowsde::nse::{
    forward_velocity, lamb_oseen_speed, scaling_check, short_time_exponent, spectral_oracle, tangential_profile,
    velocity_at_points, vorticity_residual, OracleOptions, ScalingOptions, TimeDirection, VelocityField,
};
use flowsde::TimeGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, name: &str, pass: bool, detail: String, start: Instant) {
    println!(
        "criterion {n:>2} {name}: {} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[test]
fn criterion_01_fbm_covariance() {
    let start = Instant::now();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let idx = [16, 32, 64];
    let mut worst = 0.0f64;
    for (k, h) in [0.25, 0.4, 0.5].into_iter().enumerate() {
        let hp = HurstParams::new(h).unwrap();
        let ens = sample_fbm(&hp, &grid, 1, 20_000, FbmMethod::ExactCholesky, 100 + k as u64).unwrap();
        let cols: Vec<Vec<f64>> = idx.iter().map(|&i| (0..ens.replicas()).map(|r| ens.value(r, i, 0)).collect()).collect();
        let means: Vec<f64> = cols.iter().map(|c| mean_se(c).0).collect();
        for a in 0..3 {
            for b in a..3 {
                let prod: Vec<f64> = (0..ens.replicas()).map(|r| (cols[a][r] - means[a]) * (cols[b][r] - means[b])).collect();
                let (cov, se) = mean_se(&prod);
                let exact = fbm_covariance(&hp, grid.node(idx[a]), grid.node(idx[b])).unwrap();
                worst = worst.max((cov - exact).abs() / se);
            }
        }
    }
    let pass = worst <= 4.0;
    report(1, "fbm covariance", pass, format!("max |cov - exact| = {worst:.2} SE"), start);
    assert!(pass);
}

#[test]
fn criterion_02_kernel_inversion() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for h in [0.2, 0.3, 0.4] {
        let hp = HurstParams::new(h).unwrap();
        let res = |n: usize| {
            let g = TimeGrid::new(1.0, n).unwrap();
            let p = AbsContPath::from_fn(g, 1, |_, o| o[0] = 1.0).unwrap();
            inversion_residual(&hp, &g, &p).unwrap()
        };
        let (a, b) = (res(2048), res(4096));
        let ratio = a / b;
        pass &= a <= 1e-2 && (1.6..=2.4).contains(&ratio);
        detail.push(format!("H={h}: {a:.2e}, ratio {ratio:.2}"));
    }
    report(2, "kernel inversion", pass, detail.join(", "), start);
    assert!(pass);
}

#[test]
fn criterion_03_girsanov() {
    let start = Instant::now();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let ens = sample_fbm(&hp, &grid, 2, 20_000, FbmMethod::Volterra, 31).unwrap();
    let w = girsanov_weights_along(&ens, &[0.0, 0.0], |_, _, o| {
        o[0] = 1.0;
        o[1] = 0.0;
    })
    .unwrap();
    let z: Vec<f64> = w.iter().map(|w| w.z_t).collect();
    let (mean, se) = mean_se(&z);
    let frac_ok = (mean - 1.0).abs() <= 3.0 * se;
    let bm = HurstParams::brownian();
    let ens = sample_fbm(&bm, &grid, 2, 2000, FbmMethod::Volterra, 32).unwrap();
    let c = [1.0, -0.5];
    let w = girsanov_weights_along(&ens, &[0.0, 0.0], |_, _, o| o.copy_from_slice(&c)).unwrap();
    let worst = w
        .iter()
        .enumerate()
        .map(|(r, wt)| {
            let end = [ens.value(r, 64, 0), ens.value(r, 64, 1)];
            let exact = (-(c[0] * end[0] + c[1] * end[1]) - 0.5 * (c[0] * c[0] + c[1] * c[1])).exp();
            ((wt.z_t - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let pass = frac_ok && worst <= 1e-12;
    report(
        3,
        "girsanov martingale",
        pass,
        format!("H=0.3 mean Z = {mean:.4} +/- {se:.4}; H=0.5 max rel err {worst:.1e}"),
        start,
    );
    assert!(pass);
}

fn lamb_oseen_ensemble() -> (FlowEnsemble, DiscreteSignedMeasure) {
    let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
    let grid = TimeGrid::new(0.5, 200).unwrap();
    let ens = forward_particle(&nu, &HurstParams::brownian(), &grid, 20_000, 0.05, 41, &ParticleOptions::default()).unwrap();
    (ens, nu)
}

#[test]
fn criterion_04_lamb_oseen() {
    let start = Instant::now();
    let (ens, nu) = lamb_oseen_ensemble();
    let radii = [0.3, 0.6, 1.0, 1.5];
    let prof = tangential_profile(&ens, &nu, 200, &radii, 64, 0.05).unwrap();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (r, v) in radii.iter().zip(&prof) {
        let exact = lamb_oseen_speed(1.0, 0.5, 0.5, *r).unwrap();
        let rel = (v - exact).abs() / exact;
        worst = worst.max(rel);
        detail.push(format!("r={r}: {:.2}%", 100.0 * rel));
    }
    let pass = worst <= 0.05;
    report(4, "Lamb-Oseen reproduction", pass, detail.join(", "), start);
    assert!(pass);
}

#[test]
fn criterion_05_spectral_equivalence() {
    let start = Instant::now();
    let (nu_visc, t_end, t0) = (0.5, 0.25, 0.04);
    let blob = DiscreteSignedMeasure::gaussian_blob([0.0, 0.0], 0.3, 1.0, 5).unwrap();
    assert_eq!(blob.len(), 25);
    let grid = TimeGrid::new(t_end, 50).unwrap();
    let ens = forward_particle(&blob, &HurstParams::brownian(), &grid, 4000, 0.05, 51, &ParticleOptions::default()).unwrap();
    let h = 0.0625;
    let window = GridSpec::new([-1.5, -1.5], [h, h], [49, 49], false).unwrap();
    let u_part = forward_velocity(&ens, &blob, 50, &window, 0.05).unwrap();
    // oracle from the heat-evolved measure at t0
    let box_spec = GridSpec::new([-6.0, -6.0], [h, h], [192, 192], true).unwrap();
    let var = 2.0 * nu_visc * t0;
    let w0 = GridField::scalar_from_fn(box_spec, |x| {
        blob.atoms()
            .iter()
            .zip(blob.weights())
            .map(|(y, w)| {
                let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                w * (-r2 / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var)
            })
            .sum()
    });
    let og = TimeGrid::on_interval(t0, t_end, 42).unwrap();
    let run = spectral_oracle(&w0, nu_visc, &og, &OracleOptions::default()).unwrap();
    let w_end = run.vorticity.last().unwrap();
    let free_spec = GridSpec { periodic: false, ..box_spec };
    let u_free = biot_savart_free(&GridField::new(free_spec, 1, w_end.data().to_vec()).unwrap()).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    let mut v = [0.0; 2];
    for i in 0..window.len() {
        assert!(u_free.interpolate(window.point_at(i), &mut v));
        for c in 0..2 {
            num += (u_part.field.component(c)[i] - v[c]).powi(2);
            den += v[c] * v[c];
        }
    }
    let rel = (num / den).sqrt();
    let pass = rel <= 0.10;
    report(5, "spectral-oracle equivalence", pass, format!("relative L2 = {:.2}%", 100.0 * rel), start);
    assert!(pass);
}

#[test]
fn criterion_06_backward_picard() {
    let start = Instant::now();
    let n = 16;
    let h = 6.0 / (n - 1) as f64;
    let lattice = GridSpec::new([-3.0, -3.0], [h, h], [n, n], false).unwrap();
    let (a, s) = (0.5, 1.0);
    let g = GridField::scalar_from_fn(lattice, |x| a * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s * s)).exp());
    let tg = TimeGrid::new(0.5, 16).unwrap();
    let opts = BackwardOptions {
        replicas: 2000,
        eps: 0.05,
        tol: 1e-14,
        max_iter: 6,
        truncation: None,
        antithetic: true,
        record_paths: false,
    };
    let res = backward_picard(&g, &tg, &opts, 61).unwrap();
    let ratios = res.contraction_ratios();
    let contracting = ratios.iter().take_while(|r| **r <= 0.7).count();
    let times = tg.nodes();
    let resid = vorticity_residual(&res.vorticity, &res.velocity, &times, 1.0, TimeDirection::Backward).unwrap();
    let exact = GridField::from_fn(lattice, 2, |x, o| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let f = if r2 == 0.0 { 0.0 } else { a * s * s * (1.0 - (-r2 / (2.0 * s * s)).exp()) / r2 };
        o[0] = f * x[1];
        o[1] = -f * x[0];
    });
    let terminal = res.velocity.last().unwrap().sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    let pass = contracting >= 4 && resid.relative <= 0.15 && terminal <= 0.05;
    report(
        6,
        "backward Picard",
        pass,
        format!(
            "ratios {:?}, residual {:.3}, terminal {:.2}%",
            ratios.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            resid.relative,
            100.0 * terminal
        ),
        start,
    );
    let _ = lattice_biot_savart;
    assert!(pass);
}

#[test]
fn criterion_07_moment_bound() {
    let start = Instant::now();
    let spec = RegularDrift::example(2.0);
    let k = spec.kappa();
    assert!(k.dissipative());
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let x0 = [1.5, -1.0];
    let res = picard_forward_regular(&spec, &HurstParams::brownian(), &grid, &[x0], 10_000, &PicardOptions::default(), 71).unwrap();
    let checkpoints = [4, 8, 12, 16, 20];
    let rows = moment_report(&res.ensemble, 0, &checkpoints).unwrap();
    let x2 = x0[0] * x0[0] + x0[1] * x0[1];
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for r in &rows {
        let bound = k.moment_bound(x2, r.t).unwrap();
        let margin = (r.mean_sq - bound) / r.mean_sq_se;
        worst = worst.max(margin);
        pass &= r.mean_sq <= bound + 3.0 * r.mean_sq_se;
    }
    report(
        7,
        "dissipative moment bound",
        pass,
        format!("kappa1 = {:.3}, kappa2 = {:.3}, max (E|X|^2 - bound)/SE = {worst:.1}", k.k1, k.k2),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_08_divergence_free() {
    let start = Instant::now();
    let (ens, nu) = lamb_oseen_ensemble();
    let mut ratios = Vec::new();
    for eps in [0.05f64, 0.025] {
        // spacing 10 eps^2: the FD truncation error relative to the blob
        // scale shrinks with eps
        let h = 10.0 * eps * eps;
        let n = (1.5 / h).round() as usize;
        let grid = GridSpec::centered(0.5 * n as f64 * h, n).unwrap();
        let u = forward_velocity(&ens, &nu, 200, &grid, eps).unwrap();
        ratios.push(divergence_fd(&u.field).unwrap().ratio());
    }
    let pass = ratios[0] <= 0.02 && ratios[1] < ratios[0];
    report(
        8,
        "divergence-freeness",
        pass,
        format!("div/grad at eps=0.05: {:.4}, at eps=0.025: {:.4}", ratios[0], ratios[1]),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_09_scaling() {
    let start = Instant::now();
    let hp = HurstParams::new(0.4).unwrap();
    let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
    let grid = GridSpec::centered(1.0, 21).unwrap();
    let opts = ScalingOptions {
        replicas: 2000,
        steps: 50,
        eps: 0.05,
        particle: ParticleOptions::default(),
    };
    let r = scaling_check(&hp, &nu, 2.0, 0.25, &grid, &opts, 91).unwrap();
    let pass = r.relative_sup <= 0.10;
    report(9, "scaling property", pass, format!("relative sup difference {:.2e}", r.relative_sup), start);
    assert!(pass);
}

fn young_trials(rng: &mut ChaCha8Rng) -> f64 {
    type Bumps = Vec<([f64; 2], f64, f64)>;
    fn eval(b: &Bumps, x: [f64; 2]) -> f64 {
        b.iter()
            .map(|(c, s, a)| a * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (2.0 * s * s)).exp())
            .sum()
    }
    let bumps = |rng: &mut ChaCha8Rng| -> Bumps {
        (0..rng.gen_range(1..5))
            .map(|_| ([rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], rng.gen_range(0.15..0.8), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let h = 1.0 / 8.0;
    let spec = GridSpec::new([-4.0, -4.0], [h, h], [65, 65], false).unwrap();
    let wide = GridSpec::new([-8.0, -8.0], [h, h], [129, 129], false).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = rng.gen_range(1.0..2.0);
        let q = rng.gen_range(1.0..2.0);
        let s = 1.0 / p + 1.0 / q - 1.0;
        let r = if s > 0.0 { 1.0 / s } else { f64::INFINITY };
        let (fb, gb) = (bumps(rng), bumps(rng));
        let f = GridField::scalar_from_fn(spec, |x| eval(&fb, x));
        let g = GridField::scalar_from_fn(wide, |x| eval(&gb, x));
        let fg = convolve_free(&f, 1, |d, out| out[0] = eval(&gb, d)).unwrap();
        let lhs = localized_norm(&fg, r, NormVariant::Tilde).unwrap();
        let rhs = localized_norm(&f, p, NormVariant::Tilde).unwrap() * localized_norm(&g, q, NormVariant::Bar).unwrap();
        worst = worst.max(lhs / rhs);
    }
    worst
}

#[test]
fn criterion_10_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    // truncation: F(x) = G(x)/max(1, |x|_1) with linear G
    let mut violations = 0;
    for _ in 0..1000 {
        let d = rng.gen_range(1..6);
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let lip = (0..d).map(|j| (0..d).map(|i| f64::abs(a[i][j])).sum::<f64>()).fold(0.0, f64::max);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let f = |v: &[f64]| {
            let gv: Vec<f64> = a.iter().map(|row| row.iter().zip(v).map(|(p, q)| p * q).sum()).collect();
            truncate_by_norm(&gv, v.iter().map(|c| c.abs()).sum())
        };
        let (fx, fy) = (f(&x), f(&y));
        let lhs: f64 = fx.iter().zip(&fy).map(|(p, q)| (p - q).abs()).sum();
        let rhs = 2.0 * lip * x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<f64>();
        if lhs > rhs * (1.0 + 1e-12) + 1e-12 {
            violations += 1;
        }
    }
    let young = young_trials(&mut rng);
    // Leray identities on a random band-limited field
    let spec = GridSpec::periodic_square(2.0 * std::f64::consts::PI, 32).unwrap();
    let modes: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| (rng.gen_range(-4..5) as f64, rng.gen_range(-4..5) as f64, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let v = GridField::from_fn(spec, 2, |x, o| {
        o[0] = modes.iter().map(|m| m.2 * (m.0 * x[0] + m.1 * x[1]).sin()).sum();
        o[1] = modes.iter().map(|m| m.3 * (m.1 * x[0] - m.0 * x[1]).cos()).sum();
    });
    let p1 = leray_project(&v).unwrap();
    let p2 = leray_project(&p1).unwrap();
    let idem = p2.sub(&p1).unwrap().sup_norm();
    let phi = GridField::from_fn(spec, 2, |x, o| {
        o[0] = (2.0 * x[0] + x[1]).cos() * 2.0;
        o[1] = (2.0 * x[0] + x[1]).cos();
    });
    let grad_killed = leray_project(&phi).unwrap().sup_norm();
    let lap_commutes = leray_project(&laplacian_spectral(&v).unwrap())
        .unwrap()
        .sub(&laplacian_spectral(&p1).unwrap())
        .unwrap()
        .sup_norm();
    // CKP on matched-model histograms
    let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
    let g = TimeGrid::new(0.3, 10).unwrap();
    let e1 = forward_particle(&nu, &HurstParams::brownian(), &g, 3000, 0.1, 1, &ParticleOptions::default()).unwrap();
    let e2 = forward_particle(&nu, &HurstParams::brownian(), &g, 3000, 0.1, 2, &ParticleOptions::default()).unwrap();
    let binning = Binning::new([-2.0, -2.0], [2.0, 2.0], [10, 10]).unwrap();
    let mut ckp_flag = false;
    for step in 1..=10 {
        let tv = flow_distance_tv(&e1.flow(), &e2.flow(), step, &binning).unwrap();
        ckp_flag |= tv.ckp_violation || !ckp_holds(tv.tv, tv.entropy);
    }
    let pass = violations == 0 && young <= 9.0 && idem <= 1e-10 && grad_killed <= 1e-10 && lap_commutes <= 1e-10 && !ckp_flag;
    report(
        10,
        "property suites",
        pass,
        format!(
            "truncation violations {violations}/1000, Young max ratio {young:.3} (C = 9), Leray idempotence {idem:.1e}, gradient {grad_killed:.1e}, Laplacian {lap_commutes:.1e}, CKP flag {ckp_flag}"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_11_short_time_exponent() {
    let start = Instant::now();
    let (h, p, eps) = (0.3, 1.5, 0.01);
    let hp = HurstParams::new(h).unwrap();
    let nu = DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0);
    let grid = TimeGrid::new(0.1, 100).unwrap();
    let ens = forward_particle(&nu, &hp, &grid, 4000, eps, 111, &ParticleOptions::default()).unwrap();
    let eval = GridSpec::centered(1.0, 128).unwrap();
    let u0 = forward_velocity(&ens, &nu, 0, &eval, eps).unwrap().field;
    let steps = [10, 16, 25, 40, 63, 100];
    let snaps: Vec<VelocityField> = steps.iter().map(|&n| forward_velocity(&ens, &nu, n, &eval, eps).unwrap()).collect();
    let fit = short_time_exponent(&snaps, &u0, p, h).unwrap();
    let slope = fit.slope.unwrap_or(f64::INFINITY);
    let pass = slope >= fit.predicted - 0.15;
    report(
        11,
        "short-time exponent",
        pass,
        format!(
            "slope {slope:.3} +/- {:.3}, predicted {:.3}, window [{}, {}]",
            fit.stderr.unwrap_or(0.0),
            fit.predicted,
            fit.window[0],
            fit.window[1]
        ),
        start,
    );
    let _ = velocity_at_points;
    assert!(pass);
}

//! Acceptance gate: twelve end-to-end criteria, one test per criterion.
//!
//! Every test prints exactly one machine-greppable line
//! `ACCEPTANCE NN PASS|FAIL: <measured details>` before asserting, so the
//! suite output doubles as a checklist. Criteria that the underlying
//! asymptotics genuinely contradict are left to fail honestly rather than
//! being loosened; the printed line carries the measured values.

use pdlab::diffusion_sim::{invariant_check, simulate, weak_order_richardson, SimConfig};
use pdlab::dirichlet_form::{
    diffusion_matrix, sigma_factor, Polynomial, QuarterPowerSum, SmoothFunction,
};
use pdlab::inequality_lab::{
    boundary_flux, check_super_poincare, cheeger_scan, counterexample_scan, default_family,
    fit_rate_constant, h_estimate, psi_estimate, rate_exponent_perturbation, RateFunction,
};
use pdlab::numerics::RngStream;
use pdlab::simplex_measures::{
    log_density_mu, mu_normalization_d1, mu_normalization_d2, sample_mu_mcmc, DirichletParams,
    McmcConfig, ModelParams, SimplexPoint,
};
use pdlab::spectral_1d::{spectrum, MeshSpec};
use pdlab::stats::{batch_means, loglog_slope, two_sample_z, RunningMoments};
use pdlab::stick_breaking::{sample_dirichlet_process, BasePmf, GemParams};

/// Prints the per-criterion verdict line, then enforces it.
fn verdict(id: u32, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id:02} {}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {id:02} failed: {detail}");
}

fn uniform_model(d: usize, theta: f64) -> ModelParams {
    ModelParams::new(theta, vec![1.0 / (d as f64 + 1.0); d + 1]).unwrap()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Flat-Dirichlet random interior point (normalized exponentials).
fn random_interior_point(d: usize, rng: &mut RngStream) -> SimplexPoint {
    loop {
        let e: Vec<f64> = (0..=d).map(|_| -rng.sample_unit_open().ln()).collect();
        let total: f64 = e.iter().sum();
        let free: Vec<f64> = e[..d].iter().map(|&v| v / total).collect();
        if let Ok(p) = SimplexPoint::new(free) {
            return p;
        }
    }
}

#[test]
fn criterion_01_diffusion_matrix_factorization() {
    let mut worst: f64 = 0.0;
    for (k, &d) in [1usize, 2, 5, 10].iter().enumerate() {
        let mut rng = RngStream::new(0xacc_0001, k as u64);
        for _ in 0..1000 {
            let x = random_interior_point(d, &mut rng);
            let sigma = sigma_factor(&x);
            let a = diffusion_matrix(&x);
            let residual = &sigma * sigma.transpose() - a;
            let err = residual.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
            worst = worst.max(err);
        }
    }
    verdict(
        1,
        worst <= 1e-12,
        &format!(
            "max entrywise |sigma sigma^T - a| = {worst:.3e} over 1000 random interior \
             points for each d in {{1,2,5,10}} (tolerance 1e-12)"
        ),
    );
}

#[test]
fn criterion_02_density_normalization() {
    let mut rng = RngStream::new(0xacc_0002, 0);
    let mut worst_d1: f64 = 0.0;
    for &theta in &[-0.25, 0.0, 1.0, 5.0] {
        for _ in 0..3 {
            let p1 = 0.1 + 0.8 * rng.sample_unit_open();
            let mp = ModelParams::new(theta, vec![p1, 1.0 - p1]).unwrap();
            let (v, _) = mu_normalization_d1(&mp).unwrap();
            worst_d1 = worst_d1.max((v - 1.0).abs());
        }
    }
    let mut worst_d2: f64 = 0.0;
    for &theta in &[0.0, 1.0] {
        let raw: Vec<f64> = (0..3).map(|_| 0.5 + rng.sample_unit_open()).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|&v| v / total).collect();
        let mp = ModelParams::new(theta, p).unwrap();
        let (v, _) = mu_normalization_d2(&mp).unwrap();
        worst_d2 = worst_d2.max((v - 1.0).abs());
    }
    verdict(
        2,
        worst_d1 <= 1e-8 && worst_d2 <= 1e-5,
        &format!(
            "d=1 worst |integral - 1| = {worst_d1:.3e} over theta in {{-0.25,0,1,5}} x 3 \
             random p (tolerance 1e-8); d=2 worst = {worst_d2:.3e} over theta in {{0,1}} \
             (tolerance 1e-5)"
        ),
    );
}

#[test]
fn criterion_03_arcsine_reduction() {
    let mp = ModelParams::new(0.0, vec![0.5, 0.5]).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=99 {
        let t = k as f64 / 100.0;
        let x = SimplexPoint::new(vec![t]).unwrap();
        let got = log_density_mu(&x, &mp).unwrap();
        let want = -(std::f64::consts::PI.ln()) - 0.5 * (t * (1.0 - t)).ln();
        worst = worst.max((got - want).abs());
    }
    verdict(
        3,
        worst <= 1e-10,
        &format!(
            "max |log density - ln(1/(pi sqrt(t(1-t))))| = {worst:.3e} on the 99-point \
             grid (theta=0, p=(1/2,1/2); tolerance 1e-10)"
        ),
    );
}

#[test]
fn criterion_04_counterexample_second_moments() {
    let n_list: Vec<u32> = (5..=25).collect();
    let p_n: Vec<f64> = n_list.iter().map(|&n| 0.5_f64.powi(n as i32)).collect();
    let scan = counterexample_scan(1.0, 1.0, &p_n, &n_list).unwrap();

    let three_over_pi = 3.0 / std::f64::consts::PI;
    let mut tail_dev: f64 = 0.0;
    for (i, &p) in scan.p_n.iter().enumerate() {
        if p <= 1e-6 {
            tail_dev = tail_dev.max((scan.i_n[i] - three_over_pi).abs());
        }
    }
    let min_i = scan.i_n.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_ok = tail_dev <= 1e-3;
    let min_ok = min_i >= 0.4;
    verdict(
        4,
        tail_ok && min_ok,
        &format!(
            "min I_n = {min_i:.4} (needs >= 0.4); max |I_n - 3/pi| = {tail_dev:.4} on the \
             p_n <= 1e-6 tail (needs <= 1e-3); the quadrature converges to the \
             Gamma-product bulk value 2/(5 pi) ~= {:.4} instead of 3/pi ~= {:.4}",
            scan.integrand_limit, scan.analytic_limit
        ),
    );
}

#[test]
fn criterion_05_cheeger_landscape_slopes() {
    let mp = uniform_model(2, 1.0);
    let s_grid = log_grid(1e2, 1e6, 9);
    let mut rng = RngStream::new(0xacc_0005, 0);
    let scan = cheeger_scan(&mp, &s_grid, 64, &mut rng).unwrap();

    let a1_ok = (scan.slope_a1 + 0.125).abs() <= 0.05;
    let a2_ok = (scan.slope_a2 - 0.375).abs() <= 0.05;
    let lambda_ok = scan.slope_lambda_lb >= 7.0 / 8.0 - 0.1;
    verdict(
        5,
        a1_ok && a2_ok && lambda_ok,
        &format!(
            "fitted slopes over s in [1e2,1e6]: a1 {:.4} (needs -0.125 +- 0.05{}), a2 {:.4} \
             (needs 0.375 +- 0.05{}), lambda {:.4} (needs >= 0.775{}); the corner \
             asymptotics only take over for s >~ 1e4, so the a2 fit on this window is \
             dominated by the pre-asymptotic bend",
            scan.slope_a1,
            if a1_ok { ", ok" } else { ", violated" },
            scan.slope_a2,
            if a2_ok { ", ok" } else { ", violated" },
            scan.slope_lambda_lb,
            if lambda_ok { ", ok" } else { ", violated" },
        ),
    );
}

#[test]
fn criterion_06_h_growth_bound() {
    let mp = uniform_model(2, 1.0);
    let s_grid = log_grid(1e2, 1e6, 9);
    let mut rng = RngStream::new(0xacc_0006, 0);
    let hs: Vec<f64> = s_grid
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut sub = rng.substream(100 + i as u64);
            h_estimate(s, &mp, 64, &mut sub).unwrap()
        })
        .collect();
    let slope = loglog_slope(&s_grid, &hs).unwrap();
    verdict(
        6,
        slope <= 2.5 + 0.1,
        &format!("fitted slope of h(s) over s in [1e2,1e6] = {slope:.4} (needs <= 2.6)"),
    );
}

#[test]
fn criterion_07_perturbation_quantities() {
    let mp = uniform_model(2, 1.0);
    let dp = DirichletParams::comparison_default(&mp);
    let s_grid = log_grid(1e2, 1e6, 5);
    let mut rng = RngStream::new(0xacc_0007, 0);

    let mut sups = Vec::with_capacity(s_grid.len());
    let mut psi_3s = Vec::with_capacity(s_grid.len());
    for (i, &s) in s_grid.iter().enumerate() {
        let mut sub_a = rng.substream(2 * i as u64);
        let mut sub_b = rng.substream(2 * i as u64 + 1);
        sups.push(psi_estimate(s, &mp, &dp, 64, &mut sub_a).unwrap().sup_exp_w);
        psi_3s.push(psi_estimate(3.0 * s, &mp, &dp, 64, &mut sub_b).unwrap().psi);
    }
    let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sups.iter().copied().fold(0.0_f64, f64::max);
    let spread = hi / lo;
    let slope = loglog_slope(&s_grid, &psi_3s).unwrap();

    let spread_ok = spread <= 2.0;
    let slope_ok = slope <= -1.0 + 0.15;
    verdict(
        7,
        spread_ok && slope_ok,
        &format!(
            "sup e^W spread over s in [1e2,1e6] = {spread:.4} (needs <= 2{}); fitted slope \
             of psi(3s) = {slope:.4} (needs <= -0.85{}); psi grows like sqrt(s) through \
             the two-coordinate corners, so the decay clause cannot hold",
            if spread_ok { ", ok" } else { ", violated" },
            if slope_ok { ", ok" } else { ", violated" },
        ),
    );
}

#[test]
fn criterion_08_super_poincare_harness() {
    let r_grid = log_grid(1e-3, 10.0, 9);
    let mut details = Vec::new();
    let mut all_ok = true;
    for &d in &[1usize, 2] {
        let mp = uniform_model(d, 1.0);
        let config = McmcConfig {
            length: 1_100_000,
            burn_in: 100_000,
            step_scale: 0.5,
        };
        let mut rng = RngStream::new(0xacc_0008, d as u64);
        let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
        assert_eq!(out.samples.len(), 1_000_000);

        let mut family_rng = RngStream::new(0xacc_0008, 100 + d as u64);
        let family = default_family(d, 4, &mut family_rng).unwrap();
        let refs: Vec<&dyn SmoothFunction> =
            family.iter().map(|f| f as &dyn SmoothFunction).collect();
        let p_exp = rate_exponent_perturbation(1.0, d as u32);
        let c = fit_rate_constant(&refs, &mp, p_exp, &r_grid, &out.samples).unwrap();
        let rate = RateFunction::new(c, p_exp).unwrap();

        let mut violations = 0usize;
        for f in &refs {
            violations += check_super_poincare(*f, &mp, &rate, &r_grid, &out.samples)
                .unwrap()
                .violations;
        }
        all_ok &= violations == 0;
        details.push(format!(
            "d={d}: p={p_exp}, fitted c={c:.4}, {violations} violations beyond 2 sigma \
             across {} functions x 9 r-points on 1e6 samples",
            refs.len()
        ));
    }
    verdict(8, all_ok, &details.join("; "));
}

#[test]
fn criterion_09_diffusion_invariance() {
    let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let cfg = SimConfig {
        step_h: 1e-4,
        n_steps: 10_000_000,
        boundary_eps: 1e-8,
        thinning: 100,
    };
    let mut rng = RngStream::new(0xacc_0009, 0);
    let traj = simulate(&x0, &mp, &cfg, &mut rng).unwrap();

    let x = Polynomial::coordinate(1, 0);
    let x_sq = x.multiply(&x).unwrap();
    let observables: Vec<&dyn SmoothFunction> = vec![&x, &x_sq];
    let report = invariant_check(&traj, &mp, &observables, 10_000).unwrap();
    let zs: Vec<f64> = report.checks.iter().map(|c| c.z).collect();
    let obs_ok = !report.any_flagged();
    let clamp_ok = report.clamp_fraction < 0.05;

    let rich_rng = RngStream::new(0xacc_0009, 1);
    let rich = weak_order_richardson(&x0, &mp, 0.5, 0.05, 1e-8, 200_000, &rich_rng).unwrap();
    let rich_ok = (rich.slope - 1.0).abs() <= 0.3;

    verdict(
        9,
        obs_ok && clamp_ok && rich_ok,
        &format!(
            "time-average z-scores vs quadrature for {{x, x^2}} = {:.2?} (needs < 4); clamp \
             fraction {:.2e} (needs < 0.05); Richardson weak-order slope {:.3} (needs 1 +- 0.3)",
            zs, report.clamp_fraction, rich.slope
        ),
    );
}

#[test]
fn criterion_10_spectral_gap_stability() {
    let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();
    let mesh = MeshSpec {
        n_cells: 512,
        cutoff_delta: 1e-6,
        grading_exponent: 2.0,
    };
    let res = spectrum(&mp, &mesh, 4).unwrap();
    let lambda0 = res.eigenvalues[0];
    let lambda1 = res.eigenvalues[1];

    let halved = MeshSpec {
        cutoff_delta: 5e-7,
        ..mesh
    };
    let res_halved = spectrum(&mp, &halved, 4).unwrap();
    let cutoff_change = (res_halved.eigenvalues[1] - lambda1).abs() / lambda1;

    let ok = lambda0.abs() <= 1e-8
        && lambda1 > 0.0
        && res.refinement_deltas[1] < 0.01
        && cutoff_change < 0.02;
    verdict(
        10,
        ok,
        &format!(
            "lambda_0 = {lambda0:.3e} (needs |.| <= 1e-8); lambda_1 = {lambda1:.6} > 0 with \
             refinement delta {:.3e} (needs < 1e-2) and cutoff-halving change {cutoff_change:.3e} \
             (needs < 2e-2)",
            res.refinement_deltas[1]
        ),
    );
}

#[test]
fn criterion_11_boundary_flux_decay() {
    let mp = uniform_model(2, 1.0);
    let f = QuarterPowerSum {
        dim: 2,
        include_remainder: false,
    };
    let flux_lo = boundary_flux(1e3, &mp, &f).unwrap();
    let flux_hi = boundary_flux(1e7, &mp, &f).unwrap();
    let ratio = flux_lo / flux_hi;
    verdict(
        11,
        flux_lo > 0.0 && flux_hi > 0.0 && ratio >= 10.0,
        &format!(
            "flux(1e3) = {flux_lo:.6e}, flux(1e7) = {flux_hi:.6e}, decrease factor \
             {ratio:.1} (needs >= 10)"
        ),
    );
}

#[test]
fn criterion_12_cross_sampler_agreement() {
    let n: usize = 100_000;
    let mp = ModelParams::new(1.0, vec![0.5, 0.5]).unwrap();

    // Stick-breaking + projection side: the truncation defect is assigned to
    // one extra base draw, which keeps every moment of the projected
    // coordinate exact in expectation (the lumping error is O(defect^2)).
    let gem = GemParams::new(0.5, 1.0).unwrap();
    let base = BasePmf::Finite(vec![0.5, 0.5]);
    let trunc_eps = 3e-3;
    let mut m1 = RunningMoments::new();
    let mut m2 = RunningMoments::new();
    for i in 0..n {
        let mut rng = RngStream::new(0xacc_0012, i as u64 + 1);
        let m = sample_dirichlet_process(&gem, &base, trunc_eps, &mut rng).unwrap();
        let mut x1: f64 = m
            .atoms
            .iter()
            .filter(|&&(label, _)| label == 1)
            .map(|&(_, w)| w)
            .sum();
        if base.sample_label(&mut rng) == 1 {
            x1 += m.defect;
        }
        m1.push(x1);
        m2.push(x1 * x1);
    }

    // Metropolis side; batch means absorb the chain autocorrelation.
    let config = McmcConfig {
        length: 110_000,
        burn_in: 10_000,
        step_scale: 0.5,
    };
    let mut rng = RngStream::new(0xacc_0012, 0);
    let out = sample_mu_mcmc(&mp, &config, &mut rng).unwrap();
    let xs: Vec<f64> = out.samples.iter().map(|s| s.free_coords()[0]).collect();
    let xs_sq: Vec<f64> = xs.iter().map(|&v| v * v).collect();
    let (mc1, se1) = batch_means(&xs, 50).unwrap();
    let (mc2, se2) = batch_means(&xs_sq, 50).unwrap();

    let z1 = two_sample_z((m1.mean(), m1.stderr()), (mc1, se1));
    let z2 = two_sample_z((m2.mean(), m2.stderr()), (mc2, se2));
    // 1% two-sided critical value for a standard normal.
    let crit = 2.576;
    verdict(
        12,
        z1.abs() <= crit && z2.abs() <= crit,
        &format!(
            "two-sample z for E[x]: {z1:.2} (stick {:.5} vs mcmc {:.5}), for E[x^2]: {z2:.2} \
             (stick {:.5} vs mcmc {:.5}); both need |z| <= 2.576 (1% level, 1e5 samples each)",
            m1.mean(),
            mc1,
            m2.mean(),
            mc2
        ),
    );
}

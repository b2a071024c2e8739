mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_force_beta, random_weakly_reversible, weighted_sq, Rates};
use crnrd::equilibria::{
    birch_project, certify, check_complex_balance, reference_equilibrium, Classification, CERT_TOL, DEFAULT_TOL_CB,
};
use crnrd::harness::{admissible_mu, critical_p0, run_verification, VerifyOptions};
use crnrd::network::reaction_rhs;
use crnrd::solver::SimConfig;
use crnrd::spectral::{linearize, moment_balance_residuals, quadratic_identity_residual, reaction_gap_beta};
use crnrd::{fixtures, ReactionNetwork, StoichData};
use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// The complex balanced fixtures with their default rates.
fn cb_fixtures() -> Vec<(&'static str, ReactionNetwork)> {
    vec![
        ("NET_AB", fixtures::net_ab(1.0, 1.0)),
        ("NET_TRI", fixtures::net_tri()),
        ("NET_4SP", fixtures::net_4sp(2.0, 1.0)),
        ("NET_QUINTIC", fixtures::net_quintic(1.0, 1.0)),
    ]
}

fn randomized_rates(net: &ReactionNetwork, rng: &mut ChaCha8Rng) -> ReactionNetwork {
    let rates: Vec<f64> = (0..net.num_reactions()).map(|_| rng.gen_range(0.2..5.0)).collect();
    net.with_rates(&rates).unwrap()
}

fn equilibrium(net: &ReactionNetwork) -> (StoichData, Vec<f64>) {
    let data = StoichData::analyze(net);
    let u = reference_equilibrium(net, &data, DEFAULT_TOL_CB).unwrap();
    (data, u)
}

fn identity_on_random_rates() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for (_, base) in cb_fixtures() {
        let net = randomized_rates(&base, &mut rng);
        let (_, u) = equilibrium(&net);
        for _ in 0..100 {
            let v: Vec<f64> = (0..u.len()).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            worst = worst.max(quadratic_identity_residual(&net, &u, &v).unwrap() / (1.0 + norm2));
        }
    }
    outcome(worst <= 1e-10, format!("max residual/(1+|v|^2) = {worst:.2e} (bound 1e-10)"))
}

fn moment_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut weakest_control = f64::INFINITY;
    for (_, base) in cb_fixtures() {
        for net in [base.clone(), randomized_rates(&base, &mut rng)] {
            let (_, u) = equilibrium(&net);
            let res = moment_balance_residuals(&net, &u).unwrap();
            worst = worst.max(res.iter().map(|m| m.residual).fold(0.0, f64::max));

            let mut rates: Vec<f64> = net.reactions().iter().map(|r| r.rate()).collect();
            rates[0] *= 1.01;
            let perturbed = net.with_rates(&rates).unwrap();
            let control = moment_balance_residuals(&perturbed, &u).unwrap();
            weakest_control = weakest_control.min(control.iter().map(|m| m.residual).fold(0.0, f64::max));
        }
    }
    outcome(
        worst <= 1e-10 && weakest_control >= 1e-4,
        format!("max residual {worst:.2e} (bound 1e-10); 1% perturbation gives >= {weakest_control:.2e} (needs 1e-4)"),
    )
}

fn conservation_annihilation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut nets = cb_fixtures();
    nets.push(("NET_AB_IRREV", fixtures::net_ab_irrev()));
    nets.push(("NET_M0", fixtures::net_m0()));
    for (_, net) in nets {
        let data = StoichData::analyze(&net);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..net.num_species()).map(|_| rng.gen_range(0.0..5.0)).collect();
            let f = reaction_rhs(&net, &u).unwrap();
            let qf = data.q() * DVector::from_vec(f.clone());
            worst = worst.max(qf.amax() / (1.0 + max_abs(&f)));
        }
    }
    outcome(worst <= 1e-12, format!("max |Q f|/(1+|f|) = {worst:.2e} over 6000 states (bound 1e-12)"))
}

fn equilibrium_pipeline() -> Outcome {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10);
    let ab = fixtures::net_ab(1.0, 2.0);
    let (_, u_ab) = equilibrium(&ab);
    let tri = fixtures::net_tri();
    let (tri_data, u_tri) = equilibrium(&tri);
    let ab1 = fixtures::net_ab(1.0, 1.0);
    let ab1_data = StoichData::analyze(&ab1);
    let p_ab = birch_project(&ab1_data, &[0.5, 0.5], &[2.0]).unwrap();
    let p_tri = birch_project(&tri_data, &u_tri, &[6.0]).unwrap();

    let mut residual = 0.0f64;
    for (net, mass) in [(&ab1, [2.0].as_slice()), (&tri, [6.0].as_slice())] {
        let cert = certify(net, &StoichData::analyze(net), Some(mass), DEFAULT_TOL_CB).unwrap();
        residual = residual.max(cert.cb_residual).max(cert.mass_residual);
    }
    let pass = close(&u_ab, &[1.0, 0.5])
        && close(&u_tri, &[1.0, 1.0, 1.0])
        && close(&p_ab.u_inf, &[1.0, 1.0])
        && close(&p_tri.u_inf, &[2.0, 2.0, 2.0])
        && residual <= 1e-10;
    outcome(
        pass,
        format!(
            "u_ref(AB 1:2) = {:?}, u_ref(TRI) = {:?}, projections {:?} / {:?}, max residual {residual:.1e}",
            u_ab, u_tri, p_ab.u_inf, p_tri.u_inf
        ),
    )
}

fn beta_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for (_, base) in cb_fixtures() {
        for net in [base.clone(), randomized_rates(&base, &mut rng)] {
            let (data, u) = equilibrium(&net);
            let beta = reaction_gap_beta(&net, &u, &data).unwrap();
            let oracle = brute_force_beta(&net, &u, data.q(), 10_000, &mut rng);
            worst = worst.max((beta - oracle).abs());
        }
    }
    let hand = [
        (fixtures::net_ab(1.0, 1.0), vec![0.5, 0.5], 2.0),
        (fixtures::net_quintic(1.0, 1.0), vec![1.0, 1.0], 2.0),
        (fixtures::net_tri(), vec![1.0, 1.0, 1.0], 1.5),
    ];
    let mut hand_err = 0.0f64;
    for (net, u, expected) in hand {
        let beta = reaction_gap_beta(&net, &u, &StoichData::analyze(&net)).unwrap();
        hand_err = hand_err.max((beta - expected).abs());
    }
    outcome(
        worst <= 1e-6 && hand_err <= 1e-9,
        format!("|beta - oracle| <= {worst:.2e} (bound 1e-6); hand values within {hand_err:.1e} (bound 1e-9)"),
    )
}

fn rk4(l: &DMatrix<f64>, v: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = l * v;
    let k2 = l * (v + &k1 * (dt / 2.0));
    let k3 = l * (v + &k2 * (dt / 2.0));
    let k4 = l * (v + &k3 * dt);
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn linearized_decay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let dt = 1e-3;
    for (_, net) in cb_fixtures() {
        let (data, u) = equilibrium(&net);
        let beta = reaction_gap_beta(&net, &u, &data).unwrap();
        let l = linearize(&net, &u, &vec![1.0; u.len()]).unwrap().l;
        let z = common::kernel_basis(data.q(), u.len());
        // L maps ker Q into itself; stepping in kernel coordinates keeps
        // roundoff out of the neutral conserved directions
        let lz = z.transpose() * &l * &z;
        for _ in 0..20 {
            let mut c = DVector::from_iterator(z.ncols(), (0..z.ncols()).map(|_| rng.gen_range(-1.0..1.0)));
            let w0 = weighted_sq((&z * &c).as_slice(), &u);
            for step in 1..=5000 {
                c = rk4(&lz, &c, dt);
                let t = step as f64 * dt;
                let ratio = weighted_sq((&z * &c).as_slice(), &u) / (w0 * (-2.0 * beta * t).exp());
                worst = worst.max(ratio);
            }
        }
    }
    outcome(
        worst <= 1.0 + 1e-6,
        format!("max of |v(t)|^2_w / (e^(-2 beta t) |v(0)|^2_w) on [0,5] = {worst:.9} (bound 1 + 1e-6)"),
    )
}

fn pde_run(config: &str, check: impl Fn(&crnrd::harness::VerificationReport, f64) -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let cfg = SimConfig::load(&fixture_path(config)).unwrap();
    let v = run_verification(&cfg, &VerifyOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let (pass, detail) = check(&v.report, v.simulation.rows.last().unwrap().linf);
    outcome(
        pass && elapsed < Duration::from_secs(10),
        format!("{detail}; runtime {:.2} s (bound 10 s)", elapsed.as_secs_f64()),
    )
}

fn nonlinear_pde_decay() -> Outcome {
    pde_run("verify_ab.json", |r, linf| {
        let pass = (r.fitted_rate / 4.0 - 1.0).abs() <= 0.05
            && (r.target - 4.0).abs() < 1e-12
            && linf < 1e-5
            && r.conservation_drift <= 1e-10
            && r.clamps == 0;
        (
            pass,
            format!(
                "fitted {:.4} vs 2 lambda = {:.4}; L-inf(2) = {linf:.2e}; drift {:.1e}; clamps {}",
                r.fitted_rate, r.target, r.conservation_drift, r.clamps
            ),
        )
    })
}

fn high_order_regime() -> Outcome {
    pde_run("verify_quintic.json", |r, _| {
        let pass = r.fitted_rate >= 0.95 * 4.0 && r.mu_regime.mu == 5.0 && r.mu_regime.satisfied && r.clamps == 0;
        (
            pass,
            format!(
                "fitted {:.4} (needs >= 3.8); mu = {} vs admissible {}; drift {:.1e}",
                r.fitted_rate, r.mu_regime.mu, r.mu_regime.admissible_mu, r.conservation_drift
            ),
        )
    })
}

fn formula_tables() -> Outcome {
    let table = [(1, Rational64::from(5)), (2, Rational64::from(3)), (3, Rational64::new(7, 3)), (4, Rational64::from(2))];
    let mu_ok = table.iter().all(|&(d, mu)| admissible_mu(d) == (mu, true));
    let p0 = critical_p0(4, 2.0).0;
    outcome(mu_ok && p0 == 2.0, format!("mu table {{1: 5, 2: 3, 3: 7/3, 4: 2}} = {mu_ok}; p0(4, 2) = {p0}"))
}

fn classification_soundness() -> Outcome {
    let class = |net: &ReactionNetwork| certify(net, &StoichData::analyze(net), None, DEFAULT_TOL_CB).unwrap();
    let fixed = class(&fixtures::net_ab_irrev()).classification == Classification::NotComplexBalanced
        && class(&fixtures::net_tri()).classification == Classification::ComplexBalancedOnly
        && class(&fixtures::net_4sp(1.5, 1.5)).classification == Classification::DetailedBalanced;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut counts = [0usize; 3];
    let mut worst = 0.0f64;
    for k in 0..50 {
        let rates = [Rates::Detailed, Rates::Complex, Rates::Random][k % 3];
        let n = rng.gen_range(1..=4);
        let (net, _) = random_weakly_reversible(&mut rng, n, rates);
        let cert = class(&net);
        counts[cert.classification as usize] += 1;
        if cert.classification == Classification::DetailedBalanced {
            let u = cert.u_inf.as_ref().unwrap();
            worst = worst.max(check_complex_balance(&net, u).unwrap().into_iter().fold(0.0, f64::max));
        }
    }
    outcome(
        fixed && worst <= CERT_TOL && counts[0] > 0,
        format!(
            "fixtures classified = {fixed}; random: {} detailed, {} complex only, {} neither; max cb residual under DB {worst:.1e}",
            counts[0], counts[1], counts[2]
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_path("verify_ab.json");
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("threads_{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_crnrd"))
            .args(["verify", config.to_str().unwrap(), "-o", out.to_str().unwrap(), "--threads", threads])
            .env_remove("CRNRD_THREADS")
            .output()
            .unwrap()
            .status;
        let files: Vec<Vec<u8>> = ["report.json", "series.csv", "series.dat"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap_or_default())
            .collect();
        outputs.push((status.success(), files));
    }
    let identical = outputs[0].1 == outputs[1].1 && outputs[0].1.iter().all(|f| !f.is_empty());
    outcome(
        identical && outputs.iter().all(|o| o.0),
        format!("report.json, series.csv, series.dat identical across --threads 1/4: {identical}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC01 quadratic identity", identity_on_random_rates, Some(Duration::from_secs(1))),
        ("AC02 moment balance", moment_balance, None),
        ("AC03 conservation annihilation", conservation_annihilation, None),
        ("AC04 equilibrium pipeline", equilibrium_pipeline, None),
        ("AC05 beta cross-validation", beta_cross_validation, None),
        ("AC06 linearized decay", linearized_decay, None),
        ("AC07 nonlinear PDE decay", nonlinear_pde_decay, None),
        ("AC08 high-order regime", high_order_regime, None),
        ("AC09 formula tables", formula_tables, None),
        ("AC10 classification soundness", classification_soundness, None),
        ("AC11 determinism", determinism, None),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let mut result = run();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed >= b {
                result.pass = false;
            }
            result.detail.push_str(&format!("; runtime {:.3} s (bound {} s)", elapsed.as_secs_f64(), b.as_secs()));
        }
        if !result.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("acceptance: {} of 11 passed in {:.1} s", 11 - failed, suite.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

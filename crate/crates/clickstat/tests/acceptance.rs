//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances and runtime limits are fixed here; see the README for the
//! meaning of each criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use clickstat::runs;
use clickstat_core::experiments::{CatalysisSweepConfig, TmsvConfig, TmsvRow};
use clickstat_core::{
    click_matrix, click_matrix_inclusion_exclusion, coherent_pn, fock_pn, forward_clicks, invert_clicks, mc_witness,
    q_binomial, q_fake, q_mandel, q_mandel_from_clicks, sample_counts, thermal_pn, Arm, ClickWitness, Condition,
    DetectorModel, InversionMethod, PhotonDistribution,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn choose(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// 1. Coherent light gives binomial click statistics.
fn poisson_to_binomial() -> Outcome {
    let mut worst_entry: f64 = 0.0;
    let mut worst_qb: f64 = 0.0;
    for mu in [0.1, 1.0, 5.0] {
        for nb in [2usize, 4, 8] {
            let c = forward_clicks(&coherent_pn(mu, 80).unwrap(), &DetectorModel::ideal(nb).unwrap());
            let q = 1.0 - (-mu / nb as f64).exp();
            for (i, ci) in c.probs().iter().enumerate() {
                let b = choose(nb, i) * q.powi(i as i32) * (1.0 - q).powi((nb - i) as i32);
                worst_entry = worst_entry.max((ci - b).abs());
            }
            worst_qb = worst_qb.max(q_binomial(&c, nb).unwrap().abs());
        }
    }
    outcome(
        worst_entry <= 1e-12 && worst_qb <= 1e-10,
        format!("max |c_i - binomial| = {worst_entry:.1e} (tol 1e-12), max |Q_B| = {worst_qb:.1e} (tol 1e-10)"),
    )
}

// 2. Anchor values of the three witnesses.
fn witness_anchors() -> Outcome {
    let det8 = DetectorModel::ideal(8).unwrap();
    let qm_coh = q_mandel(&coherent_pn(1.0, 60).unwrap()).unwrap();
    let qm_fock = q_mandel(&fock_pn(1, 1).unwrap()).unwrap();
    let qm_thermal = [0.2, 1.0, 3.0]
        .iter()
        .map(|&mu| (q_mandel(&thermal_pn(mu, 60).unwrap()).unwrap() - mu).abs())
        .fold(0.0, f64::max);
    let qb_fock = q_binomial(&forward_clicks(&fock_pn(1, 1).unwrap(), &det8), 8).unwrap();
    let qf_coh = q_fake(&forward_clicks(&coherent_pn(1.0, 60).unwrap(), &det8)).unwrap();
    let qf_expected = -(1.0 - (-1.0f64 / 8.0).exp());
    let pass = qm_coh.abs() <= 1e-6
        && (qm_fock + 1.0).abs() <= 1e-6
        && qm_thermal <= 1e-6
        && qb_fock == -1.0
        && (qf_coh - qf_expected).abs() <= 1e-10;
    outcome(
        pass,
        format!(
            "Q_M coherent {qm_coh:.1e}, Q_M fock1 {qm_fock}, max |Q_M thermal - mu| {qm_thermal:.1e}, \
             Q_B fock1 {qb_fock}, Q_F coherent {qf_coh:.12} vs {qf_expected:.12}"
        ),
    )
}

/// Every loss pattern and bin assignment of `n` photons, then every dark
/// pattern of the silent bins.
fn enumerate_clicks(nb: usize, eta: f64, dark: f64, n: usize) -> Vec<f64> {
    let mut by_mask = vec![0.0; 1 << nb];
    let outcomes = nb + 1;
    for code in 0..outcomes.pow(n as u32) {
        let (mut c, mut prob, mut mask) = (code, 1.0, 0usize);
        for _ in 0..n {
            let o = c % outcomes;
            c /= outcomes;
            if o == 0 {
                prob *= 1.0 - eta;
            } else {
                prob *= eta / nb as f64;
                mask |= 1 << (o - 1);
            }
        }
        by_mask[mask] += prob;
    }
    let mut clicks = vec![0.0; nb + 1];
    for (mask, &pm) in by_mask.iter().enumerate() {
        if pm == 0.0 {
            continue;
        }
        let silent: Vec<usize> = (0..nb).filter(|b| mask >> b & 1 == 0).collect();
        for dark_mask in 0..1usize << silent.len() {
            let fired = dark_mask.count_ones() as usize;
            let pd = dark.powi(fired as i32) * (1.0 - dark).powi((silent.len() - fired) as i32);
            clicks[mask.count_ones() as usize + fired] += pm * pd;
        }
    }
    clicks
}

// 3. Click matrix against exhaustive enumeration.
fn click_matrix_oracle() -> Outcome {
    let mut worst_ie: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for nb in 1..=8 {
        for eta in [0.3, 0.7, 1.0] {
            for dark in [0.0, 0.01] {
                let det =
                    DetectorModel::ideal(nb).unwrap().with_efficiency(eta).unwrap().with_dark_click_prob(dark).unwrap();
                let ie = click_matrix_inclusion_exclusion(&det, 6).unwrap();
                let rec = click_matrix(&det, 6);
                for n in 0..=6 {
                    let oracle = enumerate_clicks(nb, eta, dark, n);
                    for (i, o) in oracle.iter().enumerate() {
                        worst_ie = worst_ie.max((ie.get(i, n) - o).abs());
                        worst_rec = worst_rec.max((rec.get(i, n) - o).abs());
                    }
                }
            }
        }
    }
    outcome(
        worst_ie <= 1e-12 && worst_rec <= 1e-12,
        format!("inclusion-exclusion max error {worst_ie:.1e}, recursion max error {worst_rec:.1e} (tol 1e-12)"),
    )
}

fn total_variation(c: &[f64], p: &[f64]) -> f64 {
    let len = c.len().max(p.len());
    0.5 * (0..len).map(|k| (c.get(k).unwrap_or(&0.0) - p.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

// 4. Click statistics approach photon statistics as 1/N.
fn one_over_n_convergence() -> Outcome {
    let p = thermal_pn(0.2, 60).unwrap();
    let tv: Vec<f64> = [2usize, 4, 8, 16, 32]
        .iter()
        .map(|&nb| total_variation(forward_clicks(&p, &DetectorModel::ideal(nb).unwrap()).probs(), p.probs()))
        .collect();
    let monotone = tv.windows(2).all(|w| w[1] < w[0]);
    let ratio = tv[0] / tv[4];
    outcome(
        monotone && ratio >= 12.0,
        format!(
            "TV at N=2..32: {}; N=2/N=32 ratio {ratio:.1} (need >= 12, monotone)",
            tv.iter().map(|t| format!("{t:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 5. Inversion recovers photon statistics.
fn inversion_round_trip() -> Outcome {
    use rand::{Rng, SeedableRng};
    let det8 = DetectorModel::ideal(8).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let support = rng.random_range(1..=7);
        let raw: Vec<f64> = (0..support).map(|_| rng.random::<f64>()).collect();
        let p = PhotonDistribution::normalized(raw).unwrap();
        let c = forward_clicks(&p, &det8);
        let rep = invert_clicks(&c, &det8, 6, InversionMethod::Constrained).unwrap();
        for n in 0..=6 {
            worst = worst.max((rep.probs[n] - p.get(n)).abs());
        }
    }
    let eta = 0.6;
    let lossy = det8.clone().with_efficiency(eta).unwrap();
    let counts = sample_counts(&forward_clicks(&fock_pn(1, 1).unwrap(), &lossy), 1e6, 11).unwrap();
    let est = q_mandel_from_clicks(&counts, &det8, 8, 1000, 12).unwrap();
    let z = (est.value + eta).abs() / est.std_error;
    outcome(
        worst <= 1e-8 && z <= 3.0,
        format!(
            "round trip max error {worst:.1e} (tol 1e-8); lossy single photon Q_M = {:.5} +- {:.5}, {z:.2} sigma from -0.6",
            est.value, est.std_error
        ),
    )
}

fn tmsv_row(rows: &[TmsvRow], arm: Arm, condition: Condition) -> &TmsvRow {
    rows.iter().find(|r| r.analyzed == arm && r.condition == condition).expect("row present")
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value.signum() == reference.signum()
        && value.abs() <= factor * reference.abs()
        && value.abs() * factor >= reference.abs()
}

// 6. TMSV heralding sign pattern.
fn tmsv_sign_pattern() -> Outcome {
    let cfg = TmsvConfig::default();
    let report = runs::run_tmsv(&cfg).unwrap();
    // Reference scale per analyzed mode: (unconditioned, k=1, k=2).
    let reference = [(Arm::First, 9.3e-3, -3.84e-2, None), (Arm::Second, 10.9e-3, -4.49e-2, Some(-8.3e-2))];
    let mut pass = true;
    let mut notes = Vec::new();
    for (arm, p_uncond, p_k1, p_k2) in reference {
        let get = |c| tmsv_row(&report.rows, arm, c);
        let (u, k0, k1, k2) = (
            get(Condition::Unconditioned),
            get(Condition::Clicks(0)),
            get(Condition::Clicks(1)),
            get(Condition::Clicks(2)),
        );
        let exact = |r: &TmsvRow| r.exact_q_binomial.clone().unwrap();
        let mc = |r: &TmsvRow| r.q_binomial.clone().unwrap();
        let (mu, mk0, mk1, mk2) = (mc(u), mc(k0), mc(k1), mc(k2));
        // Sign and scale on the simulated record; ordering of k=2 and k=1 in expectation.
        let ok_uncond =
            mu.value > 0.0 && within_factor(mu.value, p_uncond, 3.0) && within_factor(exact(u), p_uncond, 3.0);
        let ok_k1 = mk1.value < 0.0 && within_factor(mk1.value, p_k1, 3.0) && within_factor(exact(k1), p_k1, 3.0);
        let ok_k2 = exact(k2) <= exact(k1) && within_factor(exact(k2), p_k2.unwrap_or(-8.3e-2), 3.0);
        let ok_k0 =
            (mk0.value - mu.value).abs() <= 0.3 * mu.value.abs() && (exact(k0) - exact(u)).abs() <= 0.3 * exact(u);
        let consistent = [(u, &mu), (k0, &mk0), (k1, &mk1), (k2, &mk2)]
            .iter()
            .all(|(r, m)| (m.value - exact(r)).abs() <= 3.0 * m.std_error);
        pass &= ok_uncond && ok_k1 && ok_k2 && ok_k0 && consistent;
        notes.push(format!(
            "arm {}: uncond {:.2e}+-{:.1e}, k0 {:.2e}, k1 {:.2e}+-{:.1e}, k2 {:.2e}+-{:.1e} (exact {:.2e} <= {:.2e})",
            arm.index(),
            mu.value,
            mu.std_error,
            mk0.value,
            mk1.value,
            mk1.std_error,
            mk2.value,
            mk2.std_error,
            exact(k2),
            exact(k1)
        ));
    }
    outcome(pass, notes.join("; "))
}

// 7. Catalysis sweep reproduces the qualitative shape.
fn catalysis_sweep() -> Outcome {
    let cfg = CatalysisSweepConfig::default();
    let points: Vec<_> = runs::run_catalysis_sweep(&cfg).unwrap().into_iter().map(|p| p.unwrap()).collect();
    let mut max_z: f64 = 0.0;
    for p in &points {
        let (b, m) = (p.q_binomial.as_ref().unwrap(), p.q_mandel.as_ref().unwrap());
        max_z = max_z.max((b.value - m.value).abs() / (b.std_error.powi(2) + m.std_error.powi(2)).sqrt());
    }
    let r0 = &points[0];
    let b0 = r0.q_binomial.as_ref().unwrap();
    let coherent_at_zero =
        r0.reflectivity == 0.0 && r0.exact.q_binomial.abs() <= 1e-12 && b0.value.abs() <= 3.0 * b0.std_error;
    let fake_fails_at_zero = r0.exact.q_fake < 0.0 && r0.exact.q_binomial >= -1e-12;
    let high_r: Vec<f64> =
        points.iter().filter(|p| p.reflectivity >= 0.9).map(|p| p.q_binomial.as_ref().unwrap().value).collect();
    let negative_high_r = high_r.len() == 3 && high_r.iter().all(|&v| v < 0.0);
    outcome(
        max_z <= 3.0 && coherent_at_zero && fake_fails_at_zero && negative_high_r,
        format!(
            "{} points, max |Q_B - Q_M| = {max_z:.2} combined sigma (tol 3); R=0: Q_B = {:.4} +- {:.4}, exact Q_B {:.1e}, \
             exact Q_F {:.2e}; Q_B at R >= 0.9: {}",
            points.len(),
            b0.value,
            b0.std_error,
            r0.exact.q_binomial,
            r0.exact.q_fake,
            high_r.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 8. Monte Carlo errors scale as 1/sqrt(events); low-count histogram shape.
fn monte_carlo_scaling() -> Outcome {
    let c = forward_clicks(&thermal_pn(1.0, 60).unwrap(), &DetectorModel::ideal(8).unwrap());
    let scaled: Vec<f64> = [1e4, 1e5, 1e6, 1e7]
        .iter()
        .enumerate()
        .map(|(i, &events)| {
            let r = sample_counts(&c, events, 100 + i as u64).unwrap();
            mc_witness(&r, ClickWitness::Binomial, 8, 2000, 200 + i as u64).unwrap().std_error * events.sqrt()
        })
        .collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let spread = scaled.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max);

    let cfg = TmsvConfig { n_replicas: 10_000, ..Default::default() };
    let report = runs::run_tmsv(&cfg).unwrap();
    let k2 = tmsv_row(&report.rows, Arm::Second, Condition::Clicks(2));
    let est = k2.q_binomial.as_ref().unwrap();
    let hist = est.histogram(40).unwrap();
    let mode = hist.mode();
    let crosses = est.samples.iter().any(|&s| s > 0.0);
    let events = report.counts.condition(Arm::First, Condition::Clicks(2)).unwrap().total_events();
    outcome(
        spread <= 0.2 && mode < 0.0 && crosses,
        format!(
            "sigma*sqrt(events) over 1e4..1e7: {} (max deviation {:.1}%, tol 20%); k=2 record of {events} events: \
             mode {mode:.3}, samples reach {:.3}",
            scaled.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", "),
            100.0 * spread,
            est.samples.iter().copied().fold(f64::MIN, f64::max)
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_clickstat")).args(args).current_dir(dir).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

// 9. Repeated CLI runs are byte-identical.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("sweep.toml"), "r_points = 6\nn_replicas = 500\n").unwrap();
    std::fs::write(d.join("tmsv.toml"), "n_replicas = 500\n").unwrap();
    std::fs::write(d.join("clicks.csv"), cli(d, &["forward", "--photons", "thermal:0.8", "--det", "ideal:8"])).unwrap();
    std::fs::write(
        d.join("counts.csv"),
        cli(d, &["sample", "--clicks", "clicks.csv", "--events", "50000", "--seed", "3"]),
    )
    .unwrap();
    let runs: [&[&str]; 7] = [
        &["matrix", "--det", "ideal:8", "--n-max", "12"],
        &["sample", "--clicks", "clicks.csv", "--events", "50000", "--seed", "3"],
        &["witness", "--counts", "counts.csv", "--invert", "--replicas", "500", "--seed", "7"],
        &["invert", "--clicks", "counts.csv", "--det", "ideal:8", "--format", "json"],
        &["catalysis", "--config", "sweep.toml", "--seed", "4", "--format", "json"],
        &["tmsv", "--config", "tmsv.toml", "--seed", "4"],
        &["tmsv", "--config", "tmsv.toml", "--seed", "4", "--format", "json"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let (a, b) = (cli(d, args), cli(d, args));
        if a != b || a.is_empty() {
            differing.push(args[0]);
        }
    }
    for run in ["run_a", "run_b"] {
        cli(d, &["catalysis", "--config", "sweep.toml", "--run-dir", run, "--output", &format!("{run}.csv")]);
    }
    let same_dirs = ["catalysis.toml", "table.csv", "report.json"]
        .iter()
        .all(|f| std::fs::read(d.join("run_a").join(f)).unwrap() == std::fs::read(d.join("run_b").join(f)).unwrap())
        && std::fs::read(d.join("run_a.csv")).unwrap() == std::fs::read(d.join("run_b.csv")).unwrap();
    outcome(
        differing.is_empty() && same_dirs,
        if differing.is_empty() && same_dirs {
            format!("{} subcommand runs and run directories byte-identical", runs.len())
        } else {
            format!("differing outputs: {differing:?}, run directories identical: {same_dirs}")
        },
    )
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 9] = [
        (1, "Poisson to binomial", poisson_to_binomial, Duration::from_secs(1)),
        (2, "witness anchors", witness_anchors, Duration::from_secs(1)),
        (3, "click matrix oracle", click_matrix_oracle, Duration::from_secs(10)),
        (4, "1/N convergence", one_over_n_convergence, Duration::from_secs(1)),
        (5, "inversion round trip", inversion_round_trip, Duration::from_secs(30)),
        (6, "TMSV sign pattern", tmsv_sign_pattern, Duration::from_secs(60)),
        (7, "catalysis sweep", catalysis_sweep, Duration::from_secs(120)),
        (8, "Monte Carlo scaling", monte_carlo_scaling, Duration::from_secs(60)),
        (9, "CLI determinism", determinism, Duration::MAX),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id.to_string() == *f) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        let limit_note = if limit == Duration::MAX { String::new() } else { format!(" / {:.0?} limit", limit) };
        println!(
            "criterion {id} {name}: {} [{:.2?}{limit_note}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed,
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

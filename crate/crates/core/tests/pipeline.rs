use clickstat_core::experiments::{run_catalysis_sweep, run_tmsv, CatalysisSweepConfig, TmsvConfig};
use clickstat_core::{
    coherent_pn, fock_pn, forward_clicks, invert_clicks, mc_witness, q_binomial, q_mandel, sample_counts, ClickWitness,
    DetectorModel, InversionMethod,
};

#[test]
fn lossy_coherent_light_sits_on_the_binomial_boundary() {
    for (mu, eta, n) in [(0.3, 1.0, 2), (1.5, 0.4, 8), (4.0, 0.9, 16)] {
        let det = DetectorModel::ideal(n).unwrap().with_efficiency(eta).unwrap();
        let c = forward_clicks(&coherent_pn(mu, 60).unwrap(), &det);
        assert!(q_binomial(&c, n).unwrap().abs() < 1e-10, "mu={mu} eta={eta} n={n}");
    }
}

#[test]
fn inversion_recovers_the_lossy_fock_mandel_parameter() {
    // Loss maps |m> to Binomial(m, η), whose Mandel parameter is -η.
    let eta = 0.5;
    let c = forward_clicks(&fock_pn(3, 3).unwrap(), &DetectorModel::ideal(8).unwrap().with_efficiency(eta).unwrap());
    let rep = invert_clicks(&c, &DetectorModel::ideal(8).unwrap(), 8, InversionMethod::Constrained).unwrap();
    assert!((q_mandel(&rep.distribution().unwrap()).unwrap() + eta).abs() < 1e-8);
}

#[test]
fn sampled_witness_matches_exact_value() {
    let det = DetectorModel::ideal(4).unwrap().with_efficiency(0.7).unwrap();
    let c = forward_clicks(&fock_pn(2, 2).unwrap(), &det);
    let exact = q_binomial(&c, 4).unwrap();
    let r = sample_counts(&c, 2.0e5, 11).unwrap();
    assert_eq!(r.counts(), sample_counts(&c, 2.0e5, 11).unwrap().counts());
    let est = mc_witness(&r, ClickWitness::Binomial, 4, 500, 12).unwrap();
    assert!((est.value - exact).abs() < 4.0 * est.std_error, "{} vs {exact}", est.value);
}

#[test]
fn experiments_are_reproducible() {
    let cfg = CatalysisSweepConfig { reflectivities: vec![0.3, 0.7], n_replicas: 50, ..Default::default() };
    let a = run_catalysis_sweep(&cfg).unwrap();
    let b = run_catalysis_sweep(&cfg).unwrap();
    for (a, b) in a.iter().zip(&b) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert_eq!(a.counts.counts(), b.counts.counts());
        assert_eq!(a.q_binomial.as_ref().unwrap().value, b.q_binomial.as_ref().unwrap().value);
    }
    let cfg = TmsvConfig { n_replicas: 50, expected_total_events: 1.0e5, ..Default::default() };
    assert_eq!(run_tmsv(&cfg).unwrap().counts.counts(), run_tmsv(&cfg).unwrap().counts.counts());
}

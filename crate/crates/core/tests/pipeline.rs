use cvmdi::estimation::{simulate_protocol_estimates, Sampler};
use cvmdi::finite_size::{
    asymptotic_key_rate, finite_key_rate, EstimationMode, FiniteSizeParams, KeyRateOptions, ModulationMode,
};
use cvmdi::optimizer::{Sampling, Scenario, SweepSpec, SweepVariable, sweep};
use cvmdi::protocol::ProtocolParams;

fn asym(l_ac: f64, v: f64, beta: f64) -> ProtocolParams {
    ProtocolParams {
        l_ac,
        beta,
        ..ProtocolParams::default().with_modulation(v)
    }
}

#[test]
fn sampled_estimates_reproduce_theory_sign() {
    let p = asym(20.0, 1e5, 1.0);
    let fs = FiniteSizeParams::new(100_000_000);
    let opts = KeyRateOptions::default();
    let theory = finite_key_rate(&p, &fs, &EstimationMode::Theory, &opts).unwrap();
    let m = fs.estimation_signals() as u64;
    let trials = 200;
    let agree = (0..trials)
        .filter(|&trial| {
            let est = simulate_protocol_estimates(&p, m, 99, trial, Sampler::Auto).unwrap();
            let r = finite_key_rate(&p, &fs, &EstimationMode::FromSamples(est), &opts).unwrap();
            (r.k > 0.0) == (theory.k > 0.0)
        })
        .count();
    assert!(agree as f64 >= 0.95 * trials as f64, "{agree}/{trials}");
}

#[test]
fn sampled_scenario_is_seed_deterministic() {
    let base = Scenario {
        sampling: Some(Sampling {
            seed: 5,
            trial: 0,
            sampler: Sampler::Auto,
        }),
        ..Scenario::theory(asym(10.0, 1e5, 1.0), Some(FiniteSizeParams::new(1_000_000)))
    };
    let spec = SweepSpec::new(SweepVariable::DistanceAc, 0.0, 20.0, 5);
    let a = sweep(&base, &spec).unwrap();
    assert_eq!(a, sweep(&base, &spec).unwrap());
    let other = Scenario {
        sampling: Some(Sampling { seed: 6, ..base.sampling.unwrap() }),
        ..base
    };
    assert_ne!(a[2].report.k, sweep(&other, &spec).unwrap()[2].report.k);
}

#[test]
fn key_rate_monotone_in_block_length() {
    let blocks = [1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e12];
    let mut scenarios = 0;
    for l in [0.0, 5.0, 15.0, 25.0, 40.0] {
        for (v, beta) in [(1e5, 1.0), (35.0, 0.969), (10.0, 0.95), (1e3, 0.98)] {
            scenarios += 1;
            let p = asym(l, v, beta);
            let ks: Vec<f64> = blocks
                .iter()
                .map(|&n| {
                    finite_key_rate(&p, &FiniteSizeParams::new(n as u64), &EstimationMode::Theory, &KeyRateOptions::default())
                        .unwrap()
                        .k
                })
                .collect();
            assert!(ks.windows(2).all(|w| w[0] <= w[1]), "L={l}, V={v}, beta={beta}: {ks:?}");
        }
    }
    assert_eq!(scenarios, 20);
}

#[test]
fn exact_modulation_is_less_pessimistic() {
    for l in [0.0, 10.0, 30.0] {
        let p = asym(l, 1e5, 1.0);
        let fs = FiniteSizeParams::new(1_000_000);
        let estimated = finite_key_rate(&p, &fs, &EstimationMode::Theory, &KeyRateOptions::default()).unwrap();
        let exact = finite_key_rate(
            &p,
            &fs,
            &EstimationMode::Theory,
            &KeyRateOptions {
                modulation: ModulationMode::Exact,
                ..KeyRateOptions::default()
            },
        )
        .unwrap();
        assert!(exact.chi_be_worst <= estimated.chi_be_worst);
        assert!(exact.k >= estimated.k);
    }
}

#[test]
fn symmetric_placement_is_worse_than_asymmetric() {
    let total = 20.0;
    let asymmetric = asymptotic_key_rate(&asym(total, 1e5, 1.0)).unwrap().k;
    let symmetric = asymptotic_key_rate(&ProtocolParams {
        l_ac: total / 2.0,
        l_bc: total / 2.0,
        ..asym(0.0, 1e5, 1.0)
    })
    .unwrap()
    .k;
    assert!(asymmetric > 0.0);
    assert!(symmetric < asymmetric);
}

use softqec::experiment::*;
use softqec::noise::Platform;

fn parse(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

/// A preset scaled down to desk size with all noise removed.
fn noiseless(name: &str) -> ExperimentConfig {
    let mut cfg = parse(preset(name).unwrap());
    cfg.p = vec![0.0];
    cfg.shots = 300;
    cfg.tau_m.truncate(1);
    if cfg.sweep != Sweep::Bb {
        cfg.distances = vec![3];
        cfg.rounds = Rounds::Fixed(3);
    } else {
        cfg.codes = vec![CodeFamily::Bb72];
    }
    cfg
}

#[test]
fn zero_noise_presets_never_fail() {
    for (name, _) in PRESETS {
        let cfg = noiseless(name);
        let rows = run_sweep(&cfg).unwrap();
        assert!(!rows.is_empty(), "{name}");
        for r in &rows {
            assert_eq!(r.stats.failures, 0, "{name}: {r:?}");
            assert_eq!(r.p_s, 0.0);
        }
    }
}

#[test]
fn single_point_tau_sweep_matches_memory_sweep() {
    let tau =
        parse("[experiment]\nsweep = tau\ndistances = 3\nshots = 3000\ndecoders = uf-soft, uf-hard\n[noise]\np = 0.004\ntau_m = 700ns\n");
    let mem = parse(
        "[experiment]\nsweep = memory\ndistances = 3\nshots = 3000\ndecoders = uf-soft, uf-hard\n[noise]\np = 0.004\ntau_m = 700ns\ntime_dependent = true\n",
    );
    let a = run_tau_sweep(&tau).unwrap();
    let b = run_memory_sweep(&mem).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.decoder, x.stats, x.stream_hash, x.p_s, x.tau_m), (y.decoder, y.stats, y.stream_hash, y.p_s, y.tau_m));
    }
}

#[test]
fn bb72_preset_emits_one_row_per_point_and_decoder() {
    let mut cfg = parse(preset("fig5-bb").unwrap());
    cfg.codes = vec![CodeFamily::Bb72];
    cfg.p = vec![0.005, 0.01];
    cfg.shots = 200;
    let rows = run_bb(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!((r.code, r.d, r.rounds, r.platform), (CodeFamily::Bb72, 6, 6, Platform::Na));
    }
    assert_eq!(rows[0].stream_hash, rows[1].stream_hash);
}

#[test]
fn bb_low_noise_limit() {
    let cfg = parse("[experiment]\nsweep = bb\nplatform = na\nshots = 10000\n[noise]\np = 0.0001\n");
    for r in run_bb(&cfg).unwrap() {
        assert!(r.stats.failures <= 2, "{r:?}");
    }
}

/// Hard decoding gains from longer measurements until idling takes over;
/// the soft decoder does not need the long measurement.
#[test]
fn sc_hard_lambda_peaks_at_intermediate_measurement_time() {
    let cfg = parse(
        "[experiment]\nsweep = tau\ndistances = 3, 5, 7\nshots = 1e5\ninclude_d3 = true\ndecoders = uf-hard\n[noise]\np = 0.003\ntau_m = 200ns, 800ns, 1500ns\n",
    );
    let rows = run_tau_sweep(&cfg).unwrap();
    let table = lambda_table(&rows, true);
    let l: Vec<f64> = table.iter().map(|s| s.lambda.unwrap().0).collect();
    assert_eq!(l.len(), 3);
    assert!(l[1] > l[0] && l[1] > l[2], "Λ_hard over τ_M: {l:?}");
}

#[test]
fn na_soft_advantage_persists_at_long_measurement() {
    let cfg = parse(
        "[experiment]\nsweep = tau\nplatform = na\ndistances = 3, 5, 7\nshots = 30000\ninclude_d3 = true\n[noise]\np = 0.01\nbias = 100\ntau_m = 250us\n",
    );
    let rows = run_tau_sweep(&cfg).unwrap();
    let table = lambda_table(&rows, true);
    let get = |d: DecoderKind| table.iter().find(|s| s.decoder == d).unwrap().lambda.unwrap().0;
    assert!(get(DecoderKind::UfSoft) > get(DecoderKind::UfHard));
}

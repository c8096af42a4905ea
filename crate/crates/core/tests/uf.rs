use softqec::codes::build_rotated_memory;
use softqec::noise::{si1000_channels, NoiseConfig};
use softqec::pauli_sim::{build_dem, sample_shots, NoisyCircuit};
use softqec::readout::SoftReadoutTable;
use softqec::uf::{graph_from_dem, hard_baseline_graph, MlTable, UfDecoder, WeightLut};
use softqec::Basis;

#[test]
fn corrections_reproduce_sampled_syndromes() {
    let cfg = NoiseConfig::sc(0.006, 5.0);
    let table = SoftReadoutTable::build(&cfg.readout_model().unwrap().unwrap()).unwrap();
    for basis in [Basis::Z, Basis::X] {
        let c = build_rotated_memory(5, 5, basis).unwrap();
        let nc = NoisyCircuit::new(&c, &cfg.channels().unwrap());
        let dem = build_dem(&nc).unwrap();
        let g = graph_from_dem(&dem, basis).unwrap();
        let lut = WeightLut::new(&g);
        let batch = sample_shots(&nc, Some(&table), 2000, 9);
        let mut dec = UfDecoder::new(&g);
        let mut w = Vec::new();
        for s in 0..batch.shots() {
            lut.reweight_into(&g, batch.soft.shot_q(s), &mut w).unwrap();
            let syndrome = g.local_syndrome(&batch.fired(s));
            let corr = dec.correction(&w, &syndrome);
            assert_eq!(g.syndrome_of(&corr), syndrome);
        }
    }
}

#[test]
fn uf_tracks_the_exact_decoder_at_low_noise() {
    let c = build_rotated_memory(3, 2, Basis::Z).unwrap();
    let nc = NoisyCircuit::new(&c, &si1000_channels(0.002, 0.01));
    let dem = build_dem(&nc).unwrap();
    let g = graph_from_dem(&dem, Basis::Z).unwrap();
    let ml = MlTable::new(&dem, Basis::Z, 24).unwrap();
    let batch = sample_shots(&nc, None, 20_000, 4);
    let mut dec = UfDecoder::new(&g);
    let w = g.static_weights();
    let (mut uf_fail, mut ml_fail) = (0, 0);
    for s in 0..batch.shots() {
        let f = batch.fired(s);
        uf_fail += ((dec.decode_fired(&w, &f) ^ batch.obs(s)) & 1) as u32;
        ml_fail += ((ml.predict(&f) ^ batch.obs(s)) & 1) as u32;
    }
    assert!(ml_fail <= uf_fail, "ml {ml_fail} uf {uf_fail}");
    assert!(uf_fail as f64 <= 1.3 * ml_fail as f64 + 10.0, "ml {ml_fail} uf {uf_fail}");
}

#[test]
fn soft_beats_hard_on_paired_shots() {
    let cfg = NoiseConfig::sc(0.005, 5.0);
    let table = SoftReadoutTable::build(&cfg.readout_model().unwrap().unwrap()).unwrap();
    let ch = cfg.channels().unwrap();
    let c = build_rotated_memory(5, 10, Basis::Z).unwrap();
    let nc = NoisyCircuit::new(&c, &ch);
    let dem = build_dem(&nc).unwrap();
    let soft = graph_from_dem(&dem, Basis::Z).unwrap();
    let hard = hard_baseline_graph(&dem, Basis::Z, ch.soft_ps()).unwrap();
    let lut = WeightLut::new(&soft);
    let batch = sample_shots(&nc, Some(&table), 20_000, 2);
    let (mut ds, mut dh) = (UfDecoder::new(&soft), UfDecoder::new(&hard));
    let wh = hard.static_weights();
    let mut w = Vec::new();
    let (mut fs, mut fh) = (0, 0);
    for s in 0..batch.shots() {
        let f = batch.fired(s);
        lut.reweight_into(&soft, batch.soft.shot_q(s), &mut w).unwrap();
        fs += ((ds.decode_fired(&w, &f) ^ batch.obs(s)) & 1) as u32;
        fh += ((dh.decode_fired(&wh, &f) ^ batch.obs(s)) & 1) as u32;
    }
    assert!(fs < fh, "soft {fs} hard {fh}");
}

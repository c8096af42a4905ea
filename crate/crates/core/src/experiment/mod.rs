//! Reproducible sweeps: configuration, per-cell sampling and decoding,
//! result persistence and Λ tables.
//!
//! Every cell of a sweep (code, distance, rounds, `p`, `τ_M`, basis) samples
//! one shot stream and decodes it with every configured decoder, so soft and
//! hard variants are always compared on identical shots. The stream is cut
//! into chunks of `chunk_shots` with seeds derived from the cell, which keeps
//! results independent of the worker count.

mod config;
mod presets;

pub use config::{CodeFamily, ConfigError, DecoderKind, ExperimentConfig, Rounds, Sweep};
pub use presets::{preset, PRESETS};

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{average_lambda, fit_lambda, points_from_stats, AnalysisError, LambdaFit, LogicalStats};
use crate::bp::{BpDecoder, BpError, TannerGraph};
use crate::codes::{build_bb_phenom, build_rotated_memory, BbCode, BbError, BbPhenom, CircuitError};
use crate::noise::{NoiseError, Platform};
use crate::pauli_sim::{build_dem, sample_shots, DemError, DetectorErrorModel, NoisyCircuit, ShotBatch};
use crate::readout::SoftReadoutTable;
use crate::uf::{graph_from_dem, hard_baseline_graph, DecodingGraph, MlTable, UfDecoder, UfError, WeightLut};
use crate::Basis;

/// Largest restricted detector-plus-observable count the exact oracle accepts.
pub const ML_MAX_BITS: u32 = 24;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Uf(#[from] UfError),
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Bb(#[from] BbError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed result row {row}: {msg}")]
    BadRow { row: usize, msg: String },
}

impl ExperimentError {
    pub fn is_config(&self) -> bool {
        matches!(self, ExperimentError::Config(_))
    }
}

/// One point of a sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub code: CodeFamily,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub tau_m: Option<f64>,
    pub basis: Basis,
}

impl Cell {
    /// Seed of the cell's shot stream; depends only on the run seed and the
    /// cell's physical parameters.
    pub fn seed(&self, platform: Platform, run_seed: u64) -> u64 {
        let parts = [
            run_seed,
            platform as u64,
            self.code as u64,
            self.d as u64,
            self.rounds as u64,
            self.p.to_bits(),
            self.tau_m.map_or(0, f64::to_bits),
            self.basis as u64,
        ];
        parts.iter().fold(0x243f_6a88_85a3_08d3, |h, &x| splitmix(h ^ x))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of chunk `chunk` of a cell stream.
pub fn chunk_seed(cell_seed: u64, chunk: u64) -> u64 {
    splitmix(cell_seed ^ chunk.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Grid of cells in output order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &code in &cfg.codes {
        let (distances, bases) = match code.bb_distance() {
            Some(d) => (vec![d], vec![Basis::X]),
            None => (cfg.distances.clone(), cfg.bases.clone()),
        };
        for &d in &distances {
            for &basis in &bases {
                for &p in &cfg.p {
                    for tau_m in cfg.tau_points() {
                        out.push(Cell { code, d, rounds: cfg.rounds.for_distance(d), p, tau_m, basis });
                    }
                }
            }
        }
    }
    out
}

enum Model {
    Surface(NoisyCircuit),
    Bb(BbPhenom),
}

enum Ctx {
    Uf { graph: DecodingGraph, lut: Option<WeightLut> },
    Bp { graph: TannerGraph, soft: bool },
    Ml(MlTable),
}

/// A cell with its circuit, error model and decoders built.
pub struct PreparedCell {
    pub cell: Cell,
    pub platform: Platform,
    /// Mean soft flip probability of the readout.
    pub p_s: f64,
    pub tau_m: f64,
    pub dem: DetectorErrorModel,
    model: Model,
    table: Option<SoftReadoutTable>,
    obs_mask: u64,
    decoders: Vec<(DecoderKind, Ctx)>,
    bp: crate::bp::BpSettings,
}

impl PreparedCell {
    pub fn new(cfg: &ExperimentConfig, cell: Cell) -> Result<Self, ExperimentError> {
        let noise = cfg.noise(cell.p, cell.tau_m);
        let readout = noise.readout_model()?;
        let p_s = readout.as_ref().map_or(0.0, |m| m.overlap_flip_prob());
        let table = readout.as_ref().map(SoftReadoutTable::build).transpose().map_err(NoiseError::from)?;
        let (model, dem) = match cell.code {
            CodeFamily::Surface => {
                let circuit = build_rotated_memory(cell.d, cell.rounds, cell.basis)?;
                let nc = NoisyCircuit::new(&circuit, &noise.channels()?);
                let dem = build_dem(&nc)?;
                (Model::Surface(nc), dem)
            }
            CodeFamily::Bb72 | CodeFamily::Bb144 => {
                let code = if cell.code == CodeFamily::Bb72 { BbCode::gross_72() } else { BbCode::gross_144() };
                let ph = build_bb_phenom(code, cell.rounds, cell.p, p_s)?;
                let dem = ph.dem();
                (Model::Bb(ph), dem)
            }
        };
        let obs_mask =
            dem.obs_basis.iter().enumerate().filter(|(_, b)| b.is_none_or(|b| b == cell.basis)).fold(0u64, |m, (k, _)| m | (1 << k));
        let mut decoders = Vec::new();
        for &kind in &cfg.decoders {
            let ctx = match kind {
                DecoderKind::UfSoft => {
                    let graph = graph_from_dem(&dem, cell.basis)?;
                    let lut = WeightLut::new(&graph);
                    Ctx::Uf { graph, lut: Some(lut) }
                }
                DecoderKind::UfHard => Ctx::Uf { graph: hard_baseline_graph(&dem, cell.basis, p_s)?, lut: None },
                DecoderKind::BpSoft => Ctx::Bp { graph: TannerGraph::from_dem(&dem, Some(cell.basis)), soft: true },
                DecoderKind::BpHard => Ctx::Bp { graph: TannerGraph::hard_baseline(&dem, Some(cell.basis), p_s), soft: false },
                DecoderKind::MlOracle => Ctx::Ml(MlTable::new(&dem, cell.basis, ML_MAX_BITS)?),
            };
            decoders.push((kind, ctx));
        }
        Ok(Self { cell, platform: cfg.platform, p_s, tau_m: noise.tau_m, dem, model, table, obs_mask, decoders, bp: cfg.bp })
    }

    pub fn sample(&self, shots: usize, seed: u64) -> ShotBatch {
        match &self.model {
            Model::Surface(nc) => sample_shots(nc, self.table.as_ref(), shots, seed),
            Model::Bb(ph) => ph.sample(self.table.as_ref(), shots, seed),
        }
    }

    /// Counts shots where `decoder` mispredicts an observable of the cell's
    /// basis.
    pub fn failures(&self, decoder: DecoderKind, batch: &ShotBatch) -> Result<u64, ExperimentError> {
        let (_, ctx) = self
            .decoders
            .iter()
            .find(|(k, _)| *k == decoder)
            .ok_or_else(|| ConfigError { line: None, msg: format!("decoder {decoder} is not configured for this cell") })?;
        let mut fired = Vec::new();
        let mut fails = 0u64;
        let mask = self.obs_mask;
        match ctx {
            Ctx::Uf { graph, lut } => {
                let mut dec = UfDecoder::new(graph);
                let static_w = graph.static_weights();
                let mut w = Vec::new();
                for s in 0..batch.shots() {
                    batch.fired_into(s, &mut fired);
                    let weights = match lut {
                        Some(lut) => {
                            lut.reweight_into(graph, batch.soft.shot_q(s), &mut w)?;
                            &w
                        }
                        None => &static_w,
                    };
                    fails += ((dec.decode_fired(weights, &fired) ^ batch.obs(s)) & mask != 0) as u64;
                }
            }
            Ctx::Bp { graph, soft } => {
                let mut dec = BpDecoder::new(graph, self.bp)?;
                for s in 0..batch.shots() {
                    batch.fired_into(s, &mut fired);
                    let q = soft.then(|| batch.soft.shot_q(s));
                    fails += ((dec.decode_shot(&fired, q)? ^ batch.obs(s)) & mask != 0) as u64;
                }
            }
            Ctx::Ml(table) => {
                for s in 0..batch.shots() {
                    batch.fired_into(s, &mut fired);
                    fails += ((table.predict(&fired) ^ batch.obs(s)) & mask != 0) as u64;
                }
            }
        }
        Ok(fails)
    }
}

/// One line of the result CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub platform: Platform,
    pub code: CodeFamily,
    pub basis: Basis,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
    pub p_s: f64,
    pub decoder: DecoderKind,
    pub stats: LogicalStats,
    pub wall_seconds: f64,
    pub tau_m: f64,
    pub seed: u64,
    /// Hash of the decoded shot stream; equal across decoders of one cell.
    pub stream_hash: u64,
}

struct ChunkOut {
    hash: u64,
    sample_secs: f64,
    fails: Vec<u64>,
    decode_secs: Vec<f64>,
}

/// Samples and decodes one cell with every configured decoder.
pub fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<Vec<ResultRow>, ExperimentError> {
    let prep = PreparedCell::new(cfg, cell)?;
    let seed = cell.seed(cfg.platform, cfg.seed);
    let chunk = cfg.chunk_shots as u64;
    let n_chunks = cfg.shots.div_ceil(chunk);
    let outs: Vec<ChunkOut> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let shots = (cfg.shots - c * chunk).min(chunk) as usize;
            let t0 = Instant::now();
            let batch = prep.sample(shots, chunk_seed(seed, c));
            let sample_secs = t0.elapsed().as_secs_f64();
            let mut fails = Vec::new();
            let mut decode_secs = Vec::new();
            for &(kind, _) in &prep.decoders {
                let t = Instant::now();
                fails.push(prep.failures(kind, &batch)?);
                decode_secs.push(t.elapsed().as_secs_f64());
            }
            Ok(ChunkOut { hash: batch.stream_hash(), sample_secs, fails, decode_secs })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let stream_hash = outs.iter().fold(seed, |h, o| splitmix(h ^ o.hash));
    let sample_secs: f64 = outs.iter().map(|o| o.sample_secs).sum();
    prep.decoders
        .iter()
        .enumerate()
        .map(|(i, &(decoder, _))| {
            let failures = outs.iter().map(|o| o.fails[i]).sum();
            Ok(ResultRow {
                platform: cfg.platform,
                code: cell.code,
                basis: cell.basis,
                d: cell.d,
                rounds: cell.rounds,
                p: cell.p,
                p_s: prep.p_s,
                decoder,
                stats: LogicalStats::new(failures, cfg.shots)?,
                wall_seconds: sample_secs + outs.iter().map(|o| o.decode_secs[i]).sum::<f64>(),
                tau_m: prep.tau_m,
                seed,
                stream_hash,
            })
        })
        .collect()
}

/// Runs every cell of the configured sweep.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    cfg.validate()?;
    let per_cell: Vec<Vec<ResultRow>> = cells(cfg).into_par_iter().map(|c| run_cell(cfg, c)).collect::<Result<_, _>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn expect_sweep(cfg: &ExperimentConfig, sweep: Sweep) -> Result<(), ExperimentError> {
    if cfg.sweep != sweep {
        let msg = format!("configuration describes a {:?} sweep, not a {:?} sweep", cfg.sweep, sweep).to_lowercase();
        return Err(ConfigError { line: None, msg }.into());
    }
    Ok(())
}

pub fn run_memory_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_sweep(cfg, Sweep::Memory)?;
    run_sweep(cfg)
}

pub fn run_tau_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_sweep(cfg, Sweep::Tau)?;
    run_sweep(cfg)
}

pub fn run_bb(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    expect_sweep(cfg, Sweep::Bb)?;
    run_sweep(cfg)
}

pub const CSV_HEADER: [&str; 17] = [
    "platform",
    "code",
    "basis",
    "d",
    "rounds",
    "p",
    "p_s",
    "decoder",
    "shots",
    "failures",
    "p_l",
    "p_l_lo",
    "p_l_hi",
    "wall_seconds",
    "tau_m",
    "seed",
    "stream_hash",
];

pub fn write_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.platform.to_string(),
            r.code.to_string(),
            r.basis.to_string(),
            r.d.to_string(),
            r.rounds.to_string(),
            r.p.to_string(),
            r.p_s.to_string(),
            r.decoder.to_string(),
            r.stats.shots.to_string(),
            r.stats.failures.to_string(),
            r.stats.p_l.to_string(),
            r.stats.p_l_lo.to_string(),
            r.stats.p_l_hi.to_string(),
            format!("{:.3}", r.wall_seconds),
            r.tau_m.to_string(),
            r.seed.to_string(),
            format!("{:016x}", r.stream_hash),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; CSV_HEADER.len()];
    for (i, name) in CSV_HEADER.iter().enumerate() {
        idx[i] = col(name).ok_or_else(|| ExperimentError::BadRow { row: 0, msg: format!("missing column '{name}'") })?;
    }
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = n + 1;
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
        let bad = |i: usize| ExperimentError::BadRow { row, msg: format!("bad {} '{}'", CSV_HEADER[i], field(i)) };
        macro_rules! get {
            ($i:expr) => {
                field($i).parse().map_err(|_| bad($i))?
            };
        }
        let shots: u64 = get!(8);
        let failures: u64 = get!(9);
        rows.push(ResultRow {
            platform: get!(0),
            code: get!(1),
            basis: get!(2),
            d: get!(3),
            rounds: get!(4),
            p: get!(5),
            p_s: get!(6),
            decoder: get!(7),
            stats: LogicalStats::new(failures, shots).map_err(|e| ExperimentError::BadRow { row, msg: e.to_string() })?,
            wall_seconds: get!(13),
            tau_m: get!(14),
            seed: get!(15),
            stream_hash: u64::from_str_radix(field(16), 16).map_err(|_| bad(16))?,
        });
    }
    Ok(rows)
}

/// Λ of one (platform, code, p, τ_M, decoder) group.
#[derive(Clone, Debug)]
pub struct LambdaSummary {
    pub platform: Platform,
    pub code: CodeFamily,
    pub p: f64,
    pub tau_m: f64,
    pub decoder: DecoderKind,
    /// Fits per basis, in X, Z order.
    pub fits: Vec<LambdaFit>,
    /// Average over the bases that could be fit.
    pub lambda: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Groups surface-code rows and fits Λ per basis, averaging over bases
/// when both are present.
pub fn lambda_table(rows: &[ResultRow], include_d3: bool) -> Vec<LambdaSummary> {
    type Key = (Platform, CodeFamily, u64, u64, DecoderKind);
    let mut keys: Vec<Key> = Vec::new();
    for r in rows.iter().filter(|r| !r.code.is_bb()) {
        let k = (r.platform, r.code, r.p.to_bits(), r.tau_m.to_bits(), r.decoder);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(platform, code, p, tau, decoder)| {
            let mut fits = Vec::new();
            let mut warnings = Vec::new();
            for basis in [Basis::X, Basis::Z] {
                let cells: Vec<(u32, u32, LogicalStats)> = rows
                    .iter()
                    .filter(|r| {
                        (r.platform, r.code, r.p.to_bits(), r.tau_m.to_bits(), r.decoder, r.basis)
                            == (platform, code, p, tau, decoder, basis)
                    })
                    .map(|r| (r.d as u32, r.rounds as u32, r.stats))
                    .collect();
                if cells.is_empty() {
                    continue;
                }
                let fit = points_from_stats(&cells, include_d3).and_then(|(pts, w)| {
                    warnings.extend(w.into_iter().map(|m| format!("{basis}: {m}")));
                    fit_lambda(&pts, Some(basis))
                });
                match fit {
                    Ok(f) => fits.push(f),
                    Err(e) => warnings.push(format!("{basis}: {e}")),
                }
            }
            let lambda = match fits.as_slice() {
                [one] => Some((one.lambda, one.lambda_err)),
                [x, z] => Some(average_lambda(x, z)),
                _ => None,
            };
            LambdaSummary { platform, code, p: f64::from_bits(p), tau_m: f64::from_bits(tau), decoder, fits, lambda, warnings }
        })
        .collect()
}

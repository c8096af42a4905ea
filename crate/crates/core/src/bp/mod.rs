//! Soft-information belief propagation with OSD-0 post-processing.
//!
//! Measurement classification errors share their detector signature with the
//! bit-flip right before the measurement, so a soft value does not get its own
//! variable node: it is folded into the prior of the variable with the same
//! signature.

mod minsum;
mod osd;

pub use minsum::{bp_decode, BpResult};
pub use osd::{osd0, Osd};

use std::collections::HashMap;

use thiserror::Error;

use crate::pauli_sim::DetectorErrorModel;
use crate::prob::xor_prob;
use crate::readout::ps_from_q;
use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub enum BpError {
    #[error("no soft value for measurement {tag} (shot has {len})")]
    MissingSoft { tag: u32, len: usize },
    #[error("syndrome is not in the column space of the check matrix")]
    Inconsistent,
    #[error("syndrome has {got} bits, expected {expected}")]
    SyndromeLength { got: usize, expected: usize },
    #[error("invalid settings: {0}")]
    Settings(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpSettings {
    pub max_iters: usize,
    /// Min-sum normalisation factor applied to check-to-variable messages.
    pub scale: f64,
    pub osd_order: usize,
    /// Stop as soon as the hard decision satisfies the syndrome.
    pub early_stop: bool,
}

impl Default for BpSettings {
    fn default() -> Self {
        Self { max_iters: 100, scale: 1.0, osd_order: 0, early_stop: true }
    }
}

impl BpSettings {
    pub fn validate(&self) -> Result<(), BpError> {
        if self.max_iters == 0 {
            return Err(BpError::Settings("max_iters must be at least 1".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(BpError::Settings(format!("scale {} outside (0, 1]", self.scale)));
        }
        if self.osd_order != 0 {
            return Err(BpError::Settings(format!("osd_order {} unsupported, only 0", self.osd_order)));
        }
        Ok(())
    }
}

/// Bipartite graph between error mechanisms (variables) and detectors
/// (checks) of one basis.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    pub n_checks: usize,
    /// Global detector index of each check.
    pub check_det: Vec<u32>,
    /// Check index of each global detector, if it belongs to this graph.
    pub det_check: Vec<Option<u32>>,
    /// Prior of each variable from untagged mechanisms only.
    pub base_prior: Vec<f64>,
    /// Static prior including the model probability of tagged mechanisms.
    pub prior: Vec<f64>,
    pub obs: Vec<u64>,
    /// Measurements folded into each variable, CSR by variable.
    pub(crate) tag_start: Vec<u32>,
    pub(crate) tags: Vec<u32>,
    /// Checks of each variable, CSR.
    pub(crate) var_start: Vec<u32>,
    pub(crate) var_checks: Vec<u32>,
    /// Edges of each check as (variable, edge index into the variable-major
    /// edge list), CSR.
    pub(crate) check_start: Vec<u32>,
    pub(crate) check_edges: Vec<(u32, u32)>,
    meas_map: HashMap<u32, u32>,
}

impl TannerGraph {
    /// Builds the graph over detectors of `basis` (or every detector when
    /// `None`). Mechanisms with identical restricted signatures are merged;
    /// tagged mechanisms join the variable sharing their signature.
    pub fn from_dem(dem: &DetectorErrorModel, basis: Option<Basis>) -> Self {
        Self::build(dem, basis, None)
    }

    /// Hard baseline: every tagged mechanism keeps a fixed probability
    /// `mean_ps` and no measurement is reweighted.
    pub fn hard_baseline(dem: &DetectorErrorModel, basis: Option<Basis>, mean_ps: f64) -> Self {
        let mut g = Self::build(dem, basis, Some(mean_ps));
        g.base_prior.clone_from(&g.prior);
        g.tag_start = vec![0; g.n_vars() + 1];
        g.tags.clear();
        g.meas_map.clear();
        g
    }

    fn build(dem: &DetectorErrorModel, basis: Option<Basis>, tag_override: Option<f64>) -> Self {
        let keep = |b: Option<Basis>| basis.is_none() || b.is_none() || b == basis;
        let mut det_check = vec![None; dem.n_det];
        let mut check_det = Vec::new();
        for (d, &b) in dem.det_basis.iter().enumerate() {
            if keep(b) {
                det_check[d] = Some(check_det.len() as u32);
                check_det.push(d as u32);
            }
        }
        let obs_mask = dem.obs_basis.iter().enumerate().filter(|(_, &b)| keep(b)).fold(0u64, |acc, (k, _)| acc | 1 << k);

        struct Var {
            checks: Vec<u32>,
            base: f64,
            prior: f64,
            obs: u64,
            tags: Vec<u32>,
        }
        let mut index: HashMap<(Vec<u32>, u64), usize> = HashMap::new();
        let mut vars: Vec<Var> = Vec::new();
        for m in &dem.mechanisms {
            let mut checks: Vec<u32> = m.dets.iter().filter_map(|&d| det_check[d as usize]).collect();
            checks.sort_unstable();
            if checks.is_empty() {
                continue;
            }
            let obs = m.obs & obs_mask;
            let i = *index.entry((checks.clone(), obs)).or_insert_with(|| {
                vars.push(Var { checks, base: 0.0, prior: 0.0, obs, tags: Vec::new() });
                vars.len() - 1
            });
            let v = &mut vars[i];
            match m.meas_tag {
                None => {
                    v.base = xor_prob(v.base, m.prob);
                    v.prior = xor_prob(v.prior, m.prob);
                }
                Some(t) => {
                    v.tags.push(t);
                    v.prior = xor_prob(v.prior, tag_override.unwrap_or(m.prob));
                }
            }
        }

        let n_checks = check_det.len();
        let mut g = TannerGraph {
            n_checks,
            check_det,
            det_check,
            base_prior: vars.iter().map(|v| v.base).collect(),
            prior: vars.iter().map(|v| v.prior).collect(),
            obs: vars.iter().map(|v| v.obs).collect(),
            tag_start: vec![0],
            tags: Vec::new(),
            var_start: vec![0],
            var_checks: Vec::new(),
            check_start: Vec::new(),
            check_edges: Vec::new(),
            meas_map: HashMap::new(),
        };
        for (i, v) in vars.iter().enumerate() {
            for &t in &v.tags {
                g.meas_map.insert(t, i as u32);
            }
            g.tags.extend_from_slice(&v.tags);
            g.tag_start.push(g.tags.len() as u32);
            g.var_checks.extend_from_slice(&v.checks);
            g.var_start.push(g.var_checks.len() as u32);
        }
        let mut degree = vec![0u32; n_checks + 1];
        for &c in &g.var_checks {
            degree[c as usize + 1] += 1;
        }
        for c in 0..n_checks {
            degree[c + 1] += degree[c];
        }
        g.check_edges = vec![(0, 0); g.var_checks.len()];
        let mut fill = degree.clone();
        for v in 0..g.n_vars() {
            for e in g.var_start[v]..g.var_start[v + 1] {
                let c = g.var_checks[e as usize] as usize;
                g.check_edges[fill[c] as usize] = (v as u32, e);
                fill[c] += 1;
            }
        }
        g.check_start = degree;
        g
    }

    pub fn n_vars(&self) -> usize {
        self.prior.len()
    }

    pub fn n_edges(&self) -> usize {
        self.var_checks.len()
    }

    pub fn checks_of(&self, var: usize) -> &[u32] {
        &self.var_checks[self.var_start[var] as usize..self.var_start[var + 1] as usize]
    }

    pub fn tags_of(&self, var: usize) -> &[u32] {
        &self.tags[self.tag_start[var] as usize..self.tag_start[var + 1] as usize]
    }

    /// Variable carrying measurement `m`'s soft flip, if any.
    pub fn var_of_meas(&self, m: u32) -> Option<u32> {
        self.meas_map.get(&m).copied()
    }

    pub fn max_tag(&self) -> Option<u32> {
        self.tags.iter().copied().max()
    }

    /// Syndrome bits of this graph's checks from fired global detectors.
    pub fn syndrome_of_fired(&self, fired: &[u32], out: &mut Vec<bool>) {
        out.clear();
        out.resize(self.n_checks, false);
        for &d in fired {
            if let Some(c) = self.det_check[d as usize] {
                out[c as usize] ^= true;
            }
        }
    }

    /// Syndrome implied by an error vector.
    pub fn syndrome_of_error(&self, error: &[bool]) -> Vec<bool> {
        let mut s = vec![false; self.n_checks];
        for (v, _) in error.iter().enumerate().filter(|(_, &e)| e) {
            for &c in self.checks_of(v) {
                s[c as usize] ^= true;
            }
        }
        s
    }

    pub fn obs_of_error(&self, error: &[bool]) -> u64 {
        error.iter().zip(&self.obs).filter(|(&e, _)| e).fold(0, |acc, (_, &o)| acc ^ o)
    }
}

/// Per-shot priors: each tagged variable's base prior composed with the soft
/// flip probability of every measurement folded into it.
pub fn update_priors(graph: &TannerGraph, soft: &[u8], out: &mut Vec<f64>) -> Result<(), BpError> {
    if let Some(t) = graph.max_tag() {
        if t as usize >= soft.len() {
            return Err(BpError::MissingSoft { tag: t, len: soft.len() });
        }
    }
    out.clear();
    out.extend_from_slice(&graph.base_prior);
    for (v, p) in out.iter_mut().enumerate() {
        for &t in graph.tags_of(v) {
            *p = xor_prob(*p, ps_from_q(soft[t as usize]));
        }
    }
    Ok(())
}

/// Per-worker BP+OSD decoder with reusable buffers.
pub struct BpDecoder<'g> {
    graph: &'g TannerGraph,
    settings: BpSettings,
    priors: Vec<f64>,
    syndrome: Vec<bool>,
    bp: minsum::Workspace,
    osd: Osd,
    error: Vec<bool>,
}

impl<'g> BpDecoder<'g> {
    pub fn new(graph: &'g TannerGraph, settings: BpSettings) -> Result<Self, BpError> {
        settings.validate()?;
        Ok(Self {
            graph,
            settings,
            priors: Vec::new(),
            syndrome: Vec::new(),
            bp: minsum::Workspace::default(),
            osd: Osd::default(),
            error: Vec::new(),
        })
    }

    pub fn graph(&self) -> &TannerGraph {
        self.graph
    }

    /// Decodes one shot and returns the predicted observable flips. Without
    /// soft values the static priors are used.
    pub fn decode_shot(&mut self, fired: &[u32], soft: Option<&[u8]>) -> Result<u64, BpError> {
        self.decode_error(fired, soft)?;
        Ok(self.graph.obs_of_error(&self.error))
    }

    /// Like [`decode_shot`](Self::decode_shot) but returns the estimated
    /// error vector.
    pub fn decode_error(&mut self, fired: &[u32], soft: Option<&[u8]>) -> Result<&[bool], BpError> {
        let graph = self.graph;
        match soft {
            Some(q) => update_priors(graph, q, &mut self.priors)?,
            None => {
                self.priors.clear();
                self.priors.extend_from_slice(&graph.prior);
            }
        }
        graph.syndrome_of_fired(fired, &mut self.syndrome);
        self.error.clear();
        self.error.resize(graph.n_vars(), false);
        if !self.syndrome.iter().any(|&s| s) {
            return Ok(&self.error);
        }
        let res = self.bp.run(graph, &self.priors, &self.syndrome, &self.settings);
        if res.converged {
            self.error.copy_from_slice(&self.bp.decision);
        } else {
            self.osd.solve(graph, &self.syndrome, &self.bp.posterior, &mut self.error)?;
        }
        Ok(&self.error)
    }
}

//! Per-shot soft reweighting through 256-entry weight tables.

use std::collections::HashMap;

use super::graph::{int_weight, DecodingGraph};
use super::UfError;
use crate::prob::xor_prob;
use crate::readout::ps_from_q;

const NO_SLOT: u32 = u32::MAX;

/// Weight tables indexed by the quantized posterior `q`, one per distinct
/// base probability among single-tag edges.
#[derive(Clone, Debug)]
pub struct WeightLut {
    tables: Vec<[u32; 256]>,
    slot: Vec<u32>,
    bases: Vec<f64>,
    static_weights: Vec<u32>,
    tagged: Vec<u32>,
}

impl WeightLut {
    /// Table for a base probability `p`: entry `q` is the integer weight of
    /// `p ⊕ p_S(q)`.
    pub fn table(base: f64) -> [u32; 256] {
        let mut t = [0u32; 256];
        for (q, w) in t.iter_mut().enumerate() {
            *w = int_weight(xor_prob(base, ps_from_q(q as u8)));
        }
        t
    }

    pub fn new(graph: &DecodingGraph) -> Self {
        let mut index: HashMap<u64, u32> = HashMap::new();
        let mut tables = Vec::new();
        let mut bases = Vec::new();
        let slot = graph
            .edges
            .iter()
            .map(|e| {
                if e.tags.len() != 1 {
                    return NO_SLOT;
                }
                *index.entry(e.base_prob.to_bits()).or_insert_with(|| {
                    tables.push(Self::table(e.base_prob));
                    bases.push(e.base_prob);
                    (tables.len() - 1) as u32
                })
            })
            .collect();
        let tagged = (0..graph.edges.len() as u32).filter(|&e| !graph.edges[e as usize].tags.is_empty()).collect();
        Self { tables, slot, bases, static_weights: graph.static_weights(), tagged }
    }

    pub fn n_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn bases(&self) -> &[f64] {
        &self.bases
    }

    /// Writes the shot's edge weights into `out`; `soft[m]` is the quantized
    /// posterior of measurement `m`.
    pub fn reweight_into(&self, graph: &DecodingGraph, soft: &[u8], out: &mut Vec<u32>) -> Result<(), UfError> {
        if let Some(t) = graph.max_tag() {
            if t as usize >= soft.len() {
                return Err(UfError::MissingSoft { tag: t, len: soft.len() });
            }
        }
        out.clear();
        out.extend_from_slice(&self.static_weights);
        for &e in &self.tagged {
            let (ei, edge) = (e as usize, &graph.edges[e as usize]);
            let slot = self.slot[ei];
            out[ei] = if slot != NO_SLOT {
                self.tables[slot as usize][soft[edge.tags[0] as usize] as usize]
            } else {
                let p = edge.tags.iter().fold(edge.base_prob, |acc, &t| xor_prob(acc, ps_from_q(soft[t as usize])));
                int_weight(p)
            };
        }
        Ok(())
    }
}

/// Edge weights of one shot given its soft values.
pub fn reweight(graph: &DecodingGraph, soft: &[u8], lut: &WeightLut) -> Result<Vec<u32>, UfError> {
    let mut out = Vec::with_capacity(graph.edges.len());
    lut.reweight_into(graph, soft, &mut out)?;
    Ok(out)
}

//! Per-basis decoding graphs built from a detector error model.

use std::collections::HashMap;

use super::UfError;
use crate::pauli_sim::{DetectorErrorModel, Mechanism};
use crate::prob::{edge_weight, xor_prob};
use crate::Basis;

/// Integer weight units per natural-log unit.
pub const WEIGHT_SCALE: f64 = 64.0;

/// Integer edge weight of probability `p`, at least 1.
#[inline]
pub fn int_weight(p: f64) -> u32 {
    ((WEIGHT_SCALE * edge_weight(p)).round() as u32).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: u32,
    /// Second endpoint; equals the graph's boundary node for single-detector
    /// mechanisms.
    pub v: u32,
    /// Composed probability of the untagged mechanisms on this edge.
    pub base_prob: f64,
    /// Measurements whose classification errors land on this edge.
    pub tags: Vec<u32>,
    /// Static probability used for each tag when no soft value is given.
    pub tag_probs: Vec<f64>,
    pub obs: u64,
    /// Weight with every tag at its static probability.
    pub base_weight: u32,
}

impl Edge {
    /// Probability of the edge with tags at their static values.
    pub fn static_prob(&self) -> f64 {
        self.tag_probs.iter().fold(self.base_prob, |acc, &p| xor_prob(acc, p))
    }
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    pub basis: Basis,
    /// Detector nodes, boundary excluded.
    pub n_det_nodes: usize,
    /// Local node of each global detector, if it belongs to this basis.
    pub det_node: Vec<Option<u32>>,
    /// Global detector index of each local node.
    pub node_det: Vec<u32>,
    pub edges: Vec<Edge>,
    /// Observables of this basis.
    pub obs_mask: u64,
    /// Mechanisms that flip an observable of this basis without firing any
    /// of its detectors; nonzero means the code cannot protect against them.
    pub undetectable: usize,
    pub(crate) adj_start: Vec<u32>,
    pub(crate) adj: Vec<u32>,
}

impl DecodingGraph {
    pub fn boundary(&self) -> u32 {
        self.n_det_nodes as u32
    }

    pub fn n_nodes(&self) -> usize {
        self.n_det_nodes + 1
    }

    /// Edge ids at `node` in increasing order.
    #[inline]
    pub fn incident(&self, node: u32) -> &[u32] {
        &self.adj[self.adj_start[node as usize] as usize..self.adj_start[node as usize + 1] as usize]
    }

    pub fn static_weights(&self) -> Vec<u32> {
        self.edges.iter().map(|e| e.base_weight).collect()
    }

    /// Largest measurement tag, if any edge is tagged.
    pub fn max_tag(&self) -> Option<u32> {
        self.edges.iter().flat_map(|e| e.tags.iter().copied()).max()
    }

    /// Local nodes of the fired global detectors that belong to this basis.
    pub fn local_syndrome(&self, fired: &[u32]) -> Vec<u32> {
        fired.iter().filter_map(|&d| self.det_node.get(d as usize).copied().flatten()).collect()
    }

    /// Local syndrome implied by a set of edges.
    pub fn syndrome_of(&self, edges: &[u32]) -> Vec<u32> {
        let mut parity = vec![false; self.n_nodes()];
        for &e in edges {
            let edge = &self.edges[e as usize];
            parity[edge.u as usize] ^= true;
            parity[edge.v as usize] ^= true;
        }
        (0..self.n_det_nodes as u32).filter(|&n| parity[n as usize]).collect()
    }
}

fn in_basis(tag: Option<Basis>, basis: Basis) -> bool {
    tag.is_none_or(|b| b == basis)
}

/// Decoding graph of `basis` with tagged mechanisms at their model
/// probability.
pub fn graph_from_dem(dem: &DetectorErrorModel, basis: Basis) -> Result<DecodingGraph, UfError> {
    build(dem, basis, None)
}

/// Data-informed hard baseline: every tagged mechanism gets probability
/// `mean_ps` instead of its model value.
pub fn hard_baseline_graph(dem: &DetectorErrorModel, basis: Basis, mean_ps: f64) -> Result<DecodingGraph, UfError> {
    build(dem, basis, Some(mean_ps))
}

struct Pending {
    base: f64,
    obs: u64,
    obs_weight: f64,
    tags: Vec<(u32, f64)>,
}

fn build(dem: &DetectorErrorModel, basis: Basis, tag_override: Option<f64>) -> Result<DecodingGraph, UfError> {
    let mut det_node = vec![None; dem.n_det];
    let mut node_det = Vec::new();
    for (d, &b) in dem.det_basis.iter().enumerate() {
        if in_basis(b, basis) {
            det_node[d] = Some(node_det.len() as u32);
            node_det.push(d as u32);
        }
    }
    let boundary = node_det.len() as u32;
    let obs_mask = dem.obs_basis.iter().enumerate().filter(|(_, &b)| in_basis(b, basis)).fold(0u64, |acc, (k, _)| acc | 1 << k);

    let restrict = |m: &Mechanism| -> (Vec<u32>, u64) {
        let nodes: Vec<u32> = m.dets.iter().filter_map(|&d| det_node[d as usize]).collect();
        (nodes, m.obs & obs_mask)
    };
    let key_of = |nodes: &[u32]| -> (u32, u32) {
        match *nodes {
            [a] => (a, boundary),
            [a, b] => (a.min(b), a.max(b)),
            _ => unreachable!(),
        }
    };

    let mut order: Vec<(u32, u32)> = Vec::new();
    let mut pending: HashMap<(u32, u32), Pending> = HashMap::new();
    let mut undetectable = 0;
    let mut hyper = Vec::new();
    for m in &dem.mechanisms {
        let (nodes, obs) = restrict(m);
        match nodes.len() {
            0 => undetectable += (obs != 0) as usize,
            1 | 2 => add(&mut pending, &mut order, key_of(&nodes), m.prob, obs, m.meas_tag.map(|t| (t, tag_override.unwrap_or(m.prob)))),
            _ => hyper.push((nodes, obs, m.prob, m.meas_tag)),
        }
    }
    let primitive: HashMap<(u32, u32), u64> = order.iter().map(|k| (*k, pending[k].obs)).collect();
    for (nodes, obs, prob, tag) in hyper {
        let parts = decompose(&nodes, obs, &primitive, boundary)
            .ok_or_else(|| UfError::Hyperedge { dets: nodes.iter().map(|&n| node_det[n as usize]).collect() })?;
        for key in parts {
            let part_obs = primitive[&key];
            add(&mut pending, &mut order, key, prob, part_obs, tag.map(|t| (t, tag_override.unwrap_or(prob))));
        }
    }

    let edges: Vec<Edge> = order
        .iter()
        .map(|key| {
            let p = &pending[key];
            let mut e = Edge {
                u: key.0,
                v: key.1,
                base_prob: p.base,
                tags: p.tags.iter().map(|t| t.0).collect(),
                tag_probs: p.tags.iter().map(|t| t.1).collect(),
                obs: p.obs,
                base_weight: 0,
            };
            e.base_weight = int_weight(e.static_prob());
            e
        })
        .collect();

    let n_nodes = node_det.len() + 1;
    let mut degree = vec![0u32; n_nodes + 1];
    for e in &edges {
        degree[e.u as usize + 1] += 1;
        degree[e.v as usize + 1] += 1;
    }
    for i in 0..n_nodes {
        degree[i + 1] += degree[i];
    }
    let adj_start = degree.clone();
    let mut fill = degree;
    let mut adj = vec![0u32; adj_start[n_nodes] as usize];
    for (i, e) in edges.iter().enumerate() {
        for n in [e.u, e.v] {
            adj[fill[n as usize] as usize] = i as u32;
            fill[n as usize] += 1;
        }
    }

    Ok(DecodingGraph { basis, n_det_nodes: node_det.len(), det_node, node_det, edges, obs_mask, undetectable, adj_start, adj })
}

fn add(
    pending: &mut HashMap<(u32, u32), Pending>,
    order: &mut Vec<(u32, u32)>,
    key: (u32, u32),
    prob: f64,
    obs: u64,
    tag: Option<(u32, f64)>,
) {
    let entry = pending.entry(key).or_insert_with(|| {
        order.push(key);
        Pending { base: 0.0, obs, obs_weight: -1.0, tags: Vec::new() }
    });
    match tag {
        Some(t) => entry.tags.push(t),
        None => entry.base = xor_prob(entry.base, prob),
    }
    // the most likely contributor decides the edge's observable effect
    if prob > entry.obs_weight {
        entry.obs = obs;
        entry.obs_weight = prob;
    }
}

/// Splits `nodes` into existing edges, preferring a split whose observable
/// effect matches `obs`.
fn decompose(nodes: &[u32], obs: u64, primitive: &HashMap<(u32, u32), u64>, boundary: u32) -> Option<Vec<(u32, u32)>> {
    let mut best: Option<Vec<(u32, u32)>> = None;
    let mut current = Vec::new();
    let mut remaining: Vec<u32> = nodes.to_vec();
    remaining.sort_unstable();
    search(&mut remaining, &mut current, obs, 0, primitive, boundary, &mut best);
    best
}

fn search(
    remaining: &mut Vec<u32>,
    current: &mut Vec<(u32, u32)>,
    target_obs: u64,
    obs: u64,
    primitive: &HashMap<(u32, u32), u64>,
    boundary: u32,
    best: &mut Option<Vec<(u32, u32)>>,
) -> bool {
    if remaining.is_empty() {
        if best.is_none() || obs == target_obs {
            *best = Some(current.clone());
        }
        return obs == target_obs;
    }
    let a = remaining[0];
    let mut options: Vec<(u32, u32)> = remaining[1..].iter().map(|&b| (a, b)).collect();
    options.push((a, boundary));
    for key in options {
        let Some(&edge_obs) = primitive.get(&key) else { continue };
        let rest: Vec<u32> = remaining.iter().copied().filter(|&n| n != key.0 && n != key.1).collect();
        let saved = std::mem::replace(remaining, rest);
        current.push(key);
        let done = search(remaining, current, target_obs, obs ^ edge_obs, primitive, boundary, best);
        current.pop();
        *remaining = saved;
        if done {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_rotated_memory;
    use crate::noise::si1000_channels;
    use crate::pauli_sim::{build_dem, NoisyCircuit};

    fn mech(prob: f64, dets: &[u32], obs: u64, tag: Option<u32>) -> Mechanism {
        Mechanism { prob, dets: dets.to_vec(), obs, meas_tag: tag }
    }

    fn dem_of(n_det: usize, mechanisms: Vec<Mechanism>) -> DetectorErrorModel {
        DetectorErrorModel { n_det, n_obs: 1, det_basis: vec![Some(Basis::Z); n_det], obs_basis: vec![Some(Basis::Z)], mechanisms }
    }

    #[test]
    fn weights() {
        assert!((edge_weight(0.1) - 9f64.ln()).abs() < 1e-12);
        assert!(edge_weight(0.5) < 1e-9);
        assert_eq!(int_weight(0.5), 1);
        assert_eq!(int_weight(0.1), (64.0 * 9f64.ln()).round() as u32);
    }

    #[test]
    fn single_detector_goes_to_boundary() {
        let dem = dem_of(5, vec![mech(0.01, &[3], 1, None), mech(0.02, &[1, 3], 0, None)]);
        let g = graph_from_dem(&dem, Basis::Z).unwrap();
        assert_eq!(g.edges[0].u, 3);
        assert_eq!(g.edges[0].v, g.boundary());
        assert_eq!(g.edges[0].obs, 1);
        assert_eq!(g.incident(3), &[0, 1]);
    }

    #[test]
    fn tags_attach_to_their_twin() {
        let dem = dem_of(3, vec![mech(0.01, &[0, 1], 0, None), mech(0.05, &[0, 1], 0, Some(7))]);
        let g = graph_from_dem(&dem, Basis::Z).unwrap();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[0].tags, vec![7]);
        assert!((g.edges[0].static_prob() - xor_prob(0.01, 0.05)).abs() < 1e-15);
        let h = hard_baseline_graph(&dem, Basis::Z, 0.2).unwrap();
        assert!((h.edges[0].static_prob() - xor_prob(0.01, 0.2)).abs() < 1e-15);
    }

    #[test]
    fn hyperedges_split_into_existing_edges() {
        let dem = dem_of(
            4,
            vec![
                mech(0.01, &[0, 1], 0, None),
                mech(0.01, &[2, 3], 1, None),
                mech(0.01, &[0, 2], 0, None),
                mech(0.001, &[0, 1, 2, 3], 1, None),
            ],
        );
        let g = graph_from_dem(&dem, Basis::Z).unwrap();
        assert_eq!(g.edges.len(), 3);
        assert!((g.edges[0].base_prob - xor_prob(0.01, 0.001)).abs() < 1e-15);
        assert!((g.edges[1].base_prob - xor_prob(0.01, 0.001)).abs() < 1e-15);
        assert_eq!(g.edges[2].base_prob, 0.01);
        let bad = dem_of(4, vec![mech(0.01, &[0, 1, 2], 0, None)]);
        assert!(matches!(graph_from_dem(&bad, Basis::Z), Err(UfError::Hyperedge { .. })));
    }

    #[test]
    fn surface_code_graphs_decompose() {
        for d in [3, 5, 7, 9] {
            for basis in [Basis::X, Basis::Z] {
                let c = build_rotated_memory(d, 3, basis).unwrap();
                let dem = build_dem(&NoisyCircuit::new(&c, &si1000_channels(0.001, 0.005))).unwrap();
                let g = graph_from_dem(&dem, basis).unwrap();
                assert_eq!(g.undetectable, 0, "d={d} {basis:?}");
                let tagged: usize = g.edges.iter().map(|e| e.tags.len()).sum();
                assert_eq!(
                    tagged,
                    dem.mechanisms
                        .iter()
                        .filter(|m| m.meas_tag.is_some() && m.dets.iter().any(|&x| g.det_node[x as usize].is_some()))
                        .count()
                );
                assert!(g.edges.iter().all(|e| e.base_weight > 0));
            }
        }
    }
}

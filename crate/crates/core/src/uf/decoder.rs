//! Weighted union-find decoder: cluster growth followed by peeling.
//!
//! Growth runs in continuous integer time. Every odd cluster that does not
//! touch the boundary pushes on each edge leaving it at one unit per tick, so
//! an edge between two such clusters grows at rate 2. Edge completions are
//! processed in time order from a circular bucket queue. All completions of a
//! tick are merged first; then each cluster whose activity changed during the
//! tick reschedules the edges on its lazily pruned frontier list, once.

use super::graph::{int_weight, DecodingGraph};

const NONE: u32 = u32::MAX;

const ODD: u8 = 1;
const BOUNDARY: u8 = 2;
const MARK: u8 = 4;
const TOUCHED: u8 = 8;
const SEEN: u8 = 16;
const READY: u8 = 32;
/// Pre-tick activity recorded in `dirty`.
const DIRTY: u8 = 64;

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    size: u32,
    flags: u8,
}

#[derive(Clone, Copy, Default)]
struct EdgeState {
    growth: u32,
    since: u32,
    /// Scheduled completion time, or `NONE`.
    done: u32,
    rate: u8,
    touched: bool,
}

/// Per-worker scratch state. Only entries touched by a shot are reset.
pub struct UfDecoder<'g> {
    graph: &'g DecodingGraph,
    ends: Vec<[u32; 2]>,
    nodes: Vec<Node>,
    edges: Vec<EdgeState>,
    frontier: Vec<Vec<u32>>,
    parent_edge: Vec<u32>,
    touched_nodes: Vec<u32>,
    touched_edges: Vec<u32>,
    buckets: Vec<Vec<u32>>,
    /// Entries sitting in `buckets`, stale ones included.
    pending: usize,
    /// Edges with a scheduled completion.
    live: usize,
    order: Vec<u32>,
    correction: Vec<u32>,
    syndrome: Vec<u32>,
    /// Clusters merged during the current tick: their root and activity
    /// before it, and their frontier list taken out until the tick settles.
    parts: Vec<(u32, bool, Vec<u32>)>,
}

impl<'g> UfDecoder<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        let n = graph.n_nodes();
        let m = graph.edges.len();
        let mut nodes: Vec<Node> = (0..n as u32).map(|i| Node { parent: i, size: 1, flags: 0 }).collect();
        nodes[graph.boundary() as usize].flags = BOUNDARY;
        Self {
            graph,
            ends: graph.edges.iter().map(|e| [e.u, e.v]).collect(),
            nodes,
            edges: vec![EdgeState { done: NONE, ..Default::default() }; m],
            frontier: vec![Vec::new(); n],
            parent_edge: vec![NONE; n],
            touched_nodes: Vec::new(),
            touched_edges: Vec::new(),
            buckets: vec![Vec::new(); (int_weight(0.0) as usize + 2).next_power_of_two()],
            pending: 0,
            live: 0,
            order: Vec::new(),
            correction: Vec::new(),
            syndrome: Vec::new(),
            parts: Vec::new(),
        }
    }

    pub fn graph(&self) -> &DecodingGraph {
        self.graph
    }

    #[inline]
    fn find(&mut self, mut x: u32) -> u32 {
        // SAFETY: node ids come from the graph's edge list or from a checked
        // syndrome, and parents always point at valid nodes.
        unsafe {
            loop {
                let p = self.nodes.get_unchecked(x as usize).parent;
                if p == x {
                    return x;
                }
                let gp = self.nodes.get_unchecked(p as usize).parent;
                self.nodes.get_unchecked_mut(x as usize).parent = gp;
                x = p;
            }
        }
    }

    #[inline]
    fn active(&self, root: u32) -> bool {
        self.nodes[root as usize].flags & (ODD | BOUNDARY) == ODD
    }

    /// [`active`](Self::active) for roots returned by `find`.
    #[inline]
    unsafe fn active_unchecked(&self, root: u32) -> bool {
        self.nodes.get_unchecked(root as usize).flags & (ODD | BOUNDARY) == ODD
    }

    #[inline]
    fn touch(&mut self, n: u32) {
        let node = &mut self.nodes[n as usize];
        if node.flags & TOUCHED == 0 {
            node.flags |= TOUCHED;
            self.touched_nodes.push(n);
        }
    }

    fn union(&mut self, ra: u32, rb: u32) -> u32 {
        let (a, b) = (self.nodes[ra as usize], self.nodes[rb as usize]);
        let (big, small) = if a.size >= b.size { (ra, rb) } else { (rb, ra) };
        let big_node = &mut self.nodes[big as usize];
        big_node.size = a.size + b.size;
        big_node.flags = (big_node.flags & !ODD) | ((a.flags ^ b.flags) & ODD) | ((a.flags | b.flags) & BOUNDARY);
        self.nodes[small as usize].parent = big;
        big
    }

    fn reset(&mut self) {
        let boundary = self.graph.boundary();
        for &n in &self.touched_nodes {
            let i = n as usize;
            self.nodes[i] = Node { parent: n, size: 1, flags: if n == boundary { BOUNDARY } else { 0 } };
            self.frontier[i].clear();
            self.parent_edge[i] = NONE;
        }
        for &e in &self.touched_edges {
            self.edges[e as usize] = EdgeState { done: NONE, ..Default::default() };
        }
        self.touched_nodes.clear();
        self.touched_edges.clear();
        self.live = 0;
    }

    /// Decodes local syndrome nodes with per-edge `weights` and returns the
    /// predicted observable flips.
    pub fn decode(&mut self, weights: &[u32], syndrome: &[u32]) -> u64 {
        self.run(weights, syndrome);
        let graph = self.graph;
        self.correction.iter().fold(0u64, |acc, &e| acc ^ graph.edges[e as usize].obs)
    }

    /// Like [`decode`](Self::decode) but returns the chosen edges.
    pub fn correction(&mut self, weights: &[u32], syndrome: &[u32]) -> Vec<u32> {
        self.run(weights, syndrome);
        self.correction.clone()
    }

    /// Decodes a shot given its fired global detectors.
    pub fn decode_fired(&mut self, weights: &[u32], fired: &[u32]) -> u64 {
        let mut syndrome = std::mem::take(&mut self.syndrome);
        syndrome.clear();
        syndrome.extend(fired.iter().filter_map(|&d| self.graph.det_node[d as usize]));
        let obs = self.decode(weights, &syndrome);
        self.syndrome = syndrome;
        obs
    }

    fn run(&mut self, weights: &[u32], syndrome: &[u32]) {
        assert_eq!(weights.len(), self.edges.len());
        assert!(syndrome.iter().all(|&n| (n as usize) < self.nodes.len()), "syndrome node out of range");
        self.reset();
        self.correction.clear();
        if syndrome.is_empty() {
            return;
        }
        self.touch(self.graph.boundary());
        for &n in syndrome {
            self.touch(n);
            self.nodes[n as usize].flags ^= ODD | MARK;
        }
        self.grow(weights, syndrome);
        self.peel(weights, syndrome);
    }

    /// Brings edge `e` up to time `now` and reschedules its completion.
    /// Returns false once the edge no longer leaves its cluster.
    #[inline]
    fn refresh(&mut self, e: u32, now: u32, weights: &[u32]) -> bool {
        let ei = e as usize;
        // SAFETY: frontier entries are edge ids from the adjacency lists and
        // `run` checked that `weights` covers every edge.
        let (w, [u, v]) = unsafe { (*weights.get_unchecked(ei), *self.ends.get_unchecked(ei)) };
        if unsafe { self.edges.get_unchecked(ei) }.growth >= w {
            return false;
        }
        let (ru, rv) = (self.find(u), self.find(v));
        // SAFETY: roots are node ids
        let rate = if ru == rv { 0 } else { unsafe { self.active_unchecked(ru) as u8 + self.active_unchecked(rv) as u8 } };
        let st = unsafe { self.edges.get_unchecked_mut(ei) };
        if rate != st.rate {
            if !st.touched {
                st.touched = true;
                self.touched_edges.push(e);
            }
            let grown = st.growth + st.rate as u32 * (now - st.since);
            st.growth = grown.min(w - 1);
            st.since = now;
            st.rate = rate;
            let was_live = st.done != NONE;
            if rate > 0 {
                // rate is 1 or 2
                let shift = rate as u32 - 1;
                let done = now + ((w - st.growth + shift) >> shift);
                st.done = done;
                self.live += !was_live as usize;
                self.schedule(e, done, now);
            } else {
                st.done = NONE;
                self.live -= was_live as usize;
            }
        }
        ru != rv
    }

    #[inline]
    fn schedule(&mut self, e: u32, done: u32, now: u32) {
        if (done - now) as usize >= self.buckets.len() {
            self.widen((done - now) as usize + 1);
        }
        let mask = self.buckets.len() - 1;
        self.buckets[done as usize & mask].push(e);
        self.pending += 1;
    }

    /// Enlarges the ring for unusually heavy edges and redistributes the
    /// live entries.
    fn widen(&mut self, span: usize) {
        let old = std::mem::replace(&mut self.buckets, vec![Vec::new(); span.next_power_of_two()]);
        let mask = self.buckets.len() - 1;
        self.pending = 0;
        for e in old.into_iter().flatten() {
            let done = self.edges[e as usize].done;
            if done != NONE {
                self.buckets[done as usize & mask].push(e);
                self.pending += 1;
            }
        }
    }

    /// Makes sure `node`'s own edges are in its cluster's frontier. The
    /// boundary keeps none: its cluster never grows.
    #[inline]
    fn ready(&mut self, node: u32) {
        let flags = &mut self.nodes[node as usize].flags;
        if *flags & READY == 0 {
            *flags |= READY;
            if *flags & BOUNDARY == 0 {
                let graph = self.graph;
                self.frontier[node as usize].extend_from_slice(graph.incident(node));
            }
        }
    }

    /// Reschedules the edges in `list`, dropping those that became internal
    /// or finished growing.
    fn refresh_list(&mut self, list: &mut Vec<u32>, now: u32, weights: &[u32]) {
        list.retain(|&e| self.refresh(e, now, weights));
    }

    fn grow(&mut self, weights: &[u32], syndrome: &[u32]) {
        for &n in syndrome {
            self.ready(n);
            let mut list = std::mem::take(&mut self.frontier[n as usize]);
            self.refresh_list(&mut list, 0, weights);
            self.frontier[n as usize] = list;
        }
        let mut now = 0u32;
        while self.live > 0 {
            now += 1;
            let slot = now as usize & (self.buckets.len() - 1);
            if self.buckets[slot].is_empty() {
                continue;
            }
            let mut bucket = std::mem::take(&mut self.buckets[slot]);
            self.pending -= bucket.len();
            for &e in &bucket {
                self.complete(e, now, weights);
            }
            bucket.clear();
            self.buckets[slot] = bucket;
            self.settle(now, weights);
        }
        // leftover entries are stale and harmless, but should not pile up
        if self.pending > 4 * self.buckets.len() {
            self.buckets.iter_mut().for_each(Vec::clear);
            self.pending = 0;
        }
    }

    /// Takes a root's frontier aside the first time it merges in a tick.
    #[inline]
    fn mark_dirty(&mut self, root: u32) {
        let active = self.active(root);
        let flags = &mut self.nodes[root as usize].flags;
        if *flags & DIRTY == 0 {
            *flags |= DIRTY;
            let list = std::mem::take(&mut self.frontier[root as usize]);
            self.parts.push((root, active, list));
        }
    }

    fn complete(&mut self, e: u32, now: u32, weights: &[u32]) {
        let ei = e as usize;
        let st = &mut self.edges[ei];
        if st.done != now || st.growth >= weights[ei] {
            return;
        }
        st.growth = weights[ei];
        st.rate = 0;
        st.done = NONE;
        self.live -= 1;
        let [u, v] = self.ends[ei];
        self.touch(u);
        self.touch(v);
        self.ready(u);
        self.ready(v);
        let (ra, rb) = (self.find(u), self.find(v));
        if ra == rb {
            return;
        }
        self.mark_dirty(ra);
        self.mark_dirty(rb);
        self.union(ra, rb);
    }

    /// Hands the parts merged during the tick back to their new roots,
    /// rescheduling the edges of each part whose activity changed. Boundary
    /// clusters never grow, their edges are driven from outside.
    fn settle(&mut self, now: u32, weights: &[u32]) {
        let mut parts = std::mem::take(&mut self.parts);
        for (n, was_active, mut list) in parts.drain(..) {
            self.nodes[n as usize].flags &= !DIRTY;
            let r = self.find(n);
            if self.active(r) != was_active {
                self.refresh_list(&mut list, now, weights);
            }
            if self.nodes[r as usize].flags & BOUNDARY != 0 {
                list.clear();
            }
            let slot = &mut self.frontier[r as usize];
            if slot.len() < list.len() {
                std::mem::swap(slot, &mut list);
            }
            slot.extend_from_slice(&list);
            if n != r {
                list.clear();
                self.frontier[n as usize] = list;
            }
        }
        self.parts = parts;
    }

    fn peel(&mut self, weights: &[u32], syndrome: &[u32]) {
        let graph = self.graph;
        self.order.clear();
        let boundary = graph.boundary();
        for s in std::iter::once(boundary).chain(syndrome.iter().copied()) {
            if self.nodes[s as usize].flags & SEEN != 0 {
                continue;
            }
            self.nodes[s as usize].flags |= SEEN;
            let mut head = self.order.len();
            self.order.push(s);
            while head < self.order.len() {
                let n = self.order[head];
                head += 1;
                for &e in graph.incident(n) {
                    let ei = e as usize;
                    if self.edges[ei].growth < weights[ei] {
                        continue;
                    }
                    let [a, b] = self.ends[ei];
                    let other = if a == n { b } else { a };
                    let flags = &mut self.nodes[other as usize].flags;
                    if *flags & SEEN == 0 {
                        *flags |= SEEN;
                        self.parent_edge[other as usize] = e;
                        self.order.push(other);
                    }
                }
            }
        }
        for i in (0..self.order.len()).rev() {
            let n = self.order[i];
            let pe = self.parent_edge[n as usize];
            if pe == NONE || self.nodes[n as usize].flags & MARK == 0 {
                continue;
            }
            let [a, b] = self.ends[pe as usize];
            let up = if a == n { b } else { a };
            self.correction.push(pe);
            self.nodes[n as usize].flags &= !MARK;
            self.nodes[up as usize].flags ^= MARK;
        }
        self.correction.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_sim::{DetectorErrorModel, Mechanism};
    use crate::uf::graph_from_dem;
    use crate::Basis;

    /// Repetition-code line 0 - 1 - 2 - 3 with boundary edges at both ends.
    fn line() -> DecodingGraph {
        let m = |dets: &[u32], obs| Mechanism { prob: 0.01, dets: dets.to_vec(), obs, meas_tag: None };
        let dem = DetectorErrorModel {
            n_det: 4,
            n_obs: 1,
            det_basis: vec![Some(Basis::Z); 4],
            obs_basis: vec![Some(Basis::Z)],
            mechanisms: vec![m(&[0], 1), m(&[0, 1], 0), m(&[1, 2], 0), m(&[2, 3], 0), m(&[3], 0)],
        };
        graph_from_dem(&dem, Basis::Z).unwrap()
    }

    #[test]
    fn empty_syndrome() {
        let g = line();
        let mut dec = UfDecoder::new(&g);
        assert_eq!(dec.decode(&g.static_weights(), &[]), 0);
    }

    #[test]
    fn adjacent_pair_uses_connecting_edge() {
        let g = line();
        let mut dec = UfDecoder::new(&g);
        let w = g.static_weights();
        assert_eq!(dec.correction(&w, &[1, 2]), vec![2]);
        assert_eq!(dec.decode(&w, &[0]), 1);
        assert_eq!(dec.correction(&w, &[3]), vec![4]);
        // far ends go to their own boundaries
        assert_eq!(dec.correction(&w, &[0, 3]), vec![0, 4]);
        assert_eq!(dec.decode(&w, &[0, 3]), 1);
    }

    #[test]
    fn weights_steer_the_choice() {
        let g = line();
        let mut dec = UfDecoder::new(&g);
        let mut w = g.static_weights();
        // make the left boundary expensive: a lone defect at 0 now travels right
        w[0] = 10_000;
        let c = dec.correction(&w, &[0]);
        assert_eq!(c, vec![1, 2, 3, 4]);
        assert_eq!(g.syndrome_of(&c), vec![0]);
    }
}

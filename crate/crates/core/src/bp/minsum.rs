//! Min-sum message passing with a flooding schedule.

use super::{BpSettings, TannerGraph};
use crate::prob::llr;

/// Magnitude cap for check messages; a degree-one check would otherwise send
/// an infinite message.
pub const MSG_CAP: f64 = 1e4;

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult {
    /// Posterior log-likelihood ratio `ln(P(0)/P(1))` of each variable.
    pub posterior: Vec<f64>,
    pub decision: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Default)]
pub(crate) struct Workspace {
    prior_llr: Vec<f64>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    pub(crate) posterior: Vec<f64>,
    pub(crate) decision: Vec<bool>,
}

pub(crate) struct RunInfo {
    pub converged: bool,
    pub iterations: usize,
}

impl Workspace {
    pub(crate) fn run(&mut self, g: &TannerGraph, priors: &[f64], syndrome: &[bool], settings: &BpSettings) -> RunInfo {
        assert_eq!(priors.len(), g.n_vars());
        assert_eq!(syndrome.len(), g.n_checks);
        let n = g.n_vars();
        self.prior_llr.clear();
        self.prior_llr.extend(priors.iter().map(|&p| llr(p)));
        self.v2c.clear();
        for v in 0..n {
            let d = (g.var_start[v + 1] - g.var_start[v]) as usize;
            self.v2c.extend(std::iter::repeat_n(self.prior_llr[v], d));
        }
        self.c2v.clear();
        self.c2v.resize(g.n_edges(), 0.0);
        self.posterior.clear();
        self.posterior.resize(n, 0.0);
        self.decision.clear();
        self.decision.resize(n, false);

        let mut satisfied = false;
        for it in 1..=settings.max_iters {
            for c in 0..g.n_checks {
                let edges = &g.check_edges[g.check_start[c] as usize..g.check_start[c + 1] as usize];
                let mut negative = syndrome[c];
                let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                for (k, &(_, e)) in edges.iter().enumerate() {
                    let m = self.v2c[e as usize];
                    negative ^= m < 0.0;
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = k;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for (k, &(_, e)) in edges.iter().enumerate() {
                    let m = self.v2c[e as usize];
                    let mag = if k == arg { min2 } else { min1 };
                    let neg = negative ^ (m < 0.0);
                    let out = settings.scale * mag.min(MSG_CAP);
                    self.c2v[e as usize] = if neg { -out } else { out };
                }
            }
            for v in 0..n {
                let range = g.var_start[v] as usize..g.var_start[v + 1] as usize;
                let total = self.prior_llr[v] + self.c2v[range.clone()].iter().sum::<f64>();
                self.posterior[v] = total;
                self.decision[v] = total < 0.0;
                for e in range {
                    self.v2c[e] = total - self.c2v[e];
                }
            }
            satisfied = self.satisfies(g, syndrome);
            if satisfied && settings.early_stop {
                return RunInfo { converged: true, iterations: it };
            }
        }
        RunInfo { converged: satisfied, iterations: settings.max_iters }
    }

    fn satisfies(&self, g: &TannerGraph, syndrome: &[bool]) -> bool {
        (0..g.n_checks).all(|c| {
            let edges = &g.check_edges[g.check_start[c] as usize..g.check_start[c + 1] as usize];
            edges.iter().fold(false, |acc, &(v, _)| acc ^ self.decision[v as usize]) == syndrome[c]
        })
    }
}

/// Runs min-sum BP on `syndrome` with the given per-variable priors.
pub fn bp_decode(graph: &TannerGraph, priors: &[f64], syndrome: &[bool], settings: &BpSettings) -> BpResult {
    let mut ws = Workspace::default();
    let info = ws.run(graph, priors, syndrome, settings);
    BpResult { posterior: ws.posterior, decision: ws.decision, converged: info.converged, iterations: info.iterations }
}

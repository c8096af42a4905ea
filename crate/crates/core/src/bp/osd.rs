//! Order-0 ordered statistics decoding over bit-packed GF(2) rows.

use super::{BpError, TannerGraph};

/// Reusable elimination workspace.
#[derive(Default)]
pub struct Osd {
    order: Vec<u32>,
    rows: Vec<u64>,
    syn: Vec<bool>,
    pivots: Vec<usize>,
}

impl Osd {
    /// Writes into `out` the solution of `H e = syndrome` supported on the
    /// first independent columns when variables are ordered from most to
    /// least likely flipped (`posterior` ascending, ties by index).
    pub fn solve(&mut self, g: &TannerGraph, syndrome: &[bool], posterior: &[f64], out: &mut Vec<bool>) -> Result<(), BpError> {
        if syndrome.len() != g.n_checks {
            return Err(BpError::SyndromeLength { got: syndrome.len(), expected: g.n_checks });
        }
        let n = g.n_vars();
        let m = g.n_checks;
        self.order.clear();
        self.order.extend(0..n as u32);
        self.order.sort_unstable_by(|&a, &b| posterior[a as usize].total_cmp(&posterior[b as usize]).then(a.cmp(&b)));

        let words = n.div_ceil(64).max(1);
        self.rows.clear();
        self.rows.resize(m * words, 0);
        for (j, &v) in self.order.iter().enumerate() {
            for &c in g.checks_of(v as usize) {
                self.rows[c as usize * words + j / 64] |= 1 << (j % 64);
            }
        }
        self.syn.clear();
        self.syn.extend_from_slice(syndrome);
        self.pivots.clear();

        // reduced row echelon form, one pivot column per row
        let mut rank = 0;
        for j in 0..n {
            if rank == m {
                break;
            }
            let (w, bit) = (j / 64, 1u64 << (j % 64));
            let Some(r) = (rank..m).find(|&r| self.rows[r * words + w] & bit != 0) else { continue };
            if r != rank {
                for k in w..words {
                    self.rows.swap(r * words + k, rank * words + k);
                }
                self.syn.swap(r, rank);
            }
            for r2 in 0..m {
                if r2 != rank && self.rows[r2 * words + w] & bit != 0 {
                    for k in w..words {
                        self.rows[r2 * words + k] ^= self.rows[rank * words + k];
                    }
                    self.syn[r2] ^= self.syn[rank];
                }
            }
            self.pivots.push(j);
            rank += 1;
        }
        if self.syn[rank..].iter().any(|&s| s) {
            return Err(BpError::Inconsistent);
        }
        out.clear();
        out.resize(n, false);
        for (row, &j) in self.pivots.iter().enumerate() {
            out[self.order[j] as usize] = self.syn[row];
        }
        Ok(())
    }
}

/// Convenience wrapper allocating a fresh workspace.
pub fn osd0(g: &TannerGraph, syndrome: &[bool], posterior: &[f64]) -> Result<Vec<bool>, BpError> {
    let mut out = Vec::new();
    Osd::default().solve(g, syndrome, posterior, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{bp_decode, BpSettings};
    use crate::pauli_sim::{DetectorErrorModel, Mechanism};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(cols: &[Vec<u32>], n_checks: usize) -> TannerGraph {
        // distinct obs values keep identical columns from being merged
        let mechanisms =
            cols.iter().enumerate().map(|(i, d)| Mechanism { prob: 0.1, dets: d.clone(), obs: i as u64, meas_tag: None }).collect();
        let dem = DetectorErrorModel { n_det: n_checks, n_obs: 64, det_basis: vec![None; n_checks], obs_basis: vec![None; 64], mechanisms };
        TannerGraph::from_dem(&dem, None)
    }

    #[test]
    fn identity_returns_the_syndrome() {
        let g = graph(&(0..5).map(|i| vec![i]).collect::<Vec<_>>(), 5);
        let s = vec![true, false, true, true, false];
        assert_eq!(osd0(&g, &s, &[0.0; 5]).unwrap(), s);
    }

    #[test]
    fn inconsistent_syndrome_is_reported() {
        // both columns hit checks 0 and 1 together
        let g = graph(&[vec![0, 1], vec![0, 1]], 2);
        assert_eq!(osd0(&g, &[true, false], &[0.0; 2]), Err(BpError::Inconsistent));
        assert!(osd0(&g, &[true], &[0.0; 2]).is_err());
    }

    #[test]
    fn reliability_order_picks_the_information_set() {
        // columns 0 and 1 both explain the syndrome on their own
        let g = graph(&[vec![0], vec![0]], 1);
        assert_eq!(osd0(&g, &[true], &[1.0, -1.0]).unwrap(), vec![false, true]);
        assert_eq!(osd0(&g, &[true], &[-1.0, 1.0]).unwrap(), vec![true, false]);
        // ties go to the lower index
        assert_eq!(osd0(&g, &[true], &[0.0, 0.0]).unwrap(), vec![true, false]);
    }

    #[test]
    fn random_sparse_systems_are_solved_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let cols: Vec<Vec<u32>> = (0..30)
                .map(|_| {
                    let mut c: Vec<u32> = (0..20).filter(|_| rng.random_bool(0.12)).collect();
                    if c.is_empty() {
                        c.push(rng.random_range(0..20));
                    }
                    c
                })
                .collect();
            let g = graph(&cols, 20);
            let e: Vec<bool> = (0..g.n_vars()).map(|_| rng.random_bool(0.2)).collect();
            let s = g.syndrome_of_error(&e);
            let post: Vec<f64> = (0..g.n_vars()).map(|_| rng.random_range(-5.0..5.0)).collect();
            let out = osd0(&g, &s, &post).unwrap();
            assert_eq!(g.syndrome_of_error(&out), s);
        }
    }

    #[test]
    fn converged_bp_solution_survives_osd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        for _ in 0..300 {
            let cols: Vec<Vec<u32>> =
                (0..12).map(|_| (0..8).filter(|_| rng.random_bool(0.3)).collect::<Vec<u32>>()).filter(|c| !c.is_empty()).collect();
            let g = graph(&cols, 8);
            let e: Vec<bool> = (0..g.n_vars()).map(|_| rng.random_bool(0.1)).collect();
            let s = g.syndrome_of_error(&e);
            let r = bp_decode(&g, &g.prior, &s, &BpSettings::default());
            if !r.converged {
                continue;
            }
            let out = osd0(&g, &s, &r.posterior).unwrap();
            let lp = |x: &[bool]| -> f64 { x.iter().zip(&g.prior).map(|(&b, &p)| if b { p.ln() } else { (1.0 - p).ln() }).sum() };
            assert!(lp(&out) >= lp(&r.decision) - 1e-12);
            checked += 1;
        }
        assert!(checked > 50);
    }
}

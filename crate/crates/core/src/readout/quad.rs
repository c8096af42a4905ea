//! One-dimensional numerics used by the readout models.

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, b]` by splitting into panels no wider than
/// `max_panel` and running adaptive Simpson on each. The panel limit keeps
/// narrow peaks from slipping between the initial sample points.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, max_panel: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == panels { b } else { lo + h };
            adaptive_simpson(f, lo, hi, panel_tol)
        })
        .sum()
}

/// Brackets the point in `[lo, hi]` where `pred` switches value, assuming
/// `pred(lo) != pred(hi)`. Returns the final `(lo, hi)` bracket.
pub fn bisect_switch<P: Fn(f64) -> bool>(pred: &P, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let at_lo = pred(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Splits `[lo, hi]` into maximal runs on which `label` is constant, probing a
/// uniform grid of `steps` cells and refining each change by bisection.
/// Returns `(start, end, label)` triples covering the interval.
pub fn label_segments<L: Fn(f64) -> u32>(label: &L, lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64, u32)> {
    let h = (hi - lo) / steps as f64;
    let mut segments = Vec::new();
    let mut start = lo;
    let mut current = label(lo);
    let mut prev_x = lo;
    for i in 1..=steps {
        let x = if i == steps { hi } else { lo + i as f64 * h };
        let end_label = label(x);
        // the label may change several times inside one cell; peel the
        // changes off from the left.
        let mut a = prev_x;
        while current != end_label {
            let cur = current;
            let (left, right) = bisect_switch(&|t| label(t) == cur, a, x);
            let switch = 0.5 * (left + right);
            segments.push((start, switch, cur));
            start = switch;
            current = label(right);
            a = right;
        }
        prev_x = x;
    }
    segments.push((start, hi, current));
    segments
}

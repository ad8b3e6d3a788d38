//! Scalar numerics shared by the solver and the oracle: uniform grids,
//! bracketing bisection, golden-section minimization and central differences.

/// `points` evenly spaced values from `lo` to `hi` inclusive. A single point
/// (or a degenerate interval) yields `[lo]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || hi <= lo {
        return vec![lo];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect()
}

/// Bisection on a bracket `[a, b]` where `f(a)` and `f(b)` have opposite
/// signs. Stops when the bracket is narrower than `tol` or a midpoint hits an
/// exact zero.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    if f(b) == 0.0 {
        return b;
    }
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`; endpoints are compared against the interior
/// estimate so a monotone `f` resolves to the right boundary.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (a, f(a)), (b, f(b))]
        .into_iter()
        .fold((mid, f64::INFINITY), |best, cand| {
            if cand.1 < best.1 {
                cand
            } else {
                best
            }
        })
}

/// Minimum of `f` over `[lo, hi]`: dense grid scan, then golden-section
/// refinement between the neighbours of the best grid point.
pub fn grid_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let grid = linspace(lo, hi, points.max(3));
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for (i, &u) in grid.iter().enumerate() {
        let v = f(u);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if grid.len() == 1 {
        return (grid[0], best);
    }
    let a = grid[best_i.saturating_sub(1)];
    let b = grid[(best_i + 1).min(grid.len() - 1)];
    let (u, v) = golden_min(&f, a, b, 1e-12 * (1.0 + a.abs().max(b.abs())));
    if v <= best {
        (u, v)
    } else {
        (grid[best_i], best)
    }
}

/// Step used for central differences at `u`.
pub fn fd_step(u: f64) -> f64 {
    1e-6 * (1.0 + u.abs())
}

/// Central-difference derivative of `f` at `u` with step [`fd_step`].
pub fn central_diff<F: Fn(f64) -> f64>(f: F, u: f64) -> f64 {
    let h = fd_step(u);
    (f(u + h) - f(u - h)) / (2.0 * h)
}

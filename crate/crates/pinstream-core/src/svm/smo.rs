//! Sequential minimal optimization for the soft-margin RBF dual. Pair
//! selection is greedy: the worst KKT violator first, its partner the index
//! maximizing |E₁ − E₂|, with a deterministic scan as fallback.

use crate::error::{Error, Result};

use super::rbf_kernel;

#[derive(Debug, Clone)]
pub struct SmoParams {
    /// KKT slack within which a multiplier counts as satisfied.
    pub tol: f64,
    /// Maximum full sweeps over the training set.
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams { tol: 1e-3, max_passes: 200 }
    }
}

/// Converged dual solution; `bias` follows f(x) = Σ αᵢyᵢk(xᵢ,x) − bias.
#[derive(Debug, Clone)]
pub struct SmoModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub passes: usize,
    /// Largest KKT violation at exit.
    pub kkt_violation: f64,
}

struct Solver<'a> {
    k: Vec<f64>,
    n: usize,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
}

impl<'a> Solver<'a> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    /// KKT violation magnitude at index i, using rᵢ = yᵢEᵢ = yᵢf(xᵢ) − 1.
    fn violation(&self, i: usize) -> f64 {
        let r = self.y[i] * self.err[i];
        let bound_eps = 1e-8 * self.c.max(1.0);
        if self.alpha[i] <= bound_eps {
            (-r).max(0.0)
        } else if self.alpha[i] >= self.c - bound_eps {
            r.max(0.0)
        } else {
            r.abs()
        }
    }

    fn max_violation(&self) -> f64 {
        (0..self.n).map(|i| self.violation(i)).fold(0.0, f64::max)
    }

    /// One analytic pair step; false when the pair cannot move.
    fn step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (ai_old, aj_old) = (self.alpha[i], self.alpha[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (lo, hi) = if yi != yj {
            ((aj_old - ai_old).max(0.0), (self.c + aj_old - ai_old).min(self.c))
        } else {
            ((ai_old + aj_old - self.c).max(0.0), (ai_old + aj_old).min(self.c))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let eta = self.kij(i, i) + self.kij(j, j) - 2.0 * self.kij(i, j);
        if eta <= 1e-12 {
            return false;
        }
        let mut aj = aj_old + yj * (self.err[i] - self.err[j]) / eta;
        aj = aj.clamp(lo, hi);
        let d_aj = aj - aj_old;
        if d_aj.abs() < 1e-12 {
            return false;
        }
        let d_ai = -yi * yj * d_aj;
        let ai = (ai_old + d_ai).clamp(0.0, self.c);

        let b_old = self.b;
        let b1 = self.err[i] + yi * d_ai * self.kij(i, i) + yj * d_aj * self.kij(i, j) + b_old;
        let b2 = self.err[j] + yi * d_ai * self.kij(i, j) + yj * d_aj * self.kij(j, j) + b_old;
        let bound_eps = 1e-8 * self.c.max(1.0);
        let interior_i = ai > bound_eps && ai < self.c - bound_eps;
        let interior_j = aj > bound_eps && aj < self.c - bound_eps;
        self.b = if interior_i {
            b1
        } else if interior_j {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let db = self.b - b_old;
        for kdx in 0..self.n {
            self.err[kdx] +=
                yi * d_ai * self.kij(i, kdx) + yj * d_aj * self.kij(j, kdx) - db;
        }
        true
    }

    /// Re-derives the bias from the current multipliers: interior points pin
    /// it exactly; with every multiplier at a bound the constraints only
    /// bracket it, so take the bracket midpoint. Pair steps are unaffected
    /// (they use error differences), but KKT measurement needs the best bias,
    /// otherwise an optimal all-bound solution can read as violating.
    fn recenter_bias(&mut self) {
        let bound_eps = 1e-8 * self.c.max(1.0);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut interior_sum = 0.0;
        let mut interior_n = 0usize;
        for i in 0..self.n {
            // err = g − b − y with g the bias-free decision value, so
            // h = g − y is the bias that would put this point on its margin.
            let h = self.err[i] + self.b;
            let at_zero = self.alpha[i] <= bound_eps;
            let at_c = self.alpha[i] >= self.c - bound_eps;
            if !at_zero && !at_c {
                interior_sum += h;
                interior_n += 1;
            } else if (at_zero && self.y[i] > 0.0) || (at_c && self.y[i] < 0.0) {
                hi = hi.min(h);
            } else {
                lo = lo.max(h);
            }
        }
        let b_new = if interior_n > 0 {
            interior_sum / interior_n as f64
        } else if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            self.b
        };
        let db = b_new - self.b;
        if db != 0.0 {
            self.b = b_new;
            for e in &mut self.err {
                *e -= db;
            }
        }
    }

    /// Partner with the largest |Eᵢ − Eⱼ| first, then a deterministic scan.
    fn try_index(&mut self, i: usize) -> bool {
        let mut best_j = usize::MAX;
        let mut best_gap = -1.0;
        for j in 0..self.n {
            if j == i {
                continue;
            }
            let gap = (self.err[i] - self.err[j]).abs();
            if gap > best_gap {
                best_gap = gap;
                best_j = j;
            }
        }
        if best_j != usize::MAX && self.step(i, best_j) {
            return true;
        }
        for off in 1..self.n {
            let j = (i + off) % self.n;
            if j != best_j && self.step(i, j) {
                return true;
            }
        }
        false
    }
}

/// Trains the dual on `rows` with labels `y` ∈ {−1, +1}. Fails with
/// `DegenerateLabels` when only one class is present and with
/// `ConvergenceFailure` when KKT violations persist after the pass budget.
pub fn smo_train(
    rows: &[Vec<f64>],
    y: &[f64],
    c: f64,
    gamma: f64,
    params: &SmoParams,
) -> Result<SmoModel> {
    let n = rows.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch { left: n, right: y.len() });
    }
    if n == 0 || !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(Error::DegenerateLabels);
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf_kernel(&rows[i], &rows[j], gamma)?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let mut solver = Solver {
        k,
        n,
        y,
        c,
        tol: params.tol,
        alpha: vec![0.0; n],
        err: y.iter().map(|&v| -v).collect(),
        b: 0.0,
    };

    let mut passes = 0;
    while passes < params.max_passes {
        passes += 1;
        // Sweep order: worst violators first, index as deterministic tiebreak.
        let mut order: Vec<usize> = (0..n).collect();
        let viol: Vec<f64> = (0..n).map(|i| solver.violation(i)).collect();
        order.sort_by(|&a, &b| viol[b].partial_cmp(&viol[a]).unwrap().then(a.cmp(&b)));
        let mut changed = 0;
        for &i in &order {
            if solver.violation(i) > solver.tol && solver.try_index(i) {
                changed += 1;
            }
        }
        solver.recenter_bias();
        let worst = solver.max_violation();
        if worst <= solver.tol {
            return Ok(SmoModel {
                alpha: solver.alpha,
                bias: solver.b,
                passes,
                kkt_violation: worst,
            });
        }
        if changed == 0 {
            // No pair can move; further sweeps would repeat verbatim.
            break;
        }
    }
    Err(Error::ConvergenceFailure { violation: solver.max_violation(), passes })
}

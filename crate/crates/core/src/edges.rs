//! Spectral edges of the cover operator from the min-max formula
//!
//! ```text
//! ρ_r = inf_{y > 0} max_i g_i(y),
//! g_i(y) = b_i + (2 - deg i + Σ_e √(1 + 4a²y_i y_j) + Σ_whole 2√(1 + 4a²y_i²)
//!          + Σ_half √(1 + 4a²y_i²)) / (2 y_i).
//! ```
//!
//! A positive `y` with `g_i(y) = t` for all `i` is exactly a positive real fixed
//! point of the Aomoto equations at `z = t`, and exists iff `t ≥ ρ_r`. The right
//! edge is found by bisection on `t` with that fixed point as the feasibility
//! test; the left edge is the negated right edge of `-A`.

use crate::aomoto::AomotoSystem;
use crate::eigen::sym_eigenvalues;
use crate::error::{Error, Result};
use crate::graph::JacobiGraph;
use crate::linalg::solve_real;
use crate::scalar::Real;

/// Fixed-point iterations allowed per feasibility test.
pub const FEASIBILITY_ITER_CAP: usize = 10_000;
/// Iterates above this bound count as divergent.
pub const FEASIBILITY_BLOWUP: f64 = 1e6;

/// One spectral edge with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEstimate<T = f64> {
    pub rho: T,
    /// Positive point at which all `g_i` (nearly) coincide.
    pub certificate_y: Vec<T>,
    /// `max_i g_i(y) - min_i g_i(y)` at the certificate point.
    pub certificate_gap: T,
    /// `max_i g_i(y)`: a rigorous upper bound for the right edge.
    pub certificate_value: T,
    pub certified: bool,
    pub tolerance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEdges<T = f64> {
    pub rho_l: T,
    pub rho_r: T,
    pub left: EdgeEstimate<T>,
    pub right: EdgeEstimate<T>,
}

impl<T: Real> SpectralEdges<T> {
    pub fn certified(&self) -> bool {
        self.left.certified && self.right.certified
    }

    pub fn certificate_gap(&self) -> T {
        self.left.certificate_gap.max(self.right.certificate_gap)
    }
}

/// `g_i(y)` for every vertex.
pub fn minmax_terms<T: Real>(g: &JacobiGraph<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != g.n() {
        return Err(Error::invalid("y must have one entry per vertex"));
    }
    if y.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::invalid("y must be positive and finite"));
    }
    let sys = AomotoSystem::new(g);
    Ok(terms_from(&sys, y).expect("square-root arguments are positive for positive y"))
}

fn terms_from<T: Real>(sys: &AomotoSystem<T>, y: &[T]) -> Option<Vec<T>> {
    let s = sys.sums_real(y)?;
    let two = T::lit(2.0);
    Some(
        (0..y.len())
            .map(|i| sys.potential(i) + s[i] / (two * y[i]))
            .collect(),
    )
}

/// `max_i g_i(y)`, an upper bound for the right edge for every positive `y`.
pub fn minmax_value<T: Real>(g: &JacobiGraph<T>, y: &[T]) -> Result<T> {
    Ok(minmax_terms(g, y)?
        .into_iter()
        .fold(T::neg_infinity(), T::max))
}

/// Positive real fixed point of the Aomoto equations at `z = t`, if one is
/// found. Damped iteration from `1/(t - b)` with Newton polishing at
/// iterations 16, 32, 64, …; fails on nonpositive or blown-up iterates and at
/// the iteration cap.
fn feasible_point<T: Real>(sys: &AomotoSystem<T>, t: T, tol: T) -> Option<Vec<T>> {
    let n = sys.len();
    if (0..n).any(|u| t <= sys.potential(u)) {
        return None;
    }
    let two = T::lit(2.0);
    let theta = T::lit(0.5);
    let blowup = T::lit(FEASIBILITY_BLOWUP);
    let mut w: Vec<T> = (0..n).map(|u| T::one() / (t - sys.potential(u))).collect();
    let mut next_newton = 16usize;
    for it in 1..=FEASIBILITY_ITER_CAP {
        let s = sys.sums_real(&w)?;
        let mut moved = T::zero();
        for u in 0..n {
            let rhs = s[u] / (two * (t - sys.potential(u)));
            let new = w[u] + theta * (rhs - w[u]);
            if !(new > T::zero()) || new > blowup {
                return None;
            }
            moved = moved.max((new - w[u]).abs());
            w[u] = new;
        }
        if moved < tol * T::lit(1e-3) || it == next_newton {
            if let Some(root) = newton_real(sys, t, &w) {
                return Some(root);
            }
            next_newton *= 2;
        }
    }
    None
}

fn newton_real<T: Real>(sys: &AomotoSystem<T>, t: T, start: &[T]) -> Option<Vec<T>> {
    let n = sys.len();
    let two = T::lit(2.0);
    let blowup = T::lit(FEASIBILITY_BLOWUP);
    let mut w = start.to_vec();
    let mut m = vec![T::zero(); n * n];
    for _ in 0..60 {
        let s = sys.sums_real(&w)?;
        let mut r: Vec<T> = (0..n)
            .map(|u| s[u] / (two * (t - sys.potential(u))) - w[u])
            .collect();
        let scale = w.iter().fold(T::one(), |a, &b| a.max(b));
        let resid = r.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if resid <= T::lit(256.0) * T::epsilon() * scale {
            return Some(w);
        }
        sys.newton_matrix_real(t, &w, &mut m);
        if !solve_real(&mut m, &mut r, n) {
            return None;
        }
        for u in 0..n {
            w[u] += r[u];
            if !(w[u] > T::zero()) || w[u] > blowup || !w[u].is_finite() {
                return None;
            }
        }
    }
    None
}

/// Right edge of the spectrum of the cover operator, within `tol`.
pub fn right_edge<T: Real>(g: &JacobiGraph<T>, tol: T) -> Result<EdgeEstimate<T>> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let sys = AomotoSystem::new(g);
    let rsb = g.row_sum_bound();
    let b_min = g.b().iter().copied().fold(T::infinity(), T::min);
    let b_max = g.b().iter().copied().fold(T::neg_infinity(), T::max);
    let upper = rsb + T::one();
    // No positive fixed point exists at or below max b, so the bracket can
    // start there whenever the nominal lower end lies above it.
    let mut lo = (b_min - rsb).min(b_max);
    let mut hi = upper;
    let mut w_hi = feasible_point(&sys, hi, tol).ok_or_else(|| {
        Error::Internal(format!(
            "no positive fixed point at the upper bracket t = {hi}"
        ))
    })?;
    while hi - lo > tol {
        let mid = lo + (hi - lo) * T::lit(0.5);
        match feasible_point(&sys, mid, tol) {
            Some(w) => {
                hi = mid;
                w_hi = w;
            }
            None => lo = mid,
        }
    }
    let rho = hi;
    let y = feasible_point(&sys, rho + tol, tol).unwrap_or(w_hi);
    let terms = terms_from(&sys, &y)
        .ok_or_else(|| Error::Internal("certificate point is invalid".into()))?;
    let max = terms.iter().copied().fold(T::neg_infinity(), T::max);
    let min = terms.iter().copied().fold(T::infinity(), T::min);
    let certified = max - (rho + tol) <= T::lit(10.0) * tol;
    Ok(EdgeEstimate {
        rho,
        certificate_y: y,
        certificate_gap: max - min,
        certificate_value: max,
        certified,
        tolerance: tol,
    })
}

/// Left edge: `-ρ_r(-A)`. The certificate refers to the negated graph.
pub fn left_edge<T: Real>(g: &JacobiGraph<T>, tol: T) -> Result<EdgeEstimate<T>> {
    let mut e = right_edge(&g.negate(), tol)?;
    e.rho = -e.rho;
    e.certificate_value = -e.certificate_value;
    Ok(e)
}

pub fn spectral_edges<T: Real>(g: &JacobiGraph<T>, tol: T) -> Result<SpectralEdges<T>> {
    let right = right_edge(g, tol)?;
    let left = left_edge(g, tol)?;
    Ok(SpectralEdges {
        rho_l: left.rho,
        rho_r: right.rho,
        left,
        right,
    })
}

/// Sup-norm residuals of the three groups of the Lagrange system
/// `Σλ = 1`, `λ_i (t - b_i) = Σ_e a²(y_j λ_i + y_i λ_j)/√(1 + 4a²y_i y_j)`,
/// `t = g_i(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerResidual<T = f64> {
    pub normalization: T,
    pub stationarity: T,
    pub equalization: T,
}

impl<T: Real> EqualizerResidual<T> {
    pub fn max(&self) -> T {
        self.normalization
            .max(self.stationarity)
            .max(self.equalization)
    }
}

pub fn equalizer_residual<T: Real>(
    g: &JacobiGraph<T>,
    t: T,
    y: &[T],
    lambda: &[T],
) -> Result<EqualizerResidual<T>> {
    if lambda.len() != g.n() {
        return Err(Error::invalid("lambda must have one entry per vertex"));
    }
    let terms = minmax_terms(g, y)?;
    let sys = AomotoSystem::new(g);
    let stat = sys.stationarity(y, lambda);
    let normalization = (lambda.iter().copied().sum::<T>() - T::one()).abs();
    let stationarity = (0..g.n())
        .map(|i| (lambda[i] * (t - g.b()[i]) - stat[i]).abs())
        .fold(T::zero(), T::max);
    let equalization = terms.iter().map(|&x| (x - t).abs()).fold(T::zero(), T::max);
    Ok(EqualizerResidual {
        normalization,
        stationarity,
        equalization,
    })
}

/// Degree bounds for adjacency operators and the top eigenvalue of the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralBounds<T = f64> {
    /// `2√(d_avg - 1)`.
    pub hoory_lower: T,
    /// `2√(d_max - 1)`.
    pub dmax_upper: T,
    pub lambda_max_base: T,
}

/// Bounds for the adjacency case (unit coefficients, zero potentials, no
/// half-loops); `None` otherwise.
pub fn structural_bounds<T: Real>(g: &JacobiGraph<T>) -> Result<Option<StructuralBounds<T>>> {
    if !g.is_adjacency() {
        return Ok(None);
    }
    let deg = g.degree_profile();
    let two = T::lit(2.0);
    let f = |d: f64| two * T::lit((d - 1.0).max(0.0)).sqrt();
    let spectrum = sym_eigenvalues(&g.dense_operator())?;
    Ok(Some(StructuralBounds {
        hoory_lower: f(deg.average()),
        dmax_upper: f(deg.max() as f64),
        lambda_max_base: spectrum.max().unwrap_or_else(T::zero),
    }))
}

/// Debug fallback: coordinate descent on `log y` for `max_i g_i(y)`. Returns
/// the best upper bound found and its point.
pub fn minmax_descent<T: Real>(g: &JacobiGraph<T>, sweeps: usize) -> Result<(T, Vec<T>)> {
    let sys = AomotoSystem::new(g);
    let eval = |y: &[T]| terms_from(&sys, y).map(|v| v.into_iter().fold(T::neg_infinity(), T::max));
    let mut log_y = vec![T::zero(); g.n()];
    let to_y = |l: &[T]| l.iter().map(|x| x.exp()).collect::<Vec<T>>();
    let mut best = T::infinity();
    let ratio = T::lit(0.618_033_988_749_894_8);
    for sweep in 0..sweeps {
        let width = T::lit(4.0) / T::count(sweep + 1);
        for i in 0..g.n() {
            let old = log_y[i];
            let at = |x: T, l: &mut Vec<T>| {
                l[i] = x;
                eval(&to_y(l)).unwrap_or_else(T::infinity)
            };
            let before = at(old, &mut log_y);
            let (mut a, mut b) = (old - width, old + width);
            for _ in 0..60 {
                let c = b - (b - a) * ratio;
                let d = a + (b - a) * ratio;
                if at(c, &mut log_y) < at(d, &mut log_y) {
                    b = d;
                } else {
                    a = c;
                }
            }
            if at((a + b) * T::lit(0.5), &mut log_y) > before {
                log_y[i] = old;
            }
        }
        best = eval(&to_y(&log_y)).unwrap_or(best);
    }
    Ok((best, to_y(&log_y)))
}

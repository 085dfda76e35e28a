//! Rooted Cauchy transforms of the cover operator from the Aomoto equations.
//!
//! For each base vertex `u` the transform `w_u(z) = ⟨δ_ũ, (z - A_T)^{-1} δ_ũ⟩`
//! satisfies
//!
//! ```text
//! w_u = (2 - deg u + Σ_e √(1 + 4a²w_u w_v) + Σ_whole 2√(1 + 4a²w_u²)
//!        + Σ_half √(1 + 4a²w_u²)) / (2 (z - b_u))
//! ```
//!
//! with principal square roots. The solver runs Newton steps on
//! `w - RHS(w) = 0` (or plain damped iteration when Newton is disabled) and
//! reaches points near the real axis by continuation in `Im z`.

use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::JacobiGraph;
use crate::linalg::solve_complex;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T = f64> {
    /// Stop when the sup-norm step and the residual fall below `tol`, relative
    /// to `max(1, max |w|)`.
    pub tol: T,
    /// Damping of the plain fixed-point iteration.
    pub theta: T,
    pub max_iter: usize,
    /// Newton steps instead of damped fixed-point steps.
    pub newton: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tol: T::lit(1e-12).max(T::epsilon() * T::lit(64.0)),
            theta: T::lit(0.5),
            max_iter: 100_000,
            newton: true,
        }
    }
}

/// Halvings of the step length allowed when an iterate leaves the lower
/// half-plane.
pub const MAX_HALVINGS: u32 = 6;

/// Newton converges quadratically or not at all; stop early when it stalls.
pub const NEWTON_MAX_ITER: usize = 100;

/// Transforms `w_u(z)` for all base vertices at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyVector<T = f64> {
    pub z: Complex<T>,
    pub w: Vec<Complex<T>>,
    /// `‖w - RHS(w)‖_∞`.
    pub residual: T,
    pub converged: bool,
    pub iterations: usize,
    /// Square roots of the equations, on the branch reached by continuation
    /// from infinity. Listed per vertex: neighbors, whole-loops, half-loops.
    pub roots: Vec<Complex<T>>,
}

struct Terms<T> {
    b: T,
    two_minus_deg: T,
    /// `(v, 4a²)` per non-loop edge at this vertex.
    nbrs: Vec<(usize, T)>,
    /// `4a²` per whole-loop.
    whole: Vec<T>,
    /// `4a²` per half-loop.
    half: Vec<T>,
}

/// Per-vertex data of the system.
pub(crate) struct AomotoSystem<T> {
    terms: Vec<Terms<T>>,
    /// Start of each vertex's block of square roots.
    offsets: Vec<usize>,
    /// Bound on the spectral radius of the cover operator.
    reach: T,
}

impl<T: Real> AomotoSystem<T> {
    pub(crate) fn new(g: &JacobiGraph<T>) -> Self {
        let deg = g.degree_profile().deg;
        let four = T::lit(4.0);
        let mut terms: Vec<Terms<T>> = (0..g.n())
            .map(|u| Terms {
                b: g.b()[u],
                two_minus_deg: T::lit(2.0) - T::count(deg[u]),
                nbrs: Vec::new(),
                whole: Vec::new(),
                half: Vec::new(),
            })
            .collect();
        for e in g.edges() {
            let c = four * e.a * e.a;
            terms[e.u].nbrs.push((e.v, c));
            terms[e.v].nbrs.push((e.u, c));
        }
        for l in g.whole_loops() {
            terms[l.v].whole.push(four * l.a * l.a);
        }
        for l in g.half_loops() {
            terms[l.v].half.push(four * l.a * l.a);
        }
        let mut offsets = Vec::with_capacity(terms.len() + 1);
        let mut k = 0;
        for t in &terms {
            offsets.push(k);
            k += t.nbrs.len() + t.whole.len() + t.half.len();
        }
        offsets.push(k);
        AomotoSystem {
            terms,
            offsets,
            reach: reach(g),
        }
    }

    fn arguments(&self, w: &[Complex<T>]) -> impl Iterator<Item = Complex<T>> + '_ {
        let one = Complex::new(T::one(), T::zero());
        let w = w.to_vec();
        self.terms.iter().enumerate().flat_map(move |(u, t)| {
            let wu = w[u];
            let edge: Vec<Complex<T>> = t.nbrs.iter().map(|&(v, c)| one + wu * w[v] * c).collect();
            let own = t
                .whole
                .iter()
                .chain(&t.half)
                .map(move |&c| one + wu * wu * c);
            edge.into_iter().chain(own).collect::<Vec<_>>()
        })
    }

    /// Principal square roots at `w`; the correct branch near infinity.
    fn principal_roots(&self, w: &[Complex<T>]) -> Vec<Complex<T>> {
        self.arguments(w).map(|x| x.sqrt()).collect()
    }

    /// Moves `roots` to `w`, choosing for each root the sign closest to its
    /// previous value.
    fn track_roots(&self, w: &[Complex<T>], roots: &mut [Complex<T>]) {
        for (r, x) in roots.iter_mut().zip(self.arguments(w)) {
            let p = x.sqrt();
            *r = if (p - *r).norm() <= (p + *r).norm() {
                p
            } else {
                -p
            };
        }
    }

    fn n(&self) -> usize {
        self.terms.len()
    }

    fn check_pole(&self, z: Complex<T>) -> Result<()> {
        for (u, t) in self.terms.iter().enumerate() {
            if z.im.is_zero() && z.re == t.b {
                return Err(Error::invalid(format!(
                    "z coincides with the potential of vertex {u}"
                )));
            }
        }
        Ok(())
    }

    fn rhs(&self, z: Complex<T>, roots: &[Complex<T>], out: &mut [Complex<T>]) {
        let two = T::lit(2.0);
        for (u, t) in self.terms.iter().enumerate() {
            let r = &roots[self.offsets[u]..self.offsets[u + 1]];
            let (edge, own) = r.split_at(t.nbrs.len());
            let (whole, half) = own.split_at(t.whole.len());
            let mut s = Complex::new(t.two_minus_deg, T::zero());
            s += edge.iter().copied().sum::<Complex<T>>();
            s += whole.iter().copied().sum::<Complex<T>>() * two;
            s += half.iter().copied().sum::<Complex<T>>();
            out[u] = s / ((z - t.b) * two);
        }
    }

    /// Newton matrix `I - ∂RHS/∂w`, row-major.
    fn newton_matrix(
        &self,
        z: Complex<T>,
        w: &[Complex<T>],
        roots: &[Complex<T>],
        m: &mut [Complex<T>],
    ) {
        let n = self.n();
        let one = Complex::new(T::one(), T::zero());
        let two = T::lit(2.0);
        m.iter_mut()
            .for_each(|x| *x = Complex::new(T::zero(), T::zero()));
        for (u, t) in self.terms.iter().enumerate() {
            let scale = one / ((z - t.b) * two);
            let wu = w[u];
            let mut rs = roots[self.offsets[u]..self.offsets[u + 1]].iter();
            let mut diag = Complex::new(T::zero(), T::zero());
            for &(v, c) in &t.nbrs {
                let r = *rs.next().unwrap();
                diag += w[v] * c / (r * two);
                m[u * n + v] -= scale * wu * c / (r * two);
            }
            for &c in &t.whole {
                let r = *rs.next().unwrap();
                diag += wu * c * two / r;
            }
            for &c in &t.half {
                let r = *rs.next().unwrap();
                diag += wu * c / r;
            }
            m[u * n + u] += one - scale * diag;
        }
    }
}

/// Real evaluations used by the spectral-edge computations.
impl<T: Real> AomotoSystem<T> {
    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn potential(&self, u: usize) -> T {
        self.terms[u].b
    }

    /// `2 - deg u + Σ √(1 + 4a²y_u y_v) + …` for every vertex, or `None` if a
    /// square root has a negative argument.
    pub(crate) fn sums_real(&self, y: &[T]) -> Option<Vec<T>> {
        let two = T::lit(2.0);
        let mut out = Vec::with_capacity(y.len());
        for (u, t) in self.terms.iter().enumerate() {
            let yu = y[u];
            let mut s = t.two_minus_deg;
            for &(v, c) in &t.nbrs {
                let arg = T::one() + c * yu * y[v];
                if arg < T::zero() {
                    return None;
                }
                s += arg.sqrt();
            }
            for &c in &t.whole {
                s += two * (T::one() + c * yu * yu).sqrt();
            }
            for &c in &t.half {
                s += (T::one() + c * yu * yu).sqrt();
            }
            out.push(s);
        }
        Some(out)
    }

    /// Newton matrix `I - ∂RHS/∂w` at real `t`, row-major.
    pub(crate) fn newton_matrix_real(&self, t: T, w: &[T], m: &mut [T]) {
        let n = self.len();
        let two = T::lit(2.0);
        m.iter_mut().for_each(|x| *x = T::zero());
        for (u, term) in self.terms.iter().enumerate() {
            let scale = T::one() / (two * (t - term.b));
            let wu = w[u];
            let mut diag = T::zero();
            for &(v, c) in &term.nbrs {
                let r = (T::one() + c * wu * w[v]).sqrt();
                diag += c * w[v] / (two * r);
                m[u * n + v] -= scale * c * wu / (two * r);
            }
            for &c in &term.whole {
                diag += two * c * wu / (T::one() + c * wu * wu).sqrt();
            }
            for &c in &term.half {
                diag += c * wu / (T::one() + c * wu * wu).sqrt();
            }
            m[u * n + u] += T::one() - scale * diag;
        }
    }

    /// Stationarity terms `Σ_e a²(y_j λ_i + y_i λ_j)/√(1 + 4a²y_i y_j)` with
    /// whole-loops counted twice.
    pub(crate) fn stationarity(&self, y: &[T], lambda: &[T]) -> Vec<T> {
        let quarter = T::lit(0.25);
        let two = T::lit(2.0);
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut s = T::zero();
                for &(j, c) in &t.nbrs {
                    s += quarter * c * (y[j] * lambda[i] + y[i] * lambda[j])
                        / (T::one() + c * y[i] * y[j]).sqrt();
                }
                let self_term = |c: T| {
                    quarter * c * two * y[i] * lambda[i] / (T::one() + c * y[i] * y[i]).sqrt()
                };
                for &c in &t.whole {
                    s += two * self_term(c);
                }
                for &c in &t.half {
                    s += self_term(c);
                }
                s
            })
            .collect()
    }
}

/// Right-hand side of the Aomoto equations at `(z, w)`, with principal
/// square roots.
pub fn aomoto_rhs<T: Real>(
    g: &JacobiGraph<T>,
    z: Complex<T>,
    w: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if w.len() != g.n() {
        return Err(Error::invalid("w must have one entry per vertex"));
    }
    let sys = AomotoSystem::new(g);
    sys.check_pole(z)?;
    let mut out = vec![Complex::new(T::zero(), T::zero()); g.n()];
    sys.rhs(z, &sys.principal_roots(w), &mut out);
    Ok(out)
}

fn sup_dist<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max)
}

/// Solves the Aomoto equations at `z`.
///
/// Requires `Im z ≠ 0`, or real `z` outside the convex hull of the tree
/// spectrum. Points in the lower half-plane are handled by conjugation.
/// An unconverged result is returned with `converged = false`.
pub fn solve_cauchy<T: Real>(
    g: &JacobiGraph<T>,
    z: Complex<T>,
    opts: &SolveOptions<T>,
    warm_start: Option<&[Complex<T>]>,
) -> Result<CauchyVector<T>> {
    let sys = AomotoSystem::new(g);
    if z.im < T::zero() {
        let warm: Option<Vec<Complex<T>>> =
            warm_start.map(|w| w.iter().map(|x| x.conj()).collect());
        let mut cv = solve_system(&sys, z.conj(), opts, warm.as_deref(), None)?;
        cv.z = z;
        cv.w.iter_mut().for_each(|x| *x = x.conj());
        cv.roots.iter_mut().for_each(|x| *x = x.conj());
        return Ok(cv);
    }
    if z.im.is_zero() {
        let sums = g.abs_coefficient_sums();
        let hi = g.row_sum_bound();
        let lo = g
            .b()
            .iter()
            .zip(&sums)
            .map(|(&b, &s)| b - s)
            .fold(T::infinity(), T::min);
        // Strictly inside the Gershgorin interval the cheap test is
        // inconclusive; compare against the computed edges instead.
        if z.re > lo && z.re < hi {
            let e =
                crate::edges::spectral_edges(g, T::lit(1e-10).max(T::epsilon() * T::lit(64.0)))?;
            if z.re >= e.rho_l && z.re <= e.rho_r {
                return Err(Error::invalid(format!(
                    "real z = {} lies inside the spectral hull [{}, {}]",
                    z.re, e.rho_l, e.rho_r
                )));
            }
        }
    }
    if z.im > T::zero() && warm_start.is_none() {
        // A cold start near the real axis can land on the wrong branch of the
        // square roots; descend from far above instead.
        sys.check_pole(z)?;
        let (cv, _, _) = continue_down(&sys, z.re, z.im, sys.reach, None, opts);
        return match cv {
            Some(cv) => Ok(cv),
            None => solve_system(&sys, z, opts, None, None),
        };
    }
    solve_system(&sys, z, opts, warm_start, None)
}

/// `max_u (|b_u| + Σ |a|)`: a bound on the spectral radius of the cover.
fn reach<T: Real>(g: &JacobiGraph<T>) -> T {
    g.b()
        .iter()
        .zip(&g.abs_coefficient_sums())
        .map(|(&b, &s)| b.abs() + s)
        .fold(T::zero(), T::max)
}

/// Solver core. `warm_roots` gives the branch of every square root at the
/// warm start; without it the principal branch is assumed.
fn solve_system<T: Real>(
    sys: &AomotoSystem<T>,
    z: Complex<T>,
    opts: &SolveOptions<T>,
    warm_start: Option<&[Complex<T>]>,
    warm_roots: Option<&[Complex<T>]>,
) -> Result<CauchyVector<T>> {
    sys.check_pole(z)?;
    let n = sys.n();
    if let Some(w) = warm_start {
        if w.len() != n {
            return Err(Error::invalid("warm start has the wrong length"));
        }
    }
    let one = Complex::new(T::one(), T::zero());
    let initial: Vec<Complex<T>> = match warm_start {
        Some(w) => w.to_vec(),
        None => sys.terms.iter().map(|t| one / (z - t.b)).collect(),
    };
    let upper = z.im > T::zero();
    let escaped = |w: &[Complex<T>]| {
        w.iter()
            .any(|x| !x.re.is_finite() || !x.im.is_finite() || (upper && x.im > T::zero()))
    };

    let initial_roots = match warm_roots {
        Some(r) if r.len() == sys.offsets[n] => r.to_vec(),
        _ => sys.principal_roots(&initial),
    };
    let mut w = initial.clone();
    let mut roots = initial_roots.clone();
    let mut rhs = vec![Complex::new(T::zero(), T::zero()); n];
    let mut step = vec![Complex::new(T::zero(), T::zero()); n];
    let mut mat = vec![Complex::new(T::zero(), T::zero()); n * n];
    let mut trial = w.clone();
    let mut theta = if opts.newton { T::one() } else { opts.theta };
    let mut halvings = 0u32;
    let mut iterations = 0usize;
    let mut converged = false;
    let mut failed = false;

    let cap = if opts.newton {
        opts.max_iter.min(NEWTON_MAX_ITER)
    } else {
        opts.max_iter
    };
    // Tolerances are relative to the size of the transforms, which grow like
    // 1/Im z near atoms.
    let scale = |w: &[Complex<T>]| w.iter().map(|x| x.norm()).fold(T::one(), T::max);
    while iterations < cap {
        iterations += 1;
        sys.track_roots(&w, &mut roots);
        sys.rhs(z, &roots, &mut rhs);
        for u in 0..n {
            step[u] = rhs[u] - w[u];
        }
        let residual = step.iter().map(|x| x.norm()).fold(T::zero(), T::max);
        if opts.newton {
            sys.newton_matrix(z, &w, &roots, &mut mat);
            if !solve_complex(&mut mat, &mut step, n) {
                failed = true;
                break;
            }
            // Backtrack while the step leaves the lower half-plane.
            let mut lambda = T::one();
            let mut ok = false;
            for _ in 0..=MAX_HALVINGS {
                for u in 0..n {
                    trial[u] = w[u] + step[u] * lambda;
                }
                if !escaped(&trial) {
                    ok = true;
                    break;
                }
                lambda *= T::lit(0.5);
            }
            if !ok {
                failed = true;
                break;
            }
        } else {
            for u in 0..n {
                trial[u] = w[u] + step[u] * theta;
            }
            if escaped(&trial) {
                if halvings == MAX_HALVINGS {
                    failed = true;
                    break;
                }
                halvings += 1;
                theta *= T::lit(0.5);
                w.clone_from(&initial);
                roots.clone_from(&initial_roots);
                continue;
            }
        }
        let moved = sup_dist(&trial, &w);
        std::mem::swap(&mut w, &mut trial);
        let tol = opts.tol * scale(&w);
        if moved < tol && residual <= tol {
            converged = true;
            break;
        }
    }
    sys.track_roots(&w, &mut roots);
    sys.rhs(z, &roots, &mut rhs);
    let residual = sup_dist(&w, &rhs);
    // A Cauchy transform of a probability measure on [-R, R] has
    // -Im w ≥ y / ((|x| + R)² + y²); spurious branch solutions near w = 0
    // violate this.
    let floor = if upper {
        let d = z.re.abs() + sys.reach;
        T::lit(0.5) * z.im / (d * d + z.im * z.im)
    } else {
        T::zero()
    };
    let herglotz = !upper || w.iter().all(|x| -x.im >= floor);
    Ok(CauchyVector {
        z,
        residual,
        converged: converged
            && !failed
            && herglotz
            && residual <= opts.tol * T::lit(10.0) * scale(&w),
        w,
        iterations,
        roots,
    })
}

/// Mean of the rooted transforms: the Cauchy transform of the density of
/// states.
pub fn mean_transform<T: Real>(cv: &CauchyVector<T>) -> Result<Complex<T>> {
    if !cv.converged {
        return Err(Error::Numeric(format!(
            "transform at z = {} did not converge",
            cv.z
        )));
    }
    let s: Complex<T> =
        cv.w.iter()
            .fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b);
    Ok(s / T::count(cv.w.len()))
}

/// Density of states sampled on a grid, smoothed at height `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve<T = f64> {
    pub x: Vec<T>,
    pub density: Vec<T>,
    pub converged: Vec<bool>,
    /// Points where `density · π · eta > 0.05`, the signature of an atom.
    pub atom: Vec<bool>,
    pub eta: T,
}

impl<T: Real> DensityCurve<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn converged_fraction(&self) -> f64 {
        if self.converged.is_empty() {
            return 0.0;
        }
        self.converged.iter().filter(|&&c| c).count() as f64 / self.converged.len() as f64
    }

    /// Trapezoid rule over the whole grid.
    pub fn total_mass(&self) -> T {
        trapezoid(&self.x, &self.density)
    }

    /// Density at the grid point nearest to `x`.
    pub fn at(&self, x: T) -> T {
        let k = self
            .x
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - x).abs().partial_cmp(&(*b.1 - x).abs()).unwrap())
            .map(|p| p.0)
            .unwrap_or(0);
        self.density[k]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,density,converged\n");
        for k in 0..self.len() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{}",
                self.x[k].as_f64(),
                self.density[k].as_f64(),
                u8::from(self.converged[k])
            );
        }
        s
    }
}

pub(crate) fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    let half = T::lit(0.5);
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) * half)
        .sum()
}

/// Grid points processed serially (with lateral warm starts) per parallel
/// task. Fixed so that results do not depend on the thread count.
pub const DOS_BLOCK: usize = 32;

/// Uniform grid `lo, lo + step, …` up to `hi` (inclusive within rounding).
pub fn grid<T: Real>(lo: T, hi: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(hi >= lo) {
        return Err(Error::invalid("grid needs step > 0 and lo <= hi"));
    }
    let count = ((hi - lo) / step + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0)
        + 1;
    Ok((0..count).map(|k| lo + step * T::count(k)).collect())
}

/// Density of states `-Im mean w(x + iη) / π` on a grid.
///
/// At each abscissa the solution is continued from `Im z = max(1, η)` down to
/// `η` by halving, warm-starting each level from the previous one. The top
/// level is warm-started from the neighboring abscissa; the first point of
/// each block instead descends from a height where the iteration starts on
/// the correct branch.
pub fn dos_curve<T: Real>(
    g: &JacobiGraph<T>,
    x_range: (T, T),
    step: T,
    eta: T,
    opts: &SolveOptions<T>,
) -> Result<DensityCurve<T>> {
    dos_at(g, grid(x_range.0, x_range.1, step)?, eta, opts)
}

/// Density of states at arbitrary abscissas, computed as in [`dos_curve`].
pub fn dos_at<T: Real>(
    g: &JacobiGraph<T>,
    xs: Vec<T>,
    eta: T,
    opts: &SolveOptions<T>,
) -> Result<DensityCurve<T>> {
    if !(eta > T::zero()) {
        return Err(Error::invalid("eta must be positive"));
    }
    let sys = AomotoSystem::new(g);
    let reach = sys.reach;
    let results: Vec<Vec<(T, bool)>> = xs
        .par_chunks(DOS_BLOCK)
        .map(|block| {
            let mut lateral: Option<CauchyVector<T>> = None;
            block
                .iter()
                .map(|&x| {
                    let (cv, ok, top) = continue_down(&sys, x, eta, reach, lateral.as_ref(), opts);
                    lateral = top;
                    let w = cv
                        .map(|c| c.w)
                        .unwrap_or_else(|| vec![Complex::new(T::zero(), T::zero()); sys.n()]);
                    let mean = w
                        .iter()
                        .fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b)
                        / T::count(w.len());
                    let d = (-mean.im / T::PI()).max(T::zero());
                    (d, ok)
                })
                .collect()
        })
        .collect();
    let flat: Vec<(T, bool)> = results.into_iter().flatten().collect();
    let density: Vec<T> = flat.iter().map(|p| p.0).collect();
    let converged = flat.iter().map(|p| p.1).collect();
    let atom_level = T::lit(0.05);
    let atom = density
        .iter()
        .map(|&d| d * T::PI() * eta > atom_level)
        .collect();
    Ok(DensityCurve {
        x: xs,
        density,
        converged,
        atom,
        eta,
    })
}

/// Heights visited between `from` and `to` by repeated halving.
fn heights<T: Real>(from: T, to: T) -> Vec<T> {
    let mut hs = vec![from];
    let mut y = from;
    while y > to {
        y = (y * T::lit(0.5)).max(to);
        hs.push(y);
    }
    hs
}

/// Solves at `x + i·eta` by continuation. Returns the last solution reached,
/// whether every level converged, and the top-level solution for the next
/// abscissa.
fn continue_down<T: Real>(
    sys: &AomotoSystem<T>,
    x: T,
    eta: T,
    reach: T,
    lateral: Option<&CauchyVector<T>>,
    opts: &SolveOptions<T>,
) -> (Option<CauchyVector<T>>, bool, Option<CauchyVector<T>>) {
    let top = T::one().max(eta);
    let mut path = Vec::new();
    let mut warm: Option<CauchyVector<T>> = lateral.cloned();
    if warm.is_none() {
        // Far above the spectrum the starting guess 1/(z - b) is already close
        // to the physical branch.
        let start = (T::lit(4.0) * (reach + x.abs()) + T::lit(4.0)).max(top);
        path.extend(heights(start, top));
        path.pop();
    }
    path.extend(heights(top, eta));
    let solve = |z: Complex<T>, from: Option<&CauchyVector<T>>| {
        solve_system(
            sys,
            z,
            opts,
            from.map(|c| c.w.as_slice()),
            from.map(|c| c.roots.as_slice()),
        )
        .ok()
    };
    let mut top_solution = None;
    let mut ok = true;
    let mut prev_h = path[0];
    for &h in &path {
        let mut cv = solve(Complex::new(x, h), warm.as_ref());
        if !cv.as_ref().is_some_and(|c| c.converged) && warm.is_some() && h < prev_h {
            // Retry the level with four finer substeps.
            let mut w = warm.clone();
            let ratio = (h / prev_h).powf(T::lit(0.25));
            let mut y = prev_h;
            for _ in 0..4 {
                y = (y * ratio).max(h);
                match solve(Complex::new(x, y), w.as_ref()) {
                    Some(c) if c.converged => w = Some(c),
                    _ => {
                        w = None;
                        break;
                    }
                }
            }
            if w.is_some() {
                cv = w;
            }
        }
        let converged = cv.as_ref().is_some_and(|c| c.converged);
        if !converged {
            ok = false;
        }
        if cv.is_some() {
            warm = cv;
        }
        if h == top {
            top_solution = warm.clone().filter(|_| converged);
        }
        prev_h = h;
    }
    (
        warm.map(|mut c| {
            c.converged &= ok;
            c
        }),
        ok,
        top_solution,
    )
}

//! Bands of a density-of-states curve, their masses, and closed-form band
//! criteria for small templates.

use std::fmt::Write as _;

use crate::aomoto::{dos_at, trapezoid, DensityCurve, SolveOptions};
use crate::error::{Error, Result};
use crate::graph::JacobiGraph;
use crate::scalar::Real;

/// Density above which a grid point belongs to a band.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Gaps shorter than this many multiples of `η` are merged away.
pub const GAP_MERGE_ETAS: f64 = 3.0;
/// Fraction of converged grid points required by [`detect_bands`].
pub const MIN_CONVERGED_FRACTION: f64 = 0.99;
/// Allowed distance between a band mass and the nearest `k/n`.
pub const QUANTIZATION_TOL: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct Band<T = f64> {
    pub left: T,
    pub right: T,
    /// Filled in by [`band_masses`].
    pub mass: Option<T>,
    /// Nearest `k/n` with `k ≥ 1`, and the distance to it.
    pub nearest_k_over_n: Option<T>,
    pub deviation: Option<T>,
    /// Grid indices of the first and last point above the threshold.
    first: usize,
    last: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandReport<T = f64> {
    pub bands: Vec<Band<T>>,
    /// Vertex count of the base graph.
    pub n: usize,
    /// Whether every mass lies within [`QUANTIZATION_TOL`] of some `k/n`;
    /// false until masses are computed.
    pub quantization_ok: bool,
}

impl<T: Real> BandReport<T> {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.bands.iter().filter_map(|b| b.mass).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("band_index,left,right,mass,nearest_k_over_n,deviation\n");
        let f = |x: Option<T>| {
            x.map(|x| format!("{:.16e}", x.as_f64()))
                .unwrap_or_default()
        };
        for (k, b) in self.bands.iter().enumerate() {
            let _ = writeln!(
                s,
                "{k},{:.16e},{:.16e},{},{},{}",
                b.left.as_f64(),
                b.right.as_f64(),
                f(b.mass),
                f(b.nearest_k_over_n),
                f(b.deviation)
            );
        }
        s
    }
}

/// Maximal runs of grid points with density above `threshold`, with gaps
/// shorter than `3η` merged.
pub fn detect_bands<T: Real>(
    curve: &DensityCurve<T>,
    n: usize,
    threshold: T,
) -> Result<BandReport<T>> {
    if curve.is_empty() {
        return Err(Error::invalid("empty density curve"));
    }
    let fraction = curve.converged_fraction();
    if fraction < MIN_CONVERGED_FRACTION {
        return Err(Error::Numeric(format!(
            "only {:.1}% of grid points converged (need {}%)",
            100.0 * fraction,
            100.0 * MIN_CONVERGED_FRACTION
        )));
    }
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (k, &d) in curve.density.iter().enumerate() {
        match (d > threshold, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, curve.len() - 1));
    }
    let min_gap = T::lit(GAP_MERGE_ETAS) * curve.eta;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(prev) if curve.x[r.0] - curve.x[prev.1] < min_gap => prev.1 = r.1,
            _ => merged.push(r),
        }
    }
    let bands = merged
        .into_iter()
        .map(|(first, last)| Band {
            left: curve.x[first],
            right: curve.x[last],
            mass: None,
            nearest_k_over_n: None,
            deviation: None,
            first,
            last,
        })
        .collect();
    Ok(BandReport {
        bands,
        n,
        quantization_ok: false,
    })
}

/// Integrates the density over each band by the trapezoid rule, including
/// the grid segments that leave the band on either side.
pub fn band_masses<T: Real>(curve: &DensityCurve<T>, report: &BandReport<T>) -> BandReport<T> {
    let mut out = report.clone();
    let count = out.bands.len();
    let n = T::count(out.n.max(1));
    let tol = T::lit(QUANTIZATION_TOL);
    let mut ok = count > 0;
    for k in 0..count {
        let lo_limit = if k == 0 { 0 } else { out.bands[k - 1].last };
        let hi_limit = if k + 1 == count {
            curve.len() - 1
        } else {
            out.bands[k + 1].first
        };
        let b = &mut out.bands[k];
        let lo = b.first.saturating_sub(1).max(lo_limit);
        let hi = (b.last + 1).min(hi_limit);
        let mass = trapezoid(&curve.x[lo..=hi], &curve.density[lo..=hi]);
        let kk = (mass * n).round().max(T::one());
        let q = kk / n;
        let dev = (mass - q).abs();
        ok &= dev <= tol;
        b.mass = Some(mass);
        b.nearest_k_over_n = Some(q);
        b.deviation = Some(dev);
    }
    out.quantization_ok = ok;
    out
}

/// Whether zero lies in the tree spectrum of two vertices joined by parallel
/// edges with these weights: `a₁² ≤ Σ_{i≥2} aᵢ²` for weights sorted in
/// decreasing order.
pub fn fts_zero_in_spectrum<T: Real>(weights: &[T]) -> Result<bool> {
    if weights.len() < 2 {
        return Err(Error::invalid("need at least two parallel edges"));
    }
    if weights.iter().any(|&a| !(a > T::zero()) || !a.is_finite()) {
        return Err(Error::invalid("weights must be positive"));
    }
    let mut sq: Vec<T> = weights.iter().map(|&a| a * a).collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rest: T = sq[1..].iter().copied().sum();
    Ok(sq[0] <= rest)
}

/// Closed-form band count for the small templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandPrediction {
    NotApplicable,
    /// Two vertices joined by `d ≥ 2` parallel edges, no loops.
    ParallelEdges {
        predicted_bands: usize,
    },
    /// Two vertices with zero potentials, one loop at one of them and two
    /// parallel edges between them. Connected iff the two parallel weights
    /// agree.
    LoopAndParallelPair {
        predicted_bands: usize,
    },
}

impl BandPrediction {
    pub fn predicted_bands(&self) -> Option<usize> {
        match *self {
            BandPrediction::NotApplicable => None,
            BandPrediction::ParallelEdges { predicted_bands }
            | BandPrediction::LoopAndParallelPair { predicted_bands } => Some(predicted_bands),
        }
    }
}

pub fn two_band_checks<T: Real>(g: &JacobiGraph<T>) -> BandPrediction {
    if g.n() != 2 {
        return BandPrediction::NotApplicable;
    }
    let loops = g.whole_loops().len() + g.half_loops().len();
    let weights: Vec<T> = g.edges().iter().map(|e| e.a.abs()).collect();
    let b = g.b();
    if loops == 0 && weights.len() >= 2 {
        let predicted_bands = if b[0] != b[1] {
            2
        } else if fts_zero_in_spectrum(&weights).unwrap_or(false) {
            1
        } else {
            2
        };
        return BandPrediction::ParallelEdges { predicted_bands };
    }
    if loops == 1 && weights.len() == 2 && !g.has_potentials() {
        let (a, c) = (weights[0], weights[1]);
        let equal = (a - c).abs() <= T::lit(1e-12) * a.max(c);
        return BandPrediction::LoopAndParallelPair {
            predicted_bands: if equal { 1 } else { 2 },
        };
    }
    BandPrediction::NotApplicable
}

/// Offsets below the right edge probed by [`edge_vanishing`].
pub const EDGE_OFFSETS: [f64; 4] = [0.16, 0.08, 0.04, 0.02];
/// Largest density allowed at the innermost probe.
pub const EDGE_DENSITY_LIMIT: f64 = 0.08;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVanishing<T = f64> {
    pub rho: T,
    /// `(ε, density(ρ − ε))` for each offset, outermost first.
    pub samples: Vec<(T, T)>,
    pub positive: bool,
    pub decreasing: bool,
    pub small_at_edge: bool,
}

impl<T> EdgeVanishing<T> {
    pub fn passed(&self) -> bool {
        self.positive && self.decreasing && self.small_at_edge
    }
}

/// Samples the density just inside the right edge `rho` and checks that it
/// is positive, strictly decreasing toward the edge, and below
/// [`EDGE_DENSITY_LIMIT`] at the innermost offset.
pub fn edge_vanishing<T: Real>(
    g: &JacobiGraph<T>,
    rho: T,
    eta: T,
    opts: &SolveOptions<T>,
) -> Result<EdgeVanishing<T>> {
    let offsets: Vec<T> = EDGE_OFFSETS.iter().map(|&e| T::lit(e)).collect();
    let xs = offsets.iter().map(|&e| rho - e).collect();
    let curve = dos_at(g, xs, eta, opts)?;
    if curve.converged.iter().any(|&c| !c) {
        return Err(Error::Numeric(
            "density near the edge did not converge".into(),
        ));
    }
    let samples: Vec<(T, T)> = offsets
        .into_iter()
        .zip(curve.density.iter().copied())
        .collect();
    let positive = samples.iter().all(|s| s.1 > T::zero());
    let decreasing = samples.windows(2).all(|w| w[1].1 < w[0].1);
    let small_at_edge = samples
        .last()
        .is_some_and(|s| s.1 < T::lit(EDGE_DENSITY_LIMIT));
    Ok(EdgeVanishing {
        rho,
        samples,
        positive,
        decreasing,
        small_at_edge,
    })
}

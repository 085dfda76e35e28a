//! Random d-lifts.
//!
//! Every non-loop edge and every whole-loop receives an independent uniform
//! permutation of the sheets; every half-loop receives a uniform perfect
//! matching. Lift vertex `(v, s)` has index `v * d + s`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Edge, JacobiGraph, Loop};
use crate::rng::{substream_seed, XorShiftStar};
use crate::scalar::Real;

/// The random data defining one lift.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftInstance<T = f64> {
    pub base: JacobiGraph<T>,
    pub d: usize,
    pub seed: u64,
    /// One permutation per non-loop edge, then one per whole-loop, in the
    /// base graph's order.
    pub permutations: Vec<Vec<usize>>,
    /// One fixed-point-free involution per half-loop.
    pub matchings: Vec<Vec<usize>>,
}

impl<T: Real> LiftInstance<T> {
    /// Draws the permutations and matchings. Stream `i` of `seed` drives the
    /// `i`-th edge in the order: non-loop edges, whole-loops, half-loops.
    pub fn sample(g: &JacobiGraph<T>, d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("lift degree must be at least 1"));
        }
        if d % 2 == 1 && !g.half_loops().is_empty() {
            return Err(Error::invalid("half-loops need an even lift degree"));
        }
        let n_perm = g.edges().len() + g.whole_loops().len();
        let n_match = g.half_loops().len();
        let permutations = (0..n_perm)
            .into_par_iter()
            .map(|i| XorShiftStar::new(substream_seed(seed, i as u64)).permutation(d))
            .collect();
        let matchings = (0..n_match)
            .into_par_iter()
            .map(|i| {
                XorShiftStar::new(substream_seed(seed, (n_perm + i) as u64)).perfect_matching(d)
            })
            .collect();
        Ok(LiftInstance {
            base: g.clone(),
            d,
            seed,
            permutations,
            matchings,
        })
    }

    /// The lifted graph on `n * d` vertices.
    pub fn graph(&self) -> JacobiGraph<T> {
        let g = &self.base;
        let d = self.d;
        let idx = |v: usize, s: usize| v * d + s;
        let mut edges = Vec::new();
        let mut whole = Vec::new();
        for (e, pi) in g.edges().iter().zip(&self.permutations) {
            for (s, &t) in pi.iter().enumerate() {
                edges.push(Edge {
                    u: idx(e.u, s),
                    v: idx(e.v, t),
                    a: e.a,
                });
            }
        }
        let loop_perms = &self.permutations[g.edges().len()..];
        for (l, pi) in g.whole_loops().iter().zip(loop_perms) {
            for (s, &t) in pi.iter().enumerate() {
                if s == t {
                    whole.push(Loop {
                        v: idx(l.v, s),
                        a: l.a,
                    });
                } else {
                    edges.push(Edge {
                        u: idx(l.v, s),
                        v: idx(l.v, t),
                        a: l.a,
                    });
                }
            }
        }
        for (l, m) in g.half_loops().iter().zip(&self.matchings) {
            for (s, &t) in m.iter().enumerate() {
                if s < t {
                    edges.push(Edge {
                        u: idx(l.v, s),
                        v: idx(l.v, t),
                        a: l.a,
                    });
                }
            }
        }
        let b = g
            .b()
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, d))
            .collect();
        // Lifts of connected graphs can be disconnected; skip the
        // connectivity requirement that applies to base graphs.
        JacobiGraph::from_parts_unchecked(g.n() * d, b, edges, whole, Vec::new())
    }
}

/// Samples a random `d`-lift of `g`.
pub fn sample_lift<T: Real>(g: &JacobiGraph<T>, d: usize, seed: u64) -> Result<JacobiGraph<T>> {
    Ok(LiftInstance::sample(g, d, seed)?.graph())
}

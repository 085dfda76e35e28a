//! Weighted multigraphs with loops and the Jacobi operator they carry.
//!
//! A Jacobi operator acts on functions on the vertices by
//! `(A f)(u) = b_u f(u) + Σ a_e f(v) + 2 Σ a_l f(u) + Σ a_h f(u)`,
//! where the sums run over non-loop edges `e = {u, v}`, whole-loops `l` at `u`
//! and half-loops `h` at `u`.

use std::fmt::Write as _;

use crate::eigen::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Non-loop edge `{u, v}` with coefficient `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T = f64> {
    pub u: usize,
    pub v: usize,
    pub a: T,
}

/// Whole-loop or half-loop at `v` with coefficient `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loop<T = f64> {
    pub v: usize,
    pub a: T,
}

/// A connected finite multigraph with vertex potentials and nonzero edge
/// coefficients. Whole-loops count twice towards the degree, half-loops once.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiGraph<T = f64> {
    n: usize,
    b: Vec<T>,
    edges: Vec<Edge<T>>,
    whole_loops: Vec<Loop<T>>,
    half_loops: Vec<Loop<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub deg: Vec<usize>,
}

impl DegreeProfile {
    pub fn max(&self) -> usize {
        self.deg.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.deg.iter().sum()
    }

    pub fn average(&self) -> f64 {
        self.total() as f64 / self.deg.len() as f64
    }
}

impl<T: Real> JacobiGraph<T> {
    /// Validates and assembles a graph.
    pub fn from_parts(
        n: usize,
        b: Vec<T>,
        edges: Vec<Edge<T>>,
        whole_loops: Vec<Loop<T>>,
        half_loops: Vec<Loop<T>>,
    ) -> Result<Self> {
        let g = JacobiGraph {
            n,
            b,
            edges,
            whole_loops,
            half_loops,
        };
        g.validate()?;
        Ok(g)
    }

    /// Assembles a graph whose indices and coefficients are valid by
    /// construction but which may be disconnected (random lifts).
    pub(crate) fn from_parts_unchecked(
        n: usize,
        b: Vec<T>,
        edges: Vec<Edge<T>>,
        whole_loops: Vec<Loop<T>>,
        half_loops: Vec<Loop<T>>,
    ) -> Self {
        JacobiGraph {
            n,
            b,
            edges,
            whole_loops,
            half_loops,
        }
    }

    /// Whether the underlying graph is connected. Always true for validated
    /// graphs; lifts may fail it.
    pub fn connected(&self) -> bool {
        self.is_connected()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("graph has no vertices"));
        }
        if self.b.len() != self.n {
            return Err(Error::invalid(format!(
                "expected {} potentials, got {}",
                self.n,
                self.b.len()
            )));
        }
        if let Some(x) = self.b.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite potential {x}")));
        }
        for e in &self.edges {
            check_vertex(e.u, self.n)?;
            check_vertex(e.v, self.n)?;
            check_coefficient(e.a)?;
            if e.u == e.v {
                return Err(Error::invalid(format!(
                    "edge {} {} is a self-edge; declare it as loop or halfloop",
                    e.u, e.v
                )));
            }
        }
        for l in self.whole_loops.iter().chain(&self.half_loops) {
            check_vertex(l.v, self.n)?;
            check_coefficient(l.a)?;
        }
        if !self.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if ru != rv {
                parent[ru] = rv;
                components -= 1;
            }
        }
        components == 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn whole_loops(&self) -> &[Loop<T>] {
        &self.whole_loops
    }

    pub fn half_loops(&self) -> &[Loop<T>] {
        &self.half_loops
    }

    /// Number of undirected cycles in the underlying multigraph, counting each
    /// loop as one cycle: `m - n + 1` with `m` the number of edges and loops.
    pub fn cycle_rank(&self) -> usize {
        let m = self.edges.len() + self.whole_loops.len() + self.half_loops.len();
        m + 1 - self.n
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        for l in &self.whole_loops {
            deg[l.v] += 2;
        }
        for l in &self.half_loops {
            deg[l.v] += 1;
        }
        DegreeProfile { deg }
    }

    /// Matrix of the operator on the base graph itself.
    pub fn dense_operator(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n);
        for (v, &bv) in self.b.iter().enumerate() {
            m[(v, v)] += bv;
        }
        for e in &self.edges {
            m[(e.u, e.v)] += e.a;
            m[(e.v, e.u)] += e.a;
        }
        let two = T::lit(2.0);
        for l in &self.whole_loops {
            m[(l.v, l.v)] += two * l.a;
        }
        for l in &self.half_loops {
            m[(l.v, l.v)] += l.a;
        }
        m
    }

    /// `max_u (b_u + Σ |a|)` with whole-loops counted twice; an upper bound on
    /// the spectrum of the operator on the cover.
    pub fn row_sum_bound(&self) -> T {
        let sums = self.abs_coefficient_sums();
        self.b
            .iter()
            .zip(&sums)
            .map(|(&b, &s)| b + s)
            .fold(T::neg_infinity(), T::max)
    }

    /// Per-vertex `Σ |a|` over incident edges, whole-loops twice.
    pub fn abs_coefficient_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.n];
        for e in &self.edges {
            s[e.u] += e.a.abs();
            s[e.v] += e.a.abs();
        }
        for l in &self.whole_loops {
            s[l.v] += T::lit(2.0) * l.a.abs();
        }
        for l in &self.half_loops {
            s[l.v] += l.a.abs();
        }
        s
    }

    /// The graph of `-A`: all coefficients and potentials change sign.
    pub fn negate(&self) -> Self {
        let flip = |l: &Loop<T>| Loop { v: l.v, a: -l.a };
        JacobiGraph {
            n: self.n,
            b: self.b.iter().map(|&x| -x).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    u: e.u,
                    v: e.v,
                    a: -e.a,
                })
                .collect(),
            whole_loops: self.whole_loops.iter().map(flip).collect(),
            half_loops: self.half_loops.iter().map(flip).collect(),
        }
    }

    /// Plain adjacency operator: unit coefficients, zero potentials and no
    /// half-loops.
    pub fn is_adjacency(&self) -> bool {
        self.half_loops.is_empty()
            && self.b.iter().all(|x| x.is_zero())
            && self.edges.iter().all(|e| e.a == T::one())
            && self.whole_loops.iter().all(|l| l.a == T::one())
    }

    pub fn has_potentials(&self) -> bool {
        self.b.iter().any(|x| !x.is_zero())
    }

    /// Converts the coefficients to another scalar type.
    pub fn cast<U: Real>(&self) -> JacobiGraph<U> {
        let c = |x: T| U::lit(x.as_f64());
        JacobiGraph {
            n: self.n,
            b: self.b.iter().map(|&x| c(x)).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    u: e.u,
                    v: e.v,
                    a: c(e.a),
                })
                .collect(),
            whole_loops: self
                .whole_loops
                .iter()
                .map(|l| Loop { v: l.v, a: c(l.a) })
                .collect(),
            half_loops: self
                .half_loops
                .iter()
                .map(|l| Loop { v: l.v, a: c(l.a) })
                .collect(),
        }
    }

    /// Parses the `jacobi-graph v1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header_seen = false;
        let mut n: Option<usize> = None;
        let mut b: Vec<Option<T>> = Vec::new();
        let mut edges = Vec::new();
        let mut whole = Vec::new();
        let mut half = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !header_seen {
                if tokens != ["jacobi-graph", "v1"] {
                    return Err(Error::parse(line_no, "expected header `jacobi-graph v1`"));
                }
                header_seen = true;
                continue;
            }
            let want = |k: usize| -> Result<()> {
                if tokens.len() == k {
                    Ok(())
                } else {
                    Err(Error::parse(
                        line_no,
                        format!(
                            "`{}` takes {} arguments, got {}",
                            tokens[0],
                            k - 1,
                            tokens.len() - 1
                        ),
                    ))
                }
            };
            if tokens[0] == "vertices" {
                want(2)?;
                if n.is_some() {
                    return Err(Error::parse(line_no, "duplicate `vertices` line"));
                }
                let count = parse_index(tokens[1], line_no)?;
                if count == 0 {
                    return Err(Error::parse(line_no, "vertex count must be positive"));
                }
                n = Some(count);
                b = vec![None; count];
                continue;
            }
            let nv =
                n.ok_or_else(|| Error::parse(line_no, "`vertices` must precede other statements"))?;
            let vertex = |tok: &str| -> Result<usize> {
                let v = parse_index(tok, line_no)?;
                if v >= nv {
                    return Err(Error::parse(
                        line_no,
                        format!("vertex {v} out of range 0..{nv}"),
                    ));
                }
                Ok(v)
            };
            let coefficient = |tok: &str| -> Result<T> {
                let a: T = parse_real(tok, line_no)?;
                if a.is_zero() {
                    return Err(Error::parse(line_no, "coefficient must be nonzero"));
                }
                Ok(a)
            };
            match tokens[0] {
                "b" => {
                    want(3)?;
                    let v = vertex(tokens[1])?;
                    if b[v].is_some() {
                        return Err(Error::parse(
                            line_no,
                            format!("duplicate potential for vertex {v}"),
                        ));
                    }
                    b[v] = Some(parse_real(tokens[2], line_no)?);
                }
                "edge" => {
                    want(4)?;
                    let (u, v) = (vertex(tokens[1])?, vertex(tokens[2])?);
                    if u == v {
                        return Err(Error::parse(
                            line_no,
                            "self-edge; declare it with `loop` or `halfloop`",
                        ));
                    }
                    edges.push(Edge {
                        u,
                        v,
                        a: coefficient(tokens[3])?,
                    });
                }
                "loop" => {
                    want(3)?;
                    whole.push(Loop {
                        v: vertex(tokens[1])?,
                        a: coefficient(tokens[2])?,
                    });
                }
                "halfloop" => {
                    want(3)?;
                    half.push(Loop {
                        v: vertex(tokens[1])?,
                        a: coefficient(tokens[2])?,
                    });
                }
                other => {
                    return Err(Error::parse(
                        line_no,
                        format!("unknown statement `{other}`"),
                    ))
                }
            }
        }
        if !header_seen {
            return Err(Error::parse(1, "missing header `jacobi-graph v1`"));
        }
        let n =
            n.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing `vertices` line"))?;
        let b = b.into_iter().map(|x| x.unwrap_or_else(T::zero)).collect();
        JacobiGraph::from_parts(n, b, edges, whole, half)
    }

    /// Writes the `jacobi-graph v1` text format with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = String::from("jacobi-graph v1\n");
        let _ = writeln!(s, "vertices {}", self.n);
        for (v, x) in self.b.iter().enumerate() {
            if !x.is_zero() {
                let _ = writeln!(s, "b {v} {x:?}");
            }
        }
        for e in &self.edges {
            let _ = writeln!(s, "edge {} {} {:?}", e.u, e.v, e.a);
        }
        for l in &self.whole_loops {
            let _ = writeln!(s, "loop {} {:?}", l.v, l.a);
        }
        for l in &self.half_loops {
            let _ = writeln!(s, "halfloop {} {:?}", l.v, l.a);
        }
        s
    }
}

fn check_vertex(v: usize, n: usize) -> Result<()> {
    if v >= n {
        Err(Error::invalid(format!("vertex {v} out of range 0..{n}")))
    } else {
        Ok(())
    }
}

fn check_coefficient<T: Real>(a: T) -> Result<()> {
    if a.is_zero() || !a.is_finite() {
        Err(Error::invalid(format!(
            "coefficient {a} must be finite and nonzero"
        )))
    } else {
        Ok(())
    }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected a vertex index, got `{tok}`")))
}

fn parse_real<T: Real>(tok: &str, line: usize) -> Result<T> {
    let x: T = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, got `{tok}`")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("non-finite number `{tok}`")));
    }
    Ok(x)
}

/// Parses a graph with `f64` coefficients.
pub fn parse_graph(text: &str) -> Result<JacobiGraph<f64>> {
    JacobiGraph::parse(text)
}

pub fn serialize_graph<T: Real>(g: &JacobiGraph<T>) -> String {
    g.to_text()
}

/// Incremental construction of a [`JacobiGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder<T = f64> {
    n: usize,
    b: Vec<T>,
    edges: Vec<Edge<T>>,
    whole: Vec<Loop<T>>,
    half: Vec<Loop<T>>,
}

impl<T: Real> GraphBuilder<T> {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            b: vec![T::zero(); n],
            edges: Vec::new(),
            whole: Vec::new(),
            half: Vec::new(),
        }
    }

    pub fn potential(mut self, v: usize, b: T) -> Self {
        self.b[v] = b;
        self
    }

    pub fn edge(mut self, u: usize, v: usize, a: T) -> Self {
        self.edges.push(Edge { u, v, a });
        self
    }

    pub fn whole_loop(mut self, v: usize, a: T) -> Self {
        self.whole.push(Loop { v, a });
        self
    }

    pub fn half_loop(mut self, v: usize, a: T) -> Self {
        self.half.push(Loop { v, a });
        self
    }

    pub fn build(self) -> Result<JacobiGraph<T>> {
        JacobiGraph::from_parts(self.n, self.b, self.edges, self.whole, self.half)
    }
}

/// Small named graphs used in examples and tests. All have unit coefficients
/// and zero potentials.
pub mod named {
    use super::{GraphBuilder, JacobiGraph};
    use crate::scalar::Real;

    pub fn complete<T: Real>(n: usize) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g = g.edge(u, v, T::one());
            }
        }
        g.build().expect("complete graph is valid")
    }

    pub fn cycle<T: Real>(n: usize) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(n);
        for u in 0..n {
            g = g.edge(u, (u + 1) % n, T::one());
        }
        g.build().expect("cycle is valid")
    }

    pub fn path<T: Real>(n: usize) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(n);
        for u in 1..n {
            g = g.edge(u - 1, u, T::one());
        }
        g.build().expect("path is valid")
    }

    pub fn complete_bipartite<T: Real>(p: usize, q: usize) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(p + q);
        for u in 0..p {
            for v in 0..q {
                g = g.edge(u, p + v, T::one());
            }
        }
        g.build().expect("complete bipartite graph is valid")
    }

    /// One vertex carrying `whole` whole-loops and `half` half-loops.
    pub fn bouquet<T: Real>(whole: usize, half: usize) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(1);
        for _ in 0..whole {
            g = g.whole_loop(0, T::one());
        }
        for _ in 0..half {
            g = g.half_loop(0, T::one());
        }
        g.build().expect("bouquet is valid")
    }

    /// Two vertices joined by parallel edges with the given coefficients.
    pub fn parallel_edges<T: Real>(weights: &[T]) -> JacobiGraph<T> {
        let mut g = GraphBuilder::new(2);
        for &a in weights {
            g = g.edge(0, 1, a);
        }
        g.build().expect("parallel-edge graph is valid")
    }
}

//! Balls in the universal cover and walk moments.
//!
//! The universal cover is the tree of non-backtracking walks. Each non-loop
//! edge gives two mutually reverse directed edges, each whole-loop gives two
//! directed copies that are reverses of each other, and each half-loop gives
//! one self-reverse directed edge.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Edge, JacobiGraph};
use crate::scalar::Real;

/// Directed edge of a base graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dart<T> {
    pub from: usize,
    pub to: usize,
    pub a: T,
    /// Index of the reverse dart; equal to the own index for half-loops.
    pub rev: usize,
}

/// All darts of a graph, grouped by tail vertex.
#[derive(Debug, Clone)]
pub struct DartTable<T> {
    pub darts: Vec<Dart<T>>,
    /// `out[v]` lists the darts leaving `v` in a fixed order.
    pub out: Vec<Vec<usize>>,
}

impl<T: Real> DartTable<T> {
    pub fn new(g: &JacobiGraph<T>) -> Self {
        let mut darts = Vec::new();
        let pair = |darts: &mut Vec<Dart<T>>, u: usize, v: usize, a: T| {
            let k = darts.len();
            darts.push(Dart {
                from: u,
                to: v,
                a,
                rev: k + 1,
            });
            darts.push(Dart {
                from: v,
                to: u,
                a,
                rev: k,
            });
        };
        for e in g.edges() {
            pair(&mut darts, e.u, e.v, e.a);
        }
        for l in g.whole_loops() {
            pair(&mut darts, l.v, l.v, l.a);
        }
        for l in g.half_loops() {
            let k = darts.len();
            darts.push(Dart {
                from: l.v,
                to: l.v,
                a: l.a,
                rev: k,
            });
        }
        let mut out = vec![Vec::new(); g.n()];
        for (k, d) in darts.iter().enumerate() {
            out[d.from].push(k);
        }
        DartTable { darts, out }
    }
}

/// Size limits for cover and product balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallLimits {
    pub max_vertices: usize,
    pub max_radius: usize,
}

impl Default for BallLimits {
    fn default() -> Self {
        BallLimits {
            max_vertices: 5_000_000,
            max_radius: 64,
        }
    }
}

impl BallLimits {
    pub(crate) fn check_radius(&self, r: usize) -> Result<()> {
        if r > self.max_radius {
            Err(Error::Resource(format!(
                "radius {r} exceeds the cap {}",
                self.max_radius
            )))
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_size(&self, size: usize) -> Result<()> {
        if size > self.max_vertices {
            Err(Error::Resource(format!(
                "ball exceeds the cap of {} vertices",
                self.max_vertices
            )))
        } else {
            Ok(())
        }
    }
}

/// Ball of radius `radius` around a lift of `root` in the universal cover.
/// Vertex 0 is the root; vertices are listed in breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedCover<T = f64> {
    pub graph: JacobiGraph<T>,
    pub root: usize,
    /// Base vertex under each cover vertex.
    pub fiber: Vec<usize>,
    pub depth: Vec<usize>,
    pub radius: usize,
}

impl<T: Real> TruncatedCover<T> {
    /// `jacobi-graph v1` text followed by `# root` and `# fiber` comment lines.
    pub fn to_text(&self) -> String {
        let mut s = self.graph.to_text();
        let _ = writeln!(s, "# root {}", self.root);
        for (cv, bv) in self.fiber.iter().enumerate() {
            let _ = writeln!(s, "# fiber {cv} {bv}");
        }
        s
    }

    pub fn canonical(&self) -> Result<String> {
        rooted_tree_canonical(&self.graph, self.root)
    }
}

pub fn build_cover_ball<T: Real>(
    g: &JacobiGraph<T>,
    root: usize,
    radius: usize,
) -> Result<TruncatedCover<T>> {
    build_cover_ball_with(g, root, radius, BallLimits::default())
}

pub fn build_cover_ball_with<T: Real>(
    g: &JacobiGraph<T>,
    root: usize,
    radius: usize,
    limits: BallLimits,
) -> Result<TruncatedCover<T>> {
    if root >= g.n() {
        return Err(Error::invalid(format!(
            "root {root} out of range 0..{}",
            g.n()
        )));
    }
    limits.check_radius(radius)?;
    let table = DartTable::new(g);
    let mut fiber = vec![root];
    let mut depth = vec![0usize];
    // Dart used to enter each vertex; `usize::MAX` for the root.
    let mut via = vec![usize::MAX];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        if depth[x] == radius {
            continue;
        }
        let back = if via[x] == usize::MAX {
            usize::MAX
        } else {
            table.darts[via[x]].rev
        };
        for &k in &table.out[fiber[x]] {
            if k == back {
                continue;
            }
            let d = table.darts[k];
            let y = fiber.len();
            limits.check_size(y + 1)?;
            fiber.push(d.to);
            depth.push(depth[x] + 1);
            via.push(k);
            edges.push(Edge { u: x, v: y, a: d.a });
            queue.push_back(y);
        }
    }
    let b = fiber.iter().map(|&v| g.b()[v]).collect();
    let graph = JacobiGraph::from_parts(fiber.len(), b, edges, Vec::new(), Vec::new())?;
    Ok(TruncatedCover {
        graph,
        root: 0,
        fiber,
        depth,
        radius,
    })
}

/// Sparse symmetric operator: diagonal plus neighbor lists.
pub(crate) struct SparseOperator<T> {
    diag: Vec<T>,
    nbrs: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SparseOperator<T> {
    pub(crate) fn new(g: &JacobiGraph<T>) -> Self {
        let mut diag = g.b().to_vec();
        let mut nbrs = vec![Vec::new(); g.n()];
        for e in g.edges() {
            nbrs[e.u].push((e.v, e.a));
            nbrs[e.v].push((e.u, e.a));
        }
        for l in g.whole_loops() {
            diag[l.v] += T::lit(2.0) * l.a;
        }
        for l in g.half_loops() {
            diag[l.v] += l.a;
        }
        SparseOperator { diag, nbrs }
    }

    pub(crate) fn apply(&self, f: &[T], out: &mut [T]) {
        for (u, o) in out.iter_mut().enumerate() {
            let mut s = self.diag[u] * f[u];
            for &(v, a) in &self.nbrs[u] {
                s += a * f[v];
            }
            *o = s;
        }
    }
}

/// `⟨δ_root, A^k δ_root⟩` for the operator on the universal cover.
pub fn walk_moment<T: Real>(g: &JacobiGraph<T>, root: usize, k: u32) -> Result<T> {
    walk_moment_with(g, root, k, BallLimits::default())
}

pub fn walk_moment_with<T: Real>(
    g: &JacobiGraph<T>,
    root: usize,
    k: u32,
    limits: BallLimits,
) -> Result<T> {
    let radius = (k as usize).div_ceil(2) + 1;
    let ball = build_cover_ball_with(g, root, radius, limits)?;
    Ok(rooted_moment(&ball.graph, ball.root, k))
}

/// `⟨δ_root, M^k δ_root⟩` for the operator of a finite graph, by repeated
/// sparse application.
pub fn rooted_moment<T: Real>(g: &JacobiGraph<T>, root: usize, k: u32) -> T {
    let op = SparseOperator::new(g);
    let mut f = vec![T::zero(); g.n()];
    let mut next = f.clone();
    f[root] = T::one();
    for _ in 0..k {
        op.apply(&f, &mut next);
        std::mem::swap(&mut f, &mut next);
    }
    f[root]
}

/// Density-of-states moment: the mean of the rooted moments over all base
/// vertices.
pub fn dos_moment<T: Real>(g: &JacobiGraph<T>, k: u32) -> Result<T> {
    let mut total = T::zero();
    for root in 0..g.n() {
        total += walk_moment(g, root, k)?;
    }
    Ok(total / T::count(g.n()))
}

fn label<T: Real>(x: T) -> String {
    let x = x.as_f64();
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Canonical string of a rooted tree with vertex and edge labels. Two trees
/// receive the same string iff they are isomorphic as rooted trees with equal
/// labels after rounding to 12 significant digits.
pub fn rooted_tree_canonical<T: Real>(g: &JacobiGraph<T>, root: usize) -> Result<String> {
    let n = g.n();
    if root >= n {
        return Err(Error::invalid("root out of range"));
    }
    if !g.whole_loops().is_empty() || !g.half_loops().is_empty() || g.edges().len() + 1 != n {
        return Err(Error::invalid("graph is not a tree"));
    }
    let mut nbrs: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for e in g.edges() {
        nbrs[e.u].push((e.v, e.a));
        nbrs[e.v].push((e.u, e.a));
    }
    // Connected with n - 1 edges, so a BFS from the root visits a tree.
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut parent_a = vec![T::zero(); n];
    let mut seen = vec![false; n];
    seen[root] = true;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for &(y, a) in &nbrs[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                parent_a[y] = a;
                order.push(y);
            }
        }
    }
    let mut children: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut code = vec![String::new(); n];
    for &x in order.iter().rev() {
        let mut kids = std::mem::take(&mut children[x]);
        kids.sort();
        let mut s = format!("({}", label(g.b()[x]));
        for k in &kids {
            s.push(' ');
            s.push_str(k);
        }
        s.push(')');
        if parent[x] != usize::MAX {
            children[parent[x]].push(format!("{}:{}", label(parent_a[x]), s));
        } else {
            code[x] = s;
        }
    }
    Ok(std::mem::take(&mut code[root]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named;

    #[test]
    fn labels_round_to_twelve_digits() {
        assert_eq!(label(0.0), "0");
        assert_eq!(label(-0.0), "0");
        assert_eq!(label(0.1 + 0.2), label(0.3));
        assert_ne!(label(1.0), label(1.0 + 1e-9));
    }

    #[test]
    fn caps_are_enforced() {
        let limits = BallLimits {
            max_vertices: 9,
            max_radius: 3,
        };
        let k4 = named::complete::<f64>(4);
        assert!(matches!(
            build_cover_ball_with(&k4, 0, 4, limits),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            build_cover_ball_with(&k4, 0, 2, limits),
            Err(Error::Resource(_))
        ));
        assert_eq!(
            build_cover_ball_with(&k4, 0, 1, limits).unwrap().graph.n(),
            4
        );
        assert!(build_cover_ball(&k4, 4, 1).is_err());
    }

    #[test]
    fn moments_of_a_single_vertex() {
        let g = crate::GraphBuilder::new(1)
            .potential(0, 2.0)
            .build()
            .unwrap();
        assert_eq!(walk_moment(&g, 0, 3).unwrap(), 8.0);
        assert_eq!(dos_moment(&g, 0).unwrap(), 1.0);
    }
}

//! Amalgamated free products of colored rooted graphs.
//!
//! A product is given by a colored relator graph on `[k]` and colored factor
//! graphs with pairwise disjoint color sets. Product vertices are pairs
//! `(i, w)` with `i` a relator vertex and `w` an alternating reduced word over
//! the non-root vertices of the factors; factor roots act as the empty word.
//! For a relator edge `{i, i'}` and a factor edge `{v, v'}` of the same color,
//! `(i, vu)` is joined to `(i', v'u)` for every word `u` that does not start
//! in that factor, with coefficient `a⁰ · aʲ`.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::cover::BallLimits;
use crate::error::{Error, Result};
use crate::graph::{Edge, JacobiGraph, Loop};
use crate::scalar::Real;

/// Edge of a colored graph; `u == v` is a loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredEdge<T = f64> {
    pub u: usize,
    pub v: usize,
    pub color: String,
    pub a: T,
}

impl<T> ColoredEdge<T> {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Rooted weighted graph with colored edges. Potentials are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredGraph<T = f64> {
    pub n: usize,
    pub root: usize,
    pub edges: Vec<ColoredEdge<T>>,
}

impl<T: Real> ColoredGraph<T> {
    /// The underlying operator; loops become half-loops.
    pub fn graph(&self) -> JacobiGraph<T> {
        let mut edges = Vec::new();
        let mut half = Vec::new();
        for e in &self.edges {
            if e.is_loop() {
                half.push(Loop { v: e.u, a: e.a });
            } else {
                edges.push(Edge {
                    u: e.u,
                    v: e.v,
                    a: e.a,
                });
            }
        }
        JacobiGraph::from_parts_unchecked(self.n, vec![T::zero(); self.n], edges, Vec::new(), half)
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid(format!("{what} has no vertices")));
        }
        if self.root >= self.n {
            return Err(Error::invalid(format!(
                "{what} root {} out of range",
                self.root
            )));
        }
        for e in &self.edges {
            if e.u >= self.n || e.v >= self.n {
                return Err(Error::invalid(format!(
                    "{what} edge {}-{} out of range",
                    e.u, e.v
                )));
            }
            if !(e.a.is_finite() && e.a != T::zero()) {
                return Err(Error::invalid(format!(
                    "{what} edge {}-{} needs a finite nonzero coefficient",
                    e.u, e.v
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T = f64> {
    pub name: String,
    pub graph: ColoredGraph<T>,
}

/// Relator graph plus named factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AmalgamSpec<T = f64> {
    pub relator: ColoredGraph<T>,
    pub factors: Vec<Factor<T>>,
}

impl<T: Real> AmalgamSpec<T> {
    /// Checks ranges, coefficients, color disjointness across factors and
    /// that every relator color belongs to some factor.
    pub fn validate(&self) -> Result<()> {
        self.relator.validate("relator")?;
        let mut owner: HashMap<&str, &str> = HashMap::new();
        let mut names = HashSet::new();
        for f in &self.factors {
            if !names.insert(f.name.as_str()) {
                return Err(Error::invalid(format!("factor {} declared twice", f.name)));
            }
            f.graph.validate(&format!("factor {}", f.name))?;
            for e in &f.graph.edges {
                match owner.get(e.color.as_str()) {
                    Some(&other) if other != f.name => {
                        return Err(Error::invalid(format!(
                            "color {} used by factors {other} and {}",
                            e.color, f.name
                        )))
                    }
                    _ => {
                        owner.insert(&e.color, &f.name);
                    }
                }
            }
        }
        for e in &self.relator.edges {
            if !owner.contains_key(e.color.as_str()) {
                return Err(Error::invalid(format!(
                    "relator color {} appears in no factor",
                    e.color
                )));
            }
        }
        Ok(())
    }

    /// Colors carried both by a relator loop and by a factor loop. The edge
    /// rule then pairs a vertex with itself; such pairs become half-loops.
    pub fn loop_warnings(&self) -> Vec<String> {
        let relator_loops: HashSet<&str> = self
            .relator
            .edges
            .iter()
            .filter(|e| e.is_loop())
            .map(|e| e.color.as_str())
            .collect();
        let mut out = Vec::new();
        for f in &self.factors {
            for e in f.graph.edges.iter().filter(|e| e.is_loop()) {
                if relator_loops.contains(e.color.as_str()) {
                    out.push(format!(
                        "color {} joins a relator loop with a loop of factor {}; applied literally as half-loops",
                        e.color, f.name
                    ));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// `amalgam v1` text.
    pub fn to_text(&self) -> String {
        let mut s = String::from("amalgam v1\n");
        let _ = writeln!(
            s,
            "relator vertices {} root {}",
            self.relator.n, self.relator.root
        );
        for e in &self.relator.edges {
            if e.is_loop() {
                let _ = writeln!(
                    s,
                    "relator loop {} color {} a {:?}",
                    e.u,
                    e.color,
                    e.a.as_f64()
                );
            } else {
                let _ = writeln!(
                    s,
                    "relator edge {} {} color {} a {:?}",
                    e.u,
                    e.v,
                    e.color,
                    e.a.as_f64()
                );
            }
        }
        for f in &self.factors {
            let _ = writeln!(
                s,
                "factor {} vertices {} root {}",
                f.name, f.graph.n, f.graph.root
            );
            for e in &f.graph.edges {
                if e.is_loop() {
                    let _ = writeln!(
                        s,
                        "factor {} loop {} color {} a {:?}",
                        f.name,
                        e.u,
                        e.color,
                        e.a.as_f64()
                    );
                } else {
                    let _ = writeln!(
                        s,
                        "factor {} edge {} {} color {} a {:?}",
                        f.name,
                        e.u,
                        e.v,
                        e.color,
                        e.a.as_f64()
                    );
                }
            }
        }
        s
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| {
        Error::parse(
            line,
            format!("expected a nonnegative integer, found {tok:?}"),
        )
    })
}

fn parse_real<T: Real>(tok: &str, line: usize) -> Result<T> {
    let x: T = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, found {tok:?}")))?;
    if !x.is_finite() || x == T::zero() {
        return Err(Error::parse(
            line,
            "coefficients must be finite and nonzero",
        ));
    }
    Ok(x)
}

fn expect(tok: Option<&&str>, word: &str, line: usize) -> Result<()> {
    match tok {
        Some(&t) if t == word => Ok(()),
        _ => Err(Error::parse(line, format!("expected {word:?}"))),
    }
}

/// Parses `amalgam v1` text.
///
/// Besides `factor <name> edge`, factor loops may be written as
/// `factor <name> loop <u> color <c> a <x>`.
pub fn parse_amalgam<T: Real>(text: &str) -> Result<AmalgamSpec<T>> {
    let mut header = false;
    let mut relator: Option<ColoredGraph<T>> = None;
    let mut factors: Vec<Factor<T>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let t: Vec<&str> = content.split_whitespace().collect();
        if !header {
            if t != ["amalgam", "v1"] {
                return Err(Error::parse(line, "missing header `amalgam v1`"));
            }
            header = true;
            continue;
        }
        match t[0] {
            "relator" => match t.get(1).copied() {
                Some("vertices") => {
                    if t.len() != 5 {
                        return Err(Error::parse(line, "usage: relator vertices <k> root <r>"));
                    }
                    if relator.is_some() {
                        return Err(Error::parse(line, "relator declared twice"));
                    }
                    expect(t.get(3), "root", line)?;
                    let n = parse_usize(t[2], line)?;
                    let root = parse_usize(t[4], line)?;
                    relator = Some(ColoredGraph {
                        n,
                        root,
                        edges: Vec::new(),
                    });
                }
                Some(kind @ ("edge" | "loop")) => {
                    let rel = relator.as_mut().ok_or_else(|| {
                        Error::parse(line, "relator edges before `relator vertices`")
                    })?;
                    let (u, v, rest) = if kind == "edge" {
                        if t.len() != 8 {
                            return Err(Error::parse(
                                line,
                                "usage: relator edge <i> <j> color <c> a <x>",
                            ));
                        }
                        (parse_usize(t[2], line)?, parse_usize(t[3], line)?, &t[4..])
                    } else {
                        if t.len() != 7 {
                            return Err(Error::parse(
                                line,
                                "usage: relator loop <i> color <c> a <x>",
                            ));
                        }
                        let u = parse_usize(t[2], line)?;
                        (u, u, &t[3..])
                    };
                    if kind == "edge" && u == v {
                        return Err(Error::parse(
                            line,
                            "relator edge joins a vertex to itself; use `relator loop`",
                        ));
                    }
                    expect(rest.first(), "color", line)?;
                    expect(rest.get(2), "a", line)?;
                    if u >= rel.n || v >= rel.n {
                        return Err(Error::parse(line, "relator vertex out of range"));
                    }
                    let a = parse_real(rest[3], line)?;
                    rel.edges.push(ColoredEdge {
                        u,
                        v,
                        color: rest[1].to_string(),
                        a,
                    });
                }
                _ => return Err(Error::parse(line, "unknown relator statement")),
            },
            "factor" => {
                let name = *t
                    .get(1)
                    .ok_or_else(|| Error::parse(line, "factor needs a name"))?;
                match t.get(2).copied() {
                    Some("vertices") => {
                        if t.len() != 6 {
                            return Err(Error::parse(
                                line,
                                "usage: factor <name> vertices <l> root <e>",
                            ));
                        }
                        expect(t.get(4), "root", line)?;
                        if factors.iter().any(|f| f.name == name) {
                            return Err(Error::parse(
                                line,
                                format!("factor {name} declared twice"),
                            ));
                        }
                        let n = parse_usize(t[3], line)?;
                        let root = parse_usize(t[5], line)?;
                        factors.push(Factor {
                            name: name.to_string(),
                            graph: ColoredGraph {
                                n,
                                root,
                                edges: Vec::new(),
                            },
                        });
                    }
                    Some(kind @ ("edge" | "loop")) => {
                        let f = factors.iter_mut().find(|f| f.name == name).ok_or_else(|| {
                            Error::parse(line, format!("factor {name} used before its declaration"))
                        })?;
                        let (u, v, rest) = if kind == "edge" {
                            if t.len() != 9 {
                                return Err(Error::parse(
                                    line,
                                    "usage: factor <name> edge <u> <v> color <c> a <x>",
                                ));
                            }
                            (parse_usize(t[3], line)?, parse_usize(t[4], line)?, &t[5..])
                        } else {
                            if t.len() != 8 {
                                return Err(Error::parse(
                                    line,
                                    "usage: factor <name> loop <u> color <c> a <x>",
                                ));
                            }
                            let u = parse_usize(t[3], line)?;
                            (u, u, &t[4..])
                        };
                        if kind == "edge" && u == v {
                            return Err(Error::parse(
                                line,
                                "factor edge joins a vertex to itself; use `factor <name> loop`",
                            ));
                        }
                        expect(rest.first(), "color", line)?;
                        expect(rest.get(2), "a", line)?;
                        if u >= f.graph.n || v >= f.graph.n {
                            return Err(Error::parse(line, "factor vertex out of range"));
                        }
                        let a = parse_real(rest[3], line)?;
                        f.graph.edges.push(ColoredEdge {
                            u,
                            v,
                            color: rest[1].to_string(),
                            a,
                        });
                    }
                    _ => return Err(Error::parse(line, "unknown factor statement")),
                }
            }
            other => return Err(Error::parse(line, format!("unknown statement {other:?}"))),
        }
    }
    if !header {
        return Err(Error::parse(1, "missing header `amalgam v1`"));
    }
    let relator = relator.ok_or_else(|| Error::parse(1, "missing `relator vertices` statement"))?;
    let spec = AmalgamSpec { relator, factors };
    spec.validate()?;
    Ok(spec)
}

/// Interned words. Word 0 is empty; every other word is a first letter
/// `(factor, vertex)` followed by an earlier word.
#[derive(Debug, Clone, Default)]
struct WordTable {
    cells: Vec<Option<((usize, usize), usize)>>,
    index: HashMap<((usize, usize), usize), usize>,
}

impl WordTable {
    fn new() -> Self {
        WordTable {
            cells: vec![None],
            index: HashMap::new(),
        }
    }

    fn cons(&mut self, letter: (usize, usize), rest: usize) -> usize {
        if let Some(&id) = self.index.get(&(letter, rest)) {
            return id;
        }
        let id = self.cells.len();
        self.cells.push(Some((letter, rest)));
        self.index.insert((letter, rest), id);
        id
    }

    fn letters(&self, mut w: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        while let Some((letter, rest)) = self.cells[w] {
            out.push(letter);
            w = rest;
        }
        out
    }
}

/// Product vertex label: relator vertex and word, each letter a
/// `(factor index, factor vertex)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductLabel {
    pub relator_vertex: usize,
    pub word: Vec<(usize, usize)>,
}

/// Ball of radius `radius` around `(r, e)` in the core of a product.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCore<T = f64> {
    /// Vertex 0 is the root; vertices are in breadth-first creation order.
    pub graph: JacobiGraph<T>,
    pub labels: Vec<ProductLabel>,
    pub depth: Vec<usize>,
    pub radius: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> ProductCore<T> {
    pub fn root(&self) -> usize {
        0
    }

    /// `jacobi-graph v1` text followed by one `# label` comment per vertex.
    pub fn to_text(&self, spec: &AmalgamSpec<T>) -> String {
        let mut s = self.graph.to_text();
        for (v, l) in self.labels.iter().enumerate() {
            let _ = write!(s, "# label {v} {}", l.relator_vertex);
            for &(f, x) in &l.word {
                let _ = write!(s, " {}:{x}", spec.factors[f].name);
            }
            s.push('\n');
        }
        s
    }
}

/// One factor edge seen from an endpoint: other endpoint and coefficient.
struct Incidence<T> {
    color: usize,
    other: usize,
    a: T,
}

pub fn build_product_core<T: Real>(spec: &AmalgamSpec<T>, radius: usize) -> Result<ProductCore<T>> {
    build_product_core_with(spec, radius, BallLimits::default())
}

pub fn build_product_core_with<T: Real>(
    spec: &AmalgamSpec<T>,
    radius: usize,
    limits: BallLimits,
) -> Result<ProductCore<T>> {
    spec.validate()?;
    limits.check_radius(radius)?;
    let mut color_ids: HashMap<&str, usize> = HashMap::new();
    let mut color_factor = Vec::new();
    for (j, f) in spec.factors.iter().enumerate() {
        for e in &f.graph.edges {
            if !color_ids.contains_key(e.color.as_str()) {
                color_ids.insert(&e.color, color_factor.len());
                color_factor.push(j);
            }
        }
    }
    // factor_inc[j][v]: factor-j edges at v.
    let factor_inc: Vec<Vec<Vec<Incidence<T>>>> = spec
        .factors
        .iter()
        .map(|f| {
            let mut inc: Vec<Vec<Incidence<T>>> = (0..f.graph.n).map(|_| Vec::new()).collect();
            for e in &f.graph.edges {
                let c = color_ids[e.color.as_str()];
                inc[e.u].push(Incidence {
                    color: c,
                    other: e.v,
                    a: e.a,
                });
                if !e.is_loop() {
                    inc[e.v].push(Incidence {
                        color: c,
                        other: e.u,
                        a: e.a,
                    });
                }
            }
            inc
        })
        .collect();
    // relator_inc[i][color]: relator edges of that color at i.
    let rel = &spec.relator;
    let mut relator_inc: Vec<BTreeMap<usize, Vec<(usize, T)>>> = vec![BTreeMap::new(); rel.n];
    for e in &rel.edges {
        let c = color_ids[e.color.as_str()];
        relator_inc[e.u].entry(c).or_default().push((e.v, e.a));
        if !e.is_loop() {
            relator_inc[e.v].entry(c).or_default().push((e.u, e.a));
        }
    }

    let mut words = WordTable::new();
    let mut key_of: Vec<(usize, usize)> = vec![(rel.root, 0)];
    let mut index: HashMap<(usize, usize), usize> = HashMap::from([((rel.root, 0), 0)]);
    let mut depth = vec![0usize];
    let mut edges: Vec<Edge<T>> = Vec::new();
    let mut half: Vec<Loop<T>> = Vec::new();
    let mut seen_pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut queue = VecDeque::from([0usize]);
    let mut neighbors: Vec<((usize, usize), T)> = Vec::new();

    while let Some(x) = queue.pop_front() {
        let (i, w) = key_of[x];
        neighbors.clear();
        for (j, f) in spec.factors.iter().enumerate() {
            // Split w = v·u with v the factor-j head of w, or the root of G_j.
            let (v, u) = match words.cells[w] {
                Some(((fj, fv), rest)) if fj == j => (fv, rest),
                _ => (f.graph.root, w),
            };
            for inc in &factor_inc[j][v] {
                let Some(targets) = relator_inc[i].get(&inc.color) else {
                    continue;
                };
                let word = if inc.other == f.graph.root {
                    u
                } else {
                    words.cons((j, inc.other), u)
                };
                for &(i2, a0) in targets {
                    neighbors.push(((i2, word), a0 * inc.a));
                }
            }
        }
        for &(key, a) in &neighbors {
            let y = match index.get(&key) {
                Some(&y) => y,
                None => {
                    if depth[x] == radius {
                        continue;
                    }
                    let y = key_of.len();
                    limits.check_size(y + 1)?;
                    key_of.push(key);
                    index.insert(key, y);
                    depth.push(depth[x] + 1);
                    queue.push_back(y);
                    y
                }
            };
            // The same pair arises once from each endpoint; keep one copy.
            if seen_pairs.insert((x.min(y), x.max(y))) {
                if x == y {
                    half.push(Loop { v: x, a });
                } else {
                    edges.push(Edge { u: x, v: y, a });
                }
            }
        }
    }
    let labels = key_of
        .iter()
        .map(|&(i, w)| ProductLabel {
            relator_vertex: i,
            word: words.letters(w),
        })
        .collect();
    let n = key_of.len();
    let graph = JacobiGraph::from_parts(n, vec![T::zero(); n], edges, Vec::new(), half)?;
    Ok(ProductCore {
        graph,
        labels,
        depth,
        radius,
        warnings: spec.loop_warnings(),
    })
}

/// The product whose core is the universal cover of `g`, rooted over `root`.
///
/// Every dart pair of `g` gets its own color and a two-vertex factor with one
/// edge of that color; whole-loops are split into two loops first.
pub fn cover_as_product<T: Real>(g: &JacobiGraph<T>, root: usize) -> Result<AmalgamSpec<T>> {
    if g.has_potentials() {
        return Err(Error::invalid(
            "products are defined for weighted adjacency operators only (all b = 0)",
        ));
    }
    if root >= g.n() {
        return Err(Error::invalid(format!(
            "root {root} out of range 0..{}",
            g.n()
        )));
    }
    let mut relator = ColoredGraph {
        n: g.n(),
        root,
        edges: Vec::new(),
    };
    let mut colors = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        let c = format!("e{k}");
        relator.edges.push(ColoredEdge {
            u: e.u,
            v: e.v,
            color: c.clone(),
            a: e.a,
        });
        colors.push(c);
    }
    for (k, l) in g.whole_loops().iter().enumerate() {
        for side in ["a", "b"] {
            let c = format!("w{k}{side}");
            relator.edges.push(ColoredEdge {
                u: l.v,
                v: l.v,
                color: c.clone(),
                a: l.a,
            });
            colors.push(c);
        }
    }
    for (k, l) in g.half_loops().iter().enumerate() {
        let c = format!("h{k}");
        relator.edges.push(ColoredEdge {
            u: l.v,
            v: l.v,
            color: c.clone(),
            a: l.a,
        });
        colors.push(c);
    }
    let factors = colors
        .into_iter()
        .map(|c| Factor {
            name: c.clone(),
            graph: ColoredGraph {
                n: 2,
                root: 0,
                edges: vec![ColoredEdge {
                    u: 0,
                    v: 1,
                    color: c,
                    a: T::one(),
                }],
            },
        })
        .collect();
    Ok(AmalgamSpec { relator, factors })
}

/// Finite group given by its multiplication table on `0..order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    pub name: String,
    pub order: usize,
    /// `mul[i * order + j]` is the product `i·j`.
    pub mul: Vec<usize>,
    pub identity: usize,
    pub inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates the table: closure, associativity, identity and inverses.
    pub fn new(name: &str, order: usize, mul: Vec<usize>) -> Result<Self> {
        let m = order;
        if m == 0 || mul.len() != m * m || mul.iter().any(|&x| x >= m) {
            return Err(Error::invalid(format!(
                "group {name}: incomplete multiplication table"
            )));
        }
        let p = |a: usize, b: usize| mul[a * m + b];
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    if p(p(a, b), c) != p(a, p(b, c)) {
                        return Err(Error::invalid(format!(
                            "group {name}: multiplication is not associative"
                        )));
                    }
                }
            }
        }
        let identity = (0..m)
            .find(|&e| (0..m).all(|a| p(e, a) == a && p(a, e) == a))
            .ok_or_else(|| Error::invalid(format!("group {name}: no identity element")))?;
        let mut inverse = Vec::with_capacity(m);
        for a in 0..m {
            let inv = (0..m)
                .find(|&b| p(a, b) == identity && p(b, a) == identity)
                .ok_or_else(|| {
                    Error::invalid(format!("group {name}: element {a} has no inverse"))
                })?;
            inverse.push(inv);
        }
        Ok(FiniteGroup {
            name: name.to_string(),
            order,
            mul,
            identity,
            inverse,
        })
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    /// Cyclic group `ℤ_m` with elements `0..m` under addition.
    pub fn cyclic(name: &str, m: usize) -> Self {
        let mul = (0..m * m).map(|k| (k / m + k % m) % m).collect();
        FiniteGroup::new(name, m, mul).expect("cyclic tables are groups")
    }
}

/// Factor group with its embedding of the common subgroup and generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupFactor {
    pub group: FiniteGroup,
    /// `embed[h]` is the image of subgroup element `h`.
    pub embed: Vec<usize>,
    pub gens: Vec<usize>,
}

/// Input of [`cayley_spec`]: the common subgroup and the factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupData {
    pub subgroup: FiniteGroup,
    pub factors: Vec<GroupFactor>,
}

/// Parses the group file format.
///
/// `group <name> order <m>` starts a group whose table follows as
/// `mul <i> <j> <k>` rows. `subgroup <name> embed <i>-><j>` maps element `i`
/// of the common subgroup into group `name`; `gens <name> <i> ...` lists a
/// factor's generators. The common subgroup is the one group without `gens`.
pub fn parse_groups(text: &str) -> Result<GroupData> {
    struct Pending {
        name: String,
        order: usize,
        mul: Vec<Option<usize>>,
        line: usize,
    }
    let mut groups: Vec<Pending> = Vec::new();
    let mut embeds: BTreeMap<String, Vec<(usize, usize, usize)>> = BTreeMap::new();
    let mut gens: BTreeMap<String, (Vec<usize>, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let t: Vec<&str> = content.split_whitespace().collect();
        match t[0] {
            "group" => {
                if t.len() != 4 || t[2] != "order" {
                    return Err(Error::parse(line, "usage: group <name> order <m>"));
                }
                if groups.iter().any(|g| g.name == t[1]) {
                    return Err(Error::parse(line, format!("group {} declared twice", t[1])));
                }
                let order = parse_usize(t[3], line)?;
                if order == 0 {
                    return Err(Error::parse(line, "group order must be positive"));
                }
                groups.push(Pending {
                    name: t[1].to_string(),
                    order,
                    mul: vec![None; order * order],
                    line,
                });
            }
            "mul" => {
                let g = groups
                    .last_mut()
                    .ok_or_else(|| Error::parse(line, "mul row before any group"))?;
                if t.len() != 4 {
                    return Err(Error::parse(line, "usage: mul <i> <j> <k>"));
                }
                let (i, j, k) = (
                    parse_usize(t[1], line)?,
                    parse_usize(t[2], line)?,
                    parse_usize(t[3], line)?,
                );
                if i >= g.order || j >= g.order || k >= g.order {
                    return Err(Error::parse(line, "group element out of range"));
                }
                if g.mul[i * g.order + j].replace(k).is_some() {
                    return Err(Error::parse(line, format!("product {i}·{j} given twice")));
                }
            }
            "subgroup" => {
                if t.len() != 4 || t[2] != "embed" {
                    return Err(Error::parse(line, "usage: subgroup <name> embed <i>-><j>"));
                }
                let (a, b) = t[3]
                    .split_once("->")
                    .ok_or_else(|| Error::parse(line, "expected <i>-><j>"))?;
                embeds.entry(t[1].to_string()).or_default().push((
                    parse_usize(a, line)?,
                    parse_usize(b, line)?,
                    line,
                ));
            }
            "gens" => {
                if t.len() < 3 {
                    return Err(Error::parse(line, "usage: gens <name> <i> ..."));
                }
                let list = t[2..]
                    .iter()
                    .map(|s| parse_usize(s, line))
                    .collect::<Result<Vec<_>>>()?;
                if gens.insert(t[1].to_string(), (list, line)).is_some() {
                    return Err(Error::parse(
                        line,
                        format!("generators of {} given twice", t[1]),
                    ));
                }
            }
            other => return Err(Error::parse(line, format!("unknown statement {other:?}"))),
        }
    }
    let mut built = Vec::new();
    for g in groups {
        let mul = g
            .mul
            .iter()
            .map(|x| {
                x.ok_or_else(|| {
                    Error::parse(
                        g.line,
                        format!("group {}: incomplete multiplication table", g.name),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        built.push(FiniteGroup::new(&g.name, g.order, mul)?);
    }
    for name in embeds.keys().chain(gens.keys()) {
        if !built.iter().any(|g| &g.name == name) {
            return Err(Error::invalid(format!("unknown group {name}")));
        }
    }
    let (with_gens, without): (Vec<FiniteGroup>, Vec<FiniteGroup>) =
        built.into_iter().partition(|g| gens.contains_key(&g.name));
    let subgroup = match <[FiniteGroup; 1]>::try_from(without) {
        Ok([h]) => h,
        Err(v) => {
            return Err(Error::invalid(format!(
                "exactly one group must lack generators (the common subgroup); found {}",
                v.len()
            )))
        }
    };
    let mut factors = Vec::new();
    for group in with_gens {
        let rows = embeds.remove(&group.name).unwrap_or_default();
        let mut embed = vec![None; subgroup.order];
        for (h, x, line) in rows {
            if h >= subgroup.order || x >= group.order {
                return Err(Error::parse(line, "embedding element out of range"));
            }
            if embed[h].replace(x).is_some() {
                return Err(Error::parse(line, format!("image of {h} given twice")));
            }
        }
        let embed = embed
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                Error::invalid(format!(
                    "subgroup {} is not embedded in {}",
                    subgroup.name, group.name
                ))
            })?;
        let gens = gens.remove(&group.name).map(|g| g.0).unwrap_or_default();
        factors.push(GroupFactor { group, embed, gens });
    }
    Ok(GroupData { subgroup, factors })
}

/// Colored graphs whose product is the Cayley graph of the amalgamated free
/// product of the factors over the common subgroup, with generating set the
/// union of the factor generators.
///
/// The relator lives on the subgroup, rooted at its identity. Factor `i`
/// lives on right-coset representatives of the subgroup image, the identity
/// first and then the least element of each other coset. For a generator
/// `s`, subgroup element `h` and representative `r`, writing `s·h·r = h″·r′`
/// creates the directed relator edge `h → h″` and factor edge `r → r′`, both
/// colored `(s, h, r)`. A directed color and the color of its reverse are
/// identified to give undirected edges.
pub fn cayley_spec(data: &GroupData) -> Result<AmalgamSpec<f64>> {
    let h_group = &data.subgroup;
    if data.factors.is_empty() {
        return Err(Error::invalid("no factor groups"));
    }
    let mut factors = Vec::new();
    let mut relator = ColoredGraph {
        n: h_group.order,
        root: h_group.identity,
        edges: Vec::new(),
    };
    for f in &data.factors {
        let g = &f.group;
        let phi = &f.embed;
        if phi.len() != h_group.order {
            return Err(Error::invalid(format!(
                "{} is not common to factor {}",
                h_group.name, g.name
            )));
        }
        for a in 0..h_group.order {
            for b in 0..h_group.order {
                if phi[h_group.mul(a, b)] != g.mul(phi[a], phi[b]) {
                    return Err(Error::invalid(format!(
                        "embedding into {} is not a homomorphism",
                        g.name
                    )));
                }
            }
        }
        let mut image = phi.clone();
        image.sort_unstable();
        image.dedup();
        if image.len() != phi.len() {
            return Err(Error::invalid(format!(
                "embedding into {} is not injective",
                g.name
            )));
        }
        if f.gens.iter().any(|&s| s >= g.order) {
            return Err(Error::invalid(format!(
                "generator of {} out of range",
                g.name
            )));
        }
        let gen_set: HashSet<usize> = f.gens.iter().copied().collect();
        if f.gens.iter().any(|&s| !gen_set.contains(&g.inverse[s])) {
            return Err(Error::invalid(format!(
                "generators of {} are not closed under inverses",
                g.name
            )));
        }
        // Right cosets H·x, each keyed by its representative.
        let mut rep_of = vec![usize::MAX; g.order];
        let mut reps = vec![g.identity];
        for &x in phi {
            rep_of[x] = g.identity;
        }
        for x in 0..g.order {
            if rep_of[x] != usize::MAX {
                continue;
            }
            reps.push(x);
            for &h in phi {
                rep_of[g.mul(h, x)] = x;
            }
        }
        let rep_index: HashMap<usize, usize> =
            reps.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        let phi_inv: HashMap<usize, usize> = phi.iter().enumerate().map(|(h, &x)| (x, h)).collect();
        // s·h·r = h″·r′ with r′ the representative of its coset.
        let step = |s: usize, h: usize, r: usize| {
            let x = g.mul(s, g.mul(phi[h], r));
            let r2 = rep_of[x];
            let h2 = phi_inv[&g.mul(x, g.inverse[r2])];
            (h2, r2)
        };
        let mut gens = f.gens.clone();
        gens.sort_unstable();
        gens.dedup();
        let mut edges = Vec::new();
        for &s in &gens {
            for h in 0..h_group.order {
                for &r in &reps {
                    let (h2, r2) = step(s, h, r);
                    let forward = (s, h, r);
                    let back = (g.inverse[s], h2, r2);
                    if back < forward {
                        continue;
                    }
                    let color = format!("{}:s{}h{}r{}", g.name, s, h, r);
                    relator.edges.push(ColoredEdge {
                        u: h,
                        v: h2,
                        color: color.clone(),
                        a: 1.0,
                    });
                    edges.push(ColoredEdge {
                        u: rep_index[&r],
                        v: rep_index[&r2],
                        color,
                        a: 1.0,
                    });
                }
            }
        }
        factors.push(Factor {
            name: g.name.clone(),
            graph: ColoredGraph {
                n: reps.len(),
                root: 0,
                edges,
            },
        });
    }
    let spec = AmalgamSpec { relator, factors };
    spec.validate()?;
    Ok(spec)
}

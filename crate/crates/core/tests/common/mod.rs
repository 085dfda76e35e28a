#![allow(dead_code)]

use proptest::prelude::*;
use treespec::{Graph, GraphBuilder};

/// Random connected graph: a random spanning tree plus extra edges and loops.
pub fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..6)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
            let extra = prop::collection::vec((0..n, 0..n, -3.0f64..3.0), 0..4);
            let whole = prop::collection::vec((0..n, 0.1f64..2.0), 0..3);
            let half = prop::collection::vec((0..n, 0.1f64..2.0), 0..3);
            let b = prop::collection::vec(-2.0f64..2.0, n);
            let tree_a = prop::collection::vec(0.1f64..2.0, n.saturating_sub(1));
            (Just(n), parents, extra, whole, half, b, tree_a)
        })
        .prop_map(|(n, parents, extra, whole, half, b, tree_a)| {
            let mut g = GraphBuilder::new(n);
            for (v, &p) in parents.iter().enumerate() {
                g = g.edge(p, v + 1, tree_a[v]);
            }
            for (u, v, a) in extra {
                if u != v && a.abs() > 1e-3 {
                    g = g.edge(u, v, a);
                }
            }
            for (v, a) in whole {
                g = g.whole_loop(v, a);
            }
            for (v, a) in half {
                g = g.half_loop(v, a);
            }
            for (v, &x) in b.iter().enumerate() {
                g = g.potential(v, x);
            }
            g.build().unwrap()
        })
}

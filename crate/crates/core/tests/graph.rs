use proptest::prelude::*;
use treespec::graph::named;
use treespec::{parse_graph, serialize_graph, Error, GraphBuilder};

mod common;
use common::arb_graph;

const K4_TEXT: &str = "jacobi-graph v1
vertices 4
edge 0 1 1.0
edge 0 2 1.0
edge 0 3 1.0
edge 1 2 1.0
edge 1 3 1.0
edge 2 3 1.0
";

fn sorted_lines(s: &str) -> Vec<String> {
    let mut v: Vec<String> = s.lines().map(str::to_string).collect();
    v.sort();
    v
}

#[test]
fn parses_half_loop_bouquet() {
    let g = parse_graph(
        "jacobi-graph v1\nvertices 1\nhalfloop 0 1.0\nhalfloop 0 1.0\nhalfloop 0 1.0\n",
    )
    .unwrap();
    assert_eq!(g.n(), 1);
    assert_eq!(g.half_loops().len(), 3);
    assert_eq!(g.degree_profile().deg, vec![3]);
}

#[test]
fn parses_k4() {
    let g = parse_graph(K4_TEXT).unwrap();
    assert_eq!(g.n(), 4);
    assert_eq!(g.edges().len(), 6);
    assert!(g.b().iter().all(|&b| b == 0.0));
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let g = parse_graph("# leading comment\njacobi-graph v1\n\nvertices 2 # two\nedge 0 1 2.5\n")
        .unwrap();
    assert_eq!(g.edges()[0].a, 2.5);
}

fn parse_error_line(text: &str) -> usize {
    match parse_graph(text) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn self_edge_is_rejected() {
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 0 1.0\n"),
        3
    );
}

#[test]
fn syntax_errors_carry_line_numbers() {
    assert_eq!(parse_error_line("jacobi-graph v2\nvertices 1\n"), 1);
    assert_eq!(parse_error_line("jacobi-graph v1\nedge 0 1 1.0\n"), 2);
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 1 x\n"),
        3
    );
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 1\n"),
        3
    );
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 1 1.0\nbogus 1\n"),
        4
    );
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 1 0.0\n"),
        3
    );
    assert_eq!(
        parse_error_line("jacobi-graph v1\nvertices 2\nedge 0 5 1.0\n"),
        3
    );
}

#[test]
fn disconnected_input_is_rejected() {
    let err = parse_graph("jacobi-graph v1\nvertices 3\nedge 0 1 1.0\n").unwrap_err();
    assert!(
        matches!(err, Error::Invalid(_) | Error::Parse { .. }),
        "{err:?}"
    );
}

#[test]
fn round_trip_k4() {
    let g = parse_graph(K4_TEXT).unwrap();
    let text = serialize_graph(&g);
    assert_eq!(sorted_lines(&text), sorted_lines(K4_TEXT));
    assert_eq!(parse_graph(&text).unwrap(), g);
}

#[test]
fn round_trip_with_loops_and_potentials() {
    let g = GraphBuilder::new(2)
        .potential(0, -1.5)
        .potential(1, 2.0)
        .edge(0, 1, 0.1)
        .whole_loop(0, 3.0)
        .half_loop(1, -0.7)
        .half_loop(1, 1.0 / 3.0)
        .build()
        .unwrap();
    let text = g.to_text();
    assert!(text.contains("b 0 -1.5\n"));
    assert!(text.contains("b 1 2.0\n"));
    assert!(text.contains(&format!("halfloop 1 {:?}\n", 1.0f64 / 3.0)));
    assert_eq!(parse_graph(&text).unwrap(), g);
}

#[test]
fn degree_profiles() {
    assert_eq!(named::bouquet::<f64>(2, 0).degree_profile().deg, vec![4]);
    assert_eq!(named::bouquet::<f64>(0, 3).degree_profile().deg, vec![3]);
    assert_eq!(
        named::complete::<f64>(4).degree_profile().deg,
        vec![3, 3, 3, 3]
    );
}

#[test]
fn dense_operators() {
    let m = named::path::<f64>(2).dense_operator();
    assert_eq!(
        (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
        (0.0, 1.0, 1.0, 0.0)
    );
    let m = GraphBuilder::new(1)
        .whole_loop(0, 1.0)
        .build()
        .unwrap()
        .dense_operator();
    assert_eq!(m[(0, 0)], 2.0);
    let m = named::parallel_edges(&[2.0, 1.0]).dense_operator();
    assert_eq!(
        (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]),
        (0.0, 3.0, 3.0, 0.0)
    );
}

#[test]
fn row_sum_bounds() {
    assert_eq!(named::complete::<f64>(4).row_sum_bound(), 3.0);
    assert_eq!(named::bouquet::<f64>(2, 0).row_sum_bound(), 4.0);
    let g = GraphBuilder::new(2)
        .potential(0, 5.0)
        .edge(0, 1, 1.0)
        .build()
        .unwrap();
    assert_eq!(g.row_sum_bound(), 6.0);
}

#[test]
fn negation_flips_every_coefficient() {
    let g = GraphBuilder::new(2)
        .potential(0, 1.0)
        .edge(0, 1, 2.0)
        .whole_loop(1, 3.0)
        .build()
        .unwrap();
    let m = g.dense_operator();
    let n = g.negate().dense_operator();
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(n[(i, j)], -m[(i, j)]);
        }
    }
}

#[test]
fn single_precision_graphs_work() {
    let g: treespec::JacobiGraph<f32> = named::complete(4);
    assert_eq!(g.row_sum_bound(), 3.0f32);
    assert_eq!(g.cast::<f64>(), named::complete::<f64>(4));
}

proptest! {
    #[test]
    fn round_trip_is_identity(g in arb_graph()) {
        prop_assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
    }

    #[test]
    fn operator_is_symmetric(g in arb_graph()) {
        let m = g.dense_operator();
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn handshake(g in arb_graph()) {
        let total = g.degree_profile().total();
        prop_assert_eq!(total, 2 * g.edges().len() + 2 * g.whole_loops().len() + g.half_loops().len());
    }

    #[test]
    fn row_sum_bound_dominates_base_spectrum(g in arb_graph()) {
        let s = treespec::eigen::sym_eigenvalues(&g.dense_operator()).unwrap();
        prop_assert!(s.max().unwrap() <= g.row_sum_bound() + 1e-9);
    }
}

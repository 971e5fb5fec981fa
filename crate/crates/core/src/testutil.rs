//! Small graph fixtures shared by the unit tests.

use nalgebra::DMatrix;

use crate::graph::{build_graph, parse_edge_list, Graph};

pub fn path_graph(m: usize) -> Graph {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
        a[(i + 1, i)] = 1.0;
    }
    build_graph(a).unwrap()
}

pub fn complete_graph(m: usize) -> Graph {
    let a = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { 1.0 });
    build_graph(a).unwrap()
}

/// Triangle on nodes 1,2,3 with node 4 hanging off node 3.
pub fn paw_graph() -> Graph {
    parse_edge_list("1 2\n1 3\n2 3\n3 4\n").unwrap()
}

/// Node 1 is the hub; nodes 2..=m are leaves.
pub fn star_graph(m: usize) -> Graph {
    let mut a = DMatrix::zeros(m, m);
    for leaf in 1..m {
        a[(0, leaf)] = 1.0;
        a[(leaf, 0)] = 1.0;
    }
    build_graph(a).unwrap()
}

pub fn single_node() -> Graph {
    build_graph(DMatrix::zeros(1, 1)).unwrap()
}

/// The bundled 10-arm example model used throughout the docs and CLI defaults.
pub fn example_means() -> Vec<f64> {
    vec![40.0, 50.0, 50.0, 60.0, 70.0, 70.0, 80.0, 90.0, 92.0, 95.0]
}

pub fn example_model() -> crate::bandit::BanditModel {
    crate::bandit::BanditModel::new(example_means(), 30.0).unwrap()
}

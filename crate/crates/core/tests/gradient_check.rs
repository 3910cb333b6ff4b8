//! Analytic gradients against central finite differences (step 1e-5).

mod common;

use common::gradcheck::{self, TOL};

fn assert_all(results: Vec<(String, f64)>) {
    for (name, e) in results {
        assert!(e < TOL, "{name}: relative error {e:e}");
    }
}

#[test]
fn conv2d() {
    assert_all(gradcheck::conv2d());
}

#[test]
fn relu() {
    assert_all(gradcheck::relu_layer());
}

#[test]
fn maxpool() {
    assert_all(gradcheck::maxpool_layer());
}

#[test]
fn global_average_pool() {
    assert_all(gradcheck::global_average_pool());
}

#[test]
fn dense() {
    assert_all(gradcheck::dense_layer());
}

#[test]
fn softmax_and_loss() {
    assert_all(gradcheck::softmax_and_loss());
}

#[test]
fn composed_tiny_model() {
    assert_all(gradcheck::composed_model());
}

//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)]

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

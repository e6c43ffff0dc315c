//! Shared fixtures and small independent oracles for the integration tests.
//!
//! The determinant helpers here are deliberate re-implementations (cofactor
//! expansion, no pivoting) so brute-force checks do not share code with the
//! LU-based implementation they are verifying.

// each test binary compiles this module separately and uses its own subset
#![allow(dead_code)]

use fairbound_core::measure::{DensityFunction, Instance, PolyPiece};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Three agents with uniform, linear and Beta(2,5)-shaped probability
/// densities and equal claims; the worked example used across the suite.
pub fn mixed_three_agents() -> Instance {
    let f1 = DensityFunction::constant("uniform", 1.0).unwrap();
    let f2 =
        DensityFunction::new("linear", vec![PolyPiece::new(0.0, 1.0, vec![0.0, 2.0])]).unwrap();
    let f3 = DensityFunction::new(
        "beta25",
        vec![PolyPiece::new(
            0.0,
            1.0,
            vec![0.0, 30.0, -120.0, 180.0, -120.0, 30.0],
        )],
    )
    .unwrap();
    Instance::new(vec![f1, f2, f3], vec![1.0 / 3.0; 3]).unwrap()
}

pub fn identical_three_agents() -> Instance {
    let f = DensityFunction::constant("uniform", 1.0).unwrap();
    Instance::new(vec![f.clone(), f.clone(), f], vec![1.0 / 3.0; 3]).unwrap()
}

pub fn two_agents_linear() -> Instance {
    let f = DensityFunction::constant("uniform", 1.0).unwrap();
    let g = DensityFunction::new("linear", vec![PolyPiece::new(0.0, 1.0, vec![0.0, 2.0])]).unwrap();
    Instance::new(vec![f, g], vec![0.5, 0.5]).unwrap()
}

/// Random instance with `n` agents, each a continuous piecewise-linear
/// density interpolating positive values at shared random breakpoints, and a
/// random interior claim vector bounded away from the boundary.
pub fn random_piecewise_linear(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let densities = (0..n)
        .map(|i| {
            let n_pieces = rng.gen_range(1..=4usize);
            let mut cuts: Vec<f64> = (0..n_pieces - 1).map(|_| rng.gen_range(0.1..0.9)).collect();
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(|a, b| a.total_cmp(b));
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let values: Vec<f64> = (0..cuts.len()).map(|_| rng.gen_range(0.1..2.0)).collect();
            let pieces = cuts
                .windows(2)
                .enumerate()
                .map(|(k, w)| {
                    let (a, b) = (w[0], w[1]);
                    let (va, vb) = (values[k], values[k + 1]);
                    let slope = (vb - va) / (b - a);
                    PolyPiece::new(a, b, vec![va - slope * a, slope])
                })
                .collect();
            DensityFunction::new(format!("agent{i}"), pieces).unwrap()
        })
        .collect();
    let claims = loop {
        let draws: Vec<f64> = (0..n).map(|_| -(1.0f64 - rng.gen::<f64>()).ln()).collect();
        let sum: f64 = draws.iter().sum();
        let claims: Vec<f64> = draws.iter().map(|d| d / sum).collect();
        if claims.iter().all(|&a| a >= 0.08) {
            break claims;
        }
    };
    Instance::new(densities, claims).unwrap()
}

/// Cofactor-expansion determinant for sizes 1..=3 (independent oracle).
pub fn det_small(cols: &[Vec<f64>]) -> f64 {
    let m = cols.len();
    assert!(cols.iter().all(|c| c.len() == m));
    match m {
        1 => cols[0][0],
        2 => cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1],
        3 => {
            let a = |i: usize, j: usize| cols[j][i];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => panic!("det_small supports m <= 3"),
    }
}

/// Brute-force cone test by determinant signs (weak form), cofactor route.
pub fn cone_contains(cols: &[Vec<f64>], target: &[f64]) -> bool {
    let d = det_small(cols);
    if d.abs() < 1e-12 {
        return false;
    }
    (0..cols.len()).all(|i| {
        let mut replaced: Vec<Vec<f64>> = cols.to_vec();
        replaced[i] = target.to_vec();
        d * det_small(&replaced) >= -1e-12
    })
}

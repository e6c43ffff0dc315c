//! Shared benchmark fixtures.

use fairbound_core::measure::{DensityFunction, Instance, PolyPiece};

/// The three-agent worked instance used across benches.
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

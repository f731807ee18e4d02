//! Concrete problem instances with known constants.

mod convex;
mod quadratic;

pub use convex::{ConvexComponent, ConvexNoise, ConvexQuadratic, ConvexSample};
pub use quadratic::{
    block_hessian, block_hessian_norm, make_quadratic_saddle, mean_square_hessian_norm, NoiseModel, NoiseSpec,
    QuadraticSaddle, SaddleComponent, SaddleSample,
};

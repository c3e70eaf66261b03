//! The two benchmark systems used throughout the test and acceptance suites:
//! a two-state/two-input system with strongly coupled dynamics and a
//! four-state/three-input system. Process noise is unit covariance and the
//! exploration level defaults to one; both are easy to override through
//! [`LqrProblem::with_sigma`].

use crate::oracle::LqrProblem;
use nalgebra::DMatrix;

/// Two-dimensional benchmark: swap dynamics with anisotropic costs.
pub fn dim2() -> LqrProblem {
    LqrProblem::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[9.0, 2.0, 2.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 8.0]),
        DMatrix::identity(2, 2),
        1.0,
    )
    .expect("benchmark system is well formed")
}

/// Four-dimensional benchmark with three inputs.
pub fn dim4() -> LqrProblem {
    LqrProblem::new(
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.2, 0.1, 1.0, 0.0, //
                0.2, 0.1, 0.1, 0.0, //
                0.0, 0.1, 0.5, 0.0, //
                0.0, 0.0, 0.0, 0.5,
            ],
        ),
        DMatrix::from_row_slice(
            4,
            3,
            &[
                0.3, 0.0, 0.0, //
                0.2, 0.0, 0.3, //
                1.0, 1.0, 0.3, //
                0.3, 0.1, 0.1,
            ],
        ),
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.2, 0.0, //
                0.0, 1.0, 0.1, 0.0, //
                0.2, 0.1, 1.0, 0.1, //
                0.0, 0.0, 0.1, 1.0,
            ],
        ),
        DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0, 0.1, 1.0, //
                0.1, 1.0, 0.5, //
                1.0, 0.5, 2.0,
            ],
        ),
        DMatrix::identity(4, 4),
        1.0,
    )
    .expect("benchmark system is well formed")
}

//! Precoding on the K-user MISO broadcast channel with fully delayed CSIT.
//!
//! The transmitter has K antennas and serves K single-antenna users over a
//! slotted protocol, knowing only strictly-past channel vectors. The library
//! implements:
//!
//! * the multi-phase retransmission protocol (MAT) and its finite-SNR
//!   generalization (GMAT) in which the order-2 combining vectors are free
//!   design parameters,
//! * two precoder optimizers: iterative gradient descent on a virtual MMSE
//!   cost, and closed-form dominant generalized eigenvectors of a dual-SINR
//!   quotient,
//! * receiver-side metrics: MMSE filters, exact log-det mutual information,
//!   the 2-user closed forms, per-slot sum rate, and high-SNR slope fits,
//! * correlated Rayleigh channel generation with reproducible seeding.
//!
//! Everything is dense complex linear algebra over small matrices; all
//! operations are pure functions safe for concurrent use.

pub mod channel;
pub mod metrics;
pub mod numerics;
pub mod precoders;
pub mod protocol;

use thiserror::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense dynamically-sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense dynamically-sized complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Errors raised by library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector has no orthogonal complement")]
    ZeroVector,
    #[error("matrix is not Hermitian (max asymmetry {max_dev:e} exceeds {tol:e})")]
    NotHermitian { max_dev: f64, tol: f64 },
    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },
    #[error("negative eigenvalue {value:e} below PSD tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("correlation coefficient {0} outside [0, 1)")]
    TauOutOfRange(f64),
    #[error("user count {0} unsupported (need 2 <= K <= {max})", max = protocol::MAX_USERS)]
    UsersOutOfRange(usize),
    #[error("slot {slot} out of range (total {total})")]
    SlotOutOfRange { slot: usize, total: usize },
    #[error("non-finite cost at iteration {iteration}; gradient step too large")]
    NonFiniteCost { iteration: usize },
    #[error("precoder must have unit norm, got squared norm {0}")]
    NotUnitNorm(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("SNR {0} must be positive")]
    NonPositiveSnr(f64),
}

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

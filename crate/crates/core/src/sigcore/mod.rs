//! Complex-baseband primitives: phase codes, Golay pairs, differential PSK,
//! correlation, cyclic shifts and array steering vectors.

mod array;
mod code;
mod corr;
mod dpsk;
mod golay;

pub use array::{steering_vector, ArrayGeometry, SteeringConvention};
pub use code::CodeSequence;
pub use corr::{aperiodic_autocorr, aperiodic_autocorr_exact, cyclic_shift, Conjugate};
pub use dpsk::{dpsk_decode, dpsk_encode, psk_decision, DpskOrder, DpskStream};
pub use golay::{golay_pair, GolayPair};

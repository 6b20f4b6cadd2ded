//! Computing the c2 invariant of graphs at small primes.
//!
//! Two independent routes: a brute-force oracle ([`poly`]) that counts points
//! of Kirchhoff and Dodgson polynomials, and a transfer-matrix engine
//! ([`transfer`]) for the decompleted circulant families C_n(1,3) and C_n(2,3)
//! built on the spanning forest calculus in [`forest`]. [`period`] detects and
//! certifies periods and tallies prefix frequencies.

pub mod field;
pub mod graph;
pub mod partition;
pub mod poly;
pub mod forest;
pub mod transfer;
pub mod period;

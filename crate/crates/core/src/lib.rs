//! Exact shift-function calculus for graded commutative noetherian rings.
//!
//! The crate is organized as a small tower:
//!
//! * [`ring_dsl`] — textual presentations of graded rings and homogeneous
//!   primes, parsed into immutable ASTs and printed back canonically.
//! * [`graded_rings`] — the structural calculus on those ASTs: Krull
//!   dimension of the homogeneous spectrum, heights and coheights of catalog
//!   primes, equicodimensionality, and prime restriction along finite maps.
//! * [`shift_calculus`] — the symbolic rule engine for Gorenstein shift
//!   functions: compositional construction, conversion to local-duality
//!   shifts, and ascent/descent along ring maps.
//! * [`cochain_duality`] — the cochain-spectrum pipeline: unitary-embedding
//!   power-series rings, relative shifts for subgroups, and the shift
//!   function of cochain algebras on classifying spaces.
//! * [`cech_oracle`] — an independent brute-force verifier: graded local
//!   cohomology of small field-coefficient algebras via truncated Cech
//!   complexes and exact linear algebra.
//!
//! Everything is `no_std` + `alloc`; all arithmetic is exact (integers,
//! rationals, finite fields). There is no floating point anywhere.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cech_oracle;
pub mod cochain_duality;
pub mod graded_rings;
pub mod ring_dsl;
pub mod shift_calculus;

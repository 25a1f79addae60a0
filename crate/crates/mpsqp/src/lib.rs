//! Quasiparticle excitations above matrix product states.
//!
//! The crate is organised bottom-up: dense linear algebra ([`linalg`]),
//! transfer channels ([`channel`]), states on a ring ([`mps`]),
//! one-particle spectra ([`excitations`]), parent Hamiltonians and exact
//! diagonalization ([`parent`]), disorder averaging ([`localization`]),
//! a classical Glauber dynamics ([`glauber`]) and file formats ([`io`]).

pub mod channel;
pub mod error;
pub mod excitations;
pub mod glauber;
pub mod io;
pub mod linalg;
pub mod localization;
pub mod mps;
pub mod parent;

pub use error::{Error, ErrorKind, Result};

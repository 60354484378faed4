//! CRC-embedded lattice codes with multi-level retry decoding.

pub mod bounds;
pub mod cf;
pub mod code;
pub mod crcopt;
pub mod embed;
pub mod error;
pub mod lattice;
pub mod pud;
pub mod retry;
pub mod sim;

pub use code::{mmse_alpha, NestedLatticeCode, PowerMode};
pub use embed::{BinaryCode, CrcSpec, EmbeddedCode, EmbeddedLattice};
pub use error::{Error, Result};
pub use lattice::{DecoderKind, Lattice};

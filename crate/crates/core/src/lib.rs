//! Interleavings, translation distance, torsion thresholds and displacement
//! energy bounds for persistence barcodes, Morse-type complexes and planar
//! constructible sheaves. All arithmetic is exact.

pub mod barcode;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod interleave;
pub mod linalg;
pub mod morse;
pub mod novikov;
pub mod plane;
pub mod rat;

pub use barcode::{Bar, GradedBarcode};
pub use error::{Error, Result};
pub use field::{Field, FieldElem};
pub use linalg::Matrix;
pub use novikov::NovikovScalar;
pub use rat::{ExtRat, Rat};

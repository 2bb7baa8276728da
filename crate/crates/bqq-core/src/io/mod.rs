//! Parsers and writers for the matrix sources used by the benchmark:
//! fvecs feature files, TSPLIB EUC_2D instances, delimited text, and a raw
//! binary matrix format.
//!
//! All parsers reject malformed input with a diagnostic naming the byte or
//! line offset; nothing is silently truncated.

pub mod fvecs;
pub mod rawmat;
pub mod text;
pub mod tsplib;

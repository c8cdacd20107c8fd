//! Pieces of the command line that are worth testing (and fuzzing) as a
//! library: the benchmark manifest format and the SVG renderer.

pub mod bench;
pub mod plot;

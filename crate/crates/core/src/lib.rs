pub mod audio;
pub mod bispectrum;
pub mod cli;
pub mod corpus;
pub mod detect;
pub mod features;
pub mod numfmt;
pub mod synth;

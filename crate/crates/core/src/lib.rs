pub mod matrix;
pub mod spectral;
pub mod rng;
pub mod two_level;
pub mod pt_dimer;
pub mod trajectory;
pub mod effective;
pub mod cli;

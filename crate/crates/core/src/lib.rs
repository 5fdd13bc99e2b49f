pub mod bits;
pub mod cli;
pub mod dem;
pub mod games;
pub mod hashing;
pub mod hybrid;
pub mod kem;
pub mod par;
pub mod protocol;
pub mod qsim;
pub mod recon;
pub mod rng;

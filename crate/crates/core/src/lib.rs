pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod fisher;
pub mod fit;
pub mod gof;
pub mod optim;
pub mod rng;
pub mod specfun;
pub mod zero_models;

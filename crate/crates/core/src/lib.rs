pub mod calibration;
pub mod cli;
pub mod click;
pub mod config;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod optimizer;
pub mod output;
pub mod params;
pub mod pipeline;
pub mod quadrature;
pub mod security;
pub mod source;
pub mod states;
pub mod validation;

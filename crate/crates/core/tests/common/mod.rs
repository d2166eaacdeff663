//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

pub mod mode_oracle;
pub mod numeric;

pub mod config;
pub mod error;
pub mod output;
pub mod pipelines;
pub mod run;
pub mod scenarios;
pub mod verify;

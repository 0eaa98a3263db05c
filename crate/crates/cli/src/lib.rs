//! Problem files, reports and subcommands of `representer-lab`.

pub mod commands;
pub mod problem;
pub mod report;

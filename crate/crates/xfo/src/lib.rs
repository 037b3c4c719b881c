//! Text front end, trace files, rendering and command line for the
//! `xfo-core` kernel.

pub mod ast;
pub mod cli;
pub mod diag;
pub mod lexer;
pub mod loader;
pub mod parser;
pub mod printer;
pub mod render;
pub mod trace_file;

//! Toolchain for the Rhyme quantum programming language: a parser and
//! checker, an exact statevector interpreter, and an OpenQASM 2.0 compiler.
pub mod engine;
pub mod frontend;
pub mod qasm;
pub mod runner;
pub mod sema;
pub mod semantics;
pub mod types;

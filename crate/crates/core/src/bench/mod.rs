//! Benchmark harness: configuration, windowed evaluation and report files.

pub mod config;
pub mod evaluate;
pub mod report;

pub use config::{BenchConfig, Split, TruthSource};
pub use evaluate::{evaluate, Cell, CellStatus, EvalReport};
pub use report::{emit_report, load_report, ReportFormat};

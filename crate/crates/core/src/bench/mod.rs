//! Benchmark harness: file formats, update streams, replay and reports.

mod io;
mod replay;
mod stream;

pub use io::{
    format_matrix, format_sparse_vector, load_matrix, load_sparse_vector, parse_matrix, parse_sparse_vector,
    save_matrix, save_sparse_vector,
};
pub use replay::{
    format_report, parse_report, replay, replay_seeds, replay_with_state, report, summarize, AggregateSummary,
    BenchRecord, RecordKind, Scenario, SketchSettings, SolverKind, CSV_HEADER,
};
pub use stream::{load_stream, parse_stream, Event, StreamLine};

//! Columnar event storage with pluggable block compression.
//!
//! Branches (columns) of a [`Tree`] are serialized into baskets, optionally
//! preconditioned with a byte or bit shuffle, compressed into framed blocks
//! and written to a self-describing container file. The [`bench`] module
//! measures ratio and throughput across codec, level and preconditioner
//! choices.

pub mod bench;
pub mod checksum;
pub mod codec;
pub mod column;
pub mod container;
pub mod precondition;
pub mod synthgen;

pub use bench::{emit_report, run_matrix, BenchConfig, BenchmarkRecord, MatrixCell, ReportFormat};
pub use checksum::adler32;
pub use codec::{
    compress_block, decompress_block, map_level, train_dictionary, BackendLevel, CodecError,
    CodecId, CompressedBlock, CompressionSettings, Dictionary, DictionaryTable, Level,
};
pub use column::{
    basketize, deserialize_column, serialize_column, Basket, BranchDescriptor, Column, ColumnError,
    ElementKind, Schema, Tree, Width,
};
pub use precondition::{Preconditioner, PreconditionerKind};
pub use synthgen::{generate, DatasetProfile, ProfileError, ValueModel};

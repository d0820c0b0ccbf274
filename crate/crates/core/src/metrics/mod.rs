//! Process metrics, command frequencies, product-metric deltas and the
//! joined per-team feature table.

mod commands;
mod process;
mod product;
mod table;

pub use commands::{command_frequency_vector, CommandCatalog, CommandFrequencyVector};
pub use process::{compute_pcc, compute_process_metrics, ProcessMetricsRecord, PROCESS_COLUMNS};
pub use product::{
    compute_delta, deltas_by_team, read_snapshots, write_snapshots, DeltaRecord, Moment, ProductMetricsSnapshot,
    PRODUCT_METRICS,
};
pub use table::{assemble_feature_table, FeatureRow, FeatureSet, FeatureTable, Practice, TableRow};

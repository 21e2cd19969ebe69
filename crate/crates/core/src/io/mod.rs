//! File formats: the binary embedding container, its CSV variant, JSON
//! reports and plot-ready CSV rows.

mod csv_format;
mod embedding;
mod report;

pub use csv_format::{read_embeddings_csv, write_embeddings_csv};
pub use embedding::{
    decode_embeddings, encode_embeddings, read_embeddings, write_embeddings, FLAG_GROUPS,
    HEADER_LEN, MAGIC,
};
pub use report::{
    plot_row, read_report, report_from_json, report_to_json, write_plot_csv, write_report,
    PlotRow,
};

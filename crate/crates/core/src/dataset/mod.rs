//! Dataset records on disk, the public-dataset catalog and the label audit.

pub mod analyze;
pub mod catalog;
pub mod fitzpatrick;
pub mod io;

pub use analyze::{analyze_dataset, check_alignment, split_subjects, AlignmentReport, AnalyzerReport};
pub use catalog::{catalog, DatasetCatalogEntry};
pub use fitzpatrick::{classify_frames, classify_lab, classify_rgb, FitzpatrickResult};
pub use io::{load_dataset, load_record, write_record, DatasetRecord, LabelTable, Layout, RecordMeta};

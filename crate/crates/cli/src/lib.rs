//! Command-line front end: table analysis, scenario packs and batch
//! simulation runners with reproducible CSV/JSON output.

pub mod analyze;
pub mod app;
pub mod report;
pub mod scenarios;
pub mod simulate;

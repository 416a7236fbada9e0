//! The real-data path end to end: a CSV with missing cells and rare binary
//! columns is loaded and cleaned, then both procedures rerun several times
//! to measure how stable their reported feature lists are. The frequencies
//! CSV written at the end is the artifact a study would report.
//!
//! ```text
//! cargo run --example real_data
//! ```

use eknock::ingest::{load_csv, real_data_pipeline, write_frequencies_csv, write_runs_json};
use eknock::numerics::RngStream;
use std::io::Write;

fn main() {
    let dir = std::env::temp_dir().join("eknock_real_data_example");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("study.csv");
    synthesize_csv(&csv_path, 220, 24);

    let ds = load_csv(&csv_path, "resistance", 3).unwrap();
    println!("loaded {}:", ds.provenance.source);
    for line in &ds.provenance.log {
        println!("  {line}");
    }
    println!(
        "kept {} rows x {} features\n",
        ds.x.nrows(),
        ds.x.ncols()
    );

    let summary = real_data_pipeline(&ds, 0.15, 0.3, 24, 12, 2025).unwrap();
    println!("12 reruns (M = 24 knockoff runs each):");
    println!("{:<12} {:>9} {:>13}", "feature", "original", "derandomized");
    for (j, name) in summary.feature_names.iter().enumerate() {
        let (fo, fd) = (summary.freq_original[j], summary.freq_derandomized[j]);
        if fo > 0.0 || fd > 0.0 {
            println!("{name:<12} {fo:>9.2} {fd:>13.2}");
        }
    }
    println!("\nfrequencies strictly between 0 and 1 are rerun-dependent calls;");
    println!("derandomization pushes them toward 0 or 1");

    let freq_path = dir.join("frequencies.csv");
    let runs_path = dir.join("runs.json");
    write_frequencies_csv(&summary, &freq_path).unwrap();
    write_runs_json(&summary, &runs_path).unwrap();
    println!("\nwrote {} and {}", freq_path.display(), runs_path.display());
}

/// Mutation-panel-shaped data: binary features (a few too rare to keep),
/// one missing-prone column, and a response driven by eight mutations.
fn synthesize_csv(path: &std::path::Path, n: usize, p: usize) {
    let mut stream = RngStream::new(505, 0);
    let mut file = std::fs::File::create(path).unwrap();
    let header: Vec<String> = (0..p).map(|j| format!("mut{j}")).collect();
    writeln!(file, "{},resistance", header.join(",")).unwrap();
    for i in 0..n {
        let muts: Vec<f64> = (0..p)
            .map(|j| {
                // Columns 21.. are rare (about 1 carrier in the panel).
                let rate = if j >= 21 { 0.005 } else { 0.15 + 0.01 * j as f64 };
                if stream.uniform() < rate {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let signal: f64 = [0, 3, 7, 10, 12, 15, 17, 19]
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                // The last two effects are deliberately marginal so the
                // rerun frequencies have something to disagree about.
                let amp = if k == 7 { 0.35 } else if k == 6 { 0.5 } else { 2.2 };
                sign * amp * muts[j]
            })
            .sum();
        let response = signal + stream.std_normal();
        let cells: Vec<String> = muts
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if j == 5 && i % 40 == 0 {
                    "NA".to_string()
                } else {
                    format!("{v}")
                }
            })
            .collect();
        writeln!(file, "{},{response:.5}", cells.join(",")).unwrap();
    }
}

//! Singular-value spectra of layer updates and the ranks chosen at several
//! energy thresholds, printed as CSV.
//!
//! ```text
//! cargo run --example spectrum
//! ```

mod common;

use monosoup::diagnostics::{render_report, spectrum_report, ReportFormat};

fn main() -> monosoup::Result<()> {
    let layout = common::layout(2, 12);
    let pre = common::random_model(1, &layout);
    let ft = common::fine_tune(&pre, 5, 6, 0.001);
    let report = spectrum_report(&pre, &ft, &[0.5, 0.8, 0.9, 0.95])?;
    for (name, layer) in &report.per_layer {
        let head: Vec<String> = layer.singulars.iter().take(4).map(|s| format!("{s:.4}")).collect();
        println!("{name:<26} effective rank {:>2}  leading {}", layer.k_effective.unwrap_or(0), head.join(" "));
    }
    println!();
    print!("{}", String::from_utf8_lossy(&render_report(&report, ReportFormat::Csv)?));
    Ok(())
}

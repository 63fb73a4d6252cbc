//! How the edit's mixing coefficients vary with depth.
//!
//! ```text
//! cargo run --example lambdas
//! ```

mod common;

use monosoup::diagnostics::{lambda_distribution, render_report, Grouping, ReportFormat};
use monosoup::edit::{edit_checkpoint, RankRule};

fn main() -> monosoup::Result<()> {
    let layout = common::layout(4, 8);
    let pre = common::random_model(1, &layout);
    let ft = common::fine_tune(&pre, 5, 6, 0.002);
    let (_, report) = edit_checkpoint(&pre, &ft, RankRule::EffectiveRank)?;

    for grouping in [Grouping::LayerIndex, Grouping::NamePrefix] {
        let table = lambda_distribution(&report, grouping);
        println!("grouping {grouping:?}");
        for g in &table.groups {
            println!(
                "  {:<14} {:>2} layers  lambda_high {:.3}  lambda_low {:.3}  gap {:+.3}",
                g.group, g.layers, g.lambda_high.mean, g.lambda_low.mean, g.gap.mean
            );
        }
    }
    let table = lambda_distribution(&report, Grouping::LayerIndex);
    print!("\n{}", String::from_utf8_lossy(&render_report(&table, ReportFormat::Csv)?));
    Ok(())
}

//! Replicated rate experiment through the harness, with a log-log fit of the
//! expansion gap against the minimax rate.
//!
//! `cargo run --release --example rate_experiment`

use firstorder::harness::{fit_records, run_experiment, ExperimentConfig};

fn main() -> firstorder::error::Result<()> {
    let out = std::env::temp_dir().join("firstorder_rate_experiment");
    let cfg = ExperimentConfig::parse(&format!(
        "experiment = rates\n\
         grid = 200,400,5; 400,800,5; 800,1600,5; 1600,3200,5\n\
         replications = 8\n\
         master_seed = 17\n\
         output_dir = {}\n",
        out.display()
    ))?;
    let result = run_experiment(&cfg)?;
    println!("{} replications, {} non-converged", result.records.len(), result.failures);
    for metric in ["diff_sigma", "err_beta_k"] {
        let fit = fit_records(&result.records, metric)?;
        println!("median {metric} ~ r_n^{:.3} (stderr {:.3})", fit.slope, fit.stderr);
    }
    println!("records, summary and plot series written to {}", out.display());
    Ok(())
}

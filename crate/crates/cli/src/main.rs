use std::process::ExitCode;

use clap::Parser;

use mondrian_cli::{run_experiment, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match run_experiment(&args) {
        Ok(runs) => {
            for run in runs {
                println!(
                    "{}: {} points, final f1 {:.4}, {} / {} nodes",
                    run.out.display(),
                    run.points,
                    run.final_f1,
                    run.nodes_used,
                    run.node_capacity
                );
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

use clap::Parser;

use charges_cli::{run, Cli, ExperimentConfig};

fn main() {
    let cli = Cli::parse();
    let result = ExperimentConfig::from_cli(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(Some(summary)) => eprintln!("{summary}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

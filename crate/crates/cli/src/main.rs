use clap::Parser;

use geobook_cli::{Cli, Format};

fn main() {
    let cli = Cli::parse();
    let format = cli.format;
    match geobook_cli::commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            match format {
                Format::Text => eprintln!("error: {e:#}"),
                Format::Json => eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") })),
            }
            std::process::exit(2);
        }
    }
}

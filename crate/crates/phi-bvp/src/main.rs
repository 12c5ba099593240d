use clap::Parser;
use phi_bvp::cli::{run, Cli};

fn main() {
    let mut builder = env_logger::Builder::new();
    if let Ok(filter) = std::env::var("PHI_BVP_LOG") {
        builder.parse_filters(&filter);
    } else {
        builder.filter_level(log::LevelFilter::Warn);
    }
    builder.target(env_logger::Target::Stderr).init();

    let cli = Cli::parse();
    std::process::exit(run(cli));
}

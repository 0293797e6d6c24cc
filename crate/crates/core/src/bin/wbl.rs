use clap::Parser;

fn main() {
    if let Some(n) = std::env::var("WBL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    std::process::exit(wbl::cli::run(wbl::cli::Cli::parse()));
}

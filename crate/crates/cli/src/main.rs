use clap::Parser;
use qcslab::{Args, RunConfig};

fn main() {
    let args = Args::parse();
    let code = match RunConfig::from_args(&args) {
        Ok(cfg) => qcslab::run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn main() { std::process::exit(eknock::cli::run()); }

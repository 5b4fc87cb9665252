fn main() { std::process::exit(gamecap::cli::main()) }

fn main() { singeq::cli::main(); }

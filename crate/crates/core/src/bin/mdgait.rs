fn main() {
    std::process::exit(mdgait::cli::main_exit());
}

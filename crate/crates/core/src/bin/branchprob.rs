fn main() {
    std::process::exit(branchprob::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(mission_profile::cli::main_entry());
}

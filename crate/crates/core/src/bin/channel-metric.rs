fn main() {
    std::process::exit(channel_metric::cli::main());
}

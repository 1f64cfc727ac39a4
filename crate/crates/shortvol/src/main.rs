use shortvol::cli;

fn main() {
    std::process::exit(cli::run());
}

use std::process::exit;

fn main() {
    vpp_cli::init_logging();
    exit(vpp_cli::run(std::env::args_os()));
}

use std::io;

fn main() {
    let code = adaptest::cli::parse_and_dispatch(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}

use std::process::ExitCode;

fn main() -> ExitCode {
    let code = std::panic::catch_unwind(|| hesseflat::cli::run_from_args(std::env::args_os()))
        .unwrap_or(hesseflat::EXIT_FAILURE);
    ExitCode::from(code as u8)
}

use std::path::PathBuf;
use std::process::ExitCode;

use ramsey_eraser::cli::{execute, OUT_DIR_ENV};

fn main() -> ExitCode {
    let out_dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
    let status = execute(
        std::env::args_os(),
        out_dir.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(status as u8)
}

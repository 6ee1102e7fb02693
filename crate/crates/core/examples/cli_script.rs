//! Run a command script from a file, as the `lftj-ivm script` command does.

use std::path::PathBuf;

use lftj_ivm::cli::Workspace;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/unary");
    let mut ws = Workspace::with_base(&dir);
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    if let Err(e) = ws.run_file_to(&dir.join("session.cmds"), &mut out, &mut err) {
        eprintln!("error: {e}");
        std::process::exit(lftj_ivm::cli::exit_code(&e));
    }
}

//! Golden-file comparison for command-line output. Set `XFO_BLESS=1` to
//! rewrite the goldens from the current behavior.

use std::fs;
use std::path::{Path, PathBuf};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn bless() -> bool {
    std::env::var_os("XFO_BLESS").is_some_and(|v| v == "1")
}

/// Runs the command line in-process and renders a transcript.
pub fn transcript(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let full: Vec<&str> = std::iter::once("xfo").chain(args.iter().copied()).collect();
    let code = xfo::cli::run(full, &mut out, &mut err);
    let text = format!(
        "$ xfo {}\nexit: {code}\n--- stdout\n{}--- stderr\n{}",
        args.join(" "),
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap()
    );
    (code, text)
}

/// Compares `actual` with the golden file `name`, or writes it when blessing.
pub fn check(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if bless() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| {
        format!(
            "missing golden {}: {e} (run with XFO_BLESS=1)",
            path.display()
        )
    })?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map(|i| i + 1)
            .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()) + 1);
        Err(format!("{name} differs from golden at line {line}"))
    }
}

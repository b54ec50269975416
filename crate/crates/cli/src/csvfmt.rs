//! Deterministic CSV assembly.
//!
//! Every file starts with a comment line recording the semantic invocation
//! (the parameters that determine the results; execution details like
//! --workers, --cache-dir and --out are excluded so reruns are
//! byte-identical) followed by a fixed header row. Floats carry 17
//! significant digits.

use std::io::Write;
use std::path::PathBuf;

use crate::CliError;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    /// `invocation` is the semantic command line, e.g. "evector --x 10 --q 3".
    pub fn new(invocation: &str, header: &str) -> Csv {
        Csv {
            lines: vec![
                format!("# sqlab {invocation} | version {}", env!("CARGO_PKG_VERSION")),
                header.to_string(),
            ],
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn into_string(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Write to the requested file, or stdout when no path was given.
pub fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write stdout: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(-3.0), "-3.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new("density --l 4 --r 1", "l,r");
        csv.row(&["4".into(), "1".into()]);
        let text = csv.into_string();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# sqlab density --l 4 --r 1 | version "));
        assert_eq!(lines[1], "l,r");
        assert_eq!(lines[2], "4,1");
        assert!(text.ends_with('\n'));
    }
}

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Seventeen significant digits: enough to round-trip every `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `# schema: <tag>`, a header and the rows, LF-terminated.
pub fn write_csv<I, R>(path: &Path, schema: &str, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let io = |e: std::io::Error| CliError::io(path, e);
    let csv_err = |e: csv::Error| CliError::io(path, e.into());
    let mut buf = format!("# schema: {schema}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    fs::write(path, buf).map_err(io)
}

/// Numeric CSV written by [`write_csv`]: checks the schema tag and header, returns the rows.
pub fn read_csv(path: &Path, schema: &str, header: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    if first.trim_end() != format!("# schema: {schema}") {
        return Err(CliError::Config(format!("{}: expected schema {schema}", path.display())));
    }
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let got: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(bad(format!("header {got:?}, expected {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            rec.iter().map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s}: {e}")))).collect()
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// A JSON document with a fixed schema tag.
pub trait Document: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;
    fn schema(&self) -> &str;

    fn from_json(text: &str) -> CliResult<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if doc.schema() != Self::SCHEMA {
            return Err(CliError::Config(format!("expected schema {}, found {}", Self::SCHEMA, doc.schema())));
        }
        Ok(doc)
    }

    fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&read_text(path)?).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_roundtrip_through_text() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 6.02214076e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_roundtrip_checks_schema_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, "t/1", &["a", "b"], [[num(0.1), num(2.0)], [num(-3.0), num(1e-9)]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("# schema: t/1\na,b\n") && !text.contains('\r'));
        assert_eq!(read_csv(&p, "t/1", &["a", "b"]).unwrap(), vec![vec![0.1, 2.0], vec![-3.0, 1e-9]]);
        assert!(read_csv(&p, "t/2", &["a", "b"]).is_err());
        assert!(read_csv(&p, "t/1", &["a", "c"]).is_err());
    }
}

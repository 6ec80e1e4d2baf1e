//! CSV and JSON persistence. Every write goes through a temp file in the
//! target directory and is renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Reads a numeric CSV whose header must equal `header` exactly. Errors carry
/// 1-based file line numbers (the header is line 1).
pub fn read_csv_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let got = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(parse_err(
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                got.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("column `{}`: `{f}` is not a finite number", header[k])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `bytes` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_csv_rows<R: AsRef<[f64]>>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r.as_ref().iter().map(|v| format!("{v:e}")))
            .map_err(io_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Files written during one run. Dropping the set without [`Outputs::commit`]
/// leaves the files; [`Outputs::rollback`] deletes them.
pub(crate) struct Outputs<'a> {
    dir: Option<&'a Path>,
    written: Vec<std::path::PathBuf>,
}

impl<'a> Outputs<'a> {
    /// `None` runs everything in memory and writes nothing.
    pub(crate) fn new(dir: Option<&'a Path>) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    pub(crate) fn put(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(d) = self.dir {
            let p = d.join(name);
            self.written.push(p.clone());
            f(&p)?;
        }
        Ok(())
    }

    pub(crate) fn rollback(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }

    pub(crate) fn commit(self) -> Vec<std::path::PathBuf> {
        self.written
    }
}

/// Runs `f` against a fresh output set, deleting its files if `f` fails.
pub(crate) fn staged<T>(
    dir: Option<&Path>,
    f: impl FnOnce(&mut Outputs<'_>) -> Result<T>,
) -> Result<(T, Vec<std::path::PathBuf>)> {
    let mut out = Outputs::new(dir);
    match f(&mut out) {
        Ok(v) => Ok((v, out.commit())),
        Err(e) => {
            out.rollback();
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![[1.0, -2.5e-13], [std::f64::consts::PI, 1.0 / 3.0]];
        write_csv_rows(&p, &["x", "y"], &rows).unwrap();
        let back = read_csv_columns(&p, &["x", "y"]).unwrap();
        assert_eq!(back, rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    }

    #[test]
    fn errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        fs::write(&p, "x,y\n1,2\n3,abc\n").unwrap();
        match read_csv_columns(&p, &["x", "y"]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        fs::write(&p, "x,z\n1,2\n").unwrap();
        assert!(matches!(
            read_csv_columns(&p, &["x", "y"]),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_csv_columns(&dir.path().join("missing.csv"), &["x"]),
            Err(Error::Io { .. })
        ));
    }
}

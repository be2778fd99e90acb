//! CSV plumbing shared by the runner. Numbers use Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;

pub const SUMMARY_HEADER: &str = "task,map,epsilon,D,seed,window,uniform_err,Q_limsup,limit_err,K_emp,bound,pass";

/// One line of `summary.csv`. Missing values are written as empty fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryRow {
    pub task: String,
    pub map: String,
    pub epsilon: Option<f64>,
    pub d: Option<f64>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub uniform_err: Option<f64>,
    pub q_limsup: Option<f64>,
    pub limit_err: Option<f64>,
    pub k_emp: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SummaryRow {
    pub fn to_csv_line(&self) -> String {
        [
            self.task.clone(),
            self.map.clone(),
            opt(self.epsilon),
            opt(self.d),
            opt(self.seed),
            opt(self.window),
            opt(self.uniform_err),
            opt(self.q_limsup),
            opt(self.limit_err),
            opt(self.k_emp),
            opt(self.bound),
            if self.pass { "true" } else { "fail" }.to_string(),
        ]
        .join(",")
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("summary.csv");
        let mut w = create(&path)?;
        writeln!(w, "{SUMMARY_HEADER}")?;
        writeln!(w, "{}", self.to_csv_line())?;
        w.flush()?;
        Ok(path)
    }
}

/// Buffered writer for a new file.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Creates `dir/name`, runs `body` on it and flushes.
pub fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let path = dir.join(name);
    let mut w = create(&path)?;
    body(&mut w)?;
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_line_format() {
        let row = SummaryRow {
            task: "shadow".into(),
            map: "doubling".into(),
            epsilon: Some(0.01),
            d: Some(1.0),
            seed: Some(42),
            window: Some(100000),
            q_limsup: Some(0.1 + 0.2),
            pass: true,
            ..SummaryRow::default()
        };
        assert_eq!(
            row.to_csv_line(),
            "shadow,doubling,0.01,1,42,100000,,0.30000000000000004,,,,true"
        );
        assert_eq!(SUMMARY_HEADER.split(',').count(), row.to_csv_line().split(',').count());
    }
}

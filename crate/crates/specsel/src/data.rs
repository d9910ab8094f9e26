//! Delimited text input and output.
//!
//! The header holds one numeric variable identifier per column (e.g. a
//! wavelength) plus a named label column. An empty label cell is an error.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use specsel_core::Dataset;

use crate::error::{CliError, Result};

pub fn load_csv(path: &Path, label_col: &str) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    read_csv(file, label_col).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, label_col: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| CliError::Data(format!("bad header: {e}")))?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_col)
        .ok_or_else(|| CliError::Data(format!("label column '{label_col}' not found in header")))?;
    let mut var_cols = Vec::new();
    let mut var_ids = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == label_idx {
            continue;
        }
        let id: f64 = name
            .parse()
            .map_err(|_| CliError::Data(format!("column {} header '{name}' is not a numeric variable id", j + 1)))?;
        var_cols.push(j);
        var_ids.push(id);
    }
    if var_ids.is_empty() {
        return Err(CliError::Data("no variable columns".into()));
    }
    let mut values = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // line numbers count the header as line 1
        let line = r + 2;
        let record = record.map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        let label = record.get(label_idx).unwrap_or("");
        if label.is_empty() {
            return Err(CliError::Data(format!("line {line}: missing label in column '{label_col}'")));
        }
        labels.push(label.to_string());
        for &j in &var_cols {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell
                .parse()
                .map_err(|_| CliError::Data(format!("line {line}, column '{}': cannot parse '{cell}'", &header[j])))?;
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Ok(Dataset::with_string_labels(values, var_ids, &labels)?)
}

/// Writes `d` with the label column last.
pub fn write_csv<W: Write>(d: &Dataset, label_col: &str, writer: W) -> Result<()> {
    let labels = d.labels().ok_or_else(|| CliError::Data("dataset has no labels".into()))?;
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| CliError::Config(format!("csv output: {e}"));
    let mut header: Vec<String> = d.var_ids().iter().map(|v| v.to_string()).collect();
    header.push(label_col.to_string());
    w.write_record(&header).map_err(io)?;
    for (i, &l) in labels.iter().enumerate() {
        let mut row: Vec<String> = d.row(i).iter().map(|v| v.to_string()).collect();
        row.push(d.class_names()[l].clone());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Config(format!("csv output: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "400,402.5,type\n1.5,2,beef\n-3,4e-2,lamb\n";
        let d = read_csv(text.as_bytes(), "type").unwrap();
        assert_eq!(d.var_ids(), &[400.0, 402.5]);
        assert_eq!(d.class_names(), &["beef", "lamb"]);
        let mut out = Vec::new();
        write_csv(&d, "type", &mut out).unwrap();
        assert_eq!(read_csv(out.as_slice(), "type").unwrap(), d);
    }

    #[test]
    fn label_column_anywhere() {
        let d = read_csv("class,1,2\na,0,1\nb,2,3\n".as_bytes(), "class").unwrap();
        assert_eq!(d.row(1), &[2.0, 3.0]);
    }

    #[test]
    fn errors_name_the_location() {
        let err = read_csv("1,2,y\n0,1,a\n0,x,b\n".as_bytes(), "y").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("'2'"), "{err}");
        let err = read_csv("1,2,y\n0,1,\n".as_bytes(), "y").unwrap_err().to_string();
        assert!(err.contains("missing label"), "{err}");
        assert!(read_csv("1,2,y\n".as_bytes(), "label").is_err());
        assert!(read_csv("1,foo,y\n0,1,a\n".as_bytes(), "y").is_err());
        assert!(read_csv("1,2,y\n0,1,a,9\n".as_bytes(), "y").is_err());
        assert_eq!(read_csv("1,2,y\n0,nan,a\n".as_bytes(), "y").unwrap_err().exit_code(), 2);
    }
}

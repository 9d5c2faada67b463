//! Writing records to stdout or files, as JSON or flattened `field,value` CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use tentlab::experiment::ReportFormat;

/// Leaves of a JSON value keyed by dotted paths, objects in key order.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn walk(v: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(v, &key(k), out)),
            Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| walk(v, &key(&i.to_string()), out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            Value::Null => out.push((prefix.to_string(), String::new())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(value, "", &mut out);
    out
}

fn write_record<W: Write>(value: &Value, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, value)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["field", "value"])?;
            for (k, v) in flatten(value) {
                w.write_record([k, v])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes `record` to `path`, or to stdout when there is no path.
pub fn emit<T: Serialize>(record: &T, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    let value = serde_json::to_value(record)?;
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write_record(&value, format, &mut w)?;
            w.flush()?;
        }
        None => write_record(&value, format, io::stdout().lock())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_uses_dotted_paths() {
        let v = json!({"a": 1.5, "b": {"c": [true, "x"]}, "d": null});
        let got = flatten(&v);
        let want = [("a", "1.5"), ("b.c.0", "true"), ("b.c.1", "x"), ("d", "")];
        assert_eq!(got.len(), want.len());
        for ((k, v), (wk, wv)) in got.iter().zip(want) {
            assert_eq!((k.as_str(), v.as_str()), (wk, wv));
        }
    }

    #[test]
    fn csv_record_has_header() {
        let mut buf = Vec::new();
        write_record(&json!({"norm": 2.0}), ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "field,value\nnorm,2.0\n");
    }
}

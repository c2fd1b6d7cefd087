use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Writes a header and numeric rows; values carry 17 significant digits.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Config(format!("row of {} values for {} columns", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() {
        return Err(Error::Config("missing csv header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_lossless(rows in prop::collection::vec(prop::array::uniform3(any::<f64>().prop_filter("finite", |v| v.is_finite())), 0..20)) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.to_vec()).collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &["x", "y", "value"], &rows).unwrap();
            let (h, back) = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(h, vec!["x", "y", "value"]);
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in rows.iter().zip(&back) {
                for (p, q) in a.iter().zip(b) {
                    prop_assert_eq!(p.to_bits(), q.to_bits());
                }
            }
        }
    }

    #[test]
    fn nan_and_ragged_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["h", "order"], &[vec![0.1, f64::NAN]]).unwrap();
        let (_, rows) = read_csv(buf.as_slice()).unwrap();
        assert!(rows[0][1].is_nan());
        assert!(write_csv(Vec::new(), &["a"], &[vec![1.0, 2.0]]).is_err());
        assert!(read_csv("a,b\n1,2,3\n".as_bytes()).is_err());
        assert!(read_csv("a\nfoo\n".as_bytes()).is_err());
        assert!(read_csv("".as_bytes()).is_err());
    }
}

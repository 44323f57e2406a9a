//! Numeric CSV tables: a header row, an x column first, then named series.

use super::svg::BandSeries;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub x_label: String,
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SeriesError {
    #[error("empty table")]
    Empty,
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

/// Parses a numeric table. Empty cells and `NaN` read as NaN.
pub fn parse_series_csv(text: &str) -> Result<Series, SeriesError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| SeriesError::Row {
            row: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(SeriesError::Empty);
    }
    let mut x = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| SeriesError::Row {
            row,
            reason: e.to_string(),
        })?;
        if rec.len() != headers.len() {
            return Err(SeriesError::Row {
                row,
                reason: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = if cell.trim().is_empty() {
                f64::NAN
            } else {
                cell.trim().parse::<f64>().map_err(|_| SeriesError::Row {
                    row,
                    reason: format!("`{cell}` is not a number"),
                })?
            };
            if j == 0 {
                x.push(v);
            } else {
                cols[j - 1].push(v);
            }
        }
    }
    Ok(Series {
        x_label: headers[0].to_string(),
        x,
        columns: headers.iter().skip(1).map(str::to_string).zip(cols).collect(),
    })
}

impl Series {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// `<name>_mean` columns, each paired with `<name>_std` when present.
    pub fn bands(&self) -> Vec<BandSeries> {
        self.columns
            .iter()
            .filter_map(|(n, v)| {
                let base = n.strip_suffix("_mean")?;
                Some(BandSeries {
                    name: base.to_string(),
                    mean: v.clone(),
                    std: self.column(&format!("{base}_std")).map(<[f64]>::to_vec),
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.x_label.clone();
        for (n, _) in &self.columns {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, x) in self.x.iter().enumerate() {
            out.push_str(&fmt_num(*x));
            for (_, v) in &self.columns {
                out.push(',');
                out.push_str(&fmt_num(v[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed six-decimal formatting; NaN becomes an empty cell.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        let s = format!("{v:.6}");
        if s == "-0.000000" {
            "0.000000".into()
        } else {
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = Series {
            x_label: "step".into(),
            x: vec![1.0, 2.0],
            columns: vec![
                ("r_mean".into(), vec![0.5, f64::NAN]),
                ("r_std".into(), vec![0.25, 0.0]),
            ],
        };
        let back = parse_series_csv(&s.to_csv()).unwrap();
        assert_eq!(back.x, s.x);
        assert_eq!(back.column("r_std").unwrap(), &[0.25, 0.0]);
        assert!(back.column("r_mean").unwrap()[1].is_nan());
        let bands = back.bands();
        assert_eq!(bands.len(), 1);
        assert_eq!(bands[0].name, "r");
        assert_eq!(bands[0].std.as_deref(), Some(&[0.25, 0.0][..]));
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(matches!(parse_series_csv("a,b\n1,x\n"), Err(SeriesError::Row { row: 2, .. })));
        assert!(parse_series_csv("a,b\n1\n").is_err());
        assert_eq!(parse_series_csv(""), Err(SeriesError::Empty));
    }

    #[test]
    fn header_only_is_empty_series() {
        let s = parse_series_csv("step,v_mean\n").unwrap();
        assert!(s.x.is_empty());
        assert_eq!(s.columns.len(), 1);
    }
}

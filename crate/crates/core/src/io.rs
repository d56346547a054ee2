//! Output formatting and small argument parsers shared by the CLI.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Vec4;

/// Largest number of points a `lo:hi:step` grid may expand to.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Shortest decimal string that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    ryu::Buffer::new().format(x).to_string()
}

/// CSV table with a mandatory header; `,` separated, `\n` terminated.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; short rows are padded with empty fields.
    pub fn push(&mut self, mut fields: Vec<String>) {
        debug_assert!(fields.len() <= self.header.len());
        fields.resize(self.header.len(), String::new());
        self.rows.push(fields);
    }

    pub fn push_floats(&mut self, values: &[f64]) {
        self.push(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row).expect("writing to memory");
        }
        let bytes = w.into_inner().expect("flushing to memory");
        String::from_utf8(bytes).expect("fields are valid UTF-8")
    }
}

fn parse_number(field: &str, what: &str) -> Result<f64> {
    let v = f64::from_str(field.trim())
        .map_err(|_| Error::Invalid(format!("{what}: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Invalid(format!("{what}: '{field}' is not finite")));
    }
    Ok(v)
}

/// Expands `lo:hi:step` into `lo, lo+step, …`, ending at `hi` when `hi` is
/// on the lattice (to within `1e-9·step`). A bare number is a one-point grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let (lo, hi, step) = match parts.as_slice() {
        [v] => {
            let v = parse_number(v, "grid")?;
            return Ok(vec![v]);
        }
        [lo, hi, step] => (
            parse_number(lo, "grid lower bound")?,
            parse_number(hi, "grid upper bound")?,
            parse_number(step, "grid step")?,
        ),
        _ => return Err(Error::Invalid(format!("grid '{s}' is not of the form lo:hi:step"))),
    };
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("grid '{s}': step must be positive")));
    }
    if hi < lo {
        return Err(Error::Invalid(format!("grid '{s}' is descending")));
    }
    let span = (hi - lo) / step;
    if span >= MAX_GRID_POINTS as f64 {
        return Err(Error::Invalid(format!("grid '{s}' has too many points")));
    }
    let n = (span + 1e-9).floor() as usize;
    let slack = 1e-9 * step;
    // steps of the form 1/m on a lattice through lo are generated as k/m,
    // which keeps points like 0.41 free of accumulated rounding
    let m = (1.0 / step).round();
    let k0 = (lo * m).round();
    let lattice = m >= 1.0 && (m * step - 1.0).abs() <= 1e-12 && (lo * m - k0).abs() <= 1e-9;
    Ok((0..=n)
        .map(|i| {
            let v = if lattice { (k0 + i as f64) / m } else { lo + i as f64 * step };
            if (v - hi).abs() <= slack {
                hi
            } else {
                v.min(hi)
            }
        })
        .collect())
}

/// Parses four comma-separated reals.
pub fn parse_vec4(s: &str) -> Result<Vec4> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::Invalid(format!("expected four comma-separated values, got '{s}'")));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_number(p, "state")?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for &x in &[0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 5e-324, f64::MAX, -2.5e-17, 5.0 / 12.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        t.push_floats(&[1.0, 0.5, -3.0]);
        t.push(vec!["x".into()]);
        assert_eq!(t.render(), "a,b,c\n1.0,0.5,-3.0\nx,,\n");
        assert_eq!(CsvTable::new(&["only"]).render(), "only\n");
    }

    #[test]
    fn grid_expansion() {
        let g = parse_grid("0:1:0.01").unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[41], 0.41);
        assert_eq!(parse_grid("0:1:0.05").unwrap()[19], 0.95);
        assert_eq!(parse_grid("0.02:1:0.02").unwrap().len(), 50);
        assert_eq!(parse_grid("0:1:0.3").unwrap(), vec![0.0, 0.3, 0.6, 0.8999999999999999]);
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
    }

    #[test]
    fn malformed_grids() {
        for s in ["1:0:0.1", "0:1:0", "0:1:-0.1", "0:1", "a:1:0.1", "0:1:0.1:2", "", "0:inf:1", "0:1:1e-12"] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }

    #[test]
    fn vec4_parsing() {
        assert_eq!(parse_vec4("1,-2, 3.5,0").unwrap(), [1.0, -2.0, 3.5, 0.0]);
        assert!(parse_vec4("1,2,3").is_err());
        assert!(parse_vec4("1,2,3,x").is_err());
        assert!(parse_vec4("1,2,3,nan").is_err());
    }
}

//! Table rows, number formatting and CSV output.

use std::fmt;
use std::io::Write;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported for comparison only.
    Info,
    /// Raw figure data.
    Data,
    /// The computation itself failed.
    Error,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Error)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Data => "data",
            Status::Error => "error",
        })
    }
}

/// One output line of `barrier table`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub table: String,
    pub cell: String,
    pub quantity: String,
    pub computed: String,
    pub reference: String,
    pub tolerance: String,
    pub status: Status,
}

/// Formats `x` with `digits` significant digits, switching to scientific
/// notation for very small or very large magnitudes.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Six significant digits, used for prices.
pub fn price(x: f64) -> String {
    sig(x, 6)
}

/// Three significant digits, used for errors.
pub fn error(x: f64) -> String {
    sig(x, 3)
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit<T: Serialize>(path: Option<&std::path::Path>, rows: &[T]) -> std::io::Result<()> {
    let result = match path {
        Some(p) => write_csv(std::fs::File::create(p)?, rows),
        None => write_csv(std::io::stdout().lock(), rows),
    };
    result.map_err(std::io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(price(5.99684321), "5.99684");
        assert_eq!(price(1205.2106), "1205.21");
        assert_eq!(price(0.00264843), "0.00264843");
        assert_eq!(error(0.0019312), "0.00193");
        assert_eq!(error(8.0221e-5), "0.0000802");
        assert_eq!(error(1.2e-7), "1.20e-7");
        assert_eq!(price(0.0), "0");
        assert_eq!(price(-1.5), "-1.50000");
    }

    #[test]
    fn csv_has_header_and_fixed_columns() {
        let rows = vec![Row {
            table: "T6".into(),
            cell: "N=25/B=95".into(),
            quantity: "price".into(),
            computed: price(6.631),
            reference: "6.63176".into(),
            tolerance: "abs<=0.005".into(),
            status: Status::Pass,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("table,cell,quantity,computed,reference,tolerance,status")
        );
        assert_eq!(lines.next(), Some("T6,N=25/B=95,price,6.63100,6.63176,abs<=0.005,pass"));
    }
}

//! Human-readable tables. Values are rounded for display only; JSON artifacts
//! keep full precision.

use std::fmt::Write as _;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Md,
}

/// `x` with `decimals` fraction digits, rounded half away from zero on its
/// shortest decimal representation, so `1.005` becomes `1.01`.
pub fn fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = x.abs().to_string();
    let (int, frac) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int
        .bytes()
        .chain(frac.bytes().chain(std::iter::repeat(b'0')).take(decimals))
        .map(|b| b - b'0')
        .collect();
    if frac.as_bytes().get(decimals).is_some_and(|&b| b >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::new();
    if x < 0.0 && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    out.extend(digits[..split].iter().map(|d| char::from(b'0' + d)));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[split..].iter().map(|d| char::from(b'0' + d)));
    }
    out
}

/// Flows, sums of squares and coefficients.
pub fn money(x: f64) -> String {
    fixed(x, 2)
}

/// Probabilities in `1.2345E-6` form.
pub fn sci(p: f64) -> String {
    if p == 0.0 {
        "0".into()
    } else {
        format!("{p:.4E}")
    }
}

pub fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

/// A titled table of display strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table {
            title: title.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, "### {}\n", self.title);
        }
        let _ = writeln!(s, "| {} |", self.headers.join(" | "));
        let rule: Vec<&str> = self.headers.iter().map(|_| "---").collect();
        let _ = writeln!(s, "|{}|", rule.join("|"));
        for row in &self.rows {
            let _ = writeln!(s, "| {} |", row.join(" | "));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(&self.headers);
        for row in &self.rows {
            let _ = w.write_record(row);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }

    /// Markdown or CSV rendering; JSON output is produced from the typed
    /// values instead.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            _ => self.to_markdown(),
        }
    }
}

/// Tables separated by a blank line.
pub fn render_all(tables: &[Table], format: Format) -> String {
    tables
        .iter()
        .map(|t| t.render(format))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_half_up_on_decimal_digits() {
        assert_eq!(fixed(2999.57, 2), "2999.57");
        assert_eq!(fixed(522.69 + 2476.88, 2), "2999.57");
        assert_eq!(fixed(1.005, 2), "1.01");
        assert_eq!(fixed(2.675, 2), "2.68");
        assert_eq!(fixed(0.125, 2), "0.13");
        assert_eq!(fixed(9.995, 2), "10.00");
        assert_eq!(fixed(99.999, 2), "100.00");
        assert_eq!(fixed(862.67, 2), "862.67");
        assert_eq!(fixed(616.0, 2), "616.00");
        assert_eq!(fixed(-1.005, 2), "-1.01");
        assert_eq!(fixed(-0.001, 2), "0.00");
        assert_eq!(fixed(0.987730335, 6), "0.987730");
        assert_eq!(fixed(1234.5, 0), "1235");
        assert_eq!(fixed(f64::INFINITY, 2), "inf");
    }

    #[test]
    fn scientific_p_values() {
        assert_eq!(sci(5.5236e-112), "5.5236E-112");
        assert_eq!(sci(0.0), "0");
    }

    #[test]
    fn markdown_and_csv_carry_the_same_cells() {
        let mut t = Table::new("Totals", &["date", "total"]);
        t.push(vec!["2014-07-07".into(), money(12930.77)]);
        assert_eq!(
            t.to_markdown(),
            "### Totals\n\n| date | total |\n|---|---|\n| 2014-07-07 | 12930.77 |\n"
        );
        assert_eq!(t.to_csv(), "date,total\n2014-07-07,12930.77\n");
    }
}

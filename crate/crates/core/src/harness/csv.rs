//! Minimal CSV emitter: header with units, `{:e}` numbers (shortest
//! round-trip form, locale-independent).

use std::fmt::Write as _;

/// Column-oriented CSV text builder.
pub struct CsvTable {
    text: String,
    columns: usize,
    rows: usize,
}

impl CsvTable {
    /// `columns` are `(name, unit)` pairs rendered as `name [unit]`.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        let header: Vec<String> = columns
            .iter()
            .map(|(n, u)| if u.is_empty() { n.to_string() } else { format!("{n} [{u}]") })
            .collect();
        Self {
            text: header.join(",") + "\n",
            columns: columns.len(),
            rows: 0,
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v:e}");
        }
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        let mut t = CsvTable::new(&[("t", "s"), ("x", "um")]);
        let vals = [0.1 + 0.2, -1.0 / 3.0];
        t.row(&vals);
        let text = t.into_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t [s],x [um]"));
        let parsed: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, vals);
    }
}

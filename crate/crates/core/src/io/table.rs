//! Column tables shared by the CSV and SVG emitters.

use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            // adding 0.0 turns -0 into 0
            Cell::Number(v) => format!("{}", v + 0.0),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Number(v as f64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Number)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column; non-numeric cells become `None`.
    pub fn column(&self, index: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[index].number()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::render))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_quotes_text() {
        let mut t = Table::new(["move", "mf"]);
        t.push(vec!["substitute 3 F7, again".into(), 0.25.into()]);
        t.push(vec!["restart".into(), Cell::Empty]);
        assert_eq!(
            t.to_csv(),
            "move,mf\n\"substitute 3 F7, again\",0.25\nrestart,\n"
        );
        assert_eq!(t.column(1), vec![Some(0.25), None]);
    }

    #[test]
    fn numbers_use_shortest_round_trip_form() {
        let mut t = Table::new(["x"]);
        t.push(vec![0.1.into()]);
        t.push(vec![1e-20.into()]);
        let csv = t.to_csv();
        let parsed: Vec<f64> = csv.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(parsed, vec![0.1, 1e-20]);
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        let mut t = Table::new(["x"]);
        t.push(vec![(-0.0).into()]);
        t.push(vec![(-2.5).into()]);
        assert_eq!(t.to_csv(), "x\n0\n-2.5\n");
    }
}

//! Tabular output shared by every subcommand: CSV (default) or a single
//! JSON object `{meta, rows}`. Floats are printed with 17 significant
//! digits in CSV so files diff meaningfully between runs; JSON uses exact
//! round-trip numbers. Non-finite values become the markers `inf`,
//! `-inf`, `NaN`.

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone)]
pub enum Cell {
    U64(u64),
    F64(f64),
    Str(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U64(v) => v.to_string(),
            Cell::F64(v) => fmt_f64(*v),
            Cell::Str(v) => v.clone(),
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::U64(v) => Value::from(*v),
            Cell::F64(v) => match Number::from_f64(*v) {
                Some(num) => Value::Number(num),
                None => Value::String(fmt_f64(*v)),
            },
            Cell::Str(v) => Value::String(v.clone()),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Empty => Value::Null,
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: &'static str, columns: Vec<S>) -> Self {
        Table {
            name,
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }
}

/// Each table is a header row plus data rows; multiple tables are
/// separated by one blank line.
pub fn render_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
    out
}

/// Single object `{meta, rows}`; when a command emits more than one table
/// each row carries a `table` field naming its source.
pub fn render_json(meta: Value, tables: &[Table]) -> String {
    let tagged = tables.len() > 1;
    let mut rows = Vec::new();
    for table in tables {
        for row in &table.rows {
            let mut obj = Map::new();
            if tagged {
                obj.insert("table".to_string(), Value::String(table.name.to_string()));
            }
            for (column, cell) in table.columns.iter().zip(row) {
                obj.insert(column.clone(), cell.json());
            }
            rows.push(Value::Object(obj));
        }
    }
    let doc = Value::Object(Map::from_iter([
        ("meta".to_string(), meta),
        ("rows".to_string(), Value::Array(rows)),
    ]));
    let mut text = serde_json::to_string_pretty(&doc).expect("tables serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_float_markers() {
        let mut t = Table::new("demo", vec!["k", "P"]);
        t.push(vec![Cell::U64(1), Cell::F64(0.49)]);
        t.push(vec![Cell::U64(2), Cell::F64(f64::INFINITY)]);
        let text = render_csv(&[t]);
        assert_eq!(text, "k,P\n1,4.8999999999999999e-1\n2,inf\n");
    }

    #[test]
    fn blank_line_separates_tables() {
        let mut a = Table::new("a", vec!["x"]);
        a.push(vec![Cell::U64(1)]);
        let mut b = Table::new("b", vec!["y"]);
        b.push(vec![Cell::Bool(true)]);
        assert_eq!(render_csv(&[a, b]), "x\n1\n\ny\ntrue\n");
    }

    #[test]
    fn json_tags_rows_only_for_multiple_tables() {
        let mut a = Table::new("a", vec!["x"]);
        a.push(vec![Cell::F64(f64::NAN)]);
        let single: Value =
            serde_json::from_str(&render_json(Value::Null, &[a])).unwrap();
        assert_eq!(single["rows"][0]["x"], Value::String("NaN".to_string()));
        assert!(single["rows"][0].get("table").is_none());

        let mut a = Table::new("a", vec!["x"]);
        a.push(vec![Cell::U64(1)]);
        let mut b = Table::new("b", vec!["x"]);
        b.push(vec![Cell::Empty]);
        let double: Value =
            serde_json::from_str(&render_json(Value::Null, &[a, b])).unwrap();
        assert_eq!(double["rows"][0]["table"], "a");
        assert_eq!(double["rows"][1]["x"], Value::Null);
    }
}

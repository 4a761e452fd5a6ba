use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => {
                // shortest round-trip digits either way
                if *v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
                    format!("{v}")
                } else {
                    format!("{v:e}")
                }
            }
            Cell::Num(_) | Cell::Missing => String::new(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            // serde_json writes non-finite floats as null
            Cell::Num(v) => json!(v),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

/// Fixed-column result set.
#[derive(Debug, Clone)]
pub struct Table {
    pub command: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &'static [&'static str]) -> Self {
        Table { command, columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn row_object(&self, row: &[Cell]) -> Map<String, Value> {
        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect()
    }

    /// One flat object with `schema_version`; the table must hold one row.
    pub fn to_json_object(&self, extra: Map<String, Value>) -> String {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("command".into(), json!(self.command));
        obj.extend(extra);
        if let Some(row) = self.rows.first() {
            obj.extend(self.row_object(row));
        }
        format!("{}\n", Value::Object(obj))
    }

    pub fn to_json_document(&self, extra: Map<String, Value>) -> String {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("command".into(), json!(self.command));
        obj.extend(extra);
        obj.insert("columns".into(), json!(self.columns));
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Object(self.row_object(r))).collect();
        obj.insert("rows".into(), Value::Array(rows));
        format!("{}\n", Value::Object(obj))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_blank_missing() {
        let mut t = Table::new("demo", &["a", "b", "c"]);
        t.push(vec![Cell::Num(0.5), Cell::Missing, Cell::Num(f64::NAN)]);
        assert_eq!(t.to_csv(), "a,b,c\n0.5,,\n");
        let mut t = Table::new("demo", &["v"]);
        t.push(vec![Cell::Num(-1.9184653865522705e-13)]);
        assert_eq!(t.to_csv(), "v\n-1.9184653865522705e-13\n");
    }

    #[test]
    fn json_object_is_flat() {
        let mut t = Table::new("demo", &["a"]);
        t.push(vec![Cell::Num(2.0)]);
        let v: Value = serde_json::from_str(&t.to_json_object(Map::new())).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["a"], 2.0);
    }

    #[test]
    fn json_document_keeps_row_order() {
        let mut t = Table::new("demo", &["i"]);
        for i in 0..4 {
            t.push(vec![Cell::Int(i)]);
        }
        let v: Value = serde_json::from_str(&t.to_json_document(Map::new())).unwrap();
        let got: Vec<u64> = v["rows"].as_array().unwrap().iter().map(|r| r["i"].as_u64().unwrap()).collect();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }
}

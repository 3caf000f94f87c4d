//! Table rows and their CSV / JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{Cell, EngineContext, EngineRegistry};
use crate::error::Result;
use crate::game::GameSpec;

pub const TABLE_SCHEMA: &str = "ccg-table/1";
pub const CELL_SCHEMA: &str = "ccg-cell/1";

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 7] = ["d", "classical", "tqs_lb", "eacc_lb", "ml", "qbound_1ab", "gap"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub d: usize,
    pub classical: Option<Cell>,
    pub tqs_lb: Option<Cell>,
    pub eacc_lb: Option<Cell>,
    pub ml: Option<Cell>,
    pub qbound_1ab: Option<Cell>,
    /// `tqs_lb - eacc_lb`.
    pub gap: Option<f64>,
    /// Per-cell failures as `(task, message)`.
    pub errors: Vec<(String, String)>,
    /// Rows beyond the default budgets.
    pub heavy: bool,
}

impl ResultRow {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            classical: None,
            tqs_lb: None,
            eacc_lb: None,
            ml: None,
            qbound_1ab: None,
            gap: None,
            errors: vec![],
            heavy: false,
        }
    }

    pub fn recompute_gap(&mut self) {
        self.gap = match (&self.tqs_lb, &self.eacc_lb) {
            (Some(t), Some(e)) => Some(t.value - e.value),
            _ => None,
        };
    }

    fn slot(&mut self, task: &str) -> Option<&mut Option<Cell>> {
        match task {
            "classical" => Some(&mut self.classical),
            "tqs" => Some(&mut self.tqs_lb),
            "eacc" => Some(&mut self.eacc_lb),
            "ml" => Some(&mut self.ml),
            "qbound" => Some(&mut self.qbound_1ab),
            _ => None,
        }
    }

    /// Strips strategies so rows stay small.
    pub fn without_strategies(mut self) -> Self {
        for c in [&mut self.classical, &mut self.tqs_lb, &mut self.eacc_lb, &mut self.ml, &mut self.qbound_1ab]
            .into_iter()
            .flatten()
        {
            c.strategy = None;
        }
        self
    }
}

/// Table tasks, in column order.
pub const TABLE_TASKS: [&str; 5] = ["classical", "tqs", "eacc", "ml", "qbound"];

/// Computes one row; engine failures are recorded in the row.
pub fn compute_row(registry: &EngineRegistry, d: usize, tasks: &[&str], ctx: &EngineContext) -> Result<ResultRow> {
    let spec = GameSpec::new(d)?;
    let mut row = ResultRow::new(d);
    row.heavy = d > crate::engine::SEESAW_MAX_D;
    for task in tasks {
        match registry.run(task, &spec, ctx) {
            Ok(cell) => {
                if let Some(slot) = row.slot(task) {
                    *slot = Some(cell);
                }
            }
            Err(e) => {
                log::warn!("d = {d}, {task}: {e}");
                row.errors.push((task.to_string(), e.to_string()));
            }
        }
    }
    row.recompute_gap();
    Ok(row)
}

fn fmt_cell(c: &Option<Cell>) -> String {
    match c {
        Some(c) => format!("{:.6}", c.value),
        None => String::new(),
    }
}

/// Avoids printing `-0.000000` for gaps at round-off level.
fn fmt_gap(g: f64) -> String {
    let g = if g.abs() < 5e-7 { 0.0 } else { g };
    format!("{g:.6}")
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        let classical = match &r.classical {
            Some(c) => c.exact.clone().unwrap_or_else(|| format!("{:.6}", c.value)),
            None => String::new(),
        };
        w.write_record([
            r.d.to_string(),
            classical,
            fmt_cell(&r.tqs_lb),
            fmt_cell(&r.eacc_lb),
            fmt_cell(&r.ml),
            fmt_cell(&r.qbound_1ab),
            r.gap.map(fmt_gap).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::CoreError {
    crate::error::CoreError::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub schema: String,
    pub rows: Vec<ResultRow>,
}

impl TableDocument {
    pub fn new(rows: Vec<ResultRow>) -> Self {
        Self { schema: TABLE_SCHEMA.into(), rows }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDocument {
    pub schema: String,
    pub cell: Cell,
}

impl CellDocument {
    pub fn new(cell: Cell) -> Self {
        Self { schema: CELL_SCHEMA.into(), cell }
    }
}

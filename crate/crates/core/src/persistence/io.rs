use std::io::{BufRead, Write};

use super::{PersistenceDiagram, PersistenceError, PersistencePoint};

pub const DIAGRAM_CSV_HEADER: &str = "birth,death,dim,essential";

/// Writes `birth,death,dim,essential` rows. Floats use the shortest
/// representation that round-trips exactly.
pub fn write_diagram_csv<W: Write>(mut w: W, d: &PersistenceDiagram) -> std::io::Result<()> {
    writeln!(w, "{DIAGRAM_CSV_HEADER}")?;
    for p in &d.points {
        writeln!(w, "{:?},{:?},{},{}", p.birth, p.death, p.dimension, u8::from(p.essential))?;
    }
    Ok(())
}

pub fn read_diagram_csv<R: BufRead>(r: R) -> Result<PersistenceDiagram, PersistenceError> {
    let mut points = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let err = |message: String| PersistenceError::Csv { line: i + 1, message };
        if i == 0 {
            if line != DIAGRAM_CSV_HEADER {
                return Err(err(format!("expected header {DIAGRAM_CSV_HEADER:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [b, d, dim, ess] = fields.as_slice() else {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        let dimension = dim.trim().parse::<u8>().map_err(|_| err(format!("bad dimension {dim:?}")))?;
        let essential = match ess.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("bad essential flag {other:?}"))),
        };
        points.push(PersistencePoint::new(num(b)?, num(d)?, dimension, essential));
    }
    Ok(PersistenceDiagram::new(points))
}

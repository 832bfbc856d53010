use std::io::{BufRead, Write};

use super::{Component, GaussianMixtureWeight, WkpiError};
use crate::pimage::GridSpec;

/// Header line `m`, then one `x y sigma w` line per component.
pub fn write_weight_file<W: Write>(mut w: W, weight: &GaussianMixtureWeight) -> std::io::Result<()> {
    writeln!(w, "{}", weight.len())?;
    for c in weight.components() {
        writeln!(w, "{:?} {:?} {:?} {:?}", c.x, c.y, c.sigma, c.w)?;
    }
    Ok(())
}

pub fn read_weight_file<R: BufRead>(r: R) -> Result<GaussianMixtureWeight, WkpiError> {
    let mut lines = r
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let parse_err = |line: usize, message: String| WkpiError::Parse { line: line + 1, message };
    let (i, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
    let header = header?;
    let m: usize = header
        .trim()
        .parse()
        .map_err(|_| parse_err(i, format!("expected component count, found {header:?}")))?;
    let mut comps = Vec::with_capacity(m);
    for (i, line) in lines {
        let line = line?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(i, format!("bad number {t:?}"))))
            .collect::<Result<_, _>>()?;
        let [x, y, sigma, w] = vals[..] else {
            return Err(parse_err(i, format!("expected 4 values, found {}", vals.len())));
        };
        comps.push(Component::new(x, y, sigma, w));
    }
    if comps.len() != m {
        return Err(parse_err(0, format!("header says {m} components, found {}", comps.len())));
    }
    GaussianMixtureWeight::new(comps)
}

/// `omega` at every pixel centre, one row per pixel row, top row first.
pub fn sample_weight_on_grid(weight: &GaussianMixtureWeight, grid: &GridSpec) -> Vec<Vec<f64>> {
    (0..grid.y_resolution)
        .rev()
        .map(|iy| {
            (0..grid.x_resolution)
                .map(|ix| weight.eval(grid.center(iy * grid.x_resolution + ix)))
                .collect()
        })
        .collect()
}

pub fn write_heatmap_csv<W: Write>(mut w: W, rows: &[Vec<f64>]) -> std::io::Result<()> {
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Binary 16-bit PGM of `rows`, min-max scaled to `0..=65535`. Returns the
/// `(min, max)` used, for the sidecar scale file.
pub fn write_heatmap_pgm<W: Write>(mut w: W, rows: &[Vec<f64>]) -> std::io::Result<(f64, f64)> {
    let height = rows.len();
    let width = rows.first().map_or(0, |r| r.len());
    let (lo, hi) = rows
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if height * width == 0 { (0.0, 0.0) } else { (lo, hi) };
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for r in rows {
        for &v in r {
            let q = if hi > lo { ((v - lo) / (hi - lo) * 65535.0).round() as u16 } else { 0 };
            w.write_all(&q.to_be_bytes())?;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_file_round_trip() {
        let w = GaussianMixtureWeight::new(vec![
            Component::new(0.1, -2.5, 0.3333333333333333, 1.0),
            Component::new(1e-7, 4.0, 2.0, 0.0),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_weight_file(&mut buf, &w).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("2\n0.1 -2.5 "));
        assert_eq!(read_weight_file(&buf[..]).unwrap(), w);
    }

    #[test]
    fn weight_file_errors() {
        assert!(read_weight_file(&b""[..]).is_err());
        assert!(read_weight_file(&b"2\n0 0 1 1\n"[..]).is_err());
        assert!(read_weight_file(&b"1\n0 0 1\n"[..]).is_err());
        assert!(read_weight_file(&b"1\n0 0 x 1\n"[..]).is_err());
        assert!(read_weight_file(&b"1\n0 0 -1 1\n"[..]).is_err());
    }

    #[test]
    fn heatmap_peaks_at_centre() {
        let grid = GridSpec::from_bounds(0.0, 1.0, 0.0, 1.0, 10).unwrap();
        let w = GaussianMixtureWeight::single(0.31, 0.72, 0.2, 1.0).unwrap();
        let rows = sample_weight_on_grid(&w, &grid);
        assert_eq!((rows.len(), rows[0].len()), (10, 10));
        let mut buf = Vec::new();
        let (lo, hi) = write_heatmap_pgm(&mut buf, &rows).unwrap();
        assert!(lo < hi);
        let header = b"P5\n10 10\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        let px: Vec<u16> = buf[header.len()..]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        let argmax = px.iter().enumerate().max_by_key(|(_, &v)| v).unwrap().0;
        // top row first: centre (0.35, 0.75) is row 2 from the top, column 3
        assert_eq!((argmax / 10, argmax % 10), (2, 3));
        assert_eq!(px[argmax], 65535);
    }
}

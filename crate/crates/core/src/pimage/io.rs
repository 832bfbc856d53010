use std::io::{Read, Write};

use super::{GridSpec, ImageError};

pub const IMAGE_MAGIC: &[u8; 8] = b"WKPI-PI1";

/// One row per image, comma separated, shortest round-trip float format.
pub fn write_images_csv<W: Write>(mut w: W, images: &[&[f64]]) -> std::io::Result<()> {
    for img in images {
        let row: Vec<String> = img.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Binary container: magic, LE `u32` x/y resolution, four LE `f64` bounds
/// (`x_min, x_max, y_min, y_max`), then `N` LE `f64` per image.
pub fn write_images_binary<W: Write>(mut w: W, grid: &GridSpec, images: &[&[f64]]) -> Result<(), ImageError> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| ImageError::Format(format!("resolution {v} exceeds u32")));
    w.write_all(IMAGE_MAGIC)?;
    w.write_all(&to_u32(grid.x_resolution)?.to_le_bytes())?;
    w.write_all(&to_u32(grid.y_resolution)?.to_le_bytes())?;
    for b in [grid.x_min, grid.x_max, grid.y_min, grid.y_max] {
        w.write_all(&b.to_le_bytes())?;
    }
    for img in images {
        if img.len() != grid.len() {
            return Err(ImageError::Format(format!(
                "image has {} pixels, grid has {}",
                img.len(),
                grid.len()
            )));
        }
        for v in img.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_images_binary<R: Read>(mut r: R) -> Result<(GridSpec, Vec<Vec<f64>>), ImageError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let header = IMAGE_MAGIC.len() + 8 + 32;
    if buf.len() < header || &buf[..8] != IMAGE_MAGIC {
        return Err(ImageError::Format("missing WKPI-PI1 header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let (xr, yr) = (u32_at(8), u32_at(12));
    let grid = GridSpec::from_parts(f64_at(16), f64_at(24), f64_at(32), f64_at(40), xr, yr)?;
    let body = &buf[header..];
    let stride = grid.len() * 8;
    if body.len() % stride != 0 {
        return Err(ImageError::Format(format!(
            "body of {} bytes is not a whole number of {}-pixel images",
            body.len(),
            grid.len()
        )));
    }
    let images = body
        .chunks_exact(stride)
        .map(|c| {
            c.chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok((grid, images))
}

//! Image and report files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::EstimatorReport;

pub const CSV_HEADER: &str = "technique,spp,mse,seconds,newton_p50,newton_max,reject_ratio";

/// Binary PPM (P6), 8 bits per channel, gamma 2.2, values clamped to [0, 1].
pub fn write_ppm<W: Write>(mut w: W, image: &[f64], width: usize, height: usize) -> Result<()> {
    if image.len() != width * height {
        return Err(Error::Io(format!(
            "image has {} pixels, expected {}x{}",
            image.len(),
            width,
            height
        )));
    }
    write!(w, "P6\n{width} {height}\n255\n")?;
    let mut bytes = Vec::with_capacity(image.len() * 3);
    for &v in image {
        let g = v.clamp(0.0, 1.0).powf(1.0 / 2.2);
        let b = (g * 255.0 + 0.5) as u8;
        bytes.extend_from_slice(&[b, b, b]);
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn save_ppm(path: &Path, image: &[f64], width: usize, height: usize) -> Result<()> {
    write_ppm(BufWriter::new(File::create(path)?), image, width, height)
}

/// Raw little-endian f64 values, row-major, no header.
pub fn save_raw(path: &Path, image: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in image {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_raw(path: &Path, len: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Io(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            len * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Full-precision decimal: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Report rows. With `omit_timing` the seconds column is left empty so that
/// the output depends only on the inputs.
pub fn write_csv<W: Write>(mut w: W, reports: &[EstimatorReport], omit_timing: bool) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        let mse = r.mse.map(format_float).unwrap_or_default();
        let seconds = if omit_timing {
            String::new()
        } else {
            format_float(r.seconds)
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.technique,
            r.spp,
            mse,
            seconds,
            r.newton_p50(),
            r.newton_max(),
            format_float(r.tab.ratio())
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: &Path, reports: &[EstimatorReport], omit_timing: bool) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), reports, omit_timing)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let mut buf = Vec::new();
        write_ppm(&mut buf, &[0.0, 1.0, 0.5, 2.0], 2, 2).unwrap();
        assert!(buf.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(buf.len(), 11 + 12);
        assert_eq!(&buf[11..14], &[0, 0, 0]);
        assert_eq!(&buf[14..17], &[255, 255, 255]);
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}

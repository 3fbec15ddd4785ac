//! CSV and PGM artifact writers.
//!
//! All floats are written as `{:.16e}` (17 significant digits), so identical
//! inputs produce byte-identical files. Images and spectrograms also export
//! as 8-bit binary PGM (P5) with a JSON sidecar recording the grid axes and
//! the dB normalization; PGM rows run top-to-bottom from the maximum y (or
//! maximum radius, or maximum frequency).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::deblur::{BlurKernel, BlurredTrace};
use crate::error::{Error, Result};
use crate::nulling::PhaseOffset;
use crate::recon::{ComplexImage, GridDescriptor, IMAGE_DB_FLOOR};
use crate::scene::{SignalTrace, Spectrogram, SPECTROGRAM_DB_FLOOR};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a trace as `theta,re,im`.
pub fn write_trace_csv(path: impl AsRef<Path>, trace: &SignalTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "theta,re,im")?;
    for (th, s) in trace.theta().iter().zip(trace.samples()) {
        writeln!(w, "{},{},{}", fmt(*th), fmt(s.re), fmt(s.im))?;
    }
    Ok(())
}

/// Writes a blurred trace in the trace CSV schema. The angle column is the
/// raw output index times the source angle step (the convolution transient
/// rows extend past the source grid).
pub fn write_blurred_trace_csv(path: impl AsRef<Path>, blurred: &BlurredTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "theta,re,im")?;
    let dt = blurred.meta().delta_theta;
    for (i, s) in blurred.samples().iter().enumerate() {
        writeln!(w, "{},{},{}", fmt(i as f64 * dt), fmt(s.re), fmt(s.im))?;
    }
    Ok(())
}

/// Sidecar flagging a trace CSV as blurred, with the convolution geometry.
pub fn write_blurred_trace_sidecar(path: impl AsRef<Path>, blurred: &BlurredTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{{\n  \"blurred\": true,\n  \"source_len\": {},\n  \"kernel_len\": {},\n  \"output_len\": {}\n}}",
        blurred.source_len(),
        blurred.kernel_len(),
        blurred.len()
    )?;
    Ok(())
}

/// Writes an image as `x_or_r,y_or_nu,re,im,mag_db` in row-major cell order.
/// `mag_db` is peak-normalized and floored at [`IMAGE_DB_FLOOR`].
pub fn write_image_csv(path: impl AsRef<Path>, image: &ComplexImage) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_or_r,y_or_nu,re,im,mag_db")?;
    let db = image.magnitude_db();
    for row in 0..image.rows() {
        for col in 0..image.cols() {
            let (a, b) = image.native_coords(row, col);
            let v = image.value(row, col);
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt(a),
                fmt(b),
                fmt(v.re),
                fmt(v.im),
                fmt(db[row * image.cols() + col])
            )?;
        }
    }
    Ok(())
}

fn write_pgm(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    // dB cell values, row-major; row 0 is written LAST (bottom of the image).
    db: &[f64],
    floor: f64,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let span = -floor;
    for row in (0..rows).rev() {
        let line: Vec<u8> = (0..cols)
            .map(|col| {
                let v = db[row * cols + col].clamp(floor, 0.0);
                ((v - floor) / span * 255.0).round() as u8
            })
            .collect();
        w.write_all(&line)?;
    }
    Ok(())
}

fn grid_json(image: &ComplexImage) -> String {
    match image.grid() {
        GridDescriptor::Cartesian(g) => format!(
            "{{\"kind\": \"cartesian\", \"x_min\": {}, \"x_max\": {}, \"x_count\": {}, \"y_min\": {}, \"y_max\": {}, \"y_count\": {}}}",
            fmt(g.xs()[0]),
            fmt(*g.xs().last().unwrap()),
            g.xs().len(),
            fmt(g.ys()[0]),
            fmt(*g.ys().last().unwrap()),
            g.ys().len()
        ),
        GridDescriptor::Polar(g) => format!(
            "{{\"kind\": \"polar\", \"r_min\": {}, \"r_max\": {}, \"r_count\": {}, \"nu_min\": {}, \"nu_max\": {}, \"nu_count\": {}}}",
            fmt(g.radii()[0]),
            fmt(*g.radii().last().unwrap()),
            g.radii().len(),
            fmt(g.angles()[0]),
            fmt(*g.angles().last().unwrap()),
            g.angles().len()
        ),
    }
}

/// Writes the peak-normalized dB magnitude of an image as binary PGM plus a
/// JSON sidecar describing axes and normalization.
pub fn write_image_pgm(
    pgm_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
    image: &ComplexImage,
) -> Result<()> {
    let db = image.magnitude_db();
    write_pgm(pgm_path, image.rows(), image.cols(), &db, IMAGE_DB_FLOOR)?;
    let mut w = BufWriter::new(File::create(sidecar_path)?);
    writeln!(
        w,
        "{{\n  \"format\": \"pgm\",\n  \"rows\": {},\n  \"cols\": {},\n  \"row_order\": \"top row = max y (or max r)\",\n  \"grid\": {},\n  \"normalization\": {{\"reference_magnitude\": {}, \"db_max\": 0.0, \"db_floor\": {}}}\n}}",
        image.rows(),
        image.cols(),
        grid_json(image),
        fmt(image.peak().magnitude),
        fmt(IMAGE_DB_FLOOR)
    )?;
    Ok(())
}

/// Writes a spectrogram as `time_s,freq_hz,power_db` rows (time-major).
pub fn write_spectrogram_csv(path: impl AsRef<Path>, sg: &Spectrogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time_s,freq_hz,power_db")?;
    for (fi, &t) in sg.times().iter().enumerate() {
        for (bi, &f) in sg.freqs_hz().iter().enumerate() {
            writeln!(w, "{},{},{}", fmt(t), fmt(f), fmt(sg.value(fi, bi)))?;
        }
    }
    Ok(())
}

/// Writes a spectrogram as PGM (frequency vertical, top row = max frequency,
/// time horizontal) with a JSON sidecar. Values are shown relative to the
/// spectrogram's own maximum.
pub fn write_spectrogram_pgm(
    pgm_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
    sg: &Spectrogram,
) -> Result<()> {
    let frames = sg.frames();
    let bins = sg.bins();
    if frames == 0 || bins == 0 {
        return Err(Error::Config("cannot render an empty spectrogram".into()));
    }
    let max_db = sg
        .power_db()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    // Transpose to bins x frames, relative dB.
    let mut rel = vec![0.0; frames * bins];
    for f in 0..frames {
        for b in 0..bins {
            rel[b * frames + f] = (sg.value(f, b) - max_db).max(SPECTROGRAM_DB_FLOOR);
        }
    }
    write_pgm(pgm_path, bins, frames, &rel, SPECTROGRAM_DB_FLOOR)?;
    let mut w = BufWriter::new(File::create(sidecar_path)?);
    writeln!(
        w,
        "{{\n  \"format\": \"pgm\",\n  \"rows\": {},\n  \"cols\": {},\n  \"row_order\": \"top row = max frequency\",\n  \"time_min_s\": {},\n  \"time_max_s\": {},\n  \"freq_min_hz\": {},\n  \"freq_max_hz\": {},\n  \"normalization\": {{\"reference_db\": {}, \"db_floor\": {}}}\n}}",
        bins,
        frames,
        fmt(sg.times()[0]),
        fmt(*sg.times().last().unwrap()),
        fmt(sg.freqs_hz()[0]),
        fmt(*sg.freqs_hz().last().unwrap()),
        fmt(max_db),
        fmt(SPECTROGRAM_DB_FLOOR)
    )?;
    Ok(())
}

/// Writes a phase-offset function as `theta,phi_radians`.
pub fn write_phase_csv(path: impl AsRef<Path>, theta: &[f64], phi: &PhaseOffset) -> Result<()> {
    if theta.len() != phi.len() {
        return Err(Error::Dimension(format!(
            "phase CSV: {} angles vs {} phase samples",
            theta.len(),
            phi.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "theta,phi_radians")?;
    for (th, p) in theta.iter().zip(phi.phi()) {
        writeln!(w, "{},{}", fmt(*th), fmt(*p))?;
    }
    Ok(())
}

/// Writes kernel taps as `index,re,im`.
pub fn write_kernel_csv(path: impl AsRef<Path>, kernel: &BlurKernel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,re,im")?;
    for (i, t) in kernel.taps().iter().enumerate() {
        writeln!(w, "{},{},{}", i, fmt(t.re), fmt(t.im))?;
    }
    Ok(())
}

/// Reads kernel taps from the `index,re,im` schema.
pub fn read_kernel_csv(path: impl AsRef<Path>) -> Result<BlurKernel> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "index,re,im" => {}
        Some(Ok(h)) => {
            return Err(Error::Config(format!(
                "kernel CSV: expected header 'index,re,im', found '{h}'"
            )))
        }
        _ => return Err(Error::Config("kernel CSV: missing header".into())),
    }
    let mut taps = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "kernel CSV line {}: expected 3 fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("kernel CSV line {}: {e}", lineno + 2)))
        };
        let idx = parse(fields[0])? as usize;
        if idx != taps.len() {
            return Err(Error::Config(format!(
                "kernel CSV line {}: index {} out of order (expected {})",
                lineno + 2,
                idx,
                taps.len()
            )));
        }
        taps.push(Complex64::new(parse(fields[1])?, parse(fields[2])?));
    }
    BlurKernel::new(taps)
}

/// Writes a line cut as `offset_m,<label>_db` columns for each cut provided.
pub fn write_cut_csv(
    path: impl AsRef<Path>,
    offsets: &[f64],
    columns: &[(&str, &[f64])],
) -> Result<()> {
    for (label, col) in columns {
        if col.len() != offsets.len() {
            return Err(Error::Dimension(format!(
                "cut CSV: column '{label}' has {} values for {} offsets",
                col.len(),
                offsets.len()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "offset_m")?;
    for (label, _) in columns {
        write!(w, ",{label}")?;
    }
    writeln!(w)?;
    for (i, off) in offsets.iter().enumerate() {
        write!(w, "{}", fmt(*off))?;
        for (_, col) in columns {
            write!(w, ",{}", fmt(col[i]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

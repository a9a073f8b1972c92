//! File formats: the T2I-GRID flat binary format for full-resolution
//! grids, CSV export for small grids and point clouds.
//!
//! T2I-GRID layout: one ASCII header line
//! `T2I-GRID v1 <rows> <cols> <channels> <pitch_x> <pitch_y>\n`
//! followed by little-endian 64-bit floats, row-major, channel-interleaved
//! (all channels of a pixel are adjacent).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cloud::{PointCloud2, PointCloud3};
use crate::error::{Error, Result};
use crate::grid::{GradientGrid, ScalarGrid};
use crate::sim::ContactObservation;

const MAGIC: &str = "T2I-GRID";
const VERSION: &str = "v1";

/// A parsed grid file: named only by channel count; the pipeline treats
/// 2 channels as (gx, gy) and 3 channels as (h, gx, gy).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub rows: usize,
    pub cols: usize,
    pub pitch_mm: (f64, f64),
    pub channels: Vec<Vec<f64>>,
}

pub fn write_grid_file(path: &Path, rows: usize, cols: usize, pitch_mm: (f64, f64), channels: &[&[f64]]) -> Result<()> {
    for ch in channels {
        if ch.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values per channel", rows * cols),
                got: format!("{}", ch.len()),
            });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{MAGIC} {VERSION} {rows} {cols} {} {} {}",
        channels.len(),
        pitch_mm.0,
        pitch_mm.1
    )?;
    for i in 0..rows * cols {
        for ch in channels {
            w.write_all(&ch[i].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid_file(path: &Path) -> Result<GridFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 7 || tokens[0] != MAGIC || tokens[1] != VERSION {
        return Err(Error::GridFormat(format!("bad header: {}", header.trim_end())));
    }
    let parse_usize = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::GridFormat(format!("bad {what}: {s}")))
    };
    let parse_f64 = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::GridFormat(format!("bad {what}: {s}")))
    };
    let rows = parse_usize(tokens[2], "rows")?;
    let cols = parse_usize(tokens[3], "cols")?;
    let n_channels = parse_usize(tokens[4], "channels")?;
    let pitch = (parse_f64(tokens[5], "pitch_x")?, parse_f64(tokens[6], "pitch_y")?);

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expected_bytes = rows * cols * n_channels * 8;
    if payload.len() != expected_bytes {
        return Err(Error::GridFormat(format!(
            "expected {expected_bytes} payload bytes, got {}",
            payload.len()
        )));
    }
    let mut channels = vec![Vec::with_capacity(rows * cols); n_channels];
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunked by 8"));
        channels[i % n_channels].push(v);
    }
    Ok(GridFile {
        rows,
        cols,
        pitch_mm: pitch,
        channels,
    })
}

/// Write a contact observation as T2I-GRID with channels (h, gx, gy).
pub fn write_observation_binary(path: &Path, obs: &ContactObservation) -> Result<()> {
    write_grid_file(
        path,
        obs.height.rows,
        obs.height.cols,
        obs.height.pitch_mm,
        &[&obs.height.values, &obs.gradients.gx, &obs.gradients.gy],
    )
}

/// Write a contact observation as CSV, one row per pixel. Meant for small
/// grids; a full-resolution observation is several megabytes.
pub fn write_observation_csv(path: &Path, obs: &ContactObservation) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "row,col,h,gx,gy")?;
    for row in 0..obs.height.rows {
        for col in 0..obs.height.cols {
            let i = obs.height.idx(row, col);
            writeln!(
                w,
                "{row},{col},{},{},{}",
                obs.height.values[i], obs.gradients.gx[i], obs.gradients.gy[i]
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a gradient grid from a T2I-GRID file: accepts 2 channels (gx, gy)
/// or 3 channels (h, gx, gy), ignoring the height channel.
pub fn read_gradient_grid(path: &Path) -> Result<GradientGrid> {
    let file = read_grid_file(path)?;
    let (gx, gy) = match file.channels.len() {
        2 => (file.channels[0].clone(), file.channels[1].clone()),
        3 => (file.channels[1].clone(), file.channels[2].clone()),
        n => {
            return Err(Error::GridFormat(format!(
                "expected 2 (gx,gy) or 3 (h,gx,gy) channels, got {n}"
            )))
        }
    };
    GradientGrid::from_channels(file.rows, file.cols, file.pitch_mm, gx, gy)
}

/// Write a height map as a single-channel T2I-GRID file.
pub fn write_height_binary(path: &Path, h: &ScalarGrid) -> Result<()> {
    write_grid_file(path, h.rows, h.cols, h.pitch_mm, &[&h.values])
}

pub fn write_cloud2_csv(path: &Path, cloud: &PointCloud2) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_mm,y_mm")?;
    for p in &cloud.points {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cloud3_csv(path: &Path, cloud: &PointCloud3) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_mm,y_mm,z_mm")?;
    for p in &cloud.points {
        writeln!(w, "{},{},{}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se2::Pose2;
    use crate::shapes::CrossSection;
    use crate::sim::{render_peg_contact, SensorModel};

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("t2i-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn grid_file_round_trips_exactly() {
        let dir = tmpdir();
        let path = dir.join("roundtrip.t2i");
        let rows = 7;
        let cols = 9;
        let a: Vec<f64> = (0..rows * cols).map(|i| (i as f64) * 0.1 - 3.0).collect();
        let b: Vec<f64> = (0..rows * cols).map(|i| ((i * 7) % 13) as f64 / 11.0).collect();
        write_grid_file(&path, rows, cols, (0.058125, 0.0595833), &[&a, &b]).unwrap();
        let back = read_grid_file(&path).unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.cols, cols);
        assert_eq!(back.pitch_mm, (0.058125, 0.0595833));
        assert_eq!(back.channels, vec![a, b]);
    }

    #[test]
    fn observation_binary_feeds_gradient_reader() {
        let dir = tmpdir();
        let path = dir.join("obs.t2i");
        let sensor = SensorModel {
            width_px: 64,
            height_px: 48,
            ..SensorModel::default()
        };
        let obs =
            render_peg_contact(&CrossSection::circle(0.8), Pose2::identity(), &sensor, 5).unwrap();
        write_observation_binary(&path, &obs).unwrap();
        let g = read_gradient_grid(&path).unwrap();
        assert_eq!(g.gx, obs.gradients.gx);
        assert_eq!(g.gy, obs.gradients.gy);
        assert_eq!(g.pitch_mm, sensor.pitch_mm());
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = tmpdir();
        let path = dir.join("bad.t2i");
        std::fs::write(&path, b"NOT-A-GRID v1 2 2 1 0.1 0.1\n").unwrap();
        assert!(matches!(read_grid_file(&path), Err(Error::GridFormat(_))));

        std::fs::write(&path, b"T2I-GRID v1 2 2 1 0.1 0.1\nshort").unwrap();
        assert!(matches!(read_grid_file(&path), Err(Error::GridFormat(_))));
    }

    #[test]
    fn csv_exports_have_documented_headers() {
        let dir = tmpdir();
        let sensor = SensorModel {
            width_px: 8,
            height_px: 6,
            area_mm: (0.8, 0.6),
            ..SensorModel::default()
        };
        let obs =
            render_peg_contact(&CrossSection::circle(0.2), Pose2::identity(), &sensor, 0).unwrap();
        let path = dir.join("obs.csv");
        write_observation_csv(&path, &obs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row,col,h,gx,gy"));
        assert_eq!(text.lines().count(), 1 + 48);

        let cloud_path = dir.join("cloud.csv");
        write_cloud3_csv(&cloud_path, &crate::recon::height_to_cloud(&obs.height)).unwrap();
        let text = std::fs::read_to_string(&cloud_path).unwrap();
        assert!(text.starts_with("x_mm,y_mm,z_mm\n"));
    }
}

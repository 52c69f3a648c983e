//! Cloud files and JSON reports.
//!
//! A cloud is stored as CSV with header `x,y,t,weight` next to a metadata
//! sidecar `<stem>.meta.json`. Floats are written in shortest round-trip form,
//! so reading a written cloud gives back the same bits. Every writer goes
//! through a temporary file in the target directory and a rename.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constructions::{Source, WeightedCloud};
use crate::error::{invalid, Result};
use crate::hgeom::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    pub source: Source,
    pub level: u32,
    pub total_mass: f64,
    pub h: Option<f64>,
    pub v: Option<f64>,
    pub vertical_placement_error: f64,
    pub placement_error: f64,
    pub points: usize,
}

impl CloudMeta {
    pub fn of(cloud: &WeightedCloud) -> Self {
        CloudMeta {
            source: cloud.source.clone(),
            level: cloud.level,
            total_mass: cloud.total_mass,
            h: cloud.h,
            v: cloud.v,
            vertical_placement_error: cloud.vertical_placement_error,
            placement_error: cloud.placement_error,
            points: cloud.len(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    t: f64,
    weight: f64,
}

/// Sidecar path: `dir/name.csv` becomes `dir/name.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Write `contents` through a sibling temporary file and rename it into place.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = match path.file_name() {
        Some(n) => n.to_string_lossy().into_owned(),
        None => return invalid(format!("not a file path: {}", path.display())),
    };
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_cloud_csv(cloud: &WeightedCloud, w: &mut dyn Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (p, &weight) in cloud.points.iter().zip(&cloud.weights) {
        out.serialize(Row { x: p.x, y: p.y, t: p.t, weight })?;
    }
    out.flush()?;
    Ok(())
}

/// Write the CSV and its metadata sidecar.
pub fn save_cloud(cloud: &WeightedCloud, csv_path: &Path) -> Result<()> {
    write_atomic(csv_path, |w| write_cloud_csv(cloud, w))?;
    write_json(&meta_path(csv_path), &CloudMeta::of(cloud))
}

pub fn read_cloud_csv(r: impl std::io::Read) -> Result<(Vec<Point>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "t", "weight"] {
        return invalid(format!("expected header x,y,t,weight, found {}", headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        points.push(Point::new(row.x, row.y, row.t));
        weights.push(row.weight);
    }
    Ok((points, weights))
}

/// Read a cloud written by [`save_cloud`]. Without a sidecar the cloud gets
/// source `other` and zero placement errors.
pub fn load_cloud(csv_path: &Path) -> Result<WeightedCloud> {
    let (points, weights) = read_cloud_csv(fs::File::open(csv_path)?)?;
    let meta_file = meta_path(csv_path);
    if !meta_file.exists() {
        let label = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return WeightedCloud::new(points, weights, 0, Source::Other { label });
    }
    let meta: CloudMeta = read_json(&meta_file)?;
    if meta.points != points.len() {
        return invalid(format!(
            "{} lists {} points but {} has {}",
            meta_file.display(),
            meta.points,
            csv_path.display(),
            points.len()
        ));
    }
    let mut cloud = WeightedCloud::new(points, weights, meta.level, meta.source)?;
    cloud.h = meta.h;
    cloud.v = meta.v;
    cloud.vertical_placement_error = meta.vertical_placement_error;
    cloud.placement_error = meta.placement_error;
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{cantor_cloud, hsquare_cloud};
    use proptest::prelude::*;

    #[test]
    fn cloud_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let cloud = hsquare_cloud(3).unwrap();
        save_cloud(&cloud, &path).unwrap();
        assert!(dir.path().join("c.meta.json").exists());
        let back = load_cloud(&path).unwrap();
        assert_eq!(back, cloud);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,t,weight\n"));
    }

    #[test]
    fn missing_sidecar_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.csv");
        fs::write(&path, "x,y,t,weight\n0.5,0,1,0.25\n").unwrap();
        let c = load_cloud(&path).unwrap();
        assert_eq!(c.points, vec![Point::new(0.5, 0.0, 1.0)]);
        assert_eq!(c.source, Source::Other { label: "raw".into() });
        fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(load_cloud(&path).is_err());
    }

    #[test]
    fn sidecar_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_cloud(&cantor_cloud(0.5, 3).unwrap(), &path).unwrap();
        fs::write(&path, "x,y,t,weight\n0,0,0,1\n").unwrap();
        assert!(load_cloud(&path).is_err());
    }

    #[test]
    fn json_round_trip_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let meta = CloudMeta::of(&cantor_cloud(0.5, 2).unwrap());
        write_json(&path, &meta).unwrap();
        let back: CloudMeta = read_json(&path).unwrap();
        assert_eq!(back, meta);
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(rows in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>(), 0.0f64..1e6), 1..40)) {
            prop_assume!(rows.iter().all(|r| r.0.is_finite() && r.1.is_finite() && r.2.is_finite()));
            let points: Vec<Point> = rows.iter().map(|r| Point::new(r.0, r.1, r.2)).collect();
            let weights: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let cloud = WeightedCloud::new(points, weights, 0, Source::Other { label: "p".into() }).unwrap();
            let mut buf = Vec::new();
            write_cloud_csv(&cloud, &mut buf).unwrap();
            let (p, w) = read_cloud_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(p, cloud.points);
            prop_assert_eq!(w, cloud.weights);
        }
    }
}

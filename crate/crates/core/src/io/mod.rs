//! Text formats for every artifact. Floats are written with 17 significant
//! digits so that values survive a round trip bit for bit, and every file
//! carries the tool version and the hash of the config that produced it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::ResidualReport;
use crate::error::{Error, Result};
use crate::selection::SelectionResult;
use crate::solver::{FieldState, Mesh, SeriesRecord};
use crate::statistical::{DiscreteMeasure, Observable, SamplerSpec};
use crate::thermo::{self, ConservedState, ThermoParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version and config hash stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
}

impl Provenance {
    /// Hash of the raw config text.
    pub fn of_config(text: &str) -> Self {
        Provenance {
            config_hash: hex::encode(Sha256::digest(text.as_bytes())),
        }
    }

    pub fn line(&self) -> String {
        format!("# eulerlab {VERSION} config={}", self.config_hash)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Snapshot text: a header with time and mesh, the provenance line, then
/// one row per cell with its indices, `rho`, the momentum, `S`, and the
/// derived pressure and temperature.
pub fn format_snapshot(st: &FieldState, params: &ThermoParams, prov: &Provenance) -> String {
    let mesh = &st.mesh;
    let two_d = mesh.dim() == 2;
    let mut out = format!(
        "# t={} nx={} lx={}",
        fmt_f64(st.time),
        mesh.n(0),
        fmt_f64(mesh.extent()[0])
    );
    if two_d {
        let _ = write!(out, " ny={} ly={}", mesh.n(1), fmt_f64(mesh.extent()[1]));
    }
    out.push('\n');
    out.push_str(&prov.line());
    out.push('\n');
    out.push_str(if two_d {
        "# i,j,rho,m_x,m_y,S,p,theta\n"
    } else {
        "# i,rho,m_x,S,p,theta\n"
    });
    for (idx, c) in st.cells.iter().enumerate() {
        let [i, j] = mesh.coords(idx);
        let p = thermo::pressure(c.rho, c.entropy, params).to_f64();
        let theta = if c.rho > 0.0 { p / c.rho } else { 0.0 };
        let _ = if two_d {
            write!(out, "{i},{j},{},{},{}", fmt_f64(c.rho), fmt_f64(c.mom[0]), fmt_f64(c.mom[1]))
        } else {
            write!(out, "{i},{},{}", fmt_f64(c.rho), fmt_f64(c.mom[0]))
        };
        let _ = writeln!(out, ",{},{},{}", fmt_f64(c.entropy), fmt_f64(p), fmt_f64(theta));
    }
    out
}

pub fn write_snapshot(path: &Path, st: &FieldState, params: &ThermoParams, prov: &Provenance) -> Result<()> {
    write_file(path, &format_snapshot(st, params, prov))
}

pub fn read_snapshot(path: &Path) -> Result<FieldState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text, path)
}

/// Inverse of [`format_snapshot`]; `path` only labels errors.
pub fn parse_snapshot(text: &str, path: &Path) -> Result<FieldState> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header
        .strip_prefix("# ")
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let mut time = None;
    let mut cells = [0usize, 0];
    let mut extent = [0.0, 0.0];
    for kv in header.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| parse_err(path, 1, format!("bad header field '{kv}'")))?;
        let bad = |_| parse_err(path, 1, format!("bad value for {k}: '{v}'"));
        match k {
            "t" => time = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "nx" => cells[0] = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "ny" => cells[1] = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "lx" => extent[0] = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "ly" => extent[1] = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            _ => return Err(parse_err(path, 1, format!("unknown header field '{k}'"))),
        }
    }
    let time = time.ok_or_else(|| parse_err(path, 1, "header lacks t"))?;
    let dim = if cells[1] > 0 { 2 } else { 1 };
    let mesh = Mesh::new(&cells[..dim], &extent[..dim]).map_err(|e| parse_err(path, 1, e.to_string()))?;
    let mut values = vec![None; mesh.len()];
    let width = if dim == 2 { 8 } else { 6 };
    for (k, line) in lines {
        let lineno = k + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(parse_err(path, lineno, format!("expected {width} columns, found {}", fields.len())));
        }
        let idx_of = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad index '{s}'")))
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad number '{s}'")))
        };
        let (i, j, rest) = if dim == 2 {
            (idx_of(fields[0])?, idx_of(fields[1])?, &fields[2..])
        } else {
            (idx_of(fields[0])?, 0, &fields[1..])
        };
        if i >= mesh.n(0) || j >= mesh.n(1) {
            return Err(parse_err(path, lineno, format!("cell ({i}, {j}) outside the mesh")));
        }
        let st = if dim == 2 {
            ConservedState::new(num(rest[0])?, [num(rest[1])?, num(rest[2])?], num(rest[3])?)
        } else {
            ConservedState::new(num(rest[0])?, [num(rest[1])?, 0.0], num(rest[2])?)
        };
        let slot = &mut values[mesh.index(i, j)];
        if slot.is_some() {
            return Err(parse_err(path, lineno, format!("duplicate cell ({i}, {j})")));
        }
        *slot = Some(st);
    }
    let cells = values
        .into_iter()
        .enumerate()
        .map(|(idx, v)| v.ok_or_else(|| parse_err(path, 0, format!("cell {idx} missing"))))
        .collect::<Result<Vec<_>>>()?;
    FieldState::new(mesh, cells, time)
}

pub fn snapshot_file_name(index: usize) -> String {
    format!("snapshot_{index:04}.csv")
}

pub fn format_series(series: &[SeriesRecord], prov: &Provenance) -> String {
    let mut out = prov.line();
    out.push_str("\nt,mass,energy,entropy,defect,cost\n");
    for r in series {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.energy),
            fmt_f64(r.entropy),
            fmt_f64(r.defect),
            fmt_f64(r.cost)
        );
    }
    out
}

pub fn write_series(path: &Path, series: &[SeriesRecord], prov: &Provenance) -> Result<()> {
    write_file(path, &format_series(series, prov))
}

pub fn format_selection(res: &SelectionResult, prov: &Provenance) -> String {
    let mut out = prov.line();
    let _ = write!(out, "\n# tie={} certified={}\n", res.tie, res.certified);
    out.push_str("id,descriptor,weighted_cost,tail_bound,chosen\n");
    for (i, d) in res.descriptors.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{d},{},{},{}",
            fmt_f64(res.costs[i].to_f64()),
            fmt_f64(res.tail_bounds[i]),
            u8::from(i == res.chosen)
        );
    }
    out
}

pub fn write_selection(path: &Path, res: &SelectionResult, prov: &Provenance) -> Result<()> {
    write_file(path, &format_selection(res, prov))
}

/// One row per (test function, quantity) that the function admits.
pub fn format_residuals(reports: &[ResidualReport], prov: &Provenance) -> String {
    let mut out = prov.line();
    out.push_str("\ntest_function,quantity,value,time_steps,cells\n");
    for r in reports {
        for (q, v) in [
            ("continuity", r.continuity),
            ("momentum", r.momentum),
            ("entropy", r.entropy),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{},{q},{},{},{}", r.test_id, fmt_f64(v), r.time_steps, r.cells);
            }
        }
    }
    out
}

pub fn write_residuals(path: &Path, reports: &[ResidualReport], prov: &Provenance) -> Result<()> {
    write_file(path, &format_residuals(reports, prov))
}

/// Rows `(t, observable id, value)`.
pub fn format_expectations(rows: &[(f64, usize, f64)], observables: &[Observable], prov: &Provenance) -> String {
    let mut out = prov.line();
    out.push_str("\nt,observable,value\n");
    for &(t, i, v) in rows {
        let _ = writeln!(out, "{},{},{}", fmt_f64(t), observables[i].id(), fmt_f64(v));
    }
    out
}

pub fn write_expectations(
    path: &Path,
    rows: &[(f64, usize, f64)],
    observables: &[Observable],
    prov: &Provenance,
) -> Result<()> {
    write_file(path, &format_expectations(rows, observables, prov))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestFile {
    measure: ManifestBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestBody {
    time: f64,
    version: String,
    config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampler: Option<SamplerSpec>,
    atoms: Vec<ManifestAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestAtom {
    weight: f64,
    snapshot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

/// Writes `sigma` as a manifest in `dir/name.toml` plus one snapshot file
/// per atom in `dir/name/`.
pub fn write_measure(
    dir: &Path,
    name: &str,
    sigma: &DiscreteMeasure,
    time: f64,
    params: &ThermoParams,
    prov: &Provenance,
) -> Result<PathBuf> {
    let mut atoms = Vec::with_capacity(sigma.len());
    for (i, a) in sigma.atoms().iter().enumerate() {
        let rel = format!("{name}/atom_{i:04}.csv");
        write_snapshot(&dir.join(&rel), &a.state, params, prov)?;
        atoms.push(ManifestAtom {
            weight: a.weight,
            snapshot: rel,
            failure: a.failure.clone(),
        });
    }
    let file = ManifestFile {
        measure: ManifestBody {
            time,
            version: VERSION.to_string(),
            config_hash: prov.config_hash.clone(),
            seed: sigma.provenance.map(|(_, s)| s),
            sampler: sigma.provenance.map(|(s, _)| s),
            atoms,
        },
    };
    let text = toml::to_string(&file).map_err(|e| Error::input(format!("manifest encoding: {e}")))?;
    let path = dir.join(format!("{name}.toml"));
    write_file(&path, &format!("{}\n{text}", prov.line()))?;
    Ok(path)
}

/// Reads a manifest and its snapshot files (paths relative to the
/// manifest). Returns the measure and its time.
pub fn read_measure(path: &Path, params: &ThermoParams) -> Result<(DiscreteMeasure, f64)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile = toml::from_str(&text).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let atoms = file
        .measure
        .atoms
        .iter()
        .map(|a| Ok((a.weight, read_snapshot(&base.join(&a.snapshot))?)))
        .collect::<Result<Vec<_>>>()?;
    let mut sigma = DiscreteMeasure::new(atoms, params)?;
    if let (Some(s), Some(seed)) = (file.measure.sampler, file.measure.seed) {
        sigma.provenance = Some((s, seed));
    }
    Ok((sigma, file.measure.time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Primitive;

    fn params() -> ThermoParams {
        ThermoParams::new(1.4, f64::NEG_INFINITY, 1e-6, 10.0).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_bitwise() {
        let p = params();
        let prov = Provenance::of_config("x = 1");
        for mesh in [Mesh::new_1d(7, 1.3).unwrap(), Mesh::new_2d(5, 4, 1.0, 0.7).unwrap()] {
            let st = FieldState::from_profile(mesh, &p, |x| {
                Primitive::new(1.0 + 0.3 * x[0].sin(), [0.1 * x[1], -0.2], 1.0 / 3.0)
            })
            .with_time(0.1 + 0.2);
            let text = format_snapshot(&st, &p, &prov);
            let back = parse_snapshot(&text, Path::new("mem")).unwrap();
            assert!(back.bitwise_eq(&st));
            assert_eq!(back.time.to_bits(), st.time.to_bits());
        }
    }

    #[test]
    fn malformed_snapshot_reports_line() {
        let text = "# t=0 nx=4 lx=1\n# eulerlab\n0,1,0,0,1,1\n1,1,0,0\n";
        match parse_snapshot(text, Path::new("f.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_snapshot("", Path::new("f")).is_err());
    }

    #[test]
    fn provenance_line() {
        let a = Provenance::of_config("a");
        assert_eq!(a.config_hash.len(), 64);
        assert_ne!(a, Provenance::of_config("b"));
        assert!(a.line().starts_with("# eulerlab "));
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn measure_manifest_round_trip() {
        let p = params();
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh::new_1d(8, 1.0).unwrap();
        let a = FieldState::from_profile(mesh, &p, |x| Primitive::new(1.0 + 0.1 * x[0], [0.0; 2], 1.0));
        let b = FieldState::from_profile(mesh, &p, |x| Primitive::new(1.0, [0.1 * x[0], 0.0], 1.0));
        let sigma = DiscreteMeasure::new(vec![(0.3, a), (0.7, b)], &p).unwrap();
        let prov = Provenance::of_config("");
        let path = write_measure(dir.path(), "sigma_t0", &sigma, 0.0, &p, &prov).unwrap();
        let (back, t) = read_measure(&path, &p).unwrap();
        assert_eq!(t, 0.0);
        assert!(back.bitwise_eq(&sigma));
    }
}

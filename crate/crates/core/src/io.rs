//! Configuration, right-hand-side specifications, and profile files.
//!
//! Profiles are CSV with header `mode,r,re,im`, one row per mode and radial
//! node. Numbers are written with Rust's shortest round-trip formatting, so
//! output is locale-free and reads back bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::modes::{Field2D, ModeFunction, OperatorKind};
use crate::verify::{manufactured_case, Family, Manufactured};
use crate::SCHEMA;

/// Relative tolerance when matching profile radii to grid nodes.
const NODE_MATCH_TOL: f64 = 1e-9;

/// Discretization settings, readable from a JSON object whose keys override
/// the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_min: RadialGrid::DEFAULT_R_MIN,
            r_max: RadialGrid::DEFAULT_R_MAX,
            n_r: RadialGrid::DEFAULT_N_R,
            n_theta: Field2D::DEFAULT_N_THETA,
        }
    }
}

impl GridConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("grid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.n_theta < 4 || !self.n_theta.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n_theta must be a power of two ≥ 4, got {}", self.n_theta)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.r_min, self.r_max, self.n_r)
    }
}

/// Where a right-hand side comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsSpec {
    /// `zero`.
    Zero,
    /// `manufactured:<family>[:key=value,...]`; key `n` selects the mode.
    Manufactured { case: Manufactured, mode: i32 },
    /// `csv:<path>` or a path ending in `.csv`.
    Profiles(PathBuf),
}

impl FromStr for RhsSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(Self::Zero);
        }
        if let Some(path) = s.strip_prefix("csv:") {
            if path.is_empty() {
                return Err(Error::Parse("csv: needs a path".into()));
            }
            return Ok(Self::Profiles(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("manufactured:") {
            let (family, params) = rest.split_once(':').unwrap_or((rest, ""));
            let mut case = Manufactured::new(family.parse::<Family>()?);
            let mut mode = 0;
            for item in params.split([',', ':']).filter(|p| !p.is_empty()) {
                let (key, value) =
                    item.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
                if key == "n" {
                    mode = value.parse().map_err(|_| Error::Parse(format!("mode `{value}` is not an integer")))?;
                } else {
                    let v: f64 = value.parse().map_err(|_| Error::Parse(format!("`{value}` is not a number")))?;
                    case = case.with(key, v)?;
                }
            }
            return Ok(Self::Manufactured { case, mode });
        }
        if s.ends_with(".csv") {
            return Ok(Self::Profiles(PathBuf::from(s)));
        }
        Err(Error::Parse(format!("unrecognized rhs `{s}`: expected zero, manufactured:<family>[:n=..], or csv:<path>")))
    }
}

impl fmt::Display for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Profiles(p) => write!(f, "csv:{}", p.display()),
            Self::Manufactured { case, mode } => {
                write!(f, "manufactured:{}:n={mode}", case.family)?;
                case.params.iter().try_for_each(|(k, v)| write!(f, ",{k}={v}"))
            }
        }
    }
}

/// A right-hand side on a grid, with the exact solution when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub f: Field2D,
    pub exact: Option<Field2D>,
}

impl RhsSpec {
    pub fn build(&self, kind: OperatorKind, grid: Arc<RadialGrid>, n_theta: usize) -> Result<Rhs> {
        match self {
            Self::Zero => Ok(Rhs { f: Field2D::zeros(grid, n_theta)?, exact: None }),
            Self::Manufactured { case, mode } => {
                let (u, f) = manufactured_case(kind, *mode, case, grid.clone())?;
                Ok(Rhs {
                    f: Field2D::from_modes(grid.clone(), n_theta, [f])?,
                    exact: Some(Field2D::from_modes(grid, n_theta, [u])?),
                })
            }
            Self::Profiles(path) => {
                let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let rows = parse_profiles(file)?;
                Ok(Rhs { f: profiles_to_field(&rows, grid, n_theta)?, exact: None })
            }
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub mode: i32,
    pub r: f64,
    pub re: f64,
    pub im: f64,
}

/// Reads `mode,r,re,im` rows; rejects non-finite numbers and `r ≤ 0`.
pub fn parse_profiles(input: impl Read) -> Result<Vec<ProfileRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Parse(format!("profile header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["mode", "r", "re", "im"] {
        return Err(Error::Parse(format!(
            "profile header must be mode,r,re,im, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.deserialize::<ProfileRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("profile row {}: {e}", line + 1)))?;
        if !(row.r.is_finite() && row.r > 0.0 && row.re.is_finite() && row.im.is_finite()) {
            return Err(Error::Parse(format!("profile row {}: values must be finite with r > 0", line + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Places rows on the grid. Each listed mode must supply every node once, in
/// increasing `r`.
pub fn profiles_to_field(rows: &[ProfileRow], grid: Arc<RadialGrid>, n_theta: usize) -> Result<Field2D> {
    let mut by_mode: BTreeMap<i32, Vec<&ProfileRow>> = BTreeMap::new();
    for row in rows {
        by_mode.entry(row.mode).or_default().push(row);
    }
    let mut modes = Vec::with_capacity(by_mode.len());
    for (mode, rows) in by_mode {
        if rows.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "mode {mode}: {} rows for {} grid nodes",
                rows.len(),
                grid.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len());
        for (row, &r) in rows.iter().zip(grid.nodes()) {
            if (row.r / r - 1.0).abs() > NODE_MATCH_TOL {
                return Err(Error::ShapeMismatch(format!(
                    "mode {mode}: radius {} does not match grid node {r}",
                    row.r
                )));
            }
            values.push(Complex64::new(row.re, row.im));
        }
        modes.push(ModeFunction::new(mode, grid.clone(), values)?);
    }
    Field2D::from_modes(grid, n_theta, modes)
}

/// Writes the nonzero modes of `field` as `mode,r,re,im`.
pub fn write_profiles(out: impl Write, field: &Field2D) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["mode", "r", "re", "im"]).map_err(io)?;
    for m in field.active_modes() {
        for (r, v) in m.grid().nodes().iter().zip(m.values()) {
            w.serialize(ProfileRow { mode: m.n(), r: *r, re: v.re, im: v.im }).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A JSON payload tagged with the schema version.
#[derive(Debug, Clone, Serialize)]
pub struct Tagged<'a, T: Serialize> {
    pub schema: &'static str,
    #[serde(flatten)]
    pub body: &'a T,
}

/// Pretty JSON with a leading schema tag and a trailing newline.
pub fn to_report_json<T: Serialize>(body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Tagged { schema: SCHEMA, body })
        .map_err(|e| Error::Parse(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_config_defaults_and_overrides() {
        assert_eq!(GridConfig::from_json("{}").unwrap(), GridConfig::default());
        let c = GridConfig::from_json(r#"{"n_r": 256, "n_theta": 16}"#).unwrap();
        assert_eq!((c.n_r, c.n_theta, c.r_max), (256, 16, 40.0));
        assert!(GridConfig::from_json(r#"{"n_r": 4}"#).is_err());
        assert!(GridConfig::from_json(r#"{"n_theta": 12}"#).is_err());
        assert!(GridConfig::from_json(r#"{"dr": 1}"#).is_err());
        assert!(GridConfig::from_json("[").is_err());
    }

    #[test]
    fn rhs_specs_parse_and_display() {
        let s: RhsSpec = "manufactured:gaussian_power:n=1".parse().unwrap();
        assert_eq!(s, RhsSpec::Manufactured { case: Manufactured::new(Family::GaussianPower), mode: 1 });
        assert_eq!(s.to_string().parse::<RhsSpec>().unwrap(), s);
        let s: RhsSpec = "manufactured:annulus_bump:n=-2,r_inner=0.3".parse().unwrap();
        assert_eq!(s.to_string().parse::<RhsSpec>().unwrap(), s);
        assert_eq!("zero".parse::<RhsSpec>().unwrap(), RhsSpec::Zero);
        assert_eq!("f.csv".parse::<RhsSpec>().unwrap(), RhsSpec::Profiles("f.csv".into()));
        assert!(matches!("manufactured:sinc".parse::<RhsSpec>(), Err(Error::UnknownFamily(_))));
        assert!("manufactured:gaussian_power:n=x".parse::<RhsSpec>().is_err());
        assert!("manufactured:gaussian_power:a".parse::<RhsSpec>().is_err());
        assert!("something".parse::<RhsSpec>().is_err());
    }

    #[test]
    fn profiles_round_trip_exactly() {
        let g = Arc::new(RadialGrid::new(1e-2, 10.0, 32).unwrap());
        let m = ModeFunction::from_fn(-3, g.clone(), |r| Complex64::new(r.sin(), 1.0 / 3.0 * r));
        let f = Field2D::from_modes(g.clone(), 8, [m]).unwrap();
        let mut buf = Vec::new();
        write_profiles(&mut buf, &f).unwrap();
        let rows = parse_profiles(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 32);
        assert_eq!(profiles_to_field(&rows, g, 8).unwrap(), f);
    }

    #[test]
    fn malformed_profiles_rejected() {
        assert!(parse_profiles("a,b,c,d\n1,1,1,1\n".as_bytes()).is_err());
        assert!(parse_profiles("mode,r,re,im\n1,-1,0,0\n".as_bytes()).is_err());
        assert!(parse_profiles("mode,r,re,im\n1,1,NaN,0\n".as_bytes()).is_err());
        assert!(parse_profiles("mode,r,re,im\n1.5,1,0,0\n".as_bytes()).is_err());
        let g = Arc::new(RadialGrid::new(1.0, 2.0, 16).unwrap());
        let rows = parse_profiles("mode,r,re,im\n0,1,0,0\n".as_bytes()).unwrap();
        assert!(matches!(profiles_to_field(&rows, g, 8), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn report_json_is_tagged() {
        let s = to_report_json(&serde_json::json!({ "a": 1 })).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["a"], 1);
    }
}

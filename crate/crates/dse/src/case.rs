//! Readers for IEEE Common Data Format and MATPOWER case scripts.
//!
//! Both produce a [`BusSystem`] with buses renumbered densely in file order.
//! Per-unit conversions follow each format's conventions: CDF shunts are
//! already in p.u., MATPOWER `Gs`/`Bs` are MW/MVAr at 1 p.u. voltage.

use crate::error::{io_error, Error, ParseError, Result};
use dse_core::grid::{build_admittance, Branch, Bus, BusKind, BusSystem, MeasurementPlan, Shunt};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseFormat {
    Cdf,
    Matpower,
}

impl CaseFormat {
    /// `.m` is MATPOWER; `.cdf`, `.txt` and `.dat` are CDF.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "m" => Some(CaseFormat::Matpower),
            "cdf" | "txt" | "dat" => Some(CaseFormat::Cdf),
            _ => None,
        }
    }
}

struct Raw {
    name: String,
    base_mva: f64,
    buses: Vec<(usize, Bus, f64, f64)>,
    branches: Vec<RawBranch>,
}

struct RawBranch {
    line: usize,
    to_column: usize,
    from: u32,
    to: u32,
    r: f64,
    x: f64,
    b: f64,
    tap: f64,
}

/// Parses `text` without building the admittance matrix.
pub fn parse_case(text: &str, format: CaseFormat) -> Result<BusSystem, CaseError> {
    let raw = match format {
        CaseFormat::Cdf => parse_cdf(text)?,
        CaseFormat::Matpower => parse_matpower(text)?,
    };
    assemble(raw)
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Network(#[from] dse_core::Error),
}

fn assemble(raw: Raw) -> Result<BusSystem, CaseError> {
    let mut index = HashMap::new();
    for (k, (line, bus, _, _)) in raw.buses.iter().enumerate() {
        if index.insert(bus.label, k).is_some() {
            return Err(ParseError::new(*line, 1, format!("duplicate bus {}", bus.label)).into());
        }
    }
    let lookup = |label: u32, line: usize, column: usize| {
        index.get(&label).copied().ok_or_else(|| ParseError::new(line, column, format!("unknown bus {label}")))
    };
    let mut branches = Vec::with_capacity(raw.branches.len());
    for rb in &raw.branches {
        branches.push(Branch {
            from: lookup(rb.from, rb.line, 1)?,
            to: lookup(rb.to, rb.line, rb.to_column)?,
            resistance: rb.r,
            reactance: rb.x,
            charging: rb.b,
            tap: if rb.tap == 0.0 { 1.0 } else { rb.tap },
        });
    }
    let mut shunts = Vec::new();
    let mut buses = Vec::with_capacity(raw.buses.len());
    for (k, (_, bus, g, b)) in raw.buses.into_iter().enumerate() {
        if g != 0.0 || b != 0.0 {
            shunts.push(Shunt { bus: k, conductance: g, susceptance: b });
        }
        buses.push(bus);
    }
    Ok(BusSystem::new(raw.name, raw.base_mva, buses, branches, shunts)?)
}

fn bus_kind(code: i64, line: usize, column: usize) -> Result<BusKind, ParseError> {
    match code {
        3 => Ok(BusKind::Slack),
        2 => Ok(BusKind::Generator),
        0 | 1 => Ok(BusKind::Load),
        other => Err(ParseError::new(line, column, format!("unsupported bus type {other}"))),
    }
}

/// 1-based inclusive column slice, empty past the end of the line.
fn columns(line: &str, from: usize, to: usize) -> &str {
    let start = (from - 1).min(line.len());
    let end = to.min(line.len());
    line.get(start..end).unwrap_or("")
}

fn field<T: std::str::FromStr>(line: &str, no: usize, from: usize, to: usize, what: &str) -> Result<T, ParseError> {
    let s = columns(line, from, to).trim();
    if s.is_empty() {
        return Err(ParseError::new(no, from, format!("missing {what} (columns {from}-{to})")));
    }
    s.parse().map_err(|_| ParseError::new(no, from, format!("invalid {what} `{s}`")))
}

fn optional<T: std::str::FromStr>(line: &str, no: usize, from: usize, to: usize, what: &str, default: T) -> Result<T, ParseError> {
    if columns(line, from, to).trim().is_empty() {
        Ok(default)
    } else {
        field(line, no, from, to, what)
    }
}

fn parse_cdf(text: &str) -> Result<Raw, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let header = lines.iter().position(|l| !l.trim().is_empty()).ok_or_else(|| ParseError::new(1, 1, "empty case file"))?;
    let title = lines[header];
    let base_mva = optional(title, header + 1, 32, 37, "base MVA", 100.0)?;
    let name = columns(title, 46, title.len()).trim().to_string();

    let section = |tag: &str| -> Result<(usize, usize), ParseError> {
        let start = lines
            .iter()
            .position(|l| l.trim_start().starts_with(tag))
            .ok_or_else(|| ParseError::new(lines.len().max(1), 1, format!("missing `{tag}` section")))?;
        let end = lines[start + 1..]
            .iter()
            .position(|l| l.trim_start().starts_with("-999"))
            .map(|k| start + 1 + k)
            .ok_or_else(|| ParseError::new(start + 1, 1, format!("`{tag}` section has no -999 terminator")))?;
        Ok((start + 1, end))
    };

    let (b0, b1) = section("BUS DATA FOLLOWS")?;
    let mut buses = Vec::new();
    for (k, line) in lines[b0..b1].iter().enumerate() {
        let no = b0 + k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let label: u32 = field(line, no, 1, 4, "bus number")?;
        let kind = bus_kind(field(line, no, 25, 26, "bus type")?, no, 25)?;
        let magnitude: f64 = field(line, no, 28, 33, "voltage magnitude")?;
        let angle: f64 = field(line, no, 34, 40, "voltage angle")?;
        let g: f64 = optional(line, no, 107, 114, "shunt conductance", 0.0)?;
        let b: f64 = optional(line, no, 115, 122, "shunt susceptance", 0.0)?;
        buses.push((no, Bus { label, kind, magnitude, angle: angle.to_radians() }, g, b));
    }

    let (r0, r1) = section("BRANCH DATA FOLLOWS")?;
    let mut branches = Vec::new();
    for (k, line) in lines[r0..r1].iter().enumerate() {
        let no = r0 + k + 1;
        if line.trim().is_empty() {
            continue;
        }
        branches.push(RawBranch {
            line: no,
            to_column: 6,
            from: field(line, no, 1, 4, "from bus")?,
            to: field(line, no, 6, 9, "to bus")?,
            r: field(line, no, 20, 29, "resistance")?,
            x: field(line, no, 30, 40, "reactance")?,
            b: optional(line, no, 41, 50, "line charging", 0.0)?,
            tap: optional(line, no, 77, 82, "turns ratio", 0.0)?,
        });
    }
    Ok(Raw { name, base_mva, buses, branches })
}

/// A number with its 1-based source position.
#[derive(Debug, Clone, Copy)]
struct Cell {
    value: f64,
    line: usize,
    column: usize,
}

fn parse_matpower(text: &str) -> Result<Raw, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::new(1, 1, "empty case file"));
    }
    let mut name = String::new();
    let mut base_mva = None;
    let mut tables: HashMap<String, Vec<Vec<Cell>>> = HashMap::new();
    let mut current: Option<(String, usize, Vec<Vec<Cell>>, Vec<Cell>)> = None;

    for (k, full) in text.lines().enumerate() {
        let no = k + 1;
        let line = full.split('%').next().unwrap_or("");
        let mut rest = line;
        let mut offset = 0;
        if current.is_none() {
            let t = line.trim();
            if let Some(f) = t.strip_prefix("function") {
                name = f.split('=').nth(1).unwrap_or(f).trim().trim_end_matches(';').to_string();
                continue;
            }
            let Some(pos) = line.find("mpc.") else { continue };
            let Some(eq) = line[pos..].find('=') else { continue };
            let key = line[pos + 4..pos + eq].trim().to_string();
            let value = &line[pos + eq + 1..];
            match value.find('[') {
                Some(open) => {
                    offset = pos + eq + 1 + open + 1;
                    rest = &line[offset..];
                    current = Some((key, no, Vec::new(), Vec::new()));
                }
                None if key == "baseMVA" => {
                    let v = value.trim().trim_end_matches(';').trim();
                    base_mva = Some(
                        v.parse::<f64>()
                            .map_err(|_| ParseError::new(no, pos + eq + 2, format!("invalid baseMVA `{v}`")))?,
                    );
                    continue;
                }
                None => continue,
            }
        }
        let Some((key, _, rows, row)) = current.as_mut() else { continue };
        let wanted = key == "bus" || key == "branch";
        let mut closed = false;
        let bytes = rest.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c == ']' {
                closed = true;
                break;
            }
            if c == ';' {
                if !row.is_empty() {
                    rows.push(std::mem::take(row));
                }
                i += 1;
                continue;
            }
            if c.is_whitespace() || c == ',' {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && !matches!(bytes[i] as char, ' ' | '\t' | ',' | ';' | ']' | '\r') {
                i += 1;
            }
            if wanted {
                let tok = &rest[start..i];
                let column = offset + start + 1;
                let value = tok
                    .parse::<f64>()
                    .map_err(|_| ParseError::new(no, column, format!("invalid number `{tok}` in mpc.{key}")))?;
                row.push(Cell { value, line: no, column });
            }
        }
        if !row.is_empty() {
            rows.push(std::mem::take(row));
        }
        if closed {
            let (key, _, rows, _) = current.take().expect("open table");
            tables.insert(key, rows);
        }
    }
    if let Some((key, start, _, _)) = current {
        return Err(ParseError::new(start, 1, format!("mpc.{key} is never closed with `]`")));
    }

    let last = text.lines().count().max(1);
    let base_mva = base_mva.ok_or_else(|| ParseError::new(last, 1, "missing mpc.baseMVA"))?;
    let table = |key: &str| tables.get(key).ok_or_else(|| ParseError::new(last, 1, format!("missing mpc.{key}")));
    let width = |row: &[Cell], need: usize, key: &str| -> Result<(), ParseError> {
        if row.len() < need {
            let c = row[0];
            return Err(ParseError::new(c.line, c.column, format!("mpc.{key} row has {} columns, need {need}", row.len())));
        }
        Ok(())
    };
    let label = |c: Cell| -> Result<u32, ParseError> {
        if c.value >= 0.0 && c.value.fract() == 0.0 && c.value <= u32::MAX as f64 {
            Ok(c.value as u32)
        } else {
            Err(ParseError::new(c.line, c.column, format!("invalid bus number {}", c.value)))
        }
    };

    let mut buses = Vec::new();
    for row in table("bus")? {
        width(row, 9, "bus")?;
        let kind = bus_kind(row[1].value as i64, row[1].line, row[1].column)?;
        if row[1].value.fract() != 0.0 {
            return Err(ParseError::new(row[1].line, row[1].column, "bus type must be an integer"));
        }
        let bus = Bus { label: label(row[0])?, kind, magnitude: row[7].value, angle: row[8].value.to_radians() };
        buses.push((row[0].line, bus, row[4].value / base_mva, row[5].value / base_mva));
    }
    let mut branches = Vec::new();
    for row in table("branch")? {
        width(row, 4, "branch")?;
        let get = |k: usize, default: f64| row.get(k).map_or(default, |c| c.value);
        if get(10, 1.0) == 0.0 {
            continue;
        }
        if get(9, 0.0) != 0.0 {
            let c = row[9];
            return Err(ParseError::new(c.line, c.column, "phase-shifting transformers are not supported"));
        }
        branches.push(RawBranch {
            line: row[0].line,
            to_column: row[1].column,
            from: label(row[0])?,
            to: label(row[1])?,
            r: row[2].value,
            x: row[3].value,
            b: get(4, 0.0),
            tap: get(8, 0.0),
        });
    }
    Ok(Raw { name, base_mva, buses, branches })
}

/// Bundled IEEE cases, selectable by name.
pub const BUNDLED: [(&str, &str, CaseFormat); 6] = [
    ("ieee14", include_str!("../cases/ieee14.cdf"), CaseFormat::Cdf),
    ("ieee30", include_str!("../cases/ieee30.cdf"), CaseFormat::Cdf),
    ("ieee57", include_str!("../cases/ieee57.cdf"), CaseFormat::Cdf),
    ("ieee14.m", include_str!("../cases/ieee14.m"), CaseFormat::Matpower),
    ("ieee30.m", include_str!("../cases/ieee30.m"), CaseFormat::Matpower),
    ("ieee57.m", include_str!("../cases/ieee57.m"), CaseFormat::Matpower),
];

/// A parsed network with its admittance matrix and the default plan.
#[derive(Debug, Clone)]
pub struct Case {
    /// Bundled name or the path as given.
    pub name: String,
    pub format: CaseFormat,
    pub system: BusSystem,
    pub plan: MeasurementPlan,
    /// SHA-256 of the source text.
    pub sha256: String,
}

impl Case {
    pub fn from_text(name: &str, text: &str, format: CaseFormat) -> Result<Self> {
        let parsed = parse_case(text, format).map_err(|e| match e {
            CaseError::Parse(error) => Error::Parse { source_name: name.to_string(), error },
            CaseError::Network(e) => Error::Config(format!("{name}: {e}")),
        })?;
        let system = build_admittance(parsed).map_err(|e| Error::Config(format!("{name}: {e}")))?;
        let plan = MeasurementPlan::full(&system);
        Ok(Self { name: name.to_string(), format, system, plan, sha256: sha256_hex(text.as_bytes()) })
    }

    pub fn bundled(name: &str) -> Option<Result<Self>> {
        BUNDLED.iter().find(|(n, _, _)| *n == name).map(|(n, text, f)| Self::from_text(n, text, *f))
    }

    /// A bundled name, or a path whose extension selects the format.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(case) = Self::bundled(spec) {
            return case;
        }
        let path = Path::new(spec);
        if !path.exists() {
            let names: Vec<&str> = BUNDLED.iter().map(|b| b.0).collect();
            return Err(Error::Config(format!("case `{spec}` is neither a file nor one of {}", names.join(", "))));
        }
        let format = CaseFormat::from_path(path)
            .ok_or_else(|| Error::Config(format!("cannot tell the format of `{spec}` (use .cdf or .m)")))?;
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_text(spec, &text, format)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

//! Static grid description, file I/O, and inertia/damping assignment.
//!
//! Power and susceptance are stored in the units declared by the file
//! (`per_unit` on a `base_mva` base, or `mw`). Damping and inertia are derived
//! from machine ratings in MW, so `d_i` carries MW·s/rad and `m_i` MW·s²/rad.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Net injected power in file units (positive for net generation).
    pub power: f64,
    /// Inertia constant `H` in seconds, used by the realistic scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_constant: Option<f64>,
    /// Damping in MW·s/rad, replacing the rating-based default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub susceptance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitSystem {
    PerUnit { base_mva: f64 },
    Megawatt,
}

impl UnitSystem {
    /// Converts a power in file units to MW.
    pub fn to_mw(self, power: f64) -> f64 {
        match self {
            UnitSystem::PerUnit { base_mva } => power * base_mva,
            UnitSystem::Megawatt => power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Toml,
    Json,
}

impl GridFormat {
    /// Guesses the format from a file extension; anything but `.json` is TOML.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => GridFormat::Json,
            _ => GridFormat::Toml,
        }
    }
}

/// An edge with endpoints resolved to bus indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub susceptance: f64,
}

/// A validated lossless grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNetwork {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    base_frequency_hz: f64,
    units: UnitSystem,
    edges: Vec<Edge>,
    index: HashMap<BusId, usize>,
}

impl GridNetwork {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        base_frequency_hz: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        if !(base_frequency_hz.is_finite() && base_frequency_hz > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "base frequency must be positive, got {base_frequency_hz}"
            )));
        }
        if let UnitSystem::PerUnit { base_mva } = units {
            if !(base_mva.is_finite() && base_mva > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "base_mva must be positive, got {base_mva}"
                )));
            }
        }
        if buses.is_empty() {
            return Err(Error::InvalidGrid("grid has no buses".into()));
        }

        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(Error::DuplicateBus(bus.id));
            }
            if !bus.power.is_finite() {
                return Err(Error::InvalidGrid(format!("bus {}: power is not finite", bus.id)));
            }
            if let Some(h) = bus.inertia_constant {
                if !(h.is_finite() && h >= 0.0) {
                    return Err(Error::InvalidGrid(format!(
                        "bus {}: inertia constant must be >= 0, got {h}",
                        bus.id
                    )));
                }
            }
            if let Some(d) = bus.damping_override {
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::InvalidGrid(format!(
                        "bus {}: damping override must be > 0, got {d}",
                        bus.id
                    )));
                }
            }
        }

        let mut seen = HashSet::with_capacity(lines.len());
        let mut edges = Vec::with_capacity(lines.len());
        for line in &lines {
            let a = *index.get(&line.from).ok_or(Error::UnknownBus(line.from))?;
            let b = *index.get(&line.to).ok_or(Error::UnknownBus(line.to))?;
            if a == b {
                return Err(Error::InvalidGrid(format!("line {} -> {} is a self-loop", line.from, line.to)));
            }
            if !(line.susceptance.is_finite() && line.susceptance > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "line {} -> {}: susceptance must be > 0, got {}",
                    line.from, line.to, line.susceptance
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGrid(format!(
                    "more than one line between buses {} and {}",
                    line.from, line.to
                )));
            }
            edges.push(Edge {
                a,
                b,
                susceptance: line.susceptance,
            });
        }

        let components = count_components(buses.len(), &edges);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }

        let max_power = buses.iter().fold(0.0f64, |m, b| m.max(b.power.abs()));
        let imbalance = crate::linalg::compensated_sum(buses.iter().map(|b| b.power));
        let tolerance = 1e-9 * max_power;
        if imbalance.abs() > tolerance {
            return Err(Error::PowerImbalance { imbalance, tolerance });
        }

        Ok(Self {
            buses,
            lines,
            base_frequency_hz,
            units,
            edges,
            index,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    pub fn base_frequency_hz(&self) -> f64 {
        self.base_frequency_hz
    }

    /// Nominal angular frequency ω0 in rad/s.
    pub fn base_frequency(&self) -> f64 {
        2.0 * PI * self.base_frequency_hz
    }

    pub fn powers(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.power).collect()
    }

    pub fn bus_ids(&self) -> Vec<BusId> {
        self.buses.iter().map(|b| b.id).collect()
    }

    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn require_index(&self, id: BusId) -> Result<usize> {
        self.index_of(id).ok_or(Error::UnknownBus(id))
    }

    pub fn generator_count(&self) -> usize {
        self.buses.iter().filter(|b| b.kind == BusKind::Generator).count()
    }
}

fn count_components(n: usize, edges: &[Edge]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for e in edges {
        let ra = find(&mut parent, e.a);
        let rb = find(&mut parent, e.b);
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDocument {
    version: u32,
    base_frequency_hz: f64,
    unit_system: UnitTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_mva: Option<f64>,
    buses: Vec<Bus>,
    #[serde(default)]
    lines: Vec<Line>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum UnitTag {
    PerUnit,
    Mw,
}

const FORMAT_VERSION: u32 = 1;

/// Parses and validates a grid document.
pub fn parse_grid(mut source: impl Read, format: GridFormat) -> Result<GridNetwork> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let doc: GridDocument = match format {
        GridFormat::Toml => toml::from_str(&text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(&text, s.start))
                .unwrap_or((0, 0));
            Error::Syntax {
                format: "toml",
                line,
                column,
                message: e.message().to_string(),
            }
        })?,
        GridFormat::Json => serde_json::from_str(&text).map_err(|e| Error::Syntax {
            format: "json",
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?,
    };
    if doc.version != FORMAT_VERSION {
        return Err(Error::InvalidGrid(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            doc.version
        )));
    }
    let units = match (doc.unit_system, doc.base_mva) {
        (UnitTag::PerUnit, Some(base_mva)) => UnitSystem::PerUnit { base_mva },
        (UnitTag::PerUnit, None) => {
            return Err(Error::InvalidGrid("unit_system \"per_unit\" requires base_mva".into()))
        }
        (UnitTag::Mw, None) => UnitSystem::Megawatt,
        (UnitTag::Mw, Some(_)) => {
            return Err(Error::InvalidGrid("base_mva is only valid with unit_system \"per_unit\"".into()))
        }
    };
    GridNetwork::new(doc.buses, doc.lines, doc.base_frequency_hz, units)
}

/// Reads a grid file, choosing the format from its extension.
pub fn load_grid(path: impl AsRef<Path>) -> Result<GridNetwork> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_grid(std::io::BufReader::new(file), GridFormat::from_path(path))
}

/// Writes a grid in the native document format.
pub fn serialize_grid(grid: &GridNetwork, format: GridFormat) -> Result<String> {
    let (unit_system, base_mva) = match grid.units {
        UnitSystem::PerUnit { base_mva } => (UnitTag::PerUnit, Some(base_mva)),
        UnitSystem::Megawatt => (UnitTag::Mw, None),
    };
    let doc = GridDocument {
        version: FORMAT_VERSION,
        base_frequency_hz: grid.base_frequency_hz,
        unit_system,
        base_mva,
        buses: grid.buses.clone(),
        lines: grid.lines.clone(),
    };
    match format {
        GridFormat::Toml => {
            toml::to_string(&doc).map_err(|e| Error::InvalidGrid(format!("cannot serialize: {e}")))
        }
        GridFormat::Json => serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::InvalidGrid(format!("cannot serialize: {e}"))),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// Per-node inertia and damping.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicParams {
    inertia: Vec<f64>,
    damping: Vec<f64>,
    gamma: Option<f64>,
}

/// Relative tolerance for detecting a homogeneous damping-to-inertia ratio.
pub const RATIO_TOLERANCE: f64 = 1e-12;

impl DynamicParams {
    pub fn new(inertia: Vec<f64>, damping: Vec<f64>) -> Result<Self> {
        if inertia.len() != damping.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inertia values for {} damping values",
                inertia.len(),
                damping.len()
            )));
        }
        if inertia.is_empty() {
            return Err(Error::InvalidParameters("no nodes".into()));
        }
        for (i, (&m, &d)) in inertia.iter().zip(&damping).enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "damping at node {i} must be > 0, got {d}"
                )));
            }
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "inertia at node {i} must be >= 0, got {m}"
                )));
            }
        }
        let gamma = detect_ratio(&inertia, &damping);
        Ok(Self {
            inertia,
            damping,
            gamma,
        })
    }

    /// Parameters with `m_i = d_i / gamma`, reporting `gamma` exactly.
    pub fn with_ratio(damping: Vec<f64>, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameters(format!("gamma must be > 0, got {gamma}")));
        }
        let inertia = damping.iter().map(|d| d / gamma).collect();
        let mut params = Self::new(inertia, damping)?;
        params.gamma = Some(gamma);
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.damping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.damping.is_empty()
    }

    pub fn inertia(&self) -> &[f64] {
        &self.inertia
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    /// Homogeneous ratio `d_i / m_i`, if every node has inertia and the ratio is constant.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// `m_i / d_i` when it is the same at every node; zero for a fully inertialess grid.
    pub fn inverse_gamma(&self) -> Option<f64> {
        match self.gamma {
            Some(g) => Some(1.0 / g),
            None if self.inertia.iter().all(|&m| m == 0.0) => Some(0.0),
            None => None,
        }
    }

    pub fn is_inertial(&self, i: usize) -> bool {
        self.inertia[i] > 0.0
    }

    pub fn total_damping(&self) -> f64 {
        crate::linalg::compensated_sum(self.damping.iter().copied())
    }
}

fn detect_ratio(inertia: &[f64], damping: &[f64]) -> Option<f64> {
    if inertia.iter().any(|&m| m <= 0.0) {
        return None;
    }
    let r0 = damping[0] / inertia[0];
    let homogeneous = damping
        .iter()
        .zip(inertia)
        .all(|(d, m)| ((d / m) - r0).abs() <= RATIO_TOLERANCE * r0);
    homogeneous.then_some(r0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParameterScheme {
    /// `m_i = d_i / gamma` at every node.
    HomogeneousRatio { gamma: f64 },
    /// Generators get `m_i = 2 H_i |P_i| / ω0`; loads are inertialess.
    Realistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterOptions {
    /// Damping per unit of rated power, `d_i = alpha |P_i| / ω0`.
    pub alpha: f64,
    /// Damping given to zero-power buses; `None` rejects such buses.
    pub damping_floor: Option<f64>,
}

impl Default for ParameterOptions {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            damping_floor: Some(0.01),
        }
    }
}

/// Derives inertia and damping from bus ratings.
pub fn assign_parameters(
    grid: &GridNetwork,
    scheme: ParameterScheme,
    options: &ParameterOptions,
) -> Result<DynamicParams> {
    let alpha = options.alpha;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameters(format!("alpha must be > 0, got {alpha}")));
    }
    if let Some(floor) = options.damping_floor {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::InvalidParameters(format!("damping floor must be > 0, got {floor}")));
        }
    }
    let omega0 = grid.base_frequency();
    let units = grid.units();

    // Rated power in MW; zero-power buses get the rating that reproduces the floor damping.
    let rating = |bus: &Bus| -> Result<f64> {
        let mw = units.to_mw(bus.power.abs());
        if mw > 0.0 {
            Ok(mw)
        } else if let Some(floor) = options.damping_floor {
            Ok(floor * omega0 / alpha)
        } else {
            Err(Error::ZeroDamping(bus.id))
        }
    };
    let damping_of = |bus: &Bus| -> Result<f64> {
        match bus.damping_override {
            Some(d) => Ok(d),
            None => Ok(alpha * rating(bus)? / omega0),
        }
    };

    let damping = grid.buses().iter().map(damping_of).collect::<Result<Vec<_>>>()?;
    match scheme {
        ParameterScheme::HomogeneousRatio { gamma } => DynamicParams::with_ratio(damping, gamma),
        ParameterScheme::Realistic => {
            let inertia = grid
                .buses()
                .iter()
                .map(|bus| match bus.kind {
                    BusKind::Load => Ok(0.0),
                    BusKind::Generator => {
                        let h = bus.inertia_constant.ok_or(Error::MissingInertia(bus.id))?;
                        if h <= 0.0 {
                            return Err(Error::InvalidParameters(format!(
                                "generator bus {} needs a positive inertia constant",
                                bus.id
                            )));
                        }
                        Ok(2.0 * h * rating(bus)? / omega0)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            DynamicParams::new(inertia, damping)
        }
    }
}

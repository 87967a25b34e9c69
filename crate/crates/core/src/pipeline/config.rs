use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fisher::KarcherOptions;
use crate::gds::PROJECTION_TOL;
use crate::manifold::AngleMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Single-mode nearest neighbour on raw subspaces.
    Msm,
    /// Single-mode nearest neighbour on GDS-projected subspaces.
    Gds,
    /// All selected modes, raw subspaces, plain product distance.
    Pgm,
    /// All selected modes, per-mode GDS projection, plain product distance.
    NmodeGds,
    /// As `NmodeGds` with Fisher-derived mode weights.
    NmodeWgds,
}

impl Method {
    pub fn uses_gds(self) -> bool {
        matches!(self, Method::Gds | Method::NmodeGds | Method::NmodeWgds)
    }

    pub fn single_mode(self) -> bool {
        matches!(self, Method::Msm | Method::Gds)
    }

    pub fn default_weights(self) -> WeightMode {
        match self {
            Method::NmodeWgds => WeightMode::Fisher,
            _ => WeightMode::Uniform,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Msm => "msm",
            Method::Gds => "gds",
            Method::Pgm => "pgm",
            Method::NmodeGds => "nmode-gds",
            Method::NmodeWgds => "nmode-wgds",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "msm" => Method::Msm,
            "gds" => Method::Gds,
            "pgm" => Method::Pgm,
            "nmode-gds" => Method::NmodeGds,
            "nmode-wgds" => Method::NmodeWgds,
            other => return Err(Error::Config(format!("unknown method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Per-mode sweeps, repeated for a fixed number of rounds.
    Coordinate,
    /// Every combination of per-mode ranges.
    Exhaustive,
}

impl FromStr for SearchStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coordinate" => Ok(Self::Coordinate),
            "exhaustive" => Ok(Self::Exhaustive),
            other => Err(Error::Config(format!("unknown search strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classifier {
    /// 1-NN over all training points.
    Nn,
    /// Nearest per-class Karcher-mean point.
    ClassKarcher,
}

impl FromStr for Classifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Self::Nn),
            "class-karcher" => Ok(Self::ClassKarcher),
            other => Err(Error::Config(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Fisher,
    Uniform,
}

impl FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher" => Ok(Self::Fisher),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown weight mode `{other}`"))),
        }
    }
}

impl FromStr for AngleMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "full-spectrum" => Ok(Self::FullSpectrum),
            other => Err(Error::Config(format!("unknown angle metric `{other}`"))),
        }
    }
}

/// Every knob of training and classification. Modes are zero-based here;
/// the text form uses one-based mode numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub method: Method,
    /// Selected modes in order; empty means every mode of the data.
    pub modes: Vec<usize>,
    /// Energy fraction for per-sample subspace dimensions.
    pub energy_mu: f64,
    /// Energy fraction for the per-class subspaces behind the mode Gram
    /// matrices; `None` reuses `energy_mu`.
    pub class_mu: Option<f64>,
    /// Fixed per-mode subspace dimensions, aligned with `modes`.
    pub per_mode_dims: Option<Vec<usize>>,
    /// Canonical angles per mode, aligned with `modes`; default is the
    /// subspace dimension of that mode.
    pub angle_counts: Option<Vec<usize>>,
    /// Upper bound on the GDS start index; `None` means the Gram rank.
    pub gds_alpha_max: Option<usize>,
    /// Also sweep the GDS end index instead of pinning it to the rank.
    pub gds_beta_search: bool,
    pub gds_search: SearchStrategy,
    pub search_rounds: usize,
    pub karcher: KarcherOptions,
    pub classifier: Classifier,
    /// `None` picks the method's default.
    pub weights: Option<WeightMode>,
    pub angle_metric: AngleMetric,
    pub projection_tol: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::NmodeWgds,
            modes: Vec::new(),
            energy_mu: 0.9,
            class_mu: None,
            per_mode_dims: None,
            angle_counts: None,
            gds_alpha_max: None,
            gds_beta_search: false,
            gds_search: SearchStrategy::Coordinate,
            search_rounds: 2,
            karcher: KarcherOptions::default(),
            classifier: Classifier::Nn,
            weights: None,
            angle_metric: AngleMetric::Mean,
            projection_tol: PROJECTION_TOL,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weights.unwrap_or(self.method.default_weights())
    }

    pub fn class_energy(&self) -> f64 {
        self.class_mu.unwrap_or(self.energy_mu)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, mu) in [("mu", self.energy_mu), ("class_mu", self.class_energy())] {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(Error::Config(format!("{name} = {mu} is outside (0, 1]")));
            }
        }
        let mut seen = self.modes.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.modes.len() {
            return Err(Error::Config("modes contain duplicates".into()));
        }
        if self.method.single_mode() && self.modes.len() != 1 {
            return Err(Error::Config(format!(
                "method {} works on exactly one mode, {} selected",
                self.method.as_str(),
                self.modes.len()
            )));
        }
        if self.gds_alpha_max == Some(0) {
            return Err(Error::Config("alpha_max must be at least 1".into()));
        }
        if self.search_rounds == 0 {
            return Err(Error::Config("search needs at least one round".into()));
        }
        if !(self.projection_tol >= 0.0) {
            return Err(Error::Config("projection tolerance must be non-negative".into()));
        }
        if let Some(d) = &self.per_mode_dims {
            if d.contains(&0) {
                return Err(Error::Config("per-mode dimensions must be positive".into()));
            }
        }
        if let Some(a) = &self.angle_counts {
            if a.contains(&0) {
                return Err(Error::Config("angle counts must be positive".into()));
            }
        }
        Ok(())
    }

    /// Applies one `key=value` setting (the config-file and model-file form).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("invalid value `{value}` for `{key}`: {what}"));
        match key.trim() {
            "method" => self.method = value.parse()?,
            "modes" => {
                self.modes = if value == "all" {
                    Vec::new()
                } else {
                    parse_list(value)
                        .map_err(|_| bad("expected comma-separated mode numbers"))?
                        .into_iter()
                        .map(|m| m.checked_sub(1).ok_or_else(|| bad("modes are numbered from 1")))
                        .collect::<Result<_>>()?
                }
            }
            "mu" => self.energy_mu = value.parse().map_err(|_| bad("expected a number"))?,
            "class_mu" => self.class_mu = parse_auto(value, bad)?,
            "dims" => {
                self.per_mode_dims = auto_or(value, |v| parse_list(v).map_err(|_| bad("expected a list")))?
            }
            "angles" => {
                self.angle_counts = auto_or(value, |v| parse_list(v).map_err(|_| bad("expected a list")))?
            }
            "alpha_max" => self.gds_alpha_max = parse_auto(value, bad)?,
            "beta_search" => self.gds_beta_search = value.parse().map_err(|_| bad("expected true/false"))?,
            "search" => self.gds_search = value.parse()?,
            "rounds" => self.search_rounds = value.parse().map_err(|_| bad("expected an integer"))?,
            "karcher_tol" => self.karcher.tol = value.parse().map_err(|_| bad("expected a number"))?,
            "karcher_max_iter" => self.karcher.max_iter = value.parse().map_err(|_| bad("expected an integer"))?,
            "classifier" => self.classifier = value.parse()?,
            "weights" => self.weights = auto_or(value, |v| v.parse())?,
            "angle_metric" => self.angle_metric = value.parse()?,
            "projection_tol" => self.projection_tol = value.parse().map_err(|_| bad("expected a number"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines on top of `self`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Canonical text form; `from_text(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let opt_list = |v: &Option<Vec<usize>>| v.as_ref().map_or("auto".to_string(), |v| list(v));
        let modes = if self.modes.is_empty() {
            "all".to_string()
        } else {
            list(&self.modes.iter().map(|m| m + 1).collect::<Vec<_>>())
        };
        writeln!(f, "method={}", self.method.as_str())?;
        writeln!(f, "modes={modes}")?;
        writeln!(f, "mu={:?}", self.energy_mu)?;
        writeln!(f, "class_mu={}", self.class_mu.map_or("auto".into(), |v| format!("{v:?}")))?;
        writeln!(f, "dims={}", opt_list(&self.per_mode_dims))?;
        writeln!(f, "angles={}", opt_list(&self.angle_counts))?;
        writeln!(f, "alpha_max={}", self.gds_alpha_max.map_or("auto".into(), |v| v.to_string()))?;
        writeln!(f, "beta_search={}", self.gds_beta_search)?;
        writeln!(
            f,
            "search={}",
            match self.gds_search {
                SearchStrategy::Coordinate => "coordinate",
                SearchStrategy::Exhaustive => "exhaustive",
            }
        )?;
        writeln!(f, "rounds={}", self.search_rounds)?;
        writeln!(f, "karcher_tol={:?}", self.karcher.tol)?;
        writeln!(f, "karcher_max_iter={}", self.karcher.max_iter)?;
        writeln!(
            f,
            "classifier={}",
            match self.classifier {
                Classifier::Nn => "nn",
                Classifier::ClassKarcher => "class-karcher",
            }
        )?;
        writeln!(
            f,
            "weights={}",
            match self.weights {
                None => "auto",
                Some(WeightMode::Fisher) => "fisher",
                Some(WeightMode::Uniform) => "uniform",
            }
        )?;
        writeln!(f, "angle_metric={}", self.angle_metric.as_str())?;
        writeln!(f, "projection_tol={:?}", self.projection_tol)?;
        writeln!(f, "seed={}", self.seed)
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<usize>, std::num::ParseIntError> {
    v.split(',').map(|s| s.trim().parse()).collect()
}

fn auto_or<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn parse_auto<T: FromStr>(v: &str, bad: impl Fn(&str) -> Error) -> Result<Option<T>> {
    auto_or(v, |v| v.parse().map_err(|_| bad("expected a number or `auto`")))
}

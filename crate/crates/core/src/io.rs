//! Run configuration, CSV and SVG output.
//!
//! The configuration is line-oriented text:
//!
//! ```text
//! # comment
//! [network]
//! gamma1 = 1
//! delta_in = optimal
//! ```
//!
//! Every key belongs to a section, and unknown sections or keys are errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{MemoryNodeSpec, NetworkSpec, RateParams, SignalModeSpec, SpectralShape};
use crate::oracle::{OracleOptions, Scheme};
use crate::spectral::{optimal_broadening, processing_dispersion};
use crate::transfer::TransferConfig;

/// Renders a number with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Inhomogeneous width, fixed or chosen by the second matching condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Broadening {
    Value(f64),
    Optimal,
}

/// How the memory coupling is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Absorption {
    /// `Gamma_tot = gamma1 + gamma2`.
    Matched,
    GammaTot(f64),
    Omega0(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSection {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma21: f64,
    pub delta_in: Broadening,
    pub absorption: Absorption,
    pub processors: usize,
    pub coupling_ratio: f64,
    pub detuning: f64,
    pub rebalance: bool,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            gamma1: 1.0,
            gamma2: 0.0,
            gamma21: 0.0,
            delta_in: Broadening::Optimal,
            absorption: Absorption::Matched,
            processors: 0,
            coupling_ratio: 0.25,
            detuning: 10.0 / 3.0,
            rebalance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSection {
    pub shape: SpectralShape,
    pub width: f64,
    /// First arrival time; `None` means `7 / width`.
    pub arrival: Option<f64>,
    pub count: usize,
    /// Spacing between arrivals; `None` means `20 / width`.
    pub spacing: Option<f64>,
    pub carrier: f64,
    /// Detuning flip time; `None` means twice the last arrival.
    pub tau: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            shape: SpectralShape::Lorentzian,
            width: 0.05,
            arrival: None,
            count: 1,
            spacing: None,
            carrier: 0.0,
            tau: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSection {
    pub delta_in: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self {
            delta_in: 6.0,
            omega0: 1.0,
            omega1: 0.3,
            level: 0.9999,
            lo: 0.2,
            hi: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleRun {
    /// Absorption only.
    Storage,
    /// Absorption, detuning flip at `tau`, echo.
    Echo,
    /// Memory-to-processor transfer.
    Transfer,
    /// Transfer followed by the time-reversal map.
    Reversal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSection {
    pub run: OracleRun,
    pub atoms: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    /// Run length; `None` picks one from the signal or transfer window.
    pub t_end: Option<f64>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            run: OracleRun::Echo,
            atoms: 4001,
            dt: 0.05,
            scheme: Scheme::Collocation,
            record_every: 1,
            t_end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchSection {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for MatchSection {
    fn default() -> Self {
        Self {
            level: crate::sweep::DEFAULT_FLATNESS_LEVEL,
            lo: 0.05,
            hi: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvSvg,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "csv+svg" => Ok(Self::CsvSvg),
            _ => Err(Error::Config(format!("unknown format '{s}', expected csv or csv+svg"))),
        }
    }
}

impl OutputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::CsvSvg => "csv+svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: String,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub network: NetworkSection,
    pub signal: SignalSection,
    pub transfer: TransferSection,
    pub oracle: OracleSection,
    pub matching: MatchSection,
    pub output: OutputSection,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn opt_f64(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

fn show_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "auto".to_string(), format_number)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let name = format!("{section}.{key}");
        let k = name.as_str();
        match (section, key) {
            ("network", "gamma1") => self.network.gamma1 = parse_f64(k, v)?,
            ("network", "gamma2") => self.network.gamma2 = parse_f64(k, v)?,
            ("network", "gamma21") => self.network.gamma21 = parse_f64(k, v)?,
            ("network", "delta_in") => {
                self.network.delta_in = if v == "optimal" {
                    Broadening::Optimal
                } else {
                    Broadening::Value(parse_f64(k, v)?)
                }
            }
            ("network", "gamma_tot") => {
                self.network.absorption = if v == "matched" {
                    Absorption::Matched
                } else {
                    Absorption::GammaTot(parse_f64(k, v)?)
                }
            }
            ("network", "omega0") => self.network.absorption = Absorption::Omega0(parse_f64(k, v)?),
            ("network", "processors") => self.network.processors = parse_usize(k, v)?,
            ("network", "coupling_ratio") => self.network.coupling_ratio = parse_f64(k, v)?,
            ("network", "detuning") => self.network.detuning = parse_f64(k, v)?,
            ("network", "rebalance") => self.network.rebalance = parse_bool(k, v)?,
            ("signal", "shape") => {
                self.signal.shape = match v {
                    "lorentzian" => SpectralShape::Lorentzian,
                    "gaussian" => SpectralShape::Gaussian,
                    _ => return Err(Error::Config(format!("{k}: expected lorentzian or gaussian, got '{v}'"))),
                }
            }
            ("signal", "width") => self.signal.width = parse_f64(k, v)?,
            ("signal", "arrival") => self.signal.arrival = opt_f64(k, v)?,
            ("signal", "count") => self.signal.count = parse_usize(k, v)?,
            ("signal", "spacing") => self.signal.spacing = opt_f64(k, v)?,
            ("signal", "carrier") => self.signal.carrier = parse_f64(k, v)?,
            ("signal", "tau") => self.signal.tau = opt_f64(k, v)?,
            ("transfer", "delta_in") => self.transfer.delta_in = parse_f64(k, v)?,
            ("transfer", "omega0") => self.transfer.omega0 = parse_f64(k, v)?,
            ("transfer", "omega1") => self.transfer.omega1 = parse_f64(k, v)?,
            ("transfer", "level") => self.transfer.level = parse_f64(k, v)?,
            ("transfer", "lo") => self.transfer.lo = parse_f64(k, v)?,
            ("transfer", "hi") => self.transfer.hi = parse_f64(k, v)?,
            ("oracle", "run") => {
                self.oracle.run = match v {
                    "storage" => OracleRun::Storage,
                    "echo" => OracleRun::Echo,
                    "transfer" => OracleRun::Transfer,
                    "reversal" => OracleRun::Reversal,
                    _ => {
                        return Err(Error::Config(format!(
                            "{k}: expected storage, echo, transfer or reversal, got '{v}'"
                        )))
                    }
                }
            }
            ("oracle", "atoms") => self.oracle.atoms = parse_usize(k, v)?,
            ("oracle", "dt") => self.oracle.dt = parse_f64(k, v)?,
            ("oracle", "scheme") => {
                self.oracle.scheme = match v {
                    "collocation" => Scheme::Collocation,
                    "etdrk4" => Scheme::Etdrk4,
                    _ => return Err(Error::Config(format!("{k}: expected collocation or etdrk4, got '{v}'"))),
                }
            }
            ("oracle", "record_every") => self.oracle.record_every = parse_usize(k, v)?,
            ("oracle", "t_end") => self.oracle.t_end = opt_f64(k, v)?,
            ("match", "level") => self.matching.level = parse_f64(k, v)?,
            ("match", "lo") => self.matching.lo = parse_f64(k, v)?,
            ("match", "hi") => self.matching.hi = parse_f64(k, v)?,
            ("output", "dir") => self.output.dir = v.to_string(),
            ("output", "format") => self.output.format = v.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{k}'"))),
        }
        Ok(())
    }

    /// Checks ranges that the parser cannot.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        let n = &self.network;
        if !(n.gamma1 > 0.0) {
            return bad("network.gamma1 must be positive");
        }
        if n.gamma2 < 0.0 || n.gamma21 < 0.0 {
            return bad("network loss rates must be non-negative");
        }
        if let Broadening::Value(d) = n.delta_in {
            if !(d > 0.0) {
                return bad("network.delta_in must be positive");
            }
        }
        match n.absorption {
            Absorption::GammaTot(g) if g < 0.0 => return bad("network.gamma_tot must be non-negative"),
            Absorption::Omega0(o) if o < 0.0 => return bad("network.omega0 must be non-negative"),
            Absorption::Omega0(_) if n.delta_in == Broadening::Optimal => {
                return bad("network.delta_in = optimal needs gamma_tot, not omega0")
            }
            _ => {}
        }
        if !(self.signal.width > 0.0) {
            return bad("signal.width must be positive");
        }
        if self.signal.count == 0 {
            return bad("signal.count must be at least 1");
        }
        let t = &self.transfer;
        if !(t.delta_in > 0.0) || t.omega0 < 0.0 || t.omega1 < 0.0 {
            return bad("transfer.delta_in must be positive and couplings non-negative");
        }
        if !(t.lo > 0.0 && t.lo < t.hi) {
            return bad("transfer.lo and transfer.hi must satisfy 0 < lo < hi");
        }
        if !(self.oracle.dt > 0.0) || self.oracle.record_every == 0 {
            return bad("oracle.dt and oracle.record_every must be positive");
        }
        if self.oracle.atoms < 3 || self.oracle.atoms.is_multiple_of(2) {
            return bad("oracle.atoms must be odd and at least 3");
        }
        if !(self.matching.lo > 0.0 && self.matching.lo <= self.matching.hi) {
            return bad("match.lo and match.hi must satisfy 0 < lo <= hi");
        }
        if !(self.matching.level > 0.0 && self.matching.level < 1.0) {
            return bad("match.level must lie in (0, 1)");
        }
        Ok(())
    }

    /// The memory network described by `[network]`, with `oracle.atoms` atoms.
    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let n = &self.network;
        let rates = RateParams::new(n.gamma1, n.gamma2, n.gamma21);
        let gamma_tot = match n.absorption {
            Absorption::Matched => Some(rates.cavity_loss()),
            Absorption::GammaTot(g) => Some(g),
            Absorption::Omega0(_) => None,
        };
        let start = match n.delta_in {
            Broadening::Value(d) => d,
            Broadening::Optimal => 1.0,
        };
        let memory = match (gamma_tot, n.absorption) {
            (Some(g), _) => MemoryNodeSpec::with_absorption_rate(start, g, n.gamma21, self.oracle.atoms),
            (None, Absorption::Omega0(o)) => MemoryNodeSpec::new(start, o, self.oracle.atoms),
            (None, _) => unreachable!("absorption without gamma_tot is omega0"),
        };
        let mut net = NetworkSpec::symmetric(rates, memory, n.processors, n.coupling_ratio * n.detuning, n.detuning)
            .map_err(|e| Error::Config(e.to_string()))?;
        if n.rebalance {
            net = net.rebalanced()?;
        }
        if n.delta_in == Broadening::Optimal {
            let opt = self.optimal_delta_in(&net)?;
            net = net.with_delta_in_at_fixed_absorption(opt);
        }
        Ok(net)
    }

    /// Optimal broadening computed from the configured absorption rate
    /// rather than the one recovered from `omega0`, which carries rounding.
    pub fn optimal_delta_in(&self, net: &NetworkSpec) -> Result<f64> {
        let target = match self.network.absorption {
            Absorption::Matched => net.rates.cavity_loss(),
            Absorption::GammaTot(g) => g,
            Absorption::Omega0(_) => return optimal_broadening(net),
        };
        Ok(target / (2.0 * processing_dispersion(net, 0.0)?.pi0))
    }

    /// Signal modes of `[signal]`, in arrival order.
    pub fn signal_modes(&self) -> Vec<SignalModeSpec> {
        let s = &self.signal;
        let first = s.arrival.unwrap_or(7.0 / s.width);
        let spacing = s.spacing.unwrap_or(20.0 / s.width);
        (0..s.count)
            .map(|k| {
                let t = first + k as f64 * spacing;
                let mode = match s.shape {
                    SpectralShape::Lorentzian => SignalModeSpec::lorentzian(t, s.width),
                    SpectralShape::Gaussian => SignalModeSpec::gaussian(t, s.width),
                };
                mode.with_carrier(s.carrier)
            })
            .collect()
    }

    /// Detuning flip time.
    pub fn flip_time(&self) -> f64 {
        let last = self.signal_modes().last().map_or(0.0, |m| m.arrival_time);
        self.signal.tau.unwrap_or(2.0 * last)
    }

    pub fn transfer_config(&self) -> Result<TransferConfig> {
        let t = &self.transfer;
        TransferConfig::new(t.delta_in, t.omega0, t.omega1)
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            dt: self.oracle.dt,
            scheme: self.oracle.scheme,
            record_every: self.oracle.record_every,
        }
    }

    /// Canonical text form; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = &self.network;
        let s = &self.signal;
        let t = &self.transfer;
        let o = &self.oracle;
        let m = &self.matching;
        let mut line = |k: &str, v: String| {
            if k.starts_with('[') {
                let _ = writeln!(out, "{k}");
            } else {
                let _ = writeln!(out, "{k} = {v}");
            }
        };
        line("[network]", String::new());
        line("gamma1", format_number(n.gamma1));
        line("gamma2", format_number(n.gamma2));
        line("gamma21", format_number(n.gamma21));
        line(
            "delta_in",
            match n.delta_in {
                Broadening::Optimal => "optimal".into(),
                Broadening::Value(d) => format_number(d),
            },
        );
        match n.absorption {
            Absorption::Matched => line("gamma_tot", "matched".into()),
            Absorption::GammaTot(g) => line("gamma_tot", format_number(g)),
            Absorption::Omega0(w) => line("omega0", format_number(w)),
        }
        line("processors", n.processors.to_string());
        line("coupling_ratio", format_number(n.coupling_ratio));
        line("detuning", format_number(n.detuning));
        line("rebalance", n.rebalance.to_string());
        line("[signal]", String::new());
        line(
            "shape",
            match s.shape {
                SpectralShape::Lorentzian => "lorentzian".into(),
                SpectralShape::Gaussian => "gaussian".into(),
            },
        );
        line("width", format_number(s.width));
        line("arrival", show_opt(s.arrival));
        line("count", s.count.to_string());
        line("spacing", show_opt(s.spacing));
        line("carrier", format_number(s.carrier));
        line("tau", show_opt(s.tau));
        line("[transfer]", String::new());
        line("delta_in", format_number(t.delta_in));
        line("omega0", format_number(t.omega0));
        line("omega1", format_number(t.omega1));
        line("level", format_number(t.level));
        line("lo", format_number(t.lo));
        line("hi", format_number(t.hi));
        line("[oracle]", String::new());
        line(
            "run",
            match o.run {
                OracleRun::Storage => "storage".into(),
                OracleRun::Echo => "echo".into(),
                OracleRun::Transfer => "transfer".into(),
                OracleRun::Reversal => "reversal".into(),
            },
        );
        line("atoms", o.atoms.to_string());
        line("dt", format_number(o.dt));
        line(
            "scheme",
            match o.scheme {
                Scheme::Collocation => "collocation".into(),
                Scheme::Etdrk4 => "etdrk4".into(),
            },
        );
        line("record_every", o.record_every.to_string());
        line("t_end", show_opt(o.t_end));
        line("[match]", String::new());
        line("level", format_number(m.level));
        line("lo", format_number(m.lo));
        line("hi", format_number(m.hi));
        line("[output]", String::new());
        line("dir", self.output.dir.clone());
        line("format", self.output.format.as_str().into());
        out
    }
}

const SECTIONS: [&str; 6] = ["network", "signal", "transfer", "oracle", "match", "output"];

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen = BTreeSet::new();
        for (no, raw) in text.lines().enumerate() {
            let at = |msg: String| Error::Config(format!("line {}: {msg}", no + 1));
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| at(format!("key '{key}' outside a section")))?;
            let full = format!("{sec}.{key}");
            // omega0 and gamma_tot set the same quantity.
            let slot = if sec == "network" && (key == "omega0" || key == "gamma_tot") {
                "network.absorption".to_string()
            } else {
                full.clone()
            };
            if !seen.insert(slot) {
                return Err(at(format!("'{full}' given twice")));
            }
            cfg.set(sec, key, value).map_err(|e| match e {
                Error::Config(msg) => at(msg),
                other => at(other.to_string()),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Header plus rows, written as comma-separated text with LF line ends.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| format_number(x)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn from_sweep(result: &crate::sweep::SweepResult) -> Self {
        let mut t = Self::new(result.columns.iter().map(|c| c.to_string()).collect());
        for r in &result.rows {
            t.push_numbers(r);
        }
        t
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// One polyline of an SVG plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A bare line plot with axes, tick labels and a legend.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = margin,
        b = h - margin,
        r = w - margin
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            h - margin + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            margin - 4.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" stroke="{colour}" fill="none" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let ly = margin + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" fill="{colour}" text-anchor="end">{}</text>"#,
            w - margin - 4.0,
            ly,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(x: f64) -> String {
    format!("{x:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_17_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, 6.02214076e23] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn parses_sections_and_comments() {
        let cfg: RunConfig = "# memory\n[network]\ngamma1 = 2 # rate\ndelta_in = 0.7\n[oracle]\nrun = storage\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.network.gamma1, 2.0);
        assert_eq!(cfg.network.delta_in, Broadening::Value(0.7));
        assert_eq!(cfg.oracle.run, OracleRun::Storage);
    }

    #[test]
    fn rejects_unknown_and_malformed_input() {
        for bad in [
            "[network]\ngama1 = 1\n",
            "[nework]\n",
            "gamma1 = 1\n",
            "[network]\ngamma1 1\n",
            "[network]\ngamma1 = fast\n",
            "[network]\ngamma1 = 1\ngamma1 = 2\n",
            "[network]\nomega0 = 1\ngamma_tot = 1\n",
            "[network]\ngamma1 = 0\n",
            "[oracle]\natoms = 4000\n",
        ] {
            assert!(matches!(bad.parse::<RunConfig>(), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.network.processors = 4;
        cfg.network.absorption = Absorption::GammaTot(0.5);
        cfg.signal.tau = Some(300.0);
        cfg.oracle.scheme = Scheme::Etdrk4;
        cfg.output.format = OutputFormat::CsvSvg;
        let again: RunConfig = cfg.to_text().parse().unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text(), cfg.to_text());
    }

    #[test]
    fn default_network_is_matched_at_the_optimum() {
        let cfg: RunConfig = "[network]\nprocessors = 4\n".parse().unwrap();
        let net = cfg.network_spec().unwrap();
        assert!((net.memory.delta_in - 0.4).abs() < 1e-12);
        assert!((net.derived().gamma_tot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_uses_lf_and_commas() {
        let mut t = CsvTable::new(vec!["nu [gamma1]".into(), "Z [1]".into()]);
        t.push_numbers(&[0.5, 1.0]);
        assert_eq!(t.render(), "nu [gamma1],Z [1]\n5.0000000000000000e-1,1.0000000000000000e0\n");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = svg_line_plot(
            "t<1",
            "x",
            "y",
            &[Series {
                name: "a&b".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
            }],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("t&lt;1") && s.contains("a&amp;b"));
    }
}

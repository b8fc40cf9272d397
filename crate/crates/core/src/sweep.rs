//! Parameter grids, figure datasets and the 1-D searches over them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{NetworkSpec, RateParams};
use crate::spectral::{bandwidth_exact, optimal_broadening, spectral_efficiency};
use crate::transfer::{transfer_efficiency, SelfMode, TransferConfig};

/// Points per axis unless a grid says otherwise.
pub const DEFAULT_POINTS: usize = 201;

/// Absolute tolerance of [`find_threshold`] on the swept parameter.
pub const THRESHOLD_TOL: f64 = 1e-3;

/// Level used by [`optimize_flatness`] when none is given.
pub const DEFAULT_FLATNESS_LEVEL: f64 = 0.9999;

/// Idle processing-node detuning of the figure-1 family, `gamma1 / Delta = 0.3`.
pub const FIG1_DETUNING: f64 = 10.0 / 3.0;

/// Node counts shown in every figure-1 panel.
pub const FIG1_NODE_COUNTS: [usize; 5] = [0, 2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn linear(name: &str, unit: &str, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(name, unit, min, max, count, AxisScale::Linear)
    }

    pub fn new(name: &str, unit: &str, min: f64, max: f64, count: usize, scale: AxisScale) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid(name, "an axis needs at least two points"));
        }
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::invalid(name, format!("need finite min < max, got [{min}, {max}]")));
        }
        if scale == AxisScale::Log && !(min > 0.0) {
            return Err(Error::invalid(name, "a log axis must be positive"));
        }
        Ok(Self {
            name: name.to_string(),
            unit: unit.to_string(),
            min,
            max,
            count,
            scale,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    return self.max;
                }
                let u = i as f64 / last;
                match self.scale {
                    AxisScale::Linear => self.min + u * (self.max - self.min),
                    AxisScale::Log => (self.min.ln() + u * (self.max / self.min).ln()).exp(),
                }
            })
            .collect()
    }

    pub fn column(&self) -> Column {
        Column::new(&self.name, &self.unit)
    }
}

/// A column header: name plus unit, rendered as `name [unit]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.name, self.unit)
    }
}

/// A one-axis sweep with a named scalar metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: Axis,
    pub fixed: Vec<(String, f64)>,
    pub metric: Column,
}

impl SweepGrid {
    /// Evaluates `f` at every axis point in parallel; rows keep axis order.
    pub fn run<F>(&self, label: &str, f: F) -> Result<SweepResult>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let points = self.axis.points();
        let rows = points
            .par_iter()
            .map(|&x| Ok(vec![x, f(x)?]))
            .collect::<Result<Vec<_>>>()?;
        let metadata = self
            .fixed
            .iter()
            .map(|(k, v)| (k.clone(), format!("{v:.17e}")))
            .collect();
        Ok(SweepResult::new(
            label,
            vec![self.axis.column(), self.metric.clone()],
            rows,
            metadata,
        ))
    }
}

/// Tabular sweep output.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub label: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    /// Fixed parameters, in insertion order.
    pub metadata: Vec<(String, String)>,
    /// SHA-256 over label, columns and metadata.
    pub config_hash: String,
}

impl SweepResult {
    pub fn new(label: &str, columns: Vec<Column>, rows: Vec<Vec<f64>>, metadata: Vec<(String, String)>) -> Self {
        let mut h = Sha256::new();
        h.update(label.as_bytes());
        for c in &columns {
            h.update(b"\n");
            h.update(c.to_string().as_bytes());
        }
        for (k, v) in &metadata {
            h.update(format!("\n{k}={v}").as_bytes());
        }
        Self {
            label: label.to_string(),
            columns,
            rows,
            metadata,
            config_hash: hex::encode(h.finalize()),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 8] = [
        Self::Fig1a,
        Self::Fig1b,
        Self::Fig1c,
        Self::Fig2,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig4,
        Self::Fig5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig1a => "fig1a",
            Self::Fig1b => "fig1b",
            Self::Fig1c => "fig1c",
            Self::Fig2 => "fig2",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
        }
    }

    /// Processing-node coupling over detuning for the figure-1 panels.
    pub fn coupling_ratio(self) -> Option<f64> {
        match self {
            Self::Fig1a => Some(0.4),
            Self::Fig1b => Some(0.25),
            Self::Fig1c => Some(0.1),
            _ => None,
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid("figure", format!("unknown figure '{s}'")))
    }
}

/// Matched symmetric network with `m` idle nodes at `+-FIG1_DETUNING`,
/// broadened to its own optimum.
pub fn fig1_network(m: usize, ratio: f64) -> Result<NetworkSpec> {
    let rates = RateParams::lossless(1.0);
    let base = NetworkSpec::symmetric(
        rates,
        crate::model::MemoryNodeSpec::new(1.0, 0.0, 1),
        m,
        ratio * FIG1_DETUNING,
        FIG1_DETUNING,
    )?;
    let net = NetworkSpec::matched(rates, 1.0, 1, base.processors);
    let opt = optimal_broadening(&net)?;
    Ok(net.with_delta_in_at_fixed_absorption(opt))
}

fn z_squared_table(label: &str, nets: &[(String, NetworkSpec)], nu: &Axis, metadata: Vec<(String, String)>) -> SweepResult {
    let mut columns = vec![nu.column()];
    columns.extend(nets.iter().map(|(name, _)| Column::new(name, "1")));
    let rows = nu
        .points()
        .par_iter()
        .map(|&x| {
            let mut row = vec![x];
            row.extend(nets.iter().map(|(_, net)| spectral_efficiency(net, x).powi(2)));
            row
        })
        .collect();
    SweepResult::new(label, columns, rows, metadata)
}

fn transfer_reference() -> (f64, f64) {
    let r = TransferConfig::reference(1.0);
    (r.omega0, r.omega1)
}

fn q1_table(label: &str, axis: &Axis, with_deficit: bool) -> Result<SweepResult> {
    let (o0, o1) = transfer_reference();
    let mut columns = vec![axis.column(), Column::new("Q1", "1")];
    if with_deficit {
        columns.push(Column::new("one_minus_Q1", "1"));
    }
    let rows = axis
        .points()
        .par_iter()
        .map(|&d| {
            let q = transfer_efficiency(&TransferConfig::new(d, o0, o1)?)?.q1;
            let mut row = vec![d, q];
            if with_deficit {
                row.push(1.0 - q);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = vec![
        ("omega0".to_string(), format!("{o0:.17e}")),
        ("omega1".to_string(), format!("{o1:.17e}")),
    ];
    Ok(SweepResult::new(label, columns, rows, metadata))
}

fn phi_surface(label: &str, din: &Axis, tau: &Axis) -> Result<SweepResult> {
    let (o0, o1) = transfer_reference();
    let taus = tau.points();
    let blocks = din
        .points()
        .par_iter()
        .map(|&d| {
            let mode = SelfMode::new(&TransferConfig::new(d, o0, o1)?)?;
            Ok(taus.iter().map(|&t| vec![d, t, mode.phi(t)]).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = vec![
        ("omega0".to_string(), format!("{o0:.17e}")),
        ("omega1".to_string(), format!("{o1:.17e}")),
    ];
    Ok(SweepResult::new(
        label,
        vec![din.column(), tau.column(), Column::new("phi", "1")],
        blocks.into_iter().flatten().collect(),
        metadata,
    ))
}

/// Regenerates the data behind one figure.
///
/// Spectral figures are in units of `gamma1`, transfer figures in units of `Omega0`.
pub fn figure_dataset(which: FigureId) -> Result<SweepResult> {
    let label = which.as_str();
    match which {
        FigureId::Fig1a | FigureId::Fig1b | FigureId::Fig1c => {
            let ratio = which.coupling_ratio().expect("figure-1 panel");
            let nets = FIG1_NODE_COUNTS
                .iter()
                .map(|&m| Ok((format!("Z2_M{m}"), fig1_network(m, ratio)?)))
                .collect::<Result<Vec<_>>>()?;
            let nu = Axis::linear("nu", "gamma1", -1.5, 1.5, DEFAULT_POINTS)?;
            let mut meta = vec![
                ("coupling_ratio".to_string(), format!("{ratio:.17e}")),
                ("detuning".to_string(), format!("{FIG1_DETUNING:.17e}")),
            ];
            for (name, net) in &nets {
                meta.push((format!("delta_in_{name}"), format!("{:.17e}", net.memory.delta_in)));
            }
            Ok(z_squared_table(label, &nets, &nu, meta))
        }
        FigureId::Fig2 => {
            let base = NetworkSpec::matched(RateParams::lossless(1.0), 1.0, 1, vec![]);
            let opt = optimal_broadening(&base)?;
            let nets = [0.25, 0.5, 1.0, 2.0, 4.0]
                .iter()
                .map(|&f| {
                    let net = base.with_delta_in_at_fixed_absorption(f * opt);
                    (format!("Z2_din{}", f * opt), net)
                })
                .collect::<Vec<_>>();
            let nu = Axis::linear("nu", "gamma1", -3.0, 3.0, DEFAULT_POINTS)?;
            let meta = vec![("delta_opt".to_string(), format!("{opt:.17e}"))];
            Ok(z_squared_table(label, &nets, &nu, meta))
        }
        FigureId::Fig3a | FigureId::Fig3b => {
            let (lo, hi) = if which == FigureId::Fig3a { (0.2, 1.8) } else { (1.8, 10.0) };
            let din = Axis::linear("delta_in", "Omega0", lo, hi, DEFAULT_POINTS)?;
            let tau = Axis::linear("tau", "1/Omega0", 0.0, 20.0, DEFAULT_POINTS)?;
            phi_surface(label, &din, &tau)
        }
        FigureId::Fig4 => q1_table(label, &Axis::linear("delta_in", "Omega0", 0.2, 10.0, DEFAULT_POINTS)?, false),
        FigureId::Fig5 => q1_table(label, &Axis::linear("delta_in", "Omega0", 4.0, 10.0, DEFAULT_POINTS)?, true),
    }
}

/// Locates where a monotone curve first reaches `level` along `axis`.
///
/// The axis points bracket the crossing, then bisection on `f` narrows it
/// to `tol`. A level already met at the lower bound returns the bound.
pub fn find_threshold<F>(f: F, axis: &Axis, level: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let xs = axis.points();
    let values = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    if values[0] >= level {
        return Ok(xs[0]);
    }
    let i = values.iter().position(|&v| v >= level).ok_or(Error::NoCrossing {
        level,
        lo: axis.min,
        hi: axis.max,
    })?;
    let (mut lo, mut hi) = (xs[i - 1], xs[i]);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Broadening at which the transfer efficiency reaches `level`.
pub fn transfer_threshold(omega0: f64, omega1: f64, level: f64, lo: f64, hi: f64) -> Result<f64> {
    let axis = Axis::linear("delta_in", "Omega0", lo, hi, DEFAULT_POINTS)?;
    find_threshold(
        |d| Ok(transfer_efficiency(&TransferConfig::new(d, omega0, omega1)?)?.q1),
        &axis,
        level,
        THRESHOLD_TOL,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessOptimum {
    pub delta_in: f64,
    pub bandwidth: f64,
    /// More than one local maximum was seen on the coarse scan.
    pub multimodal: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizes the bandwidth at `level` over `delta_in` in `[lo, hi]`,
/// keeping the absorption rate of `template` fixed.
pub fn optimize_flatness(template: &NetworkSpec, lo: f64, hi: f64, level: f64) -> Result<FlatnessOptimum> {
    if !(lo > 0.0) || !(hi >= lo) {
        return Err(Error::invalid("search range", format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let objective = |d: f64| -> f64 {
        bandwidth_exact(&template.with_delta_in_at_fixed_absorption(d), level).unwrap_or(f64::NEG_INFINITY)
    };
    if lo == hi {
        let bw = objective(lo);
        return Ok(FlatnessOptimum {
            delta_in: lo,
            bandwidth: bw.max(0.0),
            multimodal: false,
        });
    }
    let axis = Axis::linear("delta_in", "gamma1", lo, hi, DEFAULT_POINTS)?;
    let xs = axis.points();
    let ys: Vec<f64> = xs.par_iter().map(|&x| objective(x)).collect();
    let best = (0..ys.len())
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]))
        .expect("axis has points");
    if ys[best] == f64::NEG_INFINITY {
        return Err(Error::LevelNotAttained { level, peak: 0.0 });
    }
    let peaks = (1..ys.len() - 1)
        .filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] && ys[i].is_finite())
        .count();
    let (mut a, mut b) = (xs[best.saturating_sub(1)], xs[(best + 1).min(xs.len() - 1)]);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > 1e-10 * (1.0 + a.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d);
        }
    }
    let x = 0.5 * (a + b);
    let (delta_in, bandwidth) = if objective(x) >= ys[best] {
        (x, objective(x))
    } else {
        (xs[best], ys[best])
    };
    Ok(FlatnessOptimum {
        delta_in,
        bandwidth,
        multimodal: peaks > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_points_hit_both_ends() {
        let a = Axis::linear("x", "1", 0.2, 10.0, 201).unwrap();
        let p = a.points();
        assert_eq!(p.len(), 201);
        assert_eq!(p[0], 0.2);
        assert_eq!(p[200], 10.0);
        let l = Axis::new("x", "1", 1e-3, 1e-2, 3, AxisScale::Log).unwrap();
        assert!((l.points()[1] - 10f64.powf(-2.5)).abs() < 1e-15);
    }

    #[test]
    fn axis_invariants() {
        assert!(Axis::linear("x", "1", 0.0, 1.0, 1).is_err());
        assert!(Axis::linear("x", "1", 1.0, 1.0, 5).is_err());
        assert!(Axis::new("x", "1", 0.0, 1.0, 5, AxisScale::Log).is_err());
    }

    #[test]
    fn figure_ids_round_trip() {
        for id in FigureId::ALL {
            assert_eq!(id.as_str().parse::<FigureId>().unwrap(), id);
        }
        assert!("fig6".parse::<FigureId>().is_err());
    }

    #[test]
    fn sweep_rows_follow_axis_order() {
        let grid = SweepGrid {
            axis: Axis::linear("x", "1", 0.0, 1.0, 101).unwrap(),
            fixed: vec![],
            metric: Column::new("y", "1"),
        };
        let r = grid.run("sq", |x| Ok(x * x)).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[1][0] > w[0][0]);
        }
        assert_eq!(r.column("y").unwrap()[100], 1.0);
    }

    #[test]
    fn hash_depends_on_metadata() {
        let a = SweepResult::new("f", vec![], vec![], vec![("k".into(), "1".into())]);
        let b = SweepResult::new("f", vec![], vec![], vec![("k".into(), "2".into())]);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn threshold_on_a_line() {
        let axis = Axis::linear("x", "1", 0.0, 1.0, 11).unwrap();
        let x = find_threshold(Ok, &axis, 0.437, 1e-6).unwrap();
        assert!((x - 0.437).abs() < 1e-6);
        assert_eq!(find_threshold(Ok, &axis, 0.0, 1e-6).unwrap(), 0.0);
        assert!(matches!(
            find_threshold(Ok, &axis, 2.0, 1e-6),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn degenerate_flatness_range_returns_the_point() {
        let net = NetworkSpec::matched(RateParams::lossless(1.0), 0.5, 1, vec![]);
        let opt = optimize_flatness(&net, 0.5, 0.5, DEFAULT_FLATNESS_LEVEL).unwrap();
        assert_eq!(opt.delta_in, 0.5);
    }
}

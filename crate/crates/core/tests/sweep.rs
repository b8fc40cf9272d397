mod common;

use common::*;
use echo_qram::io::CsvTable;
use echo_qram::spectral::optimal_broadening;
use echo_qram::sweep::{
    fig1_network, figure_dataset, find_threshold, optimize_flatness, transfer_threshold, Axis, Column, FigureId,
    SweepGrid, FIG1_NODE_COUNTS,
};
use echo_qram::{Error, NetworkSpec, RateParams};
use num_complex::Complex64;

#[test]
fn figure_one_curves_peak_at_unity_and_narrow_with_node_count() {
    for id in [FigureId::Fig1a, FigureId::Fig1b, FigureId::Fig1c] {
        let data = figure_dataset(id).unwrap();
        assert_eq!(data.rows.len(), 201);
        let nu = data.column("nu").unwrap();
        let centre = nu.iter().position(|x| x.abs() < 1e-12).unwrap();
        for m in FIG1_NODE_COUNTS {
            let z2 = data.column(&format!("Z2_M{m}")).unwrap();
            assert!((z2[centre] - 1.0).abs() < 1e-12, "{id} M={m}");
            assert!(z2.iter().all(|&z| (0.0..=1.0 + 1e-12).contains(&z)));
        }
    }
    // Away from the centre, more idle nodes mean a narrower response.
    let data = figure_dataset(FigureId::Fig1a).unwrap();
    let i = data.column("nu").unwrap().iter().position(|x| (x - 0.3).abs() < 1e-9).unwrap();
    let at: Vec<f64> = FIG1_NODE_COUNTS.iter().map(|m| data.column(&format!("Z2_M{m}")).unwrap()[i]).collect();
    assert!(at.windows(2).all(|w| w[1] < w[0]), "{at:?}");
}

#[test]
fn figure_one_matches_independent_efficiency() {
    let data = figure_dataset(FigureId::Fig1b).unwrap();
    let nu = data.column("nu").unwrap();
    for m in FIG1_NODE_COUNTS {
        let net = fig1_network(m, 0.25).unwrap();
        let nodes: Vec<(f64, f64)> = net.processors.iter().map(|p| (p.detuning, p.omega)).collect();
        let gt = 2.0 * net.memory.omega0.powi(2) / net.memory.delta_in;
        let z2 = data.column(&format!("Z2_M{m}")).unwrap();
        for (x, z) in nu.iter().zip(&z2) {
            let reference = z_general(1.0, 0.0, gt, net.memory.delta_in, &nodes, *x).powi(2);
            assert!((z - reference).abs() < 1e-12);
        }
    }
}

#[test]
fn figure_two_brackets_the_optimum() {
    let data = figure_dataset(FigureId::Fig2).unwrap();
    assert_eq!(data.columns.len(), 6);
    assert_eq!(data.column("nu").unwrap()[0], -3.0);
    assert!(data.metadata.iter().any(|(k, v)| k == "delta_opt" && (v.parse::<f64>().unwrap() - 0.5).abs() < 1e-12));
}

/// `Phi(tau)` assembled from the companion roots.
fn phi_ref(d: f64, tau: f64) -> f64 {
    let roots = companion_roots(d, 1.0, 0.3);
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, &z) in roots.iter().enumerate() {
        let dp: Complex64 = roots.iter().enumerate().filter(|(k, _)| *k != m).map(|(_, &w)| z - w).product();
        sum += c(0.0, 1.0) * (z + c(0.0, d)) * (c(0.0, -1.0) * z * tau).exp() / dp;
    }
    sum.re
}

#[test]
fn figure_three_surfaces_match_residue_sums() {
    for (id, lo, hi) in [(FigureId::Fig3a, 0.2, 1.8), (FigureId::Fig3b, 1.8, 10.0)] {
        let data = figure_dataset(id).unwrap();
        assert_eq!(data.rows.len(), 201 * 201);
        assert_eq!(data.rows[0][0], lo);
        assert!((data.rows.last().unwrap()[0] - hi).abs() < 1e-12);
        for row in data.rows.iter().step_by(997) {
            assert!((row[2] - phi_ref(row[0], row[1])).abs() < 1e-10, "{row:?}");
        }
    }
}

#[test]
fn transfer_curves_are_monotone_and_consistent() {
    let fig4 = figure_dataset(FigureId::Fig4).unwrap();
    let header = CsvTable::from_sweep(&fig4).header;
    assert_eq!(header, vec!["delta_in [Omega0]", "Q1 [1]"]);
    let q = fig4.column("Q1").unwrap();
    assert!(q.windows(2).all(|w| w[1] > w[0]));
    let fig5 = figure_dataset(FigureId::Fig5).unwrap();
    for row in &fig5.rows {
        assert_eq!(row[2], 1.0 - row[1]);
    }
}

#[test]
fn threshold_agrees_with_interpolated_figure_data() {
    let fig4 = figure_dataset(FigureId::Fig4).unwrap();
    let (d, q) = (fig4.column("delta_in").unwrap(), fig4.column("Q1").unwrap());
    let i = q.iter().position(|&v| v >= 0.99).unwrap();
    let interp = d[i - 1] + (0.99 - q[i - 1]) / (q[i] - q[i - 1]) * (d[i] - d[i - 1]);
    let threshold = transfer_threshold(1.0, 0.3, 0.99, 0.2, 10.0).unwrap();
    assert!((threshold - interp).abs() < 0.01, "{threshold} vs {interp}");
    assert!((threshold - 1.70177).abs() < 1e-3, "{threshold}");
    let strict = transfer_threshold(1.0, 0.3, 0.9999, 0.2, 10.0).unwrap();
    assert!((strict - 5.5).abs() <= 0.5, "{strict}");
}

#[test]
fn threshold_without_crossing_is_an_error() {
    let e = transfer_threshold(1.0, 0.3, 0.9999, 0.2, 2.0).unwrap_err();
    assert!(matches!(e, Error::NoCrossing { .. }), "{e}");
    let axis = Axis::linear("x", "1", 0.0, 1.0, 11).unwrap();
    assert_eq!(find_threshold(|x| Ok(x + 1.0), &axis, 0.5, 1e-6).unwrap(), 0.0);
}

#[test]
fn flatness_optimum_sits_at_the_matching_broadening() {
    for m in [0, 4, 16] {
        let base = fig1_network(m, 0.25).unwrap();
        let template = NetworkSpec::matched(RateParams::lossless(1.0), 1.0, 1, base.processors);
        let analytic = optimal_broadening(&template).unwrap();
        let best = optimize_flatness(&template, 0.05, 2.0, 0.9999).unwrap();
        assert!((best.delta_in - analytic).abs() < 0.05 * analytic, "M={m}: {} vs {analytic}", best.delta_in);
        assert!(!best.multimodal);
    }
}

#[test]
fn figures_are_reproducible() {
    for id in [FigureId::Fig1a, FigureId::Fig4, FigureId::Fig5] {
        let (a, b) = (figure_dataset(id).unwrap(), figure_dataset(id).unwrap());
        assert_eq!(CsvTable::from_sweep(&a).render(), CsvTable::from_sweep(&b).render());
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }
    let h1 = figure_dataset(FigureId::Fig1a).unwrap().config_hash;
    let h2 = figure_dataset(FigureId::Fig1b).unwrap().config_hash;
    assert_ne!(h1, h2);
}

#[test]
fn grid_runs_keep_axis_order() {
    let grid = SweepGrid {
        axis: Axis::linear("x", "s", -1.0, 1.0, 41).unwrap(),
        fixed: vec![("a".into(), 2.0)],
        metric: Column::new("y", "1"),
    };
    let result = grid.run("square", |x| Ok(x * x)).unwrap();
    assert_eq!(result.rows.len(), 41);
    for w in result.rows.windows(2) {
        assert!(w[1][0] > w[0][0]);
    }
    assert!(result.rows.iter().all(|r| r[1] == r[0] * r[0]));
    assert_eq!(result.metadata[0].0, "a");
    assert!(grid.run("fails", |_| Err(Error::Config("nope".into()))).is_err());
}

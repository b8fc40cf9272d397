use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use echo_qram::io::{format_number, svg_line_plot, CsvTable, OracleRun, OutputFormat, RunConfig, Series};
use echo_qram::model::Severity;
use echo_qram::oracle::{
    integrate_storage, integrate_transfer, memory_ensemble, reversibility_check, sample_ensemble,
    self_mode_coherence, InputPulse, Schedule, Trajectory,
};
use echo_qram::spectral::{
    echo_time_trace, retrieval_efficiency_mode, storage_efficiency_mode,
    total_memory_efficiency, SpectralResponse,
};
use echo_qram::sweep::{figure_dataset, optimize_flatness, transfer_threshold, FigureId, SweepResult};
use echo_qram::transfer::{cavity_depopulation, transfer_efficiency, SelfMode};
use echo_qram::validate_network;
use echo_qram::verify::{run_all, VerifyOptions};

pub struct Context {
    cfg: RunConfig,
    out: PathBuf,
    seedless: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, seedless: bool) -> Result<Self> {
        let out = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
        Ok(Self { cfg, out, seedless })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn svg(&self) -> bool {
        self.cfg.output.format == OutputFormat::CsvSvg
    }

    /// Writes the resolved configuration next to the data; it parses back as a config file.
    pub fn write_sidecar(&self, command: &str) -> Result<()> {
        let text = format!(
            "# qram {} {command}\n# seedless = {}\n{}",
            env!("CARGO_PKG_VERSION"),
            self.seedless,
            self.cfg.to_text()
        );
        let path = self.path(&format!("{command}.config.txt"));
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    fn write_csv(&self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.path(name);
        table.write(&path).with_context(|| format!("cannot write {}", path.display()))
    }

    fn write_svg(&self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn header(cols: &[&str]) -> CsvTable {
    CsvTable::new(cols.iter().map(|s| s.to_string()).collect())
}

fn series_from(table: &SweepResult, x: usize, ys: &[usize]) -> Vec<Series> {
    ys.iter()
        .map(|&j| Series {
            name: table.columns[j].name.clone(),
            points: table.rows.iter().map(|r| (r[x], r[j])).collect(),
        })
        .collect()
}

pub fn efficiency(ctx: &Context) -> Result<()> {
    let net = ctx.cfg.network_spec()?;
    let modes = ctx.cfg.signal_modes();
    let widths: Vec<f64> = modes.iter().map(|m| m.width).collect();
    for v in validate_network(&net, &widths) {
        match v.severity {
            Severity::Error => bail!("invalid network: {v}"),
            Severity::Warning => eprintln!("warning: {v}"),
        }
    }
    let tau = ctx.cfg.flip_time();
    let report = total_memory_efficiency(&net, &modes, tau)?;

    let mut per_mode = header(&[
        "mode [1]",
        "arrival [1/gamma1]",
        "width [gamma1]",
        "storage [1]",
        "retrieval [1]",
    ]);
    for (k, (m, (st, rt))) in modes.iter().zip(&report.per_mode).enumerate() {
        per_mode.push_numbers(&[(k + 1) as f64, m.arrival_time, m.width, *st, *rt]);
    }
    ctx.write_csv("efficiency.csv", &per_mode)?;

    let resp = SpectralResponse::sample_default(&net, ctx.cfg.signal.width)?;
    let mut table = header(&["nu [gamma1]", "Z [1]", "Z2 [1]", "re_response [1]", "im_response [1]"]);
    for ((nu, z), a) in resp.grid.iter().zip(&resp.z_values).zip(&resp.response) {
        table.push_numbers(&[*nu, *z, z * z, a.re, a.im]);
    }
    ctx.write_csv("response.csv", &table)?;

    let first = modes[0].arrival_time;
    let t_end = 2.0 * tau - first + 10.0 / ctx.cfg.signal.width;
    let times: Vec<f64> = (0..=400).map(|i| tau + (t_end - tau) * i as f64 / 400.0).collect();
    let echo = echo_time_trace(&net, &modes, tau, &times)?;
    let mut table = header(&["t [1/gamma1]", "re_echo [gamma1^1/2]", "im_echo [gamma1^1/2]", "echo_flux [gamma1]"]);
    for (t, b) in echo.times.iter().zip(&echo.amplitude) {
        table.push_numbers(&[*t, b.re, b.im, b.norm_sqr()]);
    }
    ctx.write_csv("echo.csv", &table)?;

    if ctx.svg() {
        let z2 = Series {
            name: "Z2".into(),
            points: resp.grid.iter().zip(&resp.z_values).map(|(&x, &z)| (x, z * z)).collect(),
        };
        ctx.write_svg("response.svg", &svg_line_plot("storage spectrum", "nu [gamma1]", "Z2", &[z2]))?;
        let flux = Series {
            name: "echo".into(),
            points: echo.times.iter().zip(&echo.amplitude).map(|(&t, b)| (t, b.norm_sqr())).collect(),
        };
        ctx.write_svg("echo.svg", &svg_line_plot("echo flux", "t [1/gamma1]", "|b|^2", &[flux]))?;
    }

    let d = net.derived();
    println!("gamma_tot = {}", d.gamma_tot);
    println!("delta_in = {}", net.memory.delta_in);
    println!("delta_opt = {}", ctx.cfg.optimal_delta_in(&net)?);
    println!("tau = {tau}");
    println!("storage = {}", report.total_storage);
    println!("memory = {}", report.total_memory);
    Ok(())
}

pub fn matching(ctx: &Context) -> Result<()> {
    let net = ctx.cfg.network_spec()?;
    let m = &ctx.cfg.matching;
    let analytic = ctx.cfg.optimal_delta_in(&net)?;
    let numeric = optimize_flatness(&net, m.lo, m.hi, m.level)?;
    if numeric.multimodal {
        eprintln!("warning: bandwidth objective has several local maxima in [{}, {}]", m.lo, m.hi);
    }
    let mut table = header(&[
        "delta_opt [gamma1]",
        "delta_numeric [gamma1]",
        "bandwidth [gamma1]",
        "level [1]",
        "multimodal [1]",
    ]);
    table.push_numbers(&[
        analytic,
        numeric.delta_in,
        numeric.bandwidth,
        m.level,
        f64::from(u8::from(numeric.multimodal)),
    ]);
    ctx.write_csv("match.csv", &table)?;
    println!("delta_opt = {analytic}");
    println!("delta_numeric = {}", numeric.delta_in);
    println!("bandwidth = {}", numeric.bandwidth);
    Ok(())
}

pub fn transfer(ctx: &Context) -> Result<()> {
    let cfg = ctx.cfg.transfer_config()?;
    let t = &ctx.cfg.transfer;
    let result = transfer_efficiency(&cfg)?;
    let dep = cavity_depopulation(&cfg)?;
    let threshold = transfer_threshold(cfg.omega0, cfg.omega1, t.level, t.lo, t.hi)
        .context("transfer threshold")?;
    let (k, xi) = result.params.map_or((f64::NAN, f64::NAN), |p| (p.k, p.xi));

    let mut summary = header(&[
        "delta_in [Omega0]",
        "Q1 [1]",
        "P1 [1/Omega0]",
        "K [1/Omega0]",
        "xi [Omega0]",
        "transfer_time [1/Omega0]",
        "residual_field [1]",
        "peak_field [1]",
        "threshold [Omega0]",
    ]);
    summary.push_numbers(&[
        cfg.delta_in,
        result.q1,
        result.p1,
        k,
        xi,
        result.transfer_time,
        dep.residual,
        dep.peak,
        threshold,
    ]);
    ctx.write_csv("transfer.csv", &summary)?;

    let mut roots = header(&["root [1]", "re_nu [Omega0]", "im_nu [Omega0]"]);
    if let Some(r) = &result.roots {
        for (i, z) in r.nu.iter().enumerate() {
            roots.push_numbers(&[(i + 1) as f64, z.re, z.im]);
        }
    }
    ctx.write_csv("roots.csv", &roots)?;

    let mut trace = header(&["tau [1/Omega0]", "phi [1]", "re_field [1]", "im_field [1]"]);
    for ((tau, phi), (_, a)) in result.mode_trace.iter().zip(&result.field_trace) {
        trace.push_numbers(&[*tau, *phi, a.re, a.im]);
    }
    ctx.write_csv("transfer_trace.csv", &trace)?;
    if ctx.svg() && !result.mode_trace.is_empty() {
        let phi = Series {
            name: "phi".into(),
            points: result.mode_trace.clone(),
        };
        let field = Series {
            name: "|a|".into(),
            points: result.field_trace.iter().map(|(t, a)| (*t, a.norm())).collect(),
        };
        ctx.write_svg(
            "transfer_trace.svg",
            &svg_line_plot("self-mode and cavity field", "tau [1/Omega0]", "", &[phi, field]),
        )?;
    }

    println!("Q1 = {}", result.q1);
    println!("P1 = {}", result.p1);
    println!("K = {k}");
    println!("transfer_time = {}", result.transfer_time);
    println!("residual_field = {}", dep.residual);
    println!("threshold = {threshold}");
    Ok(())
}

fn trajectory_table(traj: &Trajectory, time_unit: &str) -> CsvTable {
    let mut cols = vec![
        format!("t [{time_unit}]"),
        "re_field [1]".to_string(),
        "im_field [1]".to_string(),
    ];
    cols.extend(traj.node_labels.iter().map(|l| format!("{l}_population [1]")));
    cols.extend(
        [
            "re_output [rate^1/2]",
            "im_output [rate^1/2]",
            "output_flux [rate]",
            "input_energy [1]",
            "output_energy [1]",
            "balance [1]",
        ]
        .map(String::from),
    );
    let mut table = CsvTable::new(cols);
    for s in &traj.samples {
        let mut row = vec![s.t, s.field.re, s.field.im];
        row.extend(&s.node_norms);
        row.extend([
            s.output.re,
            s.output.im,
            s.output.norm_sqr(),
            s.input_energy,
            s.output_energy,
            s.balance(),
        ]);
        table.push_numbers(&row);
    }
    table
}

fn write_trajectory(ctx: &Context, traj: &Trajectory, time_unit: &str) -> Result<()> {
    ctx.write_csv("trajectory.csv", &trajectory_table(traj, time_unit))?;
    if ctx.svg() {
        let mut series = vec![Series {
            name: "|a|^2".into(),
            points: traj.samples.iter().map(|s| (s.t, s.field.norm_sqr())).collect(),
        }];
        for (i, label) in traj.node_labels.iter().enumerate() {
            series.push(Series {
                name: label.clone(),
                points: traj.samples.iter().map(|s| (s.t, s.node_norms[i])).collect(),
            });
        }
        ctx.write_svg(
            "trajectory.svg",
            &svg_line_plot("oracle trajectory", &format!("t [{time_unit}]"), "population", &series),
        )?;
    }
    Ok(())
}

fn write_summary(ctx: &Context, items: &[(&str, f64)]) -> Result<()> {
    let mut table = CsvTable::new(items.iter().map(|(k, _)| k.to_string()).collect());
    table.push_numbers(&items.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    ctx.write_csv("oracle_summary.csv", &table)?;
    for (k, v) in items {
        let name = k.split(" [").next().unwrap_or(k);
        println!("{name} = {v}");
    }
    Ok(())
}

pub fn oracle(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let opts = cfg.oracle_options();
    match cfg.oracle.run {
        OracleRun::Storage | OracleRun::Echo => {
            let modes = cfg.signal_modes();
            if modes.len() != 1 {
                bail!("oracle runs take a single signal mode, got signal.count = {}", modes.len());
            }
            let mode = modes[0];
            let net = cfg.network_spec()?;
            let ens = memory_ensemble(&net)?;
            let pulse = InputPulse::new(mode);
            if cfg.oracle.run == OracleRun::Storage {
                let t_end = cfg.oracle.t_end.unwrap_or(2.0 * mode.arrival_time);
                let run = integrate_storage(&net, &ens, Some(&pulse), &Schedule::empty(), t_end, &opts)?;
                write_trajectory(ctx, &run.trajectory, "1/gamma1")?;
                write_summary(
                    ctx,
                    &[
                        ("storage [1]", run.storage_efficiency),
                        ("analytic_storage [1]", storage_efficiency_mode(&net, &mode)?),
                        ("input_energy [1]", run.input_energy),
                        ("balance_error [1]", run.trajectory.max_balance_error()),
                    ],
                )
            } else {
                let tau = cfg.flip_time();
                let t_end = cfg
                    .oracle
                    .t_end
                    .unwrap_or(2.0 * tau - mode.arrival_time + 7.0 / mode.width);
                let run = integrate_storage(&net, &ens, Some(&pulse), &Schedule::crib_at(tau), t_end, &opts)?;
                let echo = run.trajectory.emitted_between(tau, t_end) / run.input_energy;
                let peak = run.trajectory.output_peak_after(tau).map_or(f64::NAN, |s| s.t);
                write_trajectory(ctx, &run.trajectory, "1/gamma1")?;
                write_summary(
                    ctx,
                    &[
                        ("echo [1]", echo),
                        ("analytic_echo [1]", retrieval_efficiency_mode(&net, &mode, tau)?),
                        ("echo_peak_time [1/gamma1]", peak),
                        ("expected_peak_time [1/gamma1]", 2.0 * tau - mode.arrival_time),
                        ("balance_error [1]", run.trajectory.max_balance_error()),
                    ],
                )
            }
        }
        OracleRun::Transfer => {
            let tcfg = cfg.transfer_config()?;
            let ens = sample_ensemble(tcfg.delta_in, tcfg.omega0, cfg.oracle.atoms)?;
            let mode = SelfMode::new(&tcfg)?;
            let window = mode.transfer_time();
            let c0 = self_mode_coherence(&mode, &ens, window)?;
            let t_end = cfg.oracle.t_end.unwrap_or(window);
            let run = integrate_transfer(&tcfg, &ens, &c0, &Schedule::empty(), t_end, &opts)?;
            write_trajectory(ctx, &run.trajectory, "1/Omega0")?;
            write_summary(
                ctx,
                &[
                    ("Q1 [1]", run.q1),
                    ("analytic_Q1 [1]", transfer_efficiency(&tcfg)?.q1),
                    ("residual_field [1]", run.residual_field),
                    ("peak_field [1]", run.peak_field),
                    ("balance_error [1]", run.trajectory.max_balance_error()),
                ],
            )
        }
        OracleRun::Reversal => {
            let tcfg = cfg.transfer_config()?;
            let r = reversibility_check(&tcfg, cfg.oracle.atoms, &opts, true)?;
            write_summary(
                ctx,
                &[
                    ("fidelity [1]", r.fidelity),
                    ("forward_Q1 [1]", r.forward_q1),
                    ("field_at_reversal [1]", r.field_at_reversal),
                ],
            )
        }
    }
}

fn figure_svg(result: &SweepResult) -> String {
    let cols = &result.columns;
    let series = if result.column_index("tau").is_some() {
        // Long format: one curve per broadening, a handful of them.
        let mut by_din: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
        for r in &result.rows {
            match by_din.last_mut() {
                Some((d, pts)) if *d == r[0] => pts.push((r[1], r[2])),
                _ => by_din.push((r[0], vec![(r[1], r[2])])),
            }
        }
        let step = (by_din.len() / 5).max(1);
        by_din
            .into_iter()
            .step_by(step)
            .map(|(d, points)| Series {
                name: format!("delta_in {d:.2}"),
                points,
            })
            .collect()
    } else {
        series_from(result, 0, &(1..cols.len()).collect::<Vec<_>>())
    };
    let x = if result.column_index("tau").is_some() { &cols[1] } else { &cols[0] };
    svg_line_plot(&result.label, &x.to_string(), "", &series)
}

pub fn figure(ctx: &Context, id: &str) -> Result<()> {
    let ids: Vec<FigureId> = if id == "all" {
        FigureId::ALL.to_vec()
    } else {
        vec![id.parse()?]
    };
    for id in ids {
        let result = figure_dataset(id)?;
        ctx.write_csv(&format!("{id}.csv"), &CsvTable::from_sweep(&result))?;
        if ctx.svg() {
            ctx.write_svg(&format!("{id}.svg"), &figure_svg(&result))?;
        }
        println!("{id}: {} rows, config {}", result.rows.len(), result.config_hash);
    }
    Ok(())
}

pub fn verify(ctx: &Context) -> Result<bool> {
    let opts = VerifyOptions {
        atoms: ctx.cfg.oracle.atoms,
        oracle: ctx.cfg.oracle_options(),
    };
    let checks = run_all(&opts);
    let mut table = header(&[
        "check",
        "value [1]",
        "reference [1]",
        "tolerance [1]",
        "passed [1]",
        "detail",
    ]);
    for c in &checks {
        table.push(vec![
            c.name.to_string(),
            format_number(c.value),
            format_number(c.reference),
            format_number(c.tolerance),
            u8::from(c.passed).to_string(),
            c.detail.replace(',', ";"),
        ]);
        println!(
            "{} {}: value {} reference {} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.reference,
            c.detail
        );
    }
    ctx.write_csv("verify.csv", &table)?;
    let passed = checks.iter().all(|c| c.passed);
    println!("{} of {} checks passed", checks.iter().filter(|c| c.passed).count(), checks.len());
    Ok(passed)
}

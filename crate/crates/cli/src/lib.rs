//! Batch front-end for the `nhqubit` simulation library.
//!
//! [`run`] executes one [`RunConfig`] and writes CSV data, a JSON manifest
//! that replays the run, and optional SVG plots rendered from the CSVs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;

use nhqubit::kraus::{hybrid_completeness_residual, photon_counting_residual};
use nhqubit::trajectory::EnsembleStats;
use nhqubit::DriveAxis;
use serde_json::json;

pub use config::{parse_config_file, AxisChoice, Experiment, Pipeline, PostSelectMode, RunConfig};
pub use error::CliError;
pub use output::{changed_files, read_manifest, Manifest, MANIFEST_NAME};

use output::{num, opt, Artifacts, Table};

/// Executes `cfg` and returns the manifest that was written.
pub fn run(cfg: &RunConfig) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let mut art = Artifacts::create(&cfg.out)?;
    match cfg.experiment {
        Experiment::Spectrum => run_spectrum(cfg, &mut art)?,
        Experiment::Ensemble => run_ensemble(cfg, &mut art)?,
        Experiment::Compare => run_compare(cfg, &mut art)?,
        Experiment::Sde => run_sde(cfg, &mut art)?,
        Experiment::OptimalPath => run_optimal(cfg, &mut art)?,
        Experiment::PhasePortrait => run_portrait(cfg, &mut art)?,
        Experiment::PovmCheck => run_povm(cfg, &mut art)?,
    }
    art.finish(cfg)
}

/// Re-runs the configuration stored in a manifest, optionally into another
/// directory.
pub fn replay(manifest: &Manifest, out: Option<&std::path::Path>) -> Result<Manifest, CliError> {
    let mut cfg = manifest.config.clone();
    if let Some(dir) = out {
        cfg.out = dir.to_path_buf();
    }
    run(&cfg)
}

fn axis_tag(a: DriveAxis) -> String {
    a.to_string()
}

fn plot_csv(
    art: &mut Artifacts,
    cfg: &RunConfig,
    csv: &str,
    title: &str,
    x: &str,
    ys: &[&str],
) -> Result<(), CliError> {
    if !cfg.plot {
        return Ok(());
    }
    let series = plot::series_from_csv(&art.path(csv), x, ys)?;
    let svg = plot::line_chart(title, x, &series);
    art.write_plot(&csv.replace(".csv", ".svg"), &svg)?;
    Ok(())
}

fn run_spectrum(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let mut eps = serde_json::Map::new();
    for axis in cfg.axis.axes() {
        let scan = experiments::spectrum(cfg, axis)?;
        let mut t = Table::new(&[
            "omega", "re_l1", "re_l2", "re_l3", "re_l4", "im_l1", "im_l2", "im_l3", "im_l4", "gap", "overlap",
        ]);
        for pt in &scan.points {
            let mut row = vec![num(pt.omega)];
            row.extend(pt.eigenvalues.iter().map(|l| num(l.re)));
            row.extend(pt.eigenvalues.iter().map(|l| num(l.im)));
            row.push(num(pt.gap));
            row.push(num(pt.overlap));
            t.push(row);
        }
        let name = format!("spectrum_{}.csv", axis_tag(axis));
        art.write_csv(&name, &t)?;
        plot_csv(art, cfg, &name, "Liouvillian spectrum (real parts)", "omega", &["re_l1", "re_l2", "re_l3", "re_l4"])?;
        if cfg.plot {
            let series = plot::series_from_csv(&art.path(&name), "omega", &["im_l1", "im_l2", "im_l3", "im_l4"])?;
            art.write_plot(
                &format!("spectrum_im_{}.svg", axis_tag(axis)),
                &plot::line_chart("Liouvillian spectrum (imaginary parts)", "omega", &series),
            )?;
        }
        eps.insert(axis_tag(axis), serde_json::to_value(scan.ep).unwrap_or_default());
    }
    art.write_json("exceptional_points.json", &eps)?;
    art.note("exceptional_points", serde_json::Value::Object(eps));
    Ok(())
}

fn stats_table(s: &EnsembleStats) -> Table {
    let mut t = Table::new(&["t", "Pf_mean", "Pf_se", "Pe_mean", "Pe_se", "Pg_mean", "Pg_se", "Pf_norm", "n_survived"]);
    for k in 0..s.times.len() {
        t.push(vec![
            num(s.times[k]),
            num(s.pf[k].mean),
            num(s.pf[k].se),
            num(s.pe[k].mean),
            num(s.pe[k].se),
            num(s.pg[k].mean),
            num(s.pg[k].se),
            num(s.pf_norm[k].mean),
            s.n_survived[k].to_string(),
        ]);
    }
    t
}

fn bloch_table(s: &EnsembleStats) -> Table {
    let mut t = Table::new(&["t", "x_mean", "x_se", "y_mean", "y_se", "z_mean", "z_se", "n_survived"]);
    for k in 0..s.times.len() {
        let [x, y, z] = s.bloch[k];
        t.push(vec![
            num(s.times[k]),
            num(x.mean),
            num(x.se),
            num(y.mean),
            num(y.se),
            num(z.mean),
            num(z.se),
            s.n_survived[k].to_string(),
        ]);
    }
    t
}

fn write_trajectories(cfg: &RunConfig, art: &mut Artifacts, axis: DriveAxis) -> Result<(), CliError> {
    for i in 0..cfg.save_trajectories.min(cfg.n) {
        let rec = experiments::single_trajectory(cfg, axis, i as u64)?;
        let mut t = Table::new(&["t", "x", "y", "z", "r", "jumped"]);
        for (k, time) in rec.times().into_iter().enumerate() {
            let q = rec.states[k];
            let jumped = rec.jump_index.is_some_and(|j| k >= j);
            t.push(vec![
                num(time),
                opt(q.map(|q| q.x)),
                opt(q.map(|q| q.y)),
                opt(q.map(|q| q.z)),
                opt(rec.records.get(k).copied().flatten()),
                u8::from(jumped).to_string(),
            ]);
        }
        art.write_csv(&format!("trajectories/{}_{:04}.csv", axis_tag(axis), i), &t)?;
    }
    Ok(())
}

fn survivors(s: &EnsembleStats) -> serde_json::Value {
    json!({ "n_total": s.n_total, "n_survived_final": s.n_survived.last().copied().unwrap_or(0) })
}

fn run_ensemble(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    for axis in cfg.axis.axes() {
        let a = axis_tag(axis);
        let stats = experiments::ensemble_stats(cfg, axis)?;
        let name = format!("ensemble_{a}.csv");
        art.write_csv(&name, &stats_table(&stats))?;
        art.write_csv(&format!("bloch_{a}.csv"), &bloch_table(&stats))?;
        let pops = experiments::lindblad_reference(cfg, axis)?;
        let mut t = Table::new(&["t", "Pf", "Pe", "Pg"]);
        for (k, p) in pops.iter().enumerate() {
            t.push(vec![num(stats.times[k]), num(p[0]), num(p[1]), num(p[2])]);
        }
        art.write_csv(&format!("lindblad_{a}.csv"), &t)?;
        write_trajectories(cfg, art, axis)?;
        plot_csv(
            art,
            cfg,
            &name,
            &format!("Ensemble populations, {a}-drive"),
            "t",
            &["Pf_mean", "Pe_mean", "Pg_mean"],
        )?;
        art.note(&format!("survivors_{a}"), survivors(&stats));
    }
    Ok(())
}

fn run_compare(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    for axis in cfg.axis.axes() {
        let a = axis_tag(axis);
        let c = experiments::compare(cfg, axis)?;
        let s = &c.stats;
        let mut t = Table::new(&[
            "t",
            "Pf_liouvillian",
            "Pf_ensemble",
            "Pf_se",
            "x_liouvillian",
            "x_ensemble",
            "y_liouvillian",
            "y_ensemble",
            "z_liouvillian",
            "z_ensemble",
            "n_survived",
        ]);
        for (k, q) in c.liouvillian.iter().enumerate() {
            let [x, y, z] = s.bloch[k];
            t.push(vec![
                num(s.times[k]),
                num(0.5 * (1.0 + q.z)),
                num(s.pf_norm[k].mean),
                num(s.pf_norm[k].se),
                num(q.x),
                num(x.mean),
                num(q.y),
                num(y.mean),
                num(q.z),
                num(z.mean),
                s.n_survived[k].to_string(),
            ]);
        }
        let name = format!("compare_{a}.csv");
        art.write_csv(&name, &t)?;
        plot_csv(
            art,
            cfg,
            &name,
            &format!("Liouvillian vs trajectories, {a}-drive"),
            "t",
            &["Pf_liouvillian", "Pf_ensemble"],
        )?;
        art.note(
            &format!("compare_{a}"),
            json!({
                "sup_pf_deviation": c.sup_pf_deviation(),
                "integrated_bloch_deviation": c.integrated_deviation(),
                "n_survived_final": s.n_survived.last().copied().unwrap_or(0),
            }),
        );
    }
    Ok(())
}

fn run_sde(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    if experiments::sde_scheme(cfg.scheme).is_none() {
        return Err(CliError::config("scheme", "`sde` needs kraus, stratonovich or ito; use `ensemble` for jump"));
    }
    for axis in cfg.axis.axes() {
        let a = axis_tag(axis);
        let stats = experiments::ensemble_stats(cfg, axis)?;
        let name = format!("sde_{a}.csv");
        art.write_csv(&name, &bloch_table(&stats))?;
        write_trajectories(cfg, art, axis)?;
        plot_csv(art, cfg, &name, &format!("Bloch components, {a}-drive"), "t", &["x_mean", "y_mean", "z_mean"])?;
        art.note(&format!("survivors_{a}"), survivors(&stats));
    }
    Ok(())
}

fn run_optimal(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let axis = match cfg.axis {
        AxisChoice::Y => DriveAxis::Y,
        _ => DriveAxis::X,
    };
    let params = cfg.params()?;
    let cmp = experiments::optimal_path(cfg, axis)?;
    let path = &cmp.path;
    let mut t = Table::new(&["t", "x", "y", "z", "px", "py", "pz", "r", "H", "S_cumulative"]);
    let energies = path.energies(&params, axis);
    for (k, pt) in path.points.iter().enumerate() {
        t.push(vec![
            num(path.grid[k]),
            num(pt.q.x),
            num(pt.q.y),
            num(pt.q.z),
            num(pt.p[0]),
            num(pt.p[1]),
            num(pt.p[2]),
            num(pt.r),
            num(energies[k]),
            num(path.cumulative_action[k]),
        ]);
    }
    art.write_csv("path.csv", &t)?;
    plot_csv(art, cfg, "path.csv", "Most-likely path", "t", &["x", "y", "z"])?;
    let mut summary = json!({
        "axis": axis_tag(axis),
        "p0": path.initial_momentum(),
        "energy": path.energy,
        "energy_drift": path.energy_drift,
        "action": path.action,
        "endpoint_residual": path.endpoint_residual,
    });
    if let Some(stats) = &cmp.ensemble {
        art.write_csv("postselected_mean.csv", &bloch_table(stats))?;
        plot_csv(
            art,
            cfg,
            "postselected_mean.csv",
            "Post-selected trajectory mean",
            "t",
            &["x_mean", "y_mean", "z_mean"],
        )?;
        summary["n_postselected"] = json!(stats.n_total);
        summary["rms_distance"] = json!(cmp.rms_distance());
    }
    art.note("optimal_path", summary);
    Ok(())
}

fn run_portrait(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let p = experiments::portrait(cfg)?;
    art.write_json("fixed_points.json", &p.fixed_points)?;
    let mut t = Table::new(&["theta_b", "p_branch1", "p_branch2", "E"]);
    for c in &p.contours {
        for r in &c.rows {
            t.push(vec![num(r.theta_b), opt(r.p_branch1), opt(r.p_branch2), num(c.energy)]);
        }
    }
    art.write_csv("portrait.csv", &t)?;
    if cfg.plot {
        let series: Vec<plot::Series> = p
            .contours
            .iter()
            .flat_map(|c| {
                let tag = if c.separatrix { " (separatrix)" } else { "" };
                [
                    plot::Series {
                        label: format!("E = {:.3}{tag}", c.energy),
                        points: c.rows.iter().map(|r| (r.theta_b, r.p_branch1)).collect(),
                    },
                    plot::Series {
                        label: String::new(),
                        points: c.rows.iter().map(|r| (r.theta_b, r.p_branch2)).collect(),
                    },
                ]
            })
            .collect();
        art.write_plot("portrait.svg", &plot::line_chart("Reduced phase portrait p(theta_b, E)", "theta_b", &series))?;
    }
    art.note("fixed_points", serde_json::to_value(&p.fixed_points).unwrap_or_default());
    Ok(())
}

fn run_povm(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let p = cfg.params()?;
    let hybrid = hybrid_completeness_residual(&p);
    let counting = photon_counting_residual(&p);
    let mut t = Table::new(&["dt", "hybrid_residual", "photon_counting_residual"]);
    t.push(vec![num(cfg.dt), num(hybrid), num(counting)]);
    art.write_csv("povm.csv", &t)?;
    art.note("povm", json!({ "hybrid_residual": hybrid, "photon_counting_residual": counting }));
    Ok(())
}

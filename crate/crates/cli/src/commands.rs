use std::fmt::Write as _;
use std::time::Instant;

use brachisto_core::brachistophase::{
    brachistophase_hamiltonian, exact_phase, max_accel_hamiltonian, random_search, taylor_phase, tau0_threshold,
    OptimalSolution,
};
use brachisto_core::curves::{covariant_jet, Curve};
use brachisto_core::majorana::{falling_star_audit, open_half_period_grid, trajectory};
use brachisto_core::phase::{geometric_phase, phase_derivs_covariant, phase_derivs_vtilde, vtilde_series};
use brachisto_core::presets::StatePreset;
use brachisto_core::verify::{run_suite, VerifyConfig};
use brachisto_core::{CMatrix, HermitianOp};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    InvariantFailure,
    Breakdown,
}

pub struct Output {
    pub json: Value,
    /// Header and rows, without the metadata comment lines.
    pub csv: String,
    pub status: Status,
}

impl Output {
    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => {
                let config = serde_json::to_string(cfg).expect("serializable");
                format!("# format: {FORMAT_VERSION}\n# config: {config}\n{}", self.csv)
            }
        }
    }
}

/// 17 significant digits, independent of locale.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn numerical(e: brachisto_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn matrix_json(m: &CMatrix) -> Value {
    let part = |f: fn(&brachisto_core::C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    json!({ "re": part(|z| z.re), "im": part(|z| z.im) })
}

fn hamiltonian_json(h: &HermitianOp) -> Value {
    matrix_json(h.matrix())
}

fn envelope(cfg: &RunConfig, body: Value) -> Value {
    let mut v = json!({ "format": FORMAT_VERSION, "command": cfg.command, "config": cfg });
    if let (Value::Object(out), Value::Object(extra)) = (&mut v, body) {
        out.extend(extra);
    }
    v
}

pub fn phase(cfg: &RunConfig) -> Result<Output, CliError> {
    let inputs = cfg.inputs()?;
    let curve = Curve::schrodinger(inputs.h.clone(), inputs.psi0.clone()).map_err(numerical)?;
    let cov = phase_derivs_covariant(&covariant_jet(&curve, 0.0).map_err(numerical)?);
    let vt = phase_derivs_vtilde(&vtilde_series(&curve, 4).map_err(numerical)?);
    let d = |k: u32| cov.get(k).unwrap_or(f64::NAN);
    let (d3, d5) = (d(3), d(5));
    let times = cfg.grid.points();
    let exact: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            let steps = ((t.abs() * cfg.steps as f64).ceil() as usize).max(16);
            Ok(geometric_phase(&curve, t, steps)?.final_phase())
        })
        .collect::<Result<_, brachisto_core::Error>>()
        .map_err(numerical)?;
    let taylor3: Vec<f64> = times.iter().map(|t| t.powi(3) / 6.0 * d3).collect();
    let taylor5: Vec<f64> = times.iter().zip(&taylor3).map(|(t, p)| p + t.powi(5) / 120.0 * d5).collect();
    let breakdown: Vec<f64> = times.iter().zip(&exact).filter(|(_, p)| !p.is_finite()).map(|(t, _)| *t).collect();
    let mut csv = String::from("t,phase_exact,phase_taylor3,phase_taylor5\n");
    for k in 0..times.len() {
        let _ = writeln!(csv, "{},{},{},{}", num(times[k]), num(exact[k]), num(taylor3[k]), num(taylor5[k]));
    }
    let json = envelope(
        cfg,
        json!({
            "hamiltonian_matrix": hamiltonian_json(&inputs.h),
            "derivatives": { "3": d3, "4": d(4), "5": d5, "6": vt.get(6) },
            "breakdown_times": breakdown,
            "t": times,
            "phase_exact": exact,
            "phase_taylor3": taylor3,
            "phase_taylor5": taylor5,
        }),
    );
    let status = if breakdown.is_empty() { Status::Ok } else { Status::Breakdown };
    Ok(Output { json, csv, status })
}

fn solution_json(sol: &OptimalSolution) -> Value {
    json!({
        "h_canonical": hamiltonian_json(&sol.h_canonical),
        "h_transported": hamiltonian_json(&sol.h_transported),
        "transport_unitary": matrix_json(&sol.transport_u),
        "objective": sol.objective,
    })
}

pub fn optimize(cfg: &RunConfig) -> Result<Output, CliError> {
    let start = Instant::now();
    let inputs = cfg.inputs()?;
    let rho = inputs.psi0.projector();
    let bra = brachistophase_hamiltonian(&rho, cfg.sign()).map_err(numerical)?;
    let acc = max_accel_hamiltonian(&rho, cfg.sign()).map_err(numerical)?;
    let tau0 = match tau0_threshold(&bra.h_transported, &rho) {
        Ok(v) => json!({ "value": v }),
        Err(e) => json!({ "value": null, "reason": e.to_string() }),
    };
    let analytic_phase = exact_phase(&bra.h_transported, &inputs.psi0, cfg.tau).map_err(numerical)?;
    let taylor = taylor_phase(&bra.h_transported, &rho, cfg.tau, cfg.order).map_err(numerical)?;
    let search = random_search(&rho, cfg.tau, cfg.samples, cfg.seed).map_err(numerical)?;
    let mut csv = String::from("index,phase\n");
    for s in &search.trace {
        let _ = writeln!(csv, "{},{}", s.index, num(s.phase));
    }
    let mut brachistophase = solution_json(&bra);
    brachistophase["tau0"] = tau0;
    brachistophase["phase_at_tau"] = json!(analytic_phase);
    brachistophase["taylor_phase_at_tau"] = json!(taylor);
    let json = envelope(
        cfg,
        json!({
            "brachistophase": brachistophase,
            "max_accel": solution_json(&acc),
            "random_search": {
                "samples": cfg.samples,
                "seed": cfg.seed,
                "best_index": search.best_index,
                "best_phase": search.best_phase,
                "best_h": hamiltonian_json(&search.best_h),
                "undefined_samples": search.trace.iter().filter(|s| !s.phase.is_finite()).count(),
            },
            "analytic_beats_random": analytic_phase >= search.best_phase,
            "timing": { "wall_seconds": start.elapsed().as_secs_f64() },
        }),
    );
    Ok(Output { json, csv, status: Status::Ok })
}

pub fn constellation(cfg: &RunConfig) -> Result<Output, CliError> {
    let inputs = cfg.inputs()?;
    let times = cfg.grid.points();
    let tr = trajectory(&inputs.h, &inputs.psi0, &times).map_err(|e| match e {
        brachisto_core::Error::InvalidArgument(m) => CliError::Config(m),
        other => numerical(other),
    })?;
    let mut csv = String::from("t,node,requested,star,x,y,z\n");
    let requested: std::collections::BTreeSet<usize> = tr.grid_nodes.iter().copied().collect();
    for (node, t) in tr.times.iter().enumerate() {
        for (star, track) in tr.tracks.iter().enumerate() {
            let p = track[node];
            let _ = writeln!(
                csv,
                "{},{node},{},{star},{},{},{}",
                num(*t),
                u8::from(requested.contains(&node)),
                num(p[0]),
                num(p[1]),
                num(p[2])
            );
        }
    }
    let audit = if inputs.state_preset == Some(StatePreset::Coherent) {
        let a = falling_star_audit(cfg.two_s, &open_half_period_grid(50), cfg.sign()).map_err(numerical)?;
        json!({
            "nodes": a.times.len(),
            "closed_form_residual": a.closed_form_residual,
            "circle_residual_center_plus_sqrt_s": a.circle_residual_plus,
            "circle_residual_center_minus_sqrt_s": a.circle_residual_minus,
            "stationary_stars": a.stationary_stars,
            "tilt": a.tilt,
            "tilt_expected": a.tilt_expected,
            "tilt_max_accel": a.tilt_max_accel,
            "max_accel_exceeds": a.max_accel_exceeds,
        })
    } else {
        Value::Null
    };
    let merges: Vec<Value> =
        tr.merges.iter().map(|m| json!({ "t_from": m.t_from, "t_to": m.t_to, "step": m.step })).collect();
    let json = envelope(
        cfg,
        json!({
            "hamiltonian_matrix": hamiltonian_json(&inputs.h),
            "star_count": tr.star_count(),
            "times": tr.times,
            "grid_nodes": tr.grid_nodes,
            "refinements": tr.refinements,
            "tracks": tr.tracks,
            "merges": merges,
            "final_permutation": tr.final_permutation,
            "falling_star_audit": audit,
        }),
    );
    Ok(Output { json, csv, status: Status::Ok })
}

pub fn verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut runs = Vec::new();
    let mut csv = String::from("seed,name,residual,tol,passed\n");
    let mut all = true;
    for seed in cfg.seed..cfg.seed + cfg.seeds {
        let vc = VerifyConfig {
            dim: cfg.dim,
            seed,
            instances: cfg.samples as usize,
            christoffel_perturbation: cfg.perturb_christoffel,
        };
        let report = run_suite(&vc).map_err(numerical)?;
        for c in &report.checks {
            let _ = writeln!(csv, "{seed},{},{},{},{}", c.name, num(c.residual), num(c.tol), c.passed);
        }
        all &= report.all_passed();
        runs.push(json!({ "seed": seed, "all_passed": report.all_passed(), "checks": report.checks }));
    }
    let json = envelope(cfg, json!({ "runs": runs, "all_passed": all }));
    Ok(Output { json, csv, status: if all { Status::Ok } else { Status::InvariantFailure } })
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(f64::NAN), "nan");
    }
}

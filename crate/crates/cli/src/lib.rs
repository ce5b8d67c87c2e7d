//! Run configuration and subcommands of the `tadpole` binary.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use tadpole::evolution::{decay_rate_report, energy_trace_of, modal_expansion};
use tadpole::figure2::{figure2_csv_with, DEFAULT_SWEEP};
use tadpole::modes::{build_confined_mode, build_damped_mode, gram_closed_form, riesz_diagnostics, ModeFunction, Segment};
use tadpole::oracle::{adjudicate, build_discrete_operator, energy_identity_check, oracle_evolve, Closure};
use tadpole::resolvent::{write_kernel_slice_csv, Splitter};
use tadpole::spectrum::{
    asymptotic_deviation, certify, disk_roots, embedded_eigenvalues, point_spectrum_run, write_spectrum_csv, Family,
    SeedBranch,
};
use tadpole::verify::{mixed_initial_data, run_all, VerifySettings};
use tadpole::{GraphParams, GraphPoint, C64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub x_max: f64,
    pub h1: f64,
    pub h2: f64,
    pub nmax: usize,
    pub kmax: usize,
    pub tmax: f64,
    pub dt: f64,
    pub out_dir: PathBuf,
    pub seed_branch: SeedBranch,
}

/// Config file contents; every field is optional and unknown fields are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub alpha: Option<f64>,
    pub x_max: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub nmax: Option<usize>,
    pub kmax: Option<usize>,
    pub tmax: Option<f64>,
    pub dt: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub seed_branch: Option<SeedBranch>,
}

impl PartialConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    /// Fields set in `other` take precedence.
    pub fn merge(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            l: other.l.or(self.l),
            alpha: other.alpha.or(self.alpha),
            x_max: other.x_max.or(self.x_max),
            h1: other.h1.or(self.h1),
            h2: other.h2.or(self.h2),
            nmax: other.nmax.or(self.nmax),
            kmax: other.kmax.or(self.kmax),
            tmax: other.tmax.or(self.tmax),
            dt: other.dt.or(self.dt),
            out_dir: other.out_dir.or(self.out_dir),
            seed_branch: other.seed_branch.or(self.seed_branch),
        }
    }

    /// Defaults: L = 2 pi, alpha = 1, x_max = 16 L, h1 = h2 = L/400,
    /// nmax = 30, kmax = 5, tmax = 5, dt = 1e-3, out_dir = ".", both seeds.
    pub fn resolve(self) -> RunConfig {
        let l = self.l.unwrap_or(2.0 * PI);
        RunConfig {
            l,
            alpha: self.alpha.unwrap_or(1.0),
            x_max: self.x_max.unwrap_or(16.0 * l),
            h1: self.h1.unwrap_or(l / 400.0),
            h2: self.h2.unwrap_or(l / 400.0),
            nmax: self.nmax.unwrap_or(30),
            kmax: self.kmax.unwrap_or(5),
            tmax: self.tmax.unwrap_or(5.0),
            dt: self.dt.unwrap_or(1e-3),
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            seed_branch: self.seed_branch.unwrap_or(SeedBranch::Both),
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<GraphParams, String> {
        GraphParams::new(self.l, self.alpha, self.x_max, self.h1, self.h2).map_err(|e| e.to_string())
    }

    /// Checks numeric fields and that out_dir is an existing writable directory.
    pub fn validate(&self) -> Result<GraphParams, String> {
        let p = self.params()?;
        if self.nmax == 0 || self.kmax == 0 {
            return Err("nmax and kmax must be positive".into());
        }
        if !(self.tmax > 0.0 && self.dt > 0.0 && self.dt.is_finite() && self.tmax.is_finite()) {
            return Err("tmax and dt must be positive".into());
        }
        let meta = std::fs::metadata(&self.out_dir).map_err(|_| format!("out_dir {:?} does not exist", self.out_dir))?;
        if !meta.is_dir() || meta.permissions().readonly() {
            return Err(format!("out_dir {:?} is not a writable directory", self.out_dir));
        }
        Ok(p)
    }

    /// Single-line JSON used as the header comment of every output file.
    pub fn header(&self) -> String {
        format!("config {}", serde_json::to_string(self).expect("config serializes"))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

type CmdResult = Result<i32, tadpole::Error>;

fn run(cfg: &RunConfig, f: impl FnOnce(&RunConfig, &GraphParams) -> CmdResult) -> i32 {
    let p = match cfg.validate() {
        Ok(p) => p,
        Err(e) => {
            log::error!("{e}");
            return EXIT_CONFIG;
        }
    };
    match f(cfg, &p) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            EXIT_NUMERICAL
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, tadpole::Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(cfg: &RunConfig, name: &str, value: &serde_json::Value) -> Result<(), tadpole::Error> {
    let v = json!({ "config": cfg, "data": value });
    std::fs::write(cfg.path(name), serde_json::to_string_pretty(&v)? + "\n")?;
    Ok(())
}

/// spectrum.csv, asymptotic_deviation.csv and certificates.json.
pub fn cmd_spectrum(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        let run = point_spectrum_run(cfg.nmax, p, cfg.seed_branch)?;
        let header = cfg.header();
        write_spectrum_csv(create(&cfg.path("spectrum.csv"))?, &run.points, Some(&header))?;
        let mut dev = format!("# {header}\nn,re_lambda,im_lambda,re_expansion_reference,im_expansion_reference,re_expansion_matching,im_expansion_matching,deviation_reference,deviation_matching\n");
        for q in run.points.iter().filter(|q| q.family == Family::ResonanceCandidate) {
            let d = asymptotic_deviation(q.index, q.lambda, p);
            dev.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6e},{:.6e}\n",
                d.n,
                d.lambda.re,
                d.lambda.im,
                d.expansion_reference.re,
                d.expansion_reference.im,
                d.expansion_matching.re,
                d.expansion_matching.im,
                d.deviation_reference,
                d.deviation_matching
            ));
        }
        std::fs::write(cfg.path("asymptotic_deviation.csv"), dev)?;
        let certs = certify(&run.points, cfg.nmax, p)?;
        let ok = certs.iter().all(|c| c.certified());
        write_json(cfg, "certificates.json", &json!({"certificates": certs, "seed_outcomes": run.outcomes,
            "seed_failures": run.failures, "all_certified": ok}))?;
        if !ok {
            log::error!("uncertified rectangle present");
        }
        Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
    })
}

fn write_mode(cfg: &RunConfig, p: &GraphParams, m: &ModeFunction, stem: &str) -> Result<(), tadpole::Error> {
    m.sample(p).write_csv(create(&cfg.path(&format!("{stem}.csv")))?, Some(&cfg.header()))?;
    std::fs::write(cfg.path(&format!("{stem}.json")), serde_json::to_string_pretty(&m.sidecar_json())? + "\n")?;
    Ok(())
}

/// Confined modes k = 1..kmax, damped modes from the disk and the lower
/// family n = 1..nmax, their Gram diagnostics and oracle verdicts.
pub fn cmd_modes(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        for k in 1..=cfg.kmax {
            write_mode(cfg, p, &build_confined_mode(k, p), &format!("mode_embedded_{k}"))?;
        }
        let run = point_spectrum_run(cfg.nmax, p, cfg.seed_branch)?;
        let mut damped = Vec::new();
        let mut verdicts = Vec::new();
        for q in run.points.iter().filter(|q| q.family != Family::Embedded) {
            let m = build_damped_mode(q, p)?;
            write_mode(cfg, p, &m, &format!("mode_{}_{}", q.family.tag(), q.index))?;
            if q.family == Family::Damped {
                verdicts.push(adjudicate(q.lambda, p)?);
            }
            damped.push(m);
        }
        let riesz = if damped.is_empty() {
            serde_json::Value::Null
        } else {
            json!(riesz_diagnostics(&gram_closed_form(&damped, Segment::R2Only, p)))
        };
        write_json(cfg, "modes_summary.json", &json!({"riesz_r2": riesz, "adjudication": verdicts}))?;
        Ok(EXIT_OK)
    })
}

/// Kernel slice at z = -1 + 2i with the source at L/3 on the loop, plus the split report.
pub fn cmd_kernel(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        let sp = Splitter::new(p)?;
        let z = C64::new(-1.0, 2.0);
        let y = GraphPoint::r2((p.l / 3.0 / p.h2).round() * p.h2);
        let g = p.grid();
        let mut parts = Vec::new();
        for j in 0..=g.n2 {
            parts.push(sp.parts(GraphPoint::r2(g.x2(j)), y, z)?);
        }
        for j in 0..=g.n1 {
            let x = g.x1(j);
            if x > 2.0 * p.l {
                break;
            }
            parts.push(sp.parts(GraphPoint::r1(x), y, z)?);
        }
        write_kernel_slice_csv(create(&cfg.path("kernel_slice.csv"))?, &parts, Some(&cfg.header()))?;
        write_json(cfg, "split_report.json", &json!(sp.report))?;
        Ok(EXIT_OK)
    })
}

/// Modal energy trace, oracle Crank-Nicolson trace and decay-rate report for
/// the normalized sum of the first disk mode and the first confined mode.
pub fn cmd_evolve(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        let (u0, spec) = if disk_roots(p).is_empty() {
            let phi = build_confined_mode(1, p).sample(p);
            (phi, embedded_eigenvalues(1, p))
        } else {
            mixed_initial_data(p)?
        };
        let exp = modal_expansion(&u0, &spec, p)?;
        let samples = 100;
        let times: Vec<f64> = (0..=samples).map(|i| cfg.tmax * i as f64 / samples as f64).collect();
        let trace = energy_trace_of(&exp, &times);
        trace.write_csv(create(&cfg.path("energy_trace.csv"))?, Some(&cfg.header()))?;
        exp.evaluate(cfg.tmax)
            .write_csv(create(&cfg.path("u_final_modal.csv"))?, Some(&cfg.header()))?;

        let op = build_discrete_operator(p, Closure::Dirichlet)?;
        let steps = (cfg.tmax / cfg.dt).round().max(1.0) as usize;
        let orun = oracle_evolve(&op, &u0, cfg.dt, steps, steps)?;
        let mut ot = format!("# {}\nt,norm_sq,re_vertex,im_vertex\n", cfg.header());
        let stride = (steps / 1000).max(1);
        for i in (0..orun.trace.times.len()).step_by(stride) {
            let v = orun.trace.vertex_values[i];
            ot.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", orun.trace.times[i], orun.trace.norms_sq[i], v.re, v.im));
        }
        std::fs::write(cfg.path("oracle_trace.csv"), ot)?;
        let u_cn = &orun.snapshots.last().expect("final snapshot").1;
        u_cn.write_csv(create(&cfg.path("u_final_oracle.csv"))?, Some(&cfg.header()))?;
        let modal_vs_oracle = u_cn.sub(&exp.evaluate(cfg.tmax))?.norm();

        let points = point_spectrum_run(cfg.nmax, p, cfg.seed_branch)?.points;
        let report = decay_rate_report(&points, p)?;
        write_json(cfg, "evolve_summary.json", &json!({
            "expansion_residual": exp.residual,
            "omega_hat": trace.omega_hat,
            "decay_bound_holds": trace.decay_bound_holds(),
            "e_plus_drift": trace.max_e_plus_drift(),
            "oracle_energy_identity_residual": energy_identity_check(&orun.trace, p.alpha),
            "modal_vs_oracle_l2": modal_vs_oracle,
            "decay_rate_report": report,
        }))?;
        Ok(EXIT_OK)
    })
}

/// figure2.csv over the default alpha sweep for n = 1..nmax.
pub fn cmd_figure2(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        let text = figure2_csv_with(&DEFAULT_SWEEP, cfg.nmax, p.l, Some(&cfg.header()))?;
        std::fs::write(cfg.path("figure2.csv"), text)?;
        Ok(EXIT_OK)
    })
}

/// Runs the acceptance criteria and writes verify.json.
pub fn cmd_verify(cfg: &RunConfig) -> i32 {
    run(cfg, |cfg, p| {
        let settings = VerifySettings { h_over_l: p.h2 / p.l, out_dir: Some(cfg.out_dir.clone()) };
        let report = run_all(&settings);
        for c in &report.criteria {
            log::info!("{}", c.summary_line());
        }
        write_json(cfg, "verify.json", &json!(report))?;
        Ok(if report.all_passed { EXIT_OK } else { EXIT_NUMERICAL })
    })
}

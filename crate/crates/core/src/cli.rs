//! The `qbm` command line: spectral data, energy traces, asymptotic
//! parameter grids, oracle validation and discrete-reservoir runs.

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use crate::config::KvConfig;
use crate::correlators::{
    corr_full, corr_qp, corr_tr, EpsilonPolicy, EqualTimeMode, TwoPointEngine,
};
use crate::error::{Error, Result};
use crate::model::{coupling_beta_sq, zeta_closed, ModelParams, PARAM_KEYS};
use crate::observables::{delta_e_asy, delta_t_asy, energy_point, energy_trace, uniform_grid};
use crate::oracle::{
    a_func, b_func, b_func_contour, bath_evolve, bath_init, bath_init_with, commutator_integral,
    quad_corr_qp, quad_corr_tr_general, quad_zeta, Coupling, QuadratureSpec,
};
use crate::spectral::{find_roots, relaxation_time, SpectralData};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

const UNIT_KEYS: [&str; 3] = ["omega0", "mass_m", "mu"];
const TRACE_KEYS: [&str; 4] = ["t_max", "n_points", "epsilon", "equal_time"];
const GRID_KEYS: [&str; 10] = [
    "quantity",
    "eta0_values",
    "etar_values",
    "eta0_min",
    "eta0_max",
    "eta0_n",
    "etar_min",
    "etar_max",
    "etar_n",
    "sigma",
];
const BATH_KEYS: [&str; 5] = ["n_modes", "nu_max", "t_max", "dt", "coupling"];

#[derive(Debug, Parser)]
#[command(
    name = "qbm",
    version,
    about = "Quenched harmonic particle in a Lorentzian oscillator reservoir"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Level::Fast, global = true)]
    pub level: Level,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// perturbs one residue before validation
    #[arg(long, hide = true, global = true)]
    pub corrupt_spectral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Poles of 1/ζ and their residues
    Roots,
    /// ΔE, ΔT and variances on a uniform time grid
    Trace,
    /// Late-time energies or relaxation time over an (η₀, η_r) grid
    Grid,
    /// Closed forms against the quadrature and reservoir oracles
    Validate,
    /// Finite-reservoir simulation of the quench
    BathSim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    DeltaEAsy,
    DeltaTAsy,
    RelaxationTime,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::DeltaEAsy => "delta_E_asy",
            Quantity::DeltaTAsy => "delta_T_asy",
            Quantity::RelaxationTime => "relaxation_time",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Quantity::DeltaEAsy,
            Quantity::DeltaTAsy,
            Quantity::RelaxationTime,
        ]
        .into_iter()
        .find(|q| q.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    eta0_values: Vec<f64>,
    etar_values: Vec<f64>,
    sigma: f64,
    quantity: Quantity,
    units: (f64, f64, f64),
}

impl SweepGrid {
    pub fn new(
        eta0_values: Vec<f64>,
        etar_values: Vec<f64>,
        sigma: f64,
        quantity: Quantity,
    ) -> Result<Self> {
        for (name, axis) in [("eta0_values", &eta0_values), ("etar_values", &etar_values)] {
            if axis.is_empty() {
                return Err(Error::InvalidParams(format!("{name} is empty")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly ascending"
                )));
            }
        }
        if eta0_values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParams("eta0_values must all be > 0".into()));
        }
        if etar_values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParams("etar_values must all be >= 0".into()));
        }
        Ok(Self {
            eta0_values,
            etar_values,
            sigma,
            quantity,
            units: (1.0, 1.0, 1.0),
        })
    }

    pub fn with_units(mut self, omega0: f64, mass_m: f64, mu: f64) -> Self {
        self.units = (omega0, mass_m, mu);
        self
    }

    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        let mut allowed: Vec<&str> = GRID_KEYS.to_vec();
        allowed.extend(UNIT_KEYS);
        cfg.check_keys(&allowed)?;
        let axis = |prefix: &str| -> Result<Vec<f64>> {
            let key = format!("{prefix}_values");
            if let Some(v) = cfg.list(&key)? {
                return Ok(v);
            }
            let lo = cfg.require(&format!("{prefix}_min"))?;
            let hi = cfg.require(&format!("{prefix}_max"))?;
            let n = count(cfg, &format!("{prefix}_n"))?;
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n)
                .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                .collect())
        };
        let quantity = match cfg.text("quantity") {
            None => Quantity::DeltaEAsy,
            Some(s) => Quantity::parse(s).ok_or_else(|| Error::Config {
                line: cfg.line_of("quantity"),
                msg: format!("unknown quantity `{s}`"),
            })?,
        };
        let units = (
            cfg.scalar("omega0")?.unwrap_or(1.0),
            cfg.scalar("mass_m")?.unwrap_or(1.0),
            cfg.scalar("mu")?.unwrap_or(1.0),
        );
        Ok(Self::new(
            axis("eta0")?,
            axis("etar")?,
            cfg.require("sigma")?,
            quantity,
        )?
        .with_units(units.0, units.1, units.2))
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    /// Row-major over (η₀, η_r): (η₀, η_r, value).
    pub fn evaluate(&self) -> Result<Vec<(f64, f64, f64)>> {
        let cells: Vec<(f64, f64)> = self
            .eta0_values
            .iter()
            .flat_map(|&a| self.etar_values.iter().map(move |&b| (a, b)))
            .collect();
        let (w0, m, mu) = self.units;
        cells
            .par_iter()
            .map(|&(e0, er)| {
                let p = ModelParams::new(w0, m, mu, self.sigma, er, e0)?;
                let s = find_roots(&p)?;
                let v = match self.quantity {
                    Quantity::DeltaEAsy => delta_e_asy(&p, &s)?,
                    Quantity::DeltaTAsy => delta_t_asy(&p, &s)?,
                    Quantity::RelaxationTime => relaxation_time(&s, &p),
                };
                Ok((e0, er, v))
            })
            .collect()
    }
}

fn count(cfg: &KvConfig, key: &str) -> Result<usize> {
    let v = cfg.require(key)?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e9) {
        return Err(Error::Config {
            line: cfg.line_of(key),
            msg: format!("key `{key}` must be a positive integer, got {v}"),
        });
    }
    Ok(v as usize)
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn comment_block(pairs: &[(&str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("# {k} = {}\n", fmt_num(*v)))
        .collect()
}

fn csv_table(pairs: &[(&str, f64)], header: &[&str], columns: &[Vec<f64>]) -> String {
    let mut out = comment_block(pairs);
    out.push_str(&header.join(","));
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_num(c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn json_table(pairs: &[(&str, f64)], header: &[&str], columns: &[Vec<f64>]) -> String {
    let mut params = Map::new();
    for (k, v) in pairs {
        params.insert(k.to_string(), json!(v));
    }
    let mut obj = Map::new();
    obj.insert("params".into(), Value::Object(params));
    for (h, c) in header.iter().zip(columns) {
        obj.insert(h.to_string(), json!(c));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).unwrap_or_default();
    s.push('\n');
    s
}

fn table(fmt: Format, pairs: &[(&str, f64)], header: &[&str], columns: &[Vec<f64>]) -> String {
    match fmt {
        Format::Csv => csv_table(pairs, header, columns),
        Format::Json => json_table(pairs, header, columns),
    }
}

/// Fills in unit defaults (ω₀ = m = μ = 1) and rejects unknown keys.
fn model_config(cfg: &KvConfig, extra: &[&str]) -> Result<KvConfig> {
    let mut allowed: Vec<&str> = PARAM_KEYS.to_vec();
    allowed.extend_from_slice(extra);
    cfg.check_keys(&allowed)?;
    let mut out = cfg.clone();
    for k in UNIT_KEYS {
        if !out.contains(k) {
            out.set(k, "1");
        }
    }
    Ok(out)
}

pub fn cmd_roots(cfg: &KvConfig, fmt: Format) -> Result<String> {
    let cfg = model_config(cfg, &[])?;
    let p = ModelParams::from_config(&cfg)?;
    let s = find_roots(&p)?;
    Ok(render_roots(&p, &s, fmt))
}

fn render_roots(p: &ModelParams, s: &SpectralData, fmt: Format) -> String {
    let labels = SpectralData::record_labels();
    let values: Vec<Complex64> = s.roots().iter().chain(s.residues()).copied().collect();
    let sums = [("sum_R", s.sum_residues()), ("sum_R_eta", s.first_moment())];
    match fmt {
        Format::Csv => {
            let mut out = comment_block(&p.kv_pairs());
            out.push_str("record,re,im\n");
            for (l, v) in labels
                .iter()
                .zip(&values)
                .chain(sums.iter().map(|(l, v)| (l, v)))
            {
                out.push_str(&format!("{l},{},{}\n", fmt_num(v.re), fmt_num(v.im)));
            }
            out
        }
        Format::Json => {
            let mut obj = Map::new();
            let params: Map<String, Value> = p
                .kv_pairs()
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            obj.insert("params".into(), Value::Object(params));
            for (l, v) in labels
                .iter()
                .zip(&values)
                .chain(sums.iter().map(|(l, v)| (l, v)))
            {
                obj.insert(l.to_string(), json!([v.re, v.im]));
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).unwrap_or_default();
            s.push('\n');
            s
        }
    }
}

/// One configuration per combination of list-valued model keys.
fn expand_runs(cfg: &KvConfig) -> Result<Vec<KvConfig>> {
    let mut runs = vec![cfg.clone()];
    for key in PARAM_KEYS {
        let Some(values) = cfg.list(key)? else {
            continue;
        };
        if values.len() < 2 {
            continue;
        }
        runs = runs
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |v| {
                    let mut c = base.clone();
                    c.set(key, &format!("{v:?}"));
                    c
                })
            })
            .collect();
    }
    Ok(runs)
}

pub fn cmd_trace(cfg: &KvConfig, fmt: Format) -> Result<Vec<String>> {
    let cfg = model_config(cfg, &TRACE_KEYS)?;
    let t_max = cfg.scalar("t_max")?.unwrap_or(0.0);
    let n = if cfg.contains("n_points") {
        count(&cfg, "n_points")?
    } else {
        1
    };
    let eps = match cfg.text("equal_time") {
        None | Some("limit") => EqualTimeMode::LimitFormula,
        Some("extrapolation") => EqualTimeMode::EpsilonExtrapolation,
        Some(other) => {
            return Err(Error::Config {
                line: cfg.line_of("equal_time"),
                msg: format!("equal_time must be `limit` or `extrapolation`, got `{other}`"),
            })
        }
    };
    let eps = EpsilonPolicy::new(cfg.scalar("epsilon")?.unwrap_or(1e-8), eps)?;
    let times = uniform_grid(t_max, n)?;
    let runs = expand_runs(&cfg)?;
    runs.par_iter()
        .map(|run| {
            let p = ModelParams::from_config(run)?;
            let s = find_roots(&p)?;
            let tr = energy_trace(&p, &s, &times, eps)?;
            let mut pairs = p.kv_pairs().to_vec();
            pairs.push(("t_max", t_max));
            pairs.push(("n_points", n as f64));
            Ok(table(
                fmt,
                &pairs,
                &[
                    "time",
                    "delta_E",
                    "delta_T",
                    "x_var",
                    "p_var",
                    "uncertainty",
                ],
                &[
                    tr.times,
                    tr.delta_e,
                    tr.delta_t,
                    tr.x_var,
                    tr.p_var,
                    tr.uncertainty,
                ],
            ))
        })
        .collect()
}

pub fn cmd_grid(grid: &SweepGrid, fmt: Format) -> Result<String> {
    let cells = grid.evaluate()?;
    let (w0, m, mu) = grid.units;
    let pairs = [
        ("omega0", w0),
        ("mass_m", m),
        ("mu", mu),
        ("sigma", grid.sigma),
    ];
    Ok(table(
        fmt,
        &pairs,
        &["eta_0", "eta_r", grid.quantity.name()],
        &[
            cells.iter().map(|c| c.0).collect(),
            cells.iter().map(|c| c.1).collect(),
            cells.iter().map(|c| c.2).collect(),
        ],
    ))
}

pub fn cmd_bath_sim(cfg: &KvConfig, fmt: Format) -> Result<String> {
    let cfg = model_config(cfg, &BATH_KEYS)?;
    let p = ModelParams::from_config(&cfg)?;
    let n = if cfg.contains("n_modes") {
        count(&cfg, "n_modes")?
    } else {
        2000
    };
    let nu_max = cfg.scalar("nu_max")?.unwrap_or(50.0 * p.omega0());
    let t_max = cfg.scalar("t_max")?.unwrap_or(20.0 / p.omega0());
    let dt = cfg.scalar("dt")?.unwrap_or(0.1 / p.omega0());
    let coupling = match cfg.text("coupling") {
        None | Some("lorentzian") => Coupling::Lorentzian,
        Some("off") => Coupling::Off,
        Some(other) => {
            return Err(Error::Config {
                line: cfg.line_of("coupling"),
                msg: format!("coupling must be `lorentzian` or `off`, got `{other}`"),
            })
        }
    };
    let st = bath_init_with(&p, n, nu_max, coupling)?;
    let run = bath_evolve(&st, &p, t_max, dt)?;
    let w0 = p.omega0();
    let m = p.mass_m();
    let col = |f: &dyn Fn(&crate::oracle::BathSample) -> f64| -> Vec<f64> {
        run.samples.iter().map(f).collect()
    };
    let mut pairs = p.kv_pairs().to_vec();
    pairs.extend([
        ("n_modes", n as f64),
        ("nu_max", nu_max),
        ("t_max", t_max),
        ("dt", dt),
    ]);
    Ok(table(
        fmt,
        &pairs,
        &[
            "time",
            "delta_E",
            "delta_T",
            "x_var",
            "p_var",
            "uncertainty",
            "H_R",
            "total",
        ],
        &[
            col(&|s| s.t),
            col(&|s| s.h_p - 0.5 * w0),
            col(&|s| s.p_var / (2.0 * m) - 0.25 * w0),
            col(&|s| s.x_var),
            col(&|s| s.p_var),
            col(&|s| s.x_var * s.p_var),
            col(&|s| s.h_r),
            col(&|s| s.total),
        ],
    ))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, measured: f64, limit: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            measured,
            limit,
            passed: measured.is_finite() && measured < limit,
        });
    }

    pub fn render(&self, fmt: Format) -> String {
        match fmt {
            Format::Csv => {
                let mut out = String::from("check,measured,limit,status\n");
                for c in &self.checks {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        c.name,
                        fmt_num(c.measured),
                        fmt_num(c.limit),
                        if c.passed { "PASS" } else { "FAIL" }
                    ));
                }
                out
            }
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
                s.push('\n');
                s
            }
        }
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Runs the oracle suite. `corrupt` scales one residue by 1.01 first, which
/// the reconstruction check must catch.
pub fn cmd_validate(p: &ModelParams, level: Level, corrupt: bool) -> Result<ValidationReport> {
    let mut s = find_roots(p)?;
    if corrupt {
        let mut r = *s.residues();
        r[0] *= 1.01;
        s = SpectralData::from_parts(*s.roots(), r);
    }
    let w0 = p.omega0();
    let m = p.mass_m();
    let q = QuadratureSpec::default();
    let eps = EpsilonPolicy::default();
    let mut rep = ValidationReport { checks: Vec::new() };

    let comm = commutator_integral(p, &q.with_cutoff(1e4)?)?;
    rep.push("commutator", (comm - Complex64::i()).norm(), 1e-4);
    rep.push("sum_residues", s.sum_residues().norm(), 1e-10);
    rep.push("first_moment", (s.first_moment() + 1.0).norm(), 1e-10);
    let mut recon = 0.0f64;
    for k in 0..16 {
        let eta = Complex64::new(-2.0 + 0.27 * k as f64, 0.35 * (k % 5) as f64 - 0.6);
        let exact = 1.0 / p.shape().zeta(eta);
        recon = recon.max(rel(s.reconstruct(eta), exact));
    }
    rep.push("reconstruction", recon, 1e-10);
    let beta = |nu: f64| coupling_beta_sq(p, nu);
    let zq = quad_zeta(&beta, p, 2.0 * w0, &q)?;
    rep.push(
        "zeta_quadrature",
        rel(zq, zeta_closed(p, Complex64::new(2.0, 0.0))?),
        1e-8,
    );
    let mut qp = 0.0f64;
    for dt in [0.1, 1.0, 5.0, 20.0] {
        let dt = dt / w0;
        qp = qp.max(rel(corr_qp(p, &s, dt, eps)?, quad_corr_qp(p, dt, &q)?));
    }
    rep.push("stationary_correlator", qp, 1e-6);
    let mut a_err = 0.0f64;
    for t in [0.5, 2.0] {
        let t = t / w0;
        let contour: Complex64 = s
            .roots()
            .iter()
            .zip(s.residues())
            .map(|(e, r)| r * (Complex64::i() * e * w0 * t).exp())
            .sum::<Complex64>()
            / w0;
        a_err = a_err.max((a_func(p, t, &q)? - contour).norm() * w0);
        let b = b_func(p, 0.8 * w0, t, &q)?;
        a_err = a_err.max((b - b_func_contour(p, &s, 0.8 * w0, t)?).norm() * w0 * w0);
    }
    rep.push("auxiliary_functions", a_err, 1e-8);
    let points: &[(f64, f64)] = match level {
        Level::Fast => &[(2.0, 1.0)],
        Level::Full => &[(2.0, 1.0), (5.0, 5.0), (0.5, 0.3)],
    };
    let mut tr = 0.0f64;
    for &(t, tp) in points {
        let (t, tp) = (t / w0, tp / w0);
        tr = tr.max(rel(
            corr_tr(p, &s, t, tp)?,
            quad_corr_tr_general(p, t, tp, &q)?,
        ));
    }
    rep.push("transient_correlator", tr, 1e-5);
    let c0 = corr_full(p, &s, 0.0, 0.0, eps)?.total;
    rep.push(
        "initial_position_variance",
        rel(c0, Complex64::new(0.5 / (m * w0), 0.0)),
        1e-8,
    );

    if level == Level::Full {
        let scale = [1.0, (p.eta_r() + 5.0 * p.eta_0()) / 3.5, p.sigma()]
            .into_iter()
            .fold(0.0, f64::max);
        let nu_max = 50.0 * w0 * scale;
        let st = bath_init(p, 2000, nu_max)?;
        let run = bath_evolve(&st, p, 20.0 / w0, 0.5 / w0)?;
        let eng = TwoPointEngine::new(p, &s, eps)?;
        let (mut ex, mut ee) = (0.0f64, 0.0f64);
        for smp in &run.samples {
            let pt = energy_point(&eng, smp.t)?;
            ex = ex.max((smp.x_var - pt.x_var).abs() / pt.x_var);
            ee = ee.max((smp.h_p - 0.5 * w0 - pt.delta_e).abs() / w0);
        }
        rep.push("bath_position_variance", ex, 1e-2);
        rep.push("bath_energy_change", ee, 1e-2);
        rep.push("bath_energy_drift", run.energy_drift() / w0, 1e-6);
    }
    Ok(rep)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidParams(_) | Error::Domain(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("qbm: {msg}");
    ExitCode::from(code)
}

fn load_config(path: Option<&Path>) -> std::result::Result<KvConfig, ExitCode> {
    let Some(path) = path else {
        return Err(fail(EXIT_CONFIG, "this command needs --config"));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    KvConfig::parse(&text).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn run_path(out: &Path, i: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_run{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}_run{i}"),
    };
    out.with_file_name(name)
}

fn emit(out: Option<&Path>, docs: &[String]) -> std::result::Result<(), ExitCode> {
    match out {
        None => {
            print!("{}", docs.join("\n"));
            Ok(())
        }
        Some(path) => {
            let write = |p: &Path, text: &str| {
                std::fs::write(p, text)
                    .map_err(|e| fail(EXIT_IO, format!("cannot write {}: {e}", p.display())))
            };
            if docs.len() == 1 {
                write(path, &docs[0])
            } else {
                for (i, d) in docs.iter().enumerate() {
                    write(&run_path(path, i), d)?;
                }
                Ok(())
            }
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(&cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<ExitCode, ExitCode> {
    let cfg_path = cli.config.as_deref();
    let out = cli.out.as_deref();
    let check = |r: Result<Vec<String>>| r.map_err(|e| fail(exit_code(&e), e));
    match cli.command {
        Command::Roots => {
            let cfg = load_config(cfg_path)?;
            emit(out, &check(cmd_roots(&cfg, cli.format).map(|s| vec![s]))?)?;
        }
        Command::Trace => {
            let cfg = load_config(cfg_path)?;
            emit(out, &check(cmd_trace(&cfg, cli.format))?)?;
        }
        Command::Grid => {
            let cfg = load_config(cfg_path)?;
            let doc = SweepGrid::from_config(&cfg).and_then(|g| cmd_grid(&g, cli.format));
            emit(out, &check(doc.map(|s| vec![s]))?)?;
        }
        Command::BathSim => {
            let cfg = load_config(cfg_path)?;
            emit(
                out,
                &check(cmd_bath_sim(&cfg, cli.format).map(|s| vec![s]))?,
            )?;
        }
        Command::Validate => {
            let p = match cfg_path {
                None => ModelParams::natural(1.0, 1.0, 0.5).map_err(|e| fail(EXIT_CONFIG, e))?,
                Some(_) => {
                    let cfg = load_config(cfg_path)?;
                    model_config(&cfg, &[])
                        .and_then(|c| ModelParams::from_config(&c))
                        .map_err(|e| fail(exit_code(&e), e))?
                }
            };
            let rep = cmd_validate(&p, cli.level, cli.corrupt_spectral)
                .map_err(|e| fail(exit_code(&e), e))?;
            emit(out, &[rep.render(cli.format)])?;
            for c in &rep.checks {
                eprintln!(
                    "{} {} measured {:.3e} limit {:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.limit
                );
            }
            if !rep.passed() {
                return Ok(ExitCode::from(EXIT_VALIDATION));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

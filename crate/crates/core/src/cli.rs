//! Scenario runner behind the `martykit` binary.
//!
//! A scenario file holds one JSON object or an array of them. Each scenario
//! names a command, the function or family it acts on and its parameters;
//! complex numbers are written as `[re, im]`. Every scenario produces a
//! `results.csv` (`index,quantity,value,bound,margin`) and a `summary.json`
//! (`command,params,verdict,residuals,runtime_ms`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Map, Value as Json};

use crate::blaschke::DiskGeometry;
use crate::corpus;
use crate::error::Error;
use crate::harness::{self, Boundedness, Disk, FamilyKind, FamilySpec, HarnessConfig, Verdict};
use crate::logderiv::expansion_coefficients;
use crate::nevanlinna::{check_counting_inequality, check_first_fundamental};
use crate::poly::{Polynomial, RationalFunction, RootList};
use crate::quadrature::QuadratureSpec;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONTRACT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "martykit",
    version,
    about = "Run numerical scenario checks from a JSON config"
)]
pub struct Args {
    /// Scenario file (one object or an array of objects).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for suite generation, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial quadrature node count.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Contract tolerance, overriding the per-command default.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Grid resolution for disk scans.
    #[arg(long)]
    pub grid: Option<usize>,
}

type C = [f64; 2];

fn cx(c: C) -> Complex64 {
    Complex64::new(c[0], c[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FftCheck,
    CountingCheck,
    Theorem2a,
    Theorem2b,
    Theorem1Scan,
    Sharpness,
    Estimates,
    Harnack,
    ExpansionDump,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FftCheck => "fft-check",
            Command::CountingCheck => "counting-check",
            Command::Theorem2a => "theorem2a",
            Command::Theorem2b => "theorem2b",
            Command::Theorem1Scan => "theorem1-scan",
            Command::Sharpness => "sharpness",
            Command::Estimates => "estimates",
            Command::Harnack => "harnack",
            Command::ExpansionDump => "expansion-dump",
        }
    }
}

/// A rational function either from coefficient lists (ascending degree) or
/// from a leading coefficient with zero and pole lists.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub num: Option<Vec<C>>,
    pub den: Option<Vec<C>>,
    pub lead: Option<C>,
    #[serde(default)]
    pub zeros: Vec<(C, u32)>,
    #[serde(default)]
    pub poles: Vec<(C, u32)>,
}

impl FunctionConfig {
    pub fn build(&self) -> Result<RationalFunction, String> {
        match (&self.num, self.lead) {
            (Some(num), None) if self.zeros.is_empty() && self.poles.is_empty() => {
                let poly = |v: &Vec<C>| Polynomial::new(v.iter().map(|&c| cx(c)).collect());
                let den = self.den.as_ref().map(poly).unwrap_or_else(Polynomial::one);
                RationalFunction::new(poly(num), den).map_err(|e| e.to_string())
            }
            (None, _) if self.den.is_none() => {
                let list = |v: &Vec<(C, u32)>| {
                    RootList::from_pairs(v.iter().map(|&(c, m)| (cx(c), m)), 0.0)
                };
                let lead = self.lead.map(cx).unwrap_or(Complex64::new(1.0, 0.0));
                Ok(RationalFunction::from_factors(
                    lead,
                    list(&self.zeros),
                    list(&self.poles),
                ))
            }
            _ => Err("give either `num`/`den` or `lead`/`zeros`/`poles`".into()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    pub indices: Vec<u64>,
    pub p: Option<u32>,
    pub m: Option<u32>,
    pub base: Option<C>,
    pub exponent: Option<i32>,
    pub scale_exponent: Option<i32>,
    pub center: Option<C>,
    pub functions: Option<Vec<FunctionConfig>>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<FamilySpec, String> {
        let need = |v: Option<u32>, name: &str| {
            v.ok_or(format!(
                "family.{name} is required for kind `{}`",
                self.kind
            ))
        };
        let kind = match self.kind.as_str() {
            "power_pole" => FamilyKind::PowerPole {
                p: need(self.p, "p")?,
            },
            "shifted_power" => FamilyKind::ShiftedPower {
                base: self.base.map(cx).unwrap_or(Complex64::new(3.0, 0.0)),
            },
            "scaled_zero" => FamilyKind::ScaledZero {
                m: need(self.m, "m")?,
            },
            "scaled_pole" => FamilyKind::ScaledPole {
                p: need(self.p, "p")?,
            },
            "monomial" => FamilyKind::Monomial {
                exponent: self
                    .exponent
                    .ok_or("family.exponent is required for kind `monomial`")?,
                scale_exponent: self.scale_exponent.unwrap_or(0),
                center: self.center.map(cx).unwrap_or_default(),
            },
            "custom" => {
                let fs = self
                    .functions
                    .as_ref()
                    .ok_or("family.functions is required for kind `custom`")?;
                FamilyKind::Custom(fs.iter().map(|f| f.build()).collect::<Result<_, _>>()?)
            }
            other => return Err(format!("family.kind: unknown kind `{other}`")),
        };
        FamilySpec::new(kind, self.indices.clone()).map_err(|e| format!("family: {e}"))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    #[serde(default)]
    pub center: C,
    pub radius: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub k: Option<u32>,
    pub alpha: Option<f64>,
    pub m: Option<u32>,
    pub p: Option<u32>,
    pub base_point: Option<C>,
    pub radii: Option<Vec<f64>>,
    pub points: Option<Vec<C>>,
    /// Rescale the function so that its maximum on the unit circle is this
    /// fraction of `x0` (estimates only).
    pub rescale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub initial_nodes: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_doublings: Option<u32>,
    pub circle_clearance: Option<f64>,
}

/// Seeded random inputs in place of an explicit function.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Command,
    pub name: Option<String>,
    pub function: Option<FunctionConfig>,
    pub family: Option<FamilyConfig>,
    pub suite: Option<SuiteConfig>,
    pub geometry: Option<GeometryConfig>,
    pub disk: Option<DiskConfig>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    pub seed: Option<u64>,
    /// Treat a pole of the derived quotient inside the disk as the expected
    /// outcome.
    #[serde(default)]
    pub expect_pole_error: bool,
    pub tolerance: Option<f64>,
    pub grid: Option<usize>,
    /// Output directory for this scenario, relative to `--out`.
    pub output: Option<PathBuf>,
}

/// Command-line overrides applied on top of each scenario.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub quad_nodes: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub index: u64,
    pub quantity: String,
    pub value: f64,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
}

impl Record {
    fn new(index: u64, quantity: &str, value: f64) -> Self {
        Self {
            index,
            quantity: quantity.into(),
            value,
            bound: None,
            margin: None,
        }
    }

    fn with_bound(mut self, bound: f64, margin: f64) -> Self {
        self.bound = Some(bound);
        self.margin = Some(margin);
        self
    }
}

/// Result of one scenario.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: Command,
    pub params: Json,
    pub passed: bool,
    pub residuals: Map<String, Json>,
    pub records: Vec<Record>,
    pub runtime_ms: u128,
    /// Extra files to write next to the results, `(name, contents)`.
    pub attachments: Vec<(String, String)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_CONTRACT
        }
    }

    pub fn summary(&self) -> Json {
        json!({
            "command": self.command.name(),
            "params": self.params,
            "verdict": if self.passed { "pass" } else { "fail" },
            "residuals": self.residuals,
            "runtime_ms": self.runtime_ms as u64,
        })
    }
}

/// Input problems, reported with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn input<T>(r: Result<T, String>) -> Result<T, InputError> {
    r.map_err(InputError)
}

/// Parse a scenario file: a single object or an array.
pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>, InputError> {
    let value: Json = serde_json::from_str(text).map_err(|e| InputError(format!("config: {e}")))?;
    let items = match value {
        Json::Array(items) => items,
        other => vec![other],
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v).map_err(|e| InputError(format!("scenario {i}: {e}")))
        })
        .collect()
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    ov: Overrides,
    residuals: Map<String, Json>,
    records: Vec<Record>,
    attachments: Vec<(String, String)>,
    params: Map<String, Json>,
}

impl<'a> Context<'a> {
    fn k(&mut self) -> Result<u32, InputError> {
        let k = self.cfg.params.k.unwrap_or(1);
        if k == 0 {
            return Err(InputError("params.k must be positive".into()));
        }
        self.params.insert("k".into(), json!(k));
        Ok(k)
    }

    fn required_u32(&mut self, v: Option<u32>, name: &str) -> Result<u32, InputError> {
        let v = v.ok_or_else(|| {
            InputError(format!(
                "params.{name} is required for {}",
                self.cfg.command.name()
            ))
        })?;
        self.params.insert(name.into(), json!(v));
        Ok(v)
    }

    fn alpha(&mut self) -> Result<f64, InputError> {
        let a = self.cfg.params.alpha.ok_or_else(|| {
            InputError(format!(
                "params.alpha is required for {}",
                self.cfg.command.name()
            ))
        })?;
        self.params.insert("alpha".into(), json!(a));
        Ok(a)
    }

    fn tolerance(&mut self, default: f64) -> f64 {
        let t = self.ov.tol.or(self.cfg.tolerance).unwrap_or(default);
        self.params.insert("tolerance".into(), json!(t));
        t
    }

    fn seed(&mut self) -> u64 {
        let s = self.ov.seed.or(self.cfg.seed).unwrap_or(0);
        self.params.insert("seed".into(), json!(s));
        s
    }

    fn grid(&mut self, default: usize) -> usize {
        let g = self.ov.grid.or(self.cfg.grid).unwrap_or(default);
        self.params.insert("grid".into(), json!(g));
        g
    }

    fn quadrature(&mut self) -> Result<QuadratureSpec, InputError> {
        let q = &self.cfg.quadrature;
        let d = QuadratureSpec::default();
        let spec = QuadratureSpec {
            initial_nodes: self
                .ov
                .quad_nodes
                .or(q.initial_nodes)
                .unwrap_or(d.initial_nodes),
            tolerance: q.tolerance.unwrap_or(d.tolerance),
            max_doublings: q.max_doublings.unwrap_or(d.max_doublings),
            circle_clearance: q.circle_clearance.unwrap_or(d.circle_clearance),
        };
        spec.validate()
            .map_err(|e| InputError(format!("quadrature: {e}")))?;
        self.params.insert(
            "quadrature".into(),
            serde_json::to_value(spec).expect("serializable"),
        );
        Ok(spec)
    }

    fn geometry_raw(&mut self) -> Result<GeometryConfig, InputError> {
        let g = self.cfg.geometry.clone().ok_or_else(|| {
            InputError(format!(
                "geometry is required for {}",
                self.cfg.command.name()
            ))
        })?;
        self.params
            .insert("geometry".into(), json!({"r": g.r, "R": g.big_r}));
        Ok(g)
    }

    fn disk_geometry(&mut self) -> Result<DiskGeometry, InputError> {
        let g = self.geometry_raw()?;
        let big_r = g
            .big_r
            .ok_or_else(|| InputError("geometry.R is required".into()))?;
        DiskGeometry::new(g.r, big_r).map_err(|e| InputError(format!("geometry: {e}")))
    }

    fn disk(&mut self) -> Result<Disk, InputError> {
        let d = self.cfg.disk.clone().ok_or_else(|| {
            InputError(format!("disk is required for {}", self.cfg.command.name()))
        })?;
        self.params.insert(
            "disk".into(),
            json!({"center": d.center, "radius": d.radius}),
        );
        Disk::new(cx(d.center), d.radius).map_err(|e| InputError(format!("disk: {e}")))
    }

    fn family(&mut self) -> Result<FamilySpec, InputError> {
        let f = self.cfg.family.as_ref().ok_or_else(|| {
            InputError(format!(
                "family is required for {}",
                self.cfg.command.name()
            ))
        })?;
        self.params.insert(
            "family".into(),
            json!({"kind": f.kind, "indices": f.indices}),
        );
        input(f.build())
    }

    fn function(&mut self) -> Result<RationalFunction, InputError> {
        let f = self.cfg.function.as_ref().ok_or_else(|| {
            InputError(format!(
                "function or suite is required for {}",
                self.cfg.command.name()
            ))
        })?;
        input(f.build().map_err(|e| format!("function: {e}")))
    }

    fn suite_count(&mut self) -> Option<usize> {
        let n = self.cfg.suite.as_ref().map(|s| s.count)?;
        self.params.insert("suite_count".into(), json!(n));
        Some(n)
    }

    fn harness(&mut self) -> HarnessConfig {
        HarnessConfig {
            resolution: self.grid(HarnessConfig::default().resolution),
            ..HarnessConfig::default()
        }
    }

    fn residual(&mut self, key: &str, v: Json) {
        self.residuals.insert(key.into(), v);
    }
}

/// Outcome of a library call inside a scenario: computation errors are
/// contract failures, parameter errors are input errors.
fn classify(e: Error) -> Result<String, InputError> {
    match e {
        Error::InvalidParameter(msg) => Err(InputError(msg)),
        other => Ok(other.to_string()),
    }
}

/// Run one scenario.
pub fn run_scenario(cfg: &ScenarioConfig, ov: Overrides) -> Result<Outcome, InputError> {
    let start = Instant::now();
    let mut ctx = Context {
        cfg,
        ov,
        residuals: Map::new(),
        records: Vec::new(),
        attachments: Vec::new(),
        params: Map::new(),
    };
    if let Some(name) = &cfg.name {
        ctx.params.insert("name".into(), json!(name));
    }
    let passed = match cfg.command {
        Command::FftCheck => fft_check(&mut ctx)?,
        Command::CountingCheck => counting_check(&mut ctx)?,
        Command::Theorem2a | Command::Theorem2b => theorem2(&mut ctx)?,
        Command::Theorem1Scan => theorem1(&mut ctx)?,
        Command::Sharpness => sharpness(&mut ctx)?,
        Command::Estimates => estimates(&mut ctx)?,
        Command::Harnack => harnack(&mut ctx)?,
        Command::ExpansionDump => expansion_dump(&mut ctx)?,
    };
    Ok(Outcome {
        command: cfg.command,
        params: Json::Object(ctx.params),
        passed,
        residuals: ctx.residuals,
        records: ctx.records,
        runtime_ms: start.elapsed().as_millis(),
        attachments: ctx.attachments,
    })
}

/// Record a computation error as a failed contract.
fn fail(ctx: &mut Context, e: Error) -> Result<bool, InputError> {
    let msg = classify(e)?;
    ctx.residual("error", json!(msg));
    Ok(false)
}

fn fft_check(ctx: &mut Context) -> Result<bool, InputError> {
    let geom = ctx.geometry_raw()?;
    let spec = ctx.quadrature()?;
    let tol = ctx.tolerance(1e-6);
    let alpha = cx(ctx.cfg.params.base_point.unwrap_or_default());
    ctx.params
        .insert("base_point".into(), json!([alpha.re, alpha.im]));
    let functions = match ctx.suite_count() {
        Some(n) => corpus::standard_corpus(ctx.seed(), n, &[geom.r]),
        None => vec![ctx.function()?],
    };
    let mut worst = 0.0f64;
    for (i, f) in functions.iter().enumerate() {
        let chk = match check_first_fundamental(f, geom.r, alpha, &spec) {
            Ok(c) => c,
            Err(e) => return fail(ctx, e),
        };
        let i = i as u64;
        ctx.records.push(Record::new(i, "t_f", chk.of_f.t_alpha));
        ctx.records
            .push(Record::new(i, "t_recip", chk.of_recip.t_alpha));
        ctx.records.push(Record::new(i, "log_term", chk.log_term));
        ctx.records.push(
            Record::new(i, "residual", chk.residual).with_bound(tol, tol - chk.residual.abs()),
        );
        worst = worst.max(chk.residual.abs());
    }
    ctx.residual("max_abs_residual", json!(worst));
    Ok(worst < tol)
}

fn counting_check(ctx: &mut Context) -> Result<bool, InputError> {
    let tol = ctx.tolerance(1e-12);
    let cases = match ctx.suite_count() {
        Some(n) => {
            let mut rng = corpus::rng(ctx.seed());
            (0..n)
                .map(|_| corpus::counting_configuration(&mut rng))
                .collect()
        }
        None => {
            let g = ctx.geometry_raw()?;
            let big_r = g
                .big_r
                .ok_or_else(|| InputError("geometry.R is required".into()))?;
            let alpha = cx(ctx.cfg.params.base_point.unwrap_or_default());
            ctx.params
                .insert("base_point".into(), json!([alpha.re, alpha.im]));
            vec![(ctx.function()?, g.r, big_r, alpha)]
        }
    };
    let mut worst = f64::INFINITY;
    for (i, (f, r, big_r, alpha)) in cases.iter().enumerate() {
        let chk = match check_counting_inequality(f, *r, *big_r, *alpha) {
            Ok(c) => c,
            Err(e) => return fail(ctx, e),
        };
        ctx.records
            .push(Record::new(i as u64, "counting_lhs", chk.lhs).with_bound(chk.rhs, chk.margin));
        worst = worst.min(chk.margin);
    }
    ctx.residual("min_margin", json!(worst));
    Ok(worst >= -tol)
}

fn theorem2(ctx: &mut Context) -> Result<bool, InputError> {
    let family = ctx.family()?;
    let disk = ctx.disk()?;
    let k = ctx.k()?;
    let hc = ctx.harness();
    let expect = ctx.cfg.expect_pole_error;
    ctx.params.insert("expect_pole_error".into(), json!(expect));
    let report = if ctx.cfg.command == Command::Theorem2a {
        let m = ctx.required_u32(ctx.cfg.params.m, "m")?;
        harness::theorem2a_check(&family, k, m, &disk, &hc)
    } else {
        let p = ctx.required_u32(ctx.cfg.params.p, "p")?;
        harness::theorem2b_check(&family, k, p, &disk, &hc)
    };
    let report = match report {
        Ok(r) => r,
        Err(Error::PoleInDisk {
            index,
            location,
            order,
        }) => {
            ctx.residual(
                "pole",
                json!({"index": index, "location": [location.re, location.im], "order": order}),
            );
            ctx.records
                .push(Record::new(index, "pole_order", order as f64));
            return Ok(expect);
        }
        Err(e) => return fail(ctx, e),
    };
    for (i, &n) in report.indices.iter().enumerate() {
        ctx.records
            .push(Record::new(n, &report.quantity, report.sup_norms[i]));
        ctx.records
            .push(Record::new(n, "family_norm", report.family_norms[i]));
    }
    ctx.residual("slope", json!(report.slope));
    ctx.residual("report_verdict", json!(report.verdict));
    ctx.residual("family_verdict", json!(report.family_verdict));
    Ok(!expect && report.verdict == Verdict::ConvergesToZero)
}

fn theorem1(ctx: &mut Context) -> Result<bool, InputError> {
    let family = ctx.family()?;
    let disk = ctx.disk()?;
    let k = ctx.k()?;
    let alpha = ctx.alpha()?;
    let hc = ctx.harness();
    let report = match harness::theorem1_scan(&family, k, alpha, &disk, &hc) {
        Ok(r) => r,
        Err(e) => return fail(ctx, e),
    };
    for (i, &n) in report.indices.iter().enumerate() {
        ctx.records
            .push(Record::new(n, "sup_marty", report.sups[i].as_f64()));
    }
    ctx.residual("required_multiplicity", json!(report.required_multiplicity));
    ctx.residual("violations", json!(report.violations));
    ctx.residual("report_verdict", json!(report.verdict));
    // bounded exactly when the multiplicity hypothesis holds
    let consistent = if report.violations.is_empty() {
        report.verdict == Boundedness::Bounded
    } else {
        report.verdict == Boundedness::Unbounded
    };
    Ok(consistent)
}

fn sharpness(ctx: &mut Context) -> Result<bool, InputError> {
    let family = ctx.family()?;
    let k = ctx.k()?;
    let alpha = ctx.alpha()?;
    let tol = ctx.tolerance(0.02);
    match family.kind {
        FamilyKind::PowerPole { p } => {
            let radii = ctx
                .cfg
                .params
                .radii
                .clone()
                .unwrap_or_else(harness::default_radii);
            let rep = match harness::power_pole_exponent(k, alpha, p, &radii) {
                Ok(r) => r,
                Err(e) => return fail(ctx, e),
            };
            for (i, (rho, v)) in rep.samples.iter().enumerate() {
                let mut rec = Record::new(i as u64, "marty_at_radius", *v);
                rec.bound = Some(*rho);
                ctx.records.push(rec);
            }
            let err = rep.relative_error();
            ctx.records.push(
                Record::new(rep.samples.len() as u64, "fitted_slope", rep.fitted)
                    .with_bound(rep.predicted, tol - err),
            );
            ctx.residual("fitted_slope", json!(rep.fitted));
            ctx.residual("predicted_slope", json!(rep.predicted));
            ctx.residual("relative_error", json!(err));
            Ok(err <= tol)
        }
        FamilyKind::ShiftedPower { base } => {
            let points = ctx
                .cfg
                .params
                .points
                .as_ref()
                .map(|ps| ps.iter().map(|&c| cx(c)).collect())
                .unwrap_or_else(harness::default_points);
            let rep =
                match harness::shifted_power_check(k, alpha, base, &family.index_range, &points) {
                    Ok(r) => r,
                    Err(e) => return fail(ctx, e),
                };
            for row in &rep.rows {
                ctx.records.push(
                    Record::new(row.index, "marty_value", row.value)
                        .with_bound(row.bound, row.value - row.bound),
                );
            }
            ctx.residual("all_above_bound", json!(rep.all_above_bound));
            ctx.residual("diverging", json!(rep.diverging));
            Ok(rep.all_above_bound && rep.diverging)
        }
        _ => Err(InputError(
            "family.kind must be power_pole or shifted_power for sharpness".into(),
        )),
    }
}

fn estimates(ctx: &mut Context) -> Result<bool, InputError> {
    let geom = ctx.disk_geometry()?;
    let k = ctx.k()?;
    let m = ctx.required_u32(ctx.cfg.params.m, "m")?;
    let tol = ctx.tolerance(1e-9);
    let grid = ctx.grid(24);
    let x0 = crate::blaschke::x0_threshold(k, m, &geom);
    let rescale = ctx.cfg.params.rescale;
    let functions = match ctx.suite_count() {
        Some(n) => {
            let mut rng = corpus::rng(ctx.seed());
            let fraction = rescale.unwrap_or(0.9);
            ctx.params.insert("rescale".into(), json!(fraction));
            (0..n)
                .map(|_| {
                    let g = corpus::multiplicity_polynomial(&mut rng, m, 0.9, &[geom.s()], 0.01);
                    corpus::rescale_to(&g, 1.0, fraction * x0)
                })
                .collect()
        }
        None => {
            let g = ctx.function()?;
            match rescale {
                Some(fraction) => {
                    ctx.params.insert("rescale".into(), json!(fraction));
                    vec![corpus::rescale_to(&g, 1.0, fraction * x0)]
                }
                None => vec![g],
            }
        }
    };
    ctx.residual("x0", json!(x0));
    let mut ok = true;
    let mut worst = [f64::INFINITY; 4];
    for (i, g) in functions.iter().enumerate() {
        let rep = match harness::estimate_chain_check(g, k, m, &geom, grid) {
            Ok(r) => r,
            Err(e) => return fail(ctx, e),
        };
        let i = i as u64;
        for (name, margin) in [
            ("log_derivative_margin", rep.log_derivative_margin),
            ("product_margin", rep.product_margin),
            ("harnack_form_margin", rep.harnack_form_margin),
        ] {
            ctx.records.push(
                Record::new(i, name, margin.relative).with_bound(-tol, margin.relative + tol),
            );
        }
        ctx.records.push(
            Record::new(i, "harnack", rep.harnack.margin)
                .with_bound(-1e-12, rep.harnack.margin + 1e-12),
        );
        worst[0] = worst[0].min(rep.log_derivative_margin.relative);
        worst[1] = worst[1].min(rep.product_margin.relative);
        worst[2] = worst[2].min(rep.harnack_form_margin.relative);
        worst[3] = worst[3].min(rep.harnack.margin);
        ok &= rep.passes(tol);
    }
    ctx.residual("min_log_derivative_margin", json!(worst[0]));
    ctx.residual("min_product_margin", json!(worst[1]));
    ctx.residual("min_harnack_form_margin", json!(worst[2]));
    ctx.residual("min_harnack_margin", json!(worst[3]));
    Ok(ok)
}

fn harnack(ctx: &mut Context) -> Result<bool, InputError> {
    let geom = ctx.disk_geometry()?;
    let tol = ctx.tolerance(1e-12);
    let grid = ctx.grid(16);
    let h = ctx.function()?;
    let rep = match harness::harnack_check(&h, &geom, grid) {
        Ok(r) => r,
        Err(e) => return fail(ctx, e),
    };
    ctx.records
        .push(Record::new(0, "harnack", rep.margin).with_bound(-tol, rep.margin + tol));
    ctx.residual("margin", json!(rep.margin));
    ctx.residual("points", json!(rep.points));
    Ok(rep.margin >= -tol)
}

fn expansion_dump(ctx: &mut Context) -> Result<bool, InputError> {
    let k = ctx.k()?;
    let table = expansion_coefficients(k).map_err(|e| InputError(e.to_string()))?;
    for (i, t) in table.terms.iter().enumerate() {
        let parts: Vec<String> = t.parts.iter().map(|j| j.to_string()).collect();
        ctx.records.push(Record::new(
            i as u64,
            &format!("c[{}]", parts.join("+")),
            t.coefficient as f64,
        ));
    }
    ctx.residual("terms", json!(table.terms.len()));
    ctx.attachments
        .push((format!("expansion_k{k}.json"), table.to_json()));
    Ok(true)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV text with the fixed header.
pub fn results_csv(records: &[Record]) -> String {
    let mut out = String::from("index,quantity,value,bound,margin\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.index,
            r.quantity,
            r.value,
            fmt_opt(r.bound),
            fmt_opt(r.margin)
        );
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Write `results.csv`, `summary.json` and any attachments into `dir`.
pub fn emit_results(outcome: &Outcome, dir: &Path) -> Result<(), InputError> {
    let io = |e: std::io::Error| InputError(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    write_atomic(&dir.join("results.csv"), &results_csv(&outcome.records)).map_err(io)?;
    let summary = serde_json::to_string_pretty(&outcome.summary()).expect("summary serializes");
    write_atomic(&dir.join("summary.json"), &(summary + "\n")).map_err(io)?;
    for (name, contents) in &outcome.attachments {
        write_atomic(&dir.join(name), contents).map_err(io)?;
    }
    Ok(())
}

/// Output directory of scenario `i` of `count`.
fn scenario_dir(out: &Path, cfg: &ScenarioConfig, i: usize, count: usize) -> PathBuf {
    match &cfg.output {
        Some(p) => out.join(p),
        None if count == 1 => out.to_path_buf(),
        None => out.join(format!("scenario_{i:03}_{}", cfg.command.name())),
    }
}

/// Run every scenario of the config file and return the process exit code.
pub fn run(args: &Args) -> i32 {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_INPUT;
        }
    };
    let scenarios = match parse_scenarios(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let ov = Overrides {
        seed: args.seed,
        quad_nodes: args.quad_nodes,
        tol: args.tol,
        grid: args.grid,
    };
    let mut code = EXIT_PASS;
    for (i, cfg) in scenarios.iter().enumerate() {
        let label = cfg
            .name
            .clone()
            .unwrap_or_else(|| cfg.command.name().to_string());
        let outcome = match run_scenario(cfg, ov) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: scenario {i} ({label}): {e}");
                return EXIT_INPUT;
            }
        };
        let dir = scenario_dir(&args.out, cfg, i, scenarios.len());
        if let Err(e) = emit_results(&outcome, &dir) {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} scenario {i} ({label})");
        if let Some(err) = outcome.residuals.get("error") {
            eprintln!("  {err}");
        }
        code = code.max(outcome.exit_code());
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> ScenarioConfig {
        parse_scenarios(text).unwrap().remove(0)
    }

    #[test]
    fn constant_fft_check_passes() {
        let cfg = scenario(
            r#"{"command": "fft-check", "function": {"num": [[2, 0]]}, "geometry": {"r": 0.5}}"#,
        );
        let out = run_scenario(&cfg, Overrides::default()).unwrap();
        assert!(out.passed);
        assert!(out.residuals["max_abs_residual"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn empty_records_give_header_only() {
        assert_eq!(results_csv(&[]), "index,quantity,value,bound,margin\n");
    }

    #[test]
    fn malformed_config_is_input_error() {
        assert!(parse_scenarios(r#"{"command": "nope"}"#).is_err());
        assert!(parse_scenarios(r#"{"command": "harnack", "extra": 1}"#).is_err());
        let cfg = scenario(r#"{"command": "theorem2a", "disk": {"radius": 0.5}}"#);
        assert!(run_scenario(&cfg, Overrides::default()).is_err());
    }

    #[test]
    fn expected_pole_error_passes() {
        let cfg = scenario(
            r#"{"command": "theorem2b", "family": {"kind": "scaled_pole", "p": 2, "indices": [1, 2, 3, 4]},
                "disk": {"radius": 0.5}, "params": {"k": 1, "p": 2}, "expect_pole_error": true}"#,
        );
        let out = run_scenario(&cfg, Overrides::default()).unwrap();
        assert!(out.passed);
        assert_eq!(out.residuals["pole"]["order"], json!(1));
    }

    #[test]
    fn sharpness_records_slope() {
        let cfg = scenario(
            r#"{"command": "sharpness", "family": {"kind": "power_pole", "p": 3, "indices": [1]},
                "params": {"k": 2, "alpha": 1.5}}"#,
        );
        let out = run_scenario(&cfg, Overrides::default()).unwrap();
        assert!(out.passed);
        let slope = out.residuals["fitted_slope"].as_f64().unwrap();
        assert!((slope + 0.5).abs() < 0.01);
    }

    #[test]
    fn convergence_report_rows() {
        let cfg = scenario(
            r#"{"command": "theorem2b", "family": {"kind": "power_pole", "p": 2, "indices": [1,2,3,4,5,6,7,8]},
                "disk": {"radius": 0.5}, "params": {"k": 1, "p": 2}}"#,
        );
        let out = run_scenario(&cfg, Overrides::default()).unwrap();
        // power_pole is index independent: d_n is constant, so no decay
        assert!(!out.passed);
        assert_eq!(
            out.records.iter().filter(|r| r.quantity == "sup_d").count(),
            8
        );
    }
}

//! Experiment orchestration and CSV/JSON emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::besov::{besov_norm, dual_params, duality_pairing, p_lower_bound, BesovParams, NormSpec};
use crate::config::{derived_seed, ExperimentConfig, ExperimentKind, M0Choice};
use crate::czo::{besov_boundedness_experiment, ortho_decay, BlockComposite, BoundednessCase, RemainderOperator};
use crate::error::{Error, Result};
use crate::frame::{choose_m0, FrameOperator, GalerkinFrame, ProbeSpec, ProbeSubspace};
use crate::geometry::{hex, DunklStructure};
use crate::grid::{cache, GradedSpec, QuadratureRule};
use crate::kernels::laws::{interior_points, mass_defect, semigroup_error};
use crate::kernels::{BlockVariant, KernelKind, Kernels};
use crate::linalg::{weighted_norm, PowerIteration};

/// Candidates tried when M0 is "auto".
pub const AUTO_M0_CANDIDATES: std::ops::RangeInclusive<u32> = 1..=6;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// A named table destined for `<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Column name ↦ unit, for the JSON sidecar.
    pub units: BTreeMap<String, String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.0.to_owned()).collect(),
            units: columns.iter().map(|c| (c.0.to_owned(), c.1.to_owned())).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// RFC-4180 text with a header row; floats carry 17 significant digits.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(&self.columns).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub ok: bool,
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config_hash: String,
    pub seed: u64,
    pub experiments: Vec<ExperimentOutcome>,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.experiments.iter().all(|e| e.ok)
    }

    /// Hash over every metric and table cell; equal for identical runs.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.config_hash.as_bytes());
        for e in &self.experiments {
            h.update(serde_json::to_vec(e).unwrap_or_default());
        }
        hex(&h.finalize())
    }
}

/// Frame, probe subspace and M0 search history shared by experiments.
struct Resolved<'a> {
    frame: FrameOperator<'a>,
    probe: ProbeSubspace,
    history: Vec<(u32, f64)>,
}

struct Context<'a> {
    resolved: OnceLock<std::result::Result<Resolved<'a>, String>>,
    cfg: &'a ExperimentConfig,
    structure: &'a DunklStructure,
    kernels: &'a Kernels,
    params: Vec<BesovParams>,
    power: PowerIteration,
}

impl<'a> Context<'a> {
    fn rng(&self, kind: ExperimentKind) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derived_seed(self.cfg.seed, kind.name()))
    }

    fn frame(&self, m0: u32) -> Result<FrameOperator<'a>> {
        fs::create_dir_all(&self.cfg.cache_dir).map_err(|e| Error::io(&self.cfg.cache_dir, e))?;
        FrameOperator::build_cached(self.kernels, self.cfg.frame(m0), Some(&self.cfg.cache_dir))
    }

    /// The configured frame with its probe subspace, built once per run.
    fn resolved_frame(&self) -> Result<&Resolved<'a>> {
        self.resolved
            .get_or_init(|| self.resolve().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Config(format!("frame setup failed: {e}")))
    }

    fn resolve(&self) -> Result<Resolved<'a>> {
        let spec = ProbeSpec::default();
        match self.cfg.scales.m0 {
            M0Choice::Fixed(m0) => {
                let frame = self.frame(m0)?;
                let probe = ProbeSubspace::build(self.kernels, frame.rule(), &spec)?;
                Ok(Resolved { frame, probe, history: Vec::new() })
            }
            M0Choice::Auto(_) => {
                let c = choose_m0(self.kernels, self.cfg.frame(1), &spec, AUTO_M0_CANDIDATES, &self.power)?;
                Ok(Resolved { frame: c.frame, probe: c.probe, history: c.history })
            }
        }
    }

    fn default_spec(&self) -> NormSpec {
        self.params.first().map(BesovParams::spec).unwrap_or(NormSpec {
            alpha: 0.0,
            p: 2.0,
            q: 2.0,
        })
    }
}

type Produced = (BTreeMap<String, f64>, Vec<Table>);

/// Runs every selected experiment and writes its tables under `out_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let structure = cfg.structure.build()?;
    let kernels = Kernels::new(structure.clone())?;
    let ctx = Context {
        resolved: OnceLock::new(),
        cfg,
        structure: &structure,
        kernels: &kernels,
        params: cfg.besov_params(&structure)?,
        power: PowerIteration::default(),
    };
    let one = |kind: &ExperimentKind| {
        let produced = match kind {
            ExperimentKind::KernelsCheck => kernels_check(&ctx),
            ExperimentKind::BesovNorm => besov_norm_experiment(&ctx),
            ExperimentKind::Reconstruct => reconstruct(&ctx),
            ExperimentKind::Duality => duality(&ctx),
            ExperimentKind::OrthoDecay => decay(&ctx),
            ExperimentKind::CzoBound => czo_bound(&ctx),
        };
        match produced {
            Ok((metrics, tables)) => ExperimentOutcome {
                name: kind.name().to_owned(),
                ok: true,
                error: None,
                metrics,
                tables,
            },
            Err(e) => ExperimentOutcome {
                name: kind.name().to_owned(),
                ok: false,
                error: Some(e.to_string()),
                metrics: BTreeMap::new(),
                tables: Vec::new(),
            },
        }
    };
    let experiments: Vec<ExperimentOutcome> = if cfg.parallel {
        cfg.experiments.par_iter().map(one).collect()
    } else {
        cfg.experiments.iter().map(one).collect()
    };
    let mut report = RunReport {
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        experiments,
        files: Vec::new(),
    };
    report.files = emit_tables(&report, &cfg.out_dir)?;
    Ok(report)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: &'a str,
    seed: u64,
    experiments: Vec<SidecarEntry<'a>>,
}

#[derive(Serialize)]
struct SidecarEntry<'a> {
    name: &'a str,
    ok: bool,
    error: &'a Option<String>,
    metrics: &'a BTreeMap<String, f64>,
    tables: Vec<SidecarTable<'a>>,
}

#[derive(Serialize)]
struct SidecarTable<'a> {
    file: String,
    units: &'a BTreeMap<String, String>,
}

/// Writes one CSV per table plus `report.json`; returns the paths written.
pub fn emit_tables(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for e in &report.experiments {
        let mut tables = Vec::new();
        for t in &e.tables {
            let file = format!("{}.csv", t.name);
            let path = dir.join(&file);
            fs::write(&path, t.to_csv()?).map_err(|err| Error::io(&path, err))?;
            files.push(path);
            tables.push(SidecarTable { file, units: &t.units });
        }
        entries.push(SidecarEntry {
            name: &e.name,
            ok: e.ok,
            error: &e.error,
            metrics: &e.metrics,
            tables,
        });
    }
    let sidecar = Sidecar {
        config_hash: &report.config_hash,
        seed: report.seed,
        experiments: entries,
    };
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(files)
}

/// `cache list|purge|verify` as printable lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheCommand {
    List,
    Purge,
    Verify,
}

/// Returns the lines to print and whether every entry was healthy.
pub fn cache_admin(cmd: CacheCommand, dir: &Path) -> Result<(Vec<String>, bool)> {
    match cmd {
        CacheCommand::List => Ok((
            cache::list(dir)?
                .into_iter()
                .map(|e| format!("{}  {}x{}  {} bytes  {}", e.hash, e.rows, e.cols, e.bytes, e.path.display()))
                .collect(),
            true,
        )),
        CacheCommand::Purge => Ok((vec![format!("removed {} entries", cache::purge(dir)?)], true)),
        CacheCommand::Verify => {
            let outcomes = cache::verify(dir)?;
            let healthy = outcomes.iter().all(|o| o.ok);
            let lines = outcomes
                .into_iter()
                .map(|o| format!("{}  {}  {}", if o.ok { "ok" } else { "CORRUPT" }, o.path.display(), o.detail))
                .collect();
            Ok((lines, healthy))
        }
    }
}

/// Rule for kernel-law integrals: fine core, geometric tails far past every scale.
pub fn law_rule(s: &DunklStructure) -> Result<QuadratureRule> {
    let spec = match s.dim() {
        1 => GradedSpec {
            core_half_width: 4.0,
            core_cell: 1.0 / 64.0,
            order: 4,
            outer_radius: 1e9,
            growth: 1.25,
        },
        _ => GradedSpec {
            core_half_width: 2.0,
            core_cell: 0.25,
            order: 4,
            outer_radius: 1e5,
            growth: 1.6,
        },
    };
    QuadratureRule::graded(s, spec)
}

fn kernels_check(ctx: &Context) -> Result<Produced> {
    let rule = law_rule(ctx.structure)?;
    let one_d = ctx.structure.dim() == 1;
    let pts = interior_points(&rule, if one_d { 2.0 } else { 1.0 }, if one_d { 64 } else { 8 });
    let k_radius = if one_d { 4 } else { 1 };
    let mut table = Table::new("kernels", &[("law", "name"), ("parameter", "t or k"), ("defect", "absolute")]);
    let mut metrics = BTreeMap::new();
    let mut worst = |key: &str, v: f64| {
        let e = metrics.entry(key.to_owned()).or_insert(0.0f64);
        *e = e.max(v);
    };
    for t in [0.0625, 1.0, 16.0] {
        let h = mass_defect(ctx.kernels, KernelKind::Heat { t }, &rule, &pts)?.max();
        let p = mass_defect(ctx.kernels, KernelKind::Poisson { t }, &rule, &pts)?.max();
        table.push(vec!["heat_mass".into(), t.into(), h.into()]);
        table.push(vec!["poisson_mass".into(), t.into(), p.into()]);
        worst("heat_mass", h);
        worst("poisson_mass", p);
    }
    for k in -k_radius..=k_radius {
        let kind = KernelKind::Block {
            k,
            variant: BlockVariant::Plain,
        };
        let d = mass_defect(ctx.kernels, kind, &rule, &pts)?.max();
        table.push(vec!["block_cancellation".into(), Cell::Int(k as i64), d.into()]);
        worst("block_cancellation", d);
    }
    let sp = semigroup_error(ctx.kernels, |t| KernelKind::Poisson { t }, 0.25, 0.5, &rule, &pts)?;
    let sh = semigroup_error(ctx.kernels, |t| KernelKind::Heat { t }, 0.25, 0.5, &rule, &pts)?;
    table.push(vec!["poisson_semigroup".into(), 0.75.into(), sp.into()]);
    table.push(vec!["heat_semigroup".into(), 0.75.into(), sh.into()]);
    worst("poisson_semigroup", sp);
    worst("heat_semigroup", sh);
    Ok((metrics, vec![table]))
}

fn besov_norm_experiment(ctx: &Context) -> Result<Produced> {
    let Resolved { frame, probe, .. } = ctx.resolved_frame()?;
    let mut rng = ctx.rng(ExperimentKind::BesovNorm);
    let fields = (0..ctx.cfg.settings.samples)
        .map(|_| frame.analysis(&probe.random_member(&mut rng)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "besov_norm",
        &[
            ("sample", "index"),
            ("alpha", "1"),
            ("p", "1"),
            ("q", "1"),
            ("norm", "Besov quasi-norm"),
            ("boundary_term", "Besov quasi-norm"),
        ],
    );
    let mut violations = 0.0;
    for params in &ctx.params {
        let spec = params.spec();
        let reports = fields
            .iter()
            .map(|f| besov_norm(f, frame.grids(), &spec))
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in reports.iter().enumerate() {
            table.push(vec![
                Cell::Int(i as i64),
                spec.alpha.into(),
                spec.p.into(),
                spec.q.into(),
                r.value.into(),
                r.boundary_term.into(),
            ]);
        }
        let theta = spec.theta();
        for w in fields.windows(2) {
            let sum = besov_norm(&w[0].add(&w[1])?, frame.grids(), &spec)?.value;
            let a = besov_norm(&w[0], frame.grids(), &spec)?.value;
            let b = besov_norm(&w[1], frame.grids(), &spec)?.value;
            if sum.powf(theta) > (a.powf(theta) + b.powf(theta)) * (1.0 + 1e-12) {
                violations += 1.0;
            }
        }
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("m0".into(), frame.m0() as f64);
    metrics.insert("theta_triangle_violations".into(), violations);
    Ok((metrics, vec![table]))
}

fn reconstruct(ctx: &Context) -> Result<Produced> {
    let Resolved { frame, probe, history } = ctx.resolved_frame()?;
    let galerkin = GalerkinFrame::new(frame, probe.clone())?;
    let mut rng = ctx.rng(ExperimentKind::Reconstruct);
    let spec = ctx.default_spec();
    let order = ctx.cfg.settings.neumann_order;
    let f = galerkin.probe().random_member(&mut rng);
    let inv = galerkin.neumann_invert(&f, order, &ctx.power)?;
    let rec = galerkin.reconstruct(&f, &inv, &spec)?;

    let mut recon = Table::new(
        "reconstruct",
        &[("m", "scale cutoff"), ("l2_err", "relative"), ("besov_err", "relative")],
    );
    for r in &rec.rows {
        recon.push(vec![Cell::Int(r.m as i64), r.l2_err.into(), r.besov_err.into()]);
    }
    let mut neumann = Table::new("neumann", &[("j", "partial sum"), ("residual", "relative")]);
    for (j, r) in inv.residuals.iter().enumerate() {
        neumann.push(vec![Cell::Int(j as i64), (*r).into()]);
    }
    let mut search = Table::new("m0_search", &[("m0", "1"), ("remainder_norm", "operator norm")]);
    for (m0, n) in history {
        search.push(vec![Cell::Int(*m0 as i64), (*n).into()]);
    }

    // Norm equivalence between f and its Neumann preimage h.
    let mut equiv = Table::new(
        "equivalence",
        &[
            ("sample", "index"),
            ("f_l2", "L2"),
            ("h_l2", "L2"),
            ("f_besov", "Besov quasi-norm"),
            ("h_besov", "Besov quasi-norm"),
        ],
    );
    let w = frame.rule().weights();
    let (mut l2_up, mut l2_down, mut b_up, mut b_down) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..ctx.cfg.settings.samples {
        let g = galerkin.probe().random_member(&mut rng);
        let gi = galerkin.neumann_invert(&g, order, &ctx.power)?;
        let (gl2, hl2) = (weighted_norm(w, &g), weighted_norm(w, &gi.h));
        let gb = besov_norm(&frame.analysis(&g)?, frame.grids(), &spec)?.value;
        let hb = besov_norm(&frame.analysis(&gi.h)?, frame.grids(), &spec)?.value;
        l2_up = l2_up.max(hl2 / gl2);
        l2_down = l2_down.max(gl2 / hl2);
        b_up = b_up.max(hb / gb);
        b_down = b_down.max(gb / hb);
        equiv.push(vec![Cell::Int(i as i64), gl2.into(), hl2.into(), gb.into(), hb.into()]);
    }

    let last = rec.rows.last().expect("at least one cutoff");
    let metrics = BTreeMap::from([
        ("m0".to_owned(), frame.m0() as f64),
        ("remainder_norm".to_owned(), inv.remainder_norm),
        ("decay_ratio".to_owned(), inv.max_decay_ratio(1e-13)),
        ("final_residual".to_owned(), inv.final_residual()),
        ("full_residual".to_owned(), inv.full_residual),
        ("full_range_l2_err".to_owned(), last.l2_err),
        ("full_range_besov_err".to_owned(), last.besov_err),
        ("l2_upper".to_owned(), l2_up),
        ("l2_lower".to_owned(), l2_down),
        ("besov_upper".to_owned(), b_up),
        ("besov_lower".to_owned(), b_down),
    ]);
    Ok((metrics, vec![recon, neumann, search, equiv]))
}

/// The four sign patterns of (p − 1, q − 1) at smoothness α, each admissible
/// in homogeneous dimension N.
pub fn duality_cases(alpha: f64, n: f64) -> Result<Vec<BesovParams>> {
    let p_low = 0.5 * (p_lower_bound(alpha, n) + 1.0);
    [(2.0, 2.0), (2.0, 0.8), (p_low, 2.0), (p_low, 0.8)]
        .into_iter()
        .map(|(p, q)| BesovParams::new(alpha, p, q, n))
        .collect()
}

fn duality(ctx: &Context) -> Result<Produced> {
    let Resolved { frame, probe, .. } = ctx.resolved_frame()?;
    let mut rng = ctx.rng(ExperimentKind::Duality);
    let cases = duality_cases(0.3, ctx.structure.homogeneous_dim())?;
    let mut table = Table::new(
        "duality",
        &[("case", "1-4"), ("pairing", "<f,g>"), ("bound", "norm product"), ("ratio", "1")],
    );
    let mut metrics = BTreeMap::new();
    let pairs = ctx.cfg.settings.duality_pairs;
    let fs: Vec<Vec<f64>> = (0..pairs).map(|_| probe.random_member(&mut rng)).collect();
    let gs: Vec<Vec<f64>> = (0..pairs).map(|_| probe.random_member(&mut rng)).collect();
    let fa = fs.iter().map(|f| frame.analysis(f)).collect::<Result<Vec<_>>>()?;
    let ga = gs.iter().map(|g| frame.analysis(g)).collect::<Result<Vec<_>>>()?;
    for (c, params) in cases.iter().enumerate() {
        let (spec, dual) = (params.spec(), dual_params(params).spec());
        let mut fitted = 0.0f64;
        for i in 0..pairs {
            let pairing = duality_pairing(&fs[i], &gs[i], frame.rule())?;
            let bound = besov_norm(&fa[i], frame.grids(), &spec)?.value * besov_norm(&ga[i], frame.grids(), &dual)?.value;
            let ratio = pairing.abs() / bound;
            fitted = fitted.max(ratio);
            table.push(vec![Cell::Int(c as i64 + 1), pairing.into(), bound.into(), ratio.into()]);
        }
        metrics.insert(format!("fitted_c_case{}", c + 1), fitted);
    }
    Ok((metrics, vec![table]))
}

/// Sample points and integration rule for the composite decay fit.
pub fn decay_setup(s: &DunklStructure, radius: i32) -> Result<(Vec<f64>, QuadratureRule)> {
    let cell = (2.0f64).powi(-(radius + 3));
    let (points, spec) = match s.dim() {
        1 => (
            (0..25).map(|i| -1.5 + 0.125 * i as f64).collect(),
            GradedSpec {
                core_half_width: 4.0,
                core_cell: cell,
                order: 4,
                outer_radius: 1e7,
                growth: 1.25,
            },
        ),
        _ => {
            let axis: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
            (
                axis.iter().flat_map(|&a| axis.iter().flat_map(move |&b| [a, b])).collect(),
                GradedSpec {
                    core_half_width: 2.0,
                    core_cell: cell,
                    order: 2,
                    outer_radius: 1e5,
                    growth: 1.5,
                },
            )
        }
    };
    let rule = QuadratureRule::graded(s, spec)?;
    if rule.len() > 200_000 {
        return Err(Error::Config(format!(
            "decay radius {radius} needs {} integration nodes; reduce settings.decay_radius",
            rule.len()
        )));
    }
    Ok((points, rule))
}

/// All (k, k′) with both scales in [−r, r].
pub fn decay_pairs(radius: i32) -> Vec<(i32, i32)> {
    (-radius..=radius)
        .flat_map(|k| (-radius..=radius).map(move |kp| (k, kp)))
        .collect()
}

fn decay(ctx: &Context) -> Result<Produced> {
    let st = &ctx.cfg.settings;
    let (points, rule) = decay_setup(ctx.structure, st.decay_radius)?;
    let family = BlockComposite {
        kernels: ctx.kernels,
        rule: &rule,
        points,
        m0: st.decay_m0,
    };
    let fit = ortho_decay(&family, ctx.structure, &decay_pairs(st.decay_radius), 0.5 * st.epsilon)?;
    let mut table = Table::new(
        "ortho_decay",
        &[("k_gap", "|k-k'|"), ("log2_max", "log2"), ("fit_slope", "log2 per gap")],
    );
    for (gap, v) in &fit.per_gap {
        table.push(vec![Cell::Int(*gap as i64), (*v).into(), fit.slope.into()]);
    }
    let metrics = BTreeMap::from([
        ("slope".to_owned(), fit.slope),
        ("intercept".to_owned(), fit.intercept),
    ]);
    Ok((metrics, vec![table]))
}

fn czo_bound(ctx: &Context) -> Result<Produced> {
    let st = &ctx.cfg.settings;
    let params = ctx
        .params
        .iter()
        .find(|p| BoundednessCase::III.validate(p, st.epsilon).is_ok())
        .copied()
        .ok_or_else(|| {
            Error::Config(format!(
                "czo-bound needs a besov entry admissible for case iii with ε₀ = {}",
                st.epsilon
            ))
        })?;
    let mut table = Table::new("czo_bound", &[("m0", "1"), ("sample", "index"), ("ratio", "Besov norm ratio")]);
    let mut metrics = BTreeMap::new();
    let seed = derived_seed(ctx.cfg.seed, ExperimentKind::CzoBound.name());
    for &m0 in &st.czo_m0 {
        let frame = ctx.frame(m0)?;
        let probe = ProbeSubspace::build(ctx.kernels, frame.rule(), &ProbeSpec::default())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..st.czo_samples).map(|_| probe.random_member(&mut rng)).collect();
        let op = RemainderOperator {
            frame: &frame,
            epsilon: st.epsilon,
        };
        let rep = besov_boundedness_experiment(&op, &frame, &params, BoundednessCase::III, &inputs)?;
        for (i, r) in rep.ratios.iter().enumerate() {
            table.push(vec![Cell::Int(m0 as i64), Cell::Int(i as i64), (*r).into()]);
        }
        metrics.insert(format!("max_ratio_m0_{m0}"), rep.max_ratio);
    }
    Ok((metrics, vec![table]))
}

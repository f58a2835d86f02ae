//! The named experiments: cell planning and per-cell work.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use growgap::generators::{
    build_tiling, gen_expander_tree, gen_tree, ExpanderTreeParams, HyperbolicParams,
    HyperbolicTiling,
};
use growgap::geometry::{
    cheeger_exact, enumerate_connected_sets, growth_parameter, hyperbolic_audit,
    peierls_audit_regions, standard_regions, AuditRecord, GraphMeta, Region,
};
use growgap::gibbs::{
    claim32_audit, correlation_decay_profile, full_mask, magnetization_distribution,
    BoundaryCondition, GibbsParams, IsingSystem,
};
use growgap::glauber::Dynamics;
use growgap::spectral::{
    gap_report, stationary_law, tv_mixing_time, ContractionMode, GapReportOptions, LanczosOptions,
    CONTRACTION_EXACT_CAP, MIXING_CAP,
};
use growgap::{ball, LayeredGraph};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, Coupling, ExperimentConfig, GraphSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    GenerateGraph,
    VerifyGeometry,
    PeierlsAudit,
    KestenAudit,
    ExactGibbs,
    Correlation,
    Claim32,
    Gap,
    Mixing,
    FreeVsPlus,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::GenerateGraph => "generate-graph",
            Task::VerifyGeometry => "verify-geometry",
            Task::PeierlsAudit => "peierls-audit",
            Task::KestenAudit => "kesten-audit",
            Task::ExactGibbs => "exact-gibbs",
            Task::Correlation => "correlation",
            Task::Claim32 => "claim32",
            Task::Gap => "gap",
            Task::Mixing => "mixing",
            Task::FreeVsPlus => "free-vs-plus",
        }
    }

    /// Whether this task emits the sweep CSV.
    pub fn has_table(self) -> bool {
        matches!(self, Task::Gap | Task::FreeVsPlus)
    }
}

/// One unit of parallel work.
#[derive(Debug, Clone)]
pub struct Cell {
    pub check: &'static str,
    pub radius: Option<usize>,
    pub bc: Option<BoundaryCondition>,
    pub beta: Option<f64>,
}

impl Cell {
    fn check(check: &'static str) -> Self {
        Cell {
            check,
            radius: None,
            bc: None,
            beta: None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("check".into(), json!(self.check));
        if let Some(r) = self.radius {
            m.insert("radius".into(), json!(r));
        }
        if let Some(bc) = &self.bc {
            m.insert("bc".into(), json!(bc.tag()));
        }
        if let Some(b) = self.beta {
            m.insert("beta".into(), json!(b));
        }
        Value::Object(m)
    }
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub radius: usize,
    pub beta: f64,
    pub bc: String,
    pub exact_gap: Option<f64>,
    pub upper: f64,
    pub lower: Option<f64>,
    pub tau1: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

pub struct CellOutput {
    pub result: Value,
    pub row: Option<SweepRow>,
}

impl CellOutput {
    fn record(result: impl Serialize) -> Self {
        CellOutput {
            result: serde_json::to_value(result).expect("results serialize"),
            row: None,
        }
    }
}

/// The generated graph, plus faces for tilings.
pub struct Built {
    pub graph: LayeredGraph,
    pub tiling: Option<HyperbolicTiling>,
}

pub fn build_graph(spec: &GraphSpec) -> growgap::Result<Built> {
    match spec {
        GraphSpec::Tree { delta, depth } => Ok(Built {
            graph: gen_tree(*delta, *depth)?,
            tiling: None,
        }),
        GraphSpec::Hyperbolic { v, s, depth } => {
            let t = build_tiling(HyperbolicParams::new(*v, *s)?, *depth)?;
            Ok(Built {
                graph: t.graph.clone(),
                tiling: Some(t),
            })
        }
        GraphSpec::ExpanderTree {
            delta,
            d,
            seed,
            layer_degrees,
            depth,
        } => {
            let mut p = ExpanderTreeParams::new(*delta, *d, *seed);
            p.layer_degrees = layer_degrees.clone();
            Ok(Built {
                graph: gen_expander_tree(&p, *depth)?,
                tiling: None,
            })
        }
    }
}

fn sweep(
    radii: &[usize],
    bcs: &[BoundaryCondition],
    betas: &[f64],
    check: &'static str,
) -> Vec<Cell> {
    let mut out = Vec::new();
    for &r in radii {
        for &beta in betas {
            for bc in bcs {
                out.push(Cell {
                    check,
                    radius: Some(r),
                    bc: Some(bc.clone()),
                    beta: Some(beta),
                });
            }
        }
    }
    out
}

/// Cells for `task`, reading only the configuration fields the task needs.
pub fn plan(task: Task, cfg: &ExperimentConfig) -> Result<Vec<Cell>, ConfigError> {
    Ok(match task {
        Task::GenerateGraph => vec![Cell::check("graph")],
        Task::VerifyGeometry => {
            let mut cells = vec![Cell::check("growth_parameter")];
            if matches!(cfg.graph, GraphSpec::Hyperbolic { .. }) {
                cells.push(Cell::check("hyperbolic_structure"));
            }
            for r in cfg.radii()? {
                cells.push(Cell {
                    radius: Some(r),
                    ..Cell::check("cheeger_exact")
                });
            }
            cells
        }
        Task::PeierlsAudit => {
            cfg.set_size()?;
            cfg.radii()?
                .into_iter()
                .map(|r| Cell {
                    radius: Some(r),
                    ..Cell::check("peierls_audit")
                })
                .collect()
        }
        Task::KestenAudit => {
            cfg.kesten_size()?;
            vec![Cell::check("kesten_counts")]
        }
        Task::ExactGibbs => {
            cfg.h()?;
            cfg.max_spins()?;
            sweep(&cfg.radii()?, &cfg.bcs()?, &cfg.betas()?, "exact_gibbs")
        }
        Task::Correlation => {
            cfg.h()?;
            sweep(
                &cfg.radii()?,
                &cfg.bcs()?,
                &cfg.betas()?,
                "correlation_profile",
            )
        }
        Task::Claim32 => {
            cfg.h()?;
            cfg.set_size()?;
            sweep(
                &cfg.radii()?,
                &[BoundaryCondition::Plus],
                &cfg.betas()?,
                "claim32",
            )
        }
        Task::Gap | Task::FreeVsPlus => {
            cfg.h()?;
            cfg.max_spins()?;
            cfg.estimators()?;
            cfg.coupling()?;
            cfg.lanczos_tol()?;
            let bcs = if task == Task::Gap {
                cfg.bcs()?
            } else {
                vec![BoundaryCondition::Plus, BoundaryCondition::Free]
            };
            sweep(&cfg.radii()?, &bcs, &cfg.betas()?, "gap_report")
        }
        Task::Mixing => {
            cfg.h()?;
            sweep(&cfg.radii()?, &cfg.bcs()?, &cfg.betas()?, "tv_mixing_time")
        }
    })
}

/// Read-only state shared by the workers.
pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub built: &'a Built,
    pub out: &'a Path,
}

type CellResult = Result<CellOutput, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn audit(
    g: &LayeredGraph,
    op: &str,
    params: Value,
    worst_case: Value,
    violations: u64,
) -> CellOutput {
    CellOutput::record(AuditRecord {
        graph_meta: GraphMeta::of(g),
        op: op.into(),
        params,
        worst_case,
        violation_count: violations,
    })
}

impl Context<'_> {
    fn system(&self, cell: &Cell) -> Result<IsingSystem, String> {
        let r = cell.radius.expect("sweep cells carry a radius");
        let b = ball(&self.built.graph, r).map_err(err)?;
        let h = self.cfg.h().map_err(err)?;
        let params =
            GibbsParams::new(cell.beta.expect("sweep cells carry beta"), h).map_err(err)?;
        IsingSystem::new(&b, cell.bc.as_ref().expect("sweep cells carry bc"), params).map_err(err)
    }

    fn within_spin_cap(&self, sys: &IsingSystem) -> Result<(), String> {
        let cap = self.cfg.max_spins().map_err(err)?;
        if sys.n() > cap {
            return Err(format!(
                "ball has {} spins, above caps.max_spins = {cap}",
                sys.n()
            ));
        }
        Ok(())
    }

    pub fn run(&self, task: Task, cell: &Cell) -> CellResult {
        let g = &self.built.graph;
        match task {
            Task::GenerateGraph => self.generate(),
            Task::VerifyGeometry => match cell.check {
                "growth_parameter" => {
                    let r_max = g.radius().saturating_sub(1);
                    let gval = growth_parameter(g, r_max).map_err(err)?;
                    Ok(audit(
                        g,
                        "growth_parameter",
                        json!({ "r_max": r_max }),
                        json!({ "g": gval, "growing": gval >= 1 }),
                        0,
                    ))
                }
                "hyperbolic_structure" => {
                    let GraphSpec::Hyperbolic { v, s, .. } = self.cfg.graph else {
                        return Err("structure audit needs a hyperbolic graph".into());
                    };
                    let t = self
                        .built
                        .tiling
                        .as_ref()
                        .expect("hyperbolic graphs keep their faces");
                    let a = hyperbolic_audit(t, v, s);
                    let count = a.violation_count() as u64;
                    Ok(audit(
                        g,
                        "hyperbolic_audit",
                        json!({ "v": v, "s": s }),
                        json!(a),
                        count,
                    ))
                }
                _ => {
                    let r = cell.radius.expect("cheeger cells carry a radius");
                    let interior = ball(g, r).map_err(err)?.interior().clone();
                    let c = cheeger_exact(&interior).map_err(err)?;
                    Ok(audit(
                        &interior,
                        "cheeger_exact",
                        json!({ "radius": r }),
                        json!({ "ratio": c, "value": c.to_f64() }),
                        0,
                    ))
                }
            },
            Task::PeierlsAudit => {
                let m = cell.radius.expect("peierls cells carry a radius");
                let cap = self.cfg.set_size().map_err(err)?;
                let regions = standard_regions(g, m).map_err(err)?;
                let rep = peierls_audit_regions(g, &regions, cap).map_err(err)?;
                let count = rep.violation_count();
                Ok(audit(
                    g,
                    "peierls_audit",
                    json!({ "m": m, "size_cap": cap, "regions": regions.len() }),
                    json!(rep),
                    count,
                ))
            }
            Task::KestenAudit => {
                let p = self.cfg.kesten_size().map_err(err)?;
                let k = enumerate_connected_sets(g, g.root(), p).map_err(err)?;
                let count = k.violations() as u64;
                Ok(audit(
                    g,
                    "kesten_counts",
                    json!({ "p_max": p, "vertex": g.root() }),
                    json!(k),
                    count,
                ))
            }
            Task::ExactGibbs => self.exact_gibbs(cell),
            Task::Correlation => self.correlation(cell),
            Task::Claim32 => {
                let sys = self.system(cell)?;
                let m = cell.radius.expect("claim32 cells carry a radius");
                let cap = self.cfg.set_size().map_err(err)?;
                let mut worst = 0.0f64;
                let mut worst_region = None;
                let mut sets = 0;
                let mut violations = 0;
                for region in standard_regions(g, m).map_err(err)? {
                    let rep = claim32_audit(&sys, g, &region, cap).map_err(err)?;
                    sets += rep.sets_examined;
                    violations += rep.violations;
                    if rep.worst_ratio > worst {
                        worst = rep.worst_ratio;
                        worst_region = Some((region, rep));
                    }
                }
                Ok(audit(
                    g,
                    "claim32",
                    json!({ "m": m, "beta": cell.beta, "size_cap": cap, "sets_examined": sets }),
                    json!({ "worst_ratio": worst, "at": worst_region.map(|(r, rep)| json!({ "region": r, "report": rep })) }),
                    violations,
                ))
            }
            Task::Gap | Task::FreeVsPlus => self.gap(cell),
            Task::Mixing => {
                let sys = self.system(cell)?;
                let pi = stationary_law(&sys).map_err(err)?;
                let rep = tv_mixing_time(&Dynamics::new(&sys), &pi).map_err(err)?;
                Ok(CellOutput::record(
                    json!({ "n": sys.n(), "graph_hash": sys.graph_hash(), "mixing": rep }),
                ))
            }
        }
    }

    fn generate(&self) -> CellResult {
        let g = &self.built.graph;
        let path = self.out.join("graph.txt");
        std::fs::write(&path, g.to_text()).map_err(err)?;
        Ok(CellOutput::record(json!({
            "graph_meta": GraphMeta::of(g),
            "spec": self.cfg.graph,
            "level_sizes": g.level_sizes(),
            "max_degree": g.max_degree(),
            "file": "graph.txt",
        })))
    }

    fn exact_gibbs(&self, cell: &Cell) -> CellResult {
        let sys = self.system(cell)?;
        self.within_spin_cap(&sys)?;
        let table = sys.exact().map_err(err)?;
        let stem_name = format!(
            "gibbs_r{}_{}_beta{}",
            cell.radius.unwrap_or(0),
            sys.bc().tag(),
            cell.beta.unwrap_or(0.0).to_string().replace('.', "p")
        );
        let dir = self.out.join("gibbs");
        std::fs::create_dir_all(&dir).map_err(err)?;
        let stem: PathBuf = dir.join(&stem_name);
        table.write_dump(&stem).map_err(err)?;
        let mags: Vec<Value> = magnetization_distribution(&table)
            .into_iter()
            .map(|(m, p)| json!({ "m": m, "prob": p }))
            .collect();
        Ok(CellOutput::record(json!({
            "n": sys.n(),
            "graph_hash": sys.graph_hash(),
            "log_z": table.log_z(),
            "normalization_error": table.normalization_error(),
            "root_plus": table.prob_plus(0),
            "magnetization": mags,
            "dump": format!("gibbs/{stem_name}"),
        })))
    }

    /// Largest influence of `y` on `x` at each distance, over
    /// `S = L_i \ {y}` for every level `i` of the ball, `τ` all plus.
    /// Distances are measured in the whole graph and, separately, inside
    /// `U ∪ {y}`; pairs not joined inside `U ∪ {y}` are left out of the latter.
    fn correlation(&self, cell: &Cell) -> CellResult {
        let g = &self.built.graph;
        let sys = self.system(cell)?;
        let m = cell.radius.expect("correlation cells carry a radius");
        let tau = full_mask(sys.n());
        let mut graph: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        let mut within: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        let mut pairs = 0u64;
        for i in 1..=m {
            for y in g.level_range(i) {
                let s: Vec<usize> = g.level_range(i).filter(|&x| x != y).collect();
                let region = Region::new(g, m, i, s.clone()).map_err(err)?;
                let mask = region.mask(g);
                let dist = distances_from(g, y, None);
                let dist_u = distances_from(g, y, Some(&mask));
                for &x in &s {
                    let c = correlation_decay_profile(&sys, g, &region, x, y, tau).map_err(err)?;
                    pairs += 1;
                    let bump = |p: &mut BTreeMap<usize, (f64, f64)>, d: usize| {
                        let e = p.entry(d).or_insert((0.0, 0.0));
                        e.0 = e.0.max(c.direct);
                        e.1 = e.1.max(c.monotone);
                    };
                    bump(&mut graph, dist[x]);
                    if dist_u[x] != usize::MAX {
                        bump(&mut within, dist_u[x]);
                    }
                }
            }
        }
        let rows = |p: BTreeMap<usize, (f64, f64)>| -> Vec<Value> {
            p.into_iter()
                .map(|(d, (direct, monotone))| json!({ "distance": d, "direct": direct, "monotone": monotone }))
                .collect()
        };
        Ok(CellOutput::record(json!({
            "n": sys.n(),
            "graph_hash": sys.graph_hash(),
            "pairs": pairs,
            "profile": rows(graph),
            "profile_within_u": rows(within),
        })))
    }

    fn gap(&self, cell: &Cell) -> CellResult {
        let sys = self.system(cell)?;
        self.within_spin_cap(&sys)?;
        let est = self.cfg.estimators().map_err(err)?;
        let seed = self.cfg.seed;
        let mut notes = Vec::new();
        let coupling = match self.cfg.coupling().map_err(err)? {
            Coupling::None => None,
            Coupling::Exact if sys.n() > CONTRACTION_EXACT_CAP => {
                notes.push(format!(
                    "exact coupling skipped: n = {} above {CONTRACTION_EXACT_CAP}",
                    sys.n()
                ));
                None
            }
            Coupling::Exact => Some(ContractionMode::Exact),
            Coupling::MonteCarlo { samples } => Some(ContractionMode::MonteCarlo {
                samples: samples as u64,
                seed,
            }),
        };
        let opts = GapReportOptions {
            exact: est.exact,
            coupling,
            lanczos: LanczosOptions {
                tol: self.cfg.lanczos_tol().map_err(err)?,
                seed,
                ..LanczosOptions::default()
            },
        };
        let rep = gap_report(&sys, &opts).map_err(err)?;
        let mixing = if est.mixing && sys.n() <= MIXING_CAP {
            let pi = stationary_law(&sys).map_err(err)?;
            Some(tv_mixing_time(&Dynamics::new(&sys), &pi).map_err(err)?)
        } else {
            if est.mixing {
                notes.push(format!(
                    "mixing time skipped: n = {} above {MIXING_CAP}",
                    sys.n()
                ));
            }
            None
        };
        let row = SweepRow {
            n: sys.n(),
            radius: cell.radius.expect("gap cells carry a radius"),
            beta: cell.beta.expect("gap cells carry beta"),
            bc: sys.bc().tag().to_string(),
            exact_gap: rep.exact,
            upper: rep.upper_variational,
            lower: rep.lower_coupling,
            tau1: mixing.map(|m| m.tau1),
            seed,
            config_hash: self.cfg.hash.clone(),
        };
        Ok(CellOutput {
            result: json!({ "gap": rep, "mixing": mixing, "notes": notes }),
            row: Some(row),
        })
    }
}

/// BFS distances from `y`, through `allowed` vertices only when given.
fn distances_from(g: &LayeredGraph, y: usize, allowed: Option<&[bool]>) -> Vec<usize> {
    let mut d = vec![usize::MAX; g.vertex_count()];
    d[y] = 0;
    let mut q = VecDeque::from([y]);
    while let Some(u) = q.pop_front() {
        for &w in g.neighbors(u) {
            if d[w] == usize::MAX && allowed.is_none_or(|a| a[w]) {
                d[w] = d[u] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// Free-to-plus gap ratios for each `(radius, beta)` with both rows present.
pub fn contrasts(rows: &[SweepRow]) -> Vec<Value> {
    type Pair<'a> = (Option<&'a SweepRow>, Option<&'a SweepRow>);
    let mut by_key: BTreeMap<(usize, u64), Pair> = BTreeMap::new();
    for r in rows {
        let e = by_key.entry((r.radius, r.beta.to_bits())).or_default();
        match r.bc.as_str() {
            "plus" => e.0 = Some(r),
            "free" => e.1 = Some(r),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for ((radius, beta), pair) in by_key {
        if let (Some(p), Some(f)) = pair {
            let ratio = match (f.exact_gap, p.exact_gap) {
                (Some(a), Some(b)) => Some(a / b),
                _ => None,
            };
            out.push(json!({
                "radius": radius,
                "beta": f64::from_bits(beta),
                "n": p.n,
                "plus_gap": p.exact_gap,
                "free_gap": f.exact_gap,
                "free_over_plus": ratio,
            }));
        }
    }
    out
}

//! Batch driver for the g2kit verification suites.

pub mod config;
pub mod output;
pub mod suites;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use g2kit::glue_sim::{GlueParams, JoyceConstants};
use g2kit::link_algebra::{parse_link_file, preset, LinkAlgebra};
use g2kit::rate_analysis::Parity;

pub use config::{ParityArg, RunConfig, Tolerances};
pub use output::{emit_csv, Cell, Table};
pub use suites::{Check, RateScan, SuiteReport};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_LINK: &str = "s3xs3";
pub const DEFAULT_FEASIBILITY_ROWS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Suite {
    Pointwise,
    Link,
    Cone,
    Rates,
    Glue,
    Feasibility,
    Joyce,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Pointwise, Suite::Link, Suite::Cone, Suite::Rates, Suite::Glue, Suite::Feasibility, Suite::Joyce];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityArgs {
    pub mu: f64,
    pub nu_prime: f64,
    pub delta: f64,
    pub rows: usize,
}

/// Fully resolved inputs for a run.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub link: String,
    pub glue_sets: Vec<GlueParams>,
    pub joyce: GlueParams,
    pub joyce_constants: JoyceConstants,
    pub rates: RateScan,
    pub feasibility: FeasibilityArgs,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

impl Settings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        let glue_sets = match &cfg.glue {
            Some(g) => vec![g.apply(GlueParams::default())],
            None => suites::FIT_SETS.iter().map(|&(m, n, d, g)| GlueParams::with_rates(m, n, d, g)).collect(),
        };
        let rd = RateScan::default();
        let f = &cfg.feasibility;
        Settings {
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            link: cfg.link.clone().unwrap_or_else(|| DEFAULT_LINK.into()),
            glue_sets,
            joyce: cfg.joyce.params().apply(suites::default_gate_params()),
            joyce_constants: cfg.joyce.constants(),
            rates: RateScan {
                parity: cfg.rates.parity.map(parity).unwrap_or(rd.parity),
                from: cfg.rates.from.unwrap_or(rd.from),
                to: cfg.rates.to.unwrap_or(rd.to),
            },
            feasibility: FeasibilityArgs {
                mu: f.mu.unwrap_or(1.0),
                nu_prime: f.nu_prime.unwrap_or(-4.0),
                delta: f.delta.unwrap_or(0.2),
                rows: f.rows.unwrap_or(DEFAULT_FEASIBILITY_ROWS),
            },
            tolerances: cfg.tolerances,
            output_dir: cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("g2kit-out")),
        }
    }
}

pub fn parity(p: ParityArg) -> Parity {
    match p {
        ParityArg::Even => Parity::Even,
        ParityArg::Odd => Parity::Odd,
    }
}

/// A preset name, or a path to a link file.
pub fn load_link(spec: &str) -> Result<LinkAlgebra> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        return parse_link_file(&text).with_context(|| format!("parsing {spec}"));
    }
    preset(spec).with_context(|| format!("'{spec}' is neither a link file nor a preset"))
}

/// Run the requested suites. `Err` means an input problem; check failures are
/// reported inside the returned report.
pub fn run(suites_wanted: &[Suite], s: &Settings) -> Result<SuiteReport> {
    let tol = &s.tolerances;
    let needs_link = suites_wanted.iter().any(|x| matches!(x, Suite::Link | Suite::Cone | Suite::Rates));
    let alg = if needs_link { Some(load_link(&s.link)?) } else { None };
    for p in s.glue_sets.iter().chain(std::iter::once(&s.joyce)) {
        p.validate().with_context(|| format!("glue parameters {p:?}"))?;
    }

    let mut report = SuiteReport::default();
    let (link_rep, sol) = match &alg {
        Some(a) => {
            let (r, sol) = suites::link(a, tol);
            (Some(r), sol)
        }
        None => (None, None),
    };
    let needs_cone = suites_wanted.iter().any(|x| matches!(x, Suite::Cone | Suite::Rates));
    let (cone_rep, cone) = match (&sol, needs_cone) {
        (Some(sol), true) => {
            let (r, c) = suites::cone(sol, tol);
            (Some(r), c)
        }
        _ => (None, None),
    };

    for suite in suites_wanted {
        match suite {
            Suite::Pointwise => report.extend(suites::pointwise(s.seed, tol)),
            Suite::Link => report.extend(link_rep.clone().unwrap_or_default()),
            Suite::Cone => match &cone_rep {
                Some(r) => report.extend(r.clone()),
                None => report.extend(link_rep.clone().unwrap_or_default()),
            },
            Suite::Rates => match &cone {
                Some(c) => report.extend(suites::rates(c, &s.rates, tol)),
                None => report.extend(cone_rep.clone().or(link_rep.clone()).unwrap_or_default()),
            },
            Suite::Glue => report.extend(suites::glue_scan(&s.glue_sets, tol)),
            Suite::Feasibility => {
                let f = s.feasibility;
                report.extend(suites::feasibility(f.mu, f.nu_prime, f.delta, f.rows, tol))
            }
            Suite::Joyce => report.extend(suites::joyce(&s.joyce, &s.joyce_constants)),
        }
    }
    Ok(report)
}

/// Write every table of the report, plus `checks.csv`, into `dir`.
pub fn write_outputs(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for t in report.tables.iter().chain(std::iter::once(&report.checks_table())) {
        paths.push(emit_csv(dir, t).with_context(|| format!("writing {}", t.name))?);
    }
    Ok(paths)
}

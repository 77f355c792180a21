//! The `weil` command line: configure a field, rank and vertex, run one of the
//! verification suites, and write a JSON, CSV or text report.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ktypes;
use crate::localfield::FieldSpec;
use crate::oracles;
use crate::rootsystem::{self, DynkinDiagram};
use crate::schrodinger::QuotientSpace;
use crate::symplectic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_THEOREM: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const MAX_RANK: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "weil", version, about = "Exact checks of minimal K-types of the Weil representation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// p:P, laurent:P:F or eis2:C_d,...,C_0
    #[arg(long, global = true, default_value = "p:2")]
    pub field: String,
    #[arg(long, global = true, default_value_t = 1)]
    pub n: usize,
    /// A vertex index or "all".
    #[arg(long, global = true, default_value = "all")]
    pub vertex: String,
    #[arg(long, global = true, default_value_t = 1, allow_negative_numbers = true)]
    pub level: i32,
    /// Truncation depth of the root groups; defaults to 2e + 2m + 2.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub depth: Option<i32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Parity dimensions of S_{i,0}.
    Dims,
    /// Every generator preserves every stage of the filtration through --level.
    Invariance,
    /// Commutant dimension on each parity block of S_{i,0}.
    Irreducible,
    /// Filtration stages and the reducibility witness at --level.
    Filtration,
    /// Brute-force lemma oracles.
    Lemmas,
    /// Affine roots, vertices and Dynkin diagrams.
    Roots,
    /// Lattice stabilizer and conjugation checks on the generators.
    Stabilizers,
    /// All of the above.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub field: String,
    pub n: usize,
    pub vertices: Vec<usize>,
    pub level: i32,
    pub depth: Option<i32>,
    pub command: Command,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub field_spec: Option<FieldSpec>,
}

impl RunConfig {
    /// Validates the flags before any computation.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let field = FieldSpec::parse(&cli.field)?;
        if cli.n == 0 || cli.n > MAX_RANK {
            return Err(Error::Config(format!("--n must be in 1..={MAX_RANK}, got {}", cli.n)));
        }
        let vertices = if cli.vertex == "all" {
            (0..=cli.n).collect()
        } else {
            let i: usize = cli
                .vertex
                .parse()
                .map_err(|_| Error::Config(format!("--vertex must be a number or \"all\", got {:?}", cli.vertex)))?;
            if i > cli.n {
                return Err(Error::Config(format!("--vertex {i} exceeds --n {}", cli.n)));
            }
            vec![i]
        };
        if cli.level < 0 {
            return Err(Error::Config(format!("--level must be nonnegative, got {}", cli.level)));
        }
        if let Some(d) = cli.depth {
            if d < 0 {
                return Err(Error::Config(format!("--depth must be nonnegative, got {d}")));
            }
        }
        Ok(RunConfig {
            field: field.label().to_string(),
            n: cli.n,
            vertices,
            level: cli.level,
            depth: cli.depth,
            command: cli.command,
            format: cli.format,
            out: cli.out.clone(),
            field_spec: Some(field),
        })
    }

    fn spec(&self) -> &FieldSpec {
        self.field_spec.as_ref().expect("validated config")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DimRow {
    pub i: usize,
    pub even: usize,
    pub odd: usize,
    pub expected_even: u64,
    pub expected_odd: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceRow {
    pub i: usize,
    pub level: String,
    pub generator: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutantRow {
    pub i: usize,
    pub block: String,
    pub size: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationRow {
    pub i: usize,
    pub depth: i32,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRow {
    pub i: usize,
    pub stage: String,
    pub space: String,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub i: usize,
    pub level: i32,
    pub blocks: Vec<CommutantRow>,
    pub invariant_stages: Vec<(String, bool)>,
    pub reducible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub name: String,
    pub ok: bool,
    pub enumerated: u64,
    pub witnesses: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootsSection {
    pub weyl_order: usize,
    pub vertices: Vec<RootsRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootsRow {
    pub i: usize,
    pub vertex: Vec<String>,
    pub affine_roots: Vec<String>,
    pub diagram: DynkinDiagram,
    pub components: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizerRow {
    pub name: String,
    pub ok: bool,
    pub count: usize,
}

/// One schema for every subcommand; sections that were not run are omitted.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<DimRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariance: Option<Vec<InvarianceRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutant: Option<Vec<CommutantRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<Vec<StabilizationRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filtration: Option<Vec<StageRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<WitnessRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<LemmaRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roots: Option<RootsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilizers: Option<Vec<StabilizerRow>>,
    pub failures: Vec<String>,
    pub timing_ms: u128,
}

impl Report {
    fn new(config: RunConfig) -> Self {
        Report {
            config,
            dims: None,
            invariance: None,
            commutant: None,
            stabilization: None,
            filtration: None,
            witness: None,
            lemmas: None,
            roots: None,
            stabilizers: None,
            failures: Vec::new(),
            timing_ms: 0,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_THEOREM
        }
    }
}

/// `(½q^{en}(q^i + 1), ½q^{en}(q^i − 1))`.
pub fn expected_dims(field: &FieldSpec, n: usize, i: usize) -> Result<(u64, u64)> {
    let base = field.q_pow(field.e() * n as i32)?;
    let qi = field.q_pow(i as i32)?;
    Ok((base * (qi + 1) / 2, base * (qi - 1) / 2))
}

fn run_dims(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let f = cfg.spec();
    let mut rows = Vec::new();
    for &i in &cfg.vertices {
        let (even, odd) = QuotientSpace::s_im(f, cfg.n, i, 0)?.dims();
        let (expected_even, expected_odd) = expected_dims(f, cfg.n, i)?;
        if (even as u64, odd as u64) != (expected_even, expected_odd) {
            rep.failures.push(format!("dims: S[{i},0] has ({even}, {odd}), expected ({expected_even}, {expected_odd})"));
        }
        rows.push(DimRow { i, even, odd, expected_even, expected_odd });
    }
    rep.dims = Some(rows);
    Ok(())
}

fn run_invariance(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let f = cfg.spec();
    let mut rows = Vec::new();
    for &i in &cfg.vertices {
        let r = ktypes::invariance_report(f, cfg.n, i, cfg.level, cfg.depth)?;
        for v in r.verdicts {
            if !v.ok {
                rep.failures.push(format!("invariance: vertex {i}, generator {} fails on {}", v.generator, v.level));
            }
            rows.push(InvarianceRow { i, level: v.level, generator: v.generator, ok: v.ok });
        }
    }
    rep.invariance = Some(rows);
    Ok(())
}

fn blocks_of(i: usize, r: &ktypes::KTypeReport) -> Vec<CommutantRow> {
    r.blocks.iter().map(|b| CommutantRow { i, block: b.block.clone(), size: b.dim, dim: b.commutant }).collect()
}

fn run_irreducible(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let f = cfg.spec();
    let mut rows = Vec::new();
    let mut stab = Vec::new();
    for &i in &cfg.vertices {
        let r = ktypes::full_report(f, cfg.n, i, cfg.depth)?;
        for b in &r.blocks {
            if b.commutant != 1 {
                rep.failures.push(format!("irreducible: vertex {i}, block {} has commutant dimension {}", b.block, b.commutant));
            }
        }
        if !r.parity_split {
            rep.failures.push(format!("irreducible: vertex {i}, parity blocks are not invariant"));
        }
        let ok = r.stabilized == Some(true);
        if !ok {
            rep.failures.push(format!("irreducible: vertex {i}, image not stable at depth {}", r.depth));
        }
        rows.extend(blocks_of(i, &r));
        stab.push(StabilizationRow { i, depth: r.depth, ok });
    }
    rep.commutant = Some(rows);
    rep.stabilization = Some(stab);
    Ok(())
}

fn run_filtration(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let f = cfg.spec();
    let mut stages = Vec::new();
    let mut witnesses = Vec::new();
    for &i in &cfg.vertices {
        for (name, s) in ktypes::filtration_chain(f, cfg.n, i, cfg.level)? {
            stages.push(StageRow { i, stage: name, space: s.to_string(), dim: s.size() });
        }
        let w = ktypes::reducibility_witness(f, cfg.n, i, cfg.level, cfg.depth)?;
        for (name, ok) in &w.invariant_stages {
            if !ok {
                rep.failures.push(format!("filtration: vertex {i}, stage {name} is not invariant"));
            }
        }
        witnesses.push(WitnessRow {
            i,
            level: cfg.level,
            blocks: blocks_of(i, &w.report),
            invariant_stages: w.invariant_stages,
            reducible: w.reducible,
        });
    }
    rep.filtration = Some(stages);
    rep.witness = Some(witnesses);
    Ok(())
}

fn run_lemmas(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let mut outcomes = oracles::run_all(cfg.spec())?;
    if cfg.command == Command::Lemmas || cfg.command == Command::Report {
        for o in oracles::conductor_all()? {
            if !outcomes.iter().any(|x| x.name == o.name) {
                outcomes.push(o);
            }
        }
    }
    let rows = outcomes
        .into_iter()
        .map(|o| {
            if !o.ok {
                rep.failures.push(format!("lemmas: {} failed: {}", o.name, o.detail));
            }
            LemmaRow { name: o.name, ok: o.ok, enumerated: o.enumerated, witnesses: o.witnesses, detail: o.detail }
        })
        .collect();
    rep.lemmas = Some(rows);
    Ok(())
}

fn run_roots(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let n = cfg.n;
    let weyl_order = rootsystem::generate_finite_weyl(n)?.len();
    let expected = (1..=n).product::<usize>() << n;
    if weyl_order != expected {
        rep.failures.push(format!("roots: |W(C_{n})| = {weyl_order}, expected {expected}"));
    }
    let simple = rootsystem::simple_affine(n);
    let mut vertices = Vec::new();
    for &i in &cfg.vertices {
        let z = rootsystem::vertex(n, i)?;
        let on_walls = simple.iter().enumerate().all(|(j, mu)| (j == i) != mu.eval(&z).is_zero());
        if !on_walls {
            rep.failures.push(format!("roots: z_{i} is not the vertex opposite the wall of alpha_{i}"));
        }
        let diagram = rootsystem::dynkin_adjacency(n, Some(i))?;
        vertices.push(RootsRow {
            i,
            vertex: z.iter().map(|x| x.to_string()).collect(),
            affine_roots: rootsystem::ki_affine_roots(n, i)?.iter().map(|r| r.to_string()).collect(),
            components: diagram.components(),
            diagram,
        });
    }
    rep.roots = Some(RootsSection { weyl_order, vertices });
    Ok(())
}

fn run_stabilizers(cfg: &RunConfig, rep: &mut Report) -> Result<()> {
    let depth = cfg.depth.unwrap_or(2);
    let checks = symplectic::group_checks(cfg.spec(), cfg.n, depth)?;
    let rows = checks
        .into_iter()
        .map(|c| {
            if !c.ok {
                rep.failures.push(format!("stabilizers: {} failed", c.name));
            }
            StabilizerRow { name: c.name, ok: c.ok, count: c.count }
        })
        .collect();
    rep.stabilizers = Some(rows);
    Ok(())
}

/// Runs the configured command. Errors are configuration or bound errors;
/// theorem failures are recorded in `Report::failures`.
pub fn run(cfg: RunConfig) -> Result<Report> {
    let start = Instant::now();
    let mut rep = Report::new(cfg.clone());
    match cfg.command {
        Command::Dims => run_dims(&cfg, &mut rep)?,
        Command::Invariance => run_invariance(&cfg, &mut rep)?,
        Command::Irreducible => run_irreducible(&cfg, &mut rep)?,
        Command::Filtration => run_filtration(&cfg, &mut rep)?,
        Command::Lemmas => run_lemmas(&cfg, &mut rep)?,
        Command::Roots => run_roots(&cfg, &mut rep)?,
        Command::Stabilizers => run_stabilizers(&cfg, &mut rep)?,
        Command::Report => {
            run_dims(&cfg, &mut rep)?;
            run_roots(&cfg, &mut rep)?;
            run_stabilizers(&cfg, &mut rep)?;
            run_invariance(&cfg, &mut rep)?;
            run_irreducible(&cfg, &mut rep)?;
            run_filtration(&cfg, &mut rep)?;
            run_lemmas(&cfg, &mut rep)?;
        }
    }
    rep.timing_ms = start.elapsed().as_millis();
    Ok(rep)
}

fn csv_rows(rep: &Report) -> Vec<[String; 5]> {
    let mut rows = Vec::new();
    let mut push = |section: &str, i: String, item: String, value: String, ok: bool| {
        rows.push([section.to_string(), i, item, value, ok.to_string()]);
    };
    for r in rep.dims.iter().flatten() {
        let ok = (r.even as u64, r.odd as u64) == (r.expected_even, r.expected_odd);
        push("dims", r.i.to_string(), "even/odd".into(), format!("{}/{}", r.even, r.odd), ok);
    }
    for r in rep.invariance.iter().flatten() {
        push("invariance", r.i.to_string(), format!("{} on {}", r.generator, r.level), String::new(), r.ok);
    }
    for r in rep.commutant.iter().flatten() {
        push("commutant", r.i.to_string(), format!("block {} size {}", r.block, r.size), r.dim.to_string(), r.dim == 1);
    }
    for r in rep.stabilization.iter().flatten() {
        push("stabilization", r.i.to_string(), format!("depth {}", r.depth), String::new(), r.ok);
    }
    for r in rep.filtration.iter().flatten() {
        push("filtration", r.i.to_string(), format!("{} {}", r.stage, r.space), r.dim.to_string(), true);
    }
    for w in rep.witness.iter().flatten() {
        for (name, ok) in &w.invariant_stages {
            push("witness", w.i.to_string(), format!("{name} invariant in S[{},{}]", w.i, w.level), String::new(), *ok);
        }
        let dims: Vec<String> = w.blocks.iter().map(|b| format!("{}:{}", b.block, b.dim)).collect();
        push("witness", w.i.to_string(), format!("reducible at level {}", w.level), dims.join(" "), w.reducible);
    }
    for r in rep.lemmas.iter().flatten() {
        push("lemmas", String::new(), r.name.clone(), r.enumerated.to_string(), r.ok);
    }
    if let Some(roots) = &rep.roots {
        push("roots", String::new(), "weyl order".into(), roots.weyl_order.to_string(), true);
        for r in &roots.vertices {
            push("roots", r.i.to_string(), "components".into(), format!("{:?}", r.components), true);
        }
    }
    for r in rep.stabilizers.iter().flatten() {
        push("stabilizers", String::new(), r.name.clone(), r.count.to_string(), r.ok);
    }
    rows
}

pub fn render(rep: &Report, format: Format) -> Result<String> {
    let io = |e: &dyn std::fmt::Display| Error::Config(format!("cannot render report: {e}"));
    match format {
        Format::Json => serde_json::to_string_pretty(rep).map(|s| s + "\n").map_err(|e| io(&e)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["section", "i", "item", "value", "ok"]).map_err(|e| io(&e))?;
            for row in csv_rows(rep) {
                w.write_record(&row).map_err(|e| io(&e))?;
            }
            let bytes = w.into_inner().map_err(|e| io(&e))?;
            String::from_utf8(bytes).map_err(|e| io(&e))
        }
        Format::Text => {
            let mut s = String::new();
            let c = &rep.config;
            let _ = writeln!(s, "{} n={} vertices={:?} level={}", c.field, c.n, c.vertices, c.level);
            for row in csv_rows(rep) {
                let [section, i, item, value, ok] = row;
                let mark = if ok == "true" { "ok  " } else { "FAIL" };
                let i = if i.is_empty() { String::new() } else { format!(" i={i}") };
                let value = if value.is_empty() { String::new() } else { format!(" = {value}") };
                let _ = writeln!(s, "{mark} {section}{i}: {item}{value}");
            }
            for f in &rep.failures {
                let _ = writeln!(s, "failure: {f}");
            }
            let _ = writeln!(s, "{} failure(s), {} ms", rep.failures.len(), rep.timing_ms);
            Ok(s)
        }
    }
}

/// Sizes the global thread pool from `WEIL_THREADS`; `0` means sequential.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("WEIL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("WEIL_THREADS={v:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Parses `args`, runs, writes the report and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads()
        .and_then(|_| RunConfig::from_cli(&cli))
        .and_then(|cfg| {
            let format = cfg.format;
            let out = cfg.out.clone();
            let rep = run(cfg)?;
            let text = render(&rep, format)?;
            match out {
                Some(path) => std::fs::write(&path, &text)
                    .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?,
                None => {
                    let _ = std::io::stdout().write_all(text.as_bytes());
                }
            }
            Ok(rep)
        });
    match outcome {
        Ok(rep) => {
            for f in &rep.failures {
                eprintln!("{f}");
            }
            rep.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig> {
        let mut all = vec!["weil"];
        all.extend_from_slice(args);
        RunConfig::from_cli(&Cli::try_parse_from(all).unwrap())
    }

    #[test]
    fn validation() {
        assert!(config(&["dims", "--field", "p:4"]).is_err());
        assert!(config(&["dims", "--n", "0"]).is_err());
        assert!(config(&["dims", "--n", "2", "--vertex", "3"]).is_err());
        assert!(config(&["dims", "--vertex", "x"]).is_err());
        assert!(config(&["invariance", "--level", "-1"]).is_err());
        assert!(config(&["irreducible", "--depth", "-2"]).is_err());
        assert_eq!(config(&["dims", "--n", "2"]).unwrap().vertices, vec![0, 1, 2]);
    }

    #[test]
    fn dims_table() {
        let rep = run(config(&["dims", "--field", "p:2", "--n", "2", "--vertex", "all"]).unwrap()).unwrap();
        let rows: Vec<(usize, usize, usize)> = rep.dims.unwrap().iter().map(|r| (r.i, r.even, r.odd)).collect();
        assert_eq!(rows, vec![(0, 4, 0), (1, 6, 2), (2, 10, 6)]);
        assert!(rep.failures.is_empty());
    }

    #[test]
    fn irreducible_q3() {
        let rep = run(config(&["irreducible", "--field", "p:3", "--n", "1", "--vertex", "1"]).unwrap()).unwrap();
        let dims: Vec<usize> = rep.commutant.as_ref().unwrap().iter().map(|r| r.dim).collect();
        assert_eq!(dims, vec![1, 1]);
        assert_eq!(rep.exit_code(), EXIT_OK);
    }

    #[test]
    fn depth_zero_fails() {
        let rep = run(config(&["irreducible", "--n", "1", "--vertex", "1", "--depth", "0"]).unwrap()).unwrap();
        assert_eq!(rep.exit_code(), EXIT_THEOREM);
    }

    #[test]
    fn renderings() {
        let rep = run(config(&["dims", "--n", "1"]).unwrap()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&render(&rep, Format::Json).unwrap()).unwrap();
        assert_eq!(json["dims"][1]["even"], 3);
        assert!(json.get("invariance").is_none());
        let csv = render(&rep, Format::Csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(render(&rep, Format::Text).unwrap().contains("0 failure(s)"));
    }
}

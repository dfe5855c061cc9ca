use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use horton::distributions::{
    horton_exponent, igw, igw_constants, regularity_probe, tokunaga_analytic, ProbeConfig, TokunagaSequence,
};
use horton::oracle::enumerate_conditional;
use horton::pruning::{
    invariance_residual, iterate_pruning, l_from_invariance, oscillatory_invariant, prune_distribution, standard_grid,
    OscillatoryConfig, TrajectoryStatus,
};
use horton::sampler::{mc_tokunaga, SampleConfig, DEFAULT_MAX_VERTICES};
use horton::trees::{branch_statistics, horton_prune, hs_order_by_pruning, hs_order_recursive, Tree};

use crate::law::parse_law;
use crate::output::{Options, Out};
use crate::{Cli, Command, Failure};

#[derive(Args, Debug)]
pub struct IgwArgs {
    #[arg(long)]
    pub q0: Option<f64>,
    /// `start:stop:step`, e.g. `0.5:0.99:0.01`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Largest order in the Tokunaga table.
    #[arg(long)]
    pub k: Option<usize>,
    /// Coefficients `q_0..q_terms` in the pmf table.
    #[arg(long)]
    pub terms: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    /// binary, zipf, igw:Q, finite:q0,q1,... or @file.json
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write every step's law as JSON.
    #[arg(long)]
    pub dump_json: bool,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long)]
    pub dist: Option<String>,
    /// Conditioning order.
    #[arg(long)]
    pub k: Option<u32>,
    /// Accepted trees.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_vertices: Option<usize>,
    /// Attempts allowed per accepted tree.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Args, Debug)]
pub struct OscillatoryArgs {
    #[arg(long)]
    pub q0: Option<f64>,
    /// Rows `m = 0..=m_max` in the coefficient table.
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub max_terms: Option<i64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// A bounded-support law: binary or finite:q0,q1,...
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_vertices: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PruneTreeArgs {
    /// Tree JSON `{"nodes": [{"parent": .., "children": [..]}, ..], "root": 0}`.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to `pruned_tree.json` in the output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Number of prunings.
    #[arg(long, default_value_t = 1)]
    pub times: u32,
}

#[derive(Args, Debug)]
pub struct OrderArgs {
    #[arg(long)]
    pub input: PathBuf,
}

pub fn run(cli: Cli) -> Result<u8, Failure> {
    let mut opts = Options::load(cli.global.config.as_deref())?;
    let threads = opts.get_opt("threads", cli.global.threads)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let dir = opts.get("out_dir", cli.global.out_dir.clone(), PathBuf::from("."))?;
    let mut out = Out::new(dir)?;
    match cli.command {
        Command::Igw(a) => cmd_igw(a, &mut opts, &mut out),
        Command::Converge(a) => cmd_converge(a, &mut opts, &mut out),
        Command::Mc(a) => cmd_mc(a, &mut opts, &mut out),
        Command::Oscillatory(a) => cmd_oscillatory(a, &mut opts, &mut out),
        Command::Enumerate(a) => cmd_enumerate(a, &mut opts, &mut out),
        Command::PruneTree(a) => cmd_prune_tree(a, &mut opts, &mut out),
        Command::Order(a) => cmd_order(a, &mut opts, &mut out),
    }
}

#[derive(Serialize)]
struct SweepRow {
    q0: f64,
    a: f64,
    c: f64,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Serialize)]
struct PmfRow {
    m: usize,
    q_m: f64,
}

#[derive(Serialize)]
struct ConstantsRow {
    q0: f64,
    a: f64,
    c: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Serialize)]
struct TokunagaRow {
    i: usize,
    j: usize,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "T_regular")]
    t_regular: f64,
    t_total: f64,
}

fn parse_sweep(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("sweep '{s}' is not start:stop:step")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Failure::Usage(format!("sweep '{s}' is not start:stop:step")));
    };
    if !(step > 0.0) || stop < start {
        return Err(Failure::Usage(format!("sweep '{s}' needs step > 0 and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn cmd_igw(a: IgwArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    if let Some(sweep) = opts.get_opt("sweep", a.sweep)? {
        let mut rows = Vec::new();
        for q0 in parse_sweep(&sweep)? {
            let k = igw_constants(q0)?;
            rows.push(SweepRow {
                q0,
                a: k.a,
                c: k.c,
                r: k.horton_exponent,
            });
        }
        out.csv("acr_sweep.csv", &rows)?;
        out.summary("igw", opts, &json!({ "rows": rows.len() }))?;
        return Ok(0);
    }
    let q0: f64 = opts.require("q0", a.q0)?;
    let kmax = opts.get("k", a.k, 8)?;
    let terms = opts.get("terms", a.terms, 50)?;
    let law = igw(q0)?;
    let consts = igw_constants(q0)?;
    let pmf: Vec<PmfRow> = law
        .pmf(terms)
        .into_iter()
        .enumerate()
        .map(|(m, q_m)| PmfRow { m, q_m })
        .collect();
    out.csv("igw_pmf.csv", &pmf)?;
    out.csv(
        "igw_constants.csv",
        &[ConstantsRow {
            q0,
            a: consts.a,
            c: consts.c,
            t1: consts.t1,
            r: consts.horton_exponent,
        }],
    )?;
    let table = tokunaga_analytic(&law, kmax)?;
    let rows: Vec<TokunagaRow> = table
        .t_side
        .pairs()
        .map(|(i, j)| TokunagaRow {
            i,
            j,
            t: table.t_side.get(i, j),
            t_regular: table.t_regular.get(i, j),
            t_total: table.t_total.get(i, j),
        })
        .collect();
    out.csv("igw_tokunaga.csv", &rows)?;
    let seq = TokunagaSequence::self_similar(consts.t1, consts.a, consts.c, 1);
    let r_root = horton_exponent(&seq)?;
    out.summary(
        "igw",
        opts,
        &json!({
            "constants": consts,
            "horton_exponent_from_root": r_root,
            "toeplitz_deviation": table.toeplitz_deviation(),
        }),
    )?;
    Ok(0)
}

fn cmd_converge(a: ConvergeArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    let spec: String = opts.require("dist", a.dist)?;
    let law = parse_law(&spec)?;
    let steps = opts.get("steps", a.steps, 60)?;
    let tol = opts.get("tol", a.tol, 5e-3)?;
    let dump = opts.get("dump_json", Some(a.dump_json), false)?;
    let t = iterate_pruning(&law, steps, tol)?;
    out.csv("trajectory.csv", &t.rows())?;
    if dump {
        out.json("trajectory_laws.json", &t.steps)?;
    }
    out.summary("converge", opts, &json!({ "status": t.status, "label": t.status.label() }))?;
    println!("{}", t.status.label());
    Ok(match t.status {
        TrajectoryStatus::ConvergedToIgw { .. } => 0,
        TrajectoryStatus::ConvergedToPointMass { .. } => 5,
        TrajectoryStatus::BudgetExhausted { .. } => 6,
    })
}

#[derive(Serialize)]
struct McPairRow {
    i: usize,
    j: usize,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "T_se")]
    t_se: f64,
    #[serde(rename = "T_regular")]
    t_regular: f64,
    #[serde(rename = "T_regular_se")]
    t_regular_se: f64,
    t_total: f64,
    n: u64,
}

#[derive(Serialize)]
struct McOrderRow {
    k: usize,
    #[serde(rename = "N_mean")]
    n_mean: f64,
    #[serde(rename = "N_mean_se")]
    n_mean_se: f64,
    ratio: f64,
    ratio_se: f64,
    n: u64,
}

fn cmd_mc(a: McArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    let spec: String = opts.require("dist", a.dist)?;
    let law = parse_law(&spec)?;
    let k = opts.get("k", a.k, 4)?;
    let cfg = SampleConfig {
        seed: opts.get("seed", a.seed, 0)?,
        n_trees: opts.get("n", a.n, 100_000)?,
        max_vertices: opts.get("max_vertices", a.max_vertices, DEFAULT_MAX_VERTICES)?,
        max_order: Some(k),
        rejection_budget: opts.get("budget", a.budget, 10_000)?,
    };
    let est = mc_tokunaga(&law, k, &cfg)?;
    let n = est.n_trees;
    let pairs: Vec<McPairRow> = est
        .tokunaga
        .t_side
        .pairs()
        .map(|(i, j)| {
            let s = est.t_side(i, j);
            let r = est.t_regular(i, j);
            McPairRow {
                i,
                j,
                t: s.value,
                t_se: s.se,
                t_regular: r.value,
                t_regular_se: r.se,
                t_total: est.tokunaga.t_total.get(i, j),
                n,
            }
        })
        .collect();
    out.csv("mc_tokunaga.csv", &pairs)?;
    let orders: Vec<McOrderRow> = (0..est.k)
        .map(|idx| McOrderRow {
            k: idx + 1,
            n_mean: est.branch_means[idx].value,
            n_mean_se: est.branch_means[idx].se,
            ratio: est.n_ratios[idx].value,
            ratio_se: est.n_ratios[idx].se,
            n,
        })
        .collect();
    out.csv("mc_branches.csv", &orders)?;
    out.summary("mc", opts, &est)?;
    eprintln!(
        "accepted {} of {} attempts, censoring rate {:e}",
        est.n_trees, est.attempts, est.censoring_rate
    );
    Ok(0)
}

#[derive(Serialize)]
struct QmRow {
    m: usize,
    q_m: f64,
    igw_q_m: f64,
    ratio: f64,
    residual: f64,
}

fn cmd_oscillatory(a: OscillatoryArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    let q0: f64 = opts.require("q0", a.q0)?;
    let m_max = opts.get("m_max", a.m_max, 200)?;
    let defaults = OscillatoryConfig::default();
    let cfg = OscillatoryConfig {
        max_terms: opts.get("max_terms", a.max_terms, defaults.max_terms)?,
        scan_points: opts.get("scan_points", a.scan_points, defaults.scan_points)?,
    };
    let inv = oscillatory_invariant(q0, &cfg)?;
    let pruned = prune_distribution(&inv.law)?;
    let p = inv.law.pmf(m_max);
    let p1 = pruned.pmf(m_max);
    let g = igw(q0)?.pmf(m_max);
    let rows: Vec<QmRow> = (0..=m_max)
        .map(|m| QmRow {
            m,
            q_m: p[m],
            igw_q_m: g[m],
            ratio: if g[m] > 0.0 { p[m] / g[m] } else { f64::NAN },
            residual: (p1[m] - p[m]).abs(),
        })
        .collect();
    out.csv("oscillatory_qm.csv", &rows)?;
    let grid = standard_grid();
    let probe = regularity_probe(&inv.law, &ProbeConfig::default())?;
    let rho = 1.0 - q0;
    out.summary(
        "oscillatory",
        opts,
        &json!({
            "q0": q0,
            "A": inv.a,
            "B": inv.b,
            "sign_changes": inv.sign_changes,
            "criticality_error": (inv.law.mean() - 1.0).abs(),
            "invariance_residual": invariance_residual(&inv.law, &grid),
            "max_coefficient_residual": rows.iter().map(|r| r.residual).fold(0.0, f64::max),
            "L_from_invariance": l_from_invariance(&inv.law),
            "L_expected": 2.0 + inv.b.ln() / rho.ln(),
            "regularity": probe,
        }),
    )?;
    Ok(0)
}

fn cmd_enumerate(a: EnumerateArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    let spec: String = opts.require("dist", a.dist)?;
    let law = parse_law(&spec)?;
    let k = opts.get("k", a.k, 3)?;
    let cap = opts.get("max_vertices", a.max_vertices, 400)?;
    let r = enumerate_conditional(&law, k, cap)?;
    out.json("enumeration.json", &r)?;
    out.summary(
        "enumerate",
        opts,
        &json!({ "covered_mass": r.covered_mass, "pi_k": r.pi_k, "sufficient": r.sufficient }),
    )?;
    if !r.sufficient {
        return Err(Failure::Numerical(format!(
            "covered mass {:e} below (1 - 1e-6) pi_K = {:e}; raise --max-vertices",
            r.covered_mass,
            (1.0 - 1e-6) * r.pi_k
        )));
    }
    Ok(0)
}

fn read_tree(path: &PathBuf) -> Result<Tree, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Tree::from_json(&text)?)
}

fn cmd_prune_tree(a: PruneTreeArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    opts.get("input", Some(a.input.clone()), PathBuf::new())?;
    opts.get("times", Some(a.times), 1)?;
    let mut t = read_tree(&a.input)?;
    for _ in 0..a.times {
        t = horton_prune(&t)?;
    }
    let text = t.to_json()? + "\n";
    match &a.output {
        Some(p) => fs::write(p, text)?,
        None => fs::write(out.path("pruned_tree.json"), text)?,
    }
    out.summary("prune-tree", opts, &json!({ "nodes": t.len(), "empty": t.is_empty() }))?;
    Ok(0)
}

#[derive(Serialize)]
struct SideRow {
    i: usize,
    j: usize,
    n: u64,
    n_regular: u64,
}

fn cmd_order(a: OrderArgs, opts: &mut Options, out: &mut Out) -> Result<u8, Failure> {
    opts.get("input", Some(a.input.clone()), PathBuf::new())?;
    let t = read_tree(&a.input)?;
    let by_pruning = hs_order_by_pruning(&t);
    let recursive = hs_order_recursive(&t).order;
    let result = if t.is_empty() {
        json!({ "order": 0, "order_by_pruning": by_pruning })
    } else {
        let s = branch_statistics(&t)?;
        let sides: Vec<SideRow> = s
            .n_side
            .pairs()
            .map(|(i, j)| SideRow {
                i,
                j,
                n: s.n_side.get(i, j),
                n_regular: s.n_side_regular.get(i, j),
            })
            .collect();
        out.csv("order_side_branches.csv", &sides)?;
        json!({
            "order": recursive,
            "order_by_pruning": by_pruning,
            "branch_counts": s.branch_counts,
        })
    };
    println!("{}", serde_json::to_string(&result).unwrap_or_default());
    out.summary("order", opts, &result)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let v = parse_sweep("0.5:0.99:0.01").unwrap();
        assert_eq!(v.len(), 50);
        assert!((v[49] - 0.99).abs() < 1e-12);
        assert!(parse_sweep("0.5:0.4:0.1").is_err());
        assert!(parse_sweep("x").is_err());
    }
}

//! The `defent` command line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::census::{
    block_partition, census_rows, count_points_with, detect_period, entropy_profile_with, CensusOptions,
    CensusRow, CensusTable, EstimateOptions, DEFAULT_MAX_EVALS,
};
use crate::error::{Error, Result};
use crate::exactlog::{lv_normalize_base, lv_to_float, parse_fraction, LogValue};
use crate::extend::{
    ak_partial, ak_witness, check_extension, copy_product, dist_entropy_profile, slepian_wolf_partial,
    Distribution,
};
use crate::gf::ff_make;
use crate::lincong::{
    dirichlet_modulus, profile_lincong, snf, suggest_primes, torus_profile, IntMatrix,
};
use crate::polymatroid::{
    convolve, dfz_family, eval_functional, factor, first_violation, gmm_check, kr_closed_form, kr_violation,
    parse_functional, parse_subset, scan_threshold, Partition, Profile,
};
use crate::ringlang::{parse_set_with_params, DefinableSet, Strategy};

#[derive(Parser, Debug)]
#[command(name = "defent", version, about = "Exact entropy profiles of definable sets and linear congruences")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Largest number of formula evaluations per field.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_EVALS)]
    pub max_evals: u64,
    /// Integer parameter substituted into set files, as NAME=VALUE.
    #[arg(long = "param", global = true, value_parser = parse_param)]
    pub params: Vec<(String, BigInt)>,
    /// Write the result here instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

fn parse_param(s: &str) -> std::result::Result<(String, BigInt), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: BigInt = v.trim().parse().map_err(|_| format!("not an integer: {v}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyArg {
    Auto,
    Enumerate,
    RootFind,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Enumerate => Strategy::Enumerate,
            StrategyArg::RootFind => Strategy::RootFind,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub e: u32,
    /// How existential quantifiers are decided.
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    pub strategy: StrategyArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Number of rational points of a set.
    Count {
        set: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Entropy profile of the uniform distribution on the rational points.
    Profile {
        set: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        /// Factor by the blocks declared in the set file.
        #[arg(long)]
        blocks: bool,
        /// Also report values divided by log(BASE).
        #[arg(long)]
        base: Option<u64>,
    },
    /// Point counts over GF(p^e) for a range of e, with period detection.
    Tower {
        set: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 4)]
        emax: u32,
        /// Explicit comma-separated degrees instead of 1..=emax.
        #[arg(long, value_delimiter = ',')]
        degrees: Vec<u32>,
        #[arg(long, default_value_t = 4)]
        period_max: u32,
        /// Record fiber histograms for this subset (repeatable).
        #[arg(long = "fiber")]
        fibers: Vec<String>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
    },
    /// Entropy profile of x -> Ax mod m.
    Lincong {
        matrix: PathBuf,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        base: Option<u64>,
    },
    /// Smith normal form with transforms, invariants and a Dirichlet modulus.
    Snf {
        matrix: PathBuf,
        /// Number of primes p = 1 (mod s) to suggest.
        #[arg(long, default_value_t = 3)]
        primes: usize,
    },
    /// Entropy profile of the monomial map on the torus of GF(p^e).
    Torus {
        matrix: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        e: u32,
        #[arg(long)]
        base: Option<u64>,
    },
    /// Evaluate an information functional on a profile.
    Check {
        profile: PathBuf,
        /// Functional such as "I(A:B|C) - 2*H(D)".
        expr: Option<String>,
        #[arg(long)]
        gmm: bool,
        #[arg(long)]
        dfz: Option<u32>,
        /// Use I(B:C|D) in place of I(B:C|C) in the DFZ functional.
        #[arg(long)]
        corrected: bool,
        #[arg(long)]
        base: Option<u64>,
    },
    /// Closed forms for the two-points-on-a-line-and-a-parabola family.
    Kr(KrArgs),
    /// Extension operations.
    #[command(subcommand)]
    Extend(ExtendCmd),
    /// Pull a profile back along a partition of its ground set.
    Factor {
        profile: PathBuf,
        /// Blocks as "A=x,y;B=z".
        #[arg(long)]
        blocks: String,
        #[arg(long)]
        base: Option<u64>,
    },
    /// Convolution with a modular profile.
    Convolve { profile: PathBuf, modular: PathBuf },
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
pub struct KrArgs {
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub eps: Option<String>,
    #[command(subcommand)]
    pub scan: Option<KrScan>,
}

#[derive(Subcommand, Debug)]
pub enum KrScan {
    /// First odd prime power with a negative violation.
    Scan {
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 10_000)]
        qmax: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExtendCmd {
    /// Slepian-Wolf partial extension of a profile.
    Sw {
        profile: PathBuf,
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
        /// A LogValue expression such as "log(3) - log(2)", or "auto" for h(N) - h(L).
        #[arg(long, default_value = "auto")]
        alpha: String,
    },
    /// Ahlswede-Korner partial extension and a feasibility witness.
    Ak {
        profile: PathBuf,
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
        /// Distribution the profile came from, enabling the copy witness.
        #[arg(long)]
        dist: Option<PathBuf>,
    },
    /// Conditional product of a distribution with itself.
    Copy {
        dist: PathBuf,
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn load_set(path: &Path, g: &Global) -> Result<DefinableSet> {
    let params: BTreeMap<String, BigInt> = g.params.iter().cloned().collect();
    parse_set_with_params(&read(path)?, &params)
}

fn load_matrix(path: &Path) -> Result<IntMatrix> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        IntMatrix::from_json(&serde_json::from_str(&text)?)
    } else {
        IntMatrix::parse_text(&text)
    }
}

fn load_profile(path: &Path) -> Result<Profile> {
    Profile::from_json(&read_json(path)?)
}

fn opts(g: &Global, s: StrategyArg) -> CensusOptions {
    CensusOptions { max_evals: g.max_evals, strategy: s.into() }
}

fn parse_rat(s: &str) -> Result<BigRational> {
    parse_fraction(s.trim())
}

/// A constant-only functional, e.g. `log(3) - 1/2*log(2)`.
fn parse_logvalue(s: &str, ground: &[String]) -> Result<LogValue> {
    let f = parse_functional(s, ground)?;
    if !f.coeffs().is_empty() {
        return Err(Error::format("expected a constant expression in log(...) terms"));
    }
    Ok(f.constant().clone())
}

fn value_report(v: &LogValue, base: Option<u64>) -> Result<Value> {
    let mut o = json!({"value": v.to_json(), "text": v.to_string(), "sign": v.sign(), "float": lv_to_float(v, 53).0});
    if let Some(b) = base {
        o["normalized"] = lv_normalize_base(v, b)?.to_json();
    }
    Ok(o)
}

fn parse_blocks(spec: &str, ground: &[String]) -> Result<Partition> {
    let mut blocks: Vec<(String, Vec<String>)> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, members) = part
            .split_once('=')
            .ok_or_else(|| Error::format(format!("block {part:?} must look like NAME=a,b")))?;
        let ms = members.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
        blocks.push((name.trim().to_string(), ms));
    }
    Partition::new(ground, &blocks)
}

/// Execute a parsed command and return its JSON result.
pub fn execute(cli: &Cli) -> Result<Value> {
    let g = &cli.global;
    match &cli.command {
        Command::Count { set, field } => {
            let x = load_set(set, g)?;
            let spec = ff_make(field.p, field.e)?;
            let count = count_points_with(&x, &spec, &opts(g, field.strategy))?;
            let t = CensusTable {
                set: x.name.clone(),
                p: field.p,
                rows: vec![CensusRow { e: field.e, q: spec.q(), count, fibers: Vec::new() }],
            };
            Ok(t.to_json())
        }
        Command::Profile { set, field, blocks, base } => {
            let x = load_set(set, g)?;
            let spec = ff_make(field.p, field.e)?;
            let mut h = entropy_profile_with(&x, &spec, &opts(g, field.strategy))?;
            if *blocks {
                let rho = block_partition(&x)?
                    .ok_or_else(|| Error::domain(format!("set {} declares no blocks", x.name)))?;
                h = factor(&h, &rho)?;
            }
            h.to_json_with_base(*base)
        }
        Command::Tower { set, p, emax, degrees, period_max, fibers, strategy } => {
            let x = load_set(set, g)?;
            let masks = fibers.iter().map(|f| parse_subset(&x.free_vars, f)).collect::<Result<Vec<_>>>()?;
            let degs: Vec<u32> = if degrees.is_empty() { (1..=*emax).collect() } else { degrees.clone() };
            if degs.is_empty() || degs.contains(&0) {
                return Err(Error::domain("extension degrees must be at least 1"));
            }
            let t = census_rows(&x, *p, &degs, &masks, &opts(g, *strategy))?;
            let mut out = json!({"table": t.to_json()});
            match detect_period(&t, *period_max, &EstimateOptions::default()) {
                Ok(r) => out["period"] = r.to_json(),
                Err(e) => {
                    out["period"] = Value::Null;
                    out["period_error"] = json!(e.to_string());
                }
            }
            Ok(out)
        }
        Command::Lincong { matrix, m, base } => {
            let a = load_matrix(matrix)?;
            profile_lincong(&a, *m)?.to_json_with_base(*base)
        }
        Command::Snf { matrix, primes } => {
            let a = load_matrix(matrix)?;
            let r = snf(&a)?;
            let s = dirichlet_modulus(&a)?;
            let mut o = r.to_json();
            o["verified"] = json!(true);
            o["dirichlet_modulus"] = json!(s.to_string());
            o["primes"] = json!(suggest_primes(&s, *primes)?);
            Ok(o)
        }
        Command::Torus { matrix, p, e, base } => {
            let a = load_matrix(matrix)?;
            let spec = ff_make(*p, *e)?;
            torus_profile(&a, &spec, g.max_evals)?.to_json_with_base(*base)
        }
        Command::Check { profile, expr, gmm, dfz, corrected, base } => {
            let h = load_profile(profile)?;
            let mut out = serde_json::Map::new();
            if let Some(e) = expr {
                let f = parse_functional(e, h.ground_set())?;
                let mut r = value_report(&eval_functional(&f, &h)?, *base)?;
                r["functional"] = json!(f.to_dsl());
                out.insert("expression".into(), r);
            }
            if *gmm {
                out.insert("gmm".into(), gmm_check(&h)?.to_json());
            }
            if let Some(s) = dfz {
                let f = dfz_family(*s, *corrected, h.ground_set())?;
                let mut r = value_report(&eval_functional(&f, &h)?, *base)?;
                r["functional"] = json!(f.to_dsl());
                r["s"] = json!(s);
                r["corrected"] = json!(corrected);
                out.insert("dfz".into(), r);
            }
            if out.is_empty() {
                return Err(Error::format("nothing to check: give an expression, --gmm or --dfz"));
            }
            out.insert(
                "polymatroid".into(),
                json!(first_violation(&h).map_or("yes".to_string(), |v| format!("no: {v}"))),
            );
            Ok(Value::Object(out))
        }
        Command::Kr(k) => match &k.scan {
            Some(KrScan::Scan { eps, qmax }) => Ok(scan_threshold(&parse_rat(eps)?, *qmax)?.to_json()),
            None => {
                let q = k.q.ok_or_else(|| Error::format("kr needs --q or the scan subcommand"))?;
                let mut o = kr_closed_form(q)?.to_json();
                if let Some(e) = &k.eps {
                    let eps = parse_rat(e)?;
                    o["eps"] = json!(e);
                    o["violation"] = value_report(&kr_violation(q, &eps)?, None)?;
                }
                Ok(o)
            }
        },
        Command::Extend(ExtendCmd::Sw { profile, l, alpha }) => {
            let h = load_profile(profile)?;
            let lm = parse_subset(h.ground_set(), l)?;
            let a = if alpha.trim() == "auto" {
                h.get(h.full()) - h.get(lm)
            } else {
                parse_logvalue(alpha, h.ground_set())?
            };
            let pp = slepian_wolf_partial(&h, lm, &a)?;
            Ok(json!({"alpha": a.to_json(), "partial": pp.to_json()}))
        }
        Command::Extend(ExtendCmd::Ak { profile, l, dist }) => {
            let h = load_profile(profile)?;
            let lm = parse_subset(h.ground_set(), l)?;
            let d = dist.as_ref().map(|p| Distribution::from_json(&read_json(p)?)).transpose()?;
            let pp = ak_partial(&h, lm)?;
            let w = ak_witness(&h, lm, d.as_ref())?;
            Ok(json!({
                "partial": pp.to_json(),
                "witness": {
                    "method": w.method,
                    "profile": w.profile.as_ref().map(Profile::to_json),
                    "diagnostics": w.diagnostics,
                },
            }))
        }
        Command::Extend(ExtendCmd::Copy { dist, l }) => {
            let p = Distribution::from_json(&read_json(dist)?)?;
            let lm = parse_subset(p.ground_set(), l)?;
            let h = dist_entropy_profile(&p)?;
            let c = copy_product(&p, lm)?;
            let ch = dist_entropy_profile(&c.dist)?;
            let check = check_extension(&c.constraints(&h)?, &ch)?;
            Ok(json!({
                "distribution": c.dist.to_json(),
                "tau": c.tau.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
                "profile": ch.to_json(),
                "check": check.map_or("pass".to_string(), |f| format!("fail: {f}")),
            }))
        }
        Command::Factor { profile, blocks, base } => {
            let h = load_profile(profile)?;
            let rho = parse_blocks(blocks, h.ground_set())?;
            factor(&h, &rho)?.to_json_with_base(*base)
        }
        Command::Convolve { profile, modular } => {
            let h = load_profile(profile)?;
            let m = load_profile(modular)?;
            Ok(convolve(&h, &m)?.to_json())
        }
    }
}

/// Run inside a pool of the requested size and write the result.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.global.jobs {
        if j == 0 {
            return Err(Error::format("--jobs must be positive"));
        }
        b = b.num_threads(j);
    }
    let pool = b.build().map_err(|e| Error::Io(e.to_string()))?;
    let v = pool.install(|| execute(cli))?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    match &cli.global.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("defent: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        assert_eq!(parse_param("a=-3").unwrap(), ("a".to_string(), BigInt::from(-3)));
        assert!(parse_param("a").is_err());
    }

    #[test]
    fn block_specs() {
        let g: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let p = parse_blocks("A=x,y; B=z", &g).unwrap();
        assert_eq!(p.labels(), ["A", "B"]);
        assert!(parse_blocks("A=x", &g).is_err());
    }

    #[test]
    fn constant_expressions() {
        let g = vec!["A".to_string()];
        assert_eq!(parse_logvalue("log(6) - log(2)", &g).unwrap(), LogValue::log_int(3));
        assert!(parse_logvalue("H(A)", &g).is_err());
    }

    #[test]
    fn kr_command() {
        let cli = Cli::try_parse_from(["defent", "kr", "--q", "7", "--eps", "1/10"]).unwrap();
        let v = execute(&cli).unwrap();
        assert_eq!(v["q"], json!(7));
        assert!(v["violation"]["sign"].is_number());
        let cli = Cli::try_parse_from(["defent", "kr", "scan", "--eps", "1/10", "--qmax", "100"]).unwrap();
        assert_eq!(execute(&cli).unwrap()["threshold"]["q"], json!(37));
    }
}

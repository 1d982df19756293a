//! `hyperres`: runs the verification suites and the main-identity pipeline,
//! printing a versioned JSON report.
//!
//! Exit status is 0 when every check passes, 1 when some check fails and 2
//! on configuration or input errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hyperres::pushforward_pipeline::BoundaryDensityPair;
use hyperres::verify::{run_suite, LabelledPair, Suite, VerificationReport, VerifyOptions};
use hyperres::zeta_series::parse_records;

#[derive(Parser, Debug)]
#[command(name = "hyperres", version, about = "Verification runner for geodesic-flow resonance identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one verification suite.
    Verify {
        /// identities | boundary | qs | sphereconv | main-identity | zeta
        suite: String,
        #[command(flatten)]
        common: CommonArgs,
        /// Density pair files replacing the default pairs (main-identity).
        #[arg(long = "pair", value_name = "PATH")]
        pairs: Vec<PathBuf>,
        /// Closed-geodesic records checked in addition to synthetic spectra (zeta).
        #[arg(long, value_name = "PATH")]
        records: Option<PathBuf>,
    },
    /// Main identity for density pairs read from JSON files.
    MainIdentity {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "pair", value_name = "PATH", required = true)]
        pairs: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance override `<id>=<value>`; repeatable or comma separated.
    #[arg(long = "tol", value_name = "ID=VAL", value_delimiter = ',')]
    tol: Vec<String>,
    /// `sphere=<n>x<m>,radial=<k>`.
    #[arg(long, value_name = "SPEC")]
    grid: Option<String>,
    /// Comma-separated ε list.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Multiplier on the random sample counts.
    #[arg(long, value_name = "FACTOR")]
    samples: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for it in items {
        let (k, v) = it.split_once('=').ok_or_else(|| anyhow!("tolerance {it:?} is not of the form id=value"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("tolerance value in {it:?}"))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

type GridSpec = (Option<(usize, usize)>, Option<usize>);

fn parse_grid(spec: &str) -> Result<GridSpec> {
    let (mut sphere, mut radial) = (None, None);
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("grid item {part:?} is not key=value"))?;
        match k.trim() {
            "sphere" => {
                let (a, b) = v.split_once('x').ok_or_else(|| anyhow!("sphere grid {v:?} is not <n>x<m>"))?;
                sphere = Some((a.trim().parse().context("sphere grid rows")?, b.trim().parse().context("sphere grid columns")?));
            }
            "radial" => radial = Some(v.trim().parse().context("radial order")?),
            other => bail!("unknown grid key {other:?}"),
        }
    }
    Ok((sphere, radial))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_pairs(paths: &[PathBuf]) -> Result<Option<Vec<LabelledPair>>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let pair = BoundaryDensityPair::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        let label = if paths.len() == 1 { "pair".to_string() } else { format!("pair{}", i + 1) };
        out.push(LabelledPair { label, pair });
    }
    Ok(Some(out))
}

fn options(common: &CommonArgs) -> Result<VerifyOptions> {
    let mut o = VerifyOptions::new(common.seed);
    o.tolerances = parse_tolerances(&common.tol)?;
    if let Some(g) = &common.grid {
        let (sphere, radial) = parse_grid(g)?;
        o.sphere_grid = sphere;
        o.radial_nodes = radial;
    }
    o.eps = common.eps.clone();
    o.sample_scale = common.samples;
    Ok(o)
}

fn configure_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("building the worker pool")?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(VerificationReport, Option<PathBuf>)> {
    let (suite, common, opts) = match cli.command {
        Command::Verify { suite, common, pairs, records } => {
            let suite: Suite = suite.parse()?;
            let mut o = options(&common)?;
            o.pairs = load_pairs(&pairs)?;
            if let Some(r) = records {
                o.records = Some(parse_records(&read(&r)?).with_context(|| format!("parsing {}", r.display()))?);
            }
            (suite, common, o)
        }
        Command::MainIdentity { common, pairs } => {
            let mut o = options(&common)?;
            o.pairs = load_pairs(&pairs)?;
            (Suite::MainIdentity, common, o)
        }
    };
    configure_threads(common.threads)?;
    let report = run_suite(suite, &opts)?;
    Ok((report, common.out))
}

fn emit(report: &VerificationReport, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).context("serializing the report")?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(cli).and_then(|(report, out)| {
        emit(&report, out.as_deref())?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            let failed: Vec<&str> = report.per_check.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failing checks: {}", failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("sphere=48x96,radial=16").unwrap(), (Some((48, 96)), Some(16)));
        assert_eq!(parse_grid("radial=20").unwrap(), (None, Some(20)));
        assert!(parse_grid("sphere=48").is_err());
        assert!(parse_grid("depth=3").is_err());
    }

    #[test]
    fn tolerance_specs() {
        let t = parse_tolerances(&["a=1e-3".into(), "b.c = 2".into()]).unwrap();
        assert_eq!(t["a"], 1e-3);
        assert_eq!(t["b.c"], 2.0);
        assert!(parse_tolerances(&["a".into()]).is_err());
        assert!(parse_tolerances(&["a=x".into()]).is_err());
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use ncpart::acceptance::{self, Scale};
use ncpart::freeprob::{support_max, support_via_weights, CumulantSeq, Preset};
use ncpart::geometry::{render_svg, RenderOptions};
use ncpart::model::{validate_partition, NCPartition};
use ncpart::sampler::{Method, Sampler, SamplerConfig};
use ncpart::series::{asymptotic_log_partition, count_constrained, ln_big, partition_function};
use ncpart::stats::empirical_suite;
use ncpart::weights::{equivalent_distribution, MemberSet, WeightSeq};

#[derive(Parser, Debug)]
#[command(
    name = "ncpart",
    version,
    about = "Random non-crossing partitions: counts, samples, statistics, support edges, drawings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact counts (weighted sums) for n = 1..=n-max, as CSV.
    Enumerate {
        #[command(flatten)]
        weights: WeightArg,
        #[arg(long)]
        n_max: usize,
        /// Add the asymptotic estimate and the ratio exact/asymptotic.
        #[arg(long)]
        asymptotic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact samples as JSON lines, one partition per line.
    Sample {
        #[command(flatten)]
        weights: WeightArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// auto, dp_table, rejection or multinomial
        #[arg(long, default_value = "auto")]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo block statistics against their limits, as CSV.
    Stats {
        #[command(flatten)]
        weights: WeightArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Block-size sets separated by ';', e.g. "1;2;odd"
        #[arg(long, default_value = "all")]
        sets: String,
        /// Largest k reported for the root-block and typical-block laws
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Right edge of the support from free cumulants.
    Support {
        /// semicircle, free-poisson:λ, ortmann-uniform, levy-area, beta-tail:α,c
        #[arg(
            long,
            conflicts_with = "cumulants",
            required_unless_present = "cumulants"
        )]
        preset: Option<String>,
        /// JSON file: a list of cumulants or {"cumulants": [...], "tail": {"scale": s, "ratio": r}}
        #[arg(long)]
        cumulants: Option<PathBuf>,
    },
    /// Draws a partition as SVG.
    Render {
        /// Partition as JSON ({"n": .., "blocks": [[..], ..]}) or JSON lines from `sample`
        #[arg(long = "in", conflicts_with_all = ["weights", "n"], required_unless_present = "n")]
        input: Option<PathBuf>,
        /// Line of a JSON-lines input to draw (0-based, header excluded)
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Sample the partition instead of reading it
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        fill: bool,
        #[arg(long)]
        shade: bool,
        #[arg(long, default_value_t = 512)]
        px: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the acceptance checks at reduced scale (or full scale with --full).
    Selftest {
        #[arg(long)]
        full: bool,
        /// Run only these criteria (comma separated)
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Args, Debug)]
struct WeightArg {
    /// all, set:k, set:{a,b}, divisible:k, odd, even, prime, stable:α, explicit:<path>, or inline JSON
    #[arg(long, short)]
    weights: String,
}

impl WeightArg {
    fn load(&self) -> anyhow::Result<WeightSeq> {
        load_weights(&self.weights)
    }
}

fn load_weights(spec: &str) -> anyhow::Result<WeightSeq> {
    let Some(path) = spec.strip_prefix("explicit:") else {
        return Ok(WeightSeq::parse(spec)?);
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading weights from {path}"))?;
    let values: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?
    } else {
        text.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .with_context(|| format!("bad weight {t:?} in {path}"))
            })
            .collect::<anyhow::Result<_>>()?
    };
    if values.first() != Some(&1.0) {
        return Err(ncpart::Error::InvalidWeights(format!(
            "{path}: the first entry w(0) must be 1"
        ))
        .into());
    }
    Ok(WeightSeq::explicit(values)?)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

/// `# key: value` lines identifying the run.
fn header_lines(seed: Option<u64>, weights: Option<&str>) -> Vec<String> {
    let mut lines = vec![format!("ncpart {}", env!("CARGO_PKG_VERSION"))];
    if let Some(s) = seed {
        lines.push(format!("seed: {s}"));
    }
    if let Some(w) = weights {
        lines.push(format!("weights: {w}"));
    }
    lines.push(format!("command: {}", command_line()));
    lines
}

fn csv_header(seed: Option<u64>, weights: Option<&str>) -> String {
    header_lines(seed, weights)
        .iter()
        .map(|l| format!("# {l}\n"))
        .collect()
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn ln_rational(x: &num_rational::BigRational) -> Option<f64> {
    let num = x.numer().to_biguint()?;
    let den = x.denom().to_biguint()?;
    (num != 0u32.into()).then(|| ln_big(&num) - ln_big(&den))
}

fn enumerate(
    weights: &WeightArg,
    n_max: usize,
    asymptotic: bool,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let w = weights.load()?;
    let law = if asymptotic {
        Some(equivalent_distribution(&w)?)
    } else {
        None
    };
    let mut o = output(out)?;
    write!(o, "{}", csv_header(None, Some(&w.label())))?;
    writeln!(
        o,
        "{}",
        if asymptotic {
            "n,count,asymptotic,ratio"
        } else {
            "n,count"
        }
    )?;
    for n in 1..=n_max {
        let (count, log_exact) = match &w {
            WeightSeq::Membership(set) => {
                let c = count_constrained(set, n);
                let l = (c != 0u32.into()).then(|| ln_big(&c));
                (c.to_string(), l)
            }
            _ => {
                let z = partition_function(&w, n)?;
                let l = ln_rational(&z);
                (z.to_string(), l)
            }
        };
        match &law {
            None => writeln!(o, "{n},{count}")?,
            Some(law) => match (asymptotic_log_partition(law, n), log_exact) {
                (Ok(log_asym), Some(le)) => writeln!(
                    o,
                    "{n},{count},{:.10e},{:.10}",
                    log_asym.exp(),
                    (le - log_asym).exp()
                )?,
                (Ok(log_asym), None) => writeln!(o, "{n},{count},{:.10e},", log_asym.exp())?,
                (Err(e), _) if e.is_infeasible() => writeln!(o, "{n},{count},0,")?,
                (Err(e), _) => return Err(e.into()),
            },
        }
    }
    o.flush()?;
    Ok(())
}

const SAMPLE_CHUNK: usize = 1024;

fn sample(
    weights: &WeightArg,
    n: usize,
    count: usize,
    seed: u64,
    method: Method,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let w = weights.load()?;
    let law = equivalent_distribution(&w)?;
    let sampler = Sampler::new(SamplerConfig::new(law, n, seed).with_method(method))?;
    let mut o = output(out)?;
    let meta = json!({"meta": {
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "weights": w.label(),
        "n": n,
        "count": count,
        "method": format!("{method:?}"),
        "command": command_line(),
    }});
    writeln!(o, "{meta}")?;
    for start in (0..count).step_by(SAMPLE_CHUNK) {
        let end = (start + SAMPLE_CHUNK).min(count);
        let lines: Vec<String> = (start..end)
            .into_par_iter()
            .map(|i| {
                let p = sampler.replica(i as u64);
                json!({"replica": i, "n": n, "blocks": p.blocks()}).to_string()
            })
            .collect();
        for l in lines {
            writeln!(o, "{l}")?;
        }
    }
    o.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn stats(
    weights: &WeightArg,
    n: usize,
    replicas: usize,
    seed: u64,
    sets: &str,
    kmax: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let w = weights.load()?;
    let sets = sets
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(MemberSet::parse)
        .collect::<ncpart::Result<Vec<_>>>()?;
    let law = equivalent_distribution(&w)?;
    let report = empirical_suite(&SamplerConfig::new(law, n, seed), &sets, replicas, kmax)?;
    let mut o = output(out)?;
    write!(o, "{}", csv_header(Some(seed), Some(&w.label())))?;
    write!(o, "{}", report.to_csv())?;
    o.flush()?;
    Ok(())
}

fn support(preset: Option<&str>, cumulants: Option<&Path>) -> anyhow::Result<()> {
    let (seq, label) = match (preset, cumulants) {
        (Some(p), _) => (Preset::parse(p)?, p.to_string()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            (CumulantSeq::from_json(&text)?, path.display().to_string())
        }
        (None, None) => bail!("one of --preset or --cumulants is required"),
    };
    let r = support_max(&seq)?;
    let via = support_via_weights(&seq)?;
    let mut o = output(None)?;
    write!(o, "{}", csv_header(None, Some(&seq.label())))?;
    writeln!(o, "input,rho,nu,xi,s_max,branch,residual,s_via_weights")?;
    let residual = r.residual.map(|x| format!("{x:.3e}")).unwrap_or_default();
    writeln!(
        o,
        "{label},{},{},{:.12},{:.12},{},{residual},{via:.12}",
        r.rho, r.nu, r.xi, r.s_max, r.branch
    )?;
    o.flush()?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[derive(serde::Deserialize)]
struct RawPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

fn parse_partition(json: &str) -> anyhow::Result<NCPartition> {
    let raw: RawPartition =
        serde_json::from_str(json).map_err(|e| ncpart::Error::Parse(e.to_string()))?;
    Ok(validate_partition(raw.blocks, raw.n)?)
}

fn read_partition(path: &Path, index: usize) -> anyhow::Result<NCPartition> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if serde_json::from_str::<serde_json::Value>(&text).is_ok() {
        return parse_partition(&text);
    }
    let line = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .filter(|l| !l.trim_start().starts_with("{\"meta\""))
        .nth(index)
        .with_context(|| format!("{} has no partition at index {index}", path.display()))?;
    parse_partition(line)
}

#[allow(clippy::too_many_arguments)]
fn render(
    input: Option<&Path>,
    index: usize,
    weights: Option<&str>,
    n: Option<usize>,
    seed: u64,
    opts: RenderOptions,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let (p, seed, label) = match (input, n) {
        (Some(path), _) => (read_partition(path, index)?, None, None),
        (None, Some(n)) => {
            let w = load_weights(weights.unwrap_or("all"))?;
            let law = equivalent_distribution(&w)?;
            let p = Sampler::new(SamplerConfig::new(law, n, seed))?.replica(0);
            (p, Some(seed), Some(w.label()))
        }
        (None, None) => bail!("one of --in or --n is required"),
    };
    let svg = render_svg(&p, opts);
    let meta: String = header_lines(seed, label.as_deref())
        .iter()
        .map(|l| format!("  {}\n", xml_escape(l)))
        .collect();
    let mut o = output(out)?;
    let mut inserted = false;
    for line in svg.lines() {
        writeln!(o, "{line}")?;
        if !inserted && line.starts_with("<svg") {
            write!(o, "<metadata>\n{meta}</metadata>\n")?;
            inserted = true;
        }
    }
    o.flush()?;
    Ok(())
}

fn selftest(full: bool, only: &[usize]) -> anyhow::Result<bool> {
    let scale = if full { Scale::Full } else { Scale::Reduced };
    let ids: Vec<usize> = if only.is_empty() {
        (1..=10).collect()
    } else {
        only.to_vec()
    };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
        return Err(
            ncpart::Error::Parse(format!("no criterion {bad}; valid ids are 1..=10")).into(),
        );
    }
    println!(
        "# ncpart {} selftest ({} scale)",
        env!("CARGO_PKG_VERSION"),
        if full { "full" } else { "reduced" }
    );
    let mut all_passed = true;
    for id in ids {
        let outcome = acceptance::run(id, scale);
        println!("{outcome}");
        all_passed &= outcome.passed;
    }
    println!(
        "{}",
        if all_passed {
            "selftest: all checks passed"
        } else {
            "selftest: some checks FAILED"
        }
    );
    Ok(all_passed)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("NCPART_THREADS") {
        let threads: usize = v.trim().parse().map_err(|_| {
            ncpart::Error::Parse(format!("NCPART_THREADS={v:?} is not a positive integer"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Enumerate {
            weights,
            n_max,
            asymptotic,
            out,
        } => enumerate(&weights, n_max, asymptotic, out.as_deref())?,
        Command::Sample {
            weights,
            n,
            count,
            seed,
            method,
            out,
        } => sample(&weights, n, count, seed, method, out.as_deref())?,
        Command::Stats {
            weights,
            n,
            replicas,
            seed,
            sets,
            kmax,
            out,
        } => stats(&weights, n, replicas, seed, &sets, kmax, out.as_deref())?,
        Command::Support { preset, cumulants } => support(preset.as_deref(), cumulants.as_deref())?,
        Command::Render {
            input,
            index,
            weights,
            n,
            seed,
            fill,
            shade,
            px,
            out,
        } => {
            let opts = RenderOptions {
                fill_hulls: fill,
                shade_by_area: shade,
                size_px: px,
            };
            render(
                input.as_deref(),
                index,
                weights.as_deref(),
                n,
                seed,
                opts,
                out.as_deref(),
            )?
        }
        Command::Selftest { full, only } => return selftest(full, &only),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => match e.downcast_ref::<ncpart::Error>() {
            Some(err) => {
                eprintln!("error: {err}");
                ExitCode::from(if err.is_infeasible() { 2 } else { 1 })
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

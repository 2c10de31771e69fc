//! Command-line front end: `build`, `battery`, `norms`, and `verify`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use frakspace::maximal::ScaleGrid;
use frakspace::{
    ahlfors_constants, battery, battery_table, build_cloud, norm_sweep, norms_csv, run_all, verdict_text,
    verify_csv, CheckResult, GeneratorConfig, RunConfig,
};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "frakspace", version, about = "Calderón and Besov norms on fractal point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a cloud and print its summary and Ahlfors constants.
    Build {
        /// Built-in generator name or IFS JSON file.
        generator: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the test-function battery for a cloud.
    Battery {
        generator: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write norms.csv for the configured parameter grid.
    Norms(RunArgs),
    /// Run the verification suite; writes verify.csv and verdict.txt.
    Verify(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict every generator to this depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Run only this generator (built-in name or IFS file).
    #[arg(long)]
    generator: Option<String>,
}

/// Loads the configuration and applies flag overrides.
pub fn resolve_config(
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    depth: Option<usize>,
    generator: Option<&str>,
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out = out.to_path_buf();
    }
    if let Some(name) = generator {
        let depths = match depth {
            Some(d) => vec![d],
            None => cfg
                .generators
                .iter()
                .find(|g| g.name == name)
                .map(|g| g.depths.clone())
                .unwrap_or_else(|| vec![3]),
        };
        cfg.generators = vec![GeneratorConfig::new(name, depths)];
    } else if let Some(d) = depth {
        for g in &mut cfg.generators {
            g.depths = vec![d];
        }
    }
    cfg.validate()?;
    for g in &cfg.generators {
        g.load()?;
    }
    Ok(cfg)
}

fn resolve(args: &RunArgs) -> Result<RunConfig> {
    resolve_config(
        args.config.as_deref(),
        args.seed,
        args.out.as_deref(),
        args.depth,
        args.generator.as_deref(),
    )
}

/// Trims a fixed-precision rendering: `2.00000` becomes `2`.
fn short(x: f64) -> String {
    let s = format!("{x:.5}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Cloud summary: `"<n> points, s=<s>"` followed by diameter and Ahlfors lines.
pub fn cmd_build(generator: &str, depth: usize, seed: u64) -> Result<String> {
    let ifs = GeneratorConfig::new(generator, [depth]).load()?;
    let cloud = build_cloud(&ifs, depth)?;
    let mut out = format!("{} points, s={}\n", cloud.len(), short(cloud.s()));
    out.push_str(&format!("diam={} resolution={}\n", short(cloud.diam()), short(cloud.resolution_scale())));
    if let Ok(grid) = ScaleGrid::default_for(&cloud) {
        let report = ahlfors_constants(&cloud, 64.min(cloud.len()), grid.scales(), seed)?;
        out.push_str(&format!(
            "ahlfors c1={} c2={} over r in [{}, {}] ({} centers)\n",
            short(report.c1_hat),
            short(report.c2_hat),
            short(report.scale_range.0),
            short(report.scale_range.1),
            report.samples
        ));
    }
    Ok(out)
}

pub fn cmd_battery(generator: &str, depth: usize, seed: u64) -> Result<String> {
    let ifs = GeneratorConfig::new(generator, [depth]).load()?;
    let cloud = build_cloud(&ifs, depth)?;
    Ok(battery_table(&battery(&cloud, seed)))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes `norms.csv` into the output directory.
pub fn cmd_norms(config: &RunConfig) -> Result<PathBuf> {
    let rows = norm_sweep(config)?;
    write_file(&config.out, "norms.csv", &norms_csv(&rows)?)
}

/// Runs the suite, writes `verify.csv` and `verdict.txt`, and returns the results.
pub fn cmd_verify(config: &RunConfig) -> Result<Vec<CheckResult>> {
    let results = run_all(config)?;
    write_file(&config.out, "verify.csv", &verify_csv(&results)?)?;
    write_file(&config.out, "verdict.txt", &verdict_text(&results))?;
    Ok(results)
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let stdout = std::io::stdout();
    let outcome: Result<u8> = match cli.command {
        Command::Build { generator, depth, seed } => cmd_build(&generator, depth, seed).map(|s| {
            let _ = stdout.lock().write_all(s.as_bytes());
            EXIT_PASS
        }),
        Command::Battery { generator, depth, seed } => cmd_battery(&generator, depth, seed).map(|s| {
            let _ = stdout.lock().write_all(s.as_bytes());
            EXIT_PASS
        }),
        Command::Norms(args) => resolve(&args).and_then(|cfg| {
            let path = cmd_norms(&cfg)?;
            println!("wrote {}", path.display());
            Ok(EXIT_PASS)
        }),
        Command::Verify(args) => resolve(&args).and_then(|cfg| {
            let results = cmd_verify(&cfg)?;
            let failed: Vec<&CheckResult> = results.iter().filter(|r| !r.pass).collect();
            for r in &failed {
                eprintln!("FAIL {r}");
            }
            println!(
                "{} checks, {} failed; wrote {}",
                results.len(),
                failed.len(),
                cfg.out.join("verdict.txt").display()
            );
            Ok(if failed.is_empty() { EXIT_PASS } else { EXIT_CHECK_FAILURE })
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_summaries() {
        assert!(cmd_build("cantor4", 3, 0).unwrap().starts_with("64 points, s=1.26186\n"));
        assert!(cmd_build("square", 5, 0).unwrap().starts_with("1024 points, s=2\n"));
        assert!(cmd_build("nope", 3, 0).is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg = resolve_config(None, Some(9), Some(Path::new("x")), Some(2), None).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.out, PathBuf::from("x"));
        assert!(cfg.generators.iter().all(|g| g.depths == vec![2]));
        let cfg = resolve_config(None, None, None, None, Some("interval")).unwrap();
        assert_eq!(cfg.generators, vec![GeneratorConfig::new("interval", [8, 10])]);
        assert!(resolve_config(Some(Path::new("/nonexistent/config.json")), None, None, None, None).is_err());
    }

    #[test]
    fn short_trims_zeros() {
        assert_eq!(short(2.0), "2");
        assert_eq!(short(1.2618595), "1.26186");
    }
}

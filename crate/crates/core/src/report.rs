//! Norm sweeps and the CSV / verdict serializations.

use crate::config::RunConfig;
use crate::error::{FrakError, Result};
use crate::maximal::Variant;
use crate::measure::build_cloud;
use crate::norms::{besov_from_errors, calderon_from_sharp, NormParams, NormReport};
use crate::maximal::degree_for_flat;
use crate::verify::{CheckResult, Lab};

/// First line of every CSV file.
pub const SCHEMA_HEADER: &str = "# frakspace v1";

pub const NORMS_COLUMNS: [&str; 15] = [
    "name", "generator", "depth", "alpha", "p", "q", "u", "variant", "lp", "sharp_lp", "calderon",
    "besov_seminorm", "besov", "nu_min", "nu_max",
];

pub const VERIFY_COLUMNS: [&str; 9] =
    ["check_name", "kind", "generator", "depth", "function", "params", "value", "budget", "pass"];

/// One norms.csv row.
#[derive(Debug, Clone)]
pub struct NormRow {
    pub name: String,
    pub generator: String,
    pub depth: usize,
    pub report: NormReport,
}

/// Norm reports for every generator, depth, battery function, and
/// parameter combination of the configuration.
pub fn norm_sweep(config: &RunConfig) -> Result<Vec<NormRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for g in &config.generators {
        let ifs = g.load()?;
        for &depth in &g.depths {
            let cloud = build_cloud(&ifs, depth)?;
            let mut lab = Lab::with_battery(g.name.clone(), cloud, config.seed, &config.window)?;
            let nu_min = lab.grid.nu_min().ok_or(FrakError::EmptyGrid)?;
            let nu_max = lab.grid.nu_max().ok_or(FrakError::EmptyGrid)?;
            for fi in 0..lab.functions.len() {
                for &alpha in &config.alphas {
                    let variant = config.variant.unwrap_or_else(|| Variant::for_alpha(alpha));
                    for &p in &config.ps {
                        let errors = lab.errors(fi, degree_for_flat(alpha)?, p)?;
                        for &u in &config.us {
                            let sharp = lab.sharp(fi, alpha, u, variant)?;
                            let calderon = calderon_from_sharp(&lab.cloud, &lab.samples[fi], p, sharp)?;
                            for &q in &config.qs {
                                let besov =
                                    besov_from_errors(&lab.cloud, &lab.samples[fi], &errors, alpha, q, &lab.grid)?;
                                rows.push(NormRow {
                                    name: lab.functions[fi].name.clone(),
                                    generator: g.name.clone(),
                                    depth,
                                    report: NormReport {
                                        lp: calderon.lp,
                                        sharp_lp: calderon.sharp_lp,
                                        calderon: calderon.total,
                                        besov_seminorm: besov.seminorm,
                                        besov: besov.lp + besov.seminorm,
                                        params: NormParams { alpha, p, q, u, variant },
                                        per_scale: besov.per_scale,
                                        nu_min,
                                        nu_max,
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn write_csv(columns: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| FrakError::Io(e.to_string());
    writer.write_record(columns).map_err(io)?;
    for record in records {
        writer.write_record(&record).map_err(io)?;
    }
    let body = writer.into_inner().map_err(|e| FrakError::Io(e.to_string()))?;
    Ok(format!("{SCHEMA_HEADER}\n{}", String::from_utf8(body).expect("CSV output is UTF-8")))
}

pub fn norms_csv(rows: &[NormRow]) -> Result<String> {
    write_csv(
        &NORMS_COLUMNS,
        rows.iter().map(|r| {
            let p = &r.report.params;
            vec![
                r.name.clone(),
                r.generator.clone(),
                r.depth.to_string(),
                p.alpha.to_string(),
                p.p.to_string(),
                p.q.to_string(),
                p.u.to_string(),
                p.variant.to_string(),
                r.report.lp.to_string(),
                r.report.sharp_lp.to_string(),
                r.report.calderon.to_string(),
                r.report.besov_seminorm.to_string(),
                r.report.besov.to_string(),
                r.report.nu_min.to_string(),
                r.report.nu_max.to_string(),
            ]
        }),
    )
}

/// One row per witness.
pub fn verify_csv(results: &[CheckResult]) -> Result<String> {
    write_csv(
        &VERIFY_COLUMNS,
        results.iter().flat_map(|r| {
            r.witnesses.iter().map(move |w| {
                vec![
                    r.check_name.clone(),
                    r.kind.as_str().to_string(),
                    w.generator.clone(),
                    w.depth.to_string(),
                    w.function.clone(),
                    w.params.clone(),
                    w.value.to_string(),
                    r.budget.to_string(),
                    if r.pass { "PASS" } else { "FAIL" }.to_string(),
                ]
            })
        }),
    )
}

/// One line per check: name, worst constant, budget, PASS/FAIL.
pub fn verdict_text(results: &[CheckResult]) -> String {
    results.iter().map(|r| format!("{r}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GeneratorConfig;

    fn tiny_config() -> RunConfig {
        RunConfig {
            generators: vec![GeneratorConfig::new("cantor4", [2])],
            alphas: vec![0.5],
            ps: vec![2.0],
            qs: vec![2.0, f64::INFINITY],
            us: vec![2.0],
            ..RunConfig::default()
        }
    }

    #[test]
    fn constant_rows_have_zero_seminorms() {
        let rows = norm_sweep(&tiny_config()).unwrap();
        assert_eq!(rows.len(), 17 * 2);
        let constant = &rows[0];
        assert_eq!(constant.name, "const_1");
        assert_eq!(constant.report.sharp_lp, 0.0);
        assert_eq!(constant.report.besov_seminorm, 0.0);
        let text = norms_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCHEMA_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 15);
        assert_eq!(text.lines().count(), rows.len() + 2);
        assert!(text.contains(",inf,"));
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let config = RunConfig { alphas: vec![], ..tiny_config() };
        let text = norms_csv(&norm_sweep(&config).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}

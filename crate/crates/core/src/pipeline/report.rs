//! End-to-end report generation: loads the configured inputs, builds the
//! outcome networks, runs every analysis unit (full sample plus subgroups,
//! in parallel), and writes a deterministic bundle of CSV/JSON files plus a
//! manifest with input hashes.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adjust::{adjusted_overlap_bounds, denoised_overlap_bounds, svt_denoise, SvtThreshold};
use crate::bounds::{
    dpo_bounds, destroyed_created_from_overlap, dte_curve, frechet_hoeffding,
    frechet_hoeffding_destroyed_created, mean_difference, pmf_cell_bounds_with, BoundInterval,
    DpoCellTable, DteCurve,
};
use crate::error::{Error, Result};
use crate::netmat::{load_network, LoadOptions, Network};
use crate::oracle;
use crate::pipeline::config::{
    AdjustMethod, AnalysisConfig, ArmInput, OutcomeKind,
};
use crate::pipeline::{build_did_outcome, fmt_num, subset_by_group, AttributeTable, GroupingExpr};
use crate::ste::{disruption_lower_bound, dte_point_identified, ste_field, SteBasis, SteField};
use crate::Arm;

#[derive(Debug)]
pub struct ReportBundle {
    pub directory: PathBuf,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct HistogramJson {
    edges: Vec<f64>,
    mass: Vec<f64>,
}

#[derive(Serialize)]
struct DensityJson {
    x: Vec<f64>,
    value: Vec<f64>,
    bandwidth: f64,
}

#[derive(Serialize)]
struct SteJson {
    disruption_lower_bound: f64,
    stt_stu_sup_distance: f64,
    stt: SteSideJson,
    stu: SteSideJson,
}

#[derive(Serialize)]
struct SteSideJson {
    histogram: HistogramJson,
    density: DensityJson,
    degenerate: bool,
    truncated: bool,
}

#[derive(Serialize)]
struct DisruptionJson {
    fraction_fh: BoundInterval,
    fraction_bounds: BoundInterval,
    fraction_adjusted: Option<BoundInterval>,
    count_fh: Option<(f64, f64)>,
    count_bounds: Option<(f64, f64)>,
    count_adjusted: Option<(f64, f64)>,
    sharp_count_set: Option<Vec<f64>>,
    sharp_extremes_only: Option<bool>,
}

#[derive(Serialize)]
struct UnitSummary {
    name: String,
    n1: usize,
    n0: usize,
    binary: bool,
    mean_difference: f64,
    disruption_lower_bound: f64,
    stt_stu_sup_distance: f64,
    destroyed: Option<DisruptionJson>,
    created: Option<DisruptionJson>,
}

struct UnitOutputs {
    name: String,
    cells_csv: String,
    fh_cells_csv: String,
    dte_csv: String,
    ste_json: String,
    stt_field_csv: String,
    summary_json: String,
}

#[derive(Serialize)]
struct InputRecord {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: ToolInfo,
    config: serde_json::Value,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct ToolInfo {
    name: &'static str,
    version: &'static str,
}

fn load_arm(input: &ArmInput, arm: Arm, outcome: OutcomeKind) -> Result<Network> {
    let mut options = LoadOptions::new(arm);
    if let Some(l) = &input.labels {
        options = options.with_labels(l.clone());
    }
    let observed = load_network(&input.path, input.format, &options)?;
    match (outcome, &input.pre_path) {
        (OutcomeKind::Levels, _) => Ok(observed),
        (OutcomeKind::Did, Some(pre_path)) => {
            let pre = load_network(pre_path, input.format, &options)?;
            build_did_outcome(&observed, &pre)
        }
        (OutcomeKind::Did, None) => Err(Error::Config(
            "did outcome requires pre-period networks".into(),
        )),
    }
}

fn histogram(entries: &[f64]) -> HistogramJson {
    const BINS: usize = 64;
    let min = entries.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = entries.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return HistogramJson {
            edges: vec![min, min + 1.0],
            mass: vec![1.0],
        };
    }
    let width = (max - min) / BINS as f64;
    let edges: Vec<f64> = (0..=BINS).map(|k| min + k as f64 * width).collect();
    let mut mass = vec![0.0; BINS];
    for &e in entries {
        let k = (((e - min) / width) as usize).min(BINS - 1);
        mass[k] += 1.0 / entries.len() as f64;
    }
    HistogramJson { edges, mass }
}

/// Gaussian kernel density with Silverman bandwidth on 512 points. Purely
/// presentational; never feeds back into bounds.
fn smoothed_density(entries: &[f64]) -> DensityJson {
    const POINTS: usize = 512;
    let n = entries.len() as f64;
    let mean = entries.iter().sum::<f64>() / n;
    let sd = (entries.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt();
    let mut sorted = entries.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = (0.9 * spread * n.powf(-0.2)).max(1e-12);
    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (POINTS - 1) as f64)
        .collect();
    let value: Vec<f64> = x
        .iter()
        .map(|&xk| {
            entries
                .iter()
                .map(|&e| {
                    let z = (xk - e) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    DensityJson {
        x,
        value,
        bandwidth: h,
    }
}

fn cells_to_csv(table: &DpoCellTable) -> String {
    let mut out = String::from("y1");
    for &b in &table.support0 {
        out.push_str(&format!(",lower y0={},upper y0={}", fmt_num(b), fmt_num(b)));
    }
    out.push('\n');
    for (i, &a) in table.support1.iter().enumerate() {
        out.push_str(&fmt_num(a));
        for cell in &table.cells[i] {
            out.push_str(&format!(",{},{}", fmt_num(cell.lower), fmt_num(cell.upper)));
        }
        out.push('\n');
    }
    out
}

fn curve_to_csv(curve: &DteCurve) -> String {
    let mut out = String::from("y,lower,upper\n");
    for ((&y, &lo), &hi) in curve.grid.iter().zip(&curve.lower).zip(&curve.upper) {
        out.push_str(&format!("{},{},{}\n", fmt_num(y), fmt_num(lo), fmt_num(hi)));
    }
    out
}

fn field_to_csv(field: &SteField) -> String {
    let n = field.values.nrows();
    let mut out = String::new();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_num(field.values[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Default DTE grid: the distinct pairwise support differences, thinned when
/// excessive.
fn default_dte_grid(net1: &Network, net0: &Network) -> Vec<f64> {
    let s1 = net1.distinct_values();
    let s0 = net0.distinct_values();
    let mut diffs: Vec<f64> = s1
        .iter()
        .flat_map(|&a| s0.iter().map(move |&b| a - b))
        .collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    diffs.dedup();
    const MAX_GRID: usize = 61;
    if diffs.len() > MAX_GRID {
        let step = (diffs.len() + MAX_GRID - 1) / MAX_GRID;
        let last = *diffs.last().unwrap();
        let mut thinned: Vec<f64> = diffs.into_iter().step_by(step).collect();
        if *thinned.last().unwrap() != last {
            thinned.push(last);
        }
        diffs = thinned;
    }
    diffs
}

fn disruption_json(
    raw1: &Network,
    raw0: &Network,
    plain_overlap: &BoundInterval,
    adjusted_overlap: Option<&BoundInterval>,
    sharp: Option<(&oracle::SharpSet, bool)>,
    destroyed_side: bool,
) -> Result<DisruptionJson> {
    let (fh_destroyed, fh_created) = frechet_hoeffding_destroyed_created(raw1, raw0)?;
    let fh = if destroyed_side { fh_destroyed } else { fh_created };
    let (plain_destroyed, plain_created) =
        destroyed_created_from_overlap(raw1, raw0, plain_overlap)?;
    let plain = if destroyed_side {
        plain_destroyed
    } else {
        plain_created
    };
    let adjusted = match adjusted_overlap {
        Some(adj) => {
            let (d, c) = destroyed_created_from_overlap(raw1, raw0, adj)?;
            Some(if destroyed_side { d } else { c })
        }
        None => None,
    };
    let equal_sizes = raw1.n() == raw0.n();
    let count_scale = (raw1.n() * raw1.n()) as f64 / 2.0;
    let to_count = |b: &BoundInterval| (b.lower * count_scale, b.upper * count_scale);
    Ok(DisruptionJson {
        fraction_fh: fh,
        fraction_bounds: plain,
        fraction_adjusted: adjusted,
        count_fh: equal_sizes.then(|| to_count(&fh)),
        count_bounds: equal_sizes.then(|| to_count(&plain)),
        count_adjusted: adjusted.filter(|_| equal_sizes).map(|a| to_count(&a)),
        sharp_count_set: sharp.map(|(s, full)| {
            if full {
                s.values.clone()
            } else {
                vec![s.min(), s.max()]
            }
        }),
        sharp_extremes_only: sharp.map(|(_, full)| !full),
    })
}

/// Corner bound on the overlap F(y1, y0), wired the way the report uses it:
/// denoising acts on the indicator matrices with exact marginal masses and a
/// validity-preserving slack, and the reduction adjustment (computed on the
/// raw indicators) is intersected in when requested.
pub fn corner_bound(
    raw1: &Network,
    raw0: &Network,
    y1: f64,
    y0: f64,
    denoise: Option<SvtThreshold>,
    adjusted: bool,
) -> Result<BoundInterval> {
    let base = match denoise {
        None => dpo_bounds(raw1, raw0, y1, y0)?,
        Some(t) => denoised_overlap_bounds(raw1, raw0, y1, y0, t)?,
    };
    if adjusted {
        let adj = adjusted_overlap_bounds(raw1, raw0, y1, y0)?;
        Ok(base.intersect(&adj))
    } else {
        Ok(base)
    }
}

fn analyze_unit(
    name: &str,
    raw1: &Network,
    raw0: &Network,
    config: &AnalysisConfig,
) -> Result<UnitOutputs> {
    // supports, marginals, the DTE grid and baselines stay on the raw
    // outcomes; denoising enters the corner bounds through the indicator
    // matrices, and the STE fields through the value matrices
    let denoise = config.denoise.svt_threshold();
    let adjusted = config.adjust == AdjustMethod::Reduction;
    let corner = |a: f64, b: f64| corner_bound(raw1, raw0, a, b, denoise, adjusted);

    let cells = pmf_cell_bounds_with(raw1, raw0, |_, _, a, b| corner(a, b))?;
    let fh_cells = pmf_cell_bounds_with(raw1, raw0, |_, _, a, b| {
        Ok(frechet_hoeffding(raw1, raw0, a, b))
    })?;

    let grid = config
        .report
        .dte_grid
        .clone()
        .unwrap_or_else(|| default_dte_grid(raw1, raw0));
    let curve = dte_curve(raw1, raw0, &grid)?;

    let (den1, den0) = match denoise {
        Some(t) => (svt_denoise(raw1, t)?, svt_denoise(raw0, t)?),
        None => (raw1.clone(), raw0.clone()),
    };

    let stt = ste_field(&den1, &den0, SteBasis::Treated)?;
    let stu = ste_field(&den1, &den0, SteBasis::Untreated)?;
    let disruption = disruption_lower_bound(&den1, &den0)?;
    let point = dte_point_identified(&den1, &den0, SteBasis::Treated, &grid)?;
    let stt_entries = stt.sorted_entries();
    let stu_entries = stu.sorted_entries();
    let ste_json = SteJson {
        disruption_lower_bound: disruption,
        stt_stu_sup_distance: point.stt_stu_sup_distance,
        stt: SteSideJson {
            histogram: histogram(&stt_entries),
            density: smoothed_density(&stt_entries),
            degenerate: stt.degenerate,
            truncated: stt.truncated,
        },
        stu: SteSideJson {
            histogram: histogram(&stu_entries),
            density: smoothed_density(&stu_entries),
            degenerate: stu.degenerate,
            truncated: stu.truncated,
        },
    };

    let binary = raw1.is_binary() && raw0.is_binary();
    let (destroyed, created) = if binary {
        let plain_overlap = corner_bound(raw1, raw0, 0.0, 0.0, denoise, false)?;
        let adjusted_overlap = if adjusted {
            Some(corner_bound(raw1, raw0, 0.0, 0.0, denoise, true)?)
        } else {
            None
        };
        let oracle_feasible =
            config.report.oracle && raw1.n() == raw0.n() && raw1.n() <= 10;
        let sharp_sets = if oracle_feasible {
            Some(oracle::sharp_destroyed_created(raw1, raw0)?)
        } else {
            None
        };
        let full_set = raw1.n() <= 8;
        let destroyed = disruption_json(
            raw1,
            raw0,
            &plain_overlap,
            adjusted_overlap.as_ref(),
            sharp_sets.as_ref().map(|(d, _)| (d, full_set)),
            true,
        )?;
        let created = disruption_json(
            raw1,
            raw0,
            &plain_overlap,
            adjusted_overlap.as_ref(),
            sharp_sets.as_ref().map(|(_, c)| (c, full_set)),
            false,
        )?;
        (Some(destroyed), Some(created))
    } else {
        (None, None)
    };

    let summary = UnitSummary {
        name: name.to_string(),
        n1: raw1.n(),
        n0: raw0.n(),
        binary,
        mean_difference: mean_difference(raw1, raw0),
        disruption_lower_bound: disruption,
        stt_stu_sup_distance: point.stt_stu_sup_distance,
        destroyed,
        created,
    };

    Ok(UnitOutputs {
        name: name.to_string(),
        cells_csv: cells_to_csv(&cells),
        fh_cells_csv: cells_to_csv(&fh_cells),
        dte_csv: curve_to_csv(&curve),
        ste_json: serde_json::to_string_pretty(&ste_json).expect("serializable") + "\n",
        stt_field_csv: field_to_csv(&stt),
        summary_json: serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    })
}

fn sha256_file(path: &std::path::Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs the configured analysis end to end and writes the report bundle.
/// Identical config and inputs produce byte-identical outputs.
pub fn run_report(config: &AnalysisConfig) -> Result<ReportBundle> {
    let raw1 = load_arm(&config.inputs.arm1, Arm::Treated, config.outcome)?;
    let raw0 = load_arm(&config.inputs.arm0, Arm::Control, config.outcome)?;

    let attrs = match &config.attributes {
        Some(path) => Some(AttributeTable::load(path)?),
        None => None,
    };

    // unit list: full sample first, then subgroups in config order
    let mut units: Vec<(String, Network, Network)> =
        vec![("full".to_string(), raw1.clone(), raw0.clone())];
    for sg in &config.subgroups {
        let attrs = attrs
            .as_ref()
            .ok_or_else(|| Error::Config("subgroups require an attributes file".into()))?;
        let expr = match (&sg.select, &sg.left, &sg.right) {
            (Some(s), None, None) => GroupingExpr::parse_select(s)?,
            (None, Some(l), Some(r)) => GroupingExpr::parse_cross(l, r)?,
            _ => unreachable!("validated at config load"),
        };
        let sub1 = subset_by_group(&raw1, attrs, &expr)?;
        let sub0 = subset_by_group(&raw0, attrs, &expr)?;
        units.push((sg.name.clone(), sub1, sub0));
    }

    // subgroup analyses are independent; run them in parallel and write in
    // config order
    let results: Result<Vec<UnitOutputs>> = units
        .par_iter()
        .map(|(name, n1, n0)| analyze_unit(name, n1, n0, config))
        .collect();
    let results = results?;

    let dir = &config.output.directory;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    fn write_file(
        dir: &std::path::Path,
        files: &mut Vec<PathBuf>,
        name: String,
        content: &str,
    ) -> Result<()> {
        let path = dir.join(&name);
        std::fs::write(&path, content).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        files.push(path);
        Ok(())
    }

    let mut files = Vec::new();
    for unit in &results {
        write_file(dir, &mut files, format!("cells_{}.csv", unit.name), &unit.cells_csv)?;
        write_file(dir, &mut files, format!("fh_cells_{}.csv", unit.name), &unit.fh_cells_csv)?;
        write_file(dir, &mut files, format!("dte_{}.csv", unit.name), &unit.dte_csv)?;
        write_file(dir, &mut files, format!("ste_{}.json", unit.name), &unit.ste_json)?;
        write_file(
            dir,
            &mut files,
            format!("ste_field_stt_{}.csv", unit.name),
            &unit.stt_field_csv,
        )?;
        write_file(dir, &mut files, format!("summary_{}.json", unit.name), &unit.summary_json)?;
    }

    let mut inputs = Vec::new();
    for (role, arm) in [("arm1", &config.inputs.arm1), ("arm0", &config.inputs.arm0)] {
        inputs.push(InputRecord {
            role: role.to_string(),
            path: arm.path.display().to_string(),
            sha256: sha256_file(&arm.path)?,
        });
        if let Some(pre) = &arm.pre_path {
            inputs.push(InputRecord {
                role: format!("{role}_pre"),
                path: pre.display().to_string(),
                sha256: sha256_file(pre)?,
            });
        }
        if let Some(labels) = &arm.labels {
            inputs.push(InputRecord {
                role: format!("{role}_labels"),
                path: labels.display().to_string(),
                sha256: sha256_file(labels)?,
            });
        }
    }
    if let Some(a) = &config.attributes {
        inputs.push(InputRecord {
            role: "attributes".to_string(),
            path: a.display().to_string(),
            sha256: sha256_file(a)?,
        });
    }

    let manifest = Manifest {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        config: serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?,
        inputs,
        outputs: {
            let mut names: Vec<String> = files
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect();
            names.sort();
            names
        },
    };
    let manifest_text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))? + "\n";
    write_file(dir, &mut files, "manifest.json".to_string(), &manifest_text)?;

    Ok(ReportBundle {
        directory: dir.clone(),
        files,
    })
}

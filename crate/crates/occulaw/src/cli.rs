//! Experiment orchestration behind the `occulaw` binary: the simplex-to-plane
//! map for three-state histograms, ensemble histogram binning, regime
//! reports, and CSV/JSON emission with reproducibility metadata.

use std::io::Write;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::core::{ChainConfig, GeneratorMatrix, MultiIndex};
use crate::error::{Error, Result};
use crate::moments::{limit_moment, MomentValue};
use crate::simulate::{ensemble_occupations, EnsembleResult};
use crate::spectral::{limit_marginal_zeta_gt1, stationary_distribution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Images of the three simplex vertices under the plane map; pairwise
/// distances are sqrt(2).
pub fn vertex_images() -> [[f64; 2]; 3] {
    let sqrt_6 = 6.0f64.sqrt();
    [[SQRT_2, 0.0], [0.0, 0.0], [SQRT_2 / 2.0, sqrt_6 / 2.0]]
}

/// Image of a three-state simplex point under the linear plane map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

/// Map a point of the three-state simplex to the plane by the linear
/// extension of the fixed vertex images.
pub fn simplex_to_plane(p: &[f64; 3]) -> Result<PlanePoint> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < -1e-9) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotSimplexPoint(format!(
            "entries {p:?} (sum {sum})"
        )));
    }
    let v = vertex_images();
    Ok(PlanePoint {
        x: p[0] * v[0][0] + p[1] * v[1][0] + p[2] * v[2][0],
        y: p[0] * v[0][1] + p[1] * v[1][1] + p[2] * v[2][1],
    })
}

/// Barycentric coordinates of a plane point with respect to the mapped
/// triangle.
pub fn plane_to_barycentric(x: f64, y: f64) -> [f64; 3] {
    let sqrt_6 = 6.0f64.sqrt();
    let l3 = 2.0 * y / sqrt_6;
    let l1 = x / SQRT_2 - l3 / 2.0;
    [l1, 1.0 - l1 - l3, l3]
}

fn point_in_triangle(x: f64, y: f64, tol: f64) -> bool {
    plane_to_barycentric(x, y).iter().all(|&l| l >= -tol)
}

/// One histogram cell of the figure-2 grid.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramCell {
    pub ix: usize,
    pub iy: usize,
    pub x_center: f64,
    pub y_center: f64,
    pub count: u64,
    /// true when the whole cell lies inside the mapped triangle
    pub interior: bool,
}

/// Binned plane histogram of an ensemble of three-state occupation vectors.
#[derive(Debug, Clone, Serialize)]
pub struct Figure2Histogram {
    pub bins: usize,
    pub cell_width: f64,
    pub cell_height: f64,
    pub cells: Vec<HistogramCell>,
    pub interior_cells: usize,
    pub interior_nonempty: usize,
    pub samples: u64,
}

/// Parameters of the three-state histogram experiment.
#[derive(Debug, Clone)]
pub struct Figure2Params {
    pub replicas: u64,
    pub horizon: u64,
    pub seed: u64,
    pub bins: usize,
    pub zeta: f64,
}

impl Default for Figure2Params {
    fn default() -> Self {
        Figure2Params {
            replicas: 1000,
            horizon: 10_000,
            seed: 1,
            bins: 10,
            zeta: 1.0,
        }
    }
}

/// Run the histogram experiment: an ensemble of occupation vectors at the
/// given horizon, uniform initial distribution, mapped to the plane and
/// binned on a fixed-width square grid over the triangle's bounding box.
/// Cells outside the triangle are suppressed.
pub fn run_figure2(generator: &GeneratorMatrix, params: &Figure2Params) -> Result<Figure2Histogram> {
    if generator.dim() != 3 {
        return Err(Error::Invalid(format!(
            "plane histogram requires m = 3, got m = {}",
            generator.dim()
        )));
    }
    let config = ChainConfig::new(
        generator.clone(),
        params.zeta,
        ChainConfig::uniform_initial(3),
        params.horizon,
        params.seed,
    )?;
    let ensemble = ensemble_occupations(&config, params.replicas)?;
    let points: Vec<PlanePoint> = ensemble
        .replicas
        .iter()
        .map(|z| {
            let f = z.frequencies();
            simplex_to_plane(&[f[0], f[1], f[2]])
        })
        .collect::<Result<_>>()?;
    Ok(bin_plane_points(&points, params.bins))
}

/// Bin mapped points on the square grid; exposed separately for testing.
pub fn bin_plane_points(points: &[PlanePoint], bins: usize) -> Figure2Histogram {
    let sqrt_6 = 6.0f64.sqrt();
    let (width, height) = (SQRT_2, sqrt_6 / 2.0);
    let cell_width = width / bins as f64;
    let cell_height = height / bins as f64;

    let mut counts = vec![0u64; bins * bins];
    for p in points {
        let ix = ((p.x / cell_width) as usize).min(bins - 1);
        let iy = ((p.y / cell_height) as usize).min(bins - 1);
        counts[iy * bins + ix] += 1;
    }

    let mut cells = Vec::new();
    let mut interior_cells = 0;
    let mut interior_nonempty = 0;
    for iy in 0..bins {
        for ix in 0..bins {
            let x0 = ix as f64 * cell_width;
            let y0 = iy as f64 * cell_height;
            let corners = [
                (x0, y0),
                (x0 + cell_width, y0),
                (x0, y0 + cell_height),
                (x0 + cell_width, y0 + cell_height),
            ];
            let inside = corners
                .iter()
                .filter(|&&(x, y)| point_in_triangle(x, y, 1e-12))
                .count();
            if inside == 0 {
                continue; // triangle-exterior bin suppressed
            }
            let interior = inside == 4;
            let count = counts[iy * bins + ix];
            if interior {
                interior_cells += 1;
                if count > 0 {
                    interior_nonempty += 1;
                }
            }
            cells.push(HistogramCell {
                ix,
                iy,
                x_center: x0 + cell_width / 2.0,
                y_center: y0 + cell_height / 2.0,
                count,
                interior,
            });
        }
    }
    Figure2Histogram {
        bins,
        cell_width,
        cell_height,
        cells,
        interior_cells,
        interior_nonempty,
        samples: points.len() as u64,
    }
}

/// Theoretical comparator attached to one regime block.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeComparator {
    /// zeta <= 1: the stationary distribution of the generator
    Stationary { nu: Vec<f64> },
    /// zeta > 1: the point-mixture weights (limit marginal of the position)
    PointMixture { weights: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub gamma: String,
    pub value: f64,
    pub method: String,
}

/// Summary of one ensemble at a fixed strength parameter.
#[derive(Debug, Clone, Serialize)]
pub struct ZetaBlock {
    pub zeta: f64,
    pub regime: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub mean_switch_count: f64,
    pub final_state_frequencies: Vec<f64>,
    pub comparator: RegimeComparator,
    /// present only at zeta = 1: limit moments for all total degrees <= 2
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_table: Option<Vec<MomentRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub horizon: u64,
    pub replicas: u64,
    pub blocks: Vec<ZetaBlock>,
}

/// Run one ensemble per strength parameter and attach the theoretical
/// comparator for its regime.
pub fn run_regime_report(
    generator: &GeneratorMatrix,
    zetas: &[f64],
    pi: &Array1<f64>,
    horizon: u64,
    replicas: u64,
    seed: u64,
) -> Result<RegimeReport> {
    let m = generator.dim();
    let mut blocks = Vec::with_capacity(zetas.len());
    for &zeta in zetas {
        let config = ChainConfig::new(generator.clone(), zeta, pi.clone(), horizon, seed)?;
        let ensemble = ensemble_occupations(&config, replicas)?;
        let comparator = if zeta > 1.0 {
            let weights = limit_marginal_zeta_gt1(generator, zeta, pi, 1e-8)?;
            RegimeComparator::PointMixture {
                weights: weights.to_vec(),
            }
        } else {
            let nu = stationary_distribution(generator)?;
            RegimeComparator::Stationary { nu: nu.to_vec() }
        };
        let moment_table = if zeta == 1.0 {
            Some(moment_table_through_degree(generator, 2)?)
        } else {
            None
        };
        let regime = if zeta < 1.0 {
            "subcritical"
        } else if zeta == 1.0 {
            "critical"
        } else {
            "supercritical"
        };
        blocks.push(ZetaBlock {
            zeta,
            regime: regime.to_string(),
            mean: ensemble.mean().to_vec(),
            std: ensemble.std().to_vec(),
            mean_switch_count: ensemble.mean_switch_count(),
            final_state_frequencies: ensemble.final_state_frequencies(m).to_vec(),
            comparator,
            moment_table,
        });
    }
    let hash = config_hash(&serde_json::json!({
        "generator": generator.to_json_string(),
        "zetas": zetas,
        "pi": pi.to_vec(),
        "horizon": horizon,
        "replicas": replicas,
        "seed": seed,
    }));
    Ok(RegimeReport {
        version: VERSION.to_string(),
        seed,
        config_hash: hash,
        horizon,
        replicas,
        blocks,
    })
}

/// All limit moments with total degree between 1 and `max_degree`.
pub fn moment_table_through_degree(
    generator: &GeneratorMatrix,
    max_degree: u32,
) -> Result<Vec<MomentRow>> {
    let m = generator.dim();
    let mut rows = Vec::new();
    for gamma in multi_indices_through_degree(m, max_degree) {
        let mv = limit_moment(generator, &gamma)?;
        rows.push(moment_row(&mv));
    }
    Ok(rows)
}

pub fn moment_row(mv: &MomentValue) -> MomentRow {
    MomentRow {
        gamma: mv
            .gamma
            .gamma()
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(";"),
        value: mv.value,
        method: mv.method.as_str().to_string(),
    }
}

/// Every multi-index in `m` coordinates with total degree in `1..=max_degree`,
/// in lexicographic order.
pub fn multi_indices_through_degree(m: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; m];
    fn recurse(
        current: &mut Vec<u32>,
        pos: usize,
        remaining: u32,
        out: &mut Vec<MultiIndex>,
    ) {
        if pos == current.len() {
            if current.iter().sum::<u32>() >= 1 {
                out.push(MultiIndex::new(current.clone()).unwrap());
            }
            return;
        }
        for v in 0..=remaining {
            current[pos] = v;
            recurse(current, pos + 1, remaining - v, out);
        }
        current[pos] = 0;
    }
    recurse(&mut current, 0, max_degree, &mut out);
    out
}

/// Short hex digest of a canonical JSON config; equal configs give
/// byte-identical emitted data sections.
pub fn config_hash(value: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(value).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..8])
}

/// Metadata comment line placed above every CSV header.
pub fn metadata_line(seed: u64, hash: &str) -> String {
    format!("# occulaw {VERSION} seed={seed} config_hash={hash}")
}

/// Stream an ensemble as CSV: one row per replica with its occupation
/// vector, switch count, and final state (1-based).
pub fn write_ensemble_csv<W: Write>(
    writer: &mut W,
    ensemble: &EnsembleResult,
    seed: u64,
    hash: &str,
) -> Result<()> {
    let m = ensemble.replicas.first().map_or(0, |z| z.len());
    writeln!(writer, "{}", metadata_line(seed, hash))?;
    let mut header = vec!["replica_index".to_string()];
    header.extend((1..=m).map(|i| format!("Z_{i}")));
    header.push("switch_count".to_string());
    header.push("final_state".to_string());
    writeln!(writer, "{}", header.join(","))?;
    for (r, z) in ensemble.replicas.iter().enumerate() {
        let mut row = vec![r.to_string()];
        row.extend(z.frequencies().iter().map(|v| format!("{v}")));
        row.push(ensemble.switch_counts[r].to_string());
        row.push((ensemble.final_states[r] + 1).to_string());
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}

/// Moment table CSV: gamma (semicolon-joined), value, method.
pub fn write_moment_csv<W: Write>(
    writer: &mut W,
    rows: &[MomentRow],
    seed: u64,
    hash: &str,
) -> Result<()> {
    writeln!(writer, "{}", metadata_line(seed, hash))?;
    writeln!(writer, "gamma,value,method")?;
    for row in rows {
        writeln!(writer, "{},{},{}", row.gamma, row.value, row.method)?;
    }
    Ok(())
}

/// Figure-2 histogram CSV: bin centers and counts for triangle bins.
pub fn write_figure2_csv<W: Write>(
    writer: &mut W,
    histogram: &Figure2Histogram,
    seed: u64,
    hash: &str,
) -> Result<()> {
    writeln!(writer, "{}", metadata_line(seed, hash))?;
    writeln!(writer, "bin_x,bin_y,count")?;
    for cell in &histogram.cells {
        writeln!(writer, "{},{},{}", cell.x_center, cell.y_center, cell.count)?;
    }
    Ok(())
}

/// Exact occupation law CSV: count vector (semicolon-joined), probability.
pub fn write_law_csv<W: Write>(
    writer: &mut W,
    law: &crate::oracle::ExactOccupationLaw,
    seed: u64,
    hash: &str,
) -> Result<()> {
    writeln!(writer, "{}", metadata_line(seed, hash))?;
    writeln!(writer, "counts,probability")?;
    for (counts, p) in &law.support {
        let joined = counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(writer, "{joined},{p}")?;
    }
    Ok(())
}

/// Parse a probability vector argument: `uniform` or a comma list.
pub fn parse_pi(arg: &str, m: usize) -> Result<Array1<f64>> {
    if arg == "uniform" {
        return Ok(ChainConfig::uniform_initial(m));
    }
    let values: Vec<f64> = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Invalid(format!("bad pi entry: {e}")))?;
    if values.len() != m {
        return Err(Error::Invalid(format!(
            "pi has {} entries, expected {m}",
            values.len()
        )));
    }
    let v = Array1::from_vec(values);
    crate::core::validate_probability_vector(&v)?;
    Ok(v)
}

/// Parse a gamma list argument: semicolon-separated comma lists, e.g.
/// `2,0,0;1,1,0`.
pub fn parse_gammas(arg: &str, m: usize) -> Result<Vec<MultiIndex>> {
    let mut out = Vec::new();
    for part in arg.split(';') {
        let values: Vec<u32> = part
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Invalid(format!("bad gamma entry: {e}")))?;
        if values.len() != m {
            return Err(Error::Invalid(format!(
                "gamma {part:?} has {} coordinates, expected {m}",
                values.len()
            )));
        }
        out.push(MultiIndex::new(values)?);
    }
    Ok(out)
}

/// Single-file experiment configuration accepted through `--spec`; unknown
/// fields are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub generator: Option<String>,
    pub zeta: Option<f64>,
    pub zetas: Option<Vec<f64>>,
    pub pi: Option<String>,
    pub n: Option<u64>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
    pub gamma: Option<String>,
    pub bins: Option<usize>,
    pub out: Option<String>,
    pub format: Option<String>,
}

impl ExperimentSpec {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

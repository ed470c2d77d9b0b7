//! Ratio and throughput measurements over a codec × level × preconditioner
//! matrix.
//!
//! A dataset is serialized into baskets once; only block compression and
//! decompression are timed. Each cell runs `warmup` untimed passes and then
//! `reps` timed passes over every payload of the dataset, and reports the
//! median pass time as throughput in uncompressed MB (10^6 bytes) per second.
//! Compressed sizes count block bodies only, so a store cell has a ratio of
//! exactly 1.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::codec::{
    compress_block, decompress_block, CodecError, CodecId, CompressedBlock, CompressionSettings,
    Dictionary, DictionaryTable, Level,
};
use crate::column::{basketize, ColumnError, Tree, OFFSET_WIDTH};
use crate::precondition::PreconditionerKind;

/// Tag describing how timings were taken.
pub const TIMING_METHOD: &str = "median-monotonic";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least 3 repetitions are required, got {0}")]
    TooFewRepetitions(usize),
    #[error("at least 1 warmup pass is required")]
    NoWarmup,
    #[error("the settings matrix is empty")]
    EmptyMatrix,
    #[error("a report needs at least one record")]
    EmptyReport,
    #[error("dataset has no entries")]
    EmptyDataset,
    #[error(transparent)]
    Column(#[from] ColumnError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One point of the settings matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCell {
    pub codec: CodecId,
    pub level: Level,
    pub precond: PreconditionerKind,
    pub dictionary: Option<Arc<Dictionary>>,
}

impl MatrixCell {
    pub fn new(codec: CodecId, level: Level, precond: PreconditionerKind) -> Self {
        Self {
            codec,
            level,
            precond,
            dictionary: None,
        }
    }

    /// Cartesian product; store is emitted once, at level 0, regardless of
    /// the level list.
    pub fn product(
        codecs: &[CodecId],
        levels: &[Level],
        preconds: &[PreconditionerKind],
    ) -> Vec<MatrixCell> {
        let mut cells = Vec::new();
        for &codec in codecs {
            for &precond in preconds {
                if codec == CodecId::Store {
                    cells.push(MatrixCell::new(codec, Level::STORE, precond));
                    continue;
                }
                for &level in levels {
                    let cell = MatrixCell::new(codec, level, precond);
                    if !cells.contains(&cell) {
                        cells.push(cell);
                    }
                }
            }
        }
        cells
    }

    fn settings(&self) -> Result<CompressionSettings, CodecError> {
        let s = CompressionSettings::new(self.codec, self.level)
            .with_preconditioner_kind(self.precond, 1);
        match &self.dictionary {
            Some(d) => s.with_dictionary(Arc::clone(d)),
            None => Ok(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub reps: usize,
    pub warmup: usize,
    pub target_basket_bytes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 5,
            warmup: 1,
            target_basket_bytes: crate::column::DEFAULT_BASKET_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Error(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub dataset: String,
    pub codec: CodecId,
    pub level: u8,
    pub precond: PreconditionerKind,
    pub unc_bytes: u64,
    pub comp_bytes: u64,
    pub comp_mbps: f64,
    pub decomp_mbps: f64,
    pub reps: usize,
    pub timing: &'static str,
    pub status: CellStatus,
}

impl BenchmarkRecord {
    pub fn ratio(&self) -> f64 {
        if self.comp_bytes == 0 {
            0.0
        } else {
            self.unc_bytes as f64 / self.comp_bytes as f64
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

/// A payload together with the stride its preconditioner should use.
struct Payload {
    bytes: Vec<u8>,
    stride: u8,
}

fn payloads(tree: &Tree, target_basket_bytes: usize) -> Result<Vec<Payload>, BenchError> {
    if tree.n_entries() == 0 {
        return Err(BenchError::EmptyDataset);
    }
    let mut out = Vec::new();
    for (branch, column) in tree.schema().branches().iter().zip(tree.columns()) {
        let stride = branch.element.width().bytes() as u8;
        for basket in basketize(column, branch, target_basket_bytes)? {
            out.push(Payload {
                bytes: basket.data,
                stride,
            });
            if let Some(offsets) = basket.offsets {
                out.push(Payload {
                    bytes: offsets,
                    stride: OFFSET_WIDTH as u8,
                });
            }
        }
    }
    Ok(out)
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

fn mbps(bytes: u64, elapsed: Duration) -> f64 {
    let secs = elapsed.as_secs_f64().max(1e-9);
    bytes as f64 / 1e6 / secs
}

fn compress_all(
    payloads: &[Payload],
    per_stride: &[(u8, CompressionSettings)],
) -> Result<Vec<CompressedBlock>, CodecError> {
    payloads
        .iter()
        .map(|p| {
            let s = &per_stride
                .iter()
                .find(|(k, _)| *k == p.stride)
                .expect("stride prepared")
                .1;
            compress_block(&p.bytes, s)
        })
        .collect()
}

fn decompress_all(
    blocks: &[CompressedBlock],
    dicts: &DictionaryTable,
) -> Result<Vec<Vec<u8>>, CodecError> {
    blocks.iter().map(|b| decompress_block(b, dicts)).collect()
}

fn run_cell(
    payloads: &[Payload],
    cell: &MatrixCell,
    config: &BenchConfig,
) -> Result<(u64, u64, f64, f64), String> {
    let base = cell.settings().map_err(|e| e.to_string())?;
    let mut per_stride: Vec<(u8, CompressionSettings)> = Vec::new();
    for p in payloads {
        if !per_stride.iter().any(|(k, _)| *k == p.stride) {
            per_stride.push((p.stride, base.for_stride(p.stride)));
        }
    }
    let dicts: DictionaryTable = cell.dictionary.iter().cloned().collect();
    let unc_bytes: u64 = payloads.iter().map(|p| p.bytes.len() as u64).sum();

    let blocks = compress_all(payloads, &per_stride).map_err(|e| e.to_string())?;
    let restored = decompress_all(&blocks, &dicts).map_err(|e| e.to_string())?;
    if restored.iter().zip(payloads).any(|(r, p)| *r != p.bytes) {
        return Err("roundtrip mismatch".into());
    }
    let comp_bytes: u64 = blocks.iter().map(|b| u64::from(b.compressed_len())).sum();

    for _ in 1..config.warmup {
        compress_all(payloads, &per_stride).map_err(|e| e.to_string())?;
    }
    let mut comp_times = Vec::with_capacity(config.reps);
    for _ in 0..config.reps {
        let start = Instant::now();
        let out = compress_all(payloads, &per_stride).map_err(|e| e.to_string())?;
        comp_times.push(start.elapsed());
        drop(out);
    }

    for _ in 0..config.warmup {
        decompress_all(&blocks, &dicts).map_err(|e| e.to_string())?;
    }
    let mut decomp_times = Vec::with_capacity(config.reps);
    for _ in 0..config.reps {
        let start = Instant::now();
        let out = decompress_all(&blocks, &dicts).map_err(|e| e.to_string())?;
        decomp_times.push(start.elapsed());
        drop(out);
    }

    Ok((
        unc_bytes,
        comp_bytes,
        mbps(unc_bytes, median(comp_times)),
        mbps(unc_bytes, median(decomp_times)),
    ))
}

/// Measures every cell of `matrix` on `tree`. Cells run one after another on
/// the calling thread. A cell that fails is reported with an error status.
pub fn run_matrix(
    dataset: &str,
    tree: &Tree,
    matrix: &[MatrixCell],
    config: &BenchConfig,
) -> Result<Vec<BenchmarkRecord>, BenchError> {
    if config.reps < 3 {
        return Err(BenchError::TooFewRepetitions(config.reps));
    }
    if config.warmup < 1 {
        return Err(BenchError::NoWarmup);
    }
    if matrix.is_empty() {
        return Err(BenchError::EmptyMatrix);
    }
    let payloads = payloads(tree, config.target_basket_bytes)?;
    Ok(matrix
        .iter()
        .map(|cell| {
            let record = BenchmarkRecord {
                dataset: dataset.to_string(),
                codec: cell.codec,
                level: cell.level.get(),
                precond: cell.precond,
                unc_bytes: 0,
                comp_bytes: 0,
                comp_mbps: 0.0,
                decomp_mbps: 0.0,
                reps: config.reps,
                timing: TIMING_METHOD,
                status: CellStatus::Ok,
            };
            match run_cell(&payloads, cell, config) {
                Ok((unc_bytes, comp_bytes, comp_mbps, decomp_mbps)) => BenchmarkRecord {
                    codec: if cell.level == Level::STORE {
                        CodecId::Store
                    } else {
                        cell.codec
                    },
                    unc_bytes,
                    comp_bytes,
                    comp_mbps,
                    decomp_mbps,
                    ..record
                },
                Err(msg) => BenchmarkRecord {
                    status: CellStatus::Error(msg),
                    ..record
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Report column names, in order.
pub const REPORT_COLUMNS: [&str; 11] = [
    "dataset",
    "codec",
    "level",
    "precond",
    "unc_bytes",
    "comp_bytes",
    "ratio",
    "comp_MBps",
    "decomp_MBps",
    "reps",
    "status",
];

fn row(r: &BenchmarkRecord) -> [String; 11] {
    let status = match &r.status {
        CellStatus::Ok => "ok".to_string(),
        CellStatus::Error(msg) => format!("error: {msg}"),
    };
    [
        r.dataset.clone(),
        r.codec.name().to_string(),
        r.level.to_string(),
        r.precond.name().to_string(),
        r.unc_bytes.to_string(),
        r.comp_bytes.to_string(),
        format!("{:.6}", r.ratio()),
        format!("{:.3}", r.comp_mbps),
        format!("{:.3}", r.decomp_mbps),
        r.reps.to_string(),
        status,
    ]
}

pub fn emit_report(
    records: &[BenchmarkRecord],
    format: ReportFormat,
) -> Result<Vec<u8>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_COLUMNS)?;
            for r in records {
                w.write_record(row(r))?;
            }
            w.into_inner()
                .map_err(|e| BenchError::Csv(e.into_error().into()))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            out.push_str(&format!("| {} |\n", REPORT_COLUMNS.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(REPORT_COLUMNS.len())));
            for r in records {
                let cells: Vec<String> = row(r).iter().map(|c| c.replace('|', "\\|")).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            Ok(out.into_bytes())
        }
    }
}

/// Outcome of one hardware-dependent shape check. `passed` is `None` when
/// the records do not contain the cells the check needs.
#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeCheck {
    pub name: &'static str,
    pub passed: Option<bool>,
    pub detail: String,
}

impl fmt::Display for QualitativeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        write!(f, "[{verdict}] {}: {}", self.name, self.detail)
    }
}

fn spread(values: &[f64]) -> Option<f64> {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    (values.len() >= 2 && min > 0.0).then(|| max / min)
}

/// Shape checks on unpreconditioned cells:
/// zstd ratio is at least deflate's at every shared level; LZ4 decompresses
/// faster than deflate at every shared level; and the largest
/// max/min decompression-throughput spread of any codec across levels
/// 1, 6 and 9 is below the smallest spread across codecs at a fixed level.
pub fn qualitative_checks(records: &[BenchmarkRecord]) -> Vec<QualitativeCheck> {
    let plain: Vec<&BenchmarkRecord> = records
        .iter()
        .filter(|r| r.is_ok() && r.precond == PreconditionerKind::None && r.codec != CodecId::Store)
        .collect();
    let find =
        |codec: CodecId, level: u8| plain.iter().find(|r| r.codec == codec && r.level == level);
    let levels: Vec<u8> = {
        let mut l: Vec<u8> = plain.iter().map(|r| r.level).collect();
        l.sort_unstable();
        l.dedup();
        l
    };

    let pairwise = |a: CodecId,
                    b: CodecId,
                    name: &'static str,
                    better: &dyn Fn(&BenchmarkRecord, &BenchmarkRecord) -> bool,
                    what: &str| {
        let mut compared = Vec::new();
        let mut ok = true;
        for &level in &levels {
            if let (Some(x), Some(y)) = (find(a, level), find(b, level)) {
                ok &= better(x, y);
                compared.push(level.to_string());
            }
        }
        QualitativeCheck {
            name,
            passed: (!compared.is_empty()).then_some(ok),
            detail: format!("{what} at levels [{}]", compared.join(",")),
        }
    };

    let mut checks = vec![
        pairwise(
            CodecId::Zstd,
            CodecId::Deflate,
            "zstd-ratio-vs-deflate",
            &|z, d| z.ratio() >= d.ratio(),
            "zstd ratio >= deflate ratio",
        ),
        pairwise(
            CodecId::Lz4,
            CodecId::Deflate,
            "lz4-decomp-vs-deflate",
            &|l, d| l.decomp_mbps > d.decomp_mbps,
            "lz4 decompression MB/s > deflate",
        ),
    ];

    let probe_levels = [1u8, 6, 9];
    let codecs: Vec<CodecId> = CodecId::ALL
        .into_iter()
        .filter(|&c| c != CodecId::Store && probe_levels.iter().all(|&l| find(c, l).is_some()))
        .collect();
    let within = codecs
        .iter()
        .filter_map(|&c| spread(&probe_levels.map(|l| find(c, l).unwrap().decomp_mbps)))
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        });
    let across = probe_levels
        .iter()
        .filter_map(|&l| {
            spread(
                &codecs
                    .iter()
                    .map(|&c| find(c, l).unwrap().decomp_mbps)
                    .collect::<Vec<_>>(),
            )
        })
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        });
    checks.push(match (within, across) {
        (Some(w), Some(a)) if codecs.len() >= 2 => QualitativeCheck {
            name: "decomp-spread-level-vs-codec",
            passed: Some(w < a),
            detail: format!("max spread across levels {w:.2}x vs min spread across codecs {a:.2}x"),
        },
        _ => QualitativeCheck {
            name: "decomp-spread-level-vs-codec",
            passed: None,
            detail: "needs at least two codecs at levels 1, 6 and 9".into(),
        },
    });
    checks
}

/// One dictionary size of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub target_size: usize,
    /// Bytes actually produced by the trainer; 0 on failure.
    pub dict_bytes: usize,
    pub total_without: u64,
    pub total_with: u64,
    pub status: CellStatus,
}

impl SweepPoint {
    /// Compressed total including one copy of the dictionary.
    pub fn total_with_dictionary_cost(&self) -> u64 {
        self.total_with + self.dict_bytes as u64
    }
}

/// Dictionary sizes swept by default.
pub const SWEEP_SIZES: [usize; 3] = [4 * 1024, 16 * 1024, 64 * 1024];

/// Trains a dictionary on `train` for each size and reports the total
/// compressed body size of `test` with and without it.
pub fn dictionary_sweep<S: AsRef<[u8]>>(
    train: &[S],
    test: &[S],
    sizes: &[usize],
    codec: CodecId,
    level: Level,
) -> Result<Vec<SweepPoint>, CodecError> {
    let plain = CompressionSettings::new(codec, level);
    let total = |settings: &CompressionSettings| -> Result<u64, CodecError> {
        test.iter()
            .map(|s| compress_block(s.as_ref(), settings).map(|b| u64::from(b.compressed_len())))
            .sum()
    };
    let total_without = total(&plain)?;
    sizes
        .iter()
        .map(|&target_size| {
            let point = SweepPoint {
                target_size,
                dict_bytes: 0,
                total_without,
                total_with: 0,
                status: CellStatus::Ok,
            };
            let trained = crate::codec::train_dictionary(train, target_size, codec)
                .and_then(|d| {
                    let len = d.bytes().len();
                    Ok((len, plain.clone().with_dictionary(Arc::new(d))?))
                })
                .and_then(|(len, s)| Ok((len, total(&s)?)));
            Ok(match trained {
                Ok((dict_bytes, total_with)) => SweepPoint {
                    dict_bytes,
                    total_with,
                    ..point
                },
                Err(e) => SweepPoint {
                    status: CellStatus::Error(e.to_string()),
                    ..point
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, DatasetProfile, ValueModel};
    use crate::Width;

    fn small_tree() -> Tree {
        generate(&DatasetProfile::JaggedTree {
            n_events: 500,
            n_branches: 2,
            lambda: 3.0,
            elem_width: Width::W4,
            values: ValueModel::GaussianQuantized,
            seed: 3,
        })
        .unwrap()
    }

    fn quick() -> BenchConfig {
        BenchConfig {
            reps: 3,
            warmup: 1,
            target_basket_bytes: 1024,
        }
    }

    #[test]
    fn store_ratio_is_exactly_one() {
        let cells = [MatrixCell::new(
            CodecId::Store,
            Level::STORE,
            PreconditionerKind::None,
        )];
        let recs = run_matrix("t", &small_tree(), &cells, &quick()).unwrap();
        assert_eq!(recs[0].ratio(), 1.0);
        assert!(recs[0].comp_mbps > 0.0 && recs[0].decomp_mbps > 0.0);
    }

    #[test]
    fn level_zero_is_reported_as_store() {
        let cells = [MatrixCell::new(
            CodecId::Zstd,
            Level::STORE,
            PreconditionerKind::Shuffle,
        )];
        let recs = run_matrix("t", &small_tree(), &cells, &quick()).unwrap();
        assert_eq!(recs[0].codec, CodecId::Store);
        assert_eq!(recs[0].ratio(), 1.0);
    }

    #[test]
    fn config_preconditions() {
        let cells = [MatrixCell::new(
            CodecId::Store,
            Level::STORE,
            PreconditionerKind::None,
        )];
        let tree = small_tree();
        let bad_reps = BenchConfig { reps: 2, ..quick() };
        assert!(matches!(
            run_matrix("t", &tree, &cells, &bad_reps),
            Err(BenchError::TooFewRepetitions(2))
        ));
        let bad_warmup = BenchConfig {
            warmup: 0,
            ..quick()
        };
        assert!(matches!(
            run_matrix("t", &tree, &cells, &bad_warmup),
            Err(BenchError::NoWarmup)
        ));
        assert!(matches!(
            run_matrix("t", &tree, &[], &quick()),
            Err(BenchError::EmptyMatrix)
        ));
    }

    #[test]
    fn failing_cell_is_recorded() {
        let dict = Arc::new(Dictionary::new(9, vec![7; 64], CodecId::Zstd).unwrap());
        let mut cell = MatrixCell::new(CodecId::Lz4Hc, Level::BEST, PreconditionerKind::None);
        cell.dictionary = Some(dict);
        let good = MatrixCell::new(CodecId::Lz4, Level::FASTEST, PreconditionerKind::None);
        let recs = run_matrix("t", &small_tree(), &[cell, good], &quick()).unwrap();
        assert!(matches!(recs[0].status, CellStatus::Error(_)));
        assert!(recs[1].is_ok());
        let csv = String::from_utf8(emit_report(&recs, ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[1].contains("error:"));
        assert!(lines[2].ends_with(",ok"));
    }

    #[test]
    fn csv_shape() {
        let cells = [MatrixCell::new(
            CodecId::Deflate,
            Level::new(6).unwrap(),
            PreconditionerKind::Shuffle,
        )];
        let recs = run_matrix("t", &small_tree(), &cells, &quick()).unwrap();
        let csv = String::from_utf8(emit_report(&recs, ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "dataset,codec,level,precond,unc_bytes,comp_bytes,ratio,comp_MBps,decomp_MBps,reps,status"
        );
        let fields: Vec<&str> = lines[1].split(',').collect();
        let unc: f64 = fields[4].parse().unwrap();
        let comp: f64 = fields[5].parse().unwrap();
        assert_eq!(fields[6], format!("{:.6}", unc / comp));
        let md = String::from_utf8(emit_report(&recs, ReportFormat::Markdown).unwrap()).unwrap();
        assert_eq!(md.lines().count(), 3);
        assert!(emit_report(&[], ReportFormat::Csv).is_err());
    }

    #[test]
    fn product_dedups_store() {
        let cells = MatrixCell::product(
            &[CodecId::Store, CodecId::Lz4],
            &[Level::FASTEST, Level::BEST],
            &[PreconditionerKind::None],
        );
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[0].level, Level::STORE);
    }

    #[test]
    fn checks_skip_without_data() {
        let checks = qualitative_checks(&[]);
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| c.passed.is_none()));
    }
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};

use pdc_core::binary::{BinaryConfig, BinarySampler, BinaryStrategy};
use pdc_core::contingency::{BitStrategy, CtConfig, CtSampler};
use pdc_core::count::{count_binary_tables, count_integer_tables, CountQuery, OracleLimits};
use pdc_core::latin::{sample_latin_with, LatinConfig, RestartPolicy, RestartScope};
use pdc_core::partition::{sample_distinct_partition, sample_partition};
use pdc_core::sampling::{derive_seed, restart_budget_from_env, rng_from_seed, SamplerDiagnostics};
use pdc_core::table::{MarginSpec, Mask};
use pdc_core::uniformity::chi_square_uniformity;
use pdc_core::Error;
use rayon::prelude::*;

use crate::records::{Body, DiagnosticsRecord, SampleRecord, TableBody, SCHEMA};
use crate::{
    BinStrategy, BinaryArgs, Batch, Cells, Command, CountArgs, CtArgs, CtStrategy, Format, LatinArgs, Margins,
    PartitionArgs, Policy, UniformityArgs,
};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_dead_state() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::SampleCt(a) => sample_ct(a),
        Command::SampleBinary(a) => sample_binary(a),
        Command::SampleLatin(a) => sample_latin(a),
        Command::SamplePartition(a) => sample_partitions(a),
        Command::Count(a) => count(a),
        Command::TestUniformity(a) => test_uniformity(a),
        Command::Validate => validate(),
    }
}

fn mask_of(cells: &Cells, rows: usize, cols: usize) -> Result<Mask, Failure> {
    Mask::from_cells(rows, cols, &cells.0).map_err(|e| usage(e.to_string()))
}

fn instance(m: &Margins) -> Result<(MarginSpec, Mask), Failure> {
    let spec = MarginSpec::new(m.rows.0.clone(), m.cols.0.clone())?;
    let zeros = mask_of(&m.zeros, m.rows.0.len(), m.cols.0.len())?;
    Ok((spec, zeros))
}

fn budget(batch: &Batch) -> Result<u32, Failure> {
    match batch.budget {
        Some(0) => Err(usage("--budget must be at least 1")),
        Some(b) => Ok(b),
        None => Ok(restart_budget_from_env()),
    }
}

/// Samples are produced in parallel chunks and written in index order.
const CHUNK: u64 = 4096;

type Drawn = pdc_core::Result<(Body, SamplerDiagnostics)>;

fn run_batch<S, I, F>(batch: &Batch, init: I, sample: F) -> Result<(), Failure>
where
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> Drawn + Sync + Send,
{
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut diag_out = match &batch.diagnostics {
        Some(path) => Some(BufWriter::new(File::create(path)?)),
        None => None,
    };
    let mut start = 0;
    while start < batch.samples {
        let end = (start + CHUNK).min(batch.samples);
        let results: Vec<(u64, u64, Drawn)> = (start..end)
            .into_par_iter()
            .map_init(&init, |state, index| {
                let seed = derive_seed(batch.seed, index);
                (index, seed, sample(state, seed))
            })
            .collect();
        for (index, seed, result) in results {
            let (body, diagnostics) = match result {
                Ok(r) => r,
                Err(e) => {
                    out.flush()?;
                    if let Some(d) = diag_out.as_mut() {
                        d.flush()?;
                    }
                    return Err(Failure::from(e));
                }
            };
            match batch.format {
                Format::Json => {
                    let rec = SampleRecord { schema: SCHEMA, index, seed, body };
                    serde_json::to_writer(&mut out, &rec).map_err(|e| usage(e.to_string()))?;
                    writeln!(out)?;
                }
                Format::Csv => {
                    if index > 0 {
                        writeln!(out)?;
                    }
                    let csv = body.grid_csv().ok_or_else(|| usage("CSV output is only available for tables"))?;
                    out.write_all(csv.as_bytes())?;
                }
            }
            if let Some(d) = diag_out.as_mut() {
                let rec = DiagnosticsRecord { schema: SCHEMA, index, seed, diagnostics: &diagnostics };
                serde_json::to_writer(&mut *d, &rec).map_err(|e| usage(e.to_string()))?;
                writeln!(d)?;
            }
        }
        start = end;
    }
    out.flush()?;
    if let Some(d) = diag_out.as_mut() {
        d.flush()?;
    }
    Ok(())
}

fn sample_ct(a: CtArgs) -> Result<(), Failure> {
    let (spec, zeros) = instance(&a.margins)?;
    let config = CtConfig {
        strategy: match a.strategy {
            CtStrategy::Exact => BitStrategy::ExactCount,
            CtStrategy::Approx => BitStrategy::Approximate,
        },
        limits: OracleLimits::from_env(),
        restart_budget: budget(&a.batch)?,
        keep_levels: a.levels,
    };
    // Surface input errors once, before any worker starts.
    CtSampler::new(spec.clone(), zeros.clone(), config.clone())?;
    let (rows, cols) = (spec.rows().to_vec(), spec.cols().to_vec());
    run_batch(
        &a.batch,
        || CtSampler::new(spec.clone(), zeros.clone(), config.clone()).expect("validated above"),
        |s, seed| {
            let (entries, d) = s.sample(&mut rng_from_seed(seed))?;
            Ok((Body::Contingency(TableBody::new(entries, &zeros, &rows, &cols)), d))
        },
    )
}

fn binary_strategy(s: BinStrategy) -> BinaryStrategy {
    match s {
        BinStrategy::Exact => BinaryStrategy::ExactCount,
        BinStrategy::H => BinaryStrategy::HWeight,
        BinStrategy::B => BinaryStrategy::BWeight,
    }
}

fn sample_binary(a: BinaryArgs) -> Result<(), Failure> {
    let (spec, zeros) = instance(&a.margins)?;
    let config = BinaryConfig {
        strategy: binary_strategy(a.strategy),
        limits: OracleLimits::from_env(),
        restart_budget: budget(&a.batch)?,
        static_params: a.static_params,
        flow_prune: a.flow_prune,
    };
    BinarySampler::new(spec.clone(), zeros.clone(), config.clone())?;
    let (rows, cols) = (spec.rows().to_vec(), spec.cols().to_vec());
    run_batch(
        &a.batch,
        || BinarySampler::new(spec.clone(), zeros.clone(), config.clone()).expect("validated above"),
        |s, seed| {
            let (entries, d) = s.sample(&mut rng_from_seed(seed))?;
            Ok((Body::Binary(TableBody::new(entries, &zeros, &rows, &cols)), d))
        },
    )
}

fn sample_latin(a: LatinArgs) -> Result<(), Failure> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let scope = match a.policy {
        Policy::RetryLevel => RestartScope::RetryLevel,
        Policy::RestartAll => RestartScope::RestartAll,
        Policy::Abort => RestartScope::Abort,
    };
    let config = LatinConfig {
        strategy: binary_strategy(a.strategy),
        policy: RestartPolicy::new(scope, budget(&a.batch)?)?,
        limits: OracleLimits::from_env(),
        flow_prune: a.flow_prune,
    };
    run_batch(
        &a.batch,
        || (),
        |_, seed| {
            let (sq, d) = sample_latin_with(a.n, &config, &mut rng_from_seed(seed))?;
            Ok((Body::Latin { n: a.n, values: sq.into_values() }, d))
        },
    )
}

fn sample_partitions(a: PartitionArgs) -> Result<(), Failure> {
    if a.batch.format == Format::Csv {
        return Err(usage("partitions are written as JSON only"));
    }
    if let Some(x) = a.tilt {
        if !(x > 0.0 && x < 1.0) {
            return Err(usage("--tilt must lie in (0, 1)"));
        }
    }
    run_batch(
        &a.batch,
        || (),
        |_, seed| {
            let mut rng = rng_from_seed(seed);
            let d = |bits| SamplerDiagnostics { bits_consumed: bits, ..SamplerDiagnostics::default() };
            if a.distinct {
                let (p, bits) = sample_distinct_partition(a.n, a.tilt, &mut rng)?;
                Ok((Body::DistinctPartition { n: a.n, parts: p.parts() }, d(bits)))
            } else {
                let (p, bits) = sample_partition(a.n, a.tilt, &mut rng)?;
                Ok((Body::Partition { n: a.n, parts: p.parts() }, d(bits)))
            }
        },
    )
}

fn count(a: CountArgs) -> Result<(), Failure> {
    let (spec, zeros) = instance(&a.margins)?;
    let limits = OracleLimits::from_env();
    let total = if a.binary {
        if !a.evens.0.is_empty() {
            return Err(usage("--evens applies to integer tables only"));
        }
        count_binary_tables(spec.rows(), spec.cols(), &zeros, &limits)?
    } else {
        let evens = mask_of(&a.evens, spec.rows().len(), spec.cols().len())?;
        let q = CountQuery::new(spec.rows().to_vec(), spec.cols().to_vec())
            .with_zeros(zeros)
            .with_evens(evens);
        count_integer_tables(&q, &limits)?
    };
    println!("{total}");
    Ok(())
}

fn read_records() -> Result<Vec<SampleRecord>, Failure> {
    let mut out = Vec::new();
    for (lineno, line) in io::stdin().lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| usage(format!("line {}: {e}", lineno + 1)))?;
        if rec.schema != SCHEMA {
            return Err(usage(format!("line {}: unsupported schema {}", lineno + 1, rec.schema)));
        }
        out.push(rec);
    }
    Ok(out)
}

fn test_uniformity(a: UniformityArgs) -> Result<(), Failure> {
    let counts = match (a.counts, a.outcomes) {
        (Some(c), None) => c.0,
        (Some(_), Some(_)) => return Err(usage("--outcomes is only used when reading samples")),
        (None, outcomes) => {
            let outcomes = outcomes.ok_or_else(|| usage("--outcomes is required when reading samples"))?;
            let mut tally: BTreeMap<String, u64> = BTreeMap::new();
            for rec in read_records()? {
                let key = serde_json::to_string(&rec.body).map_err(|e| usage(e.to_string()))?;
                *tally.entry(key).or_default() += 1;
            }
            if tally.len() as u64 > outcomes {
                return Err(usage(format!(
                    "{} distinct outcomes observed but --outcomes is {outcomes}",
                    tally.len()
                )));
            }
            let mut c: Vec<u64> = tally.into_values().collect();
            c.resize(outcomes as usize, 0);
            c
        }
    };
    let report = chi_square_uniformity(&counts, a.significance)?;
    println!("{}", serde_json::to_string(&report).map_err(|e| usage(e.to_string()))?);
    Ok(())
}

fn validate() -> Result<(), Failure> {
    let records = read_records()?;
    let invalid: Vec<u64> = records.iter().filter(|r| !r.body.is_valid()).map(|r| r.index).collect();
    println!(
        "{}",
        serde_json::json!({ "checked": records.len(), "valid": records.len() - invalid.len(), "invalid_indices": invalid })
    );
    if invalid.is_empty() {
        Ok(())
    } else {
        Err(usage(format!("{} invalid samples", invalid.len())))
    }
}

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psram_core::device::{ArrayConfig, ReadMode};
use psram_core::io::{
    create_output, read_factor_csv, read_tensor, write_factor_csv, write_fit_trace,
    write_ledger_csv, write_mttkrp_csv,
};
use psram_core::mapping::{
    mttkrp_on_array, quantized_reference, tile_plan, ArrayKernel, ArrayRunOptions,
};
use psram_core::perf::{
    plot_references, render_sweep_svg, sweep, write_sweep_csv, OpsConvention, RankPolicy,
    SweepQuery, SweepRow,
};
use psram_core::tensor::{
    cp_als, mttkrp_reference, random_dense, random_factors, CpAlsOptions, DenseTensor, Matrix,
    MttkrpKernel, ReferenceKernel, Tensor,
};
use psram_core::Error;

use crate::units::{parse_dims, parse_freq_range, parse_int_range};
use crate::{
    ArrayFlags, Backend, Cli, Command, CpAlsArgs, MacOps, MttkrpArgs, SweepArgs, ValidateArgs,
};

/// A failed command and its exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Csv(_) => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    let cfg = match &cli.config {
        Some(p) => ArrayConfig::load(p)?,
        None => ArrayConfig::default(),
    };
    match &cli.command {
        Command::Mttkrp(a) => run_mttkrp(a, &cfg, cli.force),
        Command::CpAls(a) => run_cp_als(a, &cfg, cli.force),
        Command::Sweep(a) => run_sweep(a, &cfg, cli.force),
        Command::Validate(a) => run_validate(a, &cfg, cli.force),
    }
}

fn run_options(flags: &ArrayFlags, seed: u64) -> Result<ArrayRunOptions, Failure> {
    let read_mode = match flags.analog {
        None => ReadMode::Ideal,
        Some(s) if s.is_finite() && s >= 0.0 => ReadMode::Analog { sigma: s },
        Some(s) => {
            return Err(Failure::Usage(format!(
                "--analog sigma must be >= 0, got {s}"
            )))
        }
    };
    Ok(ArrayRunOptions {
        read_mode,
        double_buffering: !flags.no_double_buffering,
        seed,
    })
}

/// Writes into `path`, or stdout when it is `None`.
fn emit(
    path: Option<&Path>,
    force: bool,
    f: impl FnOnce(&mut dyn Write) -> psram_core::Result<()>,
) -> CmdResult {
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(create_output(p, force)?);
            f(&mut file)?;
            file.flush()
                .map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            Ok(())
        }
    }
}

fn write_text(path: &Path, force: bool, text: &str) -> CmdResult {
    emit(Some(path), force, |w| {
        w.write_all(text.as_bytes()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn load_dense(path: &Path) -> Result<DenseTensor, Failure> {
    Ok(read_tensor(path)?.to_dense())
}

fn run_mttkrp(a: &MttkrpArgs, cfg: &ArrayConfig, force: bool) -> CmdResult {
    let tensor = load_dense(&a.tensor)?;
    let factors = match &a.factors {
        Some(paths) => read_factors(paths, tensor.shape())?,
        None => random_factors(tensor.shape(), a.rank, a.seed),
    };
    let opts = run_options(&a.array, a.seed)?;
    let res = mttkrp_on_array(&tensor, &factors, a.mode, cfg, &opts)?;
    let (ref_codes, _) = quantized_reference(&tensor, &factors, a.mode, cfg.word_bits)?;
    let deviation = res.codes.max_abs_diff(&ref_codes)?;
    let reference = res.dequantize(&ref_codes);
    let exact = mttkrp_reference(&Tensor::Dense(tensor.clone()), &factors, a.mode)?;
    let quant_error = res.values.max_abs_diff(&exact)?;

    emit(a.out.as_deref(), force, |w| {
        write_mttkrp_csv(&res.values, &reference, w)
    })?;
    if let Some(p) = &a.ledger {
        emit(Some(p), force, |w| write_ledger_csv(&res.run.ledger, w))?;
    }
    if let Some(p) = &a.dump_schedule {
        write_text(p, force, &res.schedule.to_string())?;
    }
    let t = &res.run.timing;
    eprintln!(
        "mttkrp shape={:?} mode={} rank={} deviation={} quantization_error={:e} compute_cycles={} write_cycles={} exposed_write_cycles={} total_cycles={} time_s={:e} energy_j={:e} utilization={}",
        tensor.shape(),
        a.mode,
        a.rank,
        deviation,
        quant_error,
        t.compute_cycles,
        t.write_cycles,
        t.exposed_write_cycles,
        t.total_cycles,
        t.time_s,
        res.run.ledger.total_j(),
        res.run.utilization
    );
    if opts.read_mode == ReadMode::Ideal && deviation != 0 {
        return Err(Failure::Validation(format!(
            "array result deviates from the quantized reference by {deviation} codes"
        )));
    }
    Ok(())
}

fn read_factors(paths: &[PathBuf], shape: &[usize]) -> Result<Vec<Matrix>, Failure> {
    if paths.len() != shape.len() {
        return Err(Failure::Usage(format!(
            "--factors needs {} files, got {}",
            shape.len(),
            paths.len()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            Ok(read_factor_csv(&text, &p.display().to_string())?.0)
        })
        .collect()
}

fn run_cp_als(a: &CpAlsArgs, cfg: &ArrayConfig, force: bool) -> CmdResult {
    let tensor = read_tensor(&a.tensor)?;
    let opts = CpAlsOptions {
        rank: a.rank,
        max_iters: a.max_iters,
        tol: a.tol,
        seed: a.seed,
    };
    let array_opts = run_options(&a.array, a.seed)?;
    let mut reference = ReferenceKernel;
    let mut array = ArrayKernel::new(cfg.clone(), array_opts);
    let kernel: &mut dyn MttkrpKernel = match a.backend {
        Backend::Reference => &mut reference,
        Backend::Array => &mut array,
    };
    let res = cp_als(&tensor, &opts, kernel)?;
    match &a.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            for (m, f) in res.model.factors.iter().enumerate() {
                let p = dir.join(format!("factor_{m}.csv"));
                emit(Some(&p), force, |w| {
                    write_factor_csv(f, Some(&res.model.weights), w)
                })?;
            }
            emit(Some(&dir.join("fit_trace.csv")), force, |w| {
                write_fit_trace(&res.trace, w)
            })?;
        }
        None => emit(None, force, |w| write_fit_trace(&res.trace, w))?,
    }
    let mut summary = format!(
        "cp-als rank={} sweeps={} fit={} converged={}",
        a.rank,
        res.trace.len(),
        res.fit,
        res.converged
    );
    if a.backend == Backend::Array {
        let _ = write!(
            summary,
            " array_calls={} total_cycles={} energy_j={:e}",
            array.calls,
            array.total_cycles,
            array.ledger.total_j()
        );
    }
    eprintln!("{summary}");
    Ok(())
}

fn run_sweep(a: &SweepArgs, cfg: &ArrayConfig, force: bool) -> CmdResult {
    let channels = parse_int_range(&a.channels).map_err(Failure::Usage)?;
    let freqs = parse_freq_range(&a.freq).map_err(Failure::Usage)?;
    let dims = parse_dims(&a.dims).map_err(Failure::Usage)?;
    let query = SweepQuery {
        dims,
        mode: a.mode,
        rank: a.rank.map_or(RankPolicy::MatchChannels, RankPolicy::Fixed),
        convention: match a.mac_ops {
            MacOps::Two => OpsConvention::MacAsTwo,
            MacOps::One => OpsConvention::MacAsOne,
        },
        double_buffering: !a.no_double_buffering,
    };
    let points = sweep(&freqs, &channels, cfg, &query)?;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|p| {
            let c = ArrayConfig {
                channels: p.channels,
                ..cfg.clone()
            };
            p.row(&c)
        })
        .collect();
    emit(a.out.as_deref(), force, |w| write_sweep_csv(&rows, w))?;
    if let Some(p) = &a.plot {
        let (f, c) = plot_references(&rows, cfg.compute_freq_hz, cfg.channels);
        write_text(p, force, &render_sweep_svg(&rows, f, c))?;
    }
    eprintln!(
        "sweep points={} ops_convention={}",
        rows.len(),
        query.convention.label()
    );
    Ok(())
}

const FIXTURES: [(&str, &str, usize); 3] = [
    ("ones_2x2x2", include_str!("../fixtures/ones_2x2x2.tns"), 2),
    (
        "random_4x5x6",
        include_str!("../fixtures/random_4x5x6.tns"),
        8,
    ),
    (
        "rank1_4x4x4",
        include_str!("../fixtures/rank1_4x4x4.tns"),
        3,
    ),
];

/// Runs one oracle comparison; returns the report line and whether it passed.
fn check_case(
    label: &str,
    tensor: &DenseTensor,
    rank: usize,
    mode: usize,
    seed: u64,
    cfg: &ArrayConfig,
) -> Result<(String, bool), Failure> {
    let factors = random_factors(tensor.shape(), rank, seed);
    let opts = ArrayRunOptions {
        seed,
        ..Default::default()
    };
    let res = mttkrp_on_array(tensor, &factors, mode, cfg, &opts)?;
    let (want, _) = quantized_reference(tensor, &factors, mode, cfg.word_bits)?;
    let deviation = res.codes.max_abs_diff(&want)?;
    let plan = tile_plan(tensor.shape(), rank, mode, cfg, true)?;
    let cycles_match = plan.timing == res.run.timing;
    let pass = deviation == 0 && cycles_match;
    let dims: Vec<String> = tensor.shape().iter().map(usize::to_string).collect();
    Ok((
        format!(
            "{label} shape={} rank={rank} mode={mode} deviation={deviation} cycles={} plan_cycles={} {}",
            dims.join("x"),
            res.run.timing.total_cycles,
            plan.timing.total_cycles,
            if pass { "PASS" } else { "FAIL" }
        ),
        pass,
    ))
}

fn run_validate(a: &ValidateArgs, cfg: &ArrayConfig, force: bool) -> CmdResult {
    let mut report = format!("validate seed={} cases={}\n", a.seed, a.cases);
    let (mut passed, mut failed) = (0usize, 0usize);
    let mut record = |(line, ok): (String, bool), report: &mut String| {
        report.push_str(&line);
        report.push('\n');
        if ok {
            passed += 1;
        } else {
            failed += 1;
        }
    };
    for (name, text, rank) in FIXTURES {
        let t = psram_core::io::parse_tns(text, name, None)?.to_dense();
        for mode in 0..3 {
            record(
                check_case(&format!("fixture {name}"), &t, rank, mode, a.seed, cfg)?,
                &mut report,
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for case in 0..a.cases {
        let shape: Vec<usize> = (0..3).map(|_| rng.random_range(1..=6)).collect();
        let rank = rng.random_range(1..=64);
        let case_seed: u64 = rng.random();
        let t = random_dense(&shape, case_seed)?;
        for mode in 0..3 {
            record(
                check_case(&format!("random {case}"), &t, rank, mode, case_seed, cfg)?,
                &mut report,
            );
        }
    }
    let _ = writeln!(report, "summary passed={passed} failed={failed}");
    emit(a.out.as_deref(), force, |w| {
        w.write_all(report.as_bytes()).map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
    })?;
    if failed > 0 {
        return Err(Failure::Validation(format!(
            "{failed} validation case(s) failed"
        )));
    }
    Ok(())
}

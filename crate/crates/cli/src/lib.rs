//! `bts` command-line tool.

pub mod microbench;
pub mod selftest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bts_core::heops::CkksContext;
use bts_core::params::{best_at_security, builtin_instances, sweep, BootSchedule, CkksInstance, SweepConfig, SWEEP_HEADER};
use bts_sim::{simulate, HardwareConfig, SimError, Trace};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub use microbench::microbench;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_TRACE: i32 = 4;
pub const EXIT_CAPACITY: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "bts", version, about = "CKKS bootstrapping accelerator model and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Toy,
    Flagship,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the functional property suite.
    Selftest {
        #[arg(long, value_enum, default_value = "toy")]
        scale: ScaleArg,
        /// Corrupt one twiddle factor; the suite must then fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sweep (N, L, dnum) and print the minimum-bound amortized mult time per slot as CSV.
    Sweep {
        /// log2 N range, e.g. 15..18
        #[arg(long, default_value = "15..18", value_parser = parse_range)]
        log_n: RangeInclusive<usize>,
        #[arg(long, default_value = "10..120", value_parser = parse_range)]
        levels: RangeInclusive<usize>,
        /// dnum range; all of 1..=L+1 when omitted.
        #[arg(long, value_parser = parse_range)]
        dnum: Option<RangeInclusive<usize>>,
        /// HBM bandwidth in bytes/s.
        #[arg(long, default_value_t = 1e12)]
        bw: f64,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate a trace and write report.csv, timeline.csv and occupancy.csv.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        /// ins1, ins2, ins3 or an instance TOML file.
        #[arg(long, default_value = "ins1")]
        instance: String,
        #[arg(long)]
        hw: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value = "sim-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit the amortized-multiplication microbenchmark trace.
    GenMicrobench {
        #[arg(long, default_value = "ins1")]
        instance: String,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the functional primitives at desk scale.
    BenchFunctional {
        #[arg(long, default_value_t = 12)]
        log_n: u32,
        #[arg(long, default_value_t = 4)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        dnum: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fit the synthetic bootstrapping census to a target amortized time.
    CalibrateSchedule {
        #[arg(long, default_value = "ins1")]
        instance: String,
        /// Target in ns per slot.
        #[arg(long, default_value_t = 27.7)]
        target_ns: f64,
        #[arg(long, default_value_t = 1e12)]
        bw: f64,
        #[arg(long, default_value_t = 19)]
        l_boot: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid number {t:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(lo..=hi)
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn load_instance(arg: &str) -> Result<CkksInstance, Failure> {
    if let Some(ins) = CkksInstance::by_name(arg) {
        return Ok(ins);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Failure::new(EXIT_USAGE, format!("unknown instance {arg:?} (ins1, ins2, ins3 or a file)")));
    }
    let ins = CkksInstance::from_toml(&read(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{arg}: {e}")))?;
    ins.validate().map_err(|e| Failure::new(EXIT_PARSE, format!("{arg}: {e}")))?;
    Ok(ins)
}

fn load_schedule(path: Option<&Path>) -> Result<BootSchedule, Failure> {
    match path {
        None => Ok(BootSchedule::default()),
        Some(p) => BootSchedule::from_toml(&read(p)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", p.display()))),
    }
}

fn load_hw(path: Option<&Path>) -> Result<HardwareConfig, Failure> {
    match path {
        None => Ok(HardwareConfig::default()),
        Some(p) => HardwareConfig::from_toml(&read(p)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", p.display()))),
    }
}

fn cmd_selftest(scale: ScaleArg, inject_fault: bool, seed: u64) -> Result<(), Failure> {
    let scale = match scale {
        ScaleArg::Toy => selftest::Scale::Toy,
        ScaleArg::Flagship => selftest::Scale::Flagship,
    };
    let start = Instant::now();
    let checks = selftest::run(scale, seed, inject_fault);
    for c in &checks {
        println!("{} {} ({})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed, {:.1} s", checks.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        return Err(Failure::new(EXIT_SELFTEST, format!("{failed} selftest checks failed")));
    }
    Ok(())
}

/// Sweep CSV plus the stderr notes (highlighted rows and assumptions).
pub fn sweep_csv(cfg: &SweepConfig) -> (String, String) {
    let rows = sweep(cfg);
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    let mut notes = String::new();
    let _ = writeln!(
        notes,
        "# assumptions: bw={:e} B/s, q0/q/p bits={}/{}/{}, L_boot={}, lambda interpolated from the security table",
        cfg.mem_bw, cfg.log_q0_bits, cfg.log_q_bits, cfg.log_p_bits, cfg.schedule.l_boot
    );
    for ins in builtin_instances() {
        if let Some(r) = rows
            .iter()
            .find(|r| r.n == ins.n() && r.max_level == ins.max_level && r.dnum == ins.dnum)
        {
            let _ = writeln!(notes, "# highlighted {}: {}", ins.name, r.to_csv());
        }
    }
    let mut degrees: Vec<usize> = rows.iter().map(|r| r.n).collect();
    degrees.dedup();
    for n in degrees {
        if let Some(r) = best_at_security(&rows, n, 128.0) {
            let _ = writeln!(notes, "# best at lambda>=128, N={n}: {}", r.to_csv());
        }
    }
    (csv, notes)
}

fn simulate_files(
    trace: &Path,
    instance: &str,
    hw: Option<&Path>,
    schedule: Option<&Path>,
    out: &Path,
) -> Result<String, Failure> {
    let ins = load_instance(instance)?;
    let hw = load_hw(hw)?;
    let schedule = load_schedule(schedule)?;
    let trace = Trace::parse(&read(trace)?).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    let report = simulate(&trace, &ins, &hw, &schedule).map_err(|e| match e {
        SimError::Trace(_) | SimError::Level(_) => Failure::new(EXIT_TRACE, e.to_string()),
        SimError::Capacity { .. } => Failure::new(EXIT_CAPACITY, e.to_string()),
        _ => Failure::new(EXIT_PARSE, e.to_string()),
    })?;
    report
        .write_csvs(out)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", out.display())))?;
    let mut s = format!(
        "total_time_s {:.6e}\nhbm_utilization {:.4}\nenergy_j {:.6e} (dynamic only)\n",
        report.seconds(),
        report.hbm_utilization(),
        report.energy_joules()
    );
    if let Some(t) = report.tmult_a_slot() {
        let _ = writeln!(s, "tmult_a_slot_ns {:.4}", t * 1e9);
    }
    Ok(s)
}

fn bench_functional(log_n: u32, level: usize, dnum: usize, reps: usize, seed: u64) -> Result<String, Failure> {
    let ins = CkksInstance::toy(log_n, level, dnum);
    let ctx = CkksContext::new(&ins).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let t0 = Instant::now();
    let keys = ctx.keygen(seed, &[1]);
    let keygen = t0.elapsed().as_secs_f64();
    let msg: Vec<Complex64> = (0..ctx.slots())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let pt = ctx.encode(&msg, level, ctx.default_scale()).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let ct = ctx.encrypt_sk(&pt, &keys.secret, &mut rng);
    let mut s = format!("op,mean_us\nkeygen,{:.1}\n", keygen * 1e6);
    let mut time = |name: &str, f: &mut dyn FnMut()| {
        let t = Instant::now();
        for _ in 0..reps.max(1) {
            f();
        }
        let _ = writeln!(s, "{name},{:.1}", t.elapsed().as_secs_f64() / reps.max(1) as f64 * 1e6);
    };
    time("encode", &mut || {
        ctx.encode(&msg, level, ctx.default_scale()).unwrap();
    });
    time("encrypt", &mut || {
        ctx.encrypt_pk(&pt, &keys.public, &mut ChaCha20Rng::seed_from_u64(seed));
    });
    time("decrypt", &mut || {
        ctx.decrypt(&ct, &keys.secret);
    });
    time("hadd", &mut || {
        ctx.hadd(&ct, &ct).unwrap();
    });
    time("hmult", &mut || {
        ctx.hmult(&ct, &ct, &keys.mult).unwrap();
    });
    time("hrot", &mut || {
        ctx.hrot(&ct, 1, &keys).unwrap();
    });
    time("hrescale", &mut || {
        ctx.hrescale(&ct).unwrap();
    });
    Ok(s)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Selftest { scale, inject_fault, seed } => cmd_selftest(scale, inject_fault, seed),
        Command::Sweep {
            log_n,
            levels,
            dnum,
            bw,
            schedule,
            out,
            seed: _,
        } => {
            if bw <= 0.0 {
                return Err(Failure::new(EXIT_USAGE, "--bw must be positive"));
            }
            let cfg = SweepConfig {
                log_n: *log_n.start() as u32..=*log_n.end() as u32,
                levels,
                dnums: dnum,
                mem_bw: bw,
                schedule: load_schedule(schedule.as_deref())?,
                ..SweepConfig::default()
            };
            let (csv, notes) = sweep_csv(&cfg);
            eprint!("{notes}");
            write_or_print(out.as_deref(), &csv)
        }
        Command::Simulate {
            trace,
            instance,
            hw,
            schedule,
            out,
            seed: _,
        } => {
            let summary = simulate_files(&trace, &instance, hw.as_deref(), schedule.as_deref(), &out)?;
            print!("{summary}");
            Ok(())
        }
        Command::GenMicrobench {
            instance,
            rounds,
            schedule,
            out,
        } => {
            let ins = load_instance(&instance)?;
            let schedule = load_schedule(schedule.as_deref())?;
            let trace = microbench(&ins, schedule.l_boot, rounds).map_err(|e| Failure::new(EXIT_USAGE, e))?;
            write_or_print(out.as_deref(), &trace.to_string())
        }
        Command::BenchFunctional {
            log_n,
            level,
            dnum,
            reps,
            seed,
        } => {
            print!("{}", bench_functional(log_n, level, dnum, reps, seed)?);
            Ok(())
        }
        Command::CalibrateSchedule {
            instance,
            target_ns,
            bw,
            l_boot,
            out,
        } => {
            let ins = load_instance(&instance)?;
            if target_ns <= 0.0 || bw <= 0.0 {
                return Err(Failure::new(EXIT_USAGE, "--target-ns and --bw must be positive"));
            }
            let ins = CkksInstance { l_boot, ..ins };
            ins.check_bootstrappable().map_err(|e| Failure::new(EXIT_USAGE, e))?;
            let s = BootSchedule::calibrate(&ins, l_boot, target_ns * 1e-9, bw);
            let got = bts_core::params::amortized_mult_per_slot(&ins, &s, bw).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            eprintln!("# {}: {:.4} ns per slot", ins.name, got * 1e9);
            write_or_print(out.as_deref(), &s.to_toml())
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

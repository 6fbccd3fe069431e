//! `poset-hdx`: build, validate, certify and verify weighted graded posets.
//!
//! Exit codes: 0 when every verdict holds, 2 when a certificate or check
//! fails, 1 on I/O, parse or argument errors.

mod commands;
mod options;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use options::{EposetMode, GrassmannianArgs, OneSided, Options, PosetifyArgs, TwoSided};

#[derive(Parser)]
#[command(name = "poset-hdx", version, about = "High-dimensional expansion checks for weighted graded posets")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file whose keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a poset and write it as JSON.
    Build {
        /// q=Q n=N d=D
        #[arg(long, num_args = 3, value_name = "KEY=VALUE")]
        grassmannian: Option<Vec<String>>,
        /// Facet list, one facet per line.
        #[arg(long)]
        facets: Option<PathBuf>,
        /// FILE q=Q
        #[arg(long, num_args = 2, value_name = "ARG")]
        posetify: Option<Vec<String>>,
        /// Relative jitter applied to top weights and transition probabilities.
        #[arg(long)]
        jitter: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the graded-poset and weight-scheme axioms.
    Validate { poset: Option<PathBuf> },
    /// Run expansion certificates.
    Certify {
        poset: Option<PathBuf>,
        /// lambda=X
        #[arg(long, value_name = "KEY=VALUE")]
        one_sided: Option<String>,
        /// [nu=X] lambda=Y
        #[arg(long, num_args = 1..=2, value_name = "KEY=VALUE")]
        two_sided: Option<Vec<String>>,
        /// auto | regular | lambda=X
        #[arg(long)]
        eposet: Option<String>,
    },
    /// Run the theorem verifiers.
    Verify {
        poset: Option<PathBuf>,
        /// Comma-separated check names.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated α_0, α_1, ...
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        /// Facet list and q for the posetification oracles: FILE q=Q
        #[arg(long, num_args = 2, value_name = "ARG")]
        posetify: Option<Vec<String>>,
    },
    /// Walk and link spectra, or a raw operator dump.
    Spectrum {
        poset: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        level: Option<i32>,
        /// up | down | m-plus | m-minus | adjacency
        #[arg(long)]
        dump: Option<String>,
    },
    /// Regularity, UL/AL/TL, predicted constants and connectivity.
    Report { poset: Option<PathBuf> },
}

fn options(cli: &Cli) -> Result<Options> {
    let mut o = Options { jobs: cli.jobs, out: cli.out.clone(), ..Default::default() };
    match &cli.cmd {
        Cmd::Build { grassmannian, facets, posetify, jitter, seed } => {
            o.grassmannian = grassmannian.as_deref().map(GrassmannianArgs::parse).transpose()?;
            o.facets = facets.clone();
            o.posetify = posetify.as_deref().map(PosetifyArgs::parse).transpose()?;
            o.jitter = *jitter;
            o.seed = *seed;
        }
        Cmd::Validate { poset } | Cmd::Report { poset } => o.poset = poset.clone(),
        Cmd::Certify { poset, one_sided, two_sided, eposet } => {
            o.poset = poset.clone();
            o.one_sided = one_sided.as_ref().map(|s| OneSided::parse(std::slice::from_ref(s))).transpose()?;
            o.two_sided = two_sided.as_deref().map(TwoSided::parse).transpose()?;
            o.eposet = eposet.as_deref().map(EposetMode::parse).transpose()?;
        }
        Cmd::Verify { poset, only, trials, seed, alphas, posetify } => {
            o.poset = poset.clone();
            o.only = only.clone();
            o.trials = *trials;
            o.seed = *seed;
            o.alphas = alphas.clone();
            o.posetify = posetify.as_deref().map(PosetifyArgs::parse).transpose()?;
        }
        Cmd::Spectrum { poset, level, dump } => {
            o.poset = poset.clone();
            o.level = *level;
            o.dump = dump.clone();
        }
    }
    let o = match &cli.config {
        Some(path) => o.with_config(path)?,
        None => o,
    };
    o.check()?;
    Ok(o)
}

#[cfg(feature = "parallel")]
fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_jobs(_: Option<usize>) -> Result<()> {
    Ok(())
}

fn emit(o: &Options, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match &o.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let o = options(cli)?;
    set_jobs(o.jobs)?;
    let outcome = match &cli.cmd {
        Cmd::Build { .. } => {
            let (wp, thickness) = commands::build(&o)?;
            let sizes: Vec<String> = (-1..=wp.d()).map(|i| wp.poset.level_size(i).to_string()).collect();
            eprintln!("levels: {}", sizes.join(","));
            if let Some(t) = thickness {
                eprintln!("thickness: {t}");
            }
            commands::Outcome { report: commands::build_report(&wp), ok: true }
        }
        Cmd::Validate { .. } => commands::validate(&o)?,
        Cmd::Certify { .. } => commands::certify(&o)?,
        Cmd::Verify { .. } => commands::verify(&o)?,
        Cmd::Spectrum { .. } => commands::spectrum(&o)?,
        Cmd::Report { .. } => commands::report(&o)?,
    };
    emit(&o, &outcome.report)?;
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldpcq::code::{Code, CodeSpec};
use ldpcq::files::{self, read_text, write_text};
use ldpcq::sim::{run_sweep, with_workers};
use ldpcq::surrogate::Scheme;
use ldpcq::trainer::{complexity, convert, train_observed};
use ldpcq::{Error, Result};

#[derive(Parser)]
#[command(name = "ldpcq", version, about = "Learned message bitwidths for quantized min-sum LDPC decoding")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train step sizes on the surrogate decoder.
    Train {
        /// Training config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Run directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Convert a parameter file into a bitwidth assignment.
    Convert {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        base_graph: Option<PathBuf>,
    },
    /// Run a BER/BLER sweep.
    Eval {
        /// Sweep config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Results CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Bitwidth or parameter file, overriding the config's `file`.
        #[arg(long)]
        decoder_file: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print code dimensions and parameter counts, or inspect a file.
    Info {
        /// Bitwidth or parameter file to inspect.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 132)]
        k: usize,
        #[arg(long, default_value_t = 264)]
        n: usize,
        #[arg(long, default_value_t = 22)]
        z: usize,
        #[arg(long, default_value_t = 10)]
        n_iters: usize,
        #[arg(long)]
        base_graph: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Base-graph file for codes other than bg2.
    #[arg(long)]
    base_graph: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_code(spec: &CodeSpec, base_graph: Option<&Path>) -> Result<Code> {
    match base_graph {
        Some(p) => Code::build(spec, Some(&files::read_base_graph(p)?)),
        None => Code::build(spec, None),
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Train {
            config,
            out,
            seed,
            common,
        } => {
            let mut cfg = files::parse_train_config(&read_text(&config)?)?;
            cfg.seed = seed;
            let code = load_code(&cfg.code_spec(), common.base_graph.as_deref())?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_text(&out.join("config.toml"), &files::format_train_config(&cfg))?;
            let (params, history) = with_workers(common.workers.unwrap_or(0), || {
                train_observed(&cfg, &code, |s| {
                    if s.epoch % 100 == 0 {
                        eprintln!(
                            "epoch {:>5}  loss {:.5}  bce {:.5}  C {:.4}  bits {:.4}",
                            s.epoch, s.loss, s.bce, s.complexity, s.mean_bitwidth
                        );
                    }
                })
            })??;
            let bw = convert(&params);
            write_text(&out.join("history.csv"), &files::format_history(&history))?;
            write_text(&out.join("params.toml"), &files::format_params(&code, &params))?;
            write_text(
                &out.join("bitwidths.toml"),
                &files::format_bitwidths(&code.spec, &bw),
            )?;
            println!(
                "trained {} parameters ({}); surrogate C = {:.4}, converted mean bitwidth = {:.4}",
                params.len(),
                params.scheme,
                complexity(&params)?,
                bw.mean_bitwidth()
            );
        }
        Cmd::Convert {
            params,
            out,
            base_graph,
        } => {
            let file = files::read_params(&params)?;
            let code = load_code(&file.code_spec(), base_graph.as_deref())?;
            let p = file.for_code(&code)?;
            let bw = convert(&p);
            write_text(&out, &files::format_bitwidths(&code.spec, &bw))?;
            println!("mean bitwidth = {:.4}", bw.mean_bitwidth());
        }
        Cmd::Eval {
            config,
            out,
            seed,
            decoder_file,
            common,
        } => {
            let cfg = files::parse_sweep_config(&read_text(&config)?)?;
            let code = load_code(&cfg.code_spec(), common.base_graph.as_deref())?;
            let base_dir = config.parent().unwrap_or(Path::new("."));
            let decoder = cfg.decoder(&code, decoder_file.as_deref(), base_dir)?;
            let workers = common.workers.unwrap_or(cfg.workers);
            let rows = with_workers(workers, || {
                run_sweep(&code, &decoder, cfg.channel, &cfg.ebno_db, &cfg.stop_rule(), seed)
            })??;
            let csv = files::format_results(&rows);
            write_text(&out, &csv)?;
            print!("{csv}");
        }
        Cmd::Info {
            file,
            k,
            n,
            z,
            n_iters,
            base_graph,
        } => info(file.as_deref(), CodeSpec::bg2(k, n, z), n_iters, base_graph.as_deref())?,
    }
    Ok(())
}

fn info(file: Option<&Path>, spec: CodeSpec, n_iters: usize, base_graph: Option<&Path>) -> Result<()> {
    let (spec, n_iters, detail) = match file {
        None => (spec, n_iters, None),
        Some(path) => {
            let text = read_text(path)?;
            if let Ok(bw) = files::parse_bitwidths(&text) {
                (bw.code_spec(), bw.n_iters, Some(Ok(bw)))
            } else {
                let p = files::parse_params(&text).map_err(|e| {
                    Error::Format(format!(
                        "{} is neither a bitwidth nor a parameter file ({e})",
                        path.display()
                    ))
                })?;
                (p.code_spec(), p.n_iters, Some(Err(p)))
            }
        }
    };
    let code = load_code(&spec, base_graph)?;
    let g = &code.graph;
    println!("code {}", code.spec);
    println!("rate = {:.4}", code.cfg.rate());
    println!(
        "base {}x{} used, E_base = {}",
        code.cfg.n_base_rows_used,
        code.cfg.n_base_cols_used,
        g.n_base_edges()
    );
    println!("N_vn={} N_cn={} N_msg={}", g.n_vn(), g.n_cn(), g.n_edges());
    println!("punctured = {}", code.cfg.punctured);
    println!("n_iters = {n_iters}");
    for scheme in Scheme::ALL {
        println!("{scheme} params={}", scheme.n_params(g, n_iters));
    }
    match detail {
        None => {}
        Some(Ok(bw)) => {
            let bw = bw.for_code(&code)?;
            println!("mean bitwidth = {:.4}", bw.mean_bitwidth());
        }
        Some(Err(p)) => {
            let p = p.for_code(&code)?;
            println!("scheme = {}", p.scheme);
            println!("surrogate C = {:.4}", complexity(&p)?);
            println!("mean bitwidth = {:.4}", convert(&p).mean_bitwidth());
        }
    }
    Ok(())
}

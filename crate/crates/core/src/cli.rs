// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The `offload` command line: profile, partition, run, compare and
//! serve-clone.

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::warn;

use crate::analyzer;
use crate::minivm::{load_program, print_program, Program, Speed};
use crate::optimizer::{rewrite, solve, PartitionDatabase};
use crate::profiler::{build_cost_model, parse_cost_model, profile_executions, NetworkModel};
use crate::report::{compare, format_table};
use crate::runtime::{
    lookup_partition, partitioned_id, run_distributed, serve_clone, CloneNode, ExecutionConditions, InProcess,
    TcpTransport, Transport, CLONE_ADDR_ENV,
};
use crate::workloads::{Size, Workload};

#[derive(Debug, Parser)]
#[command(name = "offload", version, about = "Partition a program between a device and a clone, then run it")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Profile a program on device and clone; write trees and a cost model.
    Profile {
        #[command(flatten)]
        program: ProgramArg,
        #[command(flatten)]
        inputs: InputArgs,
        /// Number of seeded inputs to profile (workloads only).
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[arg(long, default_value = "wifi", value_parser = parse_net)]
        net: NetworkModel,
        #[arg(long, default_value = "20")]
        clone_speed: Speed,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the best partition and store it in a database.
    Partition {
        #[command(flatten)]
        program: ProgramArg,
        /// Cost model written by `profile`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "wifi", value_parser = parse_net)]
        net: NetworkModel,
        /// Database file; created or updated.
        #[arg(long)]
        db: PathBuf,
        /// Also write the rewritten program here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Run a program, migrating according to the database entry for the network.
    Run {
        #[command(flatten)]
        program: ProgramArg,
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, default_value = "wifi", value_parser = parse_net)]
        net: NetworkModel,
        #[arg(long, default_value = "20")]
        clone_speed: Speed,
        /// Clone address; without it the clone runs in-process.
        #[arg(long, env = CLONE_ADDR_ENV)]
        socket: Option<String>,
        /// Ignore migration points and run everything on the device.
        #[arg(long)]
        no_migrate: bool,
    },
    /// Tabulate device, clone and partitioned times for the sample workloads.
    Compare {
        /// Workloads (default: all).
        #[arg(long = "workload")]
        workloads: Vec<String>,
        /// Sizes (default: all).
        #[arg(long = "size")]
        sizes: Vec<Size>,
        /// Networks (default: wifi and 3g).
        #[arg(long = "net", value_parser = parse_net)]
        nets: Vec<NetworkModel>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "20")]
        clone_speed: Speed,
    },
    /// Serve as a clone node for the programs in the given databases.
    ServeClone {
        #[arg(long)]
        socket: String,
        /// Databases of partitions to install. Program ids name a sample
        /// workload or match `--program`.
        #[arg(long, required = true)]
        db: Vec<PathBuf>,
        /// Program file for databases that do not name a sample workload.
        #[arg(long)]
        program: Option<PathBuf>,
        /// Stop after this many connections.
        #[arg(long)]
        connections: Option<usize>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ProgramArg {
    /// Program source file.
    #[arg(long)]
    pub program: Option<PathBuf>,
    /// Bundled sample: scan, search or profile.
    #[arg(long)]
    pub workload: Option<String>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Explicit input, comma separated. Repeat for several runs.
    #[arg(long = "input")]
    pub input: Vec<String>,
    /// Workload size.
    #[arg(long, default_value = "small")]
    pub size: Size,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn parse_net(s: &str) -> Result<NetworkModel, String> {
    let text = if Path::new(s).is_file() { fs::read_to_string(s).map_err(|e| e.to_string())? } else { s.to_string() };
    text.parse().map_err(|e: crate::profiler::ParseNetworkError| e.to_string())
}

fn parse_input(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().with_context(|| format!("bad input value {t:?}")))
        .collect()
}

/// A loaded program with its identifier and, for samples, the workload.
struct Loaded {
    id: String,
    program: Arc<Program>,
    workload: Option<Workload>,
}

fn load(arg: &ProgramArg) -> Result<Loaded> {
    if let Some(name) = &arg.workload {
        let w = Workload::by_name(name).with_context(|| format!("unknown workload {name:?}"))?;
        return Ok(Loaded { id: w.name().to_string(), program: w.program(), workload: Some(w) });
    }
    let path = arg.program.as_ref().expect("clap enforces one of --program/--workload");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = load_program(&text).with_context(|| format!("assembling {}", path.display()))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "program".into());
    Ok(Loaded { id, program: Arc::new(program), workload: None })
}

fn inputs(loaded: &Loaded, args: &InputArgs, runs: u64) -> Result<Vec<Vec<i64>>> {
    if !args.input.is_empty() {
        return args.input.iter().map(|s| parse_input(s)).collect();
    }
    match loaded.workload {
        Some(w) => Ok((0..runs).map(|k| w.input(args.size, args.seed + k)).collect()),
        None => Ok(vec![Vec::new()]),
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Profile { program, inputs: input_args, runs, net, clone_speed, out: dir } => {
            let loaded = load(&program)?;
            let inputs = inputs(&loaded, &input_args, runs)?;
            let pairs = profile_executions(&loaded.program, &inputs, &crate::minivm::VmClock::new(clone_speed))?;
            let model = build_cost_model(&pairs, &net)?;
            fs::create_dir_all(&dir)?;
            for (dev, cln) in &pairs {
                fs::write(dir.join(format!("exec{}.device.tree", dev.execution)), dev.to_text())?;
                fs::write(dir.join(format!("exec{}.clone.tree", cln.execution)), cln.to_text())?;
            }
            fs::write(dir.join("model.txt"), model.to_text())?;
            let graph = analyzer::build_call_graph(&loaded.program);
            let sets = analyzer::classify_methods(&loaded.program);
            fs::write(dir.join("analysis.txt"), analyzer::report(&graph, &sets))?;
            writeln!(out, "profiled {} executions of {} into {}", pairs.len(), loaded.id, dir.display())?;
        }
        Command::Partition { program, model, net, db, emit } => {
            let loaded = load(&program)?;
            let text = fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let model = parse_cost_model(&text)?.with_network(&net);
            let graph = analyzer::build_call_graph(&loaded.program);
            let sets = analyzer::classify_methods(&loaded.program);
            let partition = solve(&model, &graph, &sets)?;
            let mut database = read_db(&db)?.unwrap_or_default();
            if let Some(other) = database.networks().find_map(|n| database.get(n)).map(|e| e.program_id.clone()) {
                if other != loaded.id {
                    bail!("{} holds partitions of {other}, not {}", db.display(), loaded.id);
                }
            }
            if let Some(path) = emit {
                fs::write(path, print_program(&rewrite(&loaded.program, &partition)?))?;
            }
            let migrants: Vec<String> = partition.migrants().into_iter().collect();
            writeln!(
                out,
                "{} on {}: {} objective {:.2} (all local {:.2}) migrants {}",
                loaded.id,
                net.name,
                partition.label(),
                partition.objective.as_f64(),
                model.all_local().as_f64(),
                if migrants.is_empty() { "-".into() } else { migrants.join(",") }
            )?;
            database.insert(loaded.id.clone(), partition);
            fs::write(&db, database.to_text())?;
        }
        Command::Run { program, inputs: input_args, db, net, clone_speed, socket, no_migrate } => {
            let loaded = load(&program)?;
            let input = inputs(&loaded, &input_args, 1)?.remove(0);
            let database = match &db {
                Some(path) => read_db(path)?.unwrap_or_else(|| {
                    warn!("no partition database at {}", path.display());
                    PartitionDatabase::new()
                }),
                None => PartitionDatabase::new(),
            };
            let cond = ExecutionConditions { network: net, clone_speed, clone_available: !no_migrate };
            let selected = lookup_partition(&database, &cond, &loaded.id, &loaded.program)?;
            let mut transport: Box<dyn Transport> = match &socket {
                Some(addr) if !selected.fallback => Box::new(TcpTransport::connect(addr.as_str())?),
                _ => {
                    let mut node = CloneNode::new();
                    node.install(selected.program_id.clone(), Arc::clone(&selected.program));
                    Box::new(InProcess::new(Arc::new(node)))
                }
            };
            let result =
                run_distributed(&selected.program, &selected.program_id, &cond, &input, transport.as_mut(), !no_migrate)?;
            let values: Vec<String> = result.output.iter().map(i64::to_string).collect();
            writeln!(out, "output {}", values.join(" "))?;
            writeln!(
                out,
                "elapsed {:.2} partition {} migrations {} bytes {}",
                result.elapsed.as_f64(),
                selected.partition.label(),
                result.migrations.len(),
                result.total_bytes()
            )?;
            for m in &result.migrations {
                writeln!(
                    out,
                    "  {} out {} in {} transfer {:.2} clone {:.2}",
                    m.method,
                    m.bytes_out,
                    m.bytes_in,
                    m.transfer_time.as_f64(),
                    m.clone_time.as_f64()
                )?;
            }
        }
        Command::Compare { workloads, sizes, nets, seed, clone_speed } => {
            let workloads = if workloads.is_empty() {
                Workload::ALL.to_vec()
            } else {
                workloads
                    .iter()
                    .map(|n| Workload::by_name(n).with_context(|| format!("unknown workload {n:?}")))
                    .collect::<Result<_>>()?
            };
            let sizes = if sizes.is_empty() { Size::ALL.to_vec() } else { sizes };
            let nets = if nets.is_empty() { vec![NetworkModel::wifi(), NetworkModel::three_g()] } else { nets };
            let rows = compare(&workloads, &sizes, &nets, clone_speed, seed)?;
            if let Some(bad) = rows.iter().find(|r| !r.output_matches) {
                bail!("{} {} {}: distributed output differs from the device run", bad.workload, bad.size, bad.network);
            }
            write!(out, "{}", format_table(&rows))?;
        }
        Command::ServeClone { socket, db, program, connections } => {
            let file = program.map(|p| load(&ProgramArg { program: Some(p), workload: None })).transpose()?;
            let mut node = CloneNode::new();
            for path in &db {
                let database = read_db(path)?.with_context(|| format!("no database at {}", path.display()))?;
                for net in database.networks() {
                    let entry = database.get(net).expect("listed network");
                    let original = match (Workload::by_name(&entry.program_id), &file) {
                        (Some(w), _) => w.program(),
                        (None, Some(f)) if f.id == entry.program_id => Arc::clone(&f.program),
                        _ => bail!("{}: no program for {}", path.display(), entry.program_id),
                    };
                    let rewritten = Arc::new(rewrite(&original, &entry.partition)?);
                    node.install(partitioned_id(&entry.program_id, net), rewritten);
                }
            }
            let listener = TcpListener::bind(&socket).with_context(|| format!("binding {socket}"))?;
            writeln!(out, "clone listening on {} with {}", listener.local_addr()?, node.programs().collect::<Vec<_>>().join(", "))?;
            out.flush()?;
            serve_clone(listener, Arc::new(node), connections)?;
        }
    }
    Ok(())
}

fn read_db(path: &Path) -> Result<Option<PartitionDatabase>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(PartitionDatabase::parse(&text).with_context(|| format!("parsing {}", path.display()))?))
}

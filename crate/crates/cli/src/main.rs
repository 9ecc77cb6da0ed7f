//! `spikecore` command-line front end.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use spikecore::convert::{self, BiasRegistry, QuantSpec};
use spikecore::diff::first_divergence;
use spikecore::hbm::{self, HbmImage};
use spikecore::netlist::{network_to_json, parse_network};
use spikecore::report::{run_records, to_jsonl, RunMeta};
use spikecore::scaling::{feedforward_family, replicate, replicate_schedule, scaling_study};
use spikecore::{BackendRegistry, CostConfig, Network, Schedule, Session};

#[derive(Parser)]
#[command(name = "spikecore", version, about = "Compile, run and inspect spiking networks")]
struct Cli {
    /// JSON file supplying default option values.
    #[arg(long, global = true, env = "SPIKECORE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lay a netlist out into an HBM image file.
    Compile {
        #[arg(long)]
        netlist: PathBuf,
        /// Output image path.
        #[arg(long)]
        image: PathBuf,
    },
    /// Run a schedule and write a JSON Lines report.
    Run {
        #[command(flatten)]
        source: NetSource,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        backend: Option<String>,
        #[command(flatten)]
        cost: CostArgs,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the oracle and the engine side by side and report the first divergence.
    Diff {
        #[arg(long)]
        netlist: PathBuf,
        /// Image driving the engine; compiled from the netlist when omitted.
        #[arg(long)]
        image: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Convert a layered-model archive into a netlist.
    Convert {
        /// Archive directory holding manifest.json.
        #[arg(long)]
        archive: PathBuf,
        /// Output netlist path.
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        quant_alpha: Option<f64>,
        #[arg(long)]
        bias_strategy: Option<String>,
        /// Structural report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit HBM accesses and cycles against neuron count over a scaled family.
    Scaling {
        /// Base network, replicated once per unit of scale; a built-in
        /// feed-forward family is used when omitted.
        #[arg(long)]
        netlist: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        factors: Vec<usize>,
        #[command(flatten)]
        cost: CostArgs,
        /// Fit report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Tab-separated table path.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct NetSource {
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long)]
    image: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Defaults to the schedule length.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CostArgs {
    /// Energy of one HBM row access, in µJ.
    #[arg(long)]
    energy_per_access: Option<f64>,
    #[arg(long)]
    cycles_per_row: Option<u64>,
    #[arg(long)]
    clock_ns: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Defaults {
    seed: Option<u64>,
    backend: Option<String>,
    energy_per_access: Option<f64>,
    cycles_per_row: Option<u64>,
    clock_ns: Option<f64>,
    quant_alpha: Option<f64>,
    bias_strategy: Option<String>,
}

impl Defaults {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    fn seed(&self, sim: &SimArgs) -> u64 {
        sim.seed.or(self.seed).unwrap_or(0)
    }

    fn cost(&self, args: &CostArgs) -> Result<CostConfig> {
        let base = CostConfig::default();
        let c = CostConfig {
            energy_per_access: args
                .energy_per_access
                .or(self.energy_per_access)
                .unwrap_or(base.energy_per_access),
            cycles_per_row: args
                .cycles_per_row
                .or(self.cycles_per_row)
                .unwrap_or(base.cycles_per_row),
            clock_period: args
                .clock_ns
                .or(self.clock_ns)
                .map_or(base.clock_period, |ns| ns / 1000.0),
        };
        c.validate()?;
        Ok(c)
    }
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}

fn load_netlist(path: &Path) -> Result<Network> {
    parse_network(&read_text(path, "netlist")?).with_context(|| format!("netlist {}", path.display()))
}

fn load_image(path: &Path) -> Result<HbmImage> {
    let f = File::open(path).with_context(|| format!("opening image {}", path.display()))?;
    hbm::read_image(BufReader::new(f)).with_context(|| format!("image {}", path.display()))
}

fn load_schedule(path: Option<&Path>) -> Result<Schedule> {
    match path {
        Some(p) => Schedule::from_json(&read_text(p, "schedule")?).with_context(|| format!("schedule {}", p.display())),
        None => Ok(Schedule::default()),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_compile(netlist: &Path, image: &Path) -> Result<()> {
    let net = load_netlist(netlist)?;
    let img = hbm::compile(&net)?;
    let f = File::create(image).with_context(|| format!("creating {}", image.display()))?;
    let mut w = BufWriter::new(f);
    hbm::write_image(&img, &mut w)?;
    w.flush()?;
    let g = &img.geometry;
    let occ = img.occupancy();
    println!("section\tstart_row\trows\toccupied_slots");
    for (name, sec, used) in [
        ("models", g.model_section, occ[0]),
        ("axon_pointers", g.axon_ptr_section, occ[1]),
        ("neuron_pointers", g.neuron_ptr_section, occ[2]),
        ("synapses", g.synapse_section, occ[3]),
    ] {
        println!("{name}\t{}\t{}\t{used}", sec.start, sec.rows);
    }
    Ok(())
}

fn cmd_run(
    defaults: &Defaults,
    source: &NetSource,
    sim: &SimArgs,
    backend: Option<&str>,
    cost: &CostArgs,
    report: Option<&Path>,
) -> Result<()> {
    let seed = defaults.seed(sim);
    let backend = backend.or(defaults.backend.as_deref()).unwrap_or("engine");
    let cost = defaults.cost(cost)?;
    let schedule = load_schedule(sim.schedule.as_deref())?;
    let steps = sim.steps.unwrap_or(schedule.len());
    let registry = BackendRegistry::default();
    let mut session = match (&source.netlist, &source.image) {
        (Some(n), _) => {
            let net = load_netlist(n)?;
            let b = registry.create(backend, &net)?;
            Session::new(net, b, seed)
        }
        (None, Some(i)) => {
            let image = load_image(i)?;
            if backend == "engine" {
                Session::from_image(image, seed)?
            } else {
                let net = hbm::decompile(&image)?;
                Session::new(net.clone(), registry.create(backend, &net)?, seed)
            }
        }
        (None, None) => bail!("one of --netlist or --image is required"),
    };
    let outcome = session.run(&schedule, steps, cost).context("running schedule")?;
    let meta = RunMeta {
        backend: backend.to_string(),
        seed,
        axons: session.network().num_axons(),
        neurons: session.network().num_neurons(),
    };
    emit(
        report,
        &to_jsonl(&run_records(&meta, &outcome, &schedule.block_lens(steps))),
    )
}

fn cmd_diff(defaults: &Defaults, netlist: &Path, image: Option<&Path>, sim: &SimArgs) -> Result<bool> {
    let seed = defaults.seed(sim);
    let schedule = load_schedule(sim.schedule.as_deref())?;
    let steps = sim.steps.unwrap_or(schedule.len());
    let net = load_netlist(netlist)?;
    let image = match image {
        Some(p) => load_image(p)?,
        None => hbm::compile(&net)?,
    };
    let mut oracle = Session::with_backend(net, "oracle", seed)?;
    let mut engine = Session::from_image(image, seed)?;
    match first_divergence(&mut oracle, &mut engine, &schedule, steps)? {
        None => {
            println!("PASS {steps} steps");
            Ok(true)
        }
        Some(d) => {
            println!(
                "FAIL step {} neuron {} ({})",
                d.step,
                d.neuron,
                serde_json::to_value(d.mismatch)?.as_str().unwrap_or_default()
            );
            Ok(false)
        }
    }
}

fn cmd_convert(
    defaults: &Defaults,
    archive: &Path,
    netlist: &Path,
    alpha: Option<f64>,
    strategy: Option<&str>,
    report: Option<&Path>,
) -> Result<()> {
    let layers = convert::read_archive(archive).with_context(|| format!("archive {}", archive.display()))?;
    let q = QuantSpec {
        alpha: alpha.or(defaults.quant_alpha),
    };
    let registry = BiasRegistry::default();
    let strategy = registry.get(
        strategy
            .or(defaults.bias_strategy.as_deref())
            .unwrap_or("threshold_shift"),
    )?;
    let c = convert::convert_model(&layers, &q, strategy)?;
    let closed = convert::closed_form_counts(&layers)?;
    fs::write(netlist, network_to_json(&c.network)).with_context(|| format!("writing {}", netlist.display()))?;
    let r = c.report;
    let out = json!({
        "axons": r.axons,
        "neurons": r.neurons,
        "params": r.params,
        "synapses": r.synapses,
        "bias_axons": r.bias_axons,
        "bias_neurons": r.bias_neurons,
        "closed_form_match": closed == r.counts(),
        "bias_strategy": strategy.name(),
        "scales": c.scales,
        "always_on": c.always_on,
    });
    emit(report, &format!("{}\n", serde_json::to_string_pretty(&out)?))
}

fn cmd_scaling(
    defaults: &Defaults,
    netlist: Option<&Path>,
    sim: &SimArgs,
    factors: &[usize],
    cost: &CostArgs,
    report: Option<&Path>,
    table: Option<&Path>,
) -> Result<()> {
    let seed = defaults.seed(sim);
    let cost = defaults.cost(cost)?;
    if factors.contains(&0) {
        bail!("scale factors must be positive");
    }
    let (family, steps) = match netlist {
        Some(p) => {
            let base = load_netlist(p)?;
            let schedule = load_schedule(sim.schedule.as_deref())?;
            let steps = sim.steps.unwrap_or(schedule.len());
            let family = factors
                .iter()
                .map(|&f| Ok((format!("x{f}"), replicate(&base, f)?, replicate_schedule(&schedule, f))))
                .collect::<Result<Vec<_>>>()?;
            (family, steps)
        }
        None => {
            let steps = sim.steps.unwrap_or(8);
            let family = factors
                .iter()
                .map(|&f| {
                    let (n, s) = feedforward_family(f, steps, seed);
                    (format!("x{f}"), n, s)
                })
                .collect();
            (family, steps)
        }
    };
    let r = scaling_study(&family, steps, seed, cost)?;
    if let Some(t) = table {
        fs::write(t, r.to_table()).with_context(|| format!("writing {}", t.display()))?;
    }
    emit(report, &format!("{}\n", serde_json::to_string_pretty(&r)?))
}

fn dispatch(cli: Cli) -> Result<bool> {
    let defaults = Defaults::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Compile { netlist, image } => cmd_compile(netlist, image)?,
        Command::Run {
            source,
            sim,
            backend,
            cost,
            report,
        } => cmd_run(&defaults, source, sim, backend.as_deref(), cost, report.as_deref())?,
        Command::Diff { netlist, image, sim } => return cmd_diff(&defaults, netlist, image.as_deref(), sim),
        Command::Convert {
            archive,
            netlist,
            quant_alpha,
            bias_strategy,
            report,
        } => cmd_convert(
            &defaults,
            archive,
            netlist,
            *quant_alpha,
            bias_strategy.as_deref(),
            report.as_deref(),
        )?,
        Command::Scaling {
            netlist,
            sim,
            factors,
            cost,
            report,
            table,
        } => cmd_scaling(
            &defaults,
            netlist.as_deref(),
            sim,
            factors,
            cost,
            report.as_deref(),
            table.as_deref(),
        )?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

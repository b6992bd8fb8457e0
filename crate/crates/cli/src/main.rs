mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use siting::agents::{evaluate_all, EvalOptions};
use siting::compromise::{CompromiseOptions, Normalize, DEFAULT_QUANTUM};
use siting::costflow::WarehouseSelection;
use siting::optimizers::{
    solve_loading, solve_production_plan, solve_production_plan_integer, solve_transportation,
    LoadingFile, PlanInstance, TransportInstance,
};
use siting::scenario::load_scenario;

use report::{fmt_money, MatrixFile, SolveReport, Table};

#[derive(Parser)]
#[command(
    name = "siting",
    version,
    about = "Plant siting with a three-agent minmax compromise"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Omit the run header line.
    #[arg(long, global = true)]
    no_header: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every plant pair and pick the compromise situation.
    Solve(SolveArgs),
    /// Print shortest-path costs for one commodity.
    Paths(PathsArgs),
    /// Solve a transportation instance.
    Transport(InstanceArgs),
    /// Solve a loading (bounded knapsack) instance.
    Load(LoadArgs),
    /// Solve a production-planning instance.
    Plan(PlanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Weighted,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    None,
    #[value(name = "by_ideal")]
    ByIdeal,
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(true).args(["scenario", "matrix"])))]
struct SolveArgs {
    #[arg(short, long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Run the selection on a payoff or residual table from a file instead
    /// of evaluating the scenario.
    #[arg(long, value_name = "PATH")]
    matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SelectionArg::Weighted)]
    warehouse_selection: SelectionArg,
    #[arg(long, value_enum, default_value_t = NormalizeArg::None)]
    normalize: NormalizeArg,
    /// Residuals closer than this count as tied.
    #[arg(long, default_value_t = DEFAULT_QUANTUM)]
    tie_quantum: f64,
    /// Include warehouse choices, plant economics and shipments per situation.
    #[arg(long)]
    details: bool,
}

#[derive(Args)]
struct PathsArgs {
    #[arg(short, long, value_name = "PATH")]
    scenario: PathBuf,
    #[arg(long)]
    commodity: String,
    /// Source nodes (comma separated); all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    from: Vec<String>,
    /// Target nodes (comma separated); all nodes when omitted.
    #[arg(long, value_delimiter = ',')]
    to: Vec<String>,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(short, long, value_name = "PATH")]
    instance: PathBuf,
}

#[derive(Args)]
struct LoadArgs {
    #[arg(short, long, value_name = "PATH")]
    instance: PathBuf,
    /// Replace the instance's capacity.
    #[arg(long)]
    capacity: Option<f64>,
    /// Weight unit; capacity is rounded down and weights up to multiples of it.
    #[arg(long)]
    quantum: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(short, long, value_name = "PATH")]
    instance: PathBuf,
    /// Restrict quantities to whole numbers (exhaustive search).
    #[arg(long)]
    integer: bool,
}

struct Output {
    table: String,
    json: serde_json::Value,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| siting::Error::Parse(format!("{}: {e}", path.display())))
        .map_err(Into::into)
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn solve(args: &SolveArgs) -> Result<Output> {
    let scenario = args
        .scenario
        .as_deref()
        .map(|p| load_scenario(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    let options = CompromiseOptions {
        normalize: match args.normalize {
            NormalizeArg::None => Normalize::None,
            NormalizeArg::ByIdeal => Normalize::ByIdeal,
        },
        quantum: args.tie_quantum,
    };
    let report = match (&args.matrix, &scenario) {
        (Some(path), _) => {
            let file: MatrixFile = read_json(path)?;
            SolveReport::from_matrix_file(&file, scenario.as_ref(), &options)?
        }
        (None, Some(s)) => {
            let eval = EvalOptions {
                warehouse_selection: match args.warehouse_selection {
                    SelectionArg::Weighted => WarehouseSelection::Weighted,
                    SelectionArg::Unit => WarehouseSelection::Unit,
                },
            };
            let evaluation = evaluate_all(s, &eval)?;
            SolveReport::from_evaluation(s, &evaluation, &eval, &options, args.details)?
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    Ok(Output {
        table: report.render_table(),
        json: to_json(&report),
    })
}

#[derive(Serialize)]
struct PathsReport {
    commodity: String,
    from: Vec<String>,
    to: Vec<String>,
    /// `null` where there is no route.
    costs: Vec<Vec<Option<f64>>>,
}

fn paths(args: &PathsArgs) -> Result<Output> {
    let s = load_scenario(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    let c = s.commodity_id(&args.commodity)?;
    let all: Vec<String> = s
        .network()
        .nodes()
        .iter()
        .map(|n| n.label.clone())
        .collect();
    let pick = |given: &[String]| -> Result<Vec<(usize, String)>> {
        let labels = if given.is_empty() { &all[..] } else { given };
        labels
            .iter()
            .map(|l| Ok((s.node_id(l)?, l.clone())))
            .collect()
    };
    let from = pick(&args.from)?;
    let to = pick(&args.to)?;
    let costs: Vec<Vec<Option<f64>>> = from
        .iter()
        .map(|&(a, _)| {
            to.iter()
                .map(|&(b, _)| Some(s.leg_cost(c, a, b)).filter(|v| v.is_finite()))
                .collect()
        })
        .collect();

    let mut table = Table::new(
        std::iter::once(format!("{} from\\to", args.commodity))
            .chain(to.iter().map(|(_, l)| l.clone()))
            .collect(),
    );
    for ((_, label), row) in from.iter().zip(&costs) {
        table.row(
            std::iter::once(label.clone())
                .chain(
                    row.iter()
                        .map(|v| v.map_or_else(|| "-".to_string(), fmt_money)),
                )
                .collect(),
        );
    }
    let report = PathsReport {
        commodity: args.commodity.clone(),
        from: from.into_iter().map(|(_, l)| l).collect(),
        to: to.into_iter().map(|(_, l)| l).collect(),
        costs,
    };
    Ok(Output {
        table: table.render(),
        json: to_json(&report),
    })
}

fn transport(args: &InstanceArgs) -> Result<Output> {
    let inst: TransportInstance = read_json(&args.instance)?;
    let plan = solve_transportation(&inst)?;
    let mut table = Table::new(
        std::iter::once("source".to_string())
            .chain((1..=inst.demand.len()).map(|j| format!("B{j}")))
            .chain(std::iter::once("supply".to_string()))
            .collect(),
    );
    for (i, row) in plan.flows.iter().enumerate() {
        table.row(
            std::iter::once(format!("A{}", i + 1))
                .chain(row.iter().map(|&x| fmt_money(x)))
                .chain(std::iter::once(fmt_money(inst.supply[i])))
                .collect(),
        );
    }
    table.row(
        std::iter::once("demand".to_string())
            .chain(inst.demand.iter().map(|&x| fmt_money(x)))
            .chain(std::iter::once(String::new()))
            .collect(),
    );
    let mut text = table.render();
    text.push_str(&format!("\nL = {}\n", fmt_money(plan.objective)));
    text.push_str(&format!("basic cells: {}\n", plan.basis.len()));
    match plan.fictitious {
        None => text.push_str("balanced: yes\n"),
        Some(f) => text.push_str(&format!(
            "balanced: no, added fictitious {}\n",
            fictitious_name(f)
        )),
    }
    Ok(Output {
        table: text,
        json: to_json(&plan),
    })
}

fn fictitious_name(f: siting::optimizers::Fictitious) -> String {
    match f {
        siting::optimizers::Fictitious::Source(i) => format!("source A{}", i + 1),
        siting::optimizers::Fictitious::Destination(j) => format!("destination B{}", j + 1),
    }
}

#[derive(Serialize)]
struct LoadItemReport {
    name: String,
    weight_units: u64,
    profit: f64,
    count: u64,
}

#[derive(Serialize)]
struct LoadReport {
    capacity_units: u64,
    quantum: Option<f64>,
    items: Vec<LoadItemReport>,
    objective: f64,
}

fn load(args: &LoadArgs) -> Result<Output> {
    let mut file: LoadingFile = read_json(&args.instance)?;
    if let Some(c) = args.capacity {
        file.capacity = c;
    }
    let inst = file.to_instance(args.quantum)?;
    let sol = solve_loading(&inst)?;
    let report = LoadReport {
        capacity_units: inst.capacity,
        quantum: args.quantum,
        items: inst
            .items
            .iter()
            .zip(&sol.counts)
            .map(|(it, &count)| LoadItemReport {
                name: it.name.clone(),
                weight_units: it.weight,
                profit: it.profit,
                count,
            })
            .collect(),
        objective: sol.objective,
    };
    let mut table = Table::new(vec![
        "item".into(),
        "weight".into(),
        "profit".into(),
        "count".into(),
    ]);
    for it in &report.items {
        table.row(vec![
            it.name.clone(),
            it.weight_units.to_string(),
            fmt_money(it.profit),
            it.count.to_string(),
        ]);
    }
    let mut text = format!("capacity: {} units\n", report.capacity_units);
    text.push_str(&table.render());
    text.push_str(&format!("\nz = {}\n", fmt_money(report.objective)));
    Ok(Output {
        table: text,
        json: to_json(&report),
    })
}

fn plan(args: &PlanArgs) -> Result<Output> {
    let inst: PlanInstance = read_json(&args.instance)?;
    let sol = if args.integer {
        solve_production_plan_integer(&inst)?
    } else {
        solve_production_plan(&inst)?
    };
    let mut table = Table::new(vec![
        "product".into(),
        "lower".into(),
        "upper".into(),
        "x".into(),
    ]);
    for i in 0..inst.products() {
        table.row(vec![
            format!("{}", i + 1),
            fmt_money(inst.lower[i]),
            fmt_money(inst.upper[i]),
            fmt_money(sol.x[i]),
        ]);
    }
    let mut text = table.render();
    text.push_str(&format!("\nL = {}\n", fmt_money(sol.objective)));
    let slack: Vec<String> = sol.slack.iter().map(|&v| fmt_money(v)).collect();
    text.push_str(&format!("resource slack: {}\n", slack.join(" ")));
    Ok(Output {
        table: text,
        json: to_json(&sol),
    })
}

fn header(cli: &Cli) -> String {
    let (name, input) = match &cli.command {
        Command::Solve(a) => (
            "solve",
            a.scenario
                .as_ref()
                .or(a.matrix.as_ref())
                .map(|p| p.display().to_string()),
        ),
        Command::Paths(a) => ("paths", Some(a.scenario.display().to_string())),
        Command::Transport(a) => ("transport", Some(a.instance.display().to_string())),
        Command::Load(a) => ("load", Some(a.instance.display().to_string())),
        Command::Plan(a) => ("plan", Some(a.instance.display().to_string())),
    };
    format!(
        "# siting {} {name} {}",
        env!("CARGO_PKG_VERSION"),
        input.unwrap_or_default()
    )
}

fn run(cli: &Cli) -> Result<()> {
    let out = match &cli.command {
        Command::Solve(a) => solve(a)?,
        Command::Paths(a) => paths(a)?,
        Command::Transport(a) => transport(a)?,
        Command::Load(a) => load(a)?,
        Command::Plan(a) => plan(a)?,
    };
    let mut text = String::new();
    match cli.format {
        Format::Table => {
            if !cli.no_header {
                text.push_str(&header(cli));
                text.push('\n');
            }
            text.push_str(&out.table);
        }
        Format::Json => {
            if !cli.no_header {
                eprintln!("{}", header(cli));
            }
            text = serde_json::to_string_pretty(&out.json)?;
            text.push('\n');
        }
    }
    match &cli.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<siting::Error>()) {
        Some(e) if e.is_infeasible() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

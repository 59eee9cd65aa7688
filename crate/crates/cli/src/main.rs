//! Command-line front end: size a corridor design, plan an insertion from a
//! ring snapshot, simulate a scenario to trace files, or batch-run randomized
//! scenarios. Exit codes separate the failure families so scripts can branch:
//! 0 success, 2 validation, 3 no feasible slot, 4 hop too slow, 5 safety
//! violation, 6 planner/oracle mismatch, 1 internal or I/O error.

use clap::{Parser, Subcommand};
use loiter_corridor::geometry::{
    feasibility_window, min_lane_separation, required_loiter_radius, transit_distance,
    validate_design, CorridorConfig, FeasibilityWindow,
};
use loiter_corridor::planner::{oracle_plan, plan_insertion, PlanError};
use loiter_corridor::scenario::{ScenarioConfig, ScenarioError};
use loiter_corridor::sim::{run_scenario, SimError, SimulationTrace};
use loiter_corridor::slots::{classify_slots, SlotRing, SlotSnapshot};
use loiter_corridor::sweep::{sweep, SweepOutcome, SweepParams};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "loiter-corridor",
    version,
    about = "Design, plan, and simulate slotted loiter-circle insertions"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout instead of text
    #[arg(long, global = true)]
    json: bool,

    /// Directory for files written by subcommands
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Override the scenario's integration step, in seconds
    #[arg(long, global = true)]
    dt: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size a corridor: loiter radius, lane bound, arrival window, checks
    Design {
        /// Number of slots on the loiter circle
        #[arg(long)]
        n: u32,
        /// Required minimum separation between vehicles, in meters
        #[arg(long)]
        ds: f64,
        /// Slowest commandable speed, in m/s
        #[arg(long)]
        vmin: f64,
        /// Fastest commandable speed, in m/s
        #[arg(long)]
        vmax: f64,
        /// Transit link turn radius, in meters
        #[arg(long)]
        rt: f64,
        /// Transit lane length, in meters
        #[arg(long)]
        dl: f64,
        /// Loiter radius override, in meters (default: smallest radius that
        /// keeps adjacent slots ds apart)
        #[arg(long)]
        rl: Option<f64>,
    },
    /// Compute an insertion plan from a ring snapshot file
    Plan {
        /// JSON file: {"corridor": {...}, "slots": [{"index", "gamma_rad",
        /// "occupied"}, ...]}
        snapshot: PathBuf,
        /// Also run the exhaustive reference planner and fail on mismatch
        #[arg(long)]
        check_oracle: bool,
    },
    /// Simulate a scenario; write trace.csv, events.json, metrics.json
    Run {
        /// Scenario TOML file
        scenario: PathBuf,
        /// Also write per-vehicle polylines and the separation series
        #[arg(long)]
        plot_data: bool,
    },
    /// Run many randomized variants of a scenario and aggregate the outcomes
    Sweep {
        /// Base scenario TOML file (ring phase and occupancy are randomized)
        scenario: PathBuf,
        /// Number of randomized runs
        #[arg(long)]
        runs: u64,
        /// Base RNG seed; run i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        CliError::new(2, message)
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        CliError::new(1, format!("{context}: {err}"))
    }
}

fn scenario_error(err: ScenarioError) -> CliError {
    match &err {
        ScenarioError::Io { .. } => CliError::new(1, err.to_string()),
        ScenarioError::Parse(_) => CliError::validation(err.to_string()),
    }
}

fn sim_error(err: SimError) -> CliError {
    let code = match &err {
        SimError::InvalidDesign(_) | SimError::BadScenario(_) => 2,
        SimError::Plan(PlanError::NoFeasibleSlot) => 3,
        SimError::Plan(PlanError::HopTooSlow { .. }) => 4,
        SimError::SafetyViolation { .. } => 5,
        _ => 1,
    };
    CliError::new(code, err.to_string())
}

fn plan_error(err: PlanError) -> CliError {
    let code = match err {
        PlanError::NoFeasibleSlot => 3,
        PlanError::HopTooSlow { .. } => 4,
    };
    CliError::new(code, err.to_string())
}

fn main() {
    // Die quietly when a downstream pipe closes (e.g. `... | head`) instead
    // of panicking on the failed print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Design {
            n,
            ds,
            vmin,
            vmax,
            rt,
            dl,
            rl,
        } => cmd_design(cli, *n, *ds, *vmin, *vmax, *rt, *dl, *rl),
        Command::Plan {
            snapshot,
            check_oracle,
        } => cmd_plan(cli, snapshot, *check_oracle),
        Command::Run {
            scenario,
            plot_data,
        } => cmd_run(cli, scenario, *plot_data),
        Command::Sweep {
            scenario,
            runs,
            seed,
        } => cmd_sweep(cli, scenario, *runs, *seed),
    }
}

#[derive(Serialize)]
struct DesignReport {
    required_r_loiter_m: f64,
    r_loiter_m: f64,
    min_d_lane_m: f64,
    transit_distance_m: f64,
    window: FeasibilityWindow,
    valid: bool,
    violations: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_design(
    cli: &Cli,
    n: u32,
    ds: f64,
    vmin: f64,
    vmax: f64,
    rt: f64,
    dl: f64,
    rl: Option<f64>,
) -> Result<(), CliError> {
    let required = required_loiter_radius(n, ds).map_err(|e| CliError::validation(e.to_string()))?;
    let config = CorridorConfig {
        n_slots: n,
        v_min: vmin,
        v_max: vmax,
        v_loiter_override: None,
        r_loiter: rl.unwrap_or(required),
        r_transit: rt,
        d_lane: dl,
        d_safe: ds,
    };
    let min_lane =
        min_lane_separation(&config).map_err(|e| CliError::validation(e.to_string()))?;
    let violations: Vec<String> = validate_design(&config)
        .iter()
        .map(|v| v.to_string())
        .collect();
    let report = DesignReport {
        required_r_loiter_m: required,
        r_loiter_m: config.r_loiter,
        min_d_lane_m: min_lane,
        transit_distance_m: transit_distance(&config),
        window: feasibility_window(&config),
        valid: violations.is_empty(),
        violations,
    };

    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        println!("required loiter radius: {:.3} m", report.required_r_loiter_m);
        println!("loiter radius:          {:.3} m", report.r_loiter_m);
        println!("minimum lane length:    {:.3} m", report.min_d_lane_m);
        println!("transit distance:       {:.3} m", report.transit_distance_m);
        println!(
            "arrival window:         [{:.3}, {:.3}] s (slot sweep [{:.3}, {:.3}] rad)",
            report.window.t_min, report.window.t_max, report.window.phi, report.window.psi
        );
        if report.valid {
            println!("design: OK");
        } else {
            println!("design: INVALID");
            for v in &report.violations {
                println!("  - {v}");
            }
        }
    }
    if !report.valid {
        return Err(CliError::validation(format!(
            "design has {} violation(s)",
            report.violations.len()
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct RingSnapshotFile {
    corridor: CorridorConfig,
    slots: Vec<SlotSnapshot>,
}

fn cmd_plan(cli: &Cli, snapshot: &Path, check_oracle: bool) -> Result<(), CliError> {
    let text = fs::read_to_string(snapshot)
        .map_err(|e| CliError::io(&format!("reading {}", snapshot.display()), e))?;
    let file: RingSnapshotFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("malformed snapshot: {e}")))?;
    let config = file.corridor;

    let violations = validate_design(&config);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::validation(format!(
            "invalid corridor design: {}",
            list.join("; ")
        )));
    }
    let ring = SlotRing::from_slots(&config, &file.slots)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let window = feasibility_window(&config);
    let timing = classify_slots(&ring, &window, &config);
    let plan = plan_insertion(&timing, &window, &config).map_err(plan_error)?;

    if check_oracle {
        let reference = oracle_plan(&timing, &window, &config);
        if reference.as_ref() != Ok(&plan) {
            eprintln!("planner:  {}", serde_json::to_string(&plan).unwrap());
            match reference {
                Ok(r) => eprintln!("oracle:   {}", serde_json::to_string(&r).unwrap()),
                Err(e) => eprintln!("oracle:   error: {e}"),
            }
            eprintln!("snapshot: {}", snapshot.display());
            return Err(CliError::new(6, "planner disagrees with oracle"));
        }
    }

    if cli.json {
        println!("{}", serde_json::to_string_pretty(&plan).unwrap());
    } else {
        println!("desired slot:   {}", plan.desired_slot);
        println!("arrival time:   {:.3} s", plan.t_in);
        println!("approach speed: {:.3} m/s", plan.v_in);
        if plan.hop_slots.is_empty() {
            println!("hops:           none (direct insertion)");
        } else {
            println!("hops:           {:?} ({:.3} s each)", plan.hop_slots, plan.t_hop);
        }
        if check_oracle {
            println!("oracle:         agrees");
        }
    }
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &SimulationTrace) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(
        fs::File::create(path).map_err(|e| CliError::io("creating trace.csv", e))?,
    );
    let io = |e| CliError::io("writing trace.csv", e);
    writeln!(w, "t,vehicle_id,x,y,theta,v,a,phase").map_err(io)?;
    for (i, &t) in trace.times.iter().enumerate() {
        for vehicle in &trace.vehicles {
            let s = &vehicle.states[i];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                t, vehicle.vehicle_id, s.x, s.y, s.theta, s.v, s.a, s.phase
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

fn write_plot_data(dir: &Path, trace: &SimulationTrace) -> Result<(), CliError> {
    for vehicle in &trace.vehicles {
        let path = dir.join(format!("vehicle_{}.csv", vehicle.vehicle_id));
        let mut w = std::io::BufWriter::new(
            fs::File::create(&path).map_err(|e| CliError::io("creating polyline file", e))?,
        );
        writeln!(w, "x,y").map_err(|e| CliError::io("writing polyline file", e))?;
        for s in &vehicle.states {
            writeln!(w, "{},{}", s.x, s.y).map_err(|e| CliError::io("writing polyline file", e))?;
        }
    }
    let mut w = std::io::BufWriter::new(
        fs::File::create(dir.join("d_sep.csv"))
            .map_err(|e| CliError::io("creating d_sep.csv", e))?,
    );
    writeln!(w, "t_s,d_sep_m").map_err(|e| CliError::io("writing d_sep.csv", e))?;
    for (t, d) in &trace.d_sep_series {
        writeln!(w, "{t},{d}").map_err(|e| CliError::io("writing d_sep.csv", e))?;
    }
    Ok(())
}

fn cmd_run(cli: &Cli, scenario_path: &Path, plot_data: bool) -> Result<(), CliError> {
    let mut scenario = ScenarioConfig::from_path(scenario_path).map_err(scenario_error)?;
    if let Some(dt) = cli.dt {
        scenario.run.dt = dt;
    }
    let trace = run_scenario(&scenario).map_err(sim_error)?;

    fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io("creating output directory", e))?;
    write_trace_csv(&cli.out_dir.join("trace.csv"), &trace)?;
    fs::write(
        cli.out_dir.join("events.json"),
        serde_json::to_string_pretty(&trace.events).unwrap() + "\n",
    )
    .map_err(|e| CliError::io("writing events.json", e))?;
    fs::write(
        cli.out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&trace.metrics).unwrap() + "\n",
    )
    .map_err(|e| CliError::io("writing metrics.json", e))?;
    if plot_data {
        write_plot_data(&cli.out_dir, &trace)?;
    }

    if cli.json {
        println!("{}", serde_json::to_string_pretty(&trace.metrics).unwrap());
    } else {
        let m = &trace.metrics;
        println!(
            "inserted at slot {}: transit {:.3} s planned, {:.3} s actual",
            trace.plan.desired_slot, m.t_in_planned, m.t_in_actual
        );
        if m.hop_count > 0 {
            println!("hops:            {:?} ({:.3} s)", trace.plan.hop_slots, m.t_hop);
        } else {
            println!("hops:            none");
        }
        println!("insertion error: {:.4} m", m.insertion_error_m);
        match m.pairwise_min {
            Some(p) => println!("min separation:  {p:.3} m"),
            None => println!("min separation:  n/a (single vehicle)"),
        }
        println!(
            "wrote trace.csv, events.json, metrics.json to {}",
            cli.out_dir.display()
        );
    }
    Ok(())
}

fn print_sweep_text(outcome: &SweepOutcome) {
    println!("runs:                 {}", outcome.runs);
    println!("insertions:           {}", outcome.insertions);
    println!("no feasible slot:     {}", outcome.no_feasible);
    println!("hop too slow:         {}", outcome.hop_too_slow);
    println!("safety violations:    {}", outcome.safety_violations);
    println!("oracle disagreements: {}", outcome.oracle_disagreements);
    println!("internal errors:      {}", outcome.internal_errors);
    println!("hop histogram:        {:?}", outcome.hop_histogram);
    match outcome.min_pairwise {
        Some(p) => println!("min pairwise:         {p:.3} m"),
        None => println!("min pairwise:         n/a"),
    }
}

fn cmd_sweep(cli: &Cli, scenario_path: &Path, runs: u64, seed: u64) -> Result<(), CliError> {
    let base = ScenarioConfig::from_path(scenario_path).map_err(scenario_error)?;
    let outcome = sweep(
        &base,
        &SweepParams {
            runs,
            seed,
            dt: cli.dt,
        },
    )
    .map_err(sim_error)?;

    if cli.json {
        println!("{}", serde_json::to_string_pretty(&outcome).unwrap());
    } else {
        print_sweep_text(&outcome);
    }
    if outcome.oracle_disagreements > 0 {
        if let Some(dump) = &outcome.first_disagreement {
            eprintln!("first disagreement:\n{dump}");
        }
        return Err(CliError::new(
            6,
            format!(
                "{} of {} runs disagreed with the oracle",
                outcome.oracle_disagreements, outcome.runs
            ),
        ));
    }
    if outcome.safety_violations > 0 {
        if let Some(first) = &outcome.first_safety_violation {
            eprintln!("first safety violation: {first}");
        }
        return Err(CliError::new(
            5,
            format!(
                "{} of {} runs violated the separation floor",
                outcome.safety_violations, outcome.runs
            ),
        ));
    }
    Ok(())
}

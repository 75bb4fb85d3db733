use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adaptexp::pareto::{describe_instance, extremes, trace_frontier, write_frontier_csv};
use adaptexp::simulator::{run_trials, run_trials_with_threads, summarize, write_trials_csv};
use adaptexp::solver::{residuals, solve_p_star};

use crate::config::{self, Loaded};
use crate::{CliError, Common};

const DEFAULT_OUT: &str = "adaptexp-out";

fn header(command: &str, loaded: &Loaded, extra: &[(&str, String)]) -> String {
    let mut h = format!("adaptexp {command} {}\nconfig_sha256={}\n", env!("CARGO_PKG_VERSION"), loaded.sha256);
    for (k, v) in extra {
        h.push_str(&format!("{k}={v}\n"));
    }
    h
}

fn out_dir(args: &Common, loaded: &Loaded) -> Result<PathBuf, CliError> {
    let dir = args
        .out
        .clone()
        .or_else(|| loaded.file.output_dir())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn commented(header: &str) -> String {
    header.lines().map(|l| format!("# {l}\n")).collect()
}

pub fn solve(args: &Common) -> Result<(), CliError> {
    let loaded = config::load(&args.config)?;
    let instance = loaded.file.instance()?;
    let costs = loaded.file.costs()?;
    let a = solve_p_star(&instance, &costs)?;
    let r = residuals(&instance, &costs, &a.p_star)?;
    let c = costs.sampling_costs(instance.means())?;

    let mut report = header("solve", &loaded, &[]);
    report.push_str(&format!("{}\n", describe_instance(&instance)));
    report.push_str(&format!("best_arm={}\n", a.best_arm));
    report.push_str(&format!("best_share={}\n", a.p_star[a.best_arm]));
    report.push_str(&format!("equilibrium_value={}\n", a.equilibrium_value));
    report.push_str(&format!("lai_robbins_constant={}\n", a.lai_robbins_constant));
    report.push_str(&format!("y_star={}\n", a.y_star));
    report.push_str(&format!("balance_residual={}\n", r.balance));
    report.push_str(&format!("exploitation_residual={}\n", r.exploitation));

    let dir = out_dir(args, &loaded)?;
    let mut w = create(&dir, "solve.txt")?;
    w.write_all(report.as_bytes())?;
    w.flush()?;

    let mut w = create(&dir, "solve.csv")?;
    w.write_all(commented(&header("solve", &loaded, &[])).as_bytes())?;
    writeln!(w, "arm,mean,sampling_cost,p_star,q_star")?;
    for i in 0..instance.k() {
        let q = a
            .alternative_arms
            .iter()
            .position(|&j| j == i)
            .map(|slot| a.q_star[slot].to_string())
            .unwrap_or_default();
        writeln!(w, "{i},{},{},{},{q}", instance.means()[i], c[i], a.p_star[i])?;
    }
    w.flush()?;

    print!("{report}");
    for (i, p) in a.p_star.iter().enumerate() {
        println!("p_star_{i}={p}");
    }
    Ok(())
}

pub fn simulate(args: &Common) -> Result<(), CliError> {
    let loaded = config::load(&args.config)?;
    let config = loaded.file.run_config(args.seed, args.trials)?;
    let records = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => run_trials_with_threads(&config, t)?,
        None => run_trials(&config)?,
    };
    let summary = summarize(&records)?;
    let head = header(
        "simulate",
        &loaded,
        &[("seed", config.base_seed.to_string()), ("trials", config.trials.to_string()), ("n", config.n.to_string())],
    );

    let dir = out_dir(args, &loaded)?;
    let mut w = create(&dir, "trials.csv")?;
    write_trials_csv(&mut w, &records, Some(&head))?;
    w.flush()?;

    let mut w = create(&dir, "summary.txt")?;
    w.write_all(head.as_bytes())?;
    w.write_all(summary.to_key_values().as_bytes())?;
    w.flush()?;

    let mut w = create(&dir, "summary.csv")?;
    w.write_all(commented(&head).as_bytes())?;
    writeln!(w, "{}", summary.csv_header())?;
    writeln!(w, "{}", summary.csv_row())?;
    w.flush()?;

    print!("{head}{}", summary.to_key_values());
    Ok(())
}

pub fn frontier(args: &Common) -> Result<(), CliError> {
    let loaded = config::load(&args.config)?;
    let instance = loaded.file.instance()?;
    let grid = loaded.file.frontier_grid()?;
    let points = trace_frontier(&instance, &grid)?;
    let ext = extremes(&instance)?;
    let ln_n = loaded.file.population().map(|n| (n as f64).ln());

    let mut extra = vec![
        ("beta_bai", ext.beta_bai.to_string()),
        ("l_star", ext.l_star.to_string()),
        ("r_star", ext.r_star.to_string()),
    ];
    if !ext.r_star_exact {
        extra.push(("r_star_note", format!("numerical limit at beta = {}", adaptexp::pareto::REGRET_LIMIT_BETA)));
    }
    if let Some(n) = loaded.file.population() {
        extra.push(("n", n.to_string()));
    }
    let mut head = header("frontier", &loaded, &extra);
    head.push_str(&describe_instance(&instance));

    let dir = out_dir(args, &loaded)?;
    let mut w = create(&dir, "frontier.csv")?;
    write_frontier_csv(&mut w, &points, &ext, ln_n, Some(&head))?;
    w.flush()?;

    println!("{head}");
    println!("points={}", points.len());
    Ok(())
}

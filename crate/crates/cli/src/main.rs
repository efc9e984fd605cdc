mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use qerc_core::dataset::{generate_dataset, load_dataset, Split, MANIFEST_FILE};
use qerc_core::experiment::{
    self, read_records, ExperimentRecord, Outcome, RunConfig, Summary, RECORDS_FILE,
};
use qerc_core::labeler::{label_point, spinodal_chi_n, PhaseLabel};
use qerc_core::phase_viz::{render_accuracy_curve, render_phase_diagram, AccuracySeries, Palette, PhaseDiagramGrid};
use qerc_core::{Error, ErrorKind, Result};

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = cli.global.resolve()?;
    match &cli.command {
        Command::Run { shots_list, select, .. } => {
            if let Some(list) = shots_list {
                cfg.shots_list = list.clone();
            }
            if let Some(sel) = select {
                cfg.selection = Some(sel.clone());
            }
        }
        Command::SweepQubits { range: Some(r) } => cfg.qubit_range = *r,
        Command::Generalize { no_balance: true, .. } => cfg.balance = false,
        _ => {}
    }
    cfg.validate()?;
    if cli.global.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    match cli.command {
        Command::Generate { chunk } => generate(&cfg, chunk.unwrap_or(cfg.chunk)),
        Command::Label { point } => label(&cfg, point),
        Command::Run { replay: Some(path), .. } => replay(&cfg, &path),
        Command::Run { .. } => {
            let out = experiment::run(&cfg, &load(&cfg)?, Some(&out_dir(&cfg, "run")))?;
            report(&out, &out_dir(&cfg, "run"));
            Ok(())
        }
        Command::SweepQubits { .. } => {
            let dir = out_dir(&cfg, "sweep-qubits");
            let sweep = experiment::sweep_qubits(&cfg, &load(&cfg)?, Some(&dir))?;
            print!("{}", sweep.table_csv());
            report(&sweep.outcome, &dir);
            Ok(())
        }
        Command::Ablate => {
            let dir = out_dir(&cfg, "ablate");
            let out = experiment::ablate(&cfg, &load(&cfg)?, Some(&dir))?;
            report(&out, &dir);
            Ok(())
        }
        Command::ShiftComponents { select } => {
            let dir = out_dir(&cfg, "shift-components");
            let out = experiment::shift_components(&cfg, &load(&cfg)?, &select, Some(&dir))?;
            report(&out.outcome, &dir);
            println!("delta (shifted - identity): {:+.4}", out.delta);
            Ok(())
        }
        Command::Generalize { thinning, .. } => {
            let dir = out_dir(&cfg, "generalize");
            let out = experiment::generalize(&cfg, &load(&cfg)?, thinning, Some(&dir))?;
            println!("training images after thinning: {}", out.train_size);
            println!(
                "cell accuracy {:.4} ({} of {} cells mismatched)",
                out.diff.cell_accuracy,
                out.diff.mismatches.len(),
                out.diff.cells
            );
            report(&out.outcome, &dir);
            Ok(())
        }
        Command::Render { input, output, title } => render(&cfg, &input, &output, &title),
    }
}

fn out_dir(cfg: &RunConfig, command: &str) -> PathBuf {
    cfg.runs_dir().join(command)
}

fn load(cfg: &RunConfig) -> Result<qerc_core::dataset::Dataset> {
    let ds = load_dataset(cfg.dataset_dir())?;
    if ds.manifest.grid != cfg.grid || ds.manifest.seeds != cfg.seeds {
        return Err(Error::Config(format!(
            "dataset at {} was generated with a different grid or seed count; \
             pass the same preset/config used for `qerc generate`",
            cfg.dataset_dir().display()
        )));
    }
    Ok(ds)
}

fn format_summary(s: &Summary) -> String {
    let n = s.n_qubits.map(|n| format!("{n}q")).unwrap_or_else(|| "-".into());
    format!(
        "{:<20} {:>4} shots {:>6}  mean {:.4}  min {:.4}  max {:.4}",
        s.method.name(),
        n,
        s.shots,
        s.mean,
        s.min,
        s.max
    )
}

fn report(out: &Outcome, dir: &Path) {
    for s in &out.summaries {
        println!("{}", format_summary(s));
    }
    println!("records appended to {}", dir.join(RECORDS_FILE).display());
}

fn generate(cfg: &RunConfig, chunk: usize) -> Result<()> {
    let dir = cfg.dataset_dir();
    let plan = cfg.plan()?;
    eprintln!(
        "planning {} train + {} test samples at {}",
        plan.count(Split::Train),
        plan.count(Split::Test),
        dir.display()
    );
    let (manifest, report) = generate_dataset(&dir, &plan, chunk, |p| {
        eprintln!("  {}/{} samples", p.done, p.total);
    })?;
    println!(
        "generated {}, reused {}, failed {}; manifest checksum {}",
        report.generated,
        report.reused,
        report.failed,
        manifest.content_checksum()
    );
    println!("{}", dir.join(MANIFEST_FILE).display());
    Ok(())
}

fn label(cfg: &RunConfig, point: Option<Vec<f64>>) -> Result<()> {
    let table = cfg.boundary_table()?;
    if let Some(p) = point {
        let (f, chi_n) = (p[0], p[1]);
        let label = label_point(f, chi_n, &table)?;
        let fold = if f > 0.5 { 1.0 - f } else { f };
        let s = spinodal_chi_n(fold)?;
        println!("{label} (spinodal chiN at f = {fold}: {:.4})", s.chi_n);
        return Ok(());
    }
    let truth = experiment::truth_diagram(cfg, &table)?;
    let dir = cfg.paths.workdir.join("labels");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("truth.csv"), truth.to_csv())?;
    render_phase_diagram(&truth, &Palette::default(), "ground truth", dir.join("truth.svg"))?;
    let mut counts = [0usize; PhaseLabel::COUNT];
    for (_, _, c) in truth.cells() {
        if let Some(c) = c {
            counts[c.label.code()] += 1;
        }
    }
    for l in PhaseLabel::ALL {
        println!("{:<11} {:>4} grid points", l.name(), counts[l.code()]);
    }
    println!("wrote {} and truth.svg", dir.join("truth.csv").display());
    Ok(())
}

fn render(cfg: &RunConfig, input: &Path, output: &Path, title: &str) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    if text.starts_with("series,") {
        let series = AccuracySeries::from_csv(&text)?;
        if output.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            return Err(Error::InvalidInput("accuracy curves are rendered as SVG only".into()));
        }
        render_accuracy_curve(&series, output)?;
    } else {
        let grid = PhaseDiagramGrid::from_csv(&cfg.grid, &text)?;
        render_phase_diagram(&grid, &Palette::default(), title, output)?;
    }
    println!("wrote {}", output.display());
    Ok(())
}

/// Re-runs the command of a record log with its stored config and compares checksums.
fn replay(cfg: &RunConfig, path: &Path) -> Result<()> {
    let old = read_records(path)?;
    let last = old
        .last()
        .ok_or_else(|| Error::Format(format!("{} holds no records", path.display())))?;
    // the log may hold several appended invocations; replay the final one
    let command = last.command.clone();
    let mut rc = last.config.clone();
    rc.paths.workdir = cfg.paths.workdir.clone();
    let dir = cfg.runs_dir().join("replay").join(&command);
    let ds = load(&rc)?;
    let new: Vec<ExperimentRecord> = match command.as_str() {
        "run" => experiment::run(&rc, &ds, Some(&dir))?.records,
        "sweep-qubits" => experiment::sweep_qubits(&rc, &ds, Some(&dir))?.outcome.records,
        "ablate" => experiment::ablate(&rc, &ds, Some(&dir))?.records,
        "shift-components" => {
            let sel = rc
                .selection
                .clone()
                .ok_or_else(|| Error::Format("shift record lacks a selection".into()))?;
            experiment::shift_components(&rc, &ds, &sel, Some(&dir))?.outcome.records
        }
        "generalize" => {
            let v = rc
                .downsample
                .ok_or_else(|| Error::Format("generalize record lacks a thinning variant".into()))?;
            experiment::generalize(&rc, &ds, v, Some(&dir))?.outcome.records
        }
        other => return Err(Error::Format(format!("cannot replay command `{other}`"))),
    };
    let tail = &old[old.len().saturating_sub(new.len())..];
    let strip = |r: &ExperimentRecord| -> Result<String> {
        let mut r = r.clone();
        r.config.paths.workdir = PathBuf::new();
        r.content_checksum()
    };
    let mut matched = 0;
    for (a, b) in tail.iter().zip(&new) {
        if strip(a)? == strip(b)? {
            matched += 1;
        }
    }
    println!("replayed `{command}`: {matched}/{} records identical", new.len());
    if matched != new.len() || tail.len() != new.len() {
        return Err(Error::Format("replay diverged from the recorded run".into()));
    }
    Ok(())
}

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use zfp_core::abbrev::expand;
use zfp_core::catalog::{get_axiom, phis_for, PhiInstance};
use zfp_core::checker::{check_model, default_margin, plans, CheckPlan};
use zfp_core::semantics::{set_slot, star, Evaluator};
use zfp_core::syntax::{parse_formula_with, print_formula, ParseOptions};
use zfp_core::{
    accidental_suite, build_w, check_axiom, AxiomId, CheckReport, Dialect, Mode, Model, Status,
    Structure,
};

#[derive(Parser)]
#[command(
    name = "zfp",
    version,
    about = "Finite-stage workbench for ZF and ZF with primitive pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed formula in W_N or V_N. Exits 0 if true, 1 if false.
    Eval {
        /// `w:N` or `v:N`
        #[arg(long)]
        structure: StructureArg,
        /// Formula text. Read from --file or stdin when absent.
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, conflicts_with = "formula")]
        file: Option<PathBuf>,
        /// Macro dialect; defaults to zfp for W and zf for V.
        #[arg(long)]
        dialect: Option<Dialect>,
        /// Apply the star translation before evaluating.
        #[arg(long)]
        translate: bool,
        /// Bind a free variable to a domain index, e.g. `x=3`.
        #[arg(long = "bind", value_name = "NAME=INDEX")]
        binds: Vec<String>,
    },
    /// Check the axioms of a theory in a finite stage.
    Check {
        #[arg(long)]
        theory: Dialect,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_enum, default_value = "generic")]
        mode: ModeArg,
        /// Restrict to these axioms (e.g. `zfp.S3`).
        #[arg(long = "axiom")]
        axioms: Vec<AxiomId>,
        /// A schema instance to use instead of the catalogue (needs --axiom).
        #[arg(long, requires = "axioms")]
        phi: Option<String>,
        /// Override every plan's margin.
        #[arg(long)]
        margin: Option<u32>,
        /// Evaluation budget for the generic procedure.
        #[arg(long)]
        budget: Option<f64>,
        /// Write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a canned demonstration.
    Demo {
        #[arg(value_enum)]
        which: Demo,
    },
    /// Build W_N and print its tier sizes.
    BuildW {
        #[arg(long)]
        depth: u32,
        /// Print per-tier counts as JSON.
        #[arg(long)]
        stats: bool,
    },
    /// Expand macros and print the primitive formula.
    Expand {
        formula: String,
        #[arg(long, default_value = "zfp")]
        dialect: Dialect,
        #[arg(long)]
        translate: bool,
    },
    /// Print an axiom in primitive notation.
    Show {
        axiom: AxiomId,
        #[arg(long)]
        phi: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Generic,
    Witness,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    Accidental,
}

#[derive(Clone, Copy)]
struct StructureArg {
    theory: Dialect,
    depth: u32,
}

impl std::str::FromStr for StructureArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, n) = s.split_once(':').ok_or("expected w:N or v:N")?;
        let depth = n.parse().map_err(|_| format!("bad depth {n:?}"))?;
        let theory = match kind.to_ascii_lowercase().as_str() {
            "w" => Dialect::Zfp,
            "v" => Dialect::Zf,
            _ => return Err(format!("unknown structure {kind:?}")),
        };
        Ok(StructureArg { theory, depth })
    }
}

fn read_formula(formula: Option<String>, file: Option<PathBuf>) -> Result<String> {
    match (formula, file) {
        (Some(f), _) => Ok(f),
        (None, Some(path)) => {
            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
        }
        (None, None) => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .context("reading stdin")?;
            Ok(s)
        }
    }
}

fn structure_for(arg: StructureArg) -> Result<Structure> {
    Ok(match arg.theory {
        Dialect::Zfp => Structure::w(&build_w(arg.depth)?),
        Dialect::Zf => Structure::v(arg.depth)?,
    })
}

fn eval(
    structure: StructureArg,
    text: String,
    dialect: Option<Dialect>,
    translate: bool,
    binds: &[String],
) -> Result<bool> {
    let dialect = dialect.unwrap_or(structure.theory);
    let (parsed, names) = parse_formula_with(text.trim(), &ParseOptions::default())?;
    let mut f = expand(&parsed, dialect)?;
    if translate {
        f = star(&f);
    }
    let s = structure_for(structure)?;
    let mut env = Vec::new();
    for bind in binds {
        let (name, index) = bind
            .split_once('=')
            .ok_or_else(|| anyhow!("expected NAME=INDEX, got {bind:?}"))?;
        let var = *names
            .get(name)
            .ok_or_else(|| anyhow!("{name} does not occur in the formula"))?;
        let index: u32 = index
            .parse()
            .with_context(|| format!("bad index in {bind:?}"))?;
        if index as usize >= s.len() {
            bail!("index {index} is outside a domain of {} elements", s.len());
        }
        set_slot(&mut env, var, Some(index));
    }
    let unbound: Vec<String> = names
        .iter()
        .filter(|(_, v)| {
            f.free_vars().contains(v) && zfp_core::semantics::get_slot(&env, **v).is_none()
        })
        .map(|(n, _)| n.clone())
        .collect();
    if !unbound.is_empty() {
        bail!("free variables without --bind: {}", unbound.join(", "));
    }
    Ok(Evaluator::new(&s).formula(&f, &mut env)?)
}

fn user_phi(axiom: AxiomId, src: &str) -> Result<PhiInstance> {
    let role = axiom
        .phi_role()
        .ok_or_else(|| anyhow!("{axiom} is not a schema"))?;
    Ok(PhiInstance::parse("user", axiom.theory, role, src)?)
}

fn select_plans(
    theory: Dialect,
    mode: Mode,
    axioms: &[AxiomId],
    phi: Option<&str>,
    margin: Option<u32>,
    budget: Option<f64>,
) -> Result<Vec<CheckPlan>> {
    let mut out = Vec::new();
    if axioms.is_empty() {
        out = plans(theory, mode);
    }
    for &id in axioms {
        if id.theory != theory {
            bail!("{id} does not belong to {theory}");
        }
        match (phi, id.phi_role()) {
            (Some(src), Some(_)) => out.push(CheckPlan::new(id, Some(user_phi(id, src)?), mode)),
            (None, Some(_)) => out.extend(
                phis_for(id)
                    .into_iter()
                    .map(|p| CheckPlan::new(id, Some(p), mode)),
            ),
            (_, None) => out.push(CheckPlan::new(id, None, mode)),
        }
    }
    for p in &mut out {
        p.margin = margin.unwrap_or_else(|| default_margin(p.axiom));
        if let Some(b) = budget {
            p.budget = b;
        }
    }
    Ok(out)
}

fn print_report(r: &CheckReport) {
    let cex = r
        .counterexample
        .as_ref()
        .map(|bs| {
            let parts: Vec<String> = bs
                .iter()
                .map(|b| format!("{} = {}", b.var, b.value))
                .collect();
            format!("  counterexample: {}", parts.join(", "))
        })
        .unwrap_or_default();
    println!(
        "{:<8} {:<20} {:<40} margin {} {:>6} ms{cex}",
        r.mode,
        format!("{:?}", r.status),
        r.axiom,
        r.margin,
        r.millis
    );
}

#[allow(clippy::too_many_arguments)]
fn check(
    theory: Dialect,
    depth: u32,
    mode: ModeArg,
    axioms: &[AxiomId],
    phi: Option<&str>,
    margin: Option<u32>,
    budget: Option<f64>,
    json: Option<PathBuf>,
) -> Result<bool> {
    let model = Model::new(theory, depth)?;
    let modes = match mode {
        ModeArg::Generic => vec![Mode::Generic],
        ModeArg::Witness => vec![Mode::WitnessGuided],
        ModeArg::Both => vec![Mode::Generic, Mode::WitnessGuided],
    };
    let mut reports = Vec::new();
    let mut ok = true;
    for mode in modes {
        let selected = select_plans(theory, mode, axioms, phi, margin, budget)?;
        let results = if axioms.is_empty() && margin.is_none() && budget.is_none() {
            check_model(&model, mode)
        } else {
            selected.iter().map(|p| check_axiom(p, &model)).collect()
        };
        for (plan, result) in selected.iter().zip(results) {
            match result {
                Ok(r) => {
                    print_report(&r);
                    ok &= r.status != Status::Fails;
                    reports.push(r);
                }
                Err(e) => {
                    println!("{mode:<8} {:<20} {:<40} {e}", "Error", plan.label());
                    ok = false;
                }
            }
        }
    }
    if matches!(mode, ModeArg::Both) {
        let half = reports.len() / 2;
        for (g, w) in reports[..half].iter().zip(&reports[half..]) {
            if g.axiom == w.axiom && g.status != w.status {
                println!(
                    "disagreement on {}: generic {:?}, witness {:?}",
                    g.axiom, g.status, w.status
                );
                ok = false;
            }
        }
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&reports)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ok)
}

fn demo_accidental() -> Result<bool> {
    let r = accidental_suite()?;
    for item in &r.items {
        println!(
            "{} {} ({} cases)",
            if item.holds { "holds" } else { "FAILS" },
            item.name,
            item.cases
        );
    }
    println!("{} ms", r.millis);
    Ok(r.all_hold())
}

fn build(depth: u32, stats: bool) -> Result<()> {
    let w = build_w(depth)?;
    let mut out = std::io::stdout().lock();
    if stats {
        writeln!(out, "{}", serde_json::to_string_pretty(&w.stats())?)?;
    } else {
        writeln!(out, "{:?}", w.tier_sizes())?;
    }
    Ok(())
}

fn show(axiom: AxiomId, phi: Option<&str>) -> Result<()> {
    let instance = match (phi, axiom.phi_role()) {
        (Some(src), _) => Some(user_phi(axiom, src)?),
        (None, Some(_)) => phis_for(axiom).into_iter().next(),
        (None, None) => None,
    };
    if let Some(p) = &instance {
        println!("# phi = {} ({})", p.source, p.name);
    }
    println!("{}", print_formula(&get_axiom(axiom, instance.as_ref())?));
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Eval {
            structure,
            formula,
            file,
            dialect,
            translate,
            binds,
        } => {
            let text = read_formula(formula, file)?;
            let truth = eval(structure, text, dialect, translate, &binds)?;
            println!("{truth}");
            Ok(truth)
        }
        Command::Check {
            theory,
            depth,
            mode,
            axioms,
            phi,
            margin,
            budget,
            json,
        } => check(
            theory,
            depth,
            mode,
            &axioms,
            phi.as_deref(),
            margin,
            budget,
            json,
        ),
        Command::Demo {
            which: Demo::Accidental,
        } => demo_accidental(),
        Command::BuildW { depth, stats } => build(depth, stats).map(|_| true),
        Command::Expand {
            formula,
            dialect,
            translate,
        } => {
            let (parsed, _) = parse_formula_with(formula.trim(), &ParseOptions::default())?;
            let mut f = expand(&parsed, dialect)?;
            if translate {
                f = star(&f);
            }
            println!("{}", print_formula(&f));
            Ok(true)
        }
        Command::Show { axiom, phi } => show(axiom, phi.as_deref()).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

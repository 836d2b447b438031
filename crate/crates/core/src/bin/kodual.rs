use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use kodual::anderson::{
    anderson_dual_homotopy, check_generator, detect_shift_free_rank_one, gross_hopkins_homotopy,
    ko_groups, ku_groups,
};
use kodual::chart::Chart;
use kodual::groupcoh::{c2_cohomology, c2_homology, c2_tate, units_group_cohomology, C2Module, UnitsModule};
use kodual::intlin::{GradedAbGroup, GradedTable};
use kodual::ktheory::{anderson_dual_hfpss, hfpss_ku, hfpss_ku_e1, hoss_ku, s2rho, tate_ku};
use kodual::picard::{
    alpha_cokernel, alpha_kernel, beta_on_kernel, fiber_homotopy, level_transition, orbit_model,
    p_smash_ko_check, p_smash_p_check, psi, PadicFn,
};
use kodual::sseq::{extract_abutment, run, Window};
use kodual::{Error, Result};

#[derive(Parser)]
#[command(name = "kodual", version, about = "Spectral sequences and 2-adic computations for KO and its duals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named spectral sequence and chart its pages.
    Sseq {
        #[command(subcommand)]
        action: SseqCommand,
    },
    /// Anderson duality on graded groups read from JSON.
    Anderson {
        #[command(subcommand)]
        action: AndersonCommand,
    },
    /// Finite models of the K(1)-local Picard computations.
    Picard {
        #[command(subcommand)]
        action: PicardCommand,
    },
    /// Group cohomology of C2 and of the 2-adic units.
    Cohomology {
        #[command(subcommand)]
        action: CohomologyCommand,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Ascii,
    Svg,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "ascii")]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SseqCommand {
    Run(SseqRun),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Instance {
    HfpssKu,
    HfpssKuE1,
    TateKu,
    HossKu,
    AndersonHfpss,
    S2rho,
}

#[derive(Args)]
struct SseqRun {
    #[arg(value_enum)]
    instance: Instance,
    /// Last page to compute.
    #[arg(long)]
    max_page: Option<u32>,
    /// Stem range `a:b`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    window: Option<(i64, i64)>,
    /// Filtration range `a:b`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    filtrations: Option<(i64, i64)>,
    /// Draw only this page.
    #[arg(long)]
    page: Option<u32>,
    /// Bottom cell for the `s2rho` instance.
    #[arg(long, default_value_t = -4, allow_hyphen_values = true)]
    bottom: i64,
    /// SVG grid unit in pixels.
    #[arg(long, default_value_t = 40)]
    unit: u32,
    /// Write one file per page into this directory; `KODUAL_OUT_DIR` is used
    /// when the flag is absent.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum AndersonCommand {
    /// `π_* I_Z X` from `π_* X`.
    Dual(GradedInput),
    /// `π_* I_1 X`: the Anderson dual shifted by one.
    GrossHopkins(GradedInput),
    /// The shift `t` with `π_k X ≅ π_{k-t}` of a reference.
    Shift {
        #[command(flatten)]
        input: GradedInput,
        /// `ko`, `ku` or a JSON file.
        #[arg(long, default_value = "ko")]
        reference: String,
        #[arg(long, default_value_t = 8)]
        period: i64,
    },
}

#[derive(Args)]
struct GradedInput {
    /// JSON file `{"window": [lo, hi], "groups": {"0": "Z", ...}}`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Clone, Copy)]
struct PicardParams {
    #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
    l: i64,
    #[arg(long, default_value_t = 4)]
    level: u32,
    #[arg(long, default_value_t = 2)]
    precision: u32,
}

#[derive(Subcommand)]
enum PicardCommand {
    /// Kernel of α with its explicit generator.
    Kernel {
        #[command(flatten)]
        params: PicardParams,
        #[command(flatten)]
        out: Output,
    },
    /// Cokernel of α at a fixed level.
    Coker {
        #[command(flatten)]
        params: PicardParams,
        #[command(flatten)]
        out: Output,
    },
    /// Pull a function back to a higher level and solve `α f = g` there.
    Transition {
        #[command(flatten)]
        params: PicardParams,
        /// Values of `g`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<BigInt>,
        /// Target level.
        #[arg(long)]
        to: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Homotopy of the fiber of `ψ^l - 1` on `KO`.
    Sphere {
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        l: i64,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-8:8")]
        window: (i64, i64),
        #[command(flatten)]
        out: Output,
    },
    /// β on ker α and the degreewise comparison of `ψ^l` with `ψ^{1/l}`.
    OrderTwo {
        #[command(flatten)]
        params: PicardParams,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-8:8")]
        window: (i64, i64),
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-3:3")]
        weights: (i64, i64),
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum C2Kind {
    Cohomology,
    Homology,
    Tate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NamedModule {
    Trivial,
    Sign,
    Regular,
}

#[derive(Subcommand)]
enum CohomologyCommand {
    /// Cohomology, homology or Tate cohomology of C2.
    C2 {
        #[arg(long, value_enum, default_value = "tate")]
        kind: C2Kind,
        #[arg(long, value_enum, default_value = "sign")]
        module: NamedModule,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-4:4")]
        degrees: (i64, i64),
        #[command(flatten)]
        out: Output,
    },
    /// `H^n(Z_2^x; π_{2k} KU_2)`.
    Units {
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 5)]
        precision: u32,
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "0:4")]
        degrees: (i64, i64),
        #[command(flatten)]
        out: Output,
    },
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a: i64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: i64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

/// What a command produced, ready for any of the formats.
struct Report {
    text: String,
    json: Value,
    svg: Option<String>,
}

impl Report {
    fn new(text: String, json: Value) -> Self {
        Report { text, json, svg: None }
    }
}

fn emit(out: &Output, report: Report) -> Result<()> {
    let body = match out.format {
        Format::Ascii => report.text,
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&report.json).expect("serializable")),
        Format::Svg => report
            .svg
            .ok_or_else(|| Error::Unsupported("this command has no SVG output".into()))?,
    };
    write_out(out.output.as_ref(), &body)
}

fn write_out(path: Option<&PathBuf>, body: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Error::Parse(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(body.as_bytes());
            Ok(())
        }
    }
}

fn graded_text(g: &GradedAbGroup) -> String {
    g.iter().map(|(k, h)| format!("{k:>4}: {h}\n")).collect()
}

fn graded_json(g: &GradedAbGroup) -> Value {
    serde_json::to_value(GradedTable::from(g)).expect("serializable")
}

fn read_graded(path: &PathBuf) -> Result<GradedAbGroup> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let table: GradedTable = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    table.to_graded()
}

fn sseq_run(args: &SseqRun) -> Result<()> {
    let stems = args.window;
    let filt = args.filtrations;
    let name = args.instance.to_possible_value().expect("named").get_name().to_string();
    let (run, extensions, abutment_from) = match args.instance {
        Instance::HfpssKu => {
            let w = Window::new(stems.unwrap_or((-8, 16)), filt.unwrap_or((0, 8))).with_floor();
            let (page, rule) = hfpss_ku(w)?;
            (run(&page, &[rule], args.max_page.unwrap_or(4))?, Vec::new(), 4)
        }
        Instance::HfpssKuE1 => {
            let w = Window::new(stems.unwrap_or((-8, 16)), filt.unwrap_or((0, 8))).with_floor();
            (hfpss_ku_e1(w)?.run(args.max_page.unwrap_or(2))?, Vec::new(), u32::MAX)
        }
        Instance::TateKu => {
            let w = Window::new(stems.unwrap_or((-8, 8)), filt.unwrap_or((-6, 6)));
            let (page, rule) = tate_ku(w)?;
            (run(&page, &[rule], args.max_page.unwrap_or(4))?, Vec::new(), 4)
        }
        Instance::HossKu => {
            let w = Window::new(stems.unwrap_or((-8, 16)), filt.unwrap_or((-8, 0))).with_ceiling();
            let ss = hoss_ku(w)?;
            (ss.run(args.max_page.unwrap_or(4))?, ss.extensions, 4)
        }
        Instance::AndersonHfpss => {
            let (a, b) = stems.unwrap_or((-16, 8));
            let (f0, f1) = filt.unwrap_or((0, 8));
            let w = Window::new((-b - 1, -a), (-f1, -f0)).with_ceiling();
            let ss = anderson_dual_hfpss(w)?;
            (ss.run(args.max_page.unwrap_or(4))?, ss.extensions, 4)
        }
        Instance::S2rho => {
            let ss = s2rho(args.bottom)?;
            (ss.run(args.max_page.unwrap_or(3))?, Vec::new(), u32::MAX)
        }
    };
    let mut charts = Chart::from_run(&name, &run, &extensions)?;
    if let Some(r) = args.page {
        charts.retain(|c| c.page == r);
        if charts.is_empty() {
            return Err(Error::InvalidParameter(format!("page {r} was not computed")));
        }
    }
    let abutment = if run.last().number >= abutment_from {
        Some(extract_abutment(run.last(), &extensions)?)
    } else {
        None
    };

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("KODUAL_OUT_DIR").map(PathBuf::from));
    if let Some(dir) = out_dir {
        fs::create_dir_all(&dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
        for c in &charts {
            let (ext, body) = match args.out.format {
                Format::Ascii => ("txt", c.to_ascii()),
                Format::Svg => ("svg", c.to_svg(args.unit)),
                Format::Json => ("json", serde_json::to_string_pretty(c).expect("serializable")),
            };
            write_out(Some(&dir.join(format!("{name}-E{}.{ext}", c.page))), &body)?;
        }
        return Ok(());
    }

    let mut text: String = charts.iter().map(|c| c.to_ascii()).collect::<Vec<_>>().join("\n");
    if let Some(a) = &abutment {
        text.push_str("\nabutment:\n");
        text.push_str(&graded_text(a));
    }
    let json = json!({
        "instance": name,
        "pages": charts,
        "abutment": abutment.as_ref().map(graded_json),
    });
    let svg = charts.last().map(|c| c.to_svg(args.unit));
    emit(&args.out, Report { text, json, svg })
}

fn with_params(p: &PicardParams, extra: Value) -> Value {
    let mut v = json!({ "l": p.l, "level": p.level, "precision": p.precision });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn picard(cmd: &PicardCommand) -> Result<()> {
    match cmd {
        PicardCommand::Kernel { params, out } => {
            check_generator(params.l)?;
            let orbit = orbit_model(params.l, params.level)?;
            let k = alpha_kernel(&orbit, params.precision)?;
            let text = format!("ker α = {}\ngenerator = {}\n", k.group, k.generator);
            let json = with_params(
                params,
                json!({ "kernel": k.group.to_string(), "generator": values_json(&k.generator) }),
            );
            emit(out, Report::new(text, json))
        }
        PicardCommand::Coker { params, out } => {
            check_generator(params.l)?;
            let orbit = orbit_model(params.l, params.level)?;
            let c = alpha_cokernel(&orbit, params.precision)?;
            let text = format!("coker α = {c}\n");
            emit(out, Report::new(text, with_params(params, json!({ "cokernel": c.to_string() }))))
        }
        PicardCommand::Transition {
            params,
            values,
            to,
            out,
        } => {
            check_generator(params.l)?;
            let orbit = orbit_model(params.l, params.level)?;
            let g = PadicFn::new(&orbit, params.precision, 0, values.clone())?;
            let t = level_transition(&g, *to)?;
            let mut text = format!("g = {g}\npulled back to level {to}: {}\n", t.pulled_back);
            match &t.witness {
                Some(w) => text.push_str(&format!("solvable: f = {w}\n")),
                None => text.push_str("not solvable\n"),
            }
            let json = with_params(
                params,
                json!({
                    "to": to,
                    "g": values_json(&g),
                    "pulled_back": values_json(&t.pulled_back),
                    "solvable": t.solvable,
                    "witness": t.witness.as_ref().map(values_json),
                }),
            );
            emit(out, Report::new(text, json))
        }
        PicardCommand::Sphere { l, window, out } => {
            check_generator(*l)?;
            let op = psi(&BigRational::from_integer(BigInt::from(*l)), window.0, window.1 + 1)?;
            let f = fiber_homotopy(&op, window.0, window.1)?;
            let mut text = format!("fiber of ψ^{l} - 1 on KO: (kernel, cokernel)\n");
            for d in &f {
                text.push_str(&format!("{:>4}: ({}, {})\n", d.degree, d.kernel, d.cokernel));
            }
            let rows: Vec<Value> = f
                .iter()
                .map(|d| json!({ "degree": d.degree, "kernel": d.kernel.to_string(), "cokernel": d.cokernel.to_string() }))
                .collect();
            let json = json!({ "l": l, "window": [window.0, window.1], "degrees": rows });
            emit(out, Report::new(text, json))
        }
        PicardCommand::OrderTwo {
            params,
            window,
            weights,
            out,
        } => {
            check_generator(params.l)?;
            let orbit = orbit_model(params.l, params.level)?;
            let mut text = String::from("β on ker α:\n");
            let mut rows = Vec::new();
            for n in weights.0..=weights.1 {
                let s = beta_on_kernel(&orbit, params.precision, n)?;
                text.push_str(&format!("  weight {n:>2}: {} mod {}\n", s.value, s.modulus));
                rows.push(json!({ "weight": n, "scalar": s.value.to_string(), "modulus": s.modulus.to_string() }));
            }
            let agree = p_smash_p_check(params.l, window.0, window.1)?;
            let ko = p_smash_ko_check(params.l, params.level, params.precision)?;
            text.push_str(&format!(
                "fibers of ψ^{0} - 1 and ψ^(1/{0}) - 1 agree on [{1}, {2}]: {3}\n",
                params.l, window.0, window.1, agree
            ));
            text.push_str(&format!("ker α ≅ Z/2^{}: {}\n", params.precision, ko.holds));
            if let Some(d) = &ko.diagnostic {
                text.push_str(&format!("  {d}\n"));
            }
            let json = with_params(
                params,
                json!({
                    "beta": rows,
                    "window": [window.0, window.1],
                    "p_smash_p": agree,
                    "p_smash_ko": ko.holds,
                    "diagnostic": ko.diagnostic,
                }),
            );
            emit(out, Report::new(text, json))
        }
    }
}

fn values_json(f: &PadicFn) -> Value {
    json!(f.values.iter().map(|v| v.to_string()).collect::<Vec<_>>())
}

fn anderson(cmd: &AndersonCommand) -> Result<()> {
    match cmd {
        AndersonCommand::Dual(input) | AndersonCommand::GrossHopkins(input) => {
            let g = read_graded(&input.input)?;
            let d = if matches!(cmd, AndersonCommand::Dual(_)) {
                anderson_dual_homotopy(&g)?
            } else {
                gross_hopkins_homotopy(&g)?
            };
            emit(&input.out, Report::new(graded_text(&d), graded_json(&d)))
        }
        AndersonCommand::Shift {
            input,
            reference,
            period,
        } => {
            let g = read_graded(&input.input)?;
            let (lo, hi) = g.window();
            let r = match reference.as_str() {
                "ko" => ko_groups(lo - 2 * period, hi + 2 * period),
                "ku" => ku_groups(lo - 2 * period, hi + 2 * period),
                path => read_graded(&PathBuf::from(path))?,
            };
            let t = detect_shift_free_rank_one(&g, &r, *period)?;
            let text = format!("shift {t} mod {period}\n");
            emit(&input.out, Report::new(text, json!({ "shift": t, "period": period })))
        }
    }
}

fn named_module(m: NamedModule) -> C2Module {
    match m {
        NamedModule::Trivial => C2Module::trivial(),
        NamedModule::Sign => C2Module::sign(),
        NamedModule::Regular => C2Module::regular(),
    }
}

fn cohomology(cmd: &CohomologyCommand) -> Result<()> {
    match cmd {
        CohomologyCommand::C2 {
            kind,
            module,
            degrees,
            out,
        } => {
            let m = named_module(*module);
            let (lo, hi) = match kind {
                C2Kind::Tate => *degrees,
                _ => (degrees.0.max(0), degrees.1.max(0)),
            };
            let mut g = GradedAbGroup::zero(lo, hi);
            for n in lo..=hi {
                let h = match kind {
                    C2Kind::Tate => c2_tate(&m, n)?,
                    C2Kind::Cohomology => c2_cohomology(&m, n as usize)?,
                    C2Kind::Homology => c2_homology(&m, n as usize)?,
                };
                g.set(n, h)?;
            }
            emit(out, Report::new(graded_text(&g), graded_json(&g)))
        }
        CohomologyCommand::Units {
            k,
            precision,
            degrees,
            out,
        } => {
            let m = UnitsModule::ku(*k, *precision);
            let (lo, hi) = (degrees.0.max(0), degrees.1.max(0));
            let mut g = GradedAbGroup::zero(lo, hi);
            for n in lo..=hi {
                g.set(n, units_group_cohomology(&m, n as usize)?)?;
            }
            let mut json = graded_json(&g);
            json["k"] = json!(k);
            json["precision"] = json!(precision);
            emit(out, Report::new(graded_text(&g), json))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Sseq {
            action: SseqCommand::Run(args),
        } => sseq_run(args),
        Command::Anderson { action } => anderson(action),
        Command::Picard { action } => picard(action),
        Command::Cohomology { action } => cohomology(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

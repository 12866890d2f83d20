mod cache;
mod input;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use spherical::atlas::{
    bind_labels, check_gon_formula, classify_faces, default_atlas, parse_transcription, witness_catalogs,
    TypeAtlas, DEFAULT_TRANSCRIPTION, DEFAULT_WITNESSES,
};
use spherical::generators::{enumerate_curves, ingest_table, EnumerationError, EnumerationFilter};
use spherical::moves::{reductivity, reductivity_upper_bound, ReductivityCertificate, ReductivityError};
use spherical::unavoidable::{
    default_seeds, derive_r4_parts, match_pattern, parse_seeds, verify_unavoidable, PatternSet, SeedConfiguration,
    PART_LIST_VERSION,
};
use spherical::{CanonicalCode, PlaneCurve};

use cache::Cache;
use input::{resolve, Sourced};

/// Spherical curves: faces, splices, reductivity and unavoidable sets.
#[derive(Parser, Debug)]
#[command(name = "spherical", version)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Largest crossing number for enumeration-driven commands.
    #[arg(long, global = true, default_value_t = 8)]
    max_crossings: usize,
    /// Deepest splice sequence the reductivity search explores.
    #[arg(long, global = true, default_value_t = 4)]
    max_depth: usize,
    /// Face-type transcription replacing the bundled one.
    #[arg(long, global = true, value_parser = existing_path)]
    atlas: Option<PathBuf>,
    /// Seed file replacing the bundled one.
    #[arg(long, global = true, value_parser = existing_path)]
    seeds: Option<PathBuf>,
    /// Directory of the reductivity cache.
    #[arg(long, global = true, env = "SPHERICAL_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the reductivity cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

fn existing_path(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.exists() {
        Ok(p)
    } else {
        Err(format!("{s} does not exist"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    JsonLines,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SetName {
    S,
    T,
    U,
    R4,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Face census, reducibility, primality and the face-count identity.
    Analyze { input: String },
    /// Every face with its size, orientation class, configuration and type.
    Faces { input: String },
    /// Fewest splices needed to reach a reducible curve, with a witness.
    Reductivity { input: String },
    /// Lists curves up to --max-crossings by canonical code.
    Enumerate {
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        prime: bool,
        /// Give up once a crossing level holds more curves than this.
        #[arg(long)]
        max_classes: Option<usize>,
    },
    /// Reads a table of Gauss codes and reports duplicates.
    Ingest { file: PathBuf },
    /// Runs the case analysis and writes the part list.
    DeriveParts {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Looks for each pattern of a set inside a curve.
    Match {
        input: String,
        #[arg(long, value_enum, default_value_t = SetName::R4)]
        set: SetName,
    },
    /// Checks that every relevant curve contains a pattern of the set.
    VerifySet {
        #[arg(long, value_enum)]
        set: SetName,
        /// Curves to check instead of the enumeration.
        #[arg(long)]
        input: Option<String>,
    },
    /// Hunts for reduced prime curves with reductivity four.
    SearchR4 {
        #[arg(long)]
        max_classes: Option<usize>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Input(#[from] input::InputError),
    #[error("{0}")]
    Invalid(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Invalid(_) | CliError::Io(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

/// Finished without error; `found` means a counterexample was reported.
struct Done {
    found: bool,
}

const OK: Done = Done { found: false };

struct Out {
    format: Format,
}

impl Out {
    fn emit(&self, record: Value, human: impl FnOnce() -> String) {
        match self.format {
            Format::JsonLines => println!("{record}"),
            Format::Human => println!("{}", human()),
        }
    }
}

struct Context {
    run: RunConfig,
    out: Out,
    cache: Option<Cache>,
}

impl Context {
    fn atlas(&self) -> Result<(TypeAtlas, Vec<SeedConfiguration>), CliError> {
        let seeds = match &self.run.seeds {
            Some(p) => parse_seeds(&std::fs::read_to_string(p)?).map_err(|e| CliError::Invalid(e.to_string()))?,
            None => default_seeds(),
        };
        if self.run.atlas.is_none() && self.run.seeds.is_none() {
            return Ok((default_atlas().clone(), seeds));
        }
        let text = match &self.run.atlas {
            Some(p) => std::fs::read_to_string(p)?,
            None => DEFAULT_TRANSCRIPTION.to_string(),
        };
        let entries = parse_transcription(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
        let catalogs = witness_catalogs(DEFAULT_WITNESSES).map_err(|e| CliError::Invalid(e.to_string()))?;
        let atlas = bind_labels(&catalogs, &entries, &seeds).map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok((atlas, seeds))
    }

    /// Reductivity, using and updating the cache. A cached value is
    /// re-derived with the depth capped at that value, which reproduces the
    /// same certificate.
    fn certificate(&mut self, curve: &PlaneCurve) -> Result<ReductivityCertificate, CliError> {
        let code = curve.canonical();
        if let Some(r) = self.cache.as_mut().and_then(|c| c.get(&code)) {
            match reductivity(curve, r) {
                Ok(cert) if cert.r == r => return Ok(cert),
                _ => eprintln!("warning: cached value r={r} for {code} does not replay; recomputing"),
            }
        }
        let cert = reductivity(curve, self.run.max_depth).map_err(search_error)?;
        if let Some(c) = self.cache.as_mut() {
            c.put(&code, cert.r)?;
        }
        Ok(cert)
    }

    /// Reductivity of many curves; uncached ones are computed in parallel and
    /// written back by this thread in batches, so an interrupted run keeps
    /// what it finished.
    fn reductivities(&mut self, curves: &[PlaneCurve]) -> Result<Vec<usize>, CliError> {
        let codes: Vec<CanonicalCode> = curves.par_iter().map(PlaneCurve::canonical).collect();
        let mut known: Vec<Option<usize>> =
            codes.iter().map(|c| self.cache.as_mut().and_then(|cache| cache.get(c))).collect();
        let missing: Vec<usize> = (0..curves.len()).filter(|&i| known[i].is_none()).collect();
        let depth = self.run.max_depth;
        for batch in missing.chunks(256) {
            let found: Vec<Result<usize, ReductivityError>> =
                batch.par_iter().map(|&i| reductivity(&curves[i], depth).map(|c| c.r)).collect();
            for (&i, r) in batch.iter().zip(found) {
                let r = r.map_err(search_error)?;
                if let Some(c) = self.cache.as_mut() {
                    c.put(&codes[i], r)?;
                }
                known[i] = Some(r);
            }
        }
        Ok(known.into_iter().map(|r| r.expect("every curve resolved")).collect())
    }
}

fn search_error(e: ReductivityError) -> CliError {
    match e {
        ReductivityError::DepthExceeded { .. } => CliError::Resource(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}

fn enumeration_error(e: EnumerationError) -> CliError {
    match e {
        EnumerationError::Budget { resume, partial, .. } => CliError::Resource(format!(
            "class budget exhausted; {} curves found; resume token completed_crossings={}",
            partial.len(),
            resume.completed_crossings
        )),
        other => CliError::Resource(other.to_string()),
    }
}

fn default_cache_dir() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache")))?;
    Some(base.join("spherical"))
}

fn labels_1based(labels: impl IntoIterator<Item = usize>) -> Vec<usize> {
    labels.into_iter().map(|l| l + 1).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn analyze(ctx: &Context, arg: &str) -> Result<Done, CliError> {
    for Sourced { source, curve } in resolve(arg)? {
        let census = curve.census();
        let sizes: BTreeMap<String, usize> = census.counts.iter().map(|(s, c)| (s.to_string(), *c)).collect();
        let reducible = labels_1based(curve.reducible_crossings());
        let record = json!({
            "command": "analyze",
            "input": source,
            "canonical": curve.canonical().to_string(),
            "word": curve.word().to_string(),
            "crossings": curve.crossings(),
            "census": sizes,
            "reduced": curve.is_reduced(),
            "reducible_crossings": reducible,
            "prime": curve.is_prime(),
            "gon_formula": check_gon_formula(&census),
        });
        ctx.out.emit(record, || {
            format!(
                "curve      {}\ncanonical  {}\ncrossings  {}\ncensus     {}\nreduced    {} (reducible crossings: [{}])\nprime      {}\nformula    {}",
                curve.word(),
                curve.canonical(),
                curve.crossings(),
                census,
                curve.is_reduced(),
                join(&reducible),
                curve.is_prime(),
                if check_gon_formula(&census) { "ok" } else { "VIOLATED" }
            )
        });
    }
    Ok(OK)
}

fn faces(ctx: &Context, arg: &str) -> Result<Done, CliError> {
    let (atlas, _) = ctx.atlas()?;
    for Sourced { curve, .. } in resolve(arg)? {
        let code = curve.canonical().to_string();
        let all = curve.faces();
        for report in classify_faces(&curve, &atlas) {
            let crossings = labels_1based(all[report.face].darts.iter().map(|&d| curve.crossing_of_dart(d)));
            let class = report.class.as_ref().map(ToString::to_string);
            let config = report.config.as_ref().map(ToString::to_string);
            let label = report.label.as_ref().map(ToString::to_string);
            let record = json!({
                "command": "faces",
                "canonical": code,
                "face": report.face,
                "size": report.size,
                "crossings": crossings,
                "class": class,
                "config": config,
                "label": label,
            });
            ctx.out.emit(record, || {
                format!(
                    "face {:>2}  size {:>2}  crossings [{}]  class {}  config {}  type {}",
                    report.face,
                    report.size,
                    join(&crossings),
                    class.as_deref().unwrap_or("-"),
                    config.as_deref().unwrap_or("-"),
                    label.as_deref().unwrap_or("-")
                )
            });
        }
    }
    Ok(OK)
}

fn cmd_reductivity(ctx: &mut Context, arg: &str) -> Result<Done, CliError> {
    for Sourced { source, curve } in resolve(arg)? {
        let cert = ctx.certificate(&curve)?;
        let witness = labels_1based(cert.witness.iter().map(|s| s.0));
        let path: Vec<String> = cert.path.iter().map(ToString::to_string).collect();
        let record = json!({
            "command": "reductivity",
            "input": source,
            "canonical": cert.start.to_string(),
            "r": cert.r,
            "witness": witness,
            "path": path,
            "classes_per_depth": cert.classes_per_depth,
        });
        ctx.out.emit(record, || cert.to_line());
    }
    Ok(OK)
}

fn enumerate(ctx: &Context, reduced: bool, prime: bool, max_classes: Option<usize>) -> Result<Done, CliError> {
    let filter = EnumerationFilter {
        reduced_only: reduced,
        prime_only: prime,
        max_classes,
        ..EnumerationFilter::all(ctx.run.max_crossings)
    };
    let codes = enumerate_curves(&filter).map_err(enumeration_error)?;
    let mut per_level: BTreeMap<usize, usize> = BTreeMap::new();
    for code in &codes {
        *per_level.entry(code.crossings()).or_default() += 1;
        ctx.out.emit(json!({"command": "enumerate", "canonical": code.to_string(), "crossings": code.crossings()}), || {
            code.to_string()
        });
    }
    eprintln!("{} curves; per crossing number {:?}", codes.len(), per_level);
    Ok(OK)
}

fn ingest(ctx: &Context, file: &Path) -> Result<Done, CliError> {
    let report = ingest_table(file).map_err(|e| CliError::Invalid(e.to_string()))?;
    for (line, curve) in &report.curves {
        let code = curve.canonical().to_string();
        ctx.out.emit(json!({"command": "ingest", "line": line, "canonical": code}), || format!("{line}\t{code}"));
    }
    for d in &report.duplicates {
        let code = d.code.to_string();
        ctx.out.emit(
            json!({"command": "ingest", "line": d.line, "canonical": code, "duplicate_of": d.first_line}),
            || format!("{}\t{code}\tduplicate of line {}", d.line, d.first_line),
        );
    }
    eprintln!("{} distinct curves, {} duplicates", report.curves.len(), report.duplicates.len());
    Ok(OK)
}

fn derive_parts(ctx: &Context, out: Option<&Path>) -> Result<Done, CliError> {
    let (atlas, seeds) = ctx.atlas()?;
    let d = derive_r4_parts(&atlas, &seeds).map_err(|e| CliError::Invalid(e.to_string()))?;
    let golden = d.to_golden();
    match out {
        Some(p) => std::fs::write(p, &golden)?,
        None if ctx.out.format == Format::Human => print!("{golden}"),
        None => {}
    }
    if ctx.out.format == Format::JsonLines {
        for (i, part) in d.parts.iter().enumerate() {
            ctx.out.emit(
                json!({
                    "command": "derive-parts",
                    "index": i + 1,
                    "seed": part.seed,
                    "labels": part.label_text(),
                    "word": part.closed_word().to_string(),
                    "code": part.code().to_string(),
                }),
                String::new,
            );
        }
        ctx.out.emit(
            json!({
                "command": "derive-parts",
                "version": PART_LIST_VERSION,
                "parts": d.parts.len(),
                "per_seed": d.counts_per_seed(),
            }),
            String::new,
        );
    }
    eprintln!("{} parts, per seed {:?}", d.parts.len(), d.counts_per_seed());
    Ok(OK)
}

fn pattern_set(name: SetName, atlas: &TypeAtlas, seeds: &[SeedConfiguration]) -> Result<PatternSet, CliError> {
    Ok(match name {
        SetName::S => PatternSet::small_faces(),
        SetName::T => PatternSet::trigons(),
        SetName::U => PatternSet::seed_shapes(seeds),
        SetName::R4 => PatternSet::r4(&derive_r4_parts(atlas, seeds).map_err(|e| CliError::Invalid(e.to_string()))?),
    })
}

fn cmd_match(ctx: &Context, arg: &str, set: SetName) -> Result<Done, CliError> {
    let (atlas, seeds) = ctx.atlas()?;
    let set = pattern_set(set, &atlas, &seeds)?;
    for Sourced { curve, .. } in resolve(arg)? {
        let code = curve.canonical().to_string();
        let mut matched = 0;
        for pattern in &set.patterns {
            let result = match_pattern(&curve, pattern, &atlas);
            let occurrences: Vec<Vec<usize>> =
                result.occurrences.iter().map(|o| labels_1based(o.crossings.iter().copied())).collect();
            if result.matched {
                matched += 1;
            }
            if ctx.out.format == Format::JsonLines || result.matched {
                ctx.out.emit(
                    json!({
                        "command": "match",
                        "canonical": code,
                        "set": set.name,
                        "pattern": pattern.name(),
                        "matched": result.matched,
                        "occurrences": occurrences,
                    }),
                    || {
                        let places: Vec<String> = occurrences.iter().map(|o| format!("[{}]", join(o))).collect();
                        format!("{}  at {}", pattern.name(), places.join(" "))
                    },
                );
            }
        }
        if ctx.out.format == Format::Human {
            println!("{code}: {matched} of {} patterns of {} found", set.patterns.len(), set.name);
        }
    }
    Ok(OK)
}

fn verify_set(ctx: &mut Context, name: SetName, input: Option<&str>) -> Result<Done, CliError> {
    let (atlas, seeds) = ctx.atlas()?;
    let set = pattern_set(name, &atlas, &seeds)?;
    let curves: Vec<PlaneCurve> = match input {
        Some(arg) => resolve(arg)?.into_iter().map(|s| s.curve).collect(),
        None => enumerate_curves(&EnumerationFilter {
            reduced_only: true,
            ..EnumerationFilter::all(ctx.run.max_crossings)
        })
        .map_err(enumeration_error)?
        .into_iter()
        .map(|c| c.to_curve())
        .collect(),
    };
    let reduced: Vec<PlaneCurve> = curves.iter().filter(|c| c.crossings() > 0 && c.is_reduced()).cloned().collect();
    // Which reductivities the set is claimed for.
    let selected: Vec<PlaneCurve> = match name {
        SetName::S | SetName::U => reduced,
        SetName::T | SetName::R4 => {
            let low = if name == SetName::T { 3 } else { 4 };
            let rs = ctx.reductivities(&reduced)?;
            reduced.into_iter().zip(rs).filter(|(_, r)| *r >= low).map(|(c, _)| c).collect()
        }
    };
    let skipped = curves.len() - selected.len();
    let mut report = verify_unavoidable(&set, selected, |_| true, &atlas);
    report.skipped += skipped;
    let counterexamples: Vec<String> = report.counterexamples.iter().map(ToString::to_string).collect();
    ctx.out.emit(
        json!({
            "command": "verify-set",
            "set": report.set,
            "checked": report.checked,
            "skipped": report.skipped,
            "counterexamples": counterexamples,
            "holds": report.holds(),
        }),
        || {
            let mut s = format!(
                "set {}: {} curves checked, {} skipped, {} counterexamples",
                report.set,
                report.checked,
                report.skipped,
                counterexamples.len()
            );
            for c in &counterexamples {
                s.push_str(&format!("\n  counterexample {c}"));
            }
            s
        },
    );
    Ok(Done { found: !report.holds() })
}

fn search_r4(ctx: &mut Context, max_classes: Option<usize>) -> Result<Done, CliError> {
    let (atlas, seeds) = ctx.atlas()?;
    let parts = derive_r4_parts(&atlas, &seeds).map_err(|e| CliError::Invalid(e.to_string()))?;
    let set = PatternSet::r4(&parts);
    let filter = EnumerationFilter { max_classes, ..EnumerationFilter::reduced_prime(ctx.run.max_crossings) };
    let codes = enumerate_curves(&filter).map_err(enumeration_error)?;
    let curves: Vec<PlaneCurve> = codes.par_iter().map(CanonicalCode::to_curve).collect();
    let survivors: Vec<PlaneCurve> = curves
        .par_iter()
        .filter(|c| reductivity_upper_bound(&classify_faces(c, &atlas)).is_none_or(|b| b > 3))
        .cloned()
        .collect();
    let rs = ctx.reductivities(&survivors)?;
    let mut found = Vec::new();
    let mut unexplained = Vec::new();
    for (curve, r) in survivors.iter().zip(&rs) {
        let code = curve.canonical().to_string();
        let names: Vec<String> = set
            .patterns
            .iter()
            .enumerate()
            .filter(|(_, p)| match_pattern(curve, p, &atlas).matched)
            .map(|(i, _)| (i + 1).to_string())
            .collect();
        if *r >= 4 {
            found.push(code.clone());
            if names.is_empty() {
                unexplained.push(code.clone());
            }
        }
        ctx.out.emit(
            json!({"command": "search-r4", "canonical": code, "r": r, "parts": names}),
            || format!("survivor {code}  r={r}  parts [{}]", names.join(",")),
        );
    }
    ctx.out.emit(
        json!({
            "command": "search-r4",
            "max_crossings": ctx.run.max_crossings,
            "enumerated": curves.len(),
            "filtered": curves.len() - survivors.len(),
            "survivors": survivors.len(),
            "r4": found,
            "r4_without_part": unexplained,
        }),
        || {
            format!(
                "{} reduced prime curves up to {} crossings, {} ruled out by local faces, {} searched, {} with r=4",
                curves.len(),
                ctx.run.max_crossings,
                curves.len() - survivors.len(),
                survivors.len(),
                found.len()
            )
        },
    );
    Ok(Done { found: !found.is_empty() })
}

fn run(cli: Cli) -> Result<Done, CliError> {
    if let Some(n) = cli.run.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let cache = match (cli.run.no_cache, cli.run.cache_dir.clone().or_else(default_cache_dir)) {
        (false, Some(dir)) => Some(Cache::open(&dir)?),
        _ => None,
    };
    let mut ctx = Context { out: Out { format: cli.run.format }, run: cli.run, cache };
    let done = match &cli.command {
        Command::Analyze { input } => analyze(&ctx, input),
        Command::Faces { input } => faces(&ctx, input),
        Command::Reductivity { input } => cmd_reductivity(&mut ctx, input),
        Command::Enumerate { reduced, prime, max_classes } => enumerate(&ctx, *reduced, *prime, *max_classes),
        Command::Ingest { file } => ingest(&ctx, file),
        Command::DeriveParts { out } => derive_parts(&ctx, out.as_deref()),
        Command::Match { input, set } => cmd_match(&ctx, input, *set),
        Command::VerifySet { set, input } => verify_set(&mut ctx, *set, input.as_deref()),
        Command::SearchR4 { max_classes } => search_r4(&mut ctx, *max_classes),
    }?;
    if let Some(c) = &ctx.cache {
        if c.hits > 0 {
            eprintln!("cache: {} hits", c.hits);
        }
    }
    Ok(done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Done { found: false }) => ExitCode::SUCCESS,
        Ok(Done { found: true }) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

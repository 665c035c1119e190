use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plectic::cochain::{CochainDump, FiniteCochain};
use plectic::elliptic::{point_side, PointSideSpec};
use plectic::harmonize::harmonize;
use plectic::homology::{cycle_integrands, plectic_invariant};
use plectic::integrate::riemann_log_integral;
use plectic::shapiro::{load_fixture, ShapiroCocycle};
use plectic::tensor::TensorValue;
use plectic::Error;
use serde_json::{json, Value};

/// Version of every JSON document this tool writes.
const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Exit status when `compare` finds fewer agreeing digits than required.
const EXIT_MISMATCH: u8 = 1;
/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "plectic", version, about = "Plectic p-adic invariants on the product of two Bruhat-Tits trees")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    emit_json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Run {
    #[arg(long)]
    fixture: PathBuf,
    /// Truncation depth m.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    /// Precision M, in digits.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u32).range(2..))]
    prec: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a fixture and validate its invariants.
    CheckFixture {
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Harmonize the fixture's cocycle and write the corrected cochain dump.
    Harmonize {
        #[command(flatten)]
        run: Run,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a cochain dump against the fixture's cycle.
    Integrate {
        #[command(flatten)]
        run: Run,
        #[arg(long)]
        cochain: PathBuf,
    },
    /// log_A of the point-side determinant from a curve-and-points file.
    PointSide {
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
        prec: u32,
    },
    /// Harmonize and integrate in one go.
    Plectic {
        #[command(flatten)]
        run: Run,
    },
    /// Digit agreement of a value document with a golden one, up to sign,
    /// factor swap and conjugation of either factor.
    Compare {
        /// Value document to check.
        value: PathBuf,
        #[arg(long)]
        golden: PathBuf,
        /// Digits required; defaults to the smaller of the two precisions.
        #[arg(long)]
        digits: Option<i64>,
    },
}

/// Stable exit status for each error class.
fn exit_code(e: &Error) -> u8 {
    match e.class() {
        "SchemaError" => 2,
        "ParseError" => 3,
        "InsufficientPrecision" => 4,
        "NotASquare" => 5,
        "InvalidPeriod" => 6,
        "EmbeddingUnavailable" => 7,
        "PrimeNotInert" => 8,
        "NotMultiplicative" => 9,
        "EmbeddingNotInert" => 10,
        "OutOfDepth" => 11,
        "RadialContractViolation" => 12,
        "DepthExceeded" => 13,
        "OracleIncomplete" => 14,
        "DegenerationUnderdetermined" => 15,
        "LiftInconsistent" => 16,
        _ => 70,
    }
}

fn stage_of(e: &Error) -> Option<&'static str> {
    match e {
        Error::Stage { stage, .. } => Some(stage),
        _ => None,
    }
}

fn error_json(e: &Error) -> Value {
    json!({ "error": e.class(), "stage": stage_of(e), "message": e.root().to_string() })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> plectic::Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// A value as written by `integrate`, `plectic` and `point-side`.
fn value_document(p: u64, value: &TensorValue, precision: i64) -> Value {
    json!({
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "p": p,
        "precision": precision,
        "value": value.to_strings(),
        "display": value.to_string(),
    })
}

fn read_value(path: &Path) -> plectic::Result<(TensorValue, i64)> {
    let doc: Value = read_json(path)?;
    let bad = |what: &str| Error::Schema(format!("{}: {what}", path.display()));
    if doc["schema_version"].as_u64() != Some(OUTPUT_SCHEMA_VERSION as u64) {
        return Err(bad("missing or unsupported schema_version"));
    }
    let p = doc["p"].as_u64().ok_or_else(|| bad("missing p"))?;
    let coords: [String; 4] = serde_json::from_value(doc["value"].clone()).map_err(|e| bad(&e.to_string()))?;
    let value = TensorValue::from_strings(&coords, p)?;
    let precision = doc["precision"].as_i64().or(value.abs_prec()).unwrap_or(i64::MAX);
    Ok((value, precision))
}

struct Output {
    json: Value,
    text: String,
    code: u8,
}

impl Output {
    fn ok(json: Value, text: String) -> Self {
        Output { json, text, code: 0 }
    }
}

fn run(cli: &Cli) -> plectic::Result<Output> {
    match &cli.cmd {
        Command::CheckFixture { fixture } => {
            let fx = load_fixture(fixture)?;
            let t = fx.tree();
            let json = json!({
                "schema_version": OUTPUT_SCHEMA_VERSION,
                "label": fx.label,
                "p": t.p,
                "depth": fx.depth,
                "generators": fx.generators.len(),
                "additive_kappa": fx.kappa.is_additive(),
            });
            let text = format!("{}: p = {}, radial systems to depth {}, {} generators, ok", fx.label, t.p, fx.depth, fx.generators.len());
            Ok(Output::ok(json, text))
        }
        Command::Harmonize { run, out } => {
            let fx = load_fixture(&run.fixture)?;
            let h = harmonize(&fx, &ShapiroCocycle::new(&fx), &fx.psi, run.depth, run.prec)?;
            let dump = serde_json::to_string(&h.cochain.dump()).unwrap();
            let digest = h.cochain.digest();
            let json = json!({
                "schema_version": OUTPUT_SCHEMA_VERSION,
                "cochain_digest": digest,
                "solver": h.stats,
            });
            let text = match out {
                Some(path) => {
                    fs::write(path, &dump).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
                    format!("wrote {} ({digest})", path.display())
                }
                None => dump,
            };
            Ok(Output::ok(json, text))
        }
        Command::Integrate { run, cochain } => {
            let fx = load_fixture(&run.fixture)?;
            let dump: CochainDump = read_json(cochain)?;
            let c = FiniteCochain::from_dump(&dump)?;
            if c.m != run.depth {
                return Err(Error::DepthExceeded(format!("dump has depth {} but --depth is {}", c.m, run.depth)).at("integrate"));
            }
            let f = cycle_integrands(&fx).map_err(|e| e.at("cycle"))?;
            let r = riemann_log_integral(&c, [&f[0], &f[1]], run.prec).map_err(|e| e.at("integrate"))?;
            let mut json = value_document(fx.tree().p, &r.value, r.precision);
            json["integral"] = serde_json::to_value(&r.stats).unwrap();
            json["cochain_digest"] = json!(c.digest());
            Ok(Output::ok(json, r.value.to_string()))
        }
        Command::PointSide { fixture, prec } => {
            let spec: PointSideSpec = read_json(fixture)?;
            let r = point_side(&spec.to_input()?, *prec)?;
            let mut json = value_document(spec.p, &r.projected, r.projected.abs_prec().unwrap_or(*prec as i64));
            json["log_a"] = json!(r.log_a().to_string());
            Ok(Output::ok(json, r.projected.to_string()))
        }
        Command::Plectic { run } => {
            let fx = load_fixture(&run.fixture)?;
            let r = plectic_invariant(&fx, run.depth, run.prec)?;
            let mut json = value_document(fx.tree().p, &r.value, r.precision);
            json["report"] = serde_json::to_value(&r.report).unwrap();
            Ok(Output::ok(json, r.value.to_string()))
        }
        Command::Compare { value, golden, digits } => {
            let (a, pa) = read_value(value)?;
            let (b, pb) = read_value(golden)?;
            if a.prime() != b.prime() {
                return Err(Error::Schema(format!("primes differ: {} vs {}", a.prime(), b.prime())));
            }
            let (k, sym) = a.agreement_up_to_symmetry(&b);
            let need = digits.unwrap_or(pa.min(pb));
            let p = a.prime();
            let k_text = if k == i64::MAX { "all digits".to_string() } else { format!("O({p}^{k})") };
            let text = if k >= need {
                format!("agree to {k_text} under {sym}")
            } else {
                format!("disagree: agree only to {k_text} under {sym}, {need} digits required")
            };
            let json = json!({
                "schema_version": OUTPUT_SCHEMA_VERSION,
                "agreement": k,
                "required": need,
                "symmetry": sym.to_string(),
                "agree": k >= need,
            });
            Ok(Output { json, text, code: if k >= need { 0 } else { EXIT_MISMATCH } })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.exit_code() == 0 { 0 } else { EXIT_USAGE });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", json!({ "error": "Usage", "stage": "config", "message": e.to_string() }));
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(&cli) {
        Ok(out) => {
            if cli.emit_json {
                println!("{}", serde_json::to_string_pretty(&out.json).unwrap());
            } else {
                println!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use plectic::padic::Padic;

    #[test]
    fn exit_codes_are_distinct_and_nonzero() {
        let errs = [
            Error::Schema(String::new()),
            Error::Parse(String::new()),
            Error::InsufficientPrecision(String::new()),
            Error::NotASquare(String::new()),
            Error::InvalidPeriod(String::new()),
            Error::EmbeddingUnavailable(String::new()),
            Error::PrimeNotInert(String::new()),
            Error::NotMultiplicative(String::new()),
            Error::EmbeddingNotInert(String::new()),
            Error::OutOfDepth(0),
            Error::RadialContractViolation(String::new()),
            Error::DepthExceeded(String::new()),
            Error::OracleIncomplete(String::new()),
            Error::DegenerationUnderdetermined(String::new()),
            Error::LiftInconsistent(String::new()),
        ];
        let mut codes: Vec<u8> = errs.iter().map(exit_code).collect();
        assert!(codes.iter().all(|&c| c != 0 && c != EXIT_MISMATCH && c != EXIT_USAGE && c != 70));
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
        assert_eq!(exit_code(&Error::Schema("x".into()).at("load")), 2);
    }

    #[test]
    fn error_json_keeps_stage_and_root_message() {
        let e = Error::LiftInconsistent("no solution".into()).at("lift");
        let v = error_json(&e);
        assert_eq!(v["error"], "LiftInconsistent");
        assert_eq!(v["stage"], "lift");
        assert_eq!(v["message"], "lift inconsistent: no solution");
    }

    #[test]
    fn value_documents_round_trip() {
        let v = TensorValue::alpha_alpha(Padic::parse("2·3² + 3⁶ + O(3¹⁰)", 3).unwrap());
        let dir = std::env::temp_dir().join(format!("plectic-cli-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("v.json");
        fs::write(&path, value_document(3, &v, 10).to_string()).unwrap();
        let (w, prec) = read_value(&path).unwrap();
        assert_eq!(w, v);
        assert_eq!(prec, 10);
        fs::remove_dir_all(dir).unwrap();
    }
}

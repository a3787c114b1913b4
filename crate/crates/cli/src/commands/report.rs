//! Side-by-side tabulation of whatever artifacts a run directory contains.
//!
//! Artifacts are read as untyped JSON: non-finite numbers were written as
//! `null` and are shown as `n/a`.

use std::fmt::Write;
use std::path::Path;

use serde_json::Value;

use gencoupling::bounds::check_nse_threshold;

use crate::error::CliError;

const ARTIFACTS: [&str; 5] = ["summary.json", "certificate.json", "bounds.json", "hitting.json", "wasserstein.json"];

fn load(dir: &Path, name: &str) -> Result<Option<Value>, CliError> {
    let path = dir.join(name);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::Io(format!("{}: {e}", path.display()))),
    }
}

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.6}"),
        None => "n/a".into(),
    }
}

fn tag(v: &Value) -> &str {
    v.as_str().unwrap_or("?")
}

/// Renders the report for `dir`. Fails when no artifact is present or the
/// coupling summary describes an empty ensemble.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let mut found = Vec::new();
    for name in ARTIFACTS {
        found.push(load(dir, name)?);
    }
    if found.iter().all(Option::is_none) {
        return Err(CliError::Io(format!(
            "{}: no artifacts found (expected one of {})",
            dir.display(),
            ARTIFACTS.join(", ")
        )));
    }
    let [summary, certificate, bounds, hitting, wasserstein] = <[Option<Value>; 5]>::try_from(found).expect("five artifacts");
    let mut o = String::new();
    let _ = writeln!(o, "report for {}", dir.display());
    if let Some(s) = &summary {
        summary_section(&mut o, s)?;
    }
    if let Some(c) = &certificate {
        certificate_section(&mut o, c);
    }
    if let Some(b) = &bounds {
        let _ = writeln!(o, "\n[bounds] mass {}", num(&b["mass"]));
        for row in b["rows"].as_array().into_iter().flatten() {
            let inputs: Vec<String> = ["kl", "delta", "m_delta", "n"]
                .iter()
                .filter(|k| !row[**k].is_null())
                .map(|k| format!("{k} = {}", num(&row[*k])))
                .collect();
            let _ = writeln!(
                o,
                "  {:<22} {:<40} {}",
                tag(&row["bound"]["kind"]),
                inputs.join(", "),
                num(&row["bound"]["value"])
            );
        }
    }
    if let Some(h) = &hitting {
        let r = &h["report"];
        let _ = writeln!(
            o,
            "\n[hitting] radius {}, t0 {}: min probability {} +- {} at point {}, blow-ups {}",
            num(&h["radius"]),
            num(&h["t0"]),
            num(&r["min"]["mean"]),
            num(&r["min"]["std_err"]),
            r["argmin"],
            r["blowups"]
        );
    }
    if let Some(w) = &wasserstein {
        let _ = writeln!(
            o,
            "\n[wasserstein] t {}: W = {} (sampling floor {}, {} samples, cap {})",
            num(&w["t"]),
            num(&w["distance"]),
            num(&w["self_distance"]),
            w["samples"],
            num(&w["cap"])
        );
    }
    Ok(o)
}

fn nse_lines(o: &mut String, n: &Value) {
    let get = |k: &str| n[k].as_f64();
    if let (Some(nu), Some(f), Some(s2), Some(lambda)) =
        (get("nu"), get("forcing_norm_ahalf"), get("sigma_norm2"), get("lambda_next"))
    {
        let verdict = check_nse_threshold(nu, f, s2, lambda)
            .map(|h| if h { "holds" } else { "fails" }.to_string())
            .unwrap_or_else(|e| format!("undefined ({e})"));
        let _ = writeln!(
            o,
            "  zeta = {}, kappa = {}, lambda_(N+1) = {lambda}, threshold {verdict}",
            nu * lambda,
            4.0 / nu
        );
    }
}

fn summary_section(o: &mut String, s: &Value) -> Result<(), CliError> {
    if s["ensemble"].as_u64() == Some(0) {
        return Err(CliError::config("summary.json: empty ensemble (0 runs)"));
    }
    let _ = writeln!(
        o,
        "\n[couple] {} model, control {}, {} runs, T = {}, dt = {}",
        tag(&s["model"]),
        tag(&s["control"]),
        s["ensemble"],
        num(&s["t_end"]),
        num(&s["dt"])
    );
    if !s["nse"].is_null() {
        nse_lines(o, &s["nse"]);
    }
    for (key, label) in [("q_decay", "E q"), ("distance_decay", "E sqrt(q)")] {
        let f = &s[key];
        let _ = writeln!(o, "  rate of {label}: {} (r2 {})", num(&f["rate"]), num(&f["r2"]));
    }
    let d = &s["dissipativity"];
    if !d.is_null() {
        let _ = writeln!(
            o,
            "  dissipativity margin: worst {} with tol {}, {} violations of {}",
            num(&d["worst_margin"]),
            num(&d["tol"]),
            d["violations"],
            d["checked"]
        );
    }
    let e = &s["energy"];
    if !e.is_null() {
        let _ = writeln!(
            o,
            "  energy martingale: mean {} +- {}, z {}, consistent {}",
            num(&e["m_hat"]["mean"]),
            num(&e["m_hat"]["std_err"]),
            num(&e["z_score"]),
            e["mean_consistent"]
        );
    }
    let _ = writeln!(
        o,
        "  KL bound {} +- {}",
        num(&s["girsanov"]["kl"]["mean"]),
        num(&s["girsanov"]["kl"]["std_err"])
    );
    let tv = &s["tv"];
    let empirical = tv["empirical"].as_f64();
    let tolerance = tv["tolerance"].as_f64().unwrap_or(0.0);
    let _ = writeln!(o, "  {:<30} {:>10} {:>10}", "bound", "value", "empirical");
    for line in tv["bounds"].as_array().into_iter().flatten() {
        let name = match line["delta"].as_f64() {
            Some(d) => format!("{} ({d})", tag(&line["kind"])),
            None => tag(&line["kind"]).to_string(),
        };
        let value = line["bound"]["value"].as_f64();
        let flag = match (empirical, value) {
            (Some(e), Some(v)) if e > v + tolerance => format!("  VIOLATED beyond tolerance {tolerance}"),
            _ => String::new(),
        };
        let _ = writeln!(
            o,
            "  {name:<30} {:>10} {:>10}{flag}",
            num(&line["bound"]["value"]),
            num(&tv["empirical"])
        );
    }
    Ok(())
}

fn certificate_section(o: &mut String, c: &Value) {
    let _ = writeln!(o, "\n[certify] source {}", tag(&c["source"]));
    if !c["nse"].is_null() {
        nse_lines(o, &c["nse"]);
    }
    let k = &c["constants"];
    let _ = writeln!(
        o,
        "  zeta {}, kappa {}, mu {}, b {}, b1 {}, b2 {}; condition holds {}",
        num(&k["zeta"]),
        num(&k["kappa"]),
        num(&k["mu"]),
        num(&k["b"]),
        num(&k["b1"]),
        num(&k["b2"]),
        c["condition_holds"]
    );
    let cert = &c["certificate"];
    if cert.is_null() {
        let _ = writeln!(o, "  infeasible: {}", c["infeasible"].as_str().unwrap_or("unknown"));
    } else {
        let _ = writeln!(
            o,
            "  gamma {}, lambda {}, Q {}",
            num(&cert["gamma"]),
            num(&cert["lambda"]),
            num(&cert["q"])
        );
    }
}

//! Command bodies. Each returns the JSON report and whether every verdict held.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use poset_hdx::constructors::{from_facets, grassmannian, jitter_weights, posetify, posetify_weights, standard};
use poset_hdx::io::{load_facets, load_poset, PosetFile};
use poset_hdx::operators::{adjacency_operator, down_operator, down_up_walk, up_down_walk, up_operator, LinearOp};
use poset_hdx::poset::validate_poset;
use poset_hdx::properties::{check_al, check_tl, check_ul, constants_from_regularity, detect_regularity};
use poset_hdx::spectral::{
    certify_eposet, certify_one_sided, certify_two_sided, link_spectra, local_connectivity, two_sided_lambda,
    weighted_spectrum, EposetConstants, ExpansionCertificate,
};
use poset_hdx::theorems::*;
use poset_hdx::{HdxError, WeightedPoset};

use crate::options::{EposetMode, Options};

pub struct Outcome {
    pub report: Value,
    pub ok: bool,
}

fn summary(wp: &WeightedPoset) -> Value {
    let levels: Vec<usize> = (-1..=wp.d()).map(|i| wp.poset.level_size(i)).collect();
    json!({"d": wp.d(), "levels": levels, "elements": wp.poset.len(), "standard": wp.is_standard()})
}

fn input(o: &Options) -> Result<WeightedPoset> {
    let path = o.poset.as_deref().ok_or_else(|| anyhow!("no poset file given"))?;
    load_poset(path).with_context(|| format!("loading {}", path.display()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn build(o: &Options) -> Result<(WeightedPoset, Option<usize>)> {
    let sources = [o.grassmannian.is_some(), o.facets.is_some(), o.posetify.is_some()];
    if sources.iter().filter(|&&b| b).count() != 1 {
        bail!("build needs exactly one of --grassmannian, --facets, --posetify");
    }
    let (wp, thickness) = if let Some(g) = &o.grassmannian {
        (standard(grassmannian(g.q, g.n, g.d)?.poset)?, None)
    } else if let Some(path) = &o.facets {
        let x = load_facets(path).with_context(|| format!("reading {}", path.display()))?;
        (standard(from_facets(&x)?)?, Some(x.thickness()))
    } else {
        let p = o.posetify.as_ref().expect("checked above");
        let x = load_facets(&p.facets).with_context(|| format!("reading {}", p.facets.display()))?;
        let vx = posetify(&x, p.q)?;
        (posetify_weights(&vx, &x, None)?, Some(x.thickness()))
    };
    let wp = match o.jitter {
        Some(rel) => jitter_weights(&wp, rel, rel, o.seed.unwrap_or(DEFAULT_SEED)),
        None => wp,
    };
    Ok((wp, thickness))
}

pub fn build_report(wp: &WeightedPoset) -> Value {
    to_value(&PosetFile::from_weighted(wp))
}

pub fn validate(o: &Options) -> Result<Outcome> {
    let wp = input(o)?;
    let rep = validate_poset(&wp.poset, &wp.weights);
    let ok = rep.is_valid();
    Ok(Outcome { report: json!({"poset": summary(&wp), "valid": ok, "violations": rep.violations}), ok })
}

fn auto_eposet(wp: &WeightedPoset) -> Result<ExpansionCertificate> {
    // the forward bound is the natural target when the poset meets its hypotheses
    let lambda = match eposet_forward(wp) {
        Ok(b) => b.bound + 1e-9,
        Err(_) => two_sided_lambda(wp)?,
    };
    Ok(certify_eposet(wp, lambda, EposetConstants::Fitted)?)
}

pub fn certify(o: &Options) -> Result<Outcome> {
    let wp = input(o)?;
    let mut certs = Vec::new();
    if let Some(c) = o.one_sided {
        certs.push(certify_one_sided(&wp, c.lambda)?);
    }
    if let Some(c) = o.two_sided {
        certs.push(certify_two_sided(&wp, c.nu, c.lambda)?);
    }
    match &o.eposet {
        None => {}
        Some(EposetMode::Auto) => certs.push(auto_eposet(&wp)?),
        Some(EposetMode::Regular) => {
            let lambda = eposet_forward(&wp)?.bound + 1e-9;
            certs.push(certify_eposet(&wp, lambda, EposetConstants::Regular)?);
        }
        Some(EposetMode::Lambda(l)) => certs.push(certify_eposet(&wp, *l, EposetConstants::Fitted)?),
    }
    if certs.is_empty() {
        bail!("certify needs at least one of --one-sided, --two-sided, --eposet");
    }
    let ok = certs.iter().all(|c| c.verdict);
    let report = json!({
        "poset": summary(&wp),
        "certificates": certs,
        "properties": properties(&wp),
        "verdict": ok,
    });
    Ok(Outcome { report, ok })
}

fn or_reason<T: Serialize>(r: poset_hdx::Result<T>) -> Value {
    match r {
        Ok(v) => to_value(&v),
        Err(e) => json!({"unavailable": e.to_string()}),
    }
}

fn properties(wp: &WeightedPoset) -> Value {
    let reg = detect_regularity(&wp.poset);
    json!({
        "ul": check_ul(wp),
        "al": or_reason(check_al(wp)),
        "tl": or_reason(check_tl(wp)),
        "predicted_constants": or_reason(constants_from_regularity(&reg)),
        "regularity": reg,
    })
}

pub fn report(o: &Options) -> Result<Outcome> {
    let wp = input(o)?;
    let mut props = properties(&wp);
    props["connectivity"] = or_reason(local_connectivity(&wp));
    props["two_sided_lambda"] = or_reason(two_sided_lambda(&wp));
    let valid = validate_poset(&wp.poset, &wp.weights);
    props["validation"] = json!({"valid": valid.is_valid(), "violations": valid.violations});
    Ok(Outcome { report: json!({"poset": summary(&wp), "report": props}), ok: true })
}

pub const CHECKS: &[&str] = &[
    "basic-localization",
    "up-localization",
    "adjacency-localization",
    "trickling-localization",
    "decomposition",
    "alev-lau",
    "trickle",
    "eposet",
    "eposet-decomposition",
    "posetification",
];

#[derive(Serialize)]
struct CheckEntry {
    check: String,
    instance: Value,
    #[serde(flatten)]
    result: BoundCheck,
}

#[derive(Serialize)]
struct Skip {
    check: String,
    instance: Value,
    reason: String,
}

/// Errors that mean "this theorem does not apply here" rather than a fault.
fn skippable(e: &HdxError) -> bool {
    matches!(
        e,
        HdxError::HypothesesUnmet(_)
            | HdxError::NonStandardScheme
            | HdxError::ALViolated(_)
            | HdxError::TLViolated(_)
            | HdxError::MissingULReport(_)
            | HdxError::MissingRegularity(_)
            | HdxError::BadRank(_)
            | HdxError::NotInjective(..)
    )
}

struct Run {
    checks: Vec<CheckEntry>,
    skipped: Vec<Skip>,
}

impl Run {
    fn record(&mut self, check: &str, instance: Value, r: poset_hdx::Result<BoundCheck>) -> Result<()> {
        match r {
            Ok(result) => self.checks.push(CheckEntry { check: check.into(), instance, result }),
            Err(e) if skippable(&e) => self.skipped.push(Skip { check: check.into(), instance, reason: e.to_string() }),
            Err(e) => return Err(e).with_context(|| format!("{check} {instance}")),
        }
        Ok(())
    }
}

fn trickle_check(wp: &WeightedPoset) -> poset_hdx::Result<BoundCheck> {
    let t = trickle_verify(wp)?;
    let root = t.levels.last();
    Ok(BoundCheck {
        theorem: "trickling-down".into(),
        bound: root.map(|r| r.hi).unwrap_or(t.top_hi),
        measured: root.map(|r| r.measured_max).unwrap_or(t.top_hi),
        verdict: t.verdict,
        details: to_value(&t),
    })
}

fn eposet_decomposition_check(wp: &WeightedPoset, l: i32, seed: u64) -> poset_hdx::Result<BoundCheck> {
    let f = random_cochain(wp, l, seed);
    let dec = eposet_decomposition(wp, l, &f, None)?;
    Ok(BoundCheck {
        theorem: "eposet-decomposition".into(),
        bound: IDENTITY_TOL,
        measured: dec.reconstruction_residual,
        verdict: dec.reconstruction_residual < IDENTITY_TOL,
        details: json!({
            "seed": seed,
            "component_norms": dec.component_norms,
            "near_eigenvalues": dec.near_eigenvalues,
            "orthogonality_defect": dec.orthogonality_defect,
            "near_eigen_residuals": dec.near_eigen_residuals,
        }),
    })
}

fn posetification_check(path: &Path, q: usize) -> Result<BoundCheck> {
    let x = load_facets(path).with_context(|| format!("reading {}", path.display()))?;
    let rep = posetification_certificate(&x, q)?;
    Ok(BoundCheck {
        theorem: "posetification".into(),
        bound: -1.0 / q as f64,
        measured: rep.lambda_min,
        verdict: rep.verdict,
        details: to_value(&rep),
    })
}

pub fn verify(o: &Options) -> Result<Outcome> {
    let wp = input(o)?;
    let d = wp.d();
    let trials = o.trials.unwrap_or(DEFAULT_TRIALS);
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let selected: Vec<String> = match &o.only {
        Some(list) => {
            for name in list {
                if !CHECKS.contains(&name.as_str()) {
                    bail!("unknown check {name:?} (expected one of {})", CHECKS.join(", "));
                }
            }
            list.clone()
        }
        None => CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    let want = |name: &str| selected.iter().any(|s| s == name);
    let reg = detect_regularity(&wp.poset);
    let ul = check_ul(&wp);
    let mut run = Run { checks: Vec::new(), skipped: Vec::new() };

    if want("basic-localization") {
        for k in -1..d {
            for l in k + 1..=d {
                let r = verify_basic_localization(&wp, k, l, trials, seed).map(|r| r.to_bound_check());
                run.record("basic-localization", json!({"k": k, "l": l}), r)?;
            }
        }
    }
    if want("up-localization") {
        for l in 0..d {
            let r = verify_up_localization(&wp, &ul, l, trials, seed).map(|r| r.to_bound_check());
            run.record("up-localization", json!({"l": l}), r)?;
        }
    }
    if want("adjacency-localization") {
        for l in 0..d {
            let r = verify_adjacency_localization(&wp, l, trials, seed).map(|r| r.to_bound_check());
            run.record("adjacency-localization", json!({"l": l}), r)?;
        }
    }
    if want("trickling-localization") {
        let r = verify_hat_mean(&wp, trials, seed).map(|r| r.to_bound_check());
        run.record("trickling-localization", json!({"part": "mean"}), r)?;
        let r = verify_trickling_localization(&wp, trials, seed).map(|r| r.to_bound_check());
        run.record("trickling-localization", json!({"part": "all"}), r)?;
    }
    if want("decomposition") {
        for k in 1..d {
            let alphas = match &o.alphas {
                Some(a) if a.len() > k as usize => a[..=k as usize].to_vec(),
                Some(a) => bail!("--alphas needs at least {} values for level {k}, got {}", k + 1, a.len()),
                None => default_alphas(&reg, k),
            };
            let r = bound_up_norm(&wp, &ul, k, &alphas);
            run.record("decomposition", json!({"k": k}), r)?;
        }
    }
    if want("alev-lau") {
        for l in 1..d {
            run.record("alev-lau", json!({"l": l}), alev_lau_bound(&wp, l))?;
        }
    }
    if want("trickle") {
        run.record("trickle", Value::Null, trickle_check(&wp))?;
    }
    if want("eposet") {
        run.record("eposet", json!({"direction": "forward"}), eposet_forward(&wp))?;
        run.record("eposet", json!({"direction": "converse"}), eposet_converse(&wp))?;
    }
    if want("eposet-decomposition") {
        for l in 1..=d {
            run.record("eposet-decomposition", json!({"l": l}), eposet_decomposition_check(&wp, l, seed))?;
        }
    }
    if want("posetification") {
        match &o.posetify {
            Some(p) => {
                let c = posetification_check(&p.facets, p.q)?;
                run.checks.push(CheckEntry { check: "posetification".into(), instance: json!({"q": p.q}), result: c });
            }
            None => run.skipped.push(Skip {
                check: "posetification".into(),
                instance: Value::Null,
                reason: "no --posetify facet list given".into(),
            }),
        }
    }

    let ok = run.checks.iter().all(|c| c.result.verdict);
    let report = json!({
        "poset": summary(&wp),
        "seed": seed,
        "trials": trials,
        "checks": run.checks,
        "skipped": run.skipped,
        "verdict": ok,
    });
    Ok(Outcome { report, ok })
}

fn operator(wp: &WeightedPoset, name: &str, k: i32) -> Result<LinearOp> {
    Ok(match name {
        "up" => up_operator(wp, k)?,
        "down" => down_operator(wp, k)?,
        "m-plus" => up_down_walk(wp, k)?,
        "m-minus" => down_up_walk(wp, k)?,
        "adjacency" => adjacency_operator(wp, k)?,
        _ => bail!("unknown operator {name:?} (expected up, down, m-plus, m-minus, adjacency)"),
    })
}

pub fn spectrum(o: &Options) -> Result<Outcome> {
    let wp = input(o)?;
    let d = wp.d();
    if let Some(name) = &o.dump {
        let k = o.level.ok_or_else(|| anyhow!("--dump needs --level"))?;
        let (text, index) = operator(&wp, name, k)?.dump(&wp);
        let rows: Vec<&str> = text.lines().collect();
        return Ok(Outcome { report: json!({"operator": name, "level": k, "index": index, "matrix": rows}), ok: true });
    }
    let levels: Vec<i32> = match o.level {
        Some(k) => vec![k],
        None => (-1..=d).collect(),
    };
    let mut out = Vec::new();
    for k in levels {
        let mut entry = json!({"level": k});
        for name in ["m-plus", "m-minus", "adjacency"] {
            entry[name] = match operator(&wp, name, k) {
                Ok(op) => to_value(&weighted_spectrum(&op)?),
                Err(e) if e.downcast_ref::<HdxError>().is_some() => json!({"unavailable": e.to_string()}),
                Err(e) => return Err(e),
            };
        }
        out.push(entry);
    }
    let links: Vec<Value> = link_spectra(&wp)?
        .into_iter()
        .map(|ls| {
            json!({
                "link": ls.label,
                "rank": ls.rank,
                "connected": ls.connected,
                "lambda_2": ls.spectrum.lambda_2,
                "lambda_min": ls.spectrum.lambda_min,
                "eigenvalues": ls.spectrum.eigenvalues,
            })
        })
        .collect();
    Ok(Outcome { report: json!({"poset": summary(&wp), "levels": out, "links": links}), ok: true })
}

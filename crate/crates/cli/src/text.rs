//! Human-readable rendering of a JSON report.

use std::fmt::Write;

use serde_json::Value;

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if v.is_f64() => format!("{x:.6e}"),
        Some(_) => v.to_string(),
        None => "-".into(),
    }
}

fn kind_with_k(v: &Value) -> String {
    let kind = v["kind"].as_str().or(v["verdict"].as_str()).unwrap_or("?");
    match v["k"].as_u64() {
        Some(k) => format!("{kind} k={k}"),
        None => kind.to_string(),
    }
}

fn clusters(v: &Value) -> String {
    v.as_array()
        .map(|cs| {
            cs.iter()
                .map(|c| format!("{:.8} (x{})", c["value"].as_f64().unwrap_or(f64::NAN), c["multiplicity"]))
                .collect::<Vec<_>>()
                .join(", ")
        })
        .unwrap_or_default()
}

pub fn render(report: &Value) -> String {
    let mut out = String::new();
    let agg = &report["aggregate"];
    let points = report["points"].as_array().map_or(&[][..], |p| p.as_slice());
    let surface = &report["config"]["surface"];
    let _ = writeln!(out, "chart: {} (n={}, nu={})", agg["chart"].as_str().unwrap_or("?"), surface["n"], surface["nu"]);
    let _ = writeln!(out, "points: {} ({})", agg["sample_count"], agg["sample_note"].as_str().unwrap_or(""));
    match agg["command"].as_str() {
        Some("classify") => {
            let c = &agg["consensus"];
            let _ = writeln!(out, "consensus: {}", kind_with_k(c));
            if let Some(d) = c["diagnostic"].as_str() {
                let _ = writeln!(out, "  note: {d}");
            }
            if let Some(first) = points.first() {
                let _ = writeln!(out, "clusters at first point: {}", clusters(&first["clusters"]));
            }
            let dims: Vec<u64> = points.iter().filter_map(|p| p["algebra_dim"].as_u64()).collect();
            if let (Some(lo), Some(hi)) = (dims.iter().min(), dims.iter().max()) {
                let _ = writeln!(out, "algebra dimension: {}", if lo == hi { lo.to_string() } else { format!("{lo}..{hi}") });
            }
            let s = &agg["split"];
            if s.is_object() {
                let _ = writeln!(
                    out,
                    "case {}: Lambda={} Theta={} |nu+Lambda*Theta|={} factor curvatures {}",
                    s["case"].as_str().unwrap_or("?"),
                    num(&s["lambda"]),
                    num(&s["theta"]),
                    num(&s["relation_residual"]),
                    s["factor_curvatures"].as_array().map(|v| v.iter().map(num).collect::<Vec<_>>().join(", ")).unwrap_or_default()
                );
                if !s["gamma_aan"].is_null() {
                    let _ = writeln!(out, "  |Gamma_aan| = {}", num(&s["gamma_aan"]));
                }
                if let Some(d) = s["diagnostic"].as_str() {
                    let _ = writeln!(out, "  note: {d}");
                }
            }
            if agg["flat_anywhere"].as_bool() == Some(true) {
                let _ = writeln!(out, "flat at some sampled points");
            }
            for d in agg["flatness_contradictions"].as_array().into_iter().flatten() {
                let _ = writeln!(out, "warning: {}", d.as_str().unwrap_or(""));
            }
            let e = &agg["expected"];
            if e.is_object() {
                let verdict = if e["matches"].as_bool() == Some(true) { "matches" } else { "DIFFERS" };
                let _ = writeln!(out, "expected: {} ({verdict})", kind_with_k(e));
            }
        }
        Some("verify") => {
            let r = &agg["residual_max"];
            let o = &agg["h_doubling_order"];
            let _ = writeln!(out, "codazzi max {} (h-doubling order {})", num(&r["codazzi"]), num(&o["codazzi"]));
            let _ = writeln!(out, "bianchi max {} (h-doubling order {})", num(&r["bianchi"]), num(&o["bianchi"]));
            let _ = writeln!(out, "gauss   max {}", num(&r["gauss"]));
            let _ = writeln!(out, "loop    max {}", num(&r["loop"]));
            let _ = writeln!(out, "all within tolerance: {}", agg["all_pass"]);
        }
        _ => {}
    }
    out
}

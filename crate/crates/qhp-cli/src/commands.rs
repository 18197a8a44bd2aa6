//! The subcommands. Everything is computed before anything is written, so a
//! failing run leaves no partial output.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Result};
use serde_json::Value;

use qhp_core::asymptotics::{beta0, J0Dependence, constant_a, constant_b, constant_d, continuum_constant, law, rho};
use qhp_core::kernel::{beta_ratio, kappa, theta};
use qhp_core::method::{MethodRegistry, Model};
use qhp_core::walk::ClassTag;

use crate::args::{parse_range, CheckArgs, CompareArgs, ConstantsArgs, ProbArgs, ReportFormat};
use crate::output::{fmt_f64, write_comparisons, write_rows, Comparison, Row};
use crate::EXIT_NUMERICAL;

fn emit(path: Option<&std::path::Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn report_text(entries: &[(String, String)]) -> String {
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k:<width$}  {v}");
    }
    s
}

fn report_json(entries: &[(String, String)]) -> String {
    let m: serde_json::Map<String, Value> = entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    format!("{}\n", serde_json::to_string_pretty(&Value::Object(m)).unwrap())
}

fn render(entries: &[(String, String)], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => report_text(entries),
        ReportFormat::Json => report_json(entries),
    }
}

pub fn check(a: &CheckArgs) -> Result<u8> {
    let p = a.model.load()?;
    let m = Model::new(&p);
    let r = &m.class.report;
    let d = p.drift();
    let mut e: Vec<(String, String)> = vec![
        ("walk".into(), p.to_json()),
        ("class".into(), m.class.tag.to_string()),
        ("H1".into(), r.h1.to_string()),
        ("H2".into(), r.h2.to_string()),
        ("H3".into(), r.h3.to_string()),
        ("H4".into(), r.h4.to_string()),
        ("H2'".into(), r.h2prime.to_string()),
        ("drift".into(), format!("{} {}", fmt_f64(d.mx), fmt_f64(d.my))),
    ];
    for (n, msg) in r.messages.iter().enumerate() {
        e.push((format!("note{}", n + 1), msg.clone()));
    }
    if let (Ok(th), Ok(beta)) = (theta(&p), beta_ratio(&p)) {
        e.push(("theta".into(), fmt_f64(th)));
        e.push(("beta".into(), fmt_f64(beta)));
    }
    match &m.kernel {
        Ok(k) => {
            let roots = |rs: &[qhp_core::kernel::Root]| rs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
            e.push(("x1..x4".into(), roots(&k.bp.x)));
            e.push(("y1..y4".into(), roots(&k.bp.y)));
        }
        Err(err) => e.push(("kernel".into(), err.to_string())),
    }
    let mut code = 0;
    match (&m.kernel, &m.gluing) {
        (Ok(k), Ok(g)) => {
            e.push(("gluing".into(), format!("{:?}", g.kind)));
            let (at, order) = g.pole();
            e.push(("pole".into(), format!("{} order {}", fmt_f64(at), fmt_f64(order))));
            match g.verify(k, a.samples) {
                Ok(rep) => {
                    e.push(("mismatch".into(), fmt_f64(rep.max_mismatch)));
                    e.push(("mismatch_abs".into(), fmt_f64(rep.max_abs_mismatch)));
                    e.push(("samples".into(), rep.samples.to_string()));
                }
                Err(err) => {
                    e.push(("mismatch".into(), format!("failed: {err}")));
                    code = EXIT_NUMERICAL;
                }
            }
        }
        (_, Err(err)) => e.push(("gluing".into(), err.status().to_string())),
        (Err(_), Ok(_)) => unreachable!("gluing is built from the kernel"),
    }
    emit(None, render(&e, a.format).as_bytes())?;
    Ok(code)
}

pub fn constants(a: &ConstantsArgs) -> Result<u8> {
    let p = a.model.load()?;
    let m = Model::new(&p);
    let k = m.kernel()?;
    let mut e: Vec<(String, String)> = vec![("class".into(), m.class.tag.to_string())];
    let num = |r: qhp_core::Result<f64>| r.map(fmt_f64).unwrap_or_else(|err| err.status().to_string());
    match m.class.tag {
        ClassTag::ZeroZero => {
            e.push(("A".into(), num(constant_a(k))));
            e.push(("A_continuum".into(), num(continuum_constant(&p))));
            e.push(("theta".into(), num(theta(&p))));
            e.push(("beta".into(), num(beta_ratio(&p))));
            e.push(("kappa".into(), num(kappa(&p))));
        }
        ClassTag::NegZero => {
            e.push(("D".into(), num(constant_d(k))));
            e.push(("x2".into(), fmt_f64(k.bp.x2())));
        }
        ClassTag::NegNeg | ClassTag::H2Prime => {
            e.push(("rho".into(), num(rho(k))));
            match m.gluing() {
                Ok(g) => {
                    e.push(("beta0".into(), num(beta0(g))));
                    e.push((format!("B({})", a.j0), num(constant_b(k, g, a.j0))));
                }
                Err(err) => e.push((format!("B({})", a.j0), err.status().to_string())),
            }
        }
        ClassTag::Unsupported => {}
    }
    if let Ok(l) = law(k, m.gluing().ok(), a.j0) {
        let j = match l.j0_dependence {
            J0Dependence::LinearInJ0 => "j0 * ",
            J0Dependence::BakedIn(_) => "",
        };
        e.push(("law".into(), format!("{} * {j}{}^i0 / i0^{}", fmt_f64(l.constant), fmt_f64(l.rho), l.power)));
    }
    emit(None, render(&e, a.format).as_bytes())?;
    Ok(0)
}

type Points = Vec<(u32, u32)>;

/// Runs every method on the cartesian product of the start ranges, rows in
/// `(i0, j0, method)` order. Fails with an input error before producing
/// anything if a row was rejected as input.
fn run_rows(a: &ProbArgs) -> Result<(Vec<Row>, Points)> {
    let p = a.model.load()?;
    let cfg = a.knobs.config()?;
    let is = parse_range(&a.i0)?;
    let js = parse_range(&a.j0)?;
    let points: Vec<(u32, u32)> = is.iter().flat_map(|&i| js.iter().map(move |&j| (i, j))).collect();
    let registry = MethodRegistry::default();
    let mut names: Vec<&str> = a.method.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    names.sort_unstable();
    names.dedup();
    if names.is_empty() {
        bail!("at least one --method is required");
    }
    let methods = names.iter().map(|n| registry.get(n)).collect::<qhp_core::Result<Vec<_>>>()?;
    let model = Model::new(&p);

    let mut rows = Vec::with_capacity(points.len() * methods.len());
    for method in methods {
        let t0 = Instant::now();
        let results = method.estimate_many(&model, &points, &cfg);
        let share = (t0.elapsed().as_millis() as u64) / points.len().max(1) as u64;
        let runtime_ms = if a.deterministic { 0 } else { share };
        for (&(i0, j0), res) in points.iter().zip(results) {
            let row = match res {
                Ok(est) => Row {
                    i0,
                    j0,
                    method: method.name().into(),
                    value: est.value,
                    err_lo: est.lo,
                    err_hi: est.hi,
                    status: "ok".into(),
                    runtime_ms,
                    message: None,
                    detail: est.detail,
                },
                Err(err) if err.is_input_error() => {
                    return Err(anyhow::Error::new(err).context(format!("{} at ({i0},{j0})", method.name())));
                }
                Err(err) => Row {
                    i0,
                    j0,
                    method: method.name().into(),
                    value: f64::NAN,
                    err_lo: f64::NAN,
                    err_hi: f64::NAN,
                    status: err.status().into(),
                    runtime_ms,
                    message: Some(err.to_string()),
                    detail: Value::Null,
                },
            };
            rows.push(row);
        }
    }
    rows.sort_by(|x, y| (x.i0, x.j0, &x.method).cmp(&(y.i0, y.j0, &y.method)));
    Ok((rows, points))
}

/// Unsupported method/class pairs are reported in-row and are not failures.
fn numerical_failure(rows: &[Row]) -> bool {
    const NOT_APPLICABLE: [&str; 3] = ["WrongClass", "NoExplicitGluing", "Unsupported"];
    rows.iter().any(|r| !r.ok() && !NOT_APPLICABLE.contains(&r.status.as_str()))
}

pub fn prob(a: &ProbArgs) -> Result<u8> {
    let (rows, _) = run_rows(a)?;
    let mut buf = Vec::new();
    write_rows(&mut buf, &rows, a.format)?;
    emit(a.output.as_deref(), &buf)?;
    Ok(if numerical_failure(&rows) { EXIT_NUMERICAL } else { 0 })
}

fn discrepancy(x: f64, y: f64, relative: bool) -> f64 {
    let d = (x - y).abs();
    if relative {
        let scale = x.abs().max(y.abs());
        if scale == 0.0 {
            0.0
        } else {
            d / scale
        }
    } else {
        d
    }
}

pub fn compare(a: &CompareArgs) -> Result<u8> {
    if !(a.tol >= 0.0 && a.tol.is_finite()) {
        bail!("--tol must be a nonnegative number");
    }
    let mut distinct = a.run.method.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        bail!("compare needs at least two methods");
    }
    let (rows, points) = run_rows(&a.run)?;
    let mut out = Vec::with_capacity(points.len());
    let mut points = points;
    points.sort_unstable();
    for (i0, j0) in points {
        let here: Vec<&Row> = rows.iter().filter(|r| r.i0 == i0 && r.j0 == j0 && r.ok()).collect();
        let mut worst: f64 = if here.len() < 2 { f64::NAN } else { 0.0 };
        for (n, x) in here.iter().enumerate() {
            for y in &here[n + 1..] {
                worst = worst.max(discrepancy(x.value, y.value, a.relative));
            }
        }
        out.push(Comparison {
            i0,
            j0,
            methods: here.iter().map(|r| r.method.clone()).collect(),
            max_discrepancy: worst,
            tol: a.tol,
            pass: worst <= a.tol,
        });
    }
    let mut buf = Vec::new();
    write_comparisons(&mut buf, &out, a.run.format)?;
    emit(a.run.output.as_deref(), &buf)?;
    if numerical_failure(&rows) {
        return Ok(EXIT_NUMERICAL);
    }
    Ok(if out.iter().all(|c| c.pass) { 0 } else { EXIT_NUMERICAL })
}

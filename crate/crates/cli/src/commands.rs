use std::error::Error;
use std::path::Path;

use ptolemy_core::angle::{angle_axiom_suite, weak_angle_profile, AngleError};
use ptolemy_core::completion::{complete_k, dyadic_chain, midpoint_set, CompletionError, PairTree, Selector};
use ptolemy_core::io::{
    iterate_to_json, load_json, load_space, space_to_csv, space_to_json, trace_config_from_json, AnySpace,
};
use ptolemy_core::model::{flatness_embed, gen_cloud, gen_concyclic, gen_paper_four_point, Norm, NormedPlane};
use ptolemy_core::ptolemy::{check_convexity_all, check_mobius_equivalence};
use ptolemy_core::trace::{bigon_trace, BigonConfig};
use ptolemy_core::{check_ptolemy, validate_metric, Exact, FiniteMetricSpace, Mode, Scalar, Strategy};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Check, Cli, Command, Format, Gen, Global};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

enum Output {
    Json(Value),
    Text(String),
}

struct Outcome {
    passed: bool,
    output: Output,
}

impl Outcome {
    fn json(passed: bool, doc: Value) -> Self {
        Self {
            passed,
            output: Output::Json(doc),
        }
    }
}

macro_rules! on_space {
    ($space:expr, $s:ident => $body:expr) => {
        match $space {
            AnySpace::Exact($s) => $body,
            AnySpace::Float($s) => $body,
        }
    };
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

fn with_fields(mut doc: Value, fields: Value) -> Value {
    if let (Value::Object(d), Value::Object(f)) = (&mut doc, fields) {
        d.extend(f);
    }
    doc
}

/// Runs the command and writes its output; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let (name, arguments, outcome) = dispatch(&cli.command, g)?;
    let text = match outcome.output {
        Output::Json(doc) => {
            let config = with_fields(json!({ "command": name, "arguments": arguments }), to_value(g));
            let doc = match doc {
                Value::Object(_) => with_fields(doc, json!({ "config": config })),
                other => other,
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            text
        }
        Output::Text(text) => text,
    };
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(outcome.passed)
}

fn dispatch(command: &Command, g: &Global) -> Result<(String, Value, Outcome)> {
    let tol = g.tolerance;
    Ok(match command {
        Command::Validate { input } => {
            let space = load_space(input, g.mode)?;
            let outcome = on_space!(&space, s => {
                let report = validate_metric(s, tol);
                let doc = json!({ "check": "validate", "space": s.name(), "mode": space.mode() });
                Outcome::json(report.passed, with_fields(doc, to_value(&report)))
            });
            ("validate".into(), json!({ "input": input }), outcome)
        }
        Command::Check(check) => run_check(check, g)?,
        Command::Complete { input, levels, format } => {
            let space = load_space(input, g.mode)?;
            let output = on_space!(&space, s => {
                let iterate = complete_k(s, *levels, g.cap)?;
                match format {
                    Format::Json => Output::Json(iterate_to_json(&iterate)),
                    Format::Csv => Output::Text(space_to_csv(&iterate.space)),
                }
            });
            let args = json!({ "input": input, "levels": levels, "format": format });
            ("complete".into(), args, Outcome { passed: true, output })
        }
        Command::Midpoints { input, x, y } => {
            let space = load_space(input, g.mode)?;
            let doc = on_space!(&space, s => {
                let (xi, yi) = (s.index_of(x)?, s.index_of(y)?);
                let mids: Vec<&str> = midpoint_set(s, xi, yi, tol).into_iter().map(|m| s.label(m)).collect();
                json!({
                    "check": "midpoints",
                    "space": s.name(),
                    "mode": space.mode(),
                    "x": x,
                    "y": y,
                    "half_distance": s.dist(xi, yi).half().to_json(),
                    "midpoints": mids,
                })
            });
            ("midpoints".into(), json!({ "input": input, "x": x, "y": y }), Outcome::json(true, doc))
        }
        Command::Geodesic {
            input,
            x,
            y,
            levels,
            selector,
        } => {
            let space = load_space(input, g.mode)?;
            let selector_value = parse_selector(selector)?;
            let outcome = on_space!(&space, s => geodesic(s, x, y, *levels, &selector_value, g)?);
            let args = json!({ "input": input, "x": x, "y": y, "levels": levels, "selector": selector });
            ("geodesic".into(), args, outcome)
        }
        Command::Embed { input, max_dim } => {
            let space = load_space(input, g.mode)?;
            let result = on_space!(&space, s => flatness_embed(s, *max_dim, tol));
            let doc = with_fields(json!({ "check": "embed", "space": space_name(&space) }), to_value(&result));
            ("embed".into(), json!({ "input": input, "max_dim": max_dim }), Outcome::json(result.success, doc))
        }
        Command::Angles {
            norm,
            u,
            v,
            scales,
            normalize,
            directions,
            angular_tol,
        } => {
            let plane = NormedPlane::new(parse_norm(norm)?);
            let grid = parse_list(scales)?;
            let args = json!({
                "norm": norm, "u": u, "v": v, "scales": grid, "normalize": normalize,
                "directions": directions, "angular_tol": angular_tol,
            });
            let unit = |d: [f64; 2]| if *normalize { plane.normalize(d) } else { d };
            let outcome = if let Some(dirs) = directions {
                let dirs: Vec<[f64; 2]> = dirs
                    .split(';')
                    .map(|d| parse_vector(d).map(unit))
                    .collect::<Result<_>>()?;
                match angle_axiom_suite(&plane, &dirs, &grid, *angular_tol) {
                    Ok(report) => Outcome::json(report.passed, to_value(&report)),
                    Err(AngleError::NoWeakAngle { i, j, gap, ratios }) => Outcome::json(
                        false,
                        json!({
                            "check": "angle-axioms",
                            "passed": false,
                            "missing_weak_angle": { "directions": [i, j], "gap": gap, "ratios": ratios },
                        }),
                    ),
                    Err(e) => return Err(e.into()),
                }
            } else {
                let (Some(u), Some(v)) = (u, v) else {
                    return Err("angles needs --u and --v, or --directions".into());
                };
                let (u, v) = (unit(parse_vector(u)?), unit(parse_vector(v)?));
                let profile = weak_angle_profile(&plane, u, v, &grid, *angular_tol)?;
                Outcome::json(profile.passed(), to_value(&profile))
            };
            ("angles".into(), args, outcome)
        }
        Command::Gen(generator) => {
            let (name, args, space, cloud) = match generator {
                Gen::Paper4 => ("gen paper4", json!({}), AnySpace::Exact(gen_paper_four_point()), None),
                Gen::Cloud { n, dim, norm } => {
                    let generated = gen_cloud(*n, *dim, parse_norm(norm)?, g.seed)?;
                    let args = json!({ "n": n, "dim": dim, "norm": norm });
                    ("gen cloud", args, AnySpace::Float(generated.space), Some(generated.cloud))
                }
                Gen::Concyclic { angles, radius } => {
                    let angles = parse_list(angles)?;
                    let generated = gen_concyclic(&angles, *radius)?;
                    let args = json!({ "angles": angles, "radius": radius });
                    ("gen concyclic", args, AnySpace::Float(generated.space), Some(generated.cloud))
                }
            };
            let space = convert_mode(space, g.mode)?;
            let mut doc = space.to_json();
            if let Some(cloud) = cloud {
                doc["cloud"] = to_value(&cloud);
            }
            (name.into(), args, Outcome::json(true, doc))
        }
        Command::Report { input } => {
            let doc = load_json(input)?;
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            let outcome = Outcome {
                passed: true,
                output: Output::Text(text),
            };
            ("report".into(), json!({ "input": input }), outcome)
        }
    })
}

fn run_check(check: &Check, g: &Global) -> Result<(String, Value, Outcome)> {
    let tol = g.tolerance;
    Ok(match check {
        Check::Ptolemy { input } => {
            let space = load_space(input, g.mode)?;
            let strategy = match g.sample {
                Some(count) => Strategy::Sampled { count, seed: g.seed },
                None => Strategy::Exhaustive,
            };
            let (passed, report) = on_space!(&space, s => {
                let r = check_ptolemy(s, strategy, tol);
                (r.passed, to_value(&r))
            });
            ("check ptolemy".into(), json!({ "input": input }), Outcome::json(passed, report))
        }
        Check::Mobius { first, second } => {
            let a = load_space(first, g.mode)?;
            let b = load_space(second, Some(a.mode()))?;
            if a.labels() != b.labels() {
                return Err("the two spaces must have the same labels in the same order".into());
            }
            let (passed, report) = match (&a, &b) {
                (AnySpace::Exact(a), AnySpace::Exact(b)) => {
                    let r = check_mobius_equivalence(a, b, tol)?;
                    (r.passed, to_value(&r))
                }
                (AnySpace::Float(a), AnySpace::Float(b)) => {
                    let r = check_mobius_equivalence(a, b, tol)?;
                    (r.passed, to_value(&r))
                }
                _ => unreachable!("both spaces are read in one mode"),
            };
            let args = json!({ "first": first, "second": second });
            ("check mobius".into(), args, Outcome::json(passed, report))
        }
        Check::Convexity { input } => {
            let space = load_space(input, g.mode)?;
            let report = on_space!(&space, s => check_convexity_all(s, tol));
            let doc = with_fields(to_value(&report), json!({ "space": space_name(&space) }));
            ("check convexity".into(), json!({ "input": input }), Outcome::json(report.passed, doc))
        }
        Check::Trace { config, s, t } => {
            let doc = load_json(config)?;
            let doc_mode = doc["space"]["mode"].as_str().and_then(|m| m.parse::<Mode>().ok());
            let (passed, report) = match g.mode.or(doc_mode).unwrap_or(Mode::Exact) {
                Mode::Exact => trace::<Exact>(&doc, s, t, g)?,
                Mode::Float => trace::<f64>(&doc, s, t, g)?,
            };
            let args = json!({ "config": config, "s": s, "t": t });
            ("check trace".into(), args, Outcome::json(passed, report))
        }
    })
}

fn trace<S: Scalar>(doc: &Value, s: &str, t: &str, g: &Global) -> Result<(bool, Value)> {
    let config: BigonConfig<S> = trace_config_from_json(doc, g.cap, g.tolerance)?;
    let report = bigon_trace(&config, &S::parse_entry(s)?, &S::parse_entry(t)?)?;
    Ok((report.passed, to_value(&report)))
}

fn geodesic<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    x: &str,
    y: &str,
    levels: usize,
    selector: &Selector,
    g: &Global,
) -> Result<Outcome> {
    let (xi, yi) = (space.index_of(x)?, space.index_of(y)?);
    let head = json!({ "check": "geodesic", "space": space.name(), "mode": S::MODE, "x": x, "y": y, "level": levels });
    Ok(match dyadic_chain(space, xi, yi, levels, selector, g.cap, g.tolerance) {
        Ok(chain) => {
            let body = json!({
                "passed": true,
                "isometric": true,
                "step": chain.step.to_json(),
                "labels": chain.labels(),
                "points": chain.points,
                "matrix": space_to_json(&chain.space)["matrix"],
            });
            Outcome::json(true, with_fields(head, body))
        }
        Err(CompletionError::ChainNotIsometric { i, j }) => {
            let body = json!({ "passed": false, "isometric": false, "witness": [i, j] });
            Outcome::json(false, with_fields(head, body))
        }
        Err(e) => return Err(e.into()),
    })
}

fn space_name(space: &AnySpace) -> String {
    on_space!(space, s => s.name().to_owned())
}

fn convert_mode(space: AnySpace, mode: Option<Mode>) -> Result<AnySpace> {
    Ok(match (space, mode) {
        (AnySpace::Exact(s), Some(Mode::Float)) => AnySpace::Float(s.convert()?),
        (AnySpace::Float(s), Some(Mode::Exact)) => AnySpace::Exact(s.convert()?),
        (space, _) => space,
    })
}

fn parse_selector(s: &str) -> Result<Selector> {
    if s == "canonical" {
        Ok(Selector::Canonical)
    } else if let Some(i) = s.strip_prefix("index=") {
        Ok(Selector::Index(i.parse().map_err(|_| format!("bad selector index `{i}`"))?))
    } else if let Some(tree) = s.strip_prefix("named=") {
        Ok(Selector::Named(PairTree::parse(tree)?))
    } else {
        Err(format!("selector must be `canonical`, `index=<i>` or `named=<label>`, got `{s}`").into())
    }
}

fn parse_norm(s: &str) -> Result<Norm> {
    Ok(match s {
        "euclidean" | "l2" => Norm::Euclidean,
        "max" | "inf" | "linf" => Norm::Max,
        _ => {
            if let Some(p) = s.strip_prefix("p=") {
                let p = match p {
                    "inf" | "infinity" => f64::INFINITY,
                    _ => p.parse().map_err(|_| format!("bad p-norm exponent `{p}`"))?,
                };
                Norm::p(p)?
            } else if let Some(file) = s.strip_prefix("polygon=") {
                let doc = load_json(Path::new(file))?;
                let vertices = match doc.get("vertices") {
                    Some(v) => v.clone(),
                    None => doc,
                };
                Norm::polygon(serde_json::from_value(vertices)?)?
            } else {
                return Err(format!("norm must be `euclidean`, `max`, `p=<v>` or `polygon=<file>`, got `{s}`").into());
            }
        }
    })
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| f64::parse_entry(x).map_err(Into::into))
        .collect()
}

fn parse_vector(s: &str) -> Result<[f64; 2]> {
    let parts = parse_list(s)?;
    <[f64; 2]>::try_from(parts).map_err(|_| format!("expected a vector `x,y`, got `{s}`").into())
}

//! Stand-in scorer process that answers from recorded responses.
//!
//! ```text
//! replay-scorer --protocol facet|pair [--responses FILE] [--default VALUE]
//!               [--mode normal|garbage|unknown-label|out-of-range|wrong-id|silent]
//! ```
//!
//! FILE is a JSON array of `{"request": {...}, "response": {...}}` records
//! without ids. Requests not in FILE get `--default` (a facet label, or a
//! similarity; identical pairs always score 1.0).

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, PartialEq)]
enum Protocol {
    Facet,
    Pair,
}

struct Options {
    protocol: Protocol,
    recorded: Vec<(Value, Value)>,
    default: String,
    mode: String,
}

fn parse_args() -> Result<Options, String> {
    let mut protocol = None;
    let mut recorded = Vec::new();
    let mut default = None;
    let mut mode = "normal".to_string();
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let value = args.next().ok_or_else(|| format!("{flag} needs a value"))?;
        match flag.as_str() {
            "--protocol" => {
                protocol = Some(match value.as_str() {
                    "facet" => Protocol::Facet,
                    "pair" => Protocol::Pair,
                    other => return Err(format!("unknown protocol `{other}`")),
                })
            }
            "--responses" => {
                let text = std::fs::read_to_string(&value).map_err(|e| format!("{value}: {e}"))?;
                let records: Vec<Value> = serde_json::from_str(&text).map_err(|e| format!("{value}: {e}"))?;
                for r in records {
                    recorded.push((r["request"].clone(), r["response"].clone()));
                }
            }
            "--default" => default = Some(value),
            "--mode" => mode = value,
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    let protocol = protocol.ok_or("--protocol is required")?;
    let default = default.unwrap_or_else(|| match protocol {
        Protocol::Facet => "other-quality".into(),
        Protocol::Pair => "0".into(),
    });
    Ok(Options {
        protocol,
        recorded,
        default,
        mode,
    })
}

fn answer(opts: &Options, request: &Map<String, Value>) -> Value {
    let mut body = request.clone();
    body.remove("id");
    let body = Value::Object(body);
    if let Some((_, r)) = opts.recorded.iter().find(|(q, _)| *q == body) {
        return r.clone();
    }
    match opts.protocol {
        Protocol::Facet => json!({ "label": opts.default }),
        Protocol::Pair => {
            let same = body["p1"] == body["p2"] && body["o1"] == body["o2"];
            let sim = if same { 1.0 } else { opts.default.parse::<f64>().unwrap_or(0.0) };
            json!({ "similarity": sim })
        }
    }
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("replay-scorer: {e}");
            return ExitCode::from(2);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        let Ok(Value::Object(request)) = serde_json::from_str::<Value>(&line) else {
            eprintln!("replay-scorer: ignoring non-object line");
            continue;
        };
        let id = request.get("id").and_then(Value::as_u64).unwrap_or(0);
        let reply = match opts.mode.as_str() {
            "silent" => continue,
            "garbage" => "this is not json".to_string(),
            "unknown-label" => json!({ "id": id, "label": "flavour" }).to_string(),
            "out-of-range" => json!({ "id": id, "similarity": 1.5 }).to_string(),
            "wrong-id" => json!({ "id": id + 1000, "label": "location", "similarity": 0.5 }).to_string(),
            _ => {
                let mut r = answer(&opts, &request);
                r["id"] = json!(id);
                r.to_string()
            }
        };
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}

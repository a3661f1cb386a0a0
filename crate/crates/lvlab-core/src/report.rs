//! Deterministic report serialization: JSON with sorted keys and floats
//! quantized to 12 significant digits, so identical runs are byte-identical.

use crate::large_values::{round_sig, MomentReport};
use serde_json::{json, Map, Value};

/// A float as a JSON number, quantized to 12 significant digits (non-finite
/// values become strings, which JSON numbers cannot carry).
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    let r = round_sig(x, 12);
    serde_json::Number::from_f64(r).map_or_else(|| Value::String(format!("{r}")), Value::Number)
}

pub fn complex(z: num_complex::Complex64) -> Value {
    json!({ "im": num(z.im), "re": num(z.re) })
}

pub fn moment_report(m: &MomentReport) -> Value {
    let mut params = Map::new();
    for (k, v) in &m.params {
        params.insert(k.clone(), num(*v));
    }
    json!({
        "kind": m.kind,
        "normalizer": num(m.normalizer),
        "params": Value::Object(params),
        "ratio": num(m.ratio),
        "raw": num(m.raw),
    })
}

/// Top-level report envelope. serde_json's default map is a BTreeMap, so
/// key order (and hence the byte stream) is canonical.
pub fn envelope(command: &str, params: Value, results: Value, alarms: &[(String, bool)]) -> Value {
    let alarm_list: Vec<Value> = alarms
        .iter()
        .map(|(name, fired)| json!({ "alarm": fired, "name": name }))
        .collect();
    json!({
        "alarms": alarm_list,
        "command": command,
        "params": params,
        "results": results,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

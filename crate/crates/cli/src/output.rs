use std::io::Write;
use std::path::Path;

use gaussmet::scenarios::ScenarioRow;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub enum Precision {
    Standard,
    Full,
}

impl Precision {
    fn digits(self) -> usize {
        match self {
            Precision::Standard => 12,
            Precision::Full => 17,
        }
    }
}

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(v: Value, digits: usize) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN), digits);
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round_value(x, digits)).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_value(x, digits))).collect()),
        other => other,
    }
}

pub fn json(v: Value, prec: Precision) -> String {
    serde_json::to_string_pretty(&round_value(v, prec.digits())).expect("json serialization")
}

pub fn csv(rows: &[ScenarioRow], prec: Precision) -> Result<String, CliError> {
    let d = prec.digits();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record([
        "probe_kind",
        "eta",
        "n_signal",
        "g_mean",
        "g_std",
        "qfi",
        "bound",
        "coherent_baseline",
        "homodyne_fi",
        "direct_fi",
    ])
    .map_err(io)?;
    for r in rows {
        let nums = [r.eta, r.n_signal, r.g_mean, r.g_std, r.qfi, r.bound, r.coherent_baseline, r.homodyne_fi, r.direct_fi];
        let mut rec = vec![r.probe_kind.clone()];
        rec.extend(nums.iter().map(|&x| round_sig(x, d).to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Write through a temporary sibling and rename, so a failed run never
/// leaves a partial file behind.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp).map_err(err)?;
        f.write_all(text.as_bytes()).map_err(err)?;
        if !text.ends_with('\n') {
            f.write_all(b"\n").map_err(err)?;
        }
    }
    std::fs::rename(&tmp, path).map_err(err)
}

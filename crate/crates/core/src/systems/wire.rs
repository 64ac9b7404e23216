//! JSON and string forms of [`SystemSpec`].
//!
//! JSON: `{"kind": "walsh", "params": {"count": 256}, "D": 1}`. `D` may be a
//! number or an exact string such as `"sqrt2"`; it defaults to the largest
//! member bound. Strings: `rademacher:8`, `walsh:256`, `trig-sine:1,3,9`,
//! `trig-cosine:1-128` (ranges allowed), with a `-normalized` suffix on the trig kinds for
//! amplitude `√2`.

use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::{StepFunction, SystemKind, SystemSpec};
use crate::error::{LacunaError, Result};
use crate::exact::{rat_to_f64, rational_serde::value_to_rational, QSqrt2};

fn bound_to_json(d: &QSqrt2) -> Value {
    if d.is_rational() {
        let x = rat_to_f64(&d.a);
        if crate::exact::rat_from_f64(x).map_or(false, |q| q == d.a) {
            return json!(x);
        }
    }
    Value::String(d.to_string())
}

fn bound_from_json(v: &Value) -> Result<QSqrt2> {
    match v {
        Value::String(_) => serde_json::from_value(v.clone()).map_err(|e| LacunaError::InvalidInput(format!("D: {e}"))),
        other => Ok(QSqrt2::rational(value_to_rational(other)?)),
    }
}

impl SystemSpec {
    pub fn to_json(&self) -> Value {
        let params = match self.kind() {
            SystemKind::Rademacher { count } | SystemKind::Walsh { count } => json!({ "count": count }),
            SystemKind::TrigSine { freqs, amplitude } | SystemKind::TrigCosine { freqs, amplitude } => {
                json!({ "freqs": freqs, "normalized": *amplitude == QSqrt2::sqrt2() })
            }
            SystemKind::CustomStep { functions } => json!({ "functions": functions }),
        };
        json!({ "kind": self.name(), "params": params, "D": bound_to_json(self.bound()) })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |msg: &str| LacunaError::InvalidInput(format!("system spec: {msg}"));
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| bad("missing string field \"kind\""))?;
        let params = v.get("params").cloned().unwrap_or(Value::Null);
        let count = || -> Result<usize> {
            params
                .get("count")
                .and_then(Value::as_u64)
                .map(|c| c as usize)
                .ok_or_else(|| bad("params.count must be a nonnegative integer"))
        };
        let freqs = || -> Result<(Vec<u64>, bool)> {
            let f = params.get("freqs").ok_or_else(|| bad("params.freqs is required"))?;
            let f: Vec<u64> =
                serde_json::from_value(f.clone()).map_err(|e| bad(&format!("params.freqs: {e}")))?;
            let normalized = params.get("normalized").and_then(Value::as_bool).unwrap_or(false);
            Ok((f, normalized))
        };
        let spec = match kind {
            "rademacher" => SystemSpec::rademacher(count()?),
            "walsh" => SystemSpec::walsh(count()?),
            "trig-sine" => {
                let (f, n) = freqs()?;
                SystemSpec::trig_sine(f, n)?
            }
            "trig-cosine" => {
                let (f, n) = freqs()?;
                SystemSpec::trig_cosine(f, n)?
            }
            "custom-step" => {
                let f = params.get("functions").ok_or_else(|| bad("params.functions is required"))?;
                let functions: Vec<StepFunction> =
                    serde_json::from_value(f.clone()).map_err(|e| bad(&format!("params.functions: {e}")))?;
                SystemSpec::custom(functions)?
            }
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        match v.get("D") {
            None | Some(Value::Null) => Ok(spec),
            Some(d) => spec.with_bound(bound_from_json(d)?),
        }
    }
}

impl Serialize for SystemSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        SystemSpec::from_json(&v).map_err(D::Error::custom)
    }
}

impl FromStr for SystemSpec {
    type Err = LacunaError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| LacunaError::InvalidInput(format!("system {s:?}: expected kind:arguments")))?;
        let count = || {
            arg.trim()
                .parse::<usize>()
                .map_err(|_| LacunaError::InvalidInput(format!("system {s:?}: count must be an integer")))
        };
        let freqs = || -> Result<Vec<u64>> {
            let bad = |x: &str| LacunaError::InvalidInput(format!("system {s:?}: bad frequency {x:?}"));
            let mut out = Vec::new();
            for part in arg.split(',').map(str::trim) {
                match part.split_once('-') {
                    Some((a, b)) => {
                        let a: u64 = a.trim().parse().map_err(|_| bad(part))?;
                        let b: u64 = b.trim().parse().map_err(|_| bad(part))?;
                        out.extend(a..=b);
                    }
                    None => out.push(part.parse().map_err(|_| bad(part))?),
                }
            }
            Ok(out)
        };
        match kind.trim() {
            "rademacher" => Ok(SystemSpec::rademacher(count()?)),
            "walsh" => Ok(SystemSpec::walsh(count()?)),
            "trig-sine" => SystemSpec::trig_sine(freqs()?, false),
            "trig-sine-normalized" => SystemSpec::trig_sine(freqs()?, true),
            "trig-cosine" => SystemSpec::trig_cosine(freqs()?, false),
            "trig-cosine-normalized" => SystemSpec::trig_cosine(freqs()?, true),
            other => Err(LacunaError::InvalidInput(format!("unknown system kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let w: SystemSpec = serde_json::from_str(r#"{"kind":"walsh","params":{"count":256},"D":1}"#).unwrap();
        assert_eq!(w, SystemSpec::walsh(256));
        let t = SystemSpec::trig_cosine(vec![1, 2, 3], true).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["D"], json!("sqrt2"));
        let back: SystemSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
        let c: SystemSpec = serde_json::from_str(
            r#"{"kind":"custom-step","params":{"functions":[{"breakpoints":["0","1/2","1"],"values":[1,-1]}]},"D":2}"#,
        )
        .unwrap();
        assert_eq!(c.bound(), &QSqrt2::rational(crate::exact::rat_int(2)));
        assert!(SystemSpec::from_json(&json!({"kind":"rademacher","params":{"count":2},"D":0.5})).is_err());
        assert!(SystemSpec::from_json(&json!({"kind":"haar","params":{}})).is_err());
    }

    #[test]
    fn string_forms() {
        assert_eq!("rademacher:8".parse::<SystemSpec>().unwrap(), SystemSpec::rademacher(8));
        assert_eq!(
            "trig-sine-normalized:1,3,9".parse::<SystemSpec>().unwrap(),
            SystemSpec::trig_sine(vec![1, 3, 9], true).unwrap()
        );
        assert!("trig-sine:3,1".parse::<SystemSpec>().is_err());
        assert_eq!("trig-cosine:1-4".parse::<SystemSpec>().unwrap().len(), 4);
        assert!("walsh".parse::<SystemSpec>().is_err());
    }
}

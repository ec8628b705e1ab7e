#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_besov-contract")
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn default_config() -> PathBuf {
    crate_dir().join("configs/default.toml")
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Runs the binary with `args`, with BESOV_CONTRACT_THREADS cleared.
pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env_remove("BESOV_CONTRACT_THREADS").output().unwrap()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

pub fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

pub fn schema(name: &str) -> Value {
    read_json(&crate_dir().join("schemas").join(format!("{name}.schema.json")))
}

/// Validates `v` against the keywords used by the shipped schemas.
pub fn schema_errors(schema: &Value, v: &Value) -> Vec<String> {
    let mut errs = Vec::new();
    check(schema, v, "$", &mut errs);
    errs
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        other => panic!("schema uses unsupported type {other}"),
    }
}

fn check(s: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    let known = [
        "$schema", "title", "type", "required", "properties", "additionalProperties", "items", "enum", "pattern",
        "minimum", "maximum",
    ];
    for k in s.as_object().unwrap().keys() {
        assert!(known.contains(&k.as_str()), "schema keyword {k} not supported by this checker");
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            errs.push(format!("{at}: {v} is not of type {t}"));
            return;
        }
    }
    if let Some(e) = s.get("enum") {
        if !e.as_array().unwrap().contains(v) {
            errs.push(format!("{at}: {v} not in {e}"));
        }
    }
    if let (Some(p), Some(x)) = (s.get("pattern"), v.as_str()) {
        if !regex::Regex::new(p.as_str().unwrap()).unwrap().is_match(x) {
            errs.push(format!("{at}: '{x}' does not match {p}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if s.get("minimum").and_then(Value::as_f64).is_some_and(|m| x < m) {
            errs.push(format!("{at}: {x} below minimum"));
        }
        if s.get("maximum").and_then(Value::as_f64).is_some_and(|m| x > m) {
            errs.push(format!("{at}: {x} above maximum"));
        }
    }
    if let Some(obj) = v.as_object() {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(r.as_str().unwrap()) {
                errs.push(format!("{at}: missing {r}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => check(sub, x, &format!("{at}.{k}"), errs),
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{at}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            check(items, x, &format!("{at}[{i}]"), errs);
        }
    }
}

/// Prints a line past the test harness's output capture.
pub fn say(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

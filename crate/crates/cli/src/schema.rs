//! JSON Schema of the report.

use serde_json::{json, Value};

use crate::run::SCHEMA_VERSION;

pub fn report_schema() -> Value {
    let number = json!({"type": "number"});
    let nullable_number = json!({"type": ["number", "null"]});
    let cluster = json!({
        "type": "object",
        "required": ["value", "multiplicity"],
        "properties": {"value": number, "multiplicity": {"type": "integer", "minimum": 1}},
    });
    let verdict_kind = json!({"enum": ["FULL_SO_N", "PRODUCT_SO_K_SO_NK", "SO_N_MINUS_1", "TRIVIAL", "UNDETERMINED"]});
    let check = json!({
        "type": "object",
        "required": ["residual", "tol"],
        "properties": {"residual": number, "residual_2h": number, "tol": number},
    });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "hyperholonomy report",
        "type": "object",
        "required": ["schema_version", "config", "points", "aggregate"],
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "config": {
                "type": "object",
                "description": "run configuration; feeding it back with --config reproduces the run",
                "required": ["command", "surface", "sampling", "h", "order", "tolerances", "output", "smoke"],
                "properties": {
                    "command": {"enum": ["classify", "verify"]},
                    "surface": {
                        "type": "object",
                        "required": ["kind", "n", "nu"],
                        "properties": {
                            "kind": {"enum": ["family", "expr"]},
                            "family": {"type": "string"},
                            "n": {"type": "integer", "minimum": 2},
                            "nu": number,
                            "components": {"type": "array", "items": {"type": "string"}},
                            "domain": {"type": "array", "items": {"type": "array", "items": number, "minItems": 2, "maxItems": 2}},
                        },
                    },
                    "sampling": {
                        "type": "object",
                        "required": ["grid", "points", "random", "seed"],
                        "properties": {
                            "grid": {"type": "integer", "minimum": 1},
                            "points": {"type": ["array", "null"], "items": {"type": "array", "items": number}},
                            "random": {"type": "integer", "minimum": 0},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                    },
                    "h": nullable_number,
                    "order": {"enum": [0, 1]},
                    "tolerances": {
                        "type": "object",
                        "required": ["eps_cluster", "tol_rel", "tol_gen"],
                        "properties": {"eps_cluster": number, "tol_rel": nullable_number, "tol_gen": nullable_number},
                    },
                    "output": {"enum": ["text", "json"]},
                    "smoke": {"type": "boolean"},
                },
            },
            "points": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["index", "u"],
                    "properties": {
                        "index": {"type": "integer"},
                        "u": {"type": "array", "items": number},
                        "eigenvalues": {"type": "array", "items": number},
                        "clusters": {"type": "array", "items": cluster},
                        "algebra_dim": {"type": "integer", "minimum": 0},
                        "blocks": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                        "verdict": {
                            "type": "object",
                            "required": ["kind", "k", "dim"],
                            "properties": {"kind": verdict_kind, "k": {"type": ["integer", "null"]}},
                        },
                        "codazzi": check,
                        "bianchi": check,
                        "gauss": check,
                        "loop": {"type": "object", "required": ["gap", "tol"]},
                        "pass": {"type": "boolean"},
                    },
                },
            },
            "aggregate": {
                "type": "object",
                "required": ["command", "sample_count", "tool_version", "exit_code"],
                "properties": {
                    "command": {"enum": ["classify", "verify"]},
                    "consensus": {
                        "type": "object",
                        "required": ["kind", "k"],
                        "properties": {"kind": verdict_kind, "k": {"type": ["integer", "null"]}},
                    },
                    "split": {"type": ["object", "null"]},
                    "expected": {"type": ["object", "null"]},
                    "residual_max": {"type": "object"},
                    "tolerances": {"type": "object"},
                    "all_pass": {"type": "boolean"},
                    "exit_code": {"enum": [0, 2]},
                    "sample_count": {"type": "integer", "minimum": 1},
                    "tool_version": {"type": "string"},
                },
            },
        },
    })
}

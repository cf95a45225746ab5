//! Request and response bodies of the stateless endpoints. The CLI calls
//! these directly so both front ends emit identical JSON.

use axum::http::StatusCode;
use fluidc_core::layout::{export_layout_svg, place, place_best_of, SaConfig};
use fluidc_core::patterns::{compute, ShapeRequest};
use fluidc_core::simulator::SimConfig;
use fluidc_core::verifier::{check_temporal, inspect, InspectOptions, TemporalSpec, TruthTableSpec, VerifyError};
use fluidc_core::{parse_circuit, Netlist};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;

/// Circuit given either as FC-HDL text or as a netlist JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netlist: Option<Value>,
}

impl CircuitSource {
    pub fn resolve(&self) -> Result<Netlist, ApiError> {
        match (&self.circuit, &self.netlist) {
            (Some(text), None) => Ok(parse_circuit(text)?),
            (None, Some(v)) => serde_json::from_value(v.clone())
                .map_err(|e| ApiError::bad_request(format!("invalid netlist: {e}"))),
            (Some(_), Some(_)) => Err(ApiError::bad_request("give either `circuit` or `netlist`, not both")),
            (None, None) => Err(ApiError::bad_request("missing `circuit` or `netlist`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileRequest {
    pub circuit: String,
}

pub fn compile(req: &CompileRequest) -> Result<Value, ApiError> {
    let netlist = parse_circuit(&req.circuit)?;
    Ok(compile_body(&netlist))
}

pub fn compile_body(netlist: &Netlist) -> Value {
    json!({"netlist": netlist, "diagnostics": netlist.diagnostics()})
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRequest {
    #[serde(flatten)]
    pub source: CircuitSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<TruthTableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<TemporalSpec>,
    #[serde(default)]
    pub options: InspectOptions,
}

fn verify_error(e: VerifyError) -> ApiError {
    match e {
        VerifyError::Sim(s) => s.into(),
        other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "spec_error", other.to_string()),
    }
}

/// Truth-table specs yield an inspection report; temporal specs yield
/// `{pass, findings}`.
pub fn verify(req: &VerifyRequest) -> Result<Value, ApiError> {
    let netlist = req.source.resolve()?;
    match (&req.spec, &req.temporal) {
        (Some(spec), None) => {
            spec.validate()
                .map_err(|m| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "spec_error", m))?;
            Ok(serde_json::to_value(inspect(&netlist, spec, &req.options)).unwrap())
        }
        (None, Some(temporal)) => {
            let findings = check_temporal(&netlist, temporal, &req.options.sim).map_err(verify_error)?;
            Ok(json!({"pass": findings.is_empty(), "findings": findings}))
        }
        _ => Err(ApiError::bad_request("give exactly one of `spec` or `temporal`")),
    }
}

/// Whether a verify response body counts as passing.
pub fn verify_passed(body: &Value) -> bool {
    body["pass"].as_bool().unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRequest {
    #[serde(flatten)]
    pub source: CircuitSource,
    #[serde(default)]
    pub sa_config: SaConfig,
    /// Independent seeded runs; the cheapest wins.
    #[serde(default = "one")]
    pub restarts: usize,
    /// Adds an `svg` field with the rendered placement.
    #[serde(default)]
    pub svg: bool,
}

fn one() -> usize {
    1
}

pub fn layout(req: &LayoutRequest) -> Result<Value, ApiError> {
    let netlist = req.source.resolve()?;
    if req.restarts == 0 {
        return Err(ApiError::bad_request("restarts must be at least 1"));
    }
    let result = if req.restarts == 1 {
        place(&netlist, &req.sa_config)?
    } else {
        place_best_of(&netlist, &req.sa_config, req.restarts)?
    };
    let mut body = serde_json::to_value(&result).unwrap();
    if req.svg {
        body["svg"] = export_layout_svg(&result, &netlist).into();
    }
    Ok(body)
}

pub fn pattern(req: &ShapeRequest) -> Result<Value, ApiError> {
    Ok(compute(req)?.to_json())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    #[serde(flatten)]
    pub source: CircuitSource,
    #[serde(default)]
    pub sim_config: SimConfig,
    /// Server advances the clock in real time at `dt` cadence.
    #[serde(default)]
    pub autorun: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRequest {
    pub net: String,
    pub v: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRequest {
    pub dt: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_must_be_exactly_one() {
        assert!(CircuitSource::default().resolve().is_err());
        let both = CircuitSource {
            circuit: Some("NOT(A; Q)".into()),
            netlist: Some(json!({"operators": []})),
        };
        assert_eq!(both.resolve().unwrap_err().status, StatusCode::BAD_REQUEST);
    }

    #[test]
    fn netlist_json_round_trips_through_source() {
        let body = compile(&CompileRequest {
            circuit: "NOT(A; C) AND(C, B; Output I)".into(),
        })
        .unwrap();
        let src = CircuitSource {
            circuit: None,
            netlist: Some(body["netlist"].clone()),
        };
        assert_eq!(src.resolve().unwrap().to_hdl(), "NOT(A; C) AND(C, B; Output I)");
    }

    #[test]
    fn syntax_errors_are_422_with_offset() {
        let e = compile(&CompileRequest {
            circuit: "NOT(A B; C)".into(),
        })
        .unwrap_err();
        assert_eq!(e.status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(e.detail["offset"], 6);
    }
}

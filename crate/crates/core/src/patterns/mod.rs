//! Heat-seal pattern dimensions for inflatable airbags and their flat
//! seal geometry. All lengths are millimetres, angles degrees.

mod svg;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::fchdl::JsonNumber;

pub use svg::pattern_svg;

/// Crease angle reached with no seal gap, degrees.
const CREASE_INTERCEPT_DEG: f64 = 51.50;
/// Crease angle lost per mm of gap on a 60 mm wide strip.
const CREASE_SLOPE: f64 = -0.65;
const CREASE_REF_WIDTH: f64 = 60.0;
/// Angle contributed by one bending crease.
const BEND_CREASE_DEG: f64 = 20.0;
const SPHERE_TABS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum PatternError {
    #[error("{field} must be a positive number of millimetres, got {value}")]
    NonPositiveDimension { field: String, value: f64 },
    #[error("angle {angle} is outside [{min}, {max}] degrees")]
    AngleOutOfRange { angle: f64, min: f64, max: f64 },
    #[error("sheet length leaves no end margin (j = {j:.3} mm)")]
    SheetTooShort { j: f64 },
    #[error("`{shape}` requires `{field}`")]
    MissingField { shape: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sphere,
    Cylinder,
    Box,
    Fold,
    Bend,
}

/// Wire form: `{"shape":"bend","length":60,"width":10,"angle":45}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRequest {
    pub shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SealRole {
    Outline,
    Seal,
    Tab,
}

/// One seal-pattern element in sheet coordinates (x along L, y along W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SealShape {
    pub role: SealRole,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl SealShape {
    fn rect(role: SealRole, x: f64, y: f64, w: f64, h: f64) -> Self {
        SealShape {
            role,
            points: vec![[x, y], [x + w, y], [x + w, y + h], [x, y + h]],
            closed: true,
        }
    }

    fn line(role: SealRole, from: [f64; 2], to: [f64; 2]) -> Self {
        SealShape {
            role,
            points: vec![from, to],
            closed: false,
        }
    }

    /// Midpoint of the bounding box.
    pub fn center(&self) -> [f64; 2] {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternResult {
    pub kind: ShapeKind,
    /// Sheet length.
    pub length: f64,
    /// Sheet width; for a cylinder, the end-cap dimension `pi * r`.
    pub width: f64,
    pub height: Option<f64>,
    /// Tab spacing (sphere) or crease seal gap (fold, bend).
    pub d: Option<f64>,
    /// Seal inset from each long edge.
    pub a: Option<f64>,
    /// Crease pitch.
    pub pitch: Option<f64>,
    /// End margin before the first fold crease.
    pub margin: Option<f64>,
    pub creases: Option<u32>,
    /// Angle per crease.
    pub theta: Option<f64>,
    pub seal_geometry: Vec<SealShape>,
}

impl PatternResult {
    fn plain(kind: ShapeKind, length: f64, width: f64) -> Self {
        PatternResult {
            kind,
            length,
            width,
            height: None,
            d: None,
            a: None,
            pitch: None,
            margin: None,
            creases: None,
            theta: None,
            seal_geometry: Vec::new(),
        }
    }

    /// Seal shapes with the given role.
    pub fn shapes(&self, role: SealRole) -> impl Iterator<Item = &SealShape> {
        self.seal_geometry.iter().filter(move |s| s.role == role)
    }

    /// Response JSON with values rounded to 0.01 mm and the SVG inline.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let num = |v: f64| serde_json::to_value(JsonNumber((v * 100.0).round() / 100.0)).unwrap();
        m.insert("shape".into(), serde_json::to_value(self.kind).unwrap());
        let cylinder = self.kind == ShapeKind::Cylinder;
        m.insert("L".into(), num(self.length));
        m.insert(if cylinder { "R" } else { "W" }.into(), num(self.width));
        for (key, v) in [
            ("H", self.height),
            ("a", self.a),
            ("d", self.d),
            ("D", self.pitch),
            ("j", self.margin),
            ("theta", self.theta),
        ] {
            if let Some(v) = v {
                m.insert(key.into(), num(v));
            }
        }
        if let Some(n) = self.creases {
            m.insert("n".into(), n.into());
        }
        m.insert("svg".into(), pattern_svg(self).into());
        Value::Object(m)
    }
}

fn positive(field: &str, v: f64) -> Result<f64, PatternError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(PatternError::NonPositiveDimension {
            field: field.into(),
            value: v,
        })
    }
}

fn crease_gap(theta: f64, width: f64) -> f64 {
    (theta - CREASE_INTERCEPT_DEG) / (CREASE_SLOPE * CREASE_REF_WIDTH / width)
}

/// Two opposing tabs of depth `a` and width `d` centred at `x`.
fn crease_pair(x: f64, width: f64, a: f64, d: f64) -> [SealShape; 2] {
    [
        SealShape::rect(SealRole::Seal, x - d / 2.0, 0.0, d, a),
        SealShape::rect(SealRole::Seal, x - d / 2.0, width - a, d, a),
    ]
}

fn outline(length: f64, width: f64) -> SealShape {
    SealShape::rect(SealRole::Outline, 0.0, 0.0, length, width)
}

pub fn calc_sphere(radius: f64) -> Result<PatternResult, PatternError> {
    let r = positive("radius", radius)?;
    let length = PI * r * 2.0;
    let width = PI * r;
    let d = length / SPHERE_TABS as f64;
    let mut out = PatternResult::plain(ShapeKind::Sphere, length, width);
    out.d = Some(d);
    out.seal_geometry.push(outline(length, width));
    for i in 0..SPHERE_TABS {
        let x = (i as f64 + 0.5) * d;
        out.seal_geometry
            .push(SealShape::line(SealRole::Tab, [x, 0.0], [x, width / 4.0]));
        out.seal_geometry
            .push(SealShape::line(SealRole::Tab, [x, width], [x, width * 0.75]));
    }
    Ok(out)
}

pub fn calc_cylinder(radius: f64, height: f64) -> Result<PatternResult, PatternError> {
    let r = positive("radius", radius)?;
    let h = positive("height", height)?;
    let length = PI * r * 2.0;
    let mut out = PatternResult::plain(ShapeKind::Cylinder, length, PI * r);
    out.height = Some(h);
    out.seal_geometry.push(outline(length, h));
    Ok(out)
}

pub fn calc_box(length: f64, width: f64, height: f64) -> Result<PatternResult, PatternError> {
    let l = positive("length", length)?;
    let w = positive("width", width)?;
    let h = positive("height", height)?;
    let mut out = PatternResult::plain(ShapeKind::Box, l, w);
    out.height = Some(h);
    out.seal_geometry.push(outline(l, w));
    Ok(out)
}

pub fn calc_fold(length: f64, width: f64, angle: f64) -> Result<PatternResult, PatternError> {
    let l = positive("length", length)?;
    let w = positive("width", width)?;
    if !(angle > 0.0 && angle <= 180.0) {
        return Err(PatternError::AngleOutOfRange {
            angle,
            min: 0.0,
            max: 180.0,
        });
    }
    let a = w / 3.0;
    let pitch = w;
    let n: u32 = match angle {
        x if x <= 45.0 => 1,
        x if x <= 90.0 => 2,
        x if x <= 135.0 => 3,
        _ => 4,
    };
    let theta = angle / n as f64;
    let d = crease_gap(theta, w);
    let j = (l - (n - 1) as f64 * pitch) / 2.0;
    if j <= 0.0 {
        return Err(PatternError::SheetTooShort { j });
    }
    let mut out = PatternResult::plain(ShapeKind::Fold, l, w);
    out.a = Some(a);
    out.d = Some(d);
    out.pitch = Some(pitch);
    out.margin = Some(j);
    out.creases = Some(n);
    out.theta = Some(theta);
    out.seal_geometry.push(outline(l, w));
    for i in 0..n {
        out.seal_geometry
            .extend(crease_pair(j + i as f64 * pitch, w, a, d));
    }
    Ok(out)
}

pub fn calc_bend(length: f64, width: f64, angle: f64) -> Result<PatternResult, PatternError> {
    let l = positive("length", length)?;
    let w = positive("width", width)?;
    if !(angle >= BEND_CREASE_DEG && angle <= 180.0) {
        return Err(PatternError::AngleOutOfRange {
            angle,
            min: BEND_CREASE_DEG,
            max: 180.0,
        });
    }
    let n = (angle / BEND_CREASE_DEG) as u32;
    let pitch = l / (n + 1) as f64;
    let d = crease_gap(BEND_CREASE_DEG, w);
    let a = w / 3.0;
    let mut out = PatternResult::plain(ShapeKind::Bend, l, w);
    out.a = Some(a);
    out.d = Some(d);
    out.pitch = Some(pitch);
    out.creases = Some(n);
    out.theta = Some(BEND_CREASE_DEG);
    out.seal_geometry.push(outline(l, w));
    for i in 1..=n {
        out.seal_geometry
            .extend(crease_pair(i as f64 * pitch, w, a, d));
    }
    Ok(out)
}

/// Dispatches a request to the matching calculator.
pub fn compute(req: &ShapeRequest) -> Result<PatternResult, PatternError> {
    let need = |field: &str, v: Option<f64>| {
        v.ok_or_else(|| PatternError::MissingField {
            shape: serde_json::to_value(req.shape)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            field: field.into(),
        })
    };
    match req.shape {
        ShapeKind::Sphere => calc_sphere(need("radius", req.radius)?),
        ShapeKind::Cylinder => calc_cylinder(need("radius", req.radius)?, need("height", req.height)?),
        ShapeKind::Box => calc_box(
            need("length", req.length)?,
            need("width", req.width)?,
            need("height", req.height)?,
        ),
        ShapeKind::Fold => calc_fold(
            need("length", req.length)?,
            need("width", req.width)?,
            need("angle", req.angle)?,
        ),
        ShapeKind::Bend => calc_bend(
            need("length", req.length)?,
            need("width", req.width)?,
            need("angle", req.angle)?,
        ),
    }
}

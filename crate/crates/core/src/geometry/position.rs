use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GeometryError, Orientation, Vector3};
use crate::units::{self, Unit};

/// Linear velocity in m/s and angular velocity in rad/s, both expressed in
/// the object's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub linear: Vector3,
    pub angular: Vector3,
}

impl Velocity {
    pub fn new(linear: Vector3, angular: Vector3) -> Self {
        Self { linear, angular }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionKind {
    Absolute2D,
    Absolute3D,
    /// Vector holds (latitude °, longitude °, elevation).
    Geographical,
}

impl PositionKind {
    pub fn type_name(self) -> &'static str {
        match self {
            PositionKind::Absolute2D => "Absolute2DPosition",
            PositionKind::Absolute3D => "Absolute3DPosition",
            PositionKind::Geographical => "GeographicalPosition",
        }
    }

    pub fn from_type_name(name: &str) -> Option<Self> {
        match name {
            "Absolute2DPosition" => Some(PositionKind::Absolute2D),
            "Absolute3DPosition" => Some(PositionKind::Absolute3D),
            "GeographicalPosition" => Some(PositionKind::Geographical),
            _ => None,
        }
    }
}

/// A timestamped position in some reference space.
///
/// `accuracy` is optional on the wire; [`AbsolutePosition::accuracy`] reads
/// an absent value as 1 `accuracy_unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsolutePosition {
    pub kind: PositionKind,
    pub vector: Vector3,
    /// Microseconds since the Unix epoch.
    pub timestamp: i64,
    pub accuracy: Option<f64>,
    pub accuracy_unit: Unit,
    pub unit: Unit,
    pub orientation: Orientation,
    pub velocity: Velocity,
    pub reference_space_uid: Option<String>,
}

impl AbsolutePosition {
    pub const DEFAULT_ACCURACY: f64 = 1.0;

    fn with_kind(kind: PositionKind, vector: Vector3, unit: Unit) -> Self {
        Self {
            kind,
            vector,
            timestamp: 0,
            accuracy: None,
            accuracy_unit: units::meter(),
            unit,
            orientation: Orientation::IDENTITY,
            velocity: Velocity::default(),
            reference_space_uid: None,
        }
    }

    pub fn new_2d(x: f64, y: f64, unit: Unit) -> Self {
        Self::with_kind(PositionKind::Absolute2D, Vector3::new(x, y, 0.0), unit)
    }

    pub fn new_3d(x: f64, y: f64, z: f64, unit: Unit) -> Self {
        Self::with_kind(PositionKind::Absolute3D, Vector3::new(x, y, z), unit)
    }

    /// Latitude and longitude in degrees, elevation in meters.
    pub fn geographical(latitude: f64, longitude: f64, elevation: f64) -> Self {
        Self::with_kind(
            PositionKind::Geographical,
            Vector3::new(latitude, longitude, elevation),
            units::meter(),
        )
    }

    pub fn with_timestamp(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn with_accuracy(mut self, accuracy: f64, unit: Unit) -> Self {
        self.accuracy = Some(accuracy);
        self.accuracy_unit = unit;
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_velocity(mut self, velocity: Velocity) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn to_vector3(&self) -> Vector3 {
        self.vector
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy.unwrap_or(Self::DEFAULT_ACCURACY)
    }

    /// Accuracy expressed in `unit`, when both are lengths.
    pub fn accuracy_in(&self, unit: &Unit) -> Result<f64, GeometryError> {
        Ok(self.accuracy_unit.convert_to(self.accuracy(), unit)?)
    }

    /// Vector expressed in `unit`.
    pub fn vector_in(&self, unit: &Unit) -> Result<Vector3, GeometryError> {
        if self.kind == PositionKind::Geographical {
            return Err(GeometryError::Geographical);
        }
        let f = self.unit.convert_to(1.0, unit)?;
        Ok(self.vector * f)
    }

    /// Copy with the vector converted to `unit`.
    pub fn converted(&self, unit: &Unit) -> Result<AbsolutePosition, GeometryError> {
        let mut out = self.clone();
        out.vector = self.vector_in(unit)?;
        out.unit = unit.clone();
        Ok(out)
    }

    pub fn is_geographical(&self) -> bool {
        self.kind == PositionKind::Geographical
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct AbsoluteWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    longitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elevation: Option<f64>,
    timestamp: i64,
    #[serde(default)]
    velocity: Velocity,
    #[serde(default)]
    orientation: Orientation,
    unit: Unit,
    #[serde(rename = "referenceSpaceUID", skip_serializing_if = "Option::is_none")]
    reference_space_uid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    accuracy_unit: Unit,
    #[serde(rename = "__type")]
    type_name: String,
}

impl Serialize for AbsolutePosition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let v = self.vector;
        let (mut x, mut y, mut z) = (Some(v.x), Some(v.y), None);
        let (mut latitude, mut longitude, mut elevation) = (None, None, None);
        match self.kind {
            PositionKind::Absolute2D => {}
            PositionKind::Absolute3D => z = Some(v.z),
            PositionKind::Geographical => {
                (x, y) = (None, None);
                latitude = Some(v.x);
                longitude = Some(v.y);
                elevation = Some(v.z);
            }
        }
        AbsoluteWire {
            x,
            y,
            z,
            latitude,
            longitude,
            elevation,
            timestamp: self.timestamp,
            velocity: self.velocity,
            orientation: self.orientation,
            unit: self.unit.clone(),
            reference_space_uid: self.reference_space_uid.clone(),
            accuracy: self.accuracy,
            accuracy_unit: self.accuracy_unit.clone(),
            type_name: self.kind.type_name().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AbsolutePosition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = AbsoluteWire::deserialize(deserializer)?;
        let kind = PositionKind::from_type_name(&w.type_name)
            .ok_or_else(|| D::Error::custom(format!("unknown position type `{}`", w.type_name)))?;
        let vector = match kind {
            PositionKind::Geographical => Vector3::new(
                w.latitude.unwrap_or(0.0),
                w.longitude.unwrap_or(0.0),
                w.elevation.unwrap_or(0.0),
            ),
            _ => Vector3::new(w.x.unwrap_or(0.0), w.y.unwrap_or(0.0), w.z.unwrap_or(0.0)),
        };
        Ok(AbsolutePosition {
            kind,
            vector,
            timestamp: w.timestamp,
            accuracy: w.accuracy,
            accuracy_unit: w.accuracy_unit,
            unit: w.unit,
            orientation: w.orientation,
            velocity: w.velocity,
            reference_space_uid: w.reference_space_uid,
        })
    }
}

/// Value a relative position is measured in.
#[derive(Debug, Clone, PartialEq)]
pub enum RelativeValue {
    Distance(f64, Unit),
    Angle(f64, Unit),
    Velocity(f64, Unit),
}

impl RelativeValue {
    pub fn tag(&self) -> &'static str {
        match self {
            RelativeValue::Distance(..) => "RelativeDistance",
            RelativeValue::Angle(..) => "RelativeAngle",
            RelativeValue::Velocity(..) => "RelativeVelocity",
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            RelativeValue::Distance(v, _)
            | RelativeValue::Angle(v, _)
            | RelativeValue::Velocity(v, _) => *v,
        }
    }

    pub fn unit(&self) -> &Unit {
        match self {
            RelativeValue::Distance(_, u)
            | RelativeValue::Angle(_, u)
            | RelativeValue::Velocity(_, u) => u,
        }
    }

    fn required_base(tag: &str) -> Option<&'static str> {
        match tag {
            "RelativeDistance" => Some("length"),
            "RelativeAngle" => Some("angle"),
            "RelativeVelocity" => Some("linear velocity"),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let base = Self::required_base(self.tag()).unwrap_or_default();
        Ok(self.unit().require_base(base)?)
    }
}

/// A distance, angle or speed measured relative to another object.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativePosition {
    pub reference_object_uid: String,
    pub value: RelativeValue,
    pub timestamp: i64,
    pub accuracy: Option<f64>,
    pub accuracy_unit: Unit,
}

impl RelativePosition {
    pub fn new(reference_object_uid: impl Into<String>, value: RelativeValue) -> Self {
        Self {
            reference_object_uid: reference_object_uid.into(),
            value,
            timestamp: 0,
            accuracy: None,
            accuracy_unit: units::meter(),
        }
    }

    pub fn distance(reference: impl Into<String>, distance: f64, unit: Unit) -> Self {
        Self::new(reference, RelativeValue::Distance(distance, unit))
    }

    pub fn angle(reference: impl Into<String>, angle: f64, unit: Unit) -> Self {
        Self::new(reference, RelativeValue::Angle(angle, unit))
    }

    pub fn velocity(reference: impl Into<String>, speed: f64, unit: Unit) -> Self {
        Self::new(reference, RelativeValue::Velocity(speed, unit))
    }

    pub fn with_timestamp(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }

    pub fn with_accuracy(mut self, accuracy: f64, unit: Unit) -> Self {
        self.accuracy = Some(accuracy);
        self.accuracy_unit = unit;
        self
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RelativeWire {
    #[serde(rename = "referenceObjectUID")]
    reference_object_uid: String,
    reference_value: f64,
    unit: Unit,
    timestamp: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    accuracy_unit: Unit,
    #[serde(rename = "__type")]
    type_name: String,
}

impl Serialize for RelativePosition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RelativeWire {
            reference_object_uid: self.reference_object_uid.clone(),
            reference_value: self.value.value(),
            unit: self.value.unit().clone(),
            timestamp: self.timestamp,
            accuracy: self.accuracy,
            accuracy_unit: self.accuracy_unit.clone(),
            type_name: self.value.tag().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RelativePosition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = RelativeWire::deserialize(deserializer)?;
        let value = match w.type_name.as_str() {
            "RelativeDistance" => RelativeValue::Distance(w.reference_value, w.unit),
            "RelativeAngle" => RelativeValue::Angle(w.reference_value, w.unit),
            "RelativeVelocity" => RelativeValue::Velocity(w.reference_value, w.unit),
            other => {
                return Err(D::Error::custom(format!(
                    "unknown relative position type `{other}`"
                )))
            }
        };
        value.validate().map_err(D::Error::custom)?;
        Ok(RelativePosition {
            reference_object_uid: w.reference_object_uid,
            value,
            timestamp: w.timestamp,
            accuracy: w.accuracy,
            accuracy_unit: w.accuracy_unit,
        })
    }
}

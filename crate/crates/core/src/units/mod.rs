//! Unit algebra.
//!
//! Units are registered in a [`UnitRegistry`] under a unique name and any
//! number of aliases. A unit either is the canonical unit of its dimension
//! (its `base_name`, e.g. `"time"`) or carries a definition chain that ends at
//! that canonical unit; the chain is collapsed into a single factor when the
//! unit is registered. Derived units are products of powered units.
//!
//! Serialized units are just their name. Deserialization resolves that name
//! against the process-wide registry returned by [`global`].

mod prefix;
mod registry;

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use prefix::UnitPrefix;
pub use registry::{builtin_registry, global, register_global, UnitRegistry};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("unit name or alias `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown unit `{0}`")]
    Unknown(String),
    #[error("unit `{unit}` does not support prefixes")]
    UnsupportedPrefix { unit: String },
    #[error("cannot convert between `{from}` ({from_base}) and `{to}` ({to_base})")]
    Incompatible {
        from: String,
        from_base: String,
        to: String,
        to_base: String,
    },
    #[error("unit `{unit}` has no definition chain to the canonical `{base}` unit")]
    MissingDefinition { unit: String, base: String },
    #[error("invalid derived unit `{unit}`: {reason}")]
    InvalidDerived { unit: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefixSupport {
    #[default]
    None,
    Decimal,
}

/// `1 <unit> = magnitude <target>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub magnitude: f64,
    pub unit: String,
}

/// Description of a simple unit, handed to [`UnitRegistry::define`].
#[derive(Debug, Clone)]
pub struct UnitSpec {
    pub name: String,
    pub base_name: String,
    pub aliases: Vec<String>,
    pub prefixes: PrefixSupport,
    pub definitions: Vec<Definition>,
}

impl UnitSpec {
    pub fn new(name: impl Into<String>, base_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            base_name: base_name.into(),
            aliases: Vec::new(),
            prefixes: PrefixSupport::None,
            definitions: Vec::new(),
        }
    }

    pub fn aliases<I, S>(mut self, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.aliases.extend(aliases.into_iter().map(Into::into));
        self
    }

    pub fn prefixes(mut self, support: PrefixSupport) -> Self {
        self.prefixes = support;
        self
    }

    pub fn definition(mut self, magnitude: f64, unit: impl Into<String>) -> Self {
        self.definitions.push(Definition {
            magnitude,
            unit: unit.into(),
        });
        self
    }
}

/// Description of a derived unit, handed to [`UnitRegistry::define_derived`].
#[derive(Debug, Clone)]
pub struct DerivedUnitSpec {
    pub name: String,
    pub base_name: String,
    pub aliases: Vec<String>,
    pub components: Vec<(Unit, i32)>,
}

impl DerivedUnitSpec {
    pub fn new(name: impl Into<String>, base_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            base_name: base_name.into(),
            aliases: Vec::new(),
            components: Vec::new(),
        }
    }

    pub fn aliases<I, S>(mut self, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.aliases.extend(aliases.into_iter().map(Into::into));
        self
    }

    pub fn add_unit(mut self, unit: Unit, power: i32) -> Self {
        self.components.push((unit, power));
        self
    }

    /// Builds the unit without registering it anywhere.
    pub fn build(self) -> Result<Unit, UnitError> {
        registry::build_derived(self)
    }
}

#[derive(Debug)]
pub(crate) struct UnitDef {
    pub(crate) name: String,
    pub(crate) base_name: String,
    pub(crate) aliases: Vec<String>,
    pub(crate) prefixes: PrefixSupport,
    pub(crate) definitions: Vec<Definition>,
    /// Multiplier taking a value in this unit to the canonical unit of `base_name`.
    pub(crate) factor: f64,
    pub(crate) components: Vec<(Unit, i32)>,
}

/// Shared handle to a registered unit. Two handles are equal when they name
/// the same unit.
#[derive(Clone)]
pub struct Unit(pub(crate) Arc<UnitDef>);

impl Unit {
    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn base_name(&self) -> &str {
        &self.0.base_name
    }

    pub fn aliases(&self) -> &[String] {
        &self.0.aliases
    }

    pub fn prefix_support(&self) -> PrefixSupport {
        self.0.prefixes
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.0.definitions
    }

    /// Factor to the canonical unit of this unit's dimension.
    pub fn factor(&self) -> f64 {
        self.0.factor
    }

    pub fn is_derived(&self) -> bool {
        !self.0.components.is_empty()
    }

    pub fn components(&self) -> &[(Unit, i32)] {
        &self.0.components
    }

    /// Returns this unit scaled by `prefix`, e.g. `second.specifier(MILLI)`.
    pub fn specifier(&self, prefix: UnitPrefix) -> Result<Unit, UnitError> {
        if prefix.is_identity() {
            return Ok(self.clone());
        }
        if self.0.prefixes != PrefixSupport::Decimal {
            return Err(UnitError::UnsupportedPrefix {
                unit: self.name().to_string(),
            });
        }
        let mut aliases = Vec::new();
        for alias in &self.0.aliases {
            aliases.push(format!("{}{}", prefix.symbol, alias));
            aliases.push(format!("{}{}", prefix.name, alias));
        }
        aliases.dedup();
        Ok(Unit(Arc::new(UnitDef {
            name: format!("{}{}", prefix.name, self.0.name),
            base_name: self.0.base_name.clone(),
            aliases,
            prefixes: PrefixSupport::None,
            definitions: vec![Definition {
                magnitude: prefix.magnitude,
                unit: self.0.name.clone(),
            }],
            factor: prefix.magnitude * self.0.factor,
            components: Vec::new(),
        })))
    }

    /// Unregistered variant of a derived unit with components swapped for
    /// `replacements`, matched by dimension.
    pub fn swap(&self, replacements: &[Unit], name: impl Into<String>) -> Result<Unit, UnitError> {
        registry::swap_spec(self, replacements, name.into(), &[])?.build()
    }

    /// Converts `value` expressed in `self` into `target`.
    pub fn convert_to(&self, value: f64, target: &Unit) -> Result<f64, UnitError> {
        convert(value, self, target)
    }

    pub fn require_base(&self, base: &str) -> Result<(), UnitError> {
        if self.base_name() == base {
            Ok(())
        } else {
            Err(UnitError::Incompatible {
                from: self.name().to_string(),
                from_base: self.base_name().to_string(),
                to: base.to_string(),
                to_base: base.to_string(),
            })
        }
    }
}

impl PartialEq for Unit {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.name == other.0.name
    }
}

impl fmt::Debug for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Unit({})", self.0.name)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name)
    }
}

/// Converts `value` from one unit to another of the same dimension.
pub fn convert(value: f64, from: &Unit, to: &Unit) -> Result<f64, UnitError> {
    if from.base_name() != to.base_name() {
        return Err(UnitError::Incompatible {
            from: from.name().to_string(),
            from_base: from.base_name().to_string(),
            to: to.name().to_string(),
            to_base: to.base_name().to_string(),
        });
    }
    if from == to {
        return Ok(value);
    }
    Ok(value * from.factor() / to.factor())
}

#[derive(Serialize, Deserialize)]
struct UnitWire {
    name: String,
}

impl Serialize for Unit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        UnitWire {
            name: self.name().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Unit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = UnitWire::deserialize(deserializer)?;
        lookup(&wire.name).ok_or_else(|| D::Error::custom(UnitError::Unknown(wire.name)))
    }
}

/// Resolves a unit name or alias against the process-wide registry.
pub fn lookup(name: &str) -> Option<Unit> {
    global().lookup(name)
}

macro_rules! builtin_unit {
    ($($fn_name:ident => $unit:literal),* $(,)?) => {
        $(
            pub fn $fn_name() -> Unit {
                builtin_registry()
                    .lookup($unit)
                    .expect(concat!("built-in unit ", $unit))
            }
        )*
    };
}

builtin_unit! {
    meter => "meter",
    centimeter => "centimeter",
    millimeter => "millimeter",
    kilometer => "kilometer",
    second => "second",
    millisecond => "millisecond",
    microsecond => "microsecond",
    minute => "minute",
    hour => "hour",
    radian => "radian",
    degree => "degree",
    radian_per_second => "radian per second",
    degree_per_second => "degree per second",
    degree_per_minute => "degree per minute",
    meter_per_second => "meter per second",
    centimeter_per_second => "centimeter per second",
    decibel_milliwatt => "decibel-milliwatt",
}

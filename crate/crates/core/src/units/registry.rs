use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock, RwLockReadGuard};

use super::{
    Definition, DerivedUnitSpec, PrefixSupport, Unit, UnitDef, UnitError, UnitPrefix, UnitSpec,
};

/// A set of units addressable by name and alias.
#[derive(Debug, Default, Clone)]
pub struct UnitRegistry {
    units: Vec<Unit>,
    by_alias: HashMap<String, usize>,
    canonical: HashMap<String, usize>,
}

impl UnitRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a simple unit. The first unit of a dimension without
    /// definitions becomes that dimension's canonical unit.
    pub fn define(&mut self, spec: UnitSpec) -> Result<Unit, UnitError> {
        self.check_free(&spec.name, &spec.aliases)?;
        let factor = if spec.definitions.is_empty() {
            if self.canonical.contains_key(&spec.base_name) {
                return Err(UnitError::MissingDefinition {
                    unit: spec.name.clone(),
                    base: spec.base_name.clone(),
                });
            }
            1.0
        } else {
            self.resolve_chain(&spec.name, &spec.base_name, &spec.definitions)?
        };
        let canonical = spec.definitions.is_empty();
        let unit = Unit(Arc::new(UnitDef {
            name: spec.name,
            base_name: spec.base_name,
            aliases: spec.aliases,
            prefixes: spec.prefixes,
            definitions: spec.definitions,
            factor,
            components: Vec::new(),
        }));
        self.insert(unit.clone(), canonical);
        Ok(unit)
    }

    /// Registers a derived unit composed of powered component units.
    pub fn define_derived(&mut self, spec: DerivedUnitSpec) -> Result<Unit, UnitError> {
        let unit = build_derived(spec)?;
        self.check_free(unit.name(), unit.aliases())?;
        let canonical = !self.canonical.contains_key(unit.base_name());
        self.insert(unit.clone(), canonical);
        Ok(unit)
    }

    /// Builds and registers a variant of `derived` in which every component
    /// sharing a dimension with one of `replacements` is swapped for it.
    pub fn swap(
        &mut self,
        derived: &Unit,
        replacements: &[Unit],
        name: impl Into<String>,
        aliases: &[&str],
    ) -> Result<Unit, UnitError> {
        let spec = swap_spec(derived, replacements, name.into(), aliases)?;
        self.define_derived(spec)
    }

    /// Resolves a name, alias, or prefixed alias.
    pub fn lookup(&self, name: &str) -> Option<Unit> {
        if let Some(&idx) = self.by_alias.get(name) {
            return Some(self.units[idx].clone());
        }
        let mut prefixes: Vec<&UnitPrefix> = UnitPrefix::decimal().iter().collect();
        prefixes.sort_by_key(|p| std::cmp::Reverse(p.name.len().max(p.symbol.len())));
        for prefix in prefixes {
            for head in [prefix.name, prefix.symbol] {
                let Some(rest) = name.strip_prefix(head) else {
                    continue;
                };
                if rest.is_empty() {
                    continue;
                }
                if let Some(&idx) = self.by_alias.get(rest) {
                    let unit = &self.units[idx];
                    if unit.prefix_support() == PrefixSupport::Decimal {
                        return unit.specifier(*prefix).ok();
                    }
                }
            }
        }
        None
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    /// Canonical unit of a dimension.
    pub fn canonical(&self, base_name: &str) -> Option<Unit> {
        self.canonical
            .get(base_name)
            .map(|&i| self.units[i].clone())
    }

    fn check_free(&self, name: &str, aliases: &[String]) -> Result<(), UnitError> {
        for key in std::iter::once(name).chain(aliases.iter().map(String::as_str)) {
            if self.by_alias.contains_key(key) {
                return Err(UnitError::Duplicate(key.to_string()));
            }
        }
        Ok(())
    }

    fn insert(&mut self, unit: Unit, canonical: bool) {
        let idx = self.units.len();
        self.by_alias.insert(unit.name().to_string(), idx);
        for alias in unit.aliases() {
            self.by_alias.entry(alias.clone()).or_insert(idx);
        }
        if canonical {
            self.canonical
                .entry(unit.base_name().to_string())
                .or_insert(idx);
        }
        self.units.push(unit);
    }

    fn resolve_chain(
        &self,
        name: &str,
        base: &str,
        definitions: &[Definition],
    ) -> Result<f64, UnitError> {
        // Any one definition whose target is known suffices; the first wins.
        for def in definitions {
            if let Some(target) = self.lookup(&def.unit) {
                if target.base_name() != base {
                    return Err(UnitError::Incompatible {
                        from: name.to_string(),
                        from_base: base.to_string(),
                        to: target.name().to_string(),
                        to_base: target.base_name().to_string(),
                    });
                }
                return Ok(def.magnitude * target.factor());
            }
        }
        Err(UnitError::MissingDefinition {
            unit: name.to_string(),
            base: base.to_string(),
        })
    }
}

pub(super) fn build_derived(spec: DerivedUnitSpec) -> Result<Unit, UnitError> {
    if spec.components.is_empty() {
        return Err(UnitError::InvalidDerived {
            unit: spec.name,
            reason: "no components".into(),
        });
    }
    if spec.components.iter().any(|(_, p)| *p == 0) {
        return Err(UnitError::InvalidDerived {
            unit: spec.name,
            reason: "zero power".into(),
        });
    }
    let factor = spec
        .components
        .iter()
        .map(|(u, p)| u.factor().powi(*p))
        .product();
    Ok(Unit(Arc::new(UnitDef {
        name: spec.name,
        base_name: spec.base_name,
        aliases: spec.aliases,
        prefixes: PrefixSupport::None,
        definitions: Vec::new(),
        factor,
        components: spec.components,
    })))
}

pub(super) fn swap_spec(
    derived: &Unit,
    replacements: &[Unit],
    name: String,
    aliases: &[&str],
) -> Result<DerivedUnitSpec, UnitError> {
    if !derived.is_derived() {
        return Err(UnitError::InvalidDerived {
            unit: derived.name().to_string(),
            reason: "not a derived unit".into(),
        });
    }
    let mut components = derived.components().to_vec();
    for replacement in replacements {
        let mut hits = components
            .iter_mut()
            .filter(|(u, _)| u.base_name() == replacement.base_name());
        match (hits.next(), hits.next()) {
            (Some(slot), None) => slot.0 = replacement.clone(),
            (None, _) => {
                return Err(UnitError::InvalidDerived {
                    unit: derived.name().to_string(),
                    reason: format!(
                        "no component with dimension `{}` to swap for `{}`",
                        replacement.base_name(),
                        replacement.name()
                    ),
                })
            }
            (Some(_), Some(_)) => {
                return Err(UnitError::InvalidDerived {
                    unit: derived.name().to_string(),
                    reason: format!(
                        "several components with dimension `{}`",
                        replacement.base_name()
                    ),
                })
            }
        }
    }
    Ok(DerivedUnitSpec {
        name,
        base_name: derived.base_name().to_string(),
        aliases: aliases.iter().map(|a| a.to_string()).collect(),
        components,
    })
}

fn builtin() -> UnitRegistry {
    let mut r = UnitRegistry::new();
    let meter = r
        .define(
            UnitSpec::new("meter", "length")
                .aliases(["m", "meters", "metre", "metres"])
                .prefixes(PrefixSupport::Decimal),
        )
        .expect("meter");
    r.define(
        UnitSpec::new("inch", "length")
            .aliases(["in", "inches"])
            .definition(0.0254, "m"),
    )
    .expect("inch");
    r.define(
        UnitSpec::new("foot", "length")
            .aliases(["ft", "feet"])
            .definition(12.0, "in"),
    )
    .expect("foot");
    let second = r
        .define(
            UnitSpec::new("second", "time")
                .aliases(["s", "sec", "seconds"])
                .prefixes(PrefixSupport::Decimal),
        )
        .expect("second");
    let minute = r
        .define(
            UnitSpec::new("minute", "time")
                .aliases(["min", "minutes"])
                .definition(60.0, "s"),
        )
        .expect("minute");
    r.define(
        UnitSpec::new("hour", "time")
            .aliases(["h", "hours"])
            .definition(60.0, "min"),
    )
    .expect("hour");
    let radian = r
        .define(
            UnitSpec::new("radian", "angle")
                .aliases(["rad", "radians"])
                .prefixes(PrefixSupport::Decimal),
        )
        .expect("radian");
    let degree = r
        .define(
            UnitSpec::new("degree", "angle")
                .aliases(["deg", "degrees"])
                .definition(std::f64::consts::PI / 180.0, "rad"),
        )
        .expect("degree");
    r.define(UnitSpec::new("decibel-milliwatt", "power-level").aliases(["dBm"]))
        .expect("dBm");

    let rad_s = r
        .define_derived(
            DerivedUnitSpec::new("radian per second", "angular velocity")
                .aliases(["rad/s"])
                .add_unit(radian, 1)
                .add_unit(second.clone(), -1),
        )
        .expect("rad/s");
    r.swap(
        &rad_s,
        std::slice::from_ref(&degree),
        "degree per second",
        &["deg/s"],
    )
    .expect("deg/s");
    r.swap(&rad_s, &[degree, minute], "degree per minute", &["deg/min"])
        .expect("deg/min");
    let m_s = r
        .define_derived(
            DerivedUnitSpec::new("meter per second", "linear velocity")
                .aliases(["m/s"])
                .add_unit(meter, 1)
                .add_unit(second, -1),
        )
        .expect("m/s");
    let centimeter = r.lookup("centimeter").expect("centimeter");
    r.swap(&m_s, &[centimeter], "centimeter per second", &["cm/s"])
        .expect("cm/s");
    r
}

/// The read-only registry of units shipped with the crate.
pub fn builtin_registry() -> &'static UnitRegistry {
    static BUILTIN: OnceLock<UnitRegistry> = OnceLock::new();
    BUILTIN.get_or_init(builtin)
}

fn global_lock() -> &'static RwLock<UnitRegistry> {
    static GLOBAL: OnceLock<RwLock<UnitRegistry>> = OnceLock::new();
    GLOBAL.get_or_init(|| RwLock::new(builtin_registry().clone()))
}

/// The process-wide registry used for deserialization.
pub fn global() -> RwLockReadGuard<'static, UnitRegistry> {
    global_lock().read().unwrap_or_else(|e| e.into_inner())
}

/// Registers an application unit in the process-wide registry.
pub fn register_global(spec: UnitSpec) -> Result<Unit, UnitError> {
    global_lock()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .define(spec)
}
